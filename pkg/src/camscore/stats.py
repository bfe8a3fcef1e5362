"""Rank statistics against human judgments, plus the judgment-file loaders.

Kendall tau_b and tau_c are computed from one shared pair-counting pass:
an O(n log n) merge-sort inversion counter, with an O(n^2) brute-force
counter kept alongside as the test oracle. Pairwise ranking accuracy
follows the caption-pair protocol (exact metric ties get half credit, so
a constant metric scores exactly chance).

Judgment files are JSON Lines; see load_judgments for the four row
schemas. Raw human scores are normalized to [0,1] by the declared scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError, SchemaError

PAIR_CATEGORIES = ("HC", "HI", "HM", "MM")

JUDGMENT_FORMATS = ("expert", "crowdflower", "composite", "pairs")


@dataclass(frozen=True)
class JudgedCaption:
    """One caption with a metric score and a normalized human score."""

    instance_id: str
    metric_score: float
    human_score: float
    raw_human_score: float
    dataset_tag: str

    def __post_init__(self):
        if not (np.isfinite(self.metric_score) and np.isfinite(self.human_score)):
            raise ValueError(f"non-finite score for {self.instance_id!r}")
        if not 0.0 <= self.human_score <= 1.0:
            raise ValueError(
                f"human score out of [0,1] for {self.instance_id!r}: {self.human_score}"
            )


@dataclass(frozen=True)
class CaptionPair:
    """Two captions for one image plus the human-preferred side."""

    instance_id: str
    score_a: float
    score_b: float
    human_winner: str
    category: str

    def __post_init__(self):
        if not (np.isfinite(self.score_a) and np.isfinite(self.score_b)):
            raise ValueError(f"non-finite score for {self.instance_id!r}")
        if self.human_winner not in ("A", "B"):
            raise ValueError(f"winner must be 'A' or 'B': {self.human_winner!r}")
        if self.category not in PAIR_CATEGORIES:
            raise ValueError(f"unknown pair category: {self.category!r}")


@dataclass(frozen=True)
class PairCounts:
    """Concordance bookkeeping over all n(n-1)/2 observation pairs."""

    concordant: int
    discordant: int
    ties_x: int
    ties_y: int
    ties_both: int
    n: int

    def __post_init__(self):
        total = self.n * (self.n - 1) // 2
        parts = (
            self.concordant + self.discordant + self.ties_x + self.ties_y + self.ties_both
        )
        if parts != total:
            raise ValueError(f"pair counts sum to {parts}, expected {total}")


@dataclass(frozen=True)
class CorrelationReport:
    n: int
    concordant: int = 0
    discordant: int = 0
    ties_x: int = 0
    ties_y: int = 0
    ties_both: int = 0
    tau_b: float | None = None
    tau_c: float | None = None
    accuracy: dict[str, float] | None = None

    def as_dict(self, dataset: str | None = None) -> dict:
        """JSON-ready report; absent statistics are omitted, not nulled."""
        out: dict = {}
        if dataset is not None:
            out["dataset"] = dataset
        out["n"] = self.n
        if self.tau_b is not None:
            out["tau_b"] = self.tau_b
            out["concordant"] = self.concordant
            out["discordant"] = self.discordant
            out["ties_x"] = self.ties_x
            out["ties_y"] = self.ties_y
            out["ties_both"] = self.ties_both
        if self.tau_c is not None:
            out["tau_c"] = self.tau_c
        if self.accuracy is not None:
            out["accuracy"] = dict(self.accuracy)
        return out


def _as_xy(pairs) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected (n,2) observation pairs, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise DegenerateDataError(f"need at least 2 observations, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("observations must be finite")
    return arr[:, 0], arr[:, 1]


def _run_pair_count(change: np.ndarray) -> int:
    """Tied pairs given change[i] = (element i+1 differs from element i)."""
    n = change.size + 1
    idx = np.flatnonzero(change)
    starts = np.concatenate(([0], idx + 1))
    ends = np.concatenate((idx + 1, [n]))
    runs = (ends - starts).astype(np.int64)
    return int(np.sum(runs * (runs - 1) // 2))


def _count_inversions(a: np.ndarray) -> int:
    """Strict inversions (i < j, a[i] > a[j]) via bottom-up merge counting."""
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.size
    total = 0
    width = 1
    while width < n:
        for lo in range(0, n - width, 2 * width):
            mid = lo + width
            hi = min(lo + 2 * width, n)
            left = a[lo:mid]
            right = a[mid:hi]
            # elements of left strictly greater than each right element
            pos = np.searchsorted(left, right, side="right")
            total += int((left.size - pos).sum())
            a[lo:hi] = np.sort(a[lo:hi], kind="mergesort")
        width *= 2
    return total


def pair_counts(pairs) -> PairCounts:
    """O(n log n) concordant/discordant/tie counts."""
    x, y = _as_xy(pairs)
    n = x.size
    total = n * (n - 1) // 2
    order = np.lexsort((y, x))
    xs = x[order]
    ys = y[order]

    x_change = xs[1:] != xs[:-1]
    tied_x_all = _run_pair_count(x_change)  # includes pairs also tied in y
    y_sorted = np.sort(y)
    tied_y_all = _run_pair_count(y_sorted[1:] != y_sorted[:-1])
    tied_both = _run_pair_count(x_change | (ys[1:] != ys[:-1]))

    # in (x, then y) order, discordant pairs are exactly the strict y-inversions
    discordant = _count_inversions(ys)
    concordant = total - tied_x_all - tied_y_all + tied_both - discordant
    return PairCounts(
        concordant=concordant,
        discordant=discordant,
        ties_x=tied_x_all - tied_both,
        ties_y=tied_y_all - tied_both,
        ties_both=tied_both,
        n=n,
    )


def brute_force_pair_counts(pairs) -> PairCounts:
    """O(n^2) oracle: classify every pair explicitly."""
    x, y = _as_xy(pairs)
    n = x.size
    iu, ju = np.triu_indices(n, k=1)
    sx = np.sign(x[ju] - x[iu])
    sy = np.sign(y[ju] - y[iu])
    return PairCounts(
        concordant=int(np.count_nonzero(sx * sy > 0)),
        discordant=int(np.count_nonzero(sx * sy < 0)),
        ties_x=int(np.count_nonzero((sx == 0) & (sy != 0))),
        ties_y=int(np.count_nonzero((sx != 0) & (sy == 0))),
        ties_both=int(np.count_nonzero((sx == 0) & (sy == 0))),
        n=n,
    )


def _tau_b_from_counts(c: PairCounts) -> float:
    p, q = c.concordant, c.discordant
    denom_x = p + q + c.ties_x
    denom_y = p + q + c.ties_y
    if denom_x == 0 or denom_y == 0:
        raise DegenerateDataError("tau_b undefined: all values tied on one axis")
    # split the sqrt so counts near 2^53 keep full precision
    return (p - q) / (np.sqrt(float(denom_x)) * np.sqrt(float(denom_y)))


def kendall_tau_b(pairs) -> float:
    """Tau with tie correction in both variables, in [-1, 1]."""
    return float(_tau_b_from_counts(pair_counts(pairs)))


def kendall_tau_c(pairs) -> float:
    """Stuart's tau for tables with unequal numbers of distinct values."""
    x, y = _as_xy(pairs)
    q = min(np.unique(x).size, np.unique(y).size)
    if q < 2:
        raise DegenerateDataError("tau_c undefined: fewer than 2 distinct values on an axis")
    c = pair_counts(pairs)
    n = c.n
    return float(2.0 * q * (c.concordant - c.discordant) / (float(n) ** 2 * (q - 1)))


def correlation_report(pairs) -> CorrelationReport:
    """Both tau statistics plus the underlying counts, for report output."""
    x, y = _as_xy(pairs)
    c = pair_counts(pairs)
    tau_b = _tau_b_from_counts(c)
    q = min(np.unique(x).size, np.unique(y).size)
    if q < 2:
        raise DegenerateDataError("tau_c undefined: fewer than 2 distinct values on an axis")
    tau_c = 2.0 * q * (c.concordant - c.discordant) / (float(c.n) ** 2 * (q - 1))
    return CorrelationReport(
        n=c.n,
        concordant=c.concordant,
        discordant=c.discordant,
        ties_x=c.ties_x,
        ties_y=c.ties_y,
        ties_both=c.ties_both,
        tau_b=float(tau_b),
        tau_c=float(tau_c),
    )


def pairwise_accuracy(rows) -> CorrelationReport:
    """Fraction of pairs where the metric's higher-scored side won.

    Exact metric ties earn 0.5. Per-category accuracies cover categories
    present in the data; "mean" is the row-weighted overall fraction, so
    unequal category sizes weigh accordingly.
    """
    rows = list(rows)
    if not rows:
        raise DegenerateDataError("no caption pairs to score")
    credits: dict[str, list[float]] = {}
    overall = []
    for r in rows:
        if r.score_a == r.score_b:
            credit = 0.5
        else:
            preferred = "A" if r.score_a > r.score_b else "B"
            credit = 1.0 if preferred == r.human_winner else 0.0
        credits.setdefault(r.category, []).append(credit)
        overall.append(credit)
    accuracy = {cat: float(np.mean(credits[cat])) for cat in PAIR_CATEGORIES if cat in credits}
    accuracy["mean"] = float(np.mean(overall))
    return CorrelationReport(n=len(rows), accuracy=accuracy)


def _field(doc: dict, key: str, where: str):
    if key not in doc:
        raise SchemaError(f"{where}: missing field {key!r}")
    return doc[key]


def _scored_row(doc: dict, where: str, tag: str) -> JudgedCaption:
    row_id = str(_field(doc, "id", where))
    _field(doc, "image", where)
    _field(doc, "caption", where)
    scale = _field(doc, "scale", where)
    if (
        not isinstance(scale, (list, tuple))
        or len(scale) != 2
        or not all(isinstance(v, (int, float)) for v in scale)
        or not scale[0] < scale[1]
    ):
        raise SchemaError(f"{where}: scale must be [lo, hi] with lo < hi, got {scale!r}")
    lo, hi = float(scale[0]), float(scale[1])
    scores = _field(doc, "human_scores", where)
    if not isinstance(scores, list) or not scores:
        raise SchemaError(f"{where}: human_scores must be a nonempty list")
    for v in scores:
        if not isinstance(v, (int, float)) or not np.isfinite(v):
            raise SchemaError(f"{where}: non-numeric human score {v!r}")
        if not lo <= v <= hi:
            raise SchemaError(f"{where}: score {v} outside declared scale [{lo}, {hi}]")
    raw = float(np.mean(scores))  # annotators averaged before normalization
    return JudgedCaption(
        instance_id=row_id,
        metric_score=0.0,
        human_score=(raw - lo) / (hi - lo),
        raw_human_score=raw,
        dataset_tag=tag,
    )


def _proportion_row(doc: dict, where: str, tag: str) -> JudgedCaption:
    row_id = str(_field(doc, "id", where))
    _field(doc, "image", where)
    _field(doc, "caption", where)
    yes = _field(doc, "yes", where)
    total = _field(doc, "total", where)
    if not isinstance(yes, int) or not isinstance(total, int):
        raise SchemaError(f"{where}: yes/total must be integers")
    if total < 1 or not 0 <= yes <= total:
        raise SchemaError(f"{where}: need 0 <= yes <= total with total >= 1")
    prop = yes / total
    return JudgedCaption(
        instance_id=row_id,
        metric_score=0.0,
        human_score=prop,
        raw_human_score=prop,
        dataset_tag=tag,
    )


def _pair_row(doc: dict, where: str) -> CaptionPair:
    row_id = str(_field(doc, "id", where))
    _field(doc, "image", where)
    _field(doc, "caption_a", where)
    _field(doc, "caption_b", where)
    winner = _field(doc, "winner", where)
    category = _field(doc, "category", where)
    if winner not in ("A", "B"):
        raise SchemaError(f"{where}: winner must be 'A' or 'B', got {winner!r}")
    if category not in PAIR_CATEGORIES:
        raise SchemaError(f"{where}: unknown category {category!r}")
    return CaptionPair(
        instance_id=row_id, score_a=0.0, score_b=0.0, human_winner=winner, category=category
    )


def load_judgments(path, format: str):
    """Parse a JSON Lines judgment file into JudgedCaption or CaptionPair rows.

    Formats and row schemas:
      expert / composite: {"id","image","caption","human_scores":[..],"scale":[lo,hi]}
      crowdflower:        {"id","image","caption","yes":k,"total":t}
      pairs:              {"id","image","caption_a","caption_b","winner","category"}

    Metric scores are filled in later by joining against a scores file;
    loaders leave them at 0.0. Schema problems report the line number.
    """
    if format not in JUDGMENT_FORMATS:
        raise ValueError(f"unknown judgment format: {format!r}")
    path = Path(path)
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path} line {lineno}"
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{where}: invalid JSON: {exc}") from exc
            if not isinstance(doc, dict):
                raise SchemaError(f"{where}: row must be a JSON object")
            if format in ("expert", "composite"):
                rows.append(_scored_row(doc, where, format))
            elif format == "crowdflower":
                rows.append(_proportion_row(doc, where, format))
            else:
                rows.append(_pair_row(doc, where))
    return rows
