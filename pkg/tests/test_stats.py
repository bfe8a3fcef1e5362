import json
import math

import numpy as np
import pytest

from camscore.errors import DegenerateDataError, SchemaError
from camscore.stats import (
    CaptionPair,
    CorrelationReport,
    JudgedCaption,
    PairCounts,
    brute_force_pair_counts,
    correlation_report,
    kendall_tau_b,
    kendall_tau_c,
    load_judgments,
    pair_counts,
    pairwise_accuracy,
)


def _pairs(x, y):
    return np.column_stack([np.asarray(x, float), np.asarray(y, float)])


class TestPairCounts:
    def test_validation_requires_full_partition(self):
        with pytest.raises(ValueError, match="sum"):
            PairCounts(concordant=1, discordant=1, ties_x=0, ties_y=0, ties_both=0, n=4)

    def test_tied_example(self):
        c = pair_counts(_pairs([1, 2, 2, 3], [1, 2, 3, 3]))
        assert c == PairCounts(
            concordant=4, discordant=0, ties_x=1, ties_y=1, ties_both=0, n=4
        )

    def test_perfect_agreement(self):
        c = pair_counts(_pairs([1, 2, 3, 4], [10, 20, 30, 40]))
        assert c.concordant == 6
        assert c.discordant == 0

    def test_perfect_reversal(self):
        c = pair_counts(_pairs([1, 2, 3], [3, 2, 1]))
        assert c.discordant == 3

    def test_brute_force_equivalence_fuzz(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 40))
            x = rng.integers(0, 6, n).astype(float)
            y = rng.integers(0, 6, n).astype(float)
            assert pair_counts(_pairs(x, y)) == brute_force_pair_counts(_pairs(x, y))

    def test_single_observation_rejected(self):
        with pytest.raises(DegenerateDataError):
            pair_counts(_pairs([1.0], [1.0]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            pair_counts(_pairs([1.0, float("nan")], [1.0, 2.0]))


class TestTau:
    def test_tau_b_tied_example(self):
        got = kendall_tau_b(_pairs([1, 2, 2, 3], [1, 2, 3, 3]))
        assert got == pytest.approx(0.8, abs=1e-12)

    def test_tau_c_tied_example(self):
        got = kendall_tau_c(_pairs([1, 2, 2, 3], [1, 2, 3, 3]))
        assert got == pytest.approx(0.75, abs=1e-12)

    def test_tau_b_perfect(self):
        assert kendall_tau_b(_pairs([1, 2, 3], [4, 5, 6])) == pytest.approx(1.0)
        assert kendall_tau_b(_pairs([1, 2, 3], [6, 5, 4])) == pytest.approx(-1.0)

    def test_tau_b_degenerate_axis(self):
        with pytest.raises(DegenerateDataError, match="tied"):
            kendall_tau_b(_pairs([1, 1, 1], [1, 2, 3]))

    def test_tau_c_degenerate_axis(self):
        with pytest.raises(DegenerateDataError, match="distinct"):
            kendall_tau_c(_pairs([1, 1, 1], [1, 2, 3]))

    def test_matches_scipy(self, rng):
        scipy_stats = pytest.importorskip("scipy.stats")
        for _ in range(50):
            n = int(rng.integers(3, 80))
            x = rng.integers(0, 8, n).astype(float)
            y = rng.integers(0, 8, n).astype(float)
            if np.unique(x).size < 2 or np.unique(y).size < 2:
                continue
            want = scipy_stats.kendalltau(x, y, variant="b").statistic
            assert kendall_tau_b(_pairs(x, y)) == pytest.approx(want, abs=1e-12)
            want_c = scipy_stats.kendalltau(x, y, variant="c").statistic
            assert kendall_tau_c(_pairs(x, y)) == pytest.approx(want_c, abs=1e-12)

    def test_correlation_report_consistent(self):
        pairs = _pairs([1, 2, 2, 3], [1, 2, 3, 3])
        rep = correlation_report(pairs)
        assert rep.tau_b == pytest.approx(0.8, abs=1e-12)
        assert rep.tau_c == pytest.approx(0.75, abs=1e-12)
        assert rep.n == 4
        assert rep.concordant + rep.discordant + rep.ties_x + rep.ties_y + rep.ties_both == 6


class TestReportDict:
    def test_omits_absent_fields(self):
        rep = CorrelationReport(n=5)
        d = rep.as_dict()
        assert d == {"n": 5}

    def test_full_report(self):
        rep = correlation_report(_pairs([1, 2, 3], [1, 2, 3]))
        d = rep.as_dict(dataset="expert")
        assert d["dataset"] == "expert"
        assert set(d) >= {"n", "tau_b", "tau_c", "concordant", "discordant"}

    def test_accuracy_only(self):
        rep = CorrelationReport(n=3, accuracy={"HC": 1.0, "mean": 1.0})
        d = rep.as_dict()
        assert "tau_b" not in d
        assert d["accuracy"] == {"HC": 1.0, "mean": 1.0}


def _cp(sa, sb, winner, cat="HC", i="p0"):
    return CaptionPair(
        instance_id=i, score_a=sa, score_b=sb, human_winner=winner, category=cat
    )


class TestPairwiseAccuracy:
    def test_all_correct(self):
        rows = [_cp(0.9, 0.1, "A"), _cp(0.2, 0.7, "B")]
        rep = pairwise_accuracy(rows)
        assert rep.accuracy["HC"] == 1.0
        assert rep.accuracy["mean"] == 1.0

    def test_metric_tie_scores_half(self):
        rep = pairwise_accuracy([_cp(0.5, 0.5, "A")])
        assert rep.accuracy["HC"] == 0.5

    def test_categories_reported_only_when_present(self):
        rep = pairwise_accuracy([_cp(0.9, 0.1, "A", cat="MM")])
        assert set(rep.accuracy) == {"MM", "mean"}

    def test_mean_weighted_by_rows(self):
        rows = [
            _cp(0.9, 0.1, "A", cat="HC"),   # correct
            _cp(0.9, 0.1, "B", cat="HC"),   # wrong
            _cp(0.9, 0.1, "A", cat="MM"),   # correct
        ]
        rep = pairwise_accuracy(rows)
        assert rep.accuracy["HC"] == 0.5
        assert rep.accuracy["MM"] == 1.0
        assert rep.accuracy["mean"] == pytest.approx(2.0 / 3.0)

    def test_empty_rejected(self):
        with pytest.raises(DegenerateDataError):
            pairwise_accuracy([])


class TestJudgedCaptionValidation:
    def test_human_score_bounds(self):
        with pytest.raises(ValueError):
            JudgedCaption(
                instance_id="a",
                metric_score=0.1,
                human_score=1.2,
                raw_human_score=5.0,
                dataset_tag="expert",
            )

    def test_winner_values(self):
        with pytest.raises(ValueError):
            _cp(0.1, 0.2, "C")

    def test_category_values(self):
        with pytest.raises(ValueError):
            _cp(0.1, 0.2, "A", cat="XX")


def _write_jsonl(path, rows):
    with path.open("w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


class TestLoaders:
    def test_expert_normalizes_scale(self, tmp_path):
        p = tmp_path / "j.jsonl"
        _write_jsonl(
            p,
            [
                {
                    "id": "a",
                    "image": "i1",
                    "caption": "c1",
                    "human_scores": [1, 2, 3],
                    "scale": [1, 4],
                }
            ],
        )
        rows = load_judgments(p, "expert")
        assert rows[0].raw_human_score == pytest.approx(2.0)
        assert rows[0].human_score == pytest.approx(1.0 / 3.0)
        assert rows[0].dataset_tag == "expert"

    def test_crowdflower_proportion(self, tmp_path):
        p = tmp_path / "j.jsonl"
        _write_jsonl(
            p, [{"id": "a", "image": "i", "caption": "c", "yes": 3, "total": 4}]
        )
        rows = load_judgments(p, "crowdflower")
        assert rows[0].human_score == pytest.approx(0.75)

    def test_pairs_format(self, tmp_path):
        p = tmp_path / "j.jsonl"
        _write_jsonl(
            p,
            [
                {
                    "id": "q",
                    "image": "i",
                    "caption_a": "x",
                    "caption_b": "y",
                    "winner": "B",
                    "category": "HM",
                }
            ],
        )
        rows = load_judgments(p, "pairs")
        assert rows[0].human_winner == "B"
        assert rows[0].category == "HM"

    def test_blank_lines_skipped(self, tmp_path):
        p = tmp_path / "j.jsonl"
        p.write_text(
            '\n{"id":"a","image":"i","caption":"c","yes":1,"total":2}\n\n'
        )
        assert len(load_judgments(p, "crowdflower")) == 1

    def test_unknown_format(self, tmp_path):
        p = tmp_path / "j.jsonl"
        p.write_text("")
        with pytest.raises(ValueError, match="format"):
            load_judgments(p, "likert")

    @pytest.mark.parametrize(
        "row,complaint",
        [
            ({"image": "i", "caption": "c", "human_scores": [1], "scale": [1, 4]}, "id"),
            ({"id": "a", "caption": "c", "human_scores": [1], "scale": [1, 4]}, "image"),
            ({"id": "a", "image": "i", "caption": "c", "human_scores": [], "scale": [1, 4]}, "human_scores"),
            ({"id": "a", "image": "i", "caption": "c", "human_scores": [5], "scale": [1, 4]}, "outside"),
            ({"id": "a", "image": "i", "caption": "c", "human_scores": [2], "scale": [4, 1]}, "scale"),
        ],
    )
    def test_expert_schema_errors_cite_line(self, tmp_path, row, complaint):
        p = tmp_path / "j.jsonl"
        _write_jsonl(p, [row])
        with pytest.raises(SchemaError, match="line 1") as exc:
            load_judgments(p, "expert")
        assert complaint in str(exc.value)

    def test_crowdflower_rejects_bad_counts(self, tmp_path):
        p = tmp_path / "j.jsonl"
        _write_jsonl(p, [{"id": "a", "image": "i", "caption": "c", "yes": 5, "total": 4}])
        with pytest.raises(SchemaError, match="line 1"):
            load_judgments(p, "crowdflower")

    def test_pairs_rejects_bad_winner(self, tmp_path):
        p = tmp_path / "j.jsonl"
        _write_jsonl(
            p,
            [
                {
                    "id": "q",
                    "image": "i",
                    "caption_a": "x",
                    "caption_b": "y",
                    "winner": "tie",
                    "category": "HC",
                }
            ],
        )
        with pytest.raises(SchemaError, match="winner"):
            load_judgments(p, "pairs")

    def test_invalid_json_cites_line(self, tmp_path):
        p = tmp_path / "j.jsonl"
        good = {
            "id": "q",
            "image": "i",
            "caption_a": "x",
            "caption_b": "y",
            "winner": "A",
            "category": "HC",
        }
        p.write_text(json.dumps(good) + "\n{broken\n")
        with pytest.raises(SchemaError, match="line 2"):
            load_judgments(p, "pairs")


class TestNumericalStability:
    def test_large_n_counts_fit(self, rng):
        # n = 2000: pair counts near 2e6; exactness must hold throughout
        n = 2000
        x = rng.integers(0, 50, n).astype(float)
        y = (x + rng.integers(0, 10, n)).astype(float)
        c = pair_counts(np.column_stack([x, y]))
        assert c.concordant + c.discordant + c.ties_x + c.ties_y + c.ties_both == n * (
            n - 1
        ) // 2
        tb = kendall_tau_b(np.column_stack([x, y]))
        assert -1.0 <= tb <= 1.0
        assert tb > 0.5  # strongly positively associated by construction

    def test_two_points(self):
        assert kendall_tau_b(_pairs([1, 2], [3, 9])) == 1.0
