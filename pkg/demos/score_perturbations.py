"""Walkthrough: how each scene perturbation moves its targeted sub-score.

Renders a few random scenes, applies every perturbation kind, and prints
the sub-score deltas against the faithful re-render. No model weights
needed; everything is synthetic and deterministic.

Run:  python3 demos/score_perturbations.py
"""

import numpy as np

from camscore import ScoreConfig, compute_subscores
from camscore.synthetic import PERTURBATION_KINDS, perturb_scene, random_scene, render_scene

cfg = ScoreConfig(canonical_size=64)

print("scene  perturbation    l_pix   l_sem   l_obj  l_ciou   l_dep")
for seed in (1, 2, 3):
    spec = random_scene(seed)
    ori = render_scene(spec)
    faithful = render_scene(spec)
    base = compute_subscores(ori, faithful, cfg)
    row = base.as_vector()
    print(f"{seed:>5}  {'(faithful)':<14}" + "".join(f"{v:8.3f}" for v in row))
    for kind in PERTURBATION_KINDS:
        gen = render_scene(perturb_scene(spec, kind, seed=seed * 100))
        subs = compute_subscores(ori, gen, cfg)
        row = subs.as_vector()
        print(f"{seed:>5}  {kind:<14}" + "".join(f"{v:8.3f}" for v in row))
    print()

print("faithful rows are exactly (0, 1, 0, 0, 0): the metric is noise-free at identity.")
print("each perturbation moves its own channel: drop/add -> l_obj, move -> l_ciou,")
print("recolor -> l_pix, reorder_depth -> l_dep (and usually ripples into others).")
