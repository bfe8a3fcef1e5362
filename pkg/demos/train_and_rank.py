"""Walkthrough: train the aggregator on synthetic preference data, then use
the single CAMScore value to rank faithful vs corrupted renderings.

Builds (sub-scores, target) rows from scenes where the faithful rendering
gets a high target and perturbed ones a low target, fits the MLP, and
checks preference accuracy on held-out scenes.

Run:  python3 demos/train_and_rank.py
"""

import numpy as np

from camscore import ScoreConfig, compute_subscores
from camscore.aggregator import TrainConfig, forward, train
from camscore.synthetic import PERTURBATION_KINDS, perturb_scene, random_scene, render_scene

cfg = ScoreConfig(canonical_size=64)

rows = []
held_out = []
for i in range(120):
    spec = random_scene(seed=i)
    ori = render_scene(spec)
    subs_faithful = compute_subscores(ori, render_scene(spec), cfg)
    corrupted = []
    for kind in PERTURBATION_KINDS:
        gen = render_scene(perturb_scene(spec, kind, seed=i + 1))
        corrupted.append(compute_subscores(ori, gen, cfg))
    if i < 60:
        rows.append((subs_faithful, 0.95))
        rows.extend((c, 0.2) for c in corrupted)
    else:
        held_out.extend((subs_faithful, c) for c in corrupted)

print(f"training on {len(rows)} rows from 60 scenes ...")
model, records = train(
    rows,
    TrainConfig(batch_size=64, learning_rate=2.0, max_epochs=300, patience=25),
    seed=11,
)
best = records[-1].best_epoch
print(f"stopped after {len(records)} epochs, best validation tau_b at epoch {best}: "
      f"{records[best - 1].validation_tau_b:.3f}")

wins = sum(1 for f, c in held_out if forward(model, f) > forward(model, c))
print(f"held-out preference: faithful scored higher in {wins}/{len(held_out)} pairs "
      f"({wins / len(held_out):.1%})")

f, c = held_out[0]
print(f"example pair: faithful camscore {forward(model, f):.4f} "
      f"vs corrupted {forward(model, c):.4f}")
