"""Walkthrough: the full loop with the adapter pipeline.

A caption is judged by rendering it back into an image and comparing
that render against the original photo. This script runs the whole loop
with the procedural adapter backends (no weights, no network): extract a
bundle from a "photo", render candidate captions with the built-in T2I
painter, extract those too, and score each pair.

Needs the adapters package: pip install -e adapters/ --no-build-isolation
Run:  python3 demos/extract_and_score.py
"""

import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from PIL import Image

from camscore import ScoreConfig, compute_subscores, load_bundle
from camscore_adapters import AdapterConfig, PainterT2I, extract_bundle, generate_and_extract

work = Path(tempfile.mkdtemp(prefix="camscore_demo_"))
score_cfg = ScoreConfig(canonical_size=64)

# stand-in for a photograph: one painter render at a pinned seed
scene_caption = "a red square and a blue ball on a plain floor"
photo = PainterT2I().generate(scene_caption, seed=3, steps=24, guidance=8.0)
photo_path = work / "photo.png"
Image.fromarray((photo * 255).round().astype(np.uint8)).save(photo_path)

adapter_cfg = AdapterConfig(out_dir=str(work / "bundles"), steps=24, guidance=8.0, seed=3)
ori = load_bundle(extract_bundle(photo_path, adapter_cfg))
print(f"original: {ori.image.width}x{ori.image.height}, "
      f"{len(ori.detections)} detections: "
      + ", ".join(f"{d.label} ({d.confidence:.2f})" for d in ori.detections))
print()

captions = [
    scene_caption,
    "a green triangle in tall grass",
    "two yellow circles above a brown table",
]

# with the seed the photo was drawn at, the faithful caption reconstructs
# the image exactly and every distance hits its floor
gen = load_bundle(generate_and_extract(captions[0], adapter_cfg, out_dir=work / "exact"))
subs = compute_subscores(ori, gen, score_cfg)
print("same caption, same T2I seed (exact reconstruction):")
print("   l_pix   l_sem   l_obj  l_ciou   l_dep")
print("".join(f"{v:8.3f}" for v in subs.as_vector()))
print()

# across fresh seeds the layout varies, so average each caption over a
# few draws; the faithful caption keeps the lowest object-matching cost
seeds = (9, 17, 42, 101, 555)
print(f"caption comparison, mean sub-scores over T2I seeds {seeds}:")
print(f"{'caption':<46}  l_pix   l_sem   l_obj  l_ciou   l_dep")
for i, caption in enumerate(captions):
    rows = []
    for seed in seeds:
        out = work / f"gen_{i}_{seed}"
        gen = load_bundle(generate_and_extract(caption, replace(adapter_cfg, seed=seed), out_dir=out))
        rows.append(compute_subscores(ori, gen, score_cfg).as_vector())
    mean = np.mean(rows, axis=0)
    print(f"{caption:<46}" + "".join(f"{v:8.3f}" for v in mean))
print()
print("single draws are noisy with these toy backends; the averaged object")
print("score still ranks the faithful caption first, and a production stack")
print("plugs in through the same registry without touching this loop.")
