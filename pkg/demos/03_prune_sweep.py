#!/usr/bin/env python3
"""Magnitude-pruning sweep: walk thresholds 0 -> 1, watch the nonzero-weight
count fall almost linearly while the discriminator score degrades.

Uses a fresh desk model by default; point CHECKPOINT at a trained .sgln to
reproduce the study on learned weights.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from stylegan_lens import GeneratorConfig, sweep, weight_stats
from stylegan_lens.cli import load_discriminator, load_generator
from stylegan_lens.latent import sample_latents

CHECKPOINT = os.environ.get("CHECKPOINT")
STEP = float(os.environ.get("STEP", 0.01))  # 0.001 reproduces the 1001-row grid
OUT = os.path.join(os.path.dirname(__file__), "out", "03_prune")
os.makedirs(OUT, exist_ok=True)

config = GeneratorConfig.desk()
g = load_generator(config, CHECKPOINT)
d = load_discriminator(config, CHECKPOINT)

print("weight distribution per layer (fresh init is N(0,1) by design):")
for name, lo, hi, mean, std, count in weight_stats(g):
    print(f"  {name:55s} mean {mean:+.3f} std {std:.3f} n {count}")

fixed = sample_latents(32, seed=0, latent_size=config.latent_size)
report = sweep(g, d, fixed, start=0.0, end=1.0, step=STEP, image_every=20, out_dir=OUT)

thresholds = [r[0] for r in report.rows]
counts = [r[1] for r in report.rows]
scores = [r[2] for r in report.rows]
print(f"nonzero: {counts[0]:,} at t=0  ->  {counts[-1]:,} at t={thresholds[-1]:g}")
print(f"kept fraction at t=1.0: {counts[-1] / counts[0]:.4f} (Gaussian law predicts ~0.3173)")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot(thresholds, counts)
ax1.set_xlabel("threshold")
ax1.set_ylabel("nonzero weights")
ax2.plot(thresholds, scores)
ax2.set_xlabel("threshold")
ax2.set_ylabel("mean D score over 32 fixed latents")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "sweep_curves.png"), dpi=120)
print("wrote sweep_curves.png and per-threshold grids (sweep_t*.png)")
