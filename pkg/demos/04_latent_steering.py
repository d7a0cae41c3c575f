#!/usr/bin/env python3
"""Latent steering: whole-vector scaling and single-dimension deltas.

Reproduces the two interpretation protocols: multiply the entire z batch by
each factor in the preset list, then nudge individual dimensions and render
before/after pairs with their per-image L2 distances.
"""

import os

from stylegan_lens import GeneratorConfig, Perturbation, compare_pair, sample_latents, scale_latent
from stylegan_lens.cli import DEFAULT_SCALE_FACTORS, load_generator
from stylegan_lens.imaging import save_image_grid

CHECKPOINT = os.environ.get("CHECKPOINT")
OUT = os.path.join(os.path.dirname(__file__), "out", "04_latent")
os.makedirs(OUT, exist_ok=True)

config = GeneratorConfig.desk()
g = load_generator(config, CHECKPOINT)
base = sample_latents(32, seed=0, latent_size=config.latent_size)

# the nine-factor scaling study; 1.0 is the unscaled reference
for factor in DEFAULT_SCALE_FACTORS:
    images = g.generate(scale_latent(base, factor), seed=0)
    save_image_grid(os.path.join(OUT, f"latent_scale_{factor:g}.png"), images.data)
print(f"wrote {len(DEFAULT_SCALE_FACTORS)} scaling grids")

# single-dimension deltas within the slider range [-10, +10]
for dim, delta in ((3, 10.0), (7, -10.0), (13, 10.0)):
    p = Perturbation(deltas=[(dim, delta)])
    before, after, distances = compare_pair(g, base, p, seed=0)
    save_image_grid(os.path.join(OUT, f"perturb_dim{dim}_delta{delta:g}_before.png"), before.data)
    save_image_grid(os.path.join(OUT, f"perturb_dim{dim}_delta{delta:g}_after.png"), after.data)
    print(f"dim {dim:3d} delta {delta:+5.1f}: mean L2 {distances.mean():8.3f} max {distances.max():8.3f}")

# the delta-limit study: bigger jumps need the unbounded escape hatch
for delta in (20.0, 100.0, 1000.0):
    p = Perturbation(deltas=[(3, delta)], bounds=None)
    _, after, distances = compare_pair(g, base, p, seed=0)
    save_image_grid(os.path.join(OUT, f"perturb_dim3_delta{delta:g}.png"), after.data)
    print(f"unbounded delta {delta:6.0f}: mean L2 {distances.mean():8.3f}")
