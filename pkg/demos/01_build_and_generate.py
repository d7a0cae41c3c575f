#!/usr/bin/env python3
"""Build a desk-scale generator, look inside it, and render image grids.

Walks the basic pipeline: config -> generator -> latents -> images, then
shows the two headline latent tricks (truncation, style mixing).
"""

import os

import numpy as np

from stylegan_lens import (
    Generator,
    GeneratorConfig,
    sample_latents,
    save_image_grid,
    style_mix,
)

OUT = os.path.join(os.path.dirname(__file__), "out", "01_generate")
os.makedirs(OUT, exist_ok=True)

# A 16x16, two-block setup: big enough to show structure, small enough to
# run everywhere. GeneratorConfig() without arguments is the full 128x128
# layout (5 blocks, latent_size 512, 8 mapping layers).
config = GeneratorConfig.desk()
print("channels per block:", config.channels)
print("style layers:", config.num_style_layers)

g = Generator(config, seed=42)
total = sum(t.data.size for _, t in g.named_parameters())
print(f"parameters: {total:,}")

# The state dict uses the Src_Net.{block}.{unit} naming with raw weights
# stored as weight_orig (they are rescaled at runtime, not in storage).
for key in list(g.state_dict())[:8]:
    print(" ", key)

latents = sample_latents(32, seed=7, latent_size=config.latent_size)
images = g.generate(latents, seed=7)
save_image_grid(os.path.join(OUT, "fresh_model.png"), images.data)
print("wrote fresh_model.png", images.shape)

# Truncation pulls every w toward the running average; psi=0 collapses the
# whole batch onto one "average" image.
g.w_avg.data[:] = g.map_latent(latents.z.astype(np.float32)).data.mean(axis=0)
for psi in (1.0, 0.5, 0.0):
    imgs = g.generate(latents, seed=7, truncation_psi=psi)
    save_image_grid(os.path.join(OUT, f"truncation_psi_{psi:g}.png"), imgs.data)
    spread = float(imgs.data.std(axis=0).mean())
    print(f"psi={psi:g}: batch spread {spread:.4f}")

# Style mixing: coarse layers (before the crossover) from one batch, fine
# layers from another.
wb1 = g._to_wbatch(sample_latents(8, seed=1, latent_size=config.latent_size))
wb2 = g._to_wbatch(sample_latents(8, seed=2, latent_size=config.latent_size))
mixed = style_mix(wb1, wb2, crossover_layer=2)
save_image_grid(os.path.join(OUT, "style_mixed.png"), g.generate(mixed, seed=3).data)
print("wrote style_mixed.png")
