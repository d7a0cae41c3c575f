#!/usr/bin/env python3
"""Train the desk GAN on the procedural face dataset and plot the run.

A few hundred iterations are enough to watch D(x)/D(G(z)) separate and
start converging; bump ITERS for the full dynamics.
"""

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from stylegan_lens import (
    GeneratorConfig,
    SyntheticFaceDataset,
    TrainParams,
    normalize_image,
    save_image_grid,
    train,
)
from stylegan_lens.cli import load_generator
from stylegan_lens.latent import sample_latents

ITERS = int(os.environ.get("ITERS", 400))
OUT = os.path.join(os.path.dirname(__file__), "out", "02_train")
os.makedirs(OUT, exist_ok=True)

config = GeneratorConfig.desk()
params = TrainParams(max_iter=ITERS, batch_size=16, seed=0,
                     checkpoint_every=max(ITERS // 2, 1), histogram_every=max(ITERS // 2, 1))

# a peek at what the generator is asked to imitate
dataset = SyntheticFaceDataset(config.max_res, seed=params.seed)
save_image_grid(os.path.join(OUT, "dataset_sample.png"),
                normalize_image(dataset.batch(range(32))))

result = train(config, params, OUT)
print("checkpoint:", result.checkpoint_path)

with open(result.metrics_path) as f:
    rows = list(csv.DictReader(f))
iters = [int(r["iter"]) for r in rows]
d_real = [float(r["d_real_mean"]) for r in rows]
d_fake = [float(r["d_fake_mean"]) for r in rows]

fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(iters, d_real, label="mean sigma(D(x))", lw=0.8)
ax.plot(iters, d_fake, label="mean sigma(D(G(z)))", lw=0.8)
ax.set_xlabel("iteration")
ax.set_ylabel("probability")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "d_scores.png"), dpi=120)
print("wrote d_scores.png")

# render from the EMA copy, the stabilized weights a viewer would use
g = load_generator(config, result.checkpoint_path, prefer_ema=True)
latents = sample_latents(32, seed=5, latent_size=config.latent_size)
save_image_grid(os.path.join(OUT, "trained_samples.png"),
                g.generate(latents, seed=5).data)
print("wrote trained_samples.png")
