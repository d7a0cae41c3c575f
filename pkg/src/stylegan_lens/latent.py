"""Latent interpretation toolkit: seeded sampling, whole-vector scaling,
per-dimension deltas, and before/after comparison batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import no_grad
from .generator import Generator, WBatch

DELTA_BOUNDS = (-10.0, 10.0)  # the interactive slider range


@dataclass
class LatentBatch:
    """z vectors [N, latent_size] with the seed that reproduces them.

    Stored in float64 (holding float32-sampled values) so that adding and
    removing a slider delta restores the batch bit-exactly; the generator
    casts down to float32 at the mapping input.
    """

    z: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        if self.z.ndim != 2:
            raise ValueError(f"latent batch must be [N, latent_size], got {self.z.shape}")

    @property
    def count(self) -> int:
        return self.z.shape[0]

    @property
    def latent_size(self) -> int:
        return self.z.shape[1]


def sample_latents(n: int, seed: int = 0, latent_size: int = 512) -> LatentBatch:
    """n standard-normal latent rows from a seeded stream; bit-reproducible."""
    if n < 1:
        raise ValueError(f"need at least one latent vector, got n={n}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, latent_size), dtype=np.float32)
    return LatentBatch(z.astype(np.float64), seed=seed)


def scale_latent(batch: LatentBatch, factor: float) -> LatentBatch:
    if not np.isfinite(factor):
        raise ValueError(f"scale factor must be finite, got {factor}")
    return LatentBatch(batch.z * float(factor), seed=batch.seed)


@dataclass
class Perturbation:
    """Per-dimension deltas plus a global scale, bounded by the slider range."""

    deltas: list = field(default_factory=list)  # (dimension, delta) pairs
    scale: float = 1.0
    bounds: tuple | None = DELTA_BOUNDS  # None lifts the slider limits

    def __post_init__(self):
        dims = [d for d, _ in self.deltas]
        if len(dims) != len(set(dims)):
            raise ValueError(f"duplicate dimensions in perturbation: {dims}")

    def validate(self, latent_size: int):
        for dim, delta in self.deltas:
            if not (0 <= dim < latent_size):
                raise IndexError(f"dimension {dim} outside [0, {latent_size})")
            if self.bounds is not None and not (self.bounds[0] <= delta <= self.bounds[1]):
                raise ValueError(
                    f"delta {delta} for dimension {dim} outside bounds {self.bounds}"
                )
        return self


def perturb(batch: LatentBatch, p: Perturbation) -> LatentBatch:
    """z' = scale * z, then z'[:, d] += delta for each listed dimension."""
    p.validate(batch.latent_size)
    z = batch.z * float(p.scale)
    for dim, delta in p.deltas:
        z[:, dim] = z[:, dim] + float(delta)
    return LatentBatch(z, seed=batch.seed)


def perturb_w(wb: WBatch, p: Perturbation) -> WBatch:
    """Same edit applied post-mapping, uniformly across style layers."""
    p.validate(wb.w.shape[2])
    w = wb.w.astype(np.float64) * float(p.scale)
    for dim, delta in p.deltas:
        w[:, :, dim] = w[:, :, dim] + float(delta)
    return WBatch(w, seed=wb.seed)


def compare_pair(g: Generator, base: LatentBatch, p: Perturbation, seed: int = 0,
                 w_space: bool = False, truncation_psi: float | None = None):
    """(images_before, images_after, per-image L2 distances) under one shared
    noise seed, so only the latent edit explains pixel differences."""
    with no_grad():
        if w_space:
            wb = g._to_wbatch(base)
            before = g.generate(wb, seed=seed, truncation_psi=truncation_psi)
            after = g.generate(perturb_w(wb, p), seed=seed, truncation_psi=truncation_psi)
        else:
            before = g.generate(base, seed=seed, truncation_psi=truncation_psi)
            after = g.generate(perturb(base, p), seed=seed, truncation_psi=truncation_psi)
    diff = (after.data - before.data).reshape(before.shape[0], -1)
    distances = np.sqrt((diff * diff).sum(axis=1))
    return before, after, distances
