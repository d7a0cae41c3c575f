"""Magnitude pruning over the generator's raw weights plus the threshold
sweep that reports nonzero counts and discriminator scores per threshold.

Only tensors whose serialized key ends in ``weight_orig`` are prunable
(convs, styles, to_channels, mapping); biases and noise strengths are not.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .autodiff import no_grad
from .discriminator import Discriminator, probability
from .generator import Generator

PRUNABLE_SUFFIX = "weight_orig"


def prunable_tensors(g: Generator):
    return [(key, t) for key, t in g.named_parameters() if key.endswith(PRUNABLE_SUFFIX)]


@dataclass
class PruneMask:
    threshold: float
    masks: dict  # key -> uint8 array, 1 keeps the weight

    def nonzero(self) -> int:
        return int(sum(int(m.sum()) for m in self.masks.values()))


def prune_generator(g: Generator, threshold: float) -> PruneMask:
    """Zero every prunable weight with |w| < threshold, in place."""
    if threshold < 0:
        raise ValueError(f"prune threshold must be >= 0, got {threshold}")
    masks = {}
    for key, t in prunable_tensors(g):
        mask = (np.abs(t.data) >= threshold).astype(t.data.dtype)
        t.data *= mask
        masks[key] = mask.astype(np.uint8)
    return PruneMask(threshold=float(threshold), masks=masks)


def prune_generator_fraction(g: Generator, drop_fraction: float,
                             scope: str = "network") -> PruneMask:
    """Drop the smallest ``drop_fraction`` of prunable weights by magnitude.

    ``scope="network"`` ranks all weights together (one global cutoff);
    ``scope="layer"`` computes the cutoff within each tensor. For a fixed
    absolute threshold the two scopes coincide, so the distinction only
    exists in this quantile form.
    """
    if not (0.0 <= drop_fraction <= 1.0):
        raise ValueError(f"drop fraction must lie in [0, 1], got {drop_fraction}")
    if scope not in ("network", "layer"):
        raise ValueError(f"scope must be 'network' or 'layer', got {scope!r}")
    tensors = prunable_tensors(g)
    masks = {}
    if scope == "network":
        flat = np.concatenate([np.abs(t.data).ravel() for _, t in tensors])
        cutoff = float(np.quantile(flat, drop_fraction)) if drop_fraction > 0 else 0.0
        for key, t in tensors:
            mask = (np.abs(t.data) >= cutoff).astype(t.data.dtype) if drop_fraction > 0 \
                else np.ones_like(t.data)
            t.data *= mask
            masks[key] = mask.astype(np.uint8)
        return PruneMask(threshold=cutoff, masks=masks)
    for key, t in tensors:
        cutoff = float(np.quantile(np.abs(t.data), drop_fraction)) if drop_fraction > 0 else 0.0
        mask = (np.abs(t.data) >= cutoff).astype(t.data.dtype) if drop_fraction > 0 \
            else np.ones_like(t.data)
        t.data *= mask
        masks[key] = mask.astype(np.uint8)
    return PruneMask(threshold=float("nan"), masks=masks)


def count_nonzero(g: Generator) -> int:
    return int(sum(np.count_nonzero(t.data) for _, t in prunable_tensors(g)))


def total_prunable(g: Generator) -> int:
    return int(sum(t.data.size for _, t in prunable_tensors(g)))


def weight_stats(g: Generator):
    """Per-prunable-tensor (name, min, max, mean, std, count) plus a total row."""
    rows = []
    all_values = []
    for key, t in prunable_tensors(g):
        v = t.data
        rows.append((key, float(v.min()), float(v.max()), float(v.mean()), float(v.std()),
                     int(v.size)))
        all_values.append(v.ravel())
    if all_values:
        flat = np.concatenate(all_values)
        rows.append(("total", float(flat.min()), float(flat.max()), float(flat.mean()),
                     float(flat.std()), int(flat.size)))
    else:
        rows.append(("total", 0.0, 0.0, 0.0, 0.0, 0))
    return rows


@dataclass
class PruneReport:
    rows: list = field(default_factory=list)  # (threshold, nonzero_count, mean_d_score)
    image_paths: list = field(default_factory=list)

    def validate(self):
        thresholds = [r[0] for r in self.rows]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        counts = [r[1] for r in self.rows]
        if any(b > a for a, b in zip(counts, counts[1:])):
            raise ValueError("nonzero counts must be non-increasing")
        return self

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["threshold", "nonzero_count", "mean_d_score"])
            for t, count, score in self.rows:
                writer.writerow([f"{t:.3f}", count, f"{score:.6f}"])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as f:
            rows = [
                (float(r["threshold"]), int(r["nonzero_count"]), float(r["mean_d_score"]))
                for r in csv.DictReader(f)
            ]
        return cls(rows=rows)


def threshold_grid(start: float, end: float, step: float):
    count = int(round((end - start) / step)) + 1
    return [start + i * step for i in range(count)]


def sweep(g: Generator, d: Discriminator, fixed_latents, start: float = 0.0,
          end: float = 1.0, step: float = 0.001, image_every: int = 20,
          out_dir=None, in_place: bool = False, noise_seed: int = 0) -> PruneReport:
    """Prune at each threshold (cumulative), score 32 fixed-latent images,
    and emit an image grid every ``image_every`` thresholds.

    By default operates on a dedicated copy; masks are nested across an
    increasing grid, so in-place repeated pruning gives identical results.
    """
    z = getattr(fixed_latents, "z", fixed_latents)
    if np.size(z) == 0:
        raise ValueError("fixed latent batch is empty")
    target = g if in_place else g.clone()
    report = PruneReport()
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    for i, t in enumerate(threshold_grid(start, end, step)):
        prune_generator(target, t)
        nonzero = count_nonzero(target)
        with no_grad():
            images = target.generate(fixed_latents, seed=noise_seed)
            score = float(probability(d.get_score(images)).data.mean())
        report.rows.append((t, nonzero, score))
        if out_dir is not None and i % image_every == 0:
            from .imaging import save_image_grid

            path = os.path.join(out_dir, f"sweep_t{t:.3f}.png")
            save_image_grid(path, images.data)
            report.image_paths.append(path)

    if out_dir is not None:
        report.to_csv(os.path.join(out_dir, "prune_report.csv"))
    return report.validate()
