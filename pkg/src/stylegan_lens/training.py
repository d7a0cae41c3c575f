"""Desk-scale adversarial training: minimax losses on stable log-sigmoids,
Adam, a procedural stand-in dataset, metrics/histogram/checkpoint cadence.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, asdict

import numpy as np

from . import checkpoint as ckpt
from .autodiff import ShapeError, Tensor, log_sigmoid, no_grad, sigmoid
from .discriminator import Discriminator
from .generator import Generator, GeneratorConfig, ema_update

IMAGE_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGE_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


class TrainingDiverged(RuntimeError):
    pass


# ---- image normalization -----------------------------------------------------


def _channels_first_view(x):
    x = np.asarray(x)
    if x.ndim == 3:
        if x.shape[0] != 3:
            raise ShapeError(f"expected 3 channels, got shape {x.shape}")
        return x, (3, 1, 1)
    if x.ndim == 4:
        if x.shape[1] != 3:
            raise ShapeError(f"expected 3 channels, got shape {x.shape}")
        return x, (1, 3, 1, 1)
    raise ShapeError(f"expected [3,H,W] or [N,3,H,W], got shape {x.shape}")


def normalize_image(x):
    """[0,1] RGB -> zero-centered per-channel normalized space."""
    x, shape = _channels_first_view(x)
    return ((x - IMAGE_MEAN.reshape(shape)) / IMAGE_STD.reshape(shape)).astype(np.float32)


def denormalize_image(x):
    """Inverse of normalize_image, clamped back into [0,1]."""
    x, shape = _channels_first_view(x)
    out = x * IMAGE_STD.reshape(shape) + IMAGE_MEAN.reshape(shape)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


# ---- losses -------------------------------------------------------------------


def d_loss(real_logits: Tensor, fake_logits: Tensor) -> Tensor:
    """-E[log sigma(real)] - E[log(1 - sigma(fake))], numerically stable."""
    return -(log_sigmoid(real_logits).mean()) - (log_sigmoid(-fake_logits).mean())


def g_loss(fake_logits: Tensor, variant: str = "non_saturating") -> Tensor:
    if variant == "minimax":
        return log_sigmoid(-fake_logits).mean()
    if variant == "non_saturating":
        return -(log_sigmoid(fake_logits).mean())
    raise ValueError(f"unknown g_loss variant {variant!r}")


# ---- optimizer -----------------------------------------------------------------


class Adam:
    """Standard Adam with bias correction over a fixed parameter list."""

    def __init__(self, params, lr=2e-3, betas=(0.0, 0.99), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * (g * g)
            m_hat = self.m[i] / (1.0 - b1 ** self.t)
            v_hat = self.v[i] / (1.0 - b2 ** self.t)
            p.data -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.data.dtype, copy=False)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


# ---- datasets --------------------------------------------------------------------


class SyntheticFaceDataset:
    """Procedural seeded face images: gradient background, skin-tone
    ellipse, two darker eye ellipses, jittered geometry and palette.

    Infinite and deterministic per index; pixels in [0,1] pre-normalization.
    """

    def __init__(self, resolution: int, seed: int = 0):
        self.resolution = resolution
        self.seed = seed
        r = resolution
        ys, xs = np.meshgrid(np.linspace(0, 1, r), np.linspace(0, 1, r), indexing="ij")
        self._ys = ys.astype(np.float32)
        self._xs = xs.astype(np.float32)

    def _soft_mask(self, d, steepness):
        return 1.0 / (1.0 + np.exp(np.clip((d - 1.0) * steepness, -30, 30)))

    def image(self, index: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, int(index), 0x46414345])
        ys, xs = self._ys, self._xs

        top = rng.uniform(0.15, 0.85, 3).astype(np.float32)
        bottom = rng.uniform(0.15, 0.85, 3).astype(np.float32)
        img = top[:, None, None] * (1.0 - ys) + bottom[:, None, None] * ys

        cx = 0.5 + rng.uniform(-0.05, 0.05)
        cy = 0.52 + rng.uniform(-0.05, 0.05)
        rx = 0.28 + rng.uniform(-0.04, 0.04)
        ry = 0.36 + rng.uniform(-0.04, 0.04)
        face_d = ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2
        face = self._soft_mask(face_d, 10.0)
        skin = (np.array([0.82, 0.64, 0.52], dtype=np.float32)
                + rng.uniform(-0.12, 0.12, 3).astype(np.float32))
        img = img * (1.0 - face) + skin[:, None, None] * face

        eye_dy = 0.10 + rng.uniform(-0.02, 0.02)
        eye_dx = 0.11 + rng.uniform(-0.02, 0.02)
        eye_r = 0.05 + rng.uniform(-0.01, 0.01)
        shade = rng.uniform(0.05, 0.3, 3).astype(np.float32)
        for side in (-1.0, 1.0):
            ex, ey = cx + side * eye_dx, cy - eye_dy
            eye_d = ((xs - ex) / eye_r) ** 2 + ((ys - ey) / (0.8 * eye_r)) ** 2
            eye = self._soft_mask(eye_d, 8.0)
            img = img * (1.0 - eye) + shade[:, None, None] * eye

        return np.clip(img, 0.0, 1.0).astype(np.float32)

    def batch(self, indices) -> np.ndarray:
        return np.stack([self.image(i) for i in indices])


class FolderDataset:
    """[0,1] RGB images from a directory: shorter side resized to the target
    resolution, then center-cropped. Deterministic index order (sorted names)."""

    def __init__(self, root, resolution: int):
        from PIL import Image  # deferred: only needed when reading real data

        self._image_cls = Image
        self.resolution = resolution
        exts = {".png", ".jpg", ".jpeg", ".bmp"}
        self.paths = sorted(
            os.path.join(root, name)
            for name in os.listdir(root)
            if os.path.splitext(name)[1].lower() in exts
        )
        if not self.paths:
            raise FileNotFoundError(f"no images found under {root}")

    def __len__(self):
        return len(self.paths)

    def image(self, index: int) -> np.ndarray:
        r = self.resolution
        img = self._image_cls.open(self.paths[index % len(self.paths)]).convert("RGB")
        w, h = img.size
        scale = r / min(w, h)
        img = img.resize((max(r, round(w * scale)), max(r, round(h * scale))))
        w, h = img.size
        left, top = (w - r) // 2, (h - r) // 2
        img = img.crop((left, top, left + r, top + r))
        arr = np.asarray(img, dtype=np.float32) / 255.0
        return arr.transpose(2, 0, 1)

    def batch(self, indices) -> np.ndarray:
        return np.stack([self.image(i) for i in indices])


# ---- histograms ---------------------------------------------------------------


def histogram(values, bins: int = 20, value_range=None):
    """Uniform-bin histogram; returns (edges, counts) with counts summing to n."""
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise ValueError("histogram of empty input")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if value_range is None:
        lo, hi = float(values.min()), float(values.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
    else:
        lo, hi = value_range
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return edges, counts


def write_histogram_csv(path, edges, counts):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["edge_lo", "edge_hi", "count"])
        for i, count in enumerate(counts):
            writer.writerow([f"{edges[i]:.6f}", f"{edges[i + 1]:.6f}", int(count)])


# ---- the loop -------------------------------------------------------------------


@dataclass
class TrainParams:
    max_iter: int = 2000
    batch_size: int = 16
    lr_g: float = 2e-3
    lr_d: float = 2e-3
    beta1: float = 0.0
    beta2: float = 0.99
    adam_eps: float = 1e-8
    ema_decay: float = 0.999
    seed: int = 0
    checkpoint_every: int = 500
    histogram_every: int = 500
    g_loss_variant: str = "non_saturating"
    dataset_size: int = 256

    def __post_init__(self):
        for name in ("max_iter", "batch_size", "checkpoint_every", "histogram_every",
                     "dataset_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("lr_g", "lr_d", "ema_decay"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.g_loss_variant not in ("minimax", "non_saturating"):
            raise ValueError(f"unknown g_loss variant {self.g_loss_variant!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class TrainResult:
    checkpoint_path: str
    metrics_path: str
    iterations: int
    out_dir: str


METRICS_HEADER = ["iter", "d_loss", "g_loss", "d_real_mean", "d_fake_mean", "seconds"]
ITER_KEY = "train.iter"


def save_training_checkpoint(path, g, g_ema, d, iteration: int):
    entries = {
        **g.state_dict("G."),
        **g_ema.state_dict("G_copy."),
        **d.state_dict("D."),
        ITER_KEY: np.float64(iteration),
    }
    ckpt.save(path, entries)


def load_training_checkpoint(path, g, g_ema, d) -> int:
    entries = ckpt.load(path)
    g.load_state_dict(entries, prefix="G.")
    g_ema.load_state_dict(entries, prefix="G_copy.")
    d.load_state_dict(entries, prefix="D.")
    return int(entries.get(ITER_KEY, 0))


def train(config: GeneratorConfig, params: TrainParams, out_dir,
          resume_from=None, dataset=None, timer=None) -> TrainResult:
    """Alternating D/G Adam steps with EMA tracking and periodic artifacts.

    Resuming never reinitializes weights: the checkpoint is loaded over the
    freshly built modules and iteration counting continues where it stopped.
    """
    timer = timer or time.perf_counter
    os.makedirs(out_dir, exist_ok=True)
    group = min(config.group_size, params.batch_size)
    if params.batch_size % group:
        raise ValueError(
            f"batch_size {params.batch_size} not divisible by group size {group}"
        )

    g = Generator(config, seed=params.seed)
    d = Discriminator(config, seed=params.seed + 1)
    g_ema = g.clone()
    start_iter = 0
    if resume_from is not None:
        start_iter = load_training_checkpoint(resume_from, g, g_ema, d)

    if dataset is None:
        dataset = SyntheticFaceDataset(config.max_res, seed=params.seed)
    opt_g = Adam(g.parameters(), lr=params.lr_g, betas=(params.beta1, params.beta2),
                 eps=params.adam_eps)
    opt_d = Adam(d.parameters(), lr=params.lr_d, betas=(params.beta1, params.beta2),
                 eps=params.adam_eps)

    metrics_path = os.path.join(out_dir, "metrics.csv")
    ckpt_path = os.path.join(out_dir, "checkpoint.sgln")
    b = params.batch_size
    t0 = timer()

    with open(metrics_path, "w", newline="") as metrics_file:
        writer = csv.writer(metrics_file)
        writer.writerow(METRICS_HEADER)

        for it in range(start_iter, params.max_iter):
            indices = [(it * b + j) % params.dataset_size for j in range(b)]
            real = normalize_image(dataset.batch(indices))
            z_d = np.random.default_rng([params.seed, it, 1]).standard_normal(
                (b, config.latent_size), dtype=np.float32)
            z_g = np.random.default_rng([params.seed, it, 2]).standard_normal(
                (b, config.latent_size), dtype=np.float32)

            # discriminator step: fresh fakes, no generator graph
            fake_d = g.generate(z_d, seed=(params.seed, it, 0))
            real_logits = d.get_score(Tensor(real))
            fake_logits = d.get_score(fake_d)
            loss_d = d_loss(real_logits, fake_logits)
            d.zero_grad()
            loss_d.backward()
            opt_d.step()

            # generator step through the updated discriminator
            fake_g = g.forward_train(Tensor(z_g), noise_seed=(params.seed, it, 1))
            loss_g = g_loss(d.get_score(fake_g), params.g_loss_variant)
            g.zero_grad()
            d.zero_grad()
            loss_g.backward()
            opt_g.step()
            ema_update(g_ema, g, params.ema_decay)

            ld, lg = loss_d.item(), loss_g.item()
            if not (np.isfinite(ld) and np.isfinite(lg)):
                raise TrainingDiverged(
                    f"non-finite loss at iteration {it}: d_loss={ld}, g_loss={lg}"
                )
            with no_grad():
                d_real = float(sigmoid(real_logits.detach()).data.mean())
                d_fake = float(sigmoid(fake_logits.detach()).data.mean())
            writer.writerow([
                it, f"{ld:.6f}", f"{lg:.6f}", f"{d_real:.6f}", f"{d_fake:.6f}",
                f"{timer() - t0:.3f}",
            ])

            done = it + 1
            if done % params.histogram_every == 0 or done == params.max_iter:
                with no_grad():
                    real_p = sigmoid(real_logits.detach()).data.ravel()
                    fake_p = sigmoid(fake_logits.detach()).data.ravel()
                for tag, probs in (("real", real_p), ("fake", fake_p)):
                    edges, counts = histogram(probs, bins=20, value_range=(0.0, 1.0))
                    write_histogram_csv(
                        os.path.join(out_dir, f"hist_d_{tag}_{done:06d}.csv"), edges, counts)
            if done % params.checkpoint_every == 0 or done == params.max_iter:
                save_training_checkpoint(ckpt_path, g, g_ema, d, done)

    if start_iter >= params.max_iter:
        # zero further iterations: persist the resumed weights untouched
        save_training_checkpoint(ckpt_path, g, g_ema, d, start_iter)

    return TrainResult(ckpt_path, metrics_path, max(params.max_iter - start_iter, 0), str(out_dir))
