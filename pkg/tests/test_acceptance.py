"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. The tolerances are pinned
here, not configurable. Criterion 7 trains the full desk run and dominates
the suite's runtime (several minutes single-core).
"""

import csv
import os
import time

import numpy as np
import pytest
from scipy.special import ndtr

from helpers import check_gradient, gradient_suite_cases

from stylegan_lens import checkpoint as ckpt
from stylegan_lens.autodiff import Tensor
from stylegan_lens.cli import main as cli_main
from stylegan_lens.discriminator import Discriminator
from stylegan_lens.generator import Generator, GeneratorConfig, style_mix
from stylegan_lens.latent import Perturbation, compare_pair, perturb, sample_latents, scale_latent
from stylegan_lens.layers import EqualizedParam, Module, adain
from stylegan_lens.pruning import count_nonzero, prune_generator, sweep
from stylegan_lens.training import TrainParams, d_loss, g_loss, train

import json


def announce(number: int, name: str):
    print(f"\nACCEPTANCE {number} {name}: PASS")


DESK = dict(latent_size=64, n_layers=3, blocks=2, max_res=16, base_channels=32)

# training hyperparameters for the convergence criterion (see decisions ledger)
DESK_TRAIN = dict(max_iter=2000, batch_size=16, seed=0, lr_d=1e-3,
                  checkpoint_every=2000, histogram_every=2000, dataset_size=1_000_000)


def test_criterion_1_gradient_suite():
    started = time.perf_counter()
    for name, build, x in gradient_suite_cases():
        check_gradient(build, x, tol=1e-4)
    rng = np.random.default_rng(101)
    fixed = Tensor(rng.uniform(-2, 2, (3, 1)))
    check_gradient(lambda t: d_loss(t, fixed), rng.uniform(-2, 2, (3, 1)), tol=1e-4)
    check_gradient(lambda t: d_loss(fixed, t), rng.uniform(-2, 2, (3, 1)), tol=1e-4)
    check_gradient(lambda t: g_loss(t, "minimax"), rng.uniform(-2, 2, (3, 1)), tol=1e-4)
    check_gradient(lambda t: g_loss(t, "non_saturating"), rng.uniform(-2, 2, (3, 1)), tol=1e-4)
    elapsed = time.perf_counter() - started
    assert elapsed < 120, f"gradient suite took {elapsed:.1f}s, budget is 120s"
    announce(1, f"gradient suite (finite differences, {elapsed:.1f}s)")


def test_criterion_2_adain_moments():
    rng = np.random.default_rng(202)
    for _ in range(200):
        n, c = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        h = w = int(rng.integers(4, 9))
        x = Tensor(rng.standard_normal((n, c, h, w)) * rng.uniform(0.3, 3.0) + rng.uniform(-2, 2))
        ys = rng.uniform(-3, 3, (n, c))
        yb = rng.uniform(-3, 3, (n, c))
        out = adain(x, Tensor(ys), Tensor(yb)).data
        assert np.abs(out.mean(axis=(2, 3)) - yb).max() <= 1e-4
        assert np.abs(out.std(axis=(2, 3)) - np.abs(ys)).max() <= 1e-3
    announce(2, "AdaIN per-channel moments over 200 cases")


def test_criterion_3_equalized_lr_equivalence():
    g = Generator(GeneratorConfig(**DESK), seed=11)
    baked = g.bake_equalized()
    z = sample_latents(16, seed=4, latent_size=g.config.latent_size)
    diff = np.abs(g.generate(z, seed=4).data - baked.generate(z, seed=4).data).max()
    assert diff <= 1e-5, f"runtime-scaled vs baked forward differ by {diff}"
    announce(3, f"equalized-LR equivalence (max abs diff {diff:.2e})")


class _WeightBag(Module):
    """Single prunable tensor, sized like a full-scale generator.

    Sampled in float64: float32 normal draws round to exact zero about once
    per couple million values, which would break the fresh-count identity.
    """

    def __init__(self, n, seed):
        super().__init__()
        raw = np.random.default_rng(seed).standard_normal(n)
        self.weight_orig = EqualizedParam(Tensor(raw, requires_grad=True), fan_in=1)


def test_criterion_4_gaussian_pruning_law():
    started = time.perf_counter()
    full_scale_count = 3_680_500
    bag = _WeightBag(full_scale_count, seed=404)
    assert count_nonzero(bag) == full_scale_count
    prune_generator(bag, 1.0)
    kept = count_nonzero(bag) / full_scale_count
    oracle = 2.0 * (1.0 - ndtr(1.0))
    assert 0.3073 <= kept <= 0.3273, f"kept fraction {kept:.4f} outside window"
    elapsed = time.perf_counter() - started
    assert elapsed < 30, f"took {elapsed:.1f}s, budget is 30s"
    # a trained full-scale run keeps 1,218,002 / 3,680,500 ~ 0.331, the real-world anchor
    announce(4, f"Gaussian pruning law (kept {kept:.4f}, oracle {oracle:.4f}, {elapsed:.1f}s)")


def test_criterion_5_sweep_shape(tmp_path):
    cfg = GeneratorConfig(**DESK)
    g = Generator(cfg, seed=5)
    d = Discriminator(cfg, seed=6)
    latents = sample_latents(32, seed=1, latent_size=cfg.latent_size)
    unpruned = g.generate(latents, seed=1).data.copy()

    report = sweep(g, d, latents, start=0.0, end=1.0, step=0.001, image_every=200,
                   out_dir=tmp_path)
    assert len(report.rows) == 1001

    counts = np.array([r[1] for r in report.rows], dtype=np.float64)
    assert all(b <= a for a, b in zip(counts, counts[1:])), "nonzero column must not increase"

    pruned_at_zero = g.clone()
    prune_generator(pruned_at_zero, 0.0)
    assert np.array_equal(pruned_at_zero.generate(latents, seed=1).data, unpruned)

    chord = counts[0] + (counts[-1] - counts[0]) * np.linspace(0, 1, len(counts))
    deviation = np.abs(counts - chord).max() / counts[0]
    assert deviation <= 0.07, f"chord deviation {deviation:.3f} exceeds 7%"
    announce(5, f"sweep shape (1001 rows, chord deviation {deviation:.3f})")


def test_criterion_6_determinism(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"generator": DESK}))
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        code = cli_main(["generate", "--config", str(config_path), "--seed", "7",
                         "--count", "32", "--out", str(out)])
        assert code == 0
    names = sorted(os.listdir(out_a))
    assert len([n for n in names if n.startswith("gen_")]) == 32
    for name in names:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    cfg = GeneratorConfig(**DESK)
    params = dict(max_iter=50, batch_size=8, seed=3, checkpoint_every=50,
                  histogram_every=50, dataset_size=64)
    train(cfg, TrainParams(**params), tmp_path / "t1", timer=lambda: 0.0)
    train(cfg, TrainParams(**params), tmp_path / "t2", timer=lambda: 0.0)
    assert (tmp_path / "t1/metrics.csv").read_bytes() == (tmp_path / "t2/metrics.csv").read_bytes()
    announce(6, "determinism (32 PNGs byte-identical; 50-iter metrics identical)")


def test_criterion_7_desk_training_dynamics(tmp_path):
    started = time.perf_counter()
    cfg = GeneratorConfig(**DESK)
    result = train(cfg, TrainParams(**DESK_TRAIN), tmp_path / "run")
    elapsed = time.perf_counter() - started
    with open(result.metrics_path) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2000
    d_real = np.array([float(r["d_real_mean"]) for r in rows])
    d_fake = np.array([float(r["d_fake_mean"]) for r in rows])

    early_gap = (d_real[:100] - d_fake[:100]).mean()
    late_gap = (d_real[1900:] - d_fake[1900:]).mean()
    assert d_real[:100].mean() > d_fake[:100].mean(), \
        f"early window must favor reals: {d_real[:100].mean():.3f} vs {d_fake[:100].mean():.3f}"
    shrink = 1.0 - abs(late_gap) / abs(early_gap)
    assert shrink >= 0.5, (
        f"gap must shrink >= 50%: early {early_gap:.4f}, late {late_gap:.4f}, "
        f"shrink {shrink * 100:.1f}%"
    )
    assert elapsed < 1800, f"took {elapsed:.0f}s, budget is 30 min"
    announce(7, f"desk training dynamics (gap {early_gap:.3f} -> {late_gap:.3f}, "
                f"{shrink * 100:.0f}% shrink, {elapsed / 60:.1f} min)")


def test_criterion_8_checkpoint_contract(tmp_path):
    cfg = GeneratorConfig(latent_size=32, n_layers=2, blocks=5, max_res=128, base_channels=32)
    g = Generator(cfg, seed=8)
    path = tmp_path / "five_block.sgln"
    ckpt.save(path, g.state_dict())

    loaded = ckpt.load(path)
    for key, t in g.named_parameters():
        assert np.array_equal(loaded[key], t.data), key

    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0x40
    (tmp_path / "corrupt.sgln").write_bytes(bytes(raw))
    with pytest.raises(ckpt.CheckpointError):
        ckpt.load(tmp_path / "corrupt.sgln")

    remapped = ckpt.remap_keys(loaded, {"weight_orig": "weight"})
    assert "Src_Net.4.upconv.weight" in remapped
    restored = ckpt.remap_keys(remapped, {"weight": "weight_orig"})
    assert list(restored) == list(loaded)

    block4 = [k for k in loaded if k.startswith("Src_Net.4.")]
    assert len(block4) == 14
    for suffix in ("upconv.weight_orig", "upconv.bias", "upconv.style.weight_orig",
                   "upconv.style.bias", "conv.weight_orig", "conv.style.weight_orig",
                   "noise.noise_strength", "noise2.noise_strength",
                   "to_channels.weight_orig", "to_channels.style.weight_orig"):
        assert f"Src_Net.4.{suffix}" in loaded
    announce(8, "checkpoint round trip, corruption, remap, 5-block key pattern")


def test_criterion_9_latent_algebra():
    cfg = GeneratorConfig(**DESK)
    g = Generator(cfg, seed=9)

    batch = sample_latents(32, seed=2, latent_size=cfg.latent_size)
    roundtrip = perturb(perturb(batch, Perturbation(deltas=[(3, 10.0)])),
                        Perturbation(deltas=[(3, -10.0)]))
    assert roundtrip.z.tobytes() == batch.z.tobytes()

    scaled = scale_latent(batch, 1.0)
    assert np.array_equal(g.generate(scaled, seed=2).data, g.generate(batch, seed=2).data)
    before, after, distances = compare_pair(g, batch, Perturbation(), seed=2)
    assert np.array_equal(before.data, after.data) and distances.max() == 0.0

    g.w_avg.data[:] = g.map_latent(batch.z.astype(np.float32)).data.mean(axis=0)
    collapsed = g.generate(batch, seed=2, truncation_psi=0.0)
    assert np.array_equal(collapsed.data, np.broadcast_to(collapsed.data[:1], collapsed.shape))

    wb = g._to_wbatch(batch)
    mixed = style_mix(wb, wb, crossover_layer=cfg.num_style_layers // 2)
    assert np.array_equal(g.generate(mixed, seed=2).data, g.generate(wb, seed=2).data)
    announce(9, "latent algebra (perturb identity, scale no-op, psi collapse, mix no-op)")
