import numpy as np
import pytest

from stylegan_lens.generator import Generator, GeneratorConfig
from stylegan_lens.latent import (
    LatentBatch,
    Perturbation,
    compare_pair,
    perturb,
    sample_latents,
    scale_latent,
)


def desk_gen(seed=1):
    return Generator(GeneratorConfig.desk(), seed=seed)


def test_sample_determinism_and_shape():
    a = sample_latents(32, seed=9)
    b = sample_latents(32, seed=9)
    assert a.z.shape == (32, 512)
    assert np.array_equal(a.z, b.z)
    assert not np.array_equal(a.z, sample_latents(32, seed=10).z)


def test_sample_rejects_empty_batch():
    with pytest.raises(ValueError):
        sample_latents(0, seed=1)


def test_sample_mean_is_near_zero():
    batch = sample_latents(32, seed=0)
    assert abs(batch.z.mean()) < 0.02


def test_scale_identity_is_noop_end_to_end():
    g = desk_gen()
    batch = sample_latents(8, seed=4, latent_size=g.config.latent_size)
    scaled = scale_latent(batch, 1.0)
    assert np.array_equal(batch.z, scaled.z)
    assert np.array_equal(g.generate(batch, seed=2).data, g.generate(scaled, seed=2).data)


def test_scale_zero_collapses_downstream_images():
    g = desk_gen()
    batch = scale_latent(sample_latents(32, seed=5, latent_size=g.config.latent_size), 0.0)
    assert np.array_equal(batch.z, np.zeros_like(batch.z))
    imgs = g.generate(batch, seed=2).data
    assert np.array_equal(imgs, np.broadcast_to(imgs[:1], imgs.shape))


def test_scale_rejects_non_finite_factor():
    with pytest.raises(ValueError):
        scale_latent(sample_latents(2, seed=0), float("nan"))


def test_perturb_empty_is_identity():
    batch = sample_latents(4, seed=6)
    out = perturb(batch, Perturbation())
    assert np.array_equal(out.z, batch.z)


def test_perturb_changes_only_listed_column_by_exact_delta():
    batch = sample_latents(8, seed=7)
    out = perturb(batch, Perturbation(deltas=[(3, 10.0)]))
    diff = out.z - batch.z
    assert np.array_equal(diff[:, 3], np.full(8, 10.0))
    other = np.delete(diff, 3, axis=1)
    assert np.array_equal(other, np.zeros_like(other))


def test_perturb_roundtrip_is_bit_exact():
    batch = sample_latents(16, seed=8)
    forward = perturb(batch, Perturbation(deltas=[(5, 10.0), (100, -2.5)]))
    back = perturb(forward, Perturbation(deltas=[(5, -10.0), (100, 2.5)]))
    assert np.array_equal(back.z, batch.z)
    assert back.z.tobytes() == batch.z.tobytes()


def test_perturb_roundtrip_is_image_exact_for_any_delta():
    # deltas like 7.3 are not binary-representable, so the z round trip can
    # differ by 1 ulp in float64; the float32 cast at generation absorbs it
    g = desk_gen()
    batch = sample_latents(4, seed=21, latent_size=g.config.latent_size)
    forward = perturb(batch, Perturbation(deltas=[(5, 7.3)]))
    back = perturb(forward, Perturbation(deltas=[(5, -7.3)]))
    assert np.abs(back.z - batch.z).max() < 1e-14
    assert np.array_equal(g.generate(back, seed=1).data, g.generate(batch, seed=1).data)


def test_perturb_bounds_enforced_and_unbounded_escape():
    batch = sample_latents(2, seed=9)
    with pytest.raises(ValueError):
        perturb(batch, Perturbation(deltas=[(0, 1000.0)]))
    out = perturb(batch, Perturbation(deltas=[(0, 1000.0)], bounds=None))
    assert out.z[0, 0] == batch.z[0, 0] + 1000.0


def test_perturb_rejects_out_of_range_dimension():
    batch = sample_latents(2, seed=10)
    with pytest.raises(IndexError):
        perturb(batch, Perturbation(deltas=[(512, 1.0)]))


def test_perturbation_rejects_duplicate_dims():
    with pytest.raises(ValueError):
        Perturbation(deltas=[(3, 1.0), (3, 2.0)])


def test_compare_pair_empty_perturbation_identical():
    g = desk_gen()
    base = sample_latents(6, seed=11, latent_size=g.config.latent_size)
    before, after, distances = compare_pair(g, base, Perturbation(), seed=3)
    assert np.array_equal(before.data, after.data)
    assert np.array_equal(distances, np.zeros(6))


def test_compare_pair_nonempty_delta_moves_pixels():
    g = desk_gen()
    base = sample_latents(6, seed=12, latent_size=g.config.latent_size)
    _, _, distances = compare_pair(g, base, Perturbation(deltas=[(3, 10.0)]), seed=3)
    assert (distances >= 0).all()
    assert distances.max() > 0


def test_compare_pair_deterministic():
    g = desk_gen()
    base = sample_latents(4, seed=13, latent_size=g.config.latent_size)
    p = Perturbation(deltas=[(1, 5.0)], scale=1.5)
    a = compare_pair(g, base, p, seed=4)
    b = compare_pair(g, base, p, seed=4)
    assert np.array_equal(a[0].data, b[0].data)
    assert np.array_equal(a[1].data, b[1].data)
    assert np.array_equal(a[2], b[2])


def test_compare_pair_w_space_variant():
    g = desk_gen()
    base = sample_latents(4, seed=14, latent_size=g.config.latent_size)
    p = Perturbation(deltas=[(2, 10.0)])
    before, after, distances = compare_pair(g, base, p, seed=5, w_space=True)
    assert before.shape == after.shape
    assert distances.max() > 0


def test_latent_batch_requires_2d():
    with pytest.raises(ValueError):
        LatentBatch(np.zeros(4))
