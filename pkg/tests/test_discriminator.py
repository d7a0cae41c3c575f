import numpy as np
import pytest

from stylegan_lens.autodiff import ShapeError, Tensor
from stylegan_lens.discriminator import Discriminator, probability
from stylegan_lens.generator import GeneratorConfig


def desk_disc(seed=2, **overrides):
    return Discriminator(GeneratorConfig.desk(**overrides), seed=seed)


def test_score_shape_contract():
    d = desk_disc()
    imgs = np.random.default_rng(0).standard_normal((32, 3, 16, 16), dtype=np.float32)
    assert d.get_score(imgs).shape == (32, 1)


def test_score_rejects_resolution_mismatch():
    d = desk_disc()
    with pytest.raises(ShapeError):
        d.get_score(np.zeros((4, 3, 8, 8), dtype=np.float32))


def test_zero_weights_give_bias_logits():
    d = desk_disc()
    for _, t in d.named_parameters():
        t.data[:] = 0.0
    d.score.bias.data[:] = 0.37
    imgs = np.random.default_rng(1).standard_normal((8, 3, 16, 16), dtype=np.float32)
    out = d.get_score(imgs).data
    assert np.allclose(out, 0.37)


def test_full_group_permutation_permutes_logits():
    d = desk_disc()
    imgs = np.random.default_rng(2).standard_normal((8, 3, 16, 16), dtype=np.float32)
    base = d.get_score(imgs).data
    perm = np.random.default_rng(3).permutation(8)
    permuted = d.get_score(imgs[perm]).data
    assert np.allclose(permuted, base[perm], atol=1e-5)


def test_probability_symmetry_and_saturation():
    assert probability(Tensor([[0.0]])).data[0, 0] == 0.5
    assert probability(Tensor([[50.0]])).data[0, 0] >= 1 - 1e-20
    assert probability(Tensor([[-50.0]])).data[0, 0] <= 1e-20


def test_mean_probability_over_32_images_in_unit_interval():
    d = desk_disc()
    imgs = np.random.default_rng(4).standard_normal((32, 3, 16, 16), dtype=np.float32)
    mean = probability(d.get_score(imgs)).data.mean()
    assert 0.0 < mean < 1.0


def test_downsampling_ladder_halves_each_block():
    cfg = GeneratorConfig(latent_size=16, n_layers=1, blocks=3, max_res=32, base_channels=16)
    d = Discriminator(cfg, seed=0)
    # 32 -> 16 -> 8 -> 4, then the 4x4 head
    imgs = np.random.default_rng(5).standard_normal((8, 3, 32, 32), dtype=np.float32)
    assert d.get_score(imgs).shape == (8, 1)


def test_parameter_count_matches_hand_count_on_one_block_config():
    cfg = GeneratorConfig(latent_size=8, n_layers=1, blocks=1, max_res=8, base_channels=8)
    d = Discriminator(cfg, seed=0)
    # from_channels 1x1 3->8: 8*3 + 8 = 32
    # block conv1 3x3 8->8: 8*8*9 + 8 = 584 ; conv2 3x3 8->8: 584
    # final_conv 3x3 (8+1)->8: 8*9*9 + 8 = 656
    # dense (8*4*4)->8: 128*8 + 8 = 1032 ; score 8->1: 8 + 1 = 9
    hand_count = 32 + 584 + 584 + 656 + 1032 + 9
    total = sum(t.data.size for _, t in d.named_parameters() if t.requires_grad)
    assert total == hand_count


def test_clone_matches_original_scores():
    d = desk_disc(seed=7)
    c = d.clone()
    imgs = np.random.default_rng(6).standard_normal((8, 3, 16, 16), dtype=np.float32)
    assert np.array_equal(d.get_score(imgs).data, c.get_score(imgs).data)
