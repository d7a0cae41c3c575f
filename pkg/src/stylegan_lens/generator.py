"""Style-based generator: mapping network, progressive synthesis blocks,
style mixing, the truncation trick, and the EMA-stabilized copy.

State-dict keys follow the ``Src_Net.{block}.{unit}.{param}`` layout with
raw weights stored under ``weight_orig``; see checkpoint.py for the file
format that consumes them.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .autodiff import ShapeError, Tensor, leaky_relu, no_grad, upsample
from .layers import (
    EqualizedParam,
    Module,
    NoiseInjector,
    StyleAffine,
    adain,
    pixel_norm,
)
from .layers import EqualizedLinear  # noqa: F401  (re-export for callers)
from .layers import EqualizedConv2d  # noqa: F401


@dataclass
class GeneratorConfig:
    latent_size: int = 512
    n_layers: int = 8
    img_channels: int = 3
    min_res: int = 4
    blocks: int = 5
    max_res: int = 128
    base_channels: int = 256
    channels: tuple = None  # per-block widths, [const, block0_out, ..]; derived if None
    leaky_slope: float = 0.2
    truncation_psi: float = 1.0
    truncation_cutoff: int | None = None
    group_size: int = 8

    def __post_init__(self):
        if not (self.max_res <= self.min_res * 2 ** self.blocks
                and self.max_res >= (self.min_res - 1) * 2 ** self.blocks):
            raise ValueError(
                f"max_res {self.max_res} incompatible with min_res {self.min_res} "
                f"and blocks {self.blocks}"
            )
        if self.channels is None:
            self.channels = tuple(
                [self.base_channels]
                + [max(self.base_channels >> max(b - 1, 0), 8) for b in range(1, self.blocks + 1)]
            )
        else:
            self.channels = tuple(self.channels)
        if len(self.channels) != self.blocks + 1:
            raise ValueError(
                f"channels needs {self.blocks + 1} entries (const + one per block), "
                f"got {len(self.channels)}"
            )

    @property
    def num_style_layers(self) -> int:
        return 2 * self.blocks

    @classmethod
    def desk(cls, **overrides):
        """Small 16x16 two-block setup that trains in minutes on one core."""
        base = dict(latent_size=64, n_layers=3, blocks=2, max_res=16, base_channels=32)
        base.update(overrides)
        return cls(**base)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class WBatch:
    """Per-layer style vectors [N, num_style_layers, latent_size]."""

    w: np.ndarray
    seed: object = None

    def __post_init__(self):
        self.w = np.asarray(self.w)
        if self.w.ndim != 3:
            raise ShapeError(f"WBatch expects [N, layers, latent], got {self.w.shape}")

    @property
    def num_style_layers(self) -> int:
        return self.w.shape[1]

    @classmethod
    def from_w(cls, w: np.ndarray, num_style_layers: int, seed=None):
        w = np.asarray(w)
        return cls(np.repeat(w[:, None, :], num_style_layers, axis=1), seed=seed)


class MappingNetwork(Module):
    """Pixel-normalized input through n equalized linear + leaky-ReLU layers."""

    def __init__(self, latent_size: int, n_layers: int, rng, slope: float = 0.2):
        super().__init__()
        self.latent_size = latent_size
        self.slope = slope
        self.layers = []
        for i in range(n_layers):
            self.layers.append(self.register_child(str(i), EqualizedLinear(latent_size, latent_size, rng)))

    def __call__(self, z: Tensor) -> Tensor:
        if z.shape[-1] != self.latent_size:
            raise ShapeError(f"latent width mismatch: got {z.shape[-1]}, expected {self.latent_size}")
        x = pixel_norm(z)
        for layer in self.layers:
            x = leaky_relu(layer(x), self.slope)
        return x


class StyledConv(Module):
    """Convolution whose output is AdaIN-modulated by its own style affine."""

    def __init__(self, in_ch: int, out_ch: int, kernel: int, latent_size: int, rng):
        super().__init__()
        self.kernel = kernel
        self.bias = Tensor(np.zeros(out_ch, dtype=np.float32), requires_grad=True)
        self.weight_orig = EqualizedParam(
            Tensor(rng.standard_normal((out_ch, in_ch, kernel, kernel), dtype=np.float32), requires_grad=True),
            fan_in=in_ch * kernel * kernel,
        )
        self.style = StyleAffine(latent_size, out_ch, rng)

    def conv(self, x: Tensor) -> Tensor:
        from .autodiff import conv2d

        return conv2d(x, self.weight_orig.effective(), self.bias, pad=self.kernel // 2)

    def __call__(self, x: Tensor, w: Tensor) -> Tensor:
        return adain(self.conv(x), *self.style(w))


class GBlock(Module):
    """One synthesis block: upscale conv, two noise/AdaIN stages, image head."""

    def __init__(self, in_ch: int, out_ch: int, img_channels: int, latent_size: int, rng,
                 slope: float = 0.2):
        super().__init__()
        self.slope = slope
        self.upconv = StyledConv(in_ch, out_ch, 3, latent_size, rng)
        self.conv = StyledConv(out_ch, out_ch, 3, latent_size, rng)
        self.noise = NoiseInjector(out_ch)
        self.noise2 = NoiseInjector(out_ch)
        self.to_channels = StyledConv(out_ch, img_channels, 1, latent_size, rng)

    def __call__(self, x: Tensor, w_styles, noise_pair, skip_image: Tensor | None):
        if len(w_styles) != 2:
            raise ValueError(f"a block consumes exactly 2 style vectors, got {len(w_styles)}")
        w0, w1 = w_styles
        x = upsample(x, 2, "nearest")
        x = self.upconv.conv(x)
        x = self.noise(x, noise_pair[0])
        x = adain(x, *self.upconv.style(w0))
        x = leaky_relu(x, self.slope)
        x = self.conv.conv(x)
        x = self.noise2(x, noise_pair[1])
        x = adain(x, *self.conv.style(w1))
        x = leaky_relu(x, self.slope)
        image = self.to_channels(x, w1)
        if skip_image is not None:
            image = image + upsample(skip_image, 2, "bilinear")
        return x, image


class SynthesisNetwork(Module):
    """Grows a trainable constant to the full image through GBlocks."""

    def __init__(self, config: GeneratorConfig, rng):
        super().__init__()
        self.config = config
        ch = config.channels
        self.const = Tensor(
            np.ones((ch[0], config.min_res, config.min_res), dtype=np.float32), requires_grad=True
        )
        self.blocks = []
        for b in range(config.blocks):
            block = GBlock(ch[b], ch[b + 1], config.img_channels, config.latent_size, rng,
                           slope=config.leaky_slope)
            self.blocks.append(self.register_child(str(b), block))

    def __call__(self, w_layers: Tensor, noise_seed=0) -> Tensor:
        n = w_layers.shape[0]
        if w_layers.shape[1] != self.config.num_style_layers:
            raise ShapeError(
                f"expected {self.config.num_style_layers} style layers, got {w_layers.shape[1]}"
            )
        c0, r = self.const.shape[0], self.const.shape[1]
        x = self.const.reshape(1, c0, r, r).broadcast_to((n, c0, r, r))
        image = None
        for b, block in enumerate(self.blocks):
            res = self.config.min_res * 2 ** (b + 1)
            noise_pair = (
                NoiseInjector.sample_noise((n, res, res), seed=[*_seed_list(noise_seed), b, 0]),
                NoiseInjector.sample_noise((n, res, res), seed=[*_seed_list(noise_seed), b, 1]),
            )
            x, image = block(x, (w_layers[:, 2 * b], w_layers[:, 2 * b + 1]), noise_pair, image)
        return image


_SEED_MASK = 0xFFFFFFFFFFFFFFFF


def _seed_int(seed) -> int:
    return int(seed) & _SEED_MASK


def _seed_list(seed) -> list:
    if isinstance(seed, (tuple, list)):
        return [int(s) & _SEED_MASK for s in seed]
    return [_seed_int(seed)]


class Generator(Module):
    """Mapping + synthesis pair with a running w average for truncation."""

    def __init__(self, config: GeneratorConfig, seed: int = 0):
        super().__init__()
        self.config = config
        rng = np.random.default_rng([_seed_int(seed), 0x47454E])
        self.Map_Net = MappingNetwork(config.latent_size, config.n_layers, rng, slope=config.leaky_slope)
        self.Src_Net = SynthesisNetwork(config, rng)
        self.w_avg = Tensor(np.zeros(config.latent_size, dtype=np.float32), requires_grad=False)
        self.w_avg_decay = 0.995

    # ---- latent plumbing --------------------------------------------------

    def map_latent(self, z) -> Tensor:
        z = z if isinstance(z, Tensor) else Tensor(np.asarray(z, dtype=np.float32))
        if z.ndim != 2 or z.shape[1] != self.config.latent_size:
            raise ShapeError(f"latent batch must be [N, {self.config.latent_size}], got {z.shape}")
        return self.Map_Net(z)

    def update_w_avg(self, w_data: np.ndarray):
        d = self.w_avg_decay
        self.w_avg.data[...] = d * self.w_avg.data + (1.0 - d) * w_data.mean(axis=0)

    def _to_wbatch(self, latents) -> WBatch:
        if isinstance(latents, WBatch):
            if latents.w.shape[1] != self.config.num_style_layers:
                raise ShapeError(
                    f"WBatch has {latents.w.shape[1]} layers, model needs {self.config.num_style_layers}"
                )
            if latents.w.shape[2] != self.config.latent_size:
                raise ShapeError(f"latent width mismatch: {latents.w.shape[2]}")
            return latents
        z = getattr(latents, "z", latents)
        with no_grad():
            w = self.map_latent(z)
        return WBatch.from_w(w.data, self.config.num_style_layers,
                             seed=getattr(latents, "seed", None))

    # ---- inference ---------------------------------------------------------

    def generate(self, latents, seed: int = 0, truncation_psi: float | None = None,
                 truncation_cutoff: int | None = None) -> Tensor:
        """Deterministic image batch in normalized space, [N, 3, max_res, max_res]."""
        psi = self.config.truncation_psi if truncation_psi is None else truncation_psi
        cutoff = self.config.truncation_cutoff if truncation_cutoff is None else truncation_cutoff
        if not (0.0 <= psi <= 1.0):
            raise ValueError(f"truncation psi must lie in [0, 1], got {psi}")
        with no_grad():
            wb = self._to_wbatch(latents)
            if psi != 1.0:
                wb = truncate(wb, self.w_avg.data, psi, cutoff)
            return self.Src_Net(Tensor(wb.w.astype(np.float32, copy=False)), noise_seed=seed)

    # ---- training path -----------------------------------------------------

    def forward_train(self, z: Tensor, noise_seed=0, update_w_avg: bool = True) -> Tensor:
        w = self.map_latent(z)
        if update_w_avg:
            self.update_w_avg(w.data)
        n = w.shape[0]
        w_layers = w.reshape(n, 1, self.config.latent_size).broadcast_to(
            (n, self.config.num_style_layers, self.config.latent_size)
        )
        return self.Src_Net(w_layers, noise_seed=noise_seed)

    # ---- structural helpers --------------------------------------------------

    def modules(self):
        stack = [self]
        while stack:
            m = stack.pop()
            yield m
            stack.extend(m._children.values())

    def clone(self) -> "Generator":
        g = Generator(self.config, seed=0)
        g.load_state_dict(self.state_dict())
        g.w_avg_decay = self.w_avg_decay
        return g

    def bake_equalized(self) -> "Generator":
        """Copy with runtime scales folded into the stored weights."""
        g = self.clone()
        for m in g.modules():
            for p in m._params.values():
                if isinstance(p, EqualizedParam):
                    p.raw.data *= p.multiplier
                    p.gain = float(p.fan_in)  # multiplier becomes exactly 1
        return g


def truncate(wb: WBatch, w_avg: np.ndarray, psi: float, cutoff: int | None = None) -> WBatch:
    """Pull style vectors toward the running average: w_avg + psi * (w - w_avg)."""
    if not (0.0 <= psi <= 1.0):
        raise ValueError(f"truncation psi must lie in [0, 1], got {psi}")
    cutoff = wb.num_style_layers if cutoff is None else cutoff
    out = wb.w.copy()
    out[:, :cutoff] = w_avg[None, None, :] + psi * (out[:, :cutoff] - w_avg[None, None, :])
    return WBatch(out, seed=wb.seed)


def style_mix(w1: WBatch, w2: WBatch, crossover_layer: int) -> WBatch:
    """Layers [0, crossover) from w1, layers [crossover, end) from w2."""
    layers = w1.num_style_layers
    if w2.num_style_layers != layers:
        raise ShapeError("style mix requires equal layer counts")
    if not (0 <= crossover_layer <= layers):
        raise IndexError(f"crossover layer {crossover_layer} outside [0, {layers}]")
    mixed = np.concatenate([w1.w[:, :crossover_layer], w2.w[:, crossover_layer:]], axis=1)
    return WBatch(mixed, seed=(w1.seed, w2.seed))


def ema_update(stable: Module, live: Module, decay: float = 0.999):
    """stable <- decay * stable + (1 - decay) * live over every trainable tensor."""
    stable_params = dict(stable.named_parameters())
    live_params = dict(live.named_parameters())
    if stable_params.keys() != live_params.keys():
        raise ShapeError("ema_update requires identical architectures")
    for key, s in stable_params.items():
        l = live_params[key]
        if s.data.shape != l.data.shape:
            raise ShapeError(f"ema_update shape mismatch at {key}")
        if s.requires_grad:
            s.data[...] = decay * s.data + (1.0 - decay) * l.data
        else:
            s.data[...] = l.data
