"""Layer mechanisms: runtime-equalized weights, AdaIN, noise injection,
pixel normalization, minibatch standard deviation.

Raw weights are stored N(0,1) and rescaled by sqrt(gain/fan_in) at every
forward pass; the stored tensor serializes under a ``weight_orig`` key so
pruning and checkpoints always see the unscaled values.
"""

from __future__ import annotations

import math

import numpy as np

from .autodiff import ShapeError, Tensor, concat, conv2d, sqrt


ADAIN_EPS = 1e-8
PIXEL_NORM_EPS = 1e-8


class EqualizedParam:
    """Raw N(0,1) weight plus its fan-in-derived runtime multiplier.

    ``raw`` is what gets stored and trained; ``effective()`` applies the
    scale on the fly so adaptive optimizers see unit-variance parameters.
    """

    def __init__(self, raw, fan_in: int, gain: float = 2.0):
        if fan_in < 1:
            raise ValueError(f"fan_in must be >= 1, got {fan_in}")
        self.raw = raw if isinstance(raw, Tensor) else Tensor(raw, requires_grad=True)
        self.fan_in = int(fan_in)
        self.gain = float(gain)

    @property
    def multiplier(self) -> float:
        return math.sqrt(self.gain / self.fan_in)

    def effective(self) -> Tensor:
        return self.raw * self.multiplier


def equalized_scale(p: EqualizedParam) -> Tensor:
    """Runtime-scaled view of the raw weight; the raw tensor is untouched."""
    return p.effective()


class Module:
    """Minimal parameter container with hierarchical, ordered state dicts."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_children", {})

    def __setattr__(self, name, value):
        if isinstance(value, (Tensor, EqualizedParam)):
            self._params[name] = value
        elif isinstance(value, Module):
            self._children[name] = value
        object.__setattr__(self, name, value)

    def register_child(self, name: str, module: "Module"):
        self._children[name] = module
        if name.isidentifier():
            object.__setattr__(self, name, module)
        return module

    def _param_tensor(self, p):
        return p.raw if isinstance(p, EqualizedParam) else p

    def named_parameters(self, prefix: str = ""):
        """Yield (key, Tensor) pairs in registration order, children last."""
        for name, p in self._params.items():
            yield prefix + name, self._param_tensor(p)
        for name, child in self._children.items():
            yield from child.named_parameters(prefix + name + ".")

    def parameters(self):
        return [t for _, t in self.named_parameters() if t.requires_grad]

    def state_dict(self, prefix: str = ""):
        return {k: t.data for k, t in self.named_parameters(prefix)}

    def load_state_dict(self, state, prefix: str = "", strict: bool = True):
        """Copy stored values into existing tensors; never reinitializes."""
        own = dict(self.named_parameters(prefix))
        missing = [k for k in own if k not in state]
        if strict and missing:
            raise KeyError(f"state dict is missing keys: {missing[:5]}{'...' if len(missing) > 5 else ''}")
        for key, tensor in own.items():
            if key not in state:
                continue
            value = np.asarray(state[key])
            if value.shape != tensor.data.shape:
                raise ShapeError(
                    f"shape mismatch for {key}: checkpoint {value.shape} vs model {tensor.data.shape}"
                )
            tensor.data[...] = value.astype(tensor.data.dtype, copy=False)

    def zero_grad(self):
        for _, t in self.named_parameters():
            t.grad = None


# ---- parameterized layers ---------------------------------------------------


class EqualizedLinear(Module):
    def __init__(self, in_dim: int, out_dim: int, rng, gain: float = 2.0, bias_init=0.0):
        super().__init__()
        self.bias = Tensor(np.full(out_dim, bias_init, dtype=np.float32), requires_grad=True)
        self.weight_orig = EqualizedParam(
            Tensor(rng.standard_normal((out_dim, in_dim), dtype=np.float32), requires_grad=True),
            fan_in=in_dim,
            gain=gain,
        )

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight_orig.effective().T + self.bias


class EqualizedConv2d(Module):
    """3x3 (pad 1) or 1x1 (pad 0) convolution with runtime weight scaling."""

    def __init__(self, in_ch: int, out_ch: int, kernel: int, rng, gain: float = 2.0):
        super().__init__()
        if kernel not in (1, 3):
            raise ValueError(f"kernel must be 1 or 3, got {kernel}")
        self.kernel = kernel
        self.bias = Tensor(np.zeros(out_ch, dtype=np.float32), requires_grad=True)
        self.weight_orig = EqualizedParam(
            Tensor(rng.standard_normal((out_ch, in_ch, kernel, kernel), dtype=np.float32), requires_grad=True),
            fan_in=in_ch * kernel * kernel,
            gain=gain,
        )

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight_orig.effective(), self.bias, pad=self.kernel // 2)


class StyleAffine(Module):
    """Maps a w vector to per-channel (y_s, y_b); y_s biased to 1 at init."""

    def __init__(self, latent_size: int, channels: int, rng):
        super().__init__()
        self.channels = channels
        bias = np.zeros(2 * channels, dtype=np.float32)
        bias[:channels] = 1.0
        self.bias = Tensor(bias, requires_grad=True)
        self.weight_orig = EqualizedParam(
            Tensor(rng.standard_normal((2 * channels, latent_size), dtype=np.float32), requires_grad=True),
            fan_in=latent_size,
        )

    def __call__(self, w: Tensor):
        y = w @ self.weight_orig.effective().T + self.bias
        return y[:, : self.channels], y[:, self.channels :]


class NoiseInjector(Module):
    """Adds one shared noise image scaled by learned per-channel coefficients.

    Strength starts at zero, so an untrained injector is the identity.
    """

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.noise_strength = Tensor(np.zeros(channels, dtype=np.float32), requires_grad=True)

    def __call__(self, x: Tensor, noise: np.ndarray) -> Tensor:
        n, c, h, w = x.shape
        if noise.shape != (n, 1, h, w):
            raise ShapeError(f"noise shape {noise.shape} does not match input {(n, 1, h, w)}")
        scale = self.noise_strength.reshape(1, c, 1, 1)
        return x + Tensor(noise) * scale

    @staticmethod
    def sample_noise(shape, seed) -> np.ndarray:
        n, h, w = shape
        rng = np.random.default_rng(seed)
        return rng.standard_normal((n, 1, h, w), dtype=np.float32)


# ---- stateless layer math ---------------------------------------------------


def adain(x: Tensor, y_s: Tensor, y_b: Tensor) -> Tensor:
    """Normalize each (sample, channel) map to zero mean / unit std, then
    rescale by y_s and shift by y_b."""
    n, c = x.shape[0], x.shape[1]
    mu = x.mean(axis=(2, 3), keepdims=True)
    var = ((x - mu) * (x - mu)).mean(axis=(2, 3), keepdims=True)
    xn = (x - mu) / sqrt(var + ADAIN_EPS)
    return y_s.reshape(n, c, 1, 1) * xn + y_b.reshape(n, c, 1, 1)


def instance_norm(x: Tensor) -> Tensor:
    mu = x.mean(axis=(2, 3), keepdims=True)
    var = ((x - mu) * (x - mu)).mean(axis=(2, 3), keepdims=True)
    return (x - mu) / sqrt(var + ADAIN_EPS)


def pixel_norm(z: Tensor) -> Tensor:
    """Scale each row to unit RMS (zero rows stay zero via the eps guard)."""
    ms = (z * z).mean(axis=-1, keepdims=True)
    return z / sqrt(ms + PIXEL_NORM_EPS)


def minibatch_stddev(x: Tensor, group_size: int = 8) -> Tensor:
    """Append one channel holding the group-mean per-location std over the
    batch group. Groups are contiguous runs of the batch axis."""
    n, c, h, w = x.shape
    g = min(group_size, n)
    if n % g:
        raise ShapeError(f"batch size {n} not divisible by group size {g}")
    grouped = x.reshape(n // g, g, c, h, w)
    per_location = grouped.std(axis=1)            # [n/g, c, h, w]
    stat = per_location.mean(axis=(1, 2, 3))      # [n/g]
    stat_map = stat.reshape(n // g, 1, 1, 1, 1).broadcast_to((n // g, g, 1, h, w)).reshape(n, 1, h, w)
    return concat([x, stat_map], axis=1)
