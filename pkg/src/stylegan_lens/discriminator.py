"""Convolutional critic: mirrored downsampling ladder with minibatch
standard deviation before the final block, emitting one realness logit.
"""

from __future__ import annotations

import numpy as np

from .autodiff import ShapeError, Tensor, avg_pool2, leaky_relu, sigmoid
from .generator import GeneratorConfig, _seed_int
from .layers import EqualizedConv2d, EqualizedLinear, Module, minibatch_stddev


class DBlock(Module):
    def __init__(self, in_ch: int, out_ch: int, rng, slope: float = 0.2):
        super().__init__()
        self.slope = slope
        self.conv1 = EqualizedConv2d(in_ch, in_ch, 3, rng)
        self.conv2 = EqualizedConv2d(in_ch, out_ch, 3, rng)

    def __call__(self, x: Tensor) -> Tensor:
        x = leaky_relu(self.conv1(x), self.slope)
        x = leaky_relu(self.conv2(x), self.slope)
        return avg_pool2(x)


class Discriminator(Module):
    """Scores [N, img_channels, max_res, max_res] batches as [N, 1] logits."""

    def __init__(self, config: GeneratorConfig, seed: int = 0):
        super().__init__()
        self.config = config
        rng = np.random.default_rng([_seed_int(seed), 0x44534352])
        ch = config.channels
        slope = config.leaky_slope
        self.from_channels = EqualizedConv2d(config.img_channels, ch[-1], 1, rng)
        self.blocks = []
        for b in range(config.blocks):
            block = DBlock(ch[config.blocks - b], ch[config.blocks - b - 1], rng, slope=slope)
            self.blocks.append(self.register_child(str(b), block))
        c0 = ch[0]
        self.final_conv = EqualizedConv2d(c0 + 1, c0, 3, rng)
        self.dense = EqualizedLinear(c0 * config.min_res * config.min_res, c0, rng)
        self.score = EqualizedLinear(c0, 1, rng)

    def get_score(self, images: Tensor) -> Tensor:
        images = images if isinstance(images, Tensor) else Tensor(np.asarray(images, dtype=np.float32))
        n = images.shape[0]
        expected = (self.config.img_channels, self.config.max_res, self.config.max_res)
        if images.shape[1:] != expected:
            raise ShapeError(f"discriminator expects [N, {expected}], got {images.shape}")
        slope = self.config.leaky_slope
        x = leaky_relu(self.from_channels(images), slope)
        for block in self.blocks:
            x = block(x)
        x = minibatch_stddev(x, self.config.group_size)
        x = leaky_relu(self.final_conv(x), slope)
        x = leaky_relu(self.dense(x.reshape(n, -1)), slope)
        return self.score(x)

    def __call__(self, images) -> Tensor:
        return self.get_score(images)

    def modules(self):
        stack = [self]
        while stack:
            m = stack.pop()
            yield m
            stack.extend(m._children.values())

    def clone(self) -> "Discriminator":
        d = Discriminator(self.config, seed=0)
        d.load_state_dict(self.state_dict())
        return d


def probability(logits: Tensor) -> Tensor:
    """Sigmoid realness probability; apply only for reporting, not training."""
    return sigmoid(logits if isinstance(logits, Tensor) else Tensor(np.asarray(logits)))
