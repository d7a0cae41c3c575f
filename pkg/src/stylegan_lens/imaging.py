"""PNG encoding and image-grid helpers for normalized-space tensors."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .training import denormalize_image


def to_uint8(image) -> np.ndarray:
    """Normalized [3,H,W] tensor -> uint8 [H,W,3] via denormalize + quantize."""
    data = np.asarray(getattr(image, "data", image))
    if not np.isfinite(data).all():
        raise ValueError("image contains non-finite pixels")
    rgb = denormalize_image(data)
    return np.round(rgb * 255.0).astype(np.uint8).transpose(1, 2, 0)


def encode_png(image) -> bytes:
    """Deterministic PNG bytes for a normalized [3,H,W] image."""
    buf = io.BytesIO()
    Image.fromarray(to_uint8(image)).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    """uint8 [H,W,3] pixels from PNG bytes (the round-trip oracle)."""
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))


def image_grid(images, cols: int = 8, pad: int = 2) -> np.ndarray:
    """Tile a normalized [N,3,H,W] batch into one uint8 [Hg,Wg,3] grid."""
    data = np.asarray(getattr(images, "data", images))
    if data.ndim != 4:
        raise ValueError(f"expected [N,3,H,W], got shape {data.shape}")
    n, _, h, w = data.shape
    cols = min(cols, n)
    rows = (n + cols - 1) // cols
    grid = np.full((rows * (h + pad) + pad, cols * (w + pad) + pad, 3), 255, dtype=np.uint8)
    for i in range(n):
        r, c = divmod(i, cols)
        y, x = pad + r * (h + pad), pad + c * (w + pad)
        grid[y : y + h, x : x + w] = to_uint8(data[i])
    return grid


def save_image_grid(path, images, cols: int = 8) -> None:
    Image.fromarray(image_grid(images, cols=cols)).save(path, format="PNG")


def save_png(path, image) -> None:
    with open(path, "wb") as f:
        f.write(encode_png(image))
