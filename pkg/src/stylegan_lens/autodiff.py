"""Dense tensors and reverse-mode automatic differentiation on numpy buffers.

The compute graph is recorded implicitly: every traced tensor keeps the
parent tensors that require gradients plus a closure that routes its
upstream gradient to them. ``backward()`` topologically sorts the recorded
subgraph and accumulates gradients into the leaves; accumulation is
additive until the caller resets grads explicitly.

Training code runs in float32; gradient-check tests use float64. Ops are
deterministic and never mutate their inputs.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import expit, log_expit


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested op."""


class GraphError(RuntimeError):
    """backward() misuse: non-scalar loss or no recorded graph."""


_grad_enabled = True


class no_grad:
    """Context manager that disables graph recording inside its block."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def _as_float_array(data, dtype=None):
    arr = np.asarray(data, dtype=dtype)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float32)
    return arr


def _accum(existing, g):
    if existing is None:
        return np.array(g, copy=True)
    existing += g
    return existing


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


class Tensor:
    """N-dimensional float32/float64 array, optionally recorded for autodiff."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, dtype=None):
        self.data = _as_float_array(data, dtype)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    # ---- basic introspection -------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(()))

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{flag})"

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def copy(self):
        return Tensor(self.data.copy(), requires_grad=self.requires_grad)

    # ---- graph machinery -----------------------------------------------

    def backward(self):
        if self.data.size != 1:
            raise GraphError(f"backward() requires a scalar loss, got shape {self.shape}")
        if self._backward is None and not self._parents:
            raise GraphError("backward() called on a tensor with no recorded graph")
        order = _topo_order(self)
        # graph-internal grads are per-pass scratch; only leaves accumulate
        for node in order:
            if node._backward is not None:
                node.grad = None
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward()

    # ---- operators -------------------------------------------------------

    def __add__(self, other):
        return _binary("add", self, other)

    def __radd__(self, other):
        return _binary("add", self, other)

    def __sub__(self, other):
        return _binary("sub", self, other)

    def __rsub__(self, other):
        return _binary("rsub", self, other)

    def __mul__(self, other):
        return _binary("mul", self, other)

    def __rmul__(self, other):
        return _binary("mul", self, other)

    def __truediv__(self, other):
        return _binary("div", self, other)

    def __rtruediv__(self, other):
        return _binary("rdiv", self, other)

    def __neg__(self):
        return self * -1.0

    def __pow__(self, p):
        if not np.isscalar(p):
            raise ShapeError("pow supports scalar exponents only")
        out = _trace(self.data ** float(p), (self,), None)
        if out._parents:
            def bwd():
                self.grad = _accum(self.grad, out.grad * float(p) * self.data ** (float(p) - 1.0))
            out._backward = bwd
        return out

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        out_data = self.data[idx]
        out = _trace(np.array(out_data, copy=True), (self,), None)
        if out._parents:
            def bwd():
                if self.grad is None:
                    self.grad = np.zeros_like(self.data)
                self.grad[idx] += out.grad
            out._backward = bwd
        return out

    # ---- shape ops -------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        if int(np.prod(shape)) != self.data.size and -1 not in shape:
            raise ShapeError(f"cannot reshape {self.shape} into {tuple(shape)}")
        old_shape = self.data.shape
        out = _trace(self.data.reshape(shape), (self,), None)
        if out._parents:
            def bwd():
                self.grad = _accum(self.grad, out.grad.reshape(old_shape))
            out._backward = bwd
        return out

    def transpose(self, axes=None):
        out = _trace(np.transpose(self.data, axes).copy(), (self,), None)
        if out._parents:
            inv = None if axes is None else tuple(np.argsort(axes))
            def bwd():
                self.grad = _accum(self.grad, np.transpose(out.grad, inv))
            out._backward = bwd
        return out

    @property
    def T(self):
        return self.transpose()

    def broadcast_to(self, shape):
        shape = tuple(shape)
        try:
            out_data = np.broadcast_to(self.data, shape)
        except ValueError:
            raise ShapeError(f"cannot broadcast {self.shape} to {shape}") from None
        old_shape = self.data.shape
        out = _trace(np.array(out_data), (self,), None)
        if out._parents:
            def bwd():
                self.grad = _accum(self.grad, _unbroadcast(out.grad, old_shape))
            out._backward = bwd
        return out

    # ---- reductions ------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        axes = _norm_axes(axis, self.data.ndim, self.data.shape)
        out = _trace(self.data.sum(axis=axes, keepdims=keepdims), (self,), None)
        if out._parents:
            shape = self.data.shape
            def bwd():
                self.grad = _accum(self.grad, _expand_reduced(out.grad, shape, axes, keepdims))
            out._backward = bwd
        return out

    def mean(self, axis=None, keepdims=False):
        axes = _norm_axes(axis, self.data.ndim, self.data.shape)
        n = int(np.prod([self.data.shape[a] for a in axes]))
        out = _trace(self.data.mean(axis=axes, keepdims=keepdims), (self,), None)
        if out._parents:
            shape = self.data.shape
            def bwd():
                self.grad = _accum(self.grad, _expand_reduced(out.grad, shape, axes, keepdims) / n)
            out._backward = bwd
        return out

    def std(self, axis=None, keepdims=False):
        """Population standard deviation (divisor n, exactly 0 on constants)."""
        axes = _norm_axes(axis, self.data.ndim, self.data.shape)
        n = int(np.prod([self.data.shape[a] for a in axes]))
        out_data = self.data.std(axis=axes, keepdims=keepdims)
        out = _trace(out_data, (self,), None)
        if out._parents:
            shape = self.data.shape
            mu = self.data.mean(axis=axes, keepdims=True)
            def bwd():
                g = _expand_reduced(out.grad, shape, axes, keepdims)
                s = _expand_reduced(out_data if keepdims else np.expand_dims(out_data, axes),
                                    shape, axes, True)
                # guard keeps the 0/0 constant-input case finite (numerator is 0 there)
                self.grad = _accum(self.grad, g * (self.data - mu) / (n * np.maximum(s, 1e-12)))
            out._backward = bwd
        return out


def _topo_order(root):
    order, visited, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order


def _trace(out_data, inputs, backward):
    if _grad_enabled and any(t.requires_grad for t in inputs):
        out = Tensor(out_data, requires_grad=True)
        out._parents = tuple(t for t in inputs if t.requires_grad)
        out._backward = backward
    else:
        out = Tensor(out_data)
    return out


def _norm_axes(axis, ndim, shape):
    if axis is None:
        axes = tuple(range(ndim))
    elif isinstance(axis, int):
        axes = (axis % ndim,)
    else:
        axes = tuple(a % ndim for a in axis)
    if int(np.prod([shape[a] for a in axes], initial=1)) == 0:
        raise ShapeError("reduction over an empty set of elements")
    return axes


def _expand_reduced(g, shape, axes, keepdims):
    if not keepdims:
        for ax in sorted(axes):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, shape)


def _binary(kind, a, b):
    if isinstance(b, Tensor):
        try:
            np.broadcast_shapes(a.shape, b.shape)
        except ValueError:
            raise ShapeError(f"incompatible shapes for {kind}: {a.shape} vs {b.shape}") from None
        bd = b.data
        inputs = (a, b)
    else:
        bd = float(b)
        inputs = (a,)

    if kind == "add":
        out_data = a.data + bd
    elif kind == "sub":
        out_data = a.data - bd
    elif kind == "rsub":
        out_data = bd - a.data
    elif kind == "mul":
        out_data = a.data * bd
    elif kind == "div":
        out_data = a.data / bd
    elif kind == "rdiv":
        out_data = bd / a.data
    else:  # pragma: no cover
        raise ValueError(kind)

    out = _trace(out_data, inputs, None)
    if not out._parents:
        return out

    def bwd():
        g = out.grad
        if kind == "add":
            if a.requires_grad:
                a.grad = _accum(a.grad, _unbroadcast(g, a.shape))
            if isinstance(b, Tensor) and b.requires_grad:
                b.grad = _accum(b.grad, _unbroadcast(g, b.shape))
        elif kind == "sub":
            if a.requires_grad:
                a.grad = _accum(a.grad, _unbroadcast(g, a.shape))
            if isinstance(b, Tensor) and b.requires_grad:
                b.grad = _accum(b.grad, _unbroadcast(-g, b.shape))
        elif kind == "rsub":
            if a.requires_grad:
                a.grad = _accum(a.grad, _unbroadcast(-g, a.shape))
        elif kind == "mul":
            if a.requires_grad:
                a.grad = _accum(a.grad, _unbroadcast(g * bd, a.shape))
            if isinstance(b, Tensor) and b.requires_grad:
                b.grad = _accum(b.grad, _unbroadcast(g * a.data, b.shape))
        elif kind == "div":
            if a.requires_grad:
                a.grad = _accum(a.grad, _unbroadcast(g / bd, a.shape))
            if isinstance(b, Tensor) and b.requires_grad:
                b.grad = _accum(b.grad, _unbroadcast(-g * a.data / (bd * bd), b.shape))
        elif kind == "rdiv":
            if a.requires_grad:
                a.grad = _accum(a.grad, _unbroadcast(-g * bd / (a.data * a.data), a.shape))

    out._backward = bwd
    return out


# ---- linear algebra ------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} vs {b.shape}")
    out = _trace(a.data @ b.data, (a, b), None)
    if out._parents:
        def bwd():
            g = out.grad
            if a.requires_grad:
                a.grad = _accum(a.grad, g @ b.data.T)
            if b.requires_grad:
                b.grad = _accum(b.grad, a.data.T @ g)
        out._backward = bwd
    return out


# ---- convolution -----------------------------------------------------------


def _im2col(xp, kh, kw, stride):
    n, c, h, w = xp.shape
    oh = (h - kh) // stride + 1
    ow = (w - kw) // stride + 1
    s0, s1, s2, s3 = xp.strides
    cols = np.lib.stride_tricks.as_strided(
        xp,
        shape=(n, c, kh, kw, oh, ow),
        strides=(s0, s1, s2, s3, s2 * stride, s3 * stride),
        writeable=False,
    )
    return cols.reshape(n, c * kh * kw, oh * ow), oh, ow


def conv2d(x: Tensor, w: Tensor, bias: Tensor | None = None, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation of NCHW input with OCkk kernels plus optional bias."""
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d expects NCHW input and OCkk kernel, got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv2d channel mismatch: input has {x.shape[1]}, kernel expects {w.shape[1]}")
    n, c, h, wid = x.shape
    o, _, kh, kw = w.shape
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x.data
    cols, oh, ow = _im2col(xp, kh, kw, stride)
    w2 = w.data.reshape(o, c * kh * kw)
    out_data = np.matmul(w2, cols).reshape(n, o, oh, ow)
    if bias is not None:
        out_data = out_data + bias.data.reshape(1, o, 1, 1)

    inputs = (x, w) if bias is None else (x, w, bias)
    out = _trace(out_data, inputs, None)
    if not out._parents:
        return out

    def bwd():
        g = out.grad
        g2 = g.reshape(n, o, oh * ow)
        if bias is not None and bias.requires_grad:
            bias.grad = _accum(bias.grad, g.sum(axis=(0, 2, 3)))
        if w.requires_grad:
            dw = np.matmul(g2, cols.transpose(0, 2, 1)).sum(axis=0)
            w.grad = _accum(w.grad, dw.reshape(w.shape))
        if x.requires_grad:
            dcols = np.matmul(w2.T, g2).reshape(n, c, kh, kw, oh, ow)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, :, i : i + oh * stride : stride, j : j + ow * stride : stride] += dcols[:, :, i, j]
            dx = dxp[:, :, pad : pad + h, pad : pad + wid] if pad else dxp
            x.grad = _accum(x.grad, dx)

    out._backward = bwd
    return out


# ---- elementwise nonlinearities -------------------------------------------


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    if not (0.0 < slope < 1.0):
        raise ValueError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    slope = float(slope)
    out = _trace(np.where(x.data >= 0, x.data, x.data * slope), (x,), None)
    if out._parents:
        def bwd():
            x.grad = _accum(x.grad, out.grad * np.where(x.data >= 0, 1.0, slope))
        out._backward = bwd
    return out


def sigmoid(x: Tensor) -> Tensor:
    s = expit(x.data)
    out = _trace(s, (x,), None)
    if out._parents:
        def bwd():
            x.grad = _accum(x.grad, out.grad * s * (1.0 - s))
        out._backward = bwd
    return out


def log_sigmoid(x: Tensor) -> Tensor:
    """log(sigmoid(x)) computed without overflow for large |x|."""
    out = _trace(log_expit(x.data), (x,), None)
    if out._parents:
        def bwd():
            x.grad = _accum(x.grad, out.grad * expit(-x.data))
        out._backward = bwd
    return out


def exp(x: Tensor) -> Tensor:
    e = np.exp(x.data)
    out = _trace(e, (x,), None)
    if out._parents:
        def bwd():
            x.grad = _accum(x.grad, out.grad * e)
        out._backward = bwd
    return out


def log(x: Tensor) -> Tensor:
    out = _trace(np.log(x.data), (x,), None)
    if out._parents:
        def bwd():
            x.grad = _accum(x.grad, out.grad / x.data)
        out._backward = bwd
    return out


def sqrt(x: Tensor) -> Tensor:
    r = np.sqrt(x.data)
    out = _trace(r, (x,), None)
    if out._parents:
        def bwd():
            x.grad = _accum(x.grad, out.grad * 0.5 / np.maximum(r, 1e-12))
        out._backward = bwd
    return out


# ---- resampling ------------------------------------------------------------


@lru_cache(maxsize=None)
def _bilinear_matrix(n: int, dtype_str: str):
    """[2n, n] row-stochastic-ish matrix for half-pixel-center 2x upsampling."""
    src = (np.arange(2 * n) + 0.5) / 2.0 - 0.5
    src = np.clip(src, 0.0, n - 1.0)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n - 1)
    t = src - i0
    m = np.zeros((2 * n, n), dtype=np.dtype(dtype_str))
    m[np.arange(2 * n), i0] += 1.0 - t
    m[np.arange(2 * n), i1] += t
    return m


def upsample(x: Tensor, factor: int = 2, mode: str = "nearest") -> Tensor:
    if factor != 2:
        raise ValueError(f"upsample supports factor 2 only, got {factor}")
    if x.ndim != 4:
        raise ShapeError(f"upsample expects NCHW input, got {x.shape}")
    n, c, h, w = x.shape
    if mode == "nearest":
        out_data = x.data.repeat(2, axis=2).repeat(2, axis=3)
        out = _trace(out_data, (x,), None)
        if out._parents:
            def bwd():
                g = out.grad.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5))
                x.grad = _accum(x.grad, g)
            out._backward = bwd
        return out
    if mode == "bilinear":
        mh = _bilinear_matrix(h, x.data.dtype.str)
        mw = _bilinear_matrix(w, x.data.dtype.str)
        out_data = np.einsum("bw,ah,nchw->ncab", mw, mh, x.data, optimize=True)
        out = _trace(out_data, (x,), None)
        if out._parents:
            def bwd():
                g = np.einsum("bw,ah,ncab->nchw", mw, mh, out.grad, optimize=True)
                x.grad = _accum(x.grad, g)
            out._backward = bwd
        return out
    raise ValueError(f"unknown upsample mode {mode!r}")


def avg_pool2(x: Tensor) -> Tensor:
    """2x2 average pooling, the downsampling mirror of upsample."""
    if x.ndim != 4:
        raise ShapeError(f"avg_pool2 expects NCHW input, got {x.shape}")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"avg_pool2 needs even spatial dims, got {x.shape}")
    return x.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))


# ---- concatenation ---------------------------------------------------------


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = list(tensors)
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    out = _trace(out_data, tuple(tensors), None)
    if out._parents:
        sizes = [t.shape[axis] for t in tensors]
        splits = np.cumsum(sizes)[:-1]
        def bwd():
            pieces = np.split(out.grad, splits, axis=axis)
            for t, piece in zip(tensors, pieces):
                if t.requires_grad:
                    t.grad = _accum(t.grad, piece)
        out._backward = bwd
    return out
