"""Shared test oracles: central finite differences and the per-op gradient suite.

The numeric differentiator is intentionally independent from the library's
backward pass - it re-evaluates the forward function at shifted inputs.
"""

import numpy as np

from stylegan_lens.autodiff import (
    Tensor,
    avg_pool2,
    concat,
    conv2d,
    exp,
    leaky_relu,
    log,
    log_sigmoid,
    matmul,
    sigmoid,
    sqrt,
    upsample,
)


def numeric_grad(f, x, h=1e-4):
    """Central finite differences of scalar f(x) w.r.t. every element of x."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        fp = f(x)
        x[idx] = orig - h
        fm = f(x)
        x[idx] = orig
        g[idx] = (fp - fm) / (2.0 * h)
    return g


def rel_err(a, b):
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-8)
    return float(np.abs(a - b).max() / denom)


def check_gradient(build, x, tol=1e-4, h=1e-4):
    """Assert autodiff grad of build(Tensor(x)) matches finite differences."""
    x = np.array(x, dtype=np.float64)
    xt = Tensor(x, requires_grad=True)
    build(xt).backward()
    g_num = numeric_grad(lambda arr: build(Tensor(arr)).item(), x, h=h)
    err = rel_err(xt.grad, g_num)
    assert err <= tol, f"autodiff/finite-difference mismatch: rel err {err:.3g} > {tol}"
    return err


def _away_from_kink(rng, shape, lo=-2.0, hi=2.0, margin=0.05):
    x = rng.uniform(lo, hi, shape)
    x[np.abs(x) < margin] = margin
    return x


def gradient_suite_cases():
    """(name, build, input) triples covering every differentiable op.

    Each build maps the differentiated Tensor to a scalar loss; auxiliary
    constants are fixed per case so the map is a pure function of the input.
    """
    rng = np.random.default_rng(20240517)
    c_vec = rng.uniform(-2, 2, (3, 4))
    b_mat = rng.uniform(-2, 2, (4, 5))
    a_mat = rng.uniform(-2, 2, (3, 4))
    conv_x = rng.uniform(-2, 2, (1, 2, 4, 4))
    conv_w = rng.uniform(-1, 1, (3, 2, 3, 3))
    conv_b = rng.uniform(-1, 1, (3,))
    denom = rng.uniform(1.0, 2.0, (3, 4))

    def weighted(t):
        # deterministic weighting makes the scalar sensitive to every element
        w = Tensor(np.linspace(0.5, 1.5, t.size).reshape(t.shape))
        return (t * w).sum()

    cases = [
        ("add", lambda t: weighted(t + Tensor(c_vec)), rng.uniform(-2, 2, (3, 4))),
        ("sub", lambda t: weighted(t - Tensor(c_vec)), rng.uniform(-2, 2, (3, 4))),
        ("mul", lambda t: weighted(t * Tensor(c_vec)), rng.uniform(-2, 2, (3, 4))),
        ("div", lambda t: weighted(t / Tensor(denom)), rng.uniform(-2, 2, (3, 4))),
        ("div_by", lambda t: weighted(Tensor(c_vec) / (t * t + 1.0)), rng.uniform(-2, 2, (3, 4))),
        ("scalar_ops", lambda t: weighted(2.5 * t - 0.5 + t / 3.0), rng.uniform(-2, 2, (3, 4))),
        ("pow", lambda t: weighted(t ** 3), rng.uniform(-2, 2, (3, 4))),
        ("matmul_lhs", lambda t: weighted(matmul(t, Tensor(b_mat))), a_mat.copy()),
        ("matmul_rhs", lambda t: weighted(matmul(Tensor(a_mat), t)), b_mat.copy()),
        ("conv2d_x", lambda t: weighted(conv2d(t, Tensor(conv_w), Tensor(conv_b), pad=1)), conv_x.copy()),
        ("conv2d_w", lambda t: weighted(conv2d(Tensor(conv_x), t, Tensor(conv_b), pad=1)), conv_w.copy()),
        ("conv2d_bias", lambda t: weighted(conv2d(Tensor(conv_x), Tensor(conv_w), t, pad=1)), conv_b.copy()),
        ("conv2d_1x1", lambda t: weighted(conv2d(Tensor(conv_x), t, pad=0)), rng.uniform(-1, 1, (3, 2, 1, 1))),
        ("leaky_relu", lambda t: weighted(leaky_relu(t, 0.2)), _away_from_kink(rng, (3, 4))),
        ("upsample_nearest", lambda t: weighted(upsample(t, 2, "nearest")), rng.uniform(-2, 2, (1, 2, 3, 3))),
        ("upsample_bilinear", lambda t: weighted(upsample(t, 2, "bilinear")), rng.uniform(-2, 2, (1, 2, 3, 3))),
        ("avg_pool2", lambda t: weighted(avg_pool2(t)), rng.uniform(-2, 2, (1, 2, 4, 4))),
        ("sum_axis", lambda t: weighted(t.sum(axis=1)), rng.uniform(-2, 2, (3, 4))),
        ("mean_axis", lambda t: weighted(t.mean(axis=(0, 1), keepdims=True)), rng.uniform(-2, 2, (3, 4))),
        ("std_axis", lambda t: weighted(t.std(axis=1)), rng.uniform(-2, 2, (3, 4))),
        ("std_all", lambda t: t.std(), rng.uniform(-2, 2, (3, 4))),
        ("sigmoid", lambda t: weighted(sigmoid(t)), rng.uniform(-2, 2, (3, 4))),
        ("log_sigmoid", lambda t: weighted(log_sigmoid(t)), rng.uniform(-2, 2, (3, 4))),
        ("exp", lambda t: weighted(exp(t)), rng.uniform(-2, 2, (3, 4))),
        ("log", lambda t: weighted(log(t + 3.0)), rng.uniform(-2, 2, (3, 4))),
        ("sqrt", lambda t: weighted(sqrt(t + 3.0)), rng.uniform(-2, 2, (3, 4))),
        ("reshape", lambda t: weighted(t.reshape(4, 3) * 2.0), rng.uniform(-2, 2, (3, 4))),
        ("transpose", lambda t: weighted(t.T * Tensor(c_vec.T)), rng.uniform(-2, 2, (3, 4))),
        ("getitem", lambda t: weighted(t[1:, :2]), rng.uniform(-2, 2, (3, 4))),
        ("concat", lambda t: weighted(concat([t, t * 2.0], axis=1)), rng.uniform(-2, 2, (3, 2))),
        ("broadcast_to", lambda t: weighted(t.broadcast_to((3, 2, 4))), rng.uniform(-2, 2, (1, 2, 4))),
        (
            "composite_matmul_leaky_mul",
            lambda t: (leaky_relu(matmul(t, Tensor(b_mat)), 0.2) * 1.5).mean(),
            _away_from_kink(rng, (3, 4), margin=0.0) + 0.01,
        ),
    ]
    return cases
