"""The layer set the network needs: depthwise and pointwise 1D convolutions
(same padding, stride 1), batch normalization, ReLU, dropout, residual
addition and global average pooling over time.

Functional ops build the autodiff graph; thin layer classes own parameters.
"""

from __future__ import annotations

import numpy as np

from .tensor import ShapeMismatch, Tensor, make_result


class DegenerateBatch(ValueError):
    """Train-mode batch norm needs at least two values per channel."""


# ---------------------------------------------------------------- functional


def depthwise_conv1d(
    x: Tensor, w: Tensor, bias: Tensor | None = None, dilation: int = 1
) -> Tensor:
    """Per-channel temporal convolution, zero same-padding, stride 1.

    x: [N, C, T], w: [C, k], bias: [C] or None.
    """
    if x.data.ndim != 3 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[0]:
        raise ShapeMismatch(f"x {x.data.shape} vs w {w.data.shape}")
    n, c, t = x.data.shape
    k = w.data.shape[1]
    half = k // 2
    pad = half * dilation
    xp = np.zeros((n, c, t + 2 * pad), dtype=x.data.dtype)
    xp[:, :, pad : pad + t] = x.data

    out = np.zeros((n, c, t), dtype=x.data.dtype)
    for j in range(k):
        off = j * dilation
        out += xp[:, :, off : off + t] * w.data[None, :, j : j + 1]
    if bias is not None:
        out += bias.data[None, :, None]

    parents = (x, w) if bias is None else (x, w, bias)

    def backward(g):
        gp = np.zeros_like(xp)
        for j in range(k):
            off = j * dilation
            gp[:, :, off : off + t] += g * w.data[None, :, j : j + 1]
        x.accumulate_grad(gp[:, :, pad : pad + t])
        gw = np.empty_like(w.data)
        for j in range(k):
            off = j * dilation
            gw[:, j] = np.sum(g * xp[:, :, off : off + t], axis=(0, 2))
        w.accumulate_grad(gw)
        if bias is not None:
            bias.accumulate_grad(np.sum(g, axis=(0, 2)))

    return make_result(out, parents, backward)


def pointwise_conv1d(x: Tensor, w: Tensor, bias: Tensor | None = None) -> Tensor:
    """1x1 convolution mixing channels: out[n,o,t] = sum_i w[o,i] x[n,i,t].

    x: [N, Cin, T], w: [Cout, Cin], bias: [Cout] or None.
    """
    if x.data.ndim != 3 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[1]:
        raise ShapeMismatch(f"x {x.data.shape} vs w {w.data.shape}")
    out = np.einsum("oi,nit->not", w.data, x.data, optimize=True)
    if bias is not None:
        out += bias.data[None, :, None]

    parents = (x, w) if bias is None else (x, w, bias)

    def backward(g):
        x.accumulate_grad(np.einsum("oi,not->nit", w.data, g, optimize=True))
        w.accumulate_grad(np.einsum("not,nit->oi", g, x.data, optimize=True))
        if bias is not None:
            bias.accumulate_grad(np.sum(g, axis=(0, 2)))

    return make_result(out, parents, backward)


def batch_norm1d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-3,
) -> Tensor:
    """Per-channel normalization over the (batch, time) axes.

    Train mode uses batch statistics and updates the running arrays in place
    via running <- (1 - momentum) * running + momentum * batch. Eval mode uses
    the running statistics.
    """
    n, c, t = x.data.shape
    if training:
        if n * t < 2:
            raise DegenerateBatch("need at least 2 values per channel")
        mean = x.data.mean(axis=(0, 2))
        var = x.data.var(axis=(0, 2))
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var
    else:
        mean = running_mean
        var = running_var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean[None, :, None]) * inv_std[None, :, None]
    out = gamma.data[None, :, None] * xhat + beta.data[None, :, None]

    def backward(g):
        gamma.accumulate_grad(np.sum(g * xhat, axis=(0, 2)))
        beta.accumulate_grad(np.sum(g, axis=(0, 2)))
        gxh = g * gamma.data[None, :, None]
        if training:
            m = n * t
            mean_g = gxh.mean(axis=(0, 2))
            mean_gx = (gxh * xhat).mean(axis=(0, 2))
            dx = inv_std[None, :, None] * (
                gxh - mean_g[None, :, None] - xhat * mean_gx[None, :, None]
            )
        else:
            dx = gxh * inv_std[None, :, None]
        x.accumulate_grad(dx)

    return make_result(out, (x, gamma, beta), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        x.accumulate_grad(g * mask)

    return make_result(np.where(mask, x.data, 0.0), (x,), backward)


def dropout(x: Tensor, p: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-p) so eval is the identity."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate {p} outside [0, 1)")
    if not training or p == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= p).astype(x.data.dtype) / (1.0 - p)

    def backward(g):
        x.accumulate_grad(g * keep)

    return make_result(x.data * keep, (x,), backward)


def residual_add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"{a.data.shape} vs {b.data.shape}")

    def backward(g):
        a.accumulate_grad(g)
        b.accumulate_grad(g)

    return make_result(a.data + b.data, (a, b), backward)


def global_avg_pool(x: Tensor) -> Tensor:
    """[N, C, T] -> [N, C] by mean over time."""
    n, c, t = x.data.shape

    def backward(g):
        x.accumulate_grad(np.broadcast_to(g[:, :, None] / t, (n, c, t)).copy())

    return make_result(x.data.mean(axis=2), (x,), backward)


# -------------------------------------------------------------------- layers


def uniform_fan_in(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class DepthwiseConv1d:
    def __init__(self, channels, kernel, dilation=1, bias=False,
                 rng=None, dtype=np.float32):
        rng = rng or np.random.default_rng()
        self.dilation = dilation
        self.weight = Tensor(
            uniform_fan_in(rng, (channels, kernel), kernel, dtype),
            requires_grad=True,
        )
        self.bias = Tensor(np.zeros(channels, dtype=dtype), requires_grad=True) \
            if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return depthwise_conv1d(x, self.weight, self.bias, self.dilation)

    def parameters(self):
        return {"weight": self.weight} | ({"bias": self.bias} if self.bias else {})


class PointwiseConv1d:
    def __init__(self, in_channels, out_channels, bias=False,
                 rng=None, dtype=np.float32):
        rng = rng or np.random.default_rng()
        self.weight = Tensor(
            uniform_fan_in(rng, (out_channels, in_channels), in_channels, dtype),
            requires_grad=True,
        )
        self.bias = Tensor(np.zeros(out_channels, dtype=dtype), requires_grad=True) \
            if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return pointwise_conv1d(x, self.weight, self.bias)

    def parameters(self):
        return {"weight": self.weight} | ({"bias": self.bias} if self.bias else {})


class BatchNorm1d:
    def __init__(self, channels, eps=1e-3, momentum=0.1, dtype=np.float32):
        self.eps = eps
        self.momentum = momentum
        self.gamma = Tensor(np.ones(channels, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(channels, dtype=dtype), requires_grad=True)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return batch_norm1d(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            training, self.momentum, self.eps,
        )

    def parameters(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}
