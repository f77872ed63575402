"""Dense tensor kernels used by every other module.

Tensors are plain ``numpy.ndarray`` objects of dtype float32 (rank 1 to 3,
row-major, last axis contiguous). Kernels compute in float64 where the
reduction length warrants it (convolution taps, normalization statistics)
and return float32, so results are stable enough to compare against naive
reference implementations at tight tolerances.

All functions are pure; none of them mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct as _scipy_dct
from scipy.special import erf as _erf

__all__ = [
    "ShapeError",
    "Conv1dParams",
    "conv1d",
    "layer_norm_channels",
    "gelu",
    "linear",
    "dct_ii",
]

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class ShapeError(ValueError):
    """Raised when tensor extents do not match an operation's contract."""

    def __init__(self, message: str, got, expected):
        super().__init__(f"{message}: got {tuple(got)}, expected {tuple(expected)}")
        self.got = tuple(got)
        self.expected = tuple(expected)


def _as_f32(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float32)


@dataclass(frozen=True)
class Conv1dParams:
    """Weights for a stride-1, zero-padded 1-D convolution.

    weight has shape [C_out, C_in // groups, K] and bias [C_out]. Every use
    in this package keeps padding == (K - 1) // 2 so the output length equals
    the input length; the kernel itself accepts any non-negative padding.
    """

    weight: np.ndarray
    bias: np.ndarray
    padding: int
    groups: int = 1

    def __post_init__(self):
        w = _as_f32(self.weight)
        b = _as_f32(self.bias)
        if w.ndim != 3:
            raise ShapeError("conv weight must be rank 3", w.shape, ("C_out", "C_in/g", "K"))
        if b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise ShapeError("conv bias must match C_out", b.shape, (w.shape[0],))
        if w.shape[2] % 2 != 1:
            raise ValueError(f"kernel size must be odd, got {w.shape[2]}")
        if self.padding < 0:
            raise ValueError(f"padding must be >= 0, got {self.padding}")
        if self.groups < 1 or w.shape[0] % self.groups != 0:
            raise ValueError(f"groups={self.groups} must divide C_out={w.shape[0]}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def c_out(self) -> int:
        return self.weight.shape[0]

    @property
    def c_in(self) -> int:
        return self.weight.shape[1] * self.groups

    @property
    def kernel(self) -> int:
        return self.weight.shape[2]


def conv1d(x: np.ndarray, p: Conv1dParams) -> np.ndarray:
    """Stride-1 grouped 1-D convolution (cross-correlation, no kernel flip).

    x: [C_in, L] -> [C_out, L + 2*padding - K + 1]. Accumulation runs in
    float64; the result is float32.
    """
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != p.c_in:
        raise ShapeError("conv1d input channels", x.shape, (p.c_in, "L"))
    length = x.shape[1]
    if length < 1:
        raise ShapeError("conv1d input length", x.shape, (p.c_in, ">=1"))
    k = p.kernel
    out_len = length + 2 * p.padding - k + 1
    if out_len < 1:
        raise ShapeError("conv1d output length would be empty", x.shape, (p.c_in, k - 2 * p.padding))

    xp = np.zeros((x.shape[0], length + 2 * p.padding), dtype=np.float64)
    xp[:, p.padding:p.padding + length] = x
    windows = sliding_window_view(xp, k, axis=1)  # [C_in, out_len, K]
    w64 = p.weight.astype(np.float64)

    if p.groups == p.c_in and p.c_in == p.c_out:
        # depthwise: one K-tap filter per channel
        out = np.einsum("clk,ck->cl", windows, w64[:, 0, :])
    elif p.groups == 1:
        cols = windows.transpose(0, 2, 1).reshape(p.c_in * k, out_len)
        out = w64.reshape(p.c_out, p.c_in * k) @ cols
    else:
        cig = p.c_in // p.groups
        cog = p.c_out // p.groups
        out = np.empty((p.c_out, out_len), dtype=np.float64)
        for g in range(p.groups):
            win = windows[g * cig:(g + 1) * cig]
            cols = win.transpose(0, 2, 1).reshape(cig * k, out_len)
            wg = w64[g * cog:(g + 1) * cog].reshape(cog, cig * k)
            out[g * cog:(g + 1) * cog] = wg @ cols
    out += p.bias.astype(np.float64)[:, None]
    return out.astype(np.float32)


def layer_norm_channels(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
                        eps: float = 1e-6) -> np.ndarray:
    """Normalize each frame (column) of x [C, F] over its C channels.

    Uses the population variance. Statistics accumulate in float64.
    """
    x = np.asarray(x)
    gamma = np.asarray(gamma)
    beta = np.asarray(beta)
    if x.ndim != 2:
        raise ShapeError("layer_norm input must be rank 2", x.shape, ("C", "F"))
    c = x.shape[0]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError("layer_norm gamma/beta", gamma.shape, (c,))
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    x64 = x.astype(np.float64)
    mean = x64.mean(axis=0)
    var = x64.var(axis=0)
    normed = (x64 - mean) / np.sqrt(var + eps)
    out = gamma.astype(np.float64)[:, None] * normed + beta.astype(np.float64)[:, None]
    return out.astype(np.float32)


def gelu(x: np.ndarray) -> np.ndarray:
    """Elementwise x * Phi(x) with the exact normal CDF (erf form)."""
    x = np.asarray(x)
    x64 = x.astype(np.float64)
    out = x64 * 0.5 * (1.0 + _erf(x64 * _INV_SQRT2))
    return out.astype(np.float32)


def linear(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Per-row affine map: x [F, D_in] @ weight.T [D_in, D_out] + bias."""
    x = np.asarray(x, dtype=np.float32)
    weight = np.asarray(weight, dtype=np.float32)
    bias = np.asarray(bias, dtype=np.float32)
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError("linear input vs weight", x.shape, ("F", weight.shape[1]))
    if bias.shape != (weight.shape[0],):
        raise ShapeError("linear bias", bias.shape, (weight.shape[0],))
    return x @ weight.T + bias


def dct_ii(x: np.ndarray) -> np.ndarray:
    """Orthonormal DCT-II of a 1-D vector (or of each row of a 2-D array).

    y[k] = s(k) * sum_n x[n] cos(pi (n + 1/2) k / N), with s(0) = sqrt(1/N)
    and s(k>0) = sqrt(2/N), so the transform matrix is orthonormal.
    """
    x = np.asarray(x)
    if x.ndim not in (1, 2):
        raise ShapeError("dct_ii input must be rank 1 or 2", x.shape, ("N",))
    if x.shape[-1] < 1:
        raise ShapeError("dct_ii needs N >= 1", x.shape, (">=1",))
    return _scipy_dct(x.astype(np.float64), type=2, norm="ortho", axis=-1).astype(np.float32)
