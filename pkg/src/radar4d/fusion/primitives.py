"""Inference-mode tensor primitives on single ``(C, H, W)`` float64 arrays.

Convolutions are cross-correlations (no kernel flip), matching the usual
deep-learning convention.  Weight layouts:

* ``conv2d``: ``(C_out, C_in // groups, kh, kw)``
* ``conv_transpose2d``: ``(C_in, C_out, kh, kw)``
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf, expit

from ..errors import DimensionError

EPS = 1e-5


def as_chw(x, name="input"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise DimensionError(f"{name} must be C x H x W, got shape {x.shape}")
    return x


def _pad(x, padding, mode):
    if padding == 0:
        return x
    np_mode = {"zeros": "constant", "replicate": "edge"}[mode]
    return np.pad(x, ((0, 0), (padding, padding), (padding, padding)), mode=np_mode)


def conv2d(x, weight, bias=None, stride=1, padding=0, groups=1, padding_mode="zeros"):
    x = as_chw(x)
    weight = np.asarray(weight, dtype=np.float64)
    c_in = x.shape[0]
    if weight.ndim != 4:
        raise DimensionError(f"conv2d weight must be 4-D, got shape {weight.shape}")
    c_out, c_per_group, kh, kw = weight.shape
    if c_in % groups or c_out % groups or c_per_group * groups != c_in:
        raise DimensionError(
            f"conv2d: input has {c_in} channels, weight {weight.shape} with groups={groups}"
        )
    xp = _pad(x, padding, padding_mode)
    if xp.shape[1] < kh or xp.shape[2] < kw:
        raise DimensionError(f"kernel {kh}x{kw} larger than padded input {xp.shape[1:]}")
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    ho, wo = win.shape[1:3]
    if groups == 1:
        out = np.tensordot(weight, win, axes=([1, 2, 3], [0, 3, 4]))
    elif groups == c_in == c_out:
        # depthwise: accumulate one kernel tap at a time
        out = np.zeros((c_out, ho, wo))
        for a in range(kh):
            for b in range(kw):
                out += weight[:, 0, a, b][:, None, None] * win[:, :, :, a, b]
    else:
        out = np.empty((c_out, ho, wo))
        og = c_out // groups
        for g in range(groups):
            out[g * og:(g + 1) * og] = np.tensordot(
                weight[g * og:(g + 1) * og],
                win[g * c_per_group:(g + 1) * c_per_group],
                axes=([1, 2, 3], [0, 3, 4]),
            )
    if bias is not None:
        out = out + np.asarray(bias, dtype=np.float64)[:, None, None]
    return out


def conv_transpose2d(x, weight, bias=None, stride=1, padding=0):
    """Adjoint of ``conv2d``: output size ``(H - 1) * stride - 2 * padding + kh``."""
    x = as_chw(x)
    weight = np.asarray(weight, dtype=np.float64)
    if weight.ndim != 4 or weight.shape[0] != x.shape[0]:
        raise DimensionError(
            f"conv_transpose2d: input has {x.shape[0]} channels, weight {weight.shape}"
        )
    _, c_out, kh, kw = weight.shape
    h, w = x.shape[1:]
    full = np.zeros((c_out, (h - 1) * stride + kh, (w - 1) * stride + kw))
    for a in range(kh):
        for b in range(kw):
            contrib = np.tensordot(weight[:, :, a, b], x, axes=([0], [0]))
            full[:, a:a + (h - 1) * stride + 1:stride, b:b + (w - 1) * stride + 1:stride] += contrib
    out = full[:, padding:full.shape[1] - padding, padding:full.shape[2] - padding]
    if out.shape[1] < 1 or out.shape[2] < 1:
        raise DimensionError("conv_transpose2d padding removes the whole output")
    if bias is not None:
        out = out + np.asarray(bias, dtype=np.float64)[:, None, None]
    return out


def batch_norm_inference(x, running_mean, running_var, weight=None, bias=None, eps=EPS):
    x = as_chw(x)
    c = x.shape[0]
    stats = [np.asarray(v, dtype=np.float64) for v in (running_mean, running_var)]
    if any(s.shape != (c,) for s in stats):
        raise DimensionError(f"batch_norm statistics must have shape ({c},)")
    scale = 1.0 / np.sqrt(stats[1] + eps)
    if weight is not None:
        scale = scale * weight
    out = (x - stats[0][:, None, None]) * scale[:, None, None]
    if bias is not None:
        out = out + np.asarray(bias)[:, None, None]
    return out


def layer_norm(x, weight=None, bias=None, eps=EPS):
    """Normalize over channels independently at every spatial position."""
    x = as_chw(x)
    mean = x.mean(axis=0, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=0, keepdims=True)
    out = (x - mean) / np.sqrt(var + eps)
    if weight is not None:
        if np.shape(weight) != (x.shape[0],):
            raise DimensionError(f"layer_norm weight must have shape ({x.shape[0]},)")
        out = out * np.asarray(weight)[:, None, None]
    if bias is not None:
        out = out + np.asarray(bias)[:, None, None]
    return out


def relu(x):
    return np.maximum(x, 0.0)


def gelu(x):
    """Exact (erf-based) GELU."""
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def sigmoid(x):
    return expit(np.asarray(x, dtype=np.float64))


def global_avg_pool(x):
    return as_chw(x).mean(axis=(1, 2))


def global_max_pool(x):
    return as_chw(x).max(axis=(1, 2))


def channel_avg_pool(x):
    return as_chw(x).mean(axis=0, keepdims=True)


def channel_max_pool(x):
    return as_chw(x).max(axis=0, keepdims=True)
