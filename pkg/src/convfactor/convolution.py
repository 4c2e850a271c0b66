"""Reference 2-D convolution operators and the factored forward pipelines.

Correctness reference only, not tuned for speed.  Conventions:

* cross-correlation (no kernel flip), zero "same" padding of (k-1)/2,
  odd k only; output spatial extents are ceil(H/stride) x ceil(W/stride);
* feature maps are [channels, height, width];
* kernels are [c_in, c_out, k, k] (or flattened k*k vectors with
  j = ky*k + kx);
* a shift index j displaces content by (ky - (k-1)/2, kx - (k-1)/2) in
  reading direction: output pixel (y, x) reads input pixel
  (y + ky - p, x + kx - p) with p = (k-1)/2, so j = 0 moves content one
  pixel down-right for k = 3, and the center index (k*k - 1)/2 is the
  identity.  Vacated pixels are zero-filled.

Accumulation order is fixed (input channel, then ky, then kx), so repeated
runs are bit-identical.
"""

import numpy as np

from .errors import ShapeError
from .validation import (
    as_float_array,
    check_feature_map,
    check_kernel4,
    check_odd_extent,
    check_stride,
    spatial_extent,
)


def _out_extent(n, stride):
    return -(-n // stride)


def _padded(x, pad):
    c, h, w = x.shape
    xp = np.zeros((c, h + 2 * pad, w + 2 * pad))
    xp[:, pad : pad + h, pad : pad + w] = x
    return xp


def conv2d(x, k4, stride=1):
    """Direct convolution of a feature map with a 4-way kernel.

    Parameters
    ----------
    x : array, shape (ci, H, W)
    k4 : array, shape (ci, co, k, k) with odd k
    stride : int

    Returns
    -------
    array, shape (co, ceil(H/stride), ceil(W/stride))
    """
    x = check_feature_map(x)
    k4 = check_kernel4(k4)
    stride = check_stride(stride)
    ci, co, k, _ = k4.shape
    check_odd_extent(k)
    if x.shape[0] != ci:
        raise ShapeError(f"feature map has {x.shape[0]} channels, kernel expects {ci}")
    _, h, w = x.shape
    pad = (k - 1) // 2
    oh, ow = _out_extent(h, stride), _out_extent(w, stride)
    xp = _padded(x, pad)
    out = np.zeros((co, oh, ow))
    for i in range(ci):
        for ky in range(k):
            for kx in range(k):
                win = xp[i, ky : ky + stride * (oh - 1) + 1 : stride,
                         kx : kx + stride * (ow - 1) + 1 : stride]
                out += k4[i, :, ky, kx][:, None, None] * win[None, :, :]
    return out


def depthwise(x, kernels, stride=1):
    """Per-channel spatial convolution; ``kernels`` is (channels, k*k)."""
    x = check_feature_map(x)
    kernels = as_float_array(kernels, ndim=2, what="depthwise kernels")
    stride = check_stride(stride)
    c, h, w = x.shape
    if kernels.shape[0] != c:
        raise ShapeError(f"feature map has {c} channels, kernels cover {kernels.shape[0]}")
    k = check_odd_extent(spatial_extent(kernels.shape[1]))
    pad = (k - 1) // 2
    oh, ow = _out_extent(h, stride), _out_extent(w, stride)
    xp = _padded(x, pad)
    out = np.zeros((c, oh, ow))
    for ky in range(k):
        for kx in range(k):
            win = xp[:, ky : ky + stride * (oh - 1) + 1 : stride,
                     kx : kx + stride * (ow - 1) + 1 : stride]
            out += kernels[:, ky * k + kx][:, None, None] * win
    return out


def pointwise(x, mix):
    """1x1 convolution: mix channels at every pixel with a (co, ci) matrix."""
    x = check_feature_map(x)
    mix = as_float_array(mix, ndim=2, what="pointwise matrix")
    if mix.shape[1] != x.shape[0]:
        raise ShapeError(f"feature map has {x.shape[0]} channels, matrix expects {mix.shape[1]}")
    return np.einsum("oc,chw->ohw", mix, x)


def shift_op(x, shifts, extent, stride=1):
    """Displace each channel by its flattened shift index, zero-filling.

    Bit-identical to :func:`depthwise` with one-hot kernels
    ``e_shifts[c]`` of extent ``extent``.
    """
    x = check_feature_map(x)
    stride = check_stride(stride)
    k = check_odd_extent(int(extent))
    shifts = np.asarray(shifts)
    if shifts.shape != (x.shape[0],):
        raise ShapeError(
            f"need one shift per channel, got {shifts.shape} for {x.shape[0]} channels"
        )
    if not np.issubdtype(shifts.dtype, np.integer):
        raise ShapeError("shift indices must be integers")
    if shifts.size and (shifts.min() < 0 or shifts.max() >= k * k):
        raise ShapeError(f"shift indices must lie in [0, {k * k})")
    c, h, w = x.shape
    pad = (k - 1) // 2
    oh, ow = _out_extent(h, stride), _out_extent(w, stride)
    xp = _padded(x, pad)
    out = np.empty((c, oh, ow))
    for ch in range(c):
        ky, kx = divmod(int(shifts[ch]), k)
        out[ch] = xp[ch, ky : ky + stride * (oh - 1) + 1 : stride,
                     kx : kx + stride * (ow - 1) + 1 : stride]
    return out


def dp_forward(x, factors, stride=1):
    """Depthwise (per input channel) then pointwise; the DP pipeline."""
    return pointwise(depthwise(x, factors.spatial, stride), factors.mix)


def pd_forward(x, factors, stride=1):
    """Pointwise then depthwise (per output channel); the PD pipeline."""
    return depthwise(pointwise(x, factors.mix), factors.spatial, stride)


def pdp_forward(x, factors, stride=1):
    """Pointwise -> depthwise -> pointwise; the PDP bottleneck pipeline."""
    mid = pointwise(x, factors.a.T)
    mid = depthwise(mid, factors.c.T, stride)
    return pointwise(mid, factors.b)


def shift_forward(x, factors, stride=1):
    """Pointwise -> per-channel shift -> pointwise; the shift pipeline."""
    mid = pointwise(x, factors.in_factors.T)
    mid = shift_op(mid, factors.shifts, factors.kernel_extent, stride)
    return pointwise(mid, factors.out_factors)
