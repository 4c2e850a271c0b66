"""Input validation helpers used by the public entry points."""

import math
from fractions import Fraction

import numpy as np

from .errors import NumericError, ShapeError


def as_float_array(a, ndim=None, what="array"):
    """Coerce to a float64 ndarray, optionally enforcing the axis count."""
    arr = np.asarray(a, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeError(f"{what} must have {ndim} axes, got {arr.ndim}")
    if arr.size == 0:
        raise ShapeError(f"{what} must have all extents >= 1")
    return arr


def check_finite(arr, what="array"):
    if not np.isfinite(arr).all():
        raise NumericError(f"{what} contains non-finite values")
    return arr


def check_kernel3(g):
    """Validate a 3-way kernel tensor laid out as [c_in, c_out, k*k]."""
    return as_float_array(g, ndim=3, what="3-way kernel tensor")


def check_kernel4(k4):
    """Validate a 4-way kernel tensor laid out as [c_in, c_out, k, k]."""
    arr = as_float_array(k4, ndim=4, what="4-way kernel tensor")
    if arr.shape[2] != arr.shape[3]:
        raise ShapeError(
            f"spatial axes must be square, got {arr.shape[2]}x{arr.shape[3]}"
        )
    return arr


def check_feature_map(x):
    """Validate a feature map laid out as [channels, height, width]."""
    arr = as_float_array(x, ndim=3, what="feature map")
    return check_finite(arr, "feature map")


def check_stride(stride):
    if not isinstance(stride, (int, np.integer)) or stride < 1:
        raise ShapeError(f"stride must be a positive integer, got {stride!r}")
    return int(stride)


def spatial_extent(kk, what="spatial axis"):
    """Recover k from a flattened k*k extent; reject non-square extents."""
    k = math.isqrt(int(kk))
    if k * k != kk:
        raise ShapeError(f"{what} extent {kk} is not a perfect square")
    return k


def check_odd_extent(k):
    if k % 2 != 1:
        raise ShapeError(f"kernel extent must be odd, got {k}")
    return int(k)


def round_half_up(x):
    """Round a non-negative rational half-up to an int, without float drift."""
    f = Fraction(x)
    if f < 0:
        raise ValueError("round_half_up expects a non-negative value")
    return int((2 * f.numerator + f.denominator) // (2 * f.denominator))
