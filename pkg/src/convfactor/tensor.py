"""Dense kernel-tensor primitives: reshaping, slicing, unfolding, SVD.

Every other module builds on the conventions fixed here (conventions
version 1):

* A conv kernel is stored as ``[c_in, c_out, k, k]`` (4-way) or reshaped to
  ``[c_in, c_out, k*k]`` (3-way); the flattened spatial index is
  ``j = ky * k + kx``.
* The mode-n unfolding of an ``I x J x K`` tensor puts the chosen mode along
  rows and orders columns with the earlier remaining axis varying fastest:
  mode-1 columns are ``j + J * kidx``, mode-2 columns ``i + I * kidx``,
  mode-3 columns ``i + I * j``.
* Computations run in float64; binary storage (see :mod:`convfactor.kt31`)
  is float32.

All functions are pure and treat their inputs as immutable.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .validation import as_float_array, check_finite, spatial_extent

#: Axis names of the 3-way kernel tensor, in storage order.
AXES = ("ci", "co", "k2")

#: Version of the flattening conventions documented above.
CONVENTIONS_VERSION = 1


def reshape_4to3(k4):
    """Flatten the two spatial axes of a 4-way kernel into one.

    Parameters
    ----------
    k4 : array, shape (ci, co, k, k)
        Dense kernel tensor with square spatial window.

    Returns
    -------
    array, shape (ci, co, k*k)
        Same values; spatial index ``j = ky * k + kx``.
    """
    arr = as_float_array(k4, ndim=4, what="4-way kernel tensor")
    ci, co, ky, kx = arr.shape
    if ky != kx:
        raise ShapeError(f"spatial axes must be square, got {ky}x{kx}")
    return arr.reshape(ci, co, ky * kx)


def reshape_3to4(g):
    """Inverse of :func:`reshape_4to3`; restores the input bit-exactly."""
    arr = as_float_array(g, ndim=3, what="3-way kernel tensor")
    k = spatial_extent(arr.shape[2])
    return arr.reshape(arr.shape[0], arr.shape[1], k, k)


def slice_tensor(t, axis, index):
    """Extract one slice of a 3-way kernel tensor.

    Parameters
    ----------
    t : array, shape (ci, co, k2)
    axis : {"ci", "co", "k2"}
        Which index to fix.  Fixing ``ci`` yields a (co, k2) matrix
        (a frontal slice), fixing ``co`` yields (ci, k2) (horizontal),
        fixing ``k2`` yields (ci, co) (lateral).
    index : int
        Position along the chosen axis.

    Returns
    -------
    array
        The 2-way slice, sharing values with ``t``.
    """
    arr = as_float_array(t, ndim=3, what="3-way kernel tensor")
    if axis not in AXES:
        raise ShapeError(f"axis must be one of {AXES}, got {axis!r}")
    ax = AXES.index(axis)
    extent = arr.shape[ax]
    if not 0 <= index < extent:
        raise ShapeError(f"index {index} out of range for axis {axis!r} of extent {extent}")
    if ax == 0:
        return arr[index]
    if ax == 1:
        return arr[:, index, :]
    return arr[:, :, index]


def frontal_slice(t, ci_index):
    """Fix an input-channel index; returns the (co, k2) matrix."""
    return slice_tensor(t, "ci", ci_index)


def horizontal_slice(t, co_index):
    """Fix an output-channel index; returns the (ci, k2) matrix."""
    return slice_tensor(t, "co", co_index)


def lateral_slice(t, k2_index):
    """Fix a spatial index; returns the (ci, co) matrix."""
    return slice_tensor(t, "k2", k2_index)


def matricize(t, mode):
    """Mode-n unfolding of a 3-way tensor.

    Parameters
    ----------
    t : array, shape (I, J, K)
    mode : {1, 2, 3}
        Axis (1-based) to place along the rows.

    Returns
    -------
    array
        Matrix of shape ``(extent_of_mode, product_of_the_rest)``.  Columns
        follow the package convention: remaining axes in increasing order,
        the earlier one varying fastest (mode-1 column index is
        ``j + J * kidx``).
    """
    arr = as_float_array(t, ndim=3, what="3-way tensor")
    if mode not in (1, 2, 3):
        raise ShapeError(f"mode must be 1, 2, or 3, got {mode!r}")
    ax = mode - 1
    return np.moveaxis(arr, ax, 0).reshape(arr.shape[ax], -1, order="F")


def refold(m, mode, dims):
    """Inverse of :func:`matricize`: fold a mode-n unfolding back to 3-way."""
    if mode not in (1, 2, 3):
        raise ShapeError(f"mode must be 1, 2, or 3, got {mode!r}")
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise ShapeError(f"dims must have 3 entries, got {len(dims)}")
    ax = mode - 1
    rest = [d for i, d in enumerate(dims) if i != ax]
    arr = as_float_array(m, ndim=2, what="unfolded matrix")
    if arr.shape != (dims[ax], rest[0] * rest[1]):
        raise ShapeError(
            f"matrix of shape {arr.shape} does not refold into {dims} along mode {mode}"
        )
    return np.moveaxis(arr.reshape([dims[ax]] + rest, order="F"), 0, ax)


def khatri_rao(a, b):
    """Column-wise Kronecker product.

    Column ``t`` of the result is ``kron(a[:, t], b[:, t])`` with the second
    factor varying fastest, matching the unfolding convention above
    (``unfold(T, 1) == A @ khatri_rao(C, B).T`` for a rank-R tensor with
    factors A, B, C).

    Parameters
    ----------
    a : array, shape (I, r)
    b : array, shape (J, r)

    Returns
    -------
    array, shape (I*J, r)
    """
    am = as_float_array(a, ndim=2, what="khatri_rao left factor")
    bm = as_float_array(b, ndim=2, what="khatri_rao right factor")
    if am.shape[1] != bm.shape[1]:
        raise ShapeError(
            f"column counts must match, got {am.shape[1]} and {bm.shape[1]}"
        )
    i, r = am.shape
    j = bm.shape[0]
    return (am[:, None, :] * bm[None, :, :]).reshape(i * j, r)


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``m == u @ diag(s) @ vt`` with a fixed sign convention.

    ``u`` has orthonormal columns (m x p), ``s`` is non-negative and
    descending (length p = min(m, n)), ``vt`` has orthonormal rows (p x n).
    """

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    @property
    def rank(self):
        """Numerical rank, using the numpy matrix_rank tolerance."""
        if self.s.size == 0 or self.s[0] == 0.0:
            return 0
        tol = self.s[0] * max(self.u.shape[0], self.vt.shape[1]) * np.finfo(np.float64).eps
        return int(np.count_nonzero(self.s > tol))


def svd(m):
    """Deterministic thin SVD.

    The sign of each left singular vector is fixed so that its
    largest-magnitude entry is positive (ties broken by lowest index);
    the matching row of ``vt`` is flipped along with it.  Two calls on the
    same matrix return bit-identical results.

    Parameters
    ----------
    m : array, shape (rows, cols)
        Matrix with finite entries.

    Returns
    -------
    SvdResult
    """
    arr = as_float_array(m, ndim=2, what="matrix")
    check_finite(arr, "svd input")
    u, s, vt = np.linalg.svd(arr, full_matrices=False)
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    u = u * signs
    vt = vt * signs[:, None]
    return SvdResult(u=u, s=s, vt=vt)


def top_singular_triplet(m):
    """Leading singular triplet ``(s1, u1, v1)`` of a matrix."""
    res = svd(m)
    return res.s[0], res.u[:, 0], res.vt[0, :]
