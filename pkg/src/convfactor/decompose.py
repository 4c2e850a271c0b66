"""Factorized forms of a 3-way kernel tensor and their reconstructions.

Four factorizations are provided, each mapping one-to-one onto the weights
of an efficient conv block:

* :func:`dp_decompose` -- rank-1 factors of every frontal slice; a
  depthwise-then-pointwise (DP) block.
* :func:`pd_decompose` -- rank-1 factors of every horizontal slice; a
  pointwise-then-depthwise (PD) block.
* :func:`cpd_als` -- canonical polyadic decomposition fitted by alternating
  least squares; a pointwise-depthwise-pointwise (PDP) bottleneck.
* :func:`shift_extract` -- per-lateral-slice singular triplets pinned to
  one-hot spatial kernels; a pointwise-shift-pointwise block.

Singular values are split as ``sqrt(s)`` into both factors so the two sides
stay on comparable scales.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, ValidationError
from .tensor import khatri_rao, matricize, svd
from .validation import check_finite, check_kernel3, spatial_extent

_RIDGE_SCALE = 1e-12


@dataclass(frozen=True)
class DPFactors:
    """Depthwise-then-pointwise factors.

    ``spatial[i]`` is the k*k depthwise kernel of input channel ``i``;
    ``mix`` is the (co, ci) pointwise matrix.  The kernel entry they encode
    is ``kernel[i, o, j] ~= mix[o, i] * spatial[i, j]``.
    """

    spatial: np.ndarray
    mix: np.ndarray

    def __post_init__(self):
        if self.spatial.ndim != 2 or self.mix.ndim != 2:
            raise ShapeError("DPFactors fields must be matrices")
        if self.mix.shape[1] != self.spatial.shape[0]:
            raise ShapeError(
                f"mix has {self.mix.shape[1]} input channels, "
                f"spatial has {self.spatial.shape[0]}"
            )

    @property
    def n_params(self):
        ci, kk = self.spatial.shape
        co = self.mix.shape[0]
        return (co + kk) * ci


@dataclass(frozen=True)
class PDFactors:
    """Pointwise-then-depthwise factors.

    ``mix`` is the (co, ci) pointwise matrix; ``spatial[o]`` is the k*k
    depthwise kernel of output channel ``o``.  Encodes
    ``kernel[i, o, j] ~= mix[o, i] * spatial[o, j]``.
    """

    mix: np.ndarray
    spatial: np.ndarray

    def __post_init__(self):
        if self.spatial.ndim != 2 or self.mix.ndim != 2:
            raise ShapeError("PDFactors fields must be matrices")
        if self.mix.shape[0] != self.spatial.shape[0]:
            raise ShapeError(
                f"mix has {self.mix.shape[0]} output channels, "
                f"spatial has {self.spatial.shape[0]}"
            )

    @property
    def n_params(self):
        co, kk = self.spatial.shape
        ci = self.mix.shape[1]
        return (ci + kk) * co


@dataclass(frozen=True)
class CPDFactors:
    """Canonical polyadic factors ``kernel[i,o,j] ~= sum_t a[i,t] b[o,t] c[j,t]``.

    ``a`` is (ci, rank), ``b`` is (co, rank), ``c`` is (k*k, rank).
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    rank: int

    def __post_init__(self):
        for name, f in (("a", self.a), ("b", self.b), ("c", self.c)):
            if f.ndim != 2 or f.shape[1] != self.rank:
                raise ShapeError(f"factor {name} must have exactly {self.rank} columns")

    @property
    def n_params(self):
        return (self.a.shape[0] + self.b.shape[0] + self.c.shape[0]) * self.rank


@dataclass(frozen=True)
class ShiftLayerFactors:
    """Rank-1 terms pinned to one-hot spatial kernels.

    Term ``t`` contributes ``kernel[i, o, shifts[t]] += in_factors[i, t] *
    out_factors[o, t]``; all other spatial positions of the term are zero.
    ``kernel_extent`` is k, so every shift index lies in [0, k*k).
    """

    out_factors: np.ndarray
    in_factors: np.ndarray
    shifts: np.ndarray
    kernel_extent: int

    def __post_init__(self):
        if self.out_factors.ndim != 2 or self.in_factors.ndim != 2:
            raise ShapeError("shift factor fields must be matrices")
        n = self.out_factors.shape[1]
        if self.in_factors.shape[1] != n or self.shifts.shape != (n,):
            raise ShapeError("factor columns and shift list must align")
        kk = self.kernel_extent ** 2
        if n and (self.shifts.min() < 0 or self.shifts.max() >= kk):
            raise ShapeError(f"shift indices must lie in [0, {kk})")

    @property
    def n_terms(self):
        return self.out_factors.shape[1]

    @property
    def n_params(self):
        return (self.in_factors.shape[0] + self.out_factors.shape[0]) * self.n_terms

    @property
    def terms(self):
        """Iterate ``(u, v, shift)`` triples: output vector, input vector, index."""
        for t in range(self.n_terms):
            yield self.out_factors[:, t], self.in_factors[:, t], int(self.shifts[t])


def dp_decompose(g):
    """Rank-1 approximation of every frontal slice of a 3-way kernel.

    Parameters
    ----------
    g : array, shape (ci, co, k*k)

    Returns
    -------
    DPFactors
        For each input channel ``i``, ``(mix[:, i], spatial[i])`` is the top
        singular triplet of the (co, k*k) frontal slice with the singular
        value split as sqrt into both vectors.
    """
    arr = check_kernel3(g)
    check_finite(arr, "kernel tensor")
    ci, co, kk = arr.shape
    spatial = np.empty((ci, kk))
    mix = np.empty((co, ci))
    for i in range(ci):
        res = svd(arr[i])
        root = np.sqrt(res.s[0])
        mix[:, i] = root * res.u[:, 0]
        spatial[i] = root * res.vt[0, :]
    return DPFactors(spatial=spatial, mix=mix)


def pd_decompose(g):
    """Rank-1 approximation of every horizontal slice; mirror of dp_decompose.

    Parameters
    ----------
    g : array, shape (ci, co, k*k)

    Returns
    -------
    PDFactors
        For each output channel ``o``, ``(mix[o, :], spatial[o])`` is the top
        singular triplet of the (ci, k*k) horizontal slice.
    """
    arr = check_kernel3(g)
    check_finite(arr, "kernel tensor")
    ci, co, kk = arr.shape
    mix = np.empty((co, ci))
    spatial = np.empty((co, kk))
    for o in range(co):
        res = svd(arr[:, o, :])
        root = np.sqrt(res.s[0])
        mix[o, :] = root * res.u[:, 0]
        spatial[o] = root * res.vt[0, :]
    return PDFactors(mix=mix, spatial=spatial)


@dataclass(frozen=True)
class CpdFit:
    """Outcome of an ALS fit: best factors plus per-restart error curves."""

    factors: CPDFactors
    error_curves: list = field(repr=False)
    best_restart: int = 0

    @property
    def final_error(self):
        return self.error_curves[self.best_restart][-1]


def _rebalance(factors):
    # Spread each component's norm evenly over the three factors; keeps the
    # normal equations well conditioned without changing the reconstruction.
    norms = [np.linalg.norm(f, axis=0) for f in factors]
    ok = (norms[0] > 0) & (norms[1] > 0) & (norms[2] > 0)
    if not ok.any():
        return
    target = np.cbrt(norms[0] * norms[1] * norms[2])
    for f, n in zip(factors, norms):
        f[:, ok] *= target[ok] / n[ok]


def _solve_factor(unfolding, p, q):
    # Least-squares solve of  unfolding ~= F @ khatri_rao(p, q).T  for F,
    # through the normal equations with a tiny ridge so rank-deficient
    # factors never crash the sweep.
    gram = (p.T @ p) * (q.T @ q)
    ridge = _RIDGE_SCALE * np.trace(gram)
    if ridge <= 0.0:
        ridge = np.finfo(np.float64).tiny
    rhs = unfolding @ khatri_rao(p, q)
    return np.linalg.solve(gram + ridge * np.eye(gram.shape[0]), rhs.T).T


def _als_single(arr, rank, rng, max_iters, tol):
    ci, co, kk = arr.shape
    norm = np.linalg.norm(arr)
    denom = norm if norm > 0 else 1.0
    a = rng.uniform(-1.0, 1.0, (ci, rank))
    b = rng.uniform(-1.0, 1.0, (co, rank))
    c = rng.uniform(-1.0, 1.0, (kk, rank))
    unfoldings = [matricize(arr, mode) for mode in (1, 2, 3)]
    errors = []
    prev = None
    for _ in range(max_iters):
        a = _solve_factor(unfoldings[0], c, b)
        b = _solve_factor(unfoldings[1], c, a)
        c = _solve_factor(unfoldings[2], b, a)
        err = np.linalg.norm(arr - np.einsum("ir,or,jr->ioj", a, b, c)) / denom
        errors.append(err)
        if prev is not None and abs(prev - err) < tol * max(prev, np.finfo(np.float64).tiny):
            break
        prev = err
        _rebalance([a, b, c])
    return CPDFactors(a=a, b=b, c=c, rank=rank), errors


def cpd_als_fit(g, rank, *, max_iters=500, tol=1e-8, seed=0, restarts=1):
    """Fit a CPD by alternating least squares, keeping fit diagnostics.

    Parameters
    ----------
    g : array, shape (ci, co, k*k)
    rank : int
        Number of rank-1 components (>= 1).
    max_iters : int
        Sweep budget per restart.
    tol : float
        Stop a restart when the relative change of the fitting error drops
        below this.
    seed : int
        Base seed; each restart derives its own independent stream.
    restarts : int
        Number of random initializations; the best final error wins,
        ties broken by lowest restart index.

    Returns
    -------
    CpdFit
        Factors of the winning restart plus every restart's error curve
        (relative Frobenius error after each sweep, non-increasing within
        a restart).
    """
    arr = check_kernel3(g)
    check_finite(arr, "kernel tensor")
    if not isinstance(rank, (int, np.integer)) or rank < 1:
        raise ValidationError(f"rank must be an integer >= 1, got {rank!r}")
    if restarts < 1:
        raise ValidationError(f"restarts must be >= 1, got {restarts}")
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")
    if seed < 0:
        raise ValidationError(f"seed must be non-negative, got {seed}")
    best = None
    best_err = np.inf
    best_restart = 0
    curves = []
    for t in range(restarts):
        rng = np.random.default_rng([int(seed), t])
        factors, errors = _als_single(arr, int(rank), rng, max_iters, tol)
        curves.append(errors)
        if errors[-1] < best_err:
            best = factors
            best_err = errors[-1]
            best_restart = t
    return CpdFit(factors=best, error_curves=curves, best_restart=best_restart)


def cpd_als(g, rank, *, max_iters=500, tol=1e-8, seed=0, restarts=1):
    """Like :func:`cpd_als_fit` but returns only the winning factors."""
    return cpd_als_fit(
        g, rank, max_iters=max_iters, tol=tol, seed=seed, restarts=restarts
    ).factors


def shift_extract(g, budget):
    """Decompose into rank-1 terms pinned to one-hot spatial kernels.

    Every lateral slice is SVD-ed and all singular triplets are pooled
    globally; the ``budget`` largest singular values are kept (capped at the
    total pool size, at which point the decomposition is exact).  Ties are
    broken by (slice index, within-slice rank).

    Parameters
    ----------
    g : array, shape (ci, co, k*k) with k*k a perfect square
    budget : int
        Number of rank-1 terms to keep (>= 1).

    Returns
    -------
    ShiftLayerFactors
    """
    arr = check_kernel3(g)
    check_finite(arr, "kernel tensor")
    if not isinstance(budget, (int, np.integer)) or budget < 1:
        raise ValidationError(f"budget must be an integer >= 1, got {budget!r}")
    ci, co, kk = arr.shape
    k = spatial_extent(kk)
    decomps = [svd(arr[:, :, j]) for j in range(kk)]
    pool = [
        (decomps[j].s[l], j, l)
        for j in range(kk)
        for l in range(decomps[j].s.size)
    ]
    pool.sort(key=lambda e: (-e[0], e[1], e[2]))
    kept = sorted((j, l) for _, j, l in pool[: int(budget)])
    out = np.empty((co, len(kept)))
    inp = np.empty((ci, len(kept)))
    shifts = np.empty(len(kept), dtype=np.int64)
    for t, (j, l) in enumerate(kept):
        res = decomps[j]
        root = np.sqrt(res.s[l])
        inp[:, t] = root * res.u[:, l]
        out[:, t] = root * res.vt[l, :]
        shifts[t] = j
    return ShiftLayerFactors(
        out_factors=out, in_factors=inp, shifts=shifts, kernel_extent=k
    )


def reconstruct_dp(factors):
    """Dense 3-way tensor encoded by DP factors."""
    return np.einsum("oi,ij->ioj", factors.mix, factors.spatial)


def reconstruct_pd(factors):
    """Dense 3-way tensor encoded by PD factors."""
    return np.einsum("oi,oj->ioj", factors.mix, factors.spatial)


def reconstruct_cpd(factors):
    """Dense 3-way tensor encoded by CPD factors."""
    return np.einsum("ir,or,jr->ioj", factors.a, factors.b, factors.c)


def reconstruct_shift(factors):
    """Dense 3-way tensor encoded by shift-layer factors."""
    ci = factors.in_factors.shape[0]
    co = factors.out_factors.shape[0]
    kk = factors.kernel_extent ** 2
    out = np.zeros((ci, co, kk))
    for u, v, j in factors.terms:
        out[:, :, j] += np.outer(v, u)
    return out


def relative_error(approx, reference):
    """Frobenius-norm relative reconstruction error."""
    ref = np.asarray(reference, dtype=np.float64)
    norm = np.linalg.norm(ref)
    return float(np.linalg.norm(np.asarray(approx, dtype=np.float64) - ref) / (norm if norm > 0 else 1.0))
