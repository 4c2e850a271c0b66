"""Channel pruning for pointwise-shift-pointwise modules.

The intermediate channels of a shift module are grouped by shift direction,
each group's rank-1 terms are summed into a (co, ci) matrix, and an SVD of
that matrix decides which principal filters survive.  Two selection
strategies exist: ``even`` keeps (as close as possible to) the same number
of dominant terms per group, ``uneven`` compares singular values across all
groups and keeps the global top.  The pruning ratio ``phi`` is the fraction
of intermediate channels retained.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .convolution import pointwise, shift_op
from .errors import ShapeError, ValidationError
from .tensor import svd
from .validation import check_odd_extent, round_half_up

STRATEGIES = ("even", "uneven")


@dataclass(frozen=True)
class ShiftModule:
    """A pointwise-shift-pointwise block.

    ``w_in`` is the (m, ci) entry pointwise matrix, ``shifts`` assigns each
    of the m intermediate channels a flattened shift index in [0, k*k), and
    ``w_out`` is the (co, m) exit pointwise matrix.
    """

    w_in: np.ndarray
    shifts: np.ndarray
    w_out: np.ndarray
    k: int

    def __post_init__(self):
        check_odd_extent(self.k)
        if self.w_in.ndim != 2 or self.w_out.ndim != 2:
            raise ShapeError("pointwise weights must be matrices")
        m = self.w_in.shape[0]
        if self.w_out.shape[1] != m or self.shifts.shape != (m,):
            raise ShapeError(
                f"inconsistent channel counts: w_in {self.w_in.shape}, "
                f"w_out {self.w_out.shape}, shifts {self.shifts.shape}"
            )
        if not np.issubdtype(self.shifts.dtype, np.integer):
            raise ShapeError("shift indices must be integers")
        if self.shifts.min() < 0 or self.shifts.max() >= self.k ** 2:
            raise ShapeError(f"shift indices must lie in [0, {self.k ** 2})")

    @property
    def m(self):
        """Number of intermediate (shifted) channels."""
        return self.w_in.shape[0]

    @property
    def ci(self):
        return self.w_in.shape[1]

    @property
    def co(self):
        return self.w_out.shape[0]

    @property
    def epsilon(self):
        """Expansion ratio: intermediate channels per exit output channel."""
        return Fraction(self.m, self.co)

    @property
    def n_params(self):
        return (self.ci + self.co) * self.m


@dataclass(frozen=True)
class PruneSpec:
    """Pruning ratio (new expansion over old) and selection strategy."""

    phi: Fraction
    strategy: str = "even"

    def __post_init__(self):
        phi = Fraction(self.phi)
        object.__setattr__(self, "phi", phi)
        if not 0 < phi <= 1:
            raise ValidationError(f"phi must lie in (0, 1], got {phi}")
        if self.strategy not in STRATEGIES:
            raise ValidationError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}"
            )


@dataclass(frozen=True)
class PruneReport:
    """What survived: per-group channel counts, singular values, importance.

    ``kept_counts[g]`` counts the new channels assigned to shift group g
    (structural zero-padding channels count toward the center group).
    ``retained[g]`` lists the retained singular values of group g, and
    ``importance`` is their per-group sum normalized to total 1 over the
    layer (uniform when the module is all-zero).
    """

    kept_counts: np.ndarray
    retained: tuple
    importance: np.ndarray

    @property
    def m_new(self):
        return int(self.kept_counts.sum())


def module_forward(x, module, stride=1):
    """Apply the module's pointwise-shift-pointwise map to a feature map."""
    mid = pointwise(x, module.w_in)
    mid = shift_op(mid, module.shifts, module.k, stride)
    return pointwise(mid, module.w_out)


def group_sum(module):
    """Sum each shift group's rank-1 terms into a (co, ci) matrix.

    Returns one matrix per flattened shift position (k*k of them); groups
    with no channels yield zero matrices.
    """
    mats = []
    for g in range(module.k ** 2):
        mask = module.shifts == g
        mats.append(module.w_out[:, mask] @ module.w_in[mask, :])
    return mats


def _select_even(decomps, avail, m_new, kk):
    kept = [min(m_new // kk, avail[g]) for g in range(kk)]
    slots = m_new - sum(kept)
    while slots > 0:
        candidates = [g for g in range(kk) if kept[g] < avail[g]]
        if not candidates:
            break
        candidates.sort(key=lambda g: (-decomps[g].s[kept[g]], g))
        for g in candidates[:slots]:
            kept[g] += 1
        slots -= min(slots, len(candidates))
    return kept


def _select_uneven(decomps, avail, m_new, kk):
    pool = [(decomps[g].s[l], g, l) for g in range(kk) for l in range(avail[g])]
    pool.sort(key=lambda e: (-e[0], e[1], e[2]))
    kept = [0] * kk
    for _, g, _ in pool[:m_new]:
        kept[g] += 1
    return kept


def prune(module, spec):
    """Prune a shift module to ``round(phi * m)`` intermediate channels.

    Each retained singular triplet (s, u, v) of a group's summed matrix
    becomes one new channel: entry row ``sqrt(s) * v``, exit column
    ``sqrt(s) * u``, shift = the group index.  When the groups cannot
    supply enough nonzero triplets (rank shortfall, or an all-zero module)
    the remaining channels are zero-weight with the center shift.

    Parameters
    ----------
    module : ShiftModule
    spec : PruneSpec

    Returns
    -------
    (ShiftModule, PruneReport)
    """
    if not isinstance(spec, PruneSpec):
        spec = PruneSpec(*spec) if isinstance(spec, tuple) else PruneSpec(Fraction(spec))
    kk = module.k ** 2
    m_new = round_half_up(spec.phi * module.m)
    if m_new < 1:
        raise ValidationError(
            f"phi={spec.phi} keeps {m_new} of {module.m} channels; need at least 1"
        )
    decomps = [svd(mat) for mat in group_sum(module)]
    avail = [res.rank for res in decomps]
    if spec.strategy == "even":
        kept = _select_even(decomps, avail, m_new, kk)
    else:
        kept = _select_uneven(decomps, avail, m_new, kk)

    rows, cols, shifts = [], [], []
    for g in range(kk):
        res = decomps[g]
        for l in range(kept[g]):
            root = np.sqrt(res.s[l])
            rows.append(root * res.vt[l, :])
            cols.append(root * res.u[:, l])
            shifts.append(g)
    center = (kk - 1) // 2
    n_pad = m_new - len(rows)
    for _ in range(n_pad):
        rows.append(np.zeros(module.ci))
        cols.append(np.zeros(module.co))
        shifts.append(center)

    pruned = ShiftModule(
        w_in=np.array(rows),
        shifts=np.array(shifts, dtype=np.int64),
        w_out=np.array(cols).T,
        k=module.k,
    )
    counts = np.array(kept, dtype=np.int64)
    counts[center] += n_pad
    retained = tuple(np.array(decomps[g].s[: kept[g]]) for g in range(kk))
    sums = np.array([r.sum() for r in retained])
    total = sums.sum()
    importance = sums / total if total > 0 else np.full(kk, 1.0 / kk)
    report = PruneReport(kept_counts=counts, retained=retained, importance=importance)
    return pruned, report


def retained_energy(report):
    """Sum of all retained singular values across the groups."""
    return float(sum(r.sum() for r in report.retained))
