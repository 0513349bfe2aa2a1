"""Concrete max-type (and additive) operators on the cones of :mod:`conespec.cone`.

All structured kinds share one banded storage so the compiled kernels in
:mod:`conespec.kernels` serve every family: row ``i`` of the operator
aggregates ``band[i, w] * x[lo[i] + w]`` by max (sup aggregation) or by
sum (sum aggregation).
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from . import kernels
from .cone import (
    EUCLIDEAN,
    NONNEGATIVE,
    SUP,
    UNIT_LOWER_BOUND,
    ConeSpace,
    ConeVector,
    CountableSparse,
    FiniteSet,
    UniformGrid,
    array_norm,
)
from .errors import ConeViolationError, DomainMismatchError, InvalidArgumentError

SUP_AGG = "sup"
SUM_AGG = "sum"

# snap tolerance when rounding window endpoints to grid indices
_GRID_SNAP = 1e-9


def _as_nonneg_matrix(entries) -> np.ndarray:
    A = np.array(entries, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidArgumentError(f"expected a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)) or np.any(A < 0):
        raise InvalidArgumentError("matrix entries must be finite and nonnegative")
    A.setflags(write=False)
    return A


class ConeOperator:
    """Positively homogeneous map of a cone into itself.

    Subclasses set the structural flags and implement :meth:`apply_array`.
    Banded kinds also implement :meth:`banded`, which unlocks the compiled
    orbit kernels.
    """

    kind = "operator"
    aggregation = SUP_AGG
    sup_preserving = True
    additive = False
    lipschitz: Optional[float] = None
    norm_bound: float = math.nan

    def __init__(self, space: ConeSpace):
        self.space = space
        self._pn_cache = None

    @property
    def agg_code(self) -> int:
        return 0 if self.aggregation == SUP_AGG else 1

    def apply_array(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def banded(self, length: int):
        """``(lo, band)`` for a working length, or None for unstructured kinds."""
        return None

    def check_vector(self, x: ConeVector):
        if x.space != self.space:
            raise DomainMismatchError("vector does not belong to the operator's cone")

    def apply(self, x: ConeVector) -> ConeVector:
        self.check_vector(x)
        return ConeVector(self.space, self.apply_array(x.values), check=False)

    def scaled(self, c: float) -> "ConeOperator":
        if not (c > 0 and np.isfinite(c)):
            raise InvalidArgumentError(f"scaling factor must be positive, got {c}")
        return ScaledOperator(self, c)

    def power_norms(self, H: int) -> np.ndarray:
        """``||T^n||`` for n = 0..H."""
        mant, exp2 = self.power_norms_split(H)
        with np.errstate(over="ignore"):
            return np.ldexp(mant, exp2.astype(np.int32))

    def power_norms_split(self, H: int):
        """``||T^n||`` as mantissa and power-of-two exponent arrays (no overflow)."""
        if self._pn_cache is None or self._pn_cache[0].shape[0] < H + 1:
            self._pn_cache = self._compute_power_norms(H)
        mant, exp2 = self._pn_cache
        return mant[: H + 1], exp2[: H + 1]

    def _compute_power_norms(self, H: int):
        if self.space.norm != SUP or self.space.is_sparse:
            raise NotImplementedError(f"no exact power norms for {self.kind}")
        lo, band = self.banded(self.space.dim)
        return kernels.power_norms(lo, band, H, self.agg_code)

    def default_seeds(self, count: Optional[int] = None) -> list:
        n = self.space.dim
        return [self.space.basis(j) for j in range(1, n + 1)]

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "aggregation": self.aggregation,
            "sup_preserving": self.sup_preserving,
            "additive": self.additive,
            "lipschitz": self.lipschitz,
            "norm_bound": self.norm_bound,
        }


class _BandedOperator(ConeOperator):
    def __init__(self, space, lo, band):
        super().__init__(space)
        self._lo = np.ascontiguousarray(lo, dtype=np.int64)
        self._band = np.ascontiguousarray(band, dtype=float)
        self._lo.setflags(write=False)
        self._band.setflags(write=False)

    def banded(self, length):
        return self._lo, self._band

    def apply_array(self, values):
        x = np.ascontiguousarray(values, dtype=float)
        if x.shape[0] != self._lo.shape[0]:
            raise DomainMismatchError(f"expected {self._lo.shape[0]} coordinates, got {x.shape[0]}")
        return kernels.band_apply(self._lo, self._band, x, self.agg_code)


class MaxTimesMatrix(_BandedOperator):
    """``(T x)_i = max_j a(i, j) x_j`` on the nonnegative orthant with the sup norm."""

    kind = "max-times-matrix"

    def __init__(self, entries):
        A = _as_nonneg_matrix(entries)
        n = A.shape[0]
        super().__init__(ConeSpace(FiniteSet(n), SUP, NONNEGATIVE), np.zeros(n, np.int64), A)
        self.matrix = A
        self.norm_bound = float(A.max())
        self.lipschitz = self.norm_bound

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


class SumMatrix(_BandedOperator):
    """Ordinary action ``(T x)_i = sum_j a(i, j) x_j`` of a nonnegative matrix."""

    kind = "sum-matrix"
    aggregation = SUM_AGG
    sup_preserving = False
    additive = True

    def __init__(self, entries):
        A = _as_nonneg_matrix(entries)
        n = A.shape[0]
        super().__init__(ConeSpace(FiniteSet(n), SUP, NONNEGATIVE), np.zeros(n, np.int64), A)
        self.matrix = A
        self.norm_bound = float(A.sum(axis=1).max())
        self.lipschitz = self.norm_bound

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


class MaxKernel(_BandedOperator):
    """Grid discretization of ``(T x)(s) = max_{t in [lo(s), hi(s)]} k(s, t) x(t)``.

    ``lo[i] <= hi[i]`` are grid indices; ``samples[i, j]`` holds the kernel at
    ``(s_i, s_j)`` and is only read inside the window of row ``i``.
    """

    kind = "max-kernel"

    def __init__(self, grid: UniformGrid, lo, hi, samples):
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        N = grid.N
        if lo.shape != (N,) or hi.shape != (N,):
            raise InvalidArgumentError("window arrays must have one entry per grid point")
        if np.any(lo < 0) or np.any(hi > N - 1) or np.any(lo > hi):
            raise InvalidArgumentError("windows must satisfy 0 <= lo <= hi <= N-1")
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (N, N):
            raise InvalidArgumentError(f"kernel samples must be {N}x{N}, got {samples.shape}")
        width = int((hi - lo).max()) + 1
        band = np.zeros((N, width))
        for i in range(N):
            row = samples[i, lo[i] : hi[i] + 1]
            band[i, : row.shape[0]] = row
        if not np.all(np.isfinite(band)) or np.any(band < 0):
            raise InvalidArgumentError("kernel samples must be finite and nonnegative")
        super().__init__(ConeSpace(grid, SUP, NONNEGATIVE), lo, band)
        self.grid = grid
        self.lo = lo
        self.hi = hi
        self.norm_bound = float(band.max())
        self.lipschitz = self.norm_bound
        lo.setflags(write=False)
        hi.setflags(write=False)

    @classmethod
    def from_functions(cls, a: float, N: int, kernel: Callable, lo: Callable, hi: Callable):
        """Sample ``kernel(s, t)`` on the grid and round windows inward.

        ``lo`` is rounded up and ``hi`` down to grid points, so the discrete
        window never reaches outside the continuous one.
        """
        grid = UniformGrid(a, N)
        s = grid.points
        lo_idx, hi_idx = window_indices(grid, lo(s), hi(s))
        S, T = np.meshgrid(s, s, indexing="ij")
        samples = np.broadcast_to(np.asarray(kernel(S, T), dtype=float), (N, N))
        return cls(grid, lo_idx, hi_idx, samples)

    def kernel_value(self, i: int, j: int) -> float:
        if not (self.lo[i] <= j <= self.hi[i]):
            return 0.0
        return float(self._band[i, j - self.lo[i]])

    def default_seeds(self, count=None):
        # all-ones first: it attains ||T^n|| for every n
        seeds = [self.space.ones()]
        seeds += [self.space.basis(j) for j in range(1, self.grid.N + 1)]
        return seeds


def window_indices(grid: UniformGrid, lo_vals, hi_vals):
    """Round window endpoints inward to grid indices (``lo`` up, ``hi`` down)."""
    scale = (grid.N - 1) / grid.a
    lo_vals = np.broadcast_to(np.asarray(lo_vals, dtype=float), (grid.N,))
    hi_vals = np.broadcast_to(np.asarray(hi_vals, dtype=float), (grid.N,))
    lo_idx = np.ceil(lo_vals * scale - _GRID_SNAP).astype(np.int64)
    hi_idx = np.floor(hi_vals * scale + _GRID_SNAP).astype(np.int64)
    lo_idx = np.clip(lo_idx, 0, grid.N - 1)
    hi_idx = np.clip(hi_idx, 0, grid.N - 1)
    if np.any(lo_idx > hi_idx):
        bad = int(np.flatnonzero(lo_idx > hi_idx)[0])
        raise InvalidArgumentError(f"window at grid point {bad} contains no grid point")
    return lo_idx, hi_idx


class ShiftOperator(ConeOperator):
    """Backward shift ``(x_1, x_2, ...) -> (x_2, x_3, ...)`` on finitely supported sequences.

    ``variant="linf"``: nonnegative cone, sup norm. ``variant="l2-cone"``:
    the cone of finite joins with coefficients at least 1, Euclidean norm.
    """

    kind = "shift"
    lipschitz = 1.0
    norm_bound = 1.0

    def __init__(self, variant: str = "linf"):
        if variant == "linf":
            space = ConeSpace(CountableSparse(), SUP, NONNEGATIVE)
        elif variant == "l2-cone":
            space = ConeSpace(CountableSparse(), EUCLIDEAN, UNIT_LOWER_BOUND)
        else:
            raise InvalidArgumentError(f"unknown shift variant {variant!r}")
        super().__init__(space)
        self.variant = variant

    def apply_array(self, values):
        x = np.asarray(values, dtype=float)
        out = np.zeros_like(x)
        out[:-1] = x[1:]
        return out

    def banded(self, length):
        lo = np.arange(1, length + 1, dtype=np.int64)
        band = np.ones((length, 1))
        return lo, band

    def power_norms_split(self, H):
        return np.ones(H + 1), np.zeros(H + 1, dtype=np.int64)

    def default_seeds(self, count=None):
        count = 10 if count is None else count
        return [self.space.basis(j) for j in range(1, count + 1)]

    def describe(self):
        d = super().describe()
        d["variant"] = self.variant
        return d


class ScaledOperator(ConeOperator):
    """``c * T`` for a positive constant ``c``."""

    def __init__(self, base: ConeOperator, c: float):
        super().__init__(base.space)
        self.base = base
        self.factor = float(c)
        self.kind = base.kind
        self.aggregation = base.aggregation
        self.sup_preserving = base.sup_preserving
        self.additive = base.additive
        self.lipschitz = None if base.lipschitz is None else base.lipschitz * self.factor
        self.norm_bound = base.norm_bound * self.factor

    def apply_array(self, values):
        return self.factor * self.base.apply_array(values)

    def banded(self, length):
        b = self.base.banded(length)
        if b is None:
            return None
        lo, band = b
        return lo, band * self.factor

    def power_norms_split(self, H):
        mant, exp2 = self.base.power_norms_split(H)
        n = np.arange(H + 1)
        with np.errstate(divide="ignore"):
            lg = np.log2(mant) + exp2 + n * math.log2(self.factor)
        alive = mant > 0
        e = np.where(alive, np.floor(np.where(alive, lg, 0.0)), 0.0)
        m = np.where(alive, np.exp2(np.where(alive, lg, 0.0) - e), 0.0)
        return m, e.astype(np.int64)

    def default_seeds(self, count=None):
        return self.base.default_seeds(count)


class FixtureOperator(ConeOperator):
    """Operator given by explicit coordinate rules (used for counterexamples)."""

    kind = "fixture"

    def __init__(
        self,
        space: ConeSpace,
        rule: Callable[[np.ndarray], np.ndarray],
        power_norm: Callable[[int], float],
        *,
        sup_preserving=True,
        additive=False,
        lipschitz=None,
        norm_bound=math.nan,
        membership: Optional[Callable[[np.ndarray], bool]] = None,
        seeds: Optional[list] = None,
    ):
        super().__init__(space)
        self._rule = rule
        self._power_norm = power_norm
        self.sup_preserving = sup_preserving
        self.additive = additive
        self.aggregation = SUM_AGG if additive and not sup_preserving else SUP_AGG
        self.lipschitz = lipschitz
        self.norm_bound = norm_bound
        self._membership = membership
        self._seeds = seeds or []

    def member(self, values) -> bool:
        if not self.space.contains(values):
            return False
        return True if self._membership is None else bool(self._membership(np.asarray(values)))

    def vector(self, values) -> ConeVector:
        if not self.member(values):
            raise ConeViolationError("vector violates the fixture cone's membership rule")
        return ConeVector(self.space, values)

    def apply_array(self, values):
        return np.asarray(self._rule(np.asarray(values, dtype=float)), dtype=float)

    def _compute_power_norms(self, H):
        vals = np.array([1.0] + [float(self._power_norm(n)) for n in range(1, H + 1)])
        m, e = np.frexp(vals)
        return m, e.astype(np.int64)

    def default_seeds(self, count=None):
        return list(self._seeds)


# ---------------------------------------------------------------------------
# operations


def apply(op: ConeOperator, x: ConeVector) -> ConeVector:
    return op.apply(x)


def power_orbit(op: ConeOperator, x: ConeVector, H: int) -> list:
    """``[x, T x, ..., T^H x]``."""
    if H < 0:
        raise InvalidArgumentError("orbit horizon must be nonnegative")
    op.check_vector(x)
    out = [x]
    cur = x.values
    for _ in range(H):
        cur = op.apply_array(cur)
        out.append(ConeVector(op.space, cur, check=False))
    return out


def power_norm(op: ConeOperator, n: int) -> float:
    """Exact cone operator norm ``||T^n||`` (``inf`` past float range)."""
    if n < 1:
        raise InvalidArgumentError("power_norm needs n >= 1")
    return float(op.power_norms(n)[n])


def log_power_norm(op: ConeOperator, n: int) -> float:
    mant, exp2 = op.power_norms_split(n)
    if mant[n] == 0:
        return -math.inf
    return math.log(mant[n]) + float(exp2[n]) * math.log(2.0)


# ---------------------------------------------------------------------------
# orbit machinery shared by the spectral and certificate modules


def orbit_lognorms(op: ConeOperator, values: np.ndarray, H: int) -> np.ndarray:
    """``log ||T^k x||`` for k = 0..H on a raw working array."""
    x = np.ascontiguousarray(values, dtype=float)
    b = op.banded(x.shape[0])
    nk = op.space.normkind
    if b is not None:
        return kernels.orbit_lognorms(b[0], b[1], x, int(H), op.agg_code, nk)
    out = np.full(H + 1, -np.inf)
    nrm = array_norm(x, op.space.norm)
    if nrm == 0:
        return out
    v = x / nrm
    acc = math.log(nrm)
    out[0] = acc
    for k in range(1, H + 1):
        v = op.apply_array(v)
        nrm = array_norm(v, op.space.norm)
        if nrm == 0:
            break
        v = v / nrm
        acc += math.log(nrm)
        out[k] = acc
    return out


def envelope(op: ConeOperator, values: np.ndarray, logc: np.ndarray):
    """Aggregate ``exp(logc[k]) * T^k x / ||T^k x||`` for k < len(logc).

    The aggregate uses the operator's own aggregation (max or sum).
    Returns the aggregate and the norms of all partial aggregates.
    """
    x = np.ascontiguousarray(values, dtype=float)
    logc = np.ascontiguousarray(logc, dtype=float)
    b = op.banded(x.shape[0])
    if b is not None:
        return kernels.envelope(b[0], b[1], x, logc, op.agg_code, op.space.normkind)
    R = logc.shape[0]
    out = np.zeros(x.shape[0])
    partial = np.zeros(R)
    nrm = array_norm(x, op.space.norm)
    if nrm == 0:
        return out, partial
    v = x / nrm
    alive = True
    for k in range(R):
        if k > 0 and alive:
            v = op.apply_array(v)
            nrm = array_norm(v, op.space.norm)
            if nrm == 0:
                alive = False
            else:
                v = v / nrm
        if alive and logc[k] > -math.inf:
            term = math.exp(logc[k]) * v
            out = np.maximum(out, term) if op.aggregation == SUP_AGG else out + term
        partial[k] = array_norm(out, op.space.norm)
    return out, partial

