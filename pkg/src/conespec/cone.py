"""Max-cones of nonnegative coordinate vectors.

Three index structures are supported: a finite set ``{1..n}``, a uniform
grid on ``[0, a]`` (sampled continuous functions) and the natural numbers
with finitely supported vectors. Vectors are immutable numpy arrays;
sparse vectors store index ``j`` (1-based) at array position ``j - 1``
with trailing zeros trimmed, which makes the representation canonical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import ConeViolationError, DomainMismatchError, InvalidArgumentError

SUP = "sup"
EUCLIDEAN = "euclidean"
NONNEGATIVE = "nonnegative"
UNIT_LOWER_BOUND = "unit-lower-bound"

# x <= y implies ||x|| <= M ||y||; both lattice norms used here give M = 1
NORMALITY_CONSTANT = 1.0

REL_TOL = 1e-12


@dataclass(frozen=True)
class FiniteSet:
    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise InvalidArgumentError(f"finite set size must be a positive integer, got {self.size}")


@dataclass(frozen=True)
class UniformGrid:
    a: float
    N: int

    def __post_init__(self):
        if not (self.a > 0 and np.isfinite(self.a)):
            raise InvalidArgumentError(f"grid endpoint must be positive, got {self.a}")
        if int(self.N) != self.N or self.N < 2:
            raise InvalidArgumentError(f"grid needs at least 2 points, got {self.N}")

    @property
    def size(self) -> int:
        return self.N

    @property
    def step(self) -> float:
        return self.a / (self.N - 1)

    @property
    def points(self) -> np.ndarray:
        pts = np.arange(self.N) * self.a / (self.N - 1)
        pts[-1] = self.a
        return pts


@dataclass(frozen=True)
class CountableSparse:
    pass


IndexDomain = Union[FiniteSet, UniformGrid, CountableSparse]


@dataclass(frozen=True)
class ConeSpace:
    domain: IndexDomain
    norm: str = SUP
    membership: str = NONNEGATIVE

    def __post_init__(self):
        if self.norm not in (SUP, EUCLIDEAN):
            raise InvalidArgumentError(f"unknown norm kind {self.norm!r}")
        if self.membership not in (NONNEGATIVE, UNIT_LOWER_BOUND):
            raise InvalidArgumentError(f"unknown membership rule {self.membership!r}")
        if self.norm == EUCLIDEAN and isinstance(self.domain, UniformGrid):
            raise InvalidArgumentError("Euclidean norm is not available on grid domains")
        if self.membership == UNIT_LOWER_BOUND and not self.is_sparse:
            raise InvalidArgumentError("unit-lower-bound membership requires a sparse domain")

    @property
    def is_sparse(self) -> bool:
        return isinstance(self.domain, CountableSparse)

    @property
    def dim(self):
        """Number of coordinates, or None for the sparse domain."""
        return None if self.is_sparse else self.domain.size

    @property
    def normkind(self) -> int:
        return 0 if self.norm == SUP else 1

    def contains(self, values) -> bool:
        v = np.asarray(values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v < 0):
            return False
        if not self.is_sparse and v.shape[0] != self.dim:
            return False
        if self.membership == UNIT_LOWER_BOUND:
            nz = v[v > 0]
            if nz.size and nz.min() < 1.0 - REL_TOL:
                return False
        return True

    def vector(self, values) -> "ConeVector":
        return ConeVector(self, values)

    def sparse(self, coords: Mapping[int, float]) -> "ConeVector":
        """Sparse vector from an ``{index: value}`` map with 1-based indices."""
        if not self.is_sparse:
            raise DomainMismatchError("index:value construction is only for sparse domains")
        if not coords:
            return ConeVector(self, np.zeros(0))
        top = max(coords)
        if min(coords) < 1:
            raise InvalidArgumentError("sparse indices start at 1")
        arr = np.zeros(top)
        for j, val in coords.items():
            arr[j - 1] = val
        return ConeVector(self, arr)

    def zeros(self, length: int = 0) -> "ConeVector":
        return ConeVector(self, np.zeros(length if self.is_sparse else self.dim))

    def ones(self) -> "ConeVector":
        if self.is_sparse:
            raise InvalidArgumentError("the all-ones vector has infinite support")
        return ConeVector(self, np.ones(self.dim))

    def basis(self, j: int) -> "ConeVector":
        """Indicator ``e_j`` of index ``j`` (1-based)."""
        if j < 1 or (not self.is_sparse and j > self.dim):
            raise InvalidArgumentError(f"basis index {j} out of range")
        arr = np.zeros(j if self.is_sparse else self.dim)
        arr[j - 1] = 1.0
        return ConeVector(self, arr)


class ConeVector:
    """An immutable element of a :class:`ConeSpace`."""

    __slots__ = ("space", "values")

    def __init__(self, space: ConeSpace, values, *, check: bool = True):
        arr = np.array(values, dtype=float).reshape(-1)
        if space.is_sparse:
            nz = np.flatnonzero(arr)
            arr = arr[: nz[-1] + 1] if nz.size else arr[:0]
        if check and not space.contains(arr):
            if not space.is_sparse and arr.shape[0] != space.dim:
                raise DomainMismatchError(
                    f"expected {space.dim} coordinates, got {arr.shape[0]}"
                )
            raise ConeViolationError("coordinates violate the cone membership rule")
        arr.setflags(write=False)
        self.space = space
        self.values = arr

    def __repr__(self):
        return f"ConeVector({self.values.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, ConeVector):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.values, other.values)

    __hash__ = None

    def __len__(self):
        return self.values.shape[0]

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def coordinates(self) -> dict:
        """Nonzero coordinates as ``{index: value}`` (1-based indices)."""
        return {int(j) + 1: float(self.values[j]) for j in np.flatnonzero(self.values)}

    def norm(self) -> float:
        return norm(self)


def _same_space(x: ConeVector, y: ConeVector):
    if x.space != y.space:
        raise DomainMismatchError("vectors belong to different cone spaces")


def aligned(x: ConeVector, y: ConeVector):
    """Coordinate arrays of ``x`` and ``y`` padded to a common length."""
    _same_space(x, y)
    a, b = x.values, y.values
    if a.shape[0] != b.shape[0]:
        n = max(a.shape[0], b.shape[0])
        a = np.pad(a, (0, n - a.shape[0]))
        b = np.pad(b, (0, n - b.shape[0]))
    return a, b


def sup_join(x: ConeVector, y: ConeVector) -> ConeVector:
    a, b = aligned(x, y)
    return ConeVector(x.space, np.maximum(a, b), check=False)


def array_norm(values, norm_kind: str) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0
    top = float(np.max(np.abs(v)))
    if norm_kind == SUP or top == 0.0:
        return top
    # scale first so tiny or huge coordinates neither underflow nor overflow
    w = v / top
    return top * float(np.sqrt(np.sum(w * w)))


def norm(x: ConeVector) -> float:
    return array_norm(x.values, x.space.norm)


def scale(c: float, x: ConeVector) -> ConeVector:
    if not (c >= 0 and np.isfinite(c)):
        raise InvalidArgumentError(f"scale factor must be a finite nonnegative number, got {c}")
    if x.space.membership == UNIT_LOWER_BOUND and c != 0 and not x.is_zero:
        smallest = float(x.values[x.values > 0].min())
        if c * smallest < 1.0 - REL_TOL:
            raise ConeViolationError(
                f"scaling by {c} pushes a coordinate below 1 (need c >= {1.0 / smallest})"
            )
    return ConeVector(x.space, c * x.values, check=False)


def difference(x: ConeVector, y: ConeVector) -> np.ndarray:
    """Signed coordinatewise ``x - y``; lives in the ambient lattice, not the cone."""
    a, b = aligned(x, y)
    return a - b


def into_cone(space: ConeSpace, values) -> tuple[ConeVector, float]:
    """Rescale a nonnegative array into ``space`` and return it with its norm.

    Ordinary cones get the unit-norm representative. Under the
    unit-lower-bound rule the smallest nonzero coordinate is scaled to 1
    instead, since unit-norm rescaling may leave that cone.
    """
    arr = np.asarray(values, dtype=float)
    nrm = array_norm(arr, space.norm)
    if nrm == 0.0:
        raise InvalidArgumentError("cannot rescale the zero vector")
    if space.membership == UNIT_LOWER_BOUND:
        arr = arr / arr[arr > 0].min()
    else:
        arr = arr / nrm
    v = ConeVector(space, arr)
    return v, norm(v)


def join_arrays(arrays) -> np.ndarray:
    """Coordinatewise maximum of a nonempty family of equal-length arrays."""
    return np.max(np.vstack([np.asarray(a, dtype=float) for a in arrays]), axis=0)


def birkhoff_gap(xs, ys, norm_kind: str = SUP) -> tuple[float, float]:
    """Both sides of ``||V x_j - V y_j|| <= sum_j ||x_j - y_j||``."""
    lhs = array_norm(join_arrays(xs) - join_arrays(ys), norm_kind)
    rhs = sum(array_norm(np.asarray(x, float) - np.asarray(y, float), norm_kind) for x, y in zip(xs, ys))
    return lhs, rhs


def sup_difference_bound(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the pointwise bound ``V x_j - V y_j <= V (x_j - y_j)``."""
    diffs = [np.asarray(x, float) - np.asarray(y, float) for x, y in zip(xs, ys)]
    return join_arrays(xs) - join_arrays(ys), join_arrays(diffs)


def sup_difference_norm_bound(xs, ys, norm_kind: str = SUP) -> tuple[float, float]:
    """Both sides of ``||V x_j - V y_j|| <= ||V (x_j - y_j)||``; needs ``x_j >= y_j >= 0``."""
    for x, y in zip(xs, ys):
        if np.any(np.asarray(x) < np.asarray(y)) or np.any(np.asarray(y) < 0):
            raise InvalidArgumentError("the norm form needs x_j >= y_j >= 0 coordinatewise")
    lhs, bound = sup_difference_bound(xs, ys)
    return array_norm(lhs, norm_kind), array_norm(bound, norm_kind)
