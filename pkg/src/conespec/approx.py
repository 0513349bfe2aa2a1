"""Certified approximate eigenvectors.

Given a target ``t``, the constructions here build cone vectors ``u`` with
small measured residual ``||T u - t u|| / ||u||``:

* zero target: a normalized orbit vector ``T^k x`` just before the orbit
  collapses;
* envelope construction (bounded orbit joins): ``u = V_k beta_k S^k x`` for
  ``S = T / t`` with a weight sequence peaking where ``||S^k x||`` is
  largest relative to a geometric reference;
* geometric-sum construction (unbounded orbit joins):
  ``y = V_j S^j x / s^{j+1}`` with ``s`` slightly above 1.

Sum-aggregated (additive) operators use sums in place of joins. The
returned residual is always measured directly on the original operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .cone import UNIT_LOWER_BOUND, ConeVector, array_norm, into_cone
from .errors import (
    ConeSpecError,
    DivergenceThresholdUnreachedError,
    HorizonExhaustedError,
    InvalidArgumentError,
    NotAPowerEigenvectorError,
    PreconditionError,
    TargetAboveRadiusError,
)
from .operators import SUP_AGG, ConeOperator, MaxTimesMatrix, envelope, orbit_lognorms

ZERO_TARGET = "zero-target"
GEOMETRIC_SUM = "geometric-sum"
BETA_ENVELOPE = "beta-envelope"

DECAY_TOL = 1e-6
LOG_HALF = math.log(0.5)
# slack on float products that are exactly 1 or at most 1 mathematically
_ULP_SLACK = 4 * 2.0**-52


# ---------------------------------------------------------------------------
# horizon parameters


@dataclass(frozen=True)
class HorizonParams:
    eps: float
    K: float
    m0: int
    n: int


def _exceeds(eps: float, K: float, p: int, m0: Optional[int]) -> bool:
    """``(1+eps)^p > 2/eps`` (m0 None) or ``(1+eps)^p > 2 K^m0 (1+eps)^m0``."""
    l = math.log1p(eps)
    lhs = p * l
    rhs = math.log(2.0 / eps) if m0 is None else math.log(2.0) + m0 * math.log(K) + m0 * l
    if abs(lhs - rhs) > 1e-9 * max(1.0, abs(rhs)) or p > 4096:
        return lhs > rhs
    # near tie: settle it in exact rational arithmetic
    q = 1 + Fraction(eps)
    if m0 is None:
        return q**p > 2 / Fraction(eps)
    return q**p > 2 * Fraction(K) ** m0 * q**m0


def horizon_params(eps: float, K: float) -> HorizonParams:
    """Smallest ``m0`` with ``(1+eps)^m0 > 2/eps`` and smallest ``n > m0``
    with ``(1+eps)^n > 2 K^m0 (1+eps)^m0``."""
    if not (eps > 0 and math.isfinite(eps)):
        raise InvalidArgumentError(f"eps must be positive, got {eps}")
    if not (K >= 1 and math.isfinite(K)):
        raise InvalidArgumentError(f"K must be at least 1, got {K}")
    l = math.log1p(eps)
    m0 = max(1, int(math.log(2.0 / eps) / l))
    while m0 > 1 and _exceeds(eps, K, m0 - 1, None):
        m0 -= 1
    while not _exceeds(eps, K, m0, None):
        m0 += 1
    n = max(m0 + 1, int((math.log(2.0) + m0 * math.log(K)) / l) + m0)
    while n > m0 + 1 and _exceeds(eps, K, n - 1, m0):
        n -= 1
    while not _exceeds(eps, K, n, m0):
        n += 1
    return HorizonParams(eps, K, m0, n)


# ---------------------------------------------------------------------------
# weight sequences


@dataclass(frozen=True)
class AlphaSequence:
    """Orbit norms ``alpha_k = ||T^k x||``, stored as logs (``-inf`` for 0)."""

    log_values: np.ndarray
    K: float = 1.0
    raw: Optional[np.ndarray] = None

    @classmethod
    def from_values(cls, values, K: float = 1.0) -> "AlphaSequence":
        v = np.asarray(values, dtype=float)
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise InvalidArgumentError("alpha values must be finite and nonnegative")
        with np.errstate(divide="ignore"):
            logs = np.log(v)
        return cls(logs, K, v)

    @property
    def values(self) -> np.ndarray:
        if self.raw is not None:
            return self.raw
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)

    def __len__(self):
        return self.log_values.shape[0]


def alpha_sequence(op: ConeOperator, x: ConeVector, H: int) -> AlphaSequence:
    return AlphaSequence(orbit_lognorms(op, x.values, H), max(op.norm_bound, 1.0))


@dataclass(frozen=True)
class BetaSequence:
    m: int
    n: int
    m0: int
    eps: float
    R: int
    log_alpha_m: float
    alpha_m: float

    def log_beta(self, k) -> np.ndarray:
        k = np.asarray(k)
        return -self.log_alpha_m - np.abs(k - self.m) * math.log1p(self.eps)

    def beta_at(self, k) -> np.ndarray:
        k = np.asarray(k)
        return (1.0 / self.alpha_m) * (1.0 + self.eps) ** (-np.abs(k - self.m).astype(float))

    @property
    def beta(self) -> np.ndarray:
        """``beta_k`` for k = 0..R."""
        return self.beta_at(np.arange(self.R + 1))

    def gamma(self, alpha: AlphaSequence) -> np.ndarray:
        """Reference values ``gamma_k = alpha_n (1+eps)^{|k-n|}`` for k = 0..R."""
        k = np.arange(self.R + 1)
        return alpha.values[self.n] * (1.0 + self.eps) ** np.abs(k - self.n).astype(float)


def build_beta(
    alpha: AlphaSequence,
    params: HorizonParams,
    H: int,
    *,
    anchor: Optional[int] = None,
    decay_tol: float = DECAY_TOL,
) -> BetaSequence:
    """Peaked weight sequence for an orbit-norm sequence.

    ``m`` is the first index maximizing ``alpha_k / gamma_k`` over ``k <= H``
    where ``gamma_k = alpha_n (1+eps)^{|k-n|}``; the weights are
    ``beta_k = alpha_m^{-1} (1+eps)^{-|k-m|}``. ``anchor`` overrides ``n``
    (default ``params.n``). ``R`` is the first index past ``m`` where
    ``alpha_R beta_{R+1} < decay_tol``.
    """
    n = params.n if anchor is None else int(anchor)
    la = np.asarray(alpha.log_values, dtype=float)[: H + 1]
    if H < n or la.shape[0] <= n:
        raise HorizonExhaustedError(f"horizon {H} does not reach the anchor index {n}")
    if not la[n] >= LOG_HALF:
        raise PreconditionError(f"anchor norm alpha_{n} is below 1/2")
    k = np.arange(la.shape[0])
    if alpha.K >= 1 and np.isfinite(la[0]):
        cap = la[0] + k * math.log(alpha.K) + 1e-12 * (1 + k)
        if np.any(la > cap):
            raise PreconditionError("alpha exceeds the growth bound K^k")
    l = math.log1p(params.eps)
    ratio = la - (la[n] + np.abs(k - n) * l)
    m = int(np.argmax(ratio))
    last = la.shape[0] - 1
    if m == last:
        raise HorizonExhaustedError(f"ratio alpha_k/gamma_k still peaking at the horizon {last}")
    if m < params.m0:
        raise PreconditionError(f"peak index {m} below m0={params.m0}; anchor too small")
    log_am = float(la[m])
    beta = BetaSequence(m, n, params.m0, params.eps, 0, log_am, float(math.exp(log_am)) if log_am < 709 else math.inf)
    # alpha_k beta_{k+1} for k = m..last-1
    kk = np.arange(m, last)
    decay = la[m:last] + beta.log_beta(kk + 1)
    hit = np.flatnonzero(decay < math.log(decay_tol))
    if hit.size == 0:
        raise HorizonExhaustedError("alpha_k beta_{k+1} has not decayed within the horizon")
    R = int(kk[hit[0]])
    if alpha.raw is not None:
        beta = BetaSequence(m, n, params.m0, params.eps, R, log_am, float(alpha.raw[m]))
    else:
        beta = BetaSequence(m, n, params.m0, params.eps, R, log_am, beta.alpha_m)
    return beta


def check_beta_invariants(alpha: AlphaSequence, beta: BetaSequence, decay_tol: float = DECAY_TOL) -> dict:
    """Evaluate each weight-sequence property on ``0..R``; returns name -> bool."""
    a = alpha.values[: beta.R + 2]
    b = beta.beta_at(np.arange(beta.R + 2))
    m, R, eps = beta.m, beta.R, beta.eps
    d = np.diff(b[: R + 1])
    return {
        "beta0_le_eps": bool(b[0] <= eps),
        "step_le_2eps": bool(np.all(np.abs(d) <= 2 * eps)),
        "increasing_to_peak": bool(np.all(d[:m] > 0)),
        "decreasing_after_peak": bool(np.all(d[m:] < 0)),
        "peak_product_one": bool(abs(a[m] * b[m] - 1.0) <= _ULP_SLACK),
        "products_le_one": bool(np.all(a[: R + 1] * b[: R + 1] <= 1.0 + _ULP_SLACK)),
        "tail_decay": bool(a[R] * b[R + 1] < decay_tol),
        "peak_ge_m0": bool(m >= beta.m0),
    }


def data_anchor(log_alpha: np.ndarray, params: HorizonParams) -> Optional[int]:
    """Smallest ``n > m0`` with ``alpha_n >= 1/2`` that already forces the peak past ``m0``.

    The a-priori choice from :func:`horizon_params` bounds ``alpha_k`` for
    ``k < m0`` by ``K^k``; measuring that prefix instead gives the condition
    ``alpha_n (1+eps)^{n-m0} > max_{k<m0} alpha_k``, which is implied by the
    a-priori one and is usually met far earlier.
    """
    la = log_alpha
    m0 = params.m0
    if la.shape[0] <= m0 + 1:
        return None
    prefix = float(np.max(la[:m0]))
    l = math.log1p(params.eps)
    k = np.arange(m0 + 1, la.shape[0])
    ok = (la[m0 + 1 :] >= LOG_HALF) & (la[m0 + 1 :] + (k - m0) * l > prefix)
    hit = np.flatnonzero(ok)
    return int(k[hit[0]]) if hit.size else None


# ---------------------------------------------------------------------------
# certificates


@dataclass
class ApproxEigenpair:
    t: float
    vector: ConeVector
    vector_norm: float
    residual: float
    path: str
    aggregation: str
    trace: dict = field(default_factory=dict)
    bound: Optional[float] = None

    def recheck(self, op: ConeOperator) -> float:
        return residual(op, self.t, self.vector)

    def to_dict(self) -> dict:
        v = self.vector
        if v.space.is_sparse:
            vec = [[j, val] for j, val in v.coordinates().items()]
        else:
            vec = v.values.tolist()
        return {
            "t": self.t,
            "residual": self.residual,
            "bound": self.bound,
            "path": self.path,
            "aggregation": self.aggregation,
            "vector_norm": self.vector_norm,
            "vector": vec,
            "trace": self.trace,
        }


def residual(op: ConeOperator, t: float, u: ConeVector) -> float:
    """``||T u - t u|| / ||u||`` from the signed coordinatewise difference."""
    op.check_vector(u)
    return _residual_array(op, t, u.values)


def _residual_array(op, t, values) -> float:
    nrm = array_norm(values, op.space.norm)
    if nrm == 0:
        raise InvalidArgumentError("residual of the zero vector is undefined")
    diff = op.apply_array(values) - t * np.asarray(values)
    return array_norm(diff, op.space.norm) / nrm


def _pair(op, t, arr, path, trace, bound=None) -> ApproxEigenpair:
    u, nrm = into_cone(op.space, arr)
    return ApproxEigenpair(float(t), u, nrm, residual(op, t, u), path, op.aggregation, trace, bound)


def _seed_arrays(seeds):
    for i, s in enumerate(seeds):
        arr = s.values if isinstance(s, ConeVector) else np.asarray(s, dtype=float)
        yield i, np.array(arr, dtype=float)


def _unit(op, arr):
    nrm = array_norm(arr, op.space.norm)
    return None if nrm == 0 else arr / nrm


def auto_horizon(eps: float) -> int:
    """Default search horizon: room for the peak past ``m0`` plus the envelope's decay."""
    p = horizon_params(eps, 1.0)
    return int(p.m0 + math.ceil((math.log(2.0 / eps) + 25.0) / math.log1p(eps)))


def zero_target_certificate(op: ConeOperator, eps: float, seeds, H: int) -> ApproxEigenpair:
    """Normalized ``T^k x`` with ``||T^{k+1} x|| < eps ||T^k x||``."""
    for i, arr in _seed_arrays(seeds):
        x = _unit(op, arr)
        if x is None:
            continue
        la = orbit_lognorms(op, x, H)
        with np.errstate(invalid="ignore"):
            drop = la[1:] - la[:-1]
        hit = np.flatnonzero(np.isfinite(la[:-1]) & ~(drop >= math.log(eps)))
        if hit.size == 0:
            continue
        k = int(hit[0])
        logc = np.full(k + 1, -np.inf)
        logc[k] = 0.0
        u, _ = envelope(op, x, logc)
        return _pair(op, 0.0, u, ZERO_TARGET, {"seed": i, "k": k}, bound=eps)
    raise HorizonExhaustedError(f"no seed orbit contracts by a factor {eps} within {H} steps")


def _case2(op, S, t, eps, params, seeds, H):
    reasons = []
    K_hat = S.norm_bound
    L_hat = S.lipschitz if S.lipschitz is not None else K_hat
    for i, arr in _seed_arrays(seeds):
        x = _unit(S, arr)
        if x is None:
            continue
        la = orbit_lognorms(S, x, H)
        n = data_anchor(la, params)
        if n is None:
            tail = la[params.m0 + 1 :]
            reasons.append("low" if tail.size and np.max(tail) < LOG_HALF else "horizon")
            continue
        alpha = AlphaSequence(la, params.K)
        try:
            beta = build_beta(alpha, params, H, anchor=n)
        except ConeSpecError:
            reasons.append("horizon")
            continue
        # truncation: first r > m with beta_r ||S^{r-1} x|| < eps
        ks = np.arange(beta.m + 1, la.shape[0])
        trunc = beta.log_beta(ks) + la[ks - 1]
        hit = np.flatnonzero(trunc < math.log(eps))
        if hit.size == 0:
            reasons.append("horizon")
            continue
        r = int(ks[hit[0]])
        logc = beta.log_beta(np.arange(r + 1)) + la[: r + 1]
        u, _ = envelope(S, x, logc)
        _, joins = envelope(S, x, la[: r + 1])
        M0_hat = float(joins[-1])
        if op.aggregation == SUP_AGG:
            bound = t * eps * (1 + 4 * M0_hat + K_hat**2)
        else:
            bound = t * (L_hat * (K_hat * eps + 4 * eps * M0_hat) + eps)
        trace = {"seed": i, "m": beta.m, "n": beta.n, "m0": params.m0, "n_apriori": params.n,
                 "r": r, "M0_hat": M0_hat, "K_hat": K_hat, "K": params.K}
        return _pair(op, t, u, BETA_ENVELOPE, trace, bound)
    if reasons and all(r == "low" for r in reasons):
        raise TargetAboveRadiusError(
            f"no seed keeps ||(T/t)^n x|| >= 1/2; t={t} is likely above the spectral radius"
        )
    raise HorizonExhaustedError(f"envelope construction did not settle within horizon {H}")


def case1_construct(op: ConeOperator, k: int, seeds, H: int) -> ApproxEigenpair:
    """Geometric-sum certificate at target 1 (rescale the operator first).

    Needs a seed whose orbit join (or sum) exceeds ``k`` in norm; the
    residual is then at most ``5/k`` for joins.
    """
    if k < 1:
        raise InvalidArgumentError("k must be a positive integer")
    reached = False
    for i, arr in _seed_arrays(seeds):
        x = _unit(op, arr)
        if x is None:
            continue
        la = orbit_lognorms(op, x, H)
        _, joins = envelope(op, x, la)
        over = np.flatnonzero(joins > k)
        if over.size == 0:
            continue
        reached = True
        n_k = int(over[0])
        t_k = min(1.0 + 1.0 / (2 * k), 2.0 ** (1.0 / (2 * (n_k + 1))))
        lt = math.log(t_k)
        # first r > n_k with ||T^{r+1} x|| / t_k^{r+1} < 1 (joins), or ||T^r x|| / t_k^r < 1 (sums)
        shift = 1 if op.aggregation == SUP_AGG else 0
        rs = np.arange(n_k + 1, la.shape[0] - shift)
        test = la[rs + shift] - (rs + shift) * lt
        hit = np.flatnonzero(test < 0)
        if hit.size == 0:
            continue
        r_k = int(rs[hit[0]])
        j = np.arange(r_k + 1)
        y, _ = envelope(op, x, la[: r_k + 1] - (j + 1) * lt)
        trace = {"seed": i, "n_k": n_k, "t_k": t_k, "r_k": r_k, "k": k}
        if op.aggregation == SUP_AGG:
            bound = 5.0 / k
        else:
            L = op.lipschitz if op.lipschitz is not None else op.norm_bound
            bound = (2 * (L + 1) + 1) / k
        return _pair(op, 1.0, y, GEOMETRIC_SUM, trace, bound)
    if not reached:
        raise DivergenceThresholdUnreachedError(
            f"no seed orbit join exceeds {k} within {H} steps (bounded joins)"
        )
    raise HorizonExhaustedError(f"geometric-sum truncation not found within {H} steps")


def approx_eigenvector(
    op: ConeOperator,
    t: float,
    eps: float,
    seeds: Optional[Iterable] = None,
    H: Optional[int] = None,
    *,
    fallback: bool = True,
) -> ApproxEigenpair:
    """Certificate for ``t`` in the approximate point spectrum.

    Tries the envelope construction first; if that fails or its measured
    residual exceeds its a-priori bound, the geometric-sum construction is
    tried with ``k = ceil(1/eps)`` and the smaller residual wins.
    """
    if not (t >= 0 and math.isfinite(t)):
        raise InvalidArgumentError(f"target must be a finite nonnegative number, got {t}")
    if not (eps > 0 and math.isfinite(eps)):
        raise InvalidArgumentError(f"eps must be positive, got {eps}")
    seeds = list(op.default_seeds() if seeds is None else seeds)
    if not seeds:
        raise InvalidArgumentError("at least one seed is required")
    if H is None:
        H = auto_horizon(eps)
    if t == 0:
        return zero_target_certificate(op, eps, seeds, H)

    S = op.scaled(1.0 / t)
    params = horizon_params(eps, max(S.norm_bound, 1.0))
    best, first_err = None, None
    try:
        best = _case2(op, S, t, eps, params, seeds, H)
    except ConeSpecError as err:
        first_err = err
    if fallback and (best is None or best.residual > best.bound):
        try:
            alt = case1_construct(S, max(1, math.ceil(1.0 / eps)), seeds, H)
            alt = _pair(op, t, alt.vector.values, GEOMETRIC_SUM, alt.trace, t * alt.bound)
            if best is None or alt.residual < best.residual:
                best = alt
        except ConeSpecError:
            pass
    if best is None:
        raise first_err
    best.trace["K_growth"] = params.K
    return best


def radius_witness_details(op: ConeOperator, H: int, seeds=None):
    """Witness vector plus the per-step picks and their orbit norms."""
    if H < 1:
        raise InvalidArgumentError("horizon must be at least 1")
    if op.aggregation == SUP_AGG and not op.sup_preserving:
        raise PreconditionError("join-based witness needs a monotone (sup-preserving) operator")
    if op.aggregation != SUP_AGG and not op.additive:
        raise PreconditionError("sum-based witness needs an additive operator")
    seeds = list(op.default_seeds(H + 1) if seeds is None else seeds)
    units, logs = [], []
    for _, arr in _seed_arrays(seeds):
        x = _unit(op, arr)
        if x is None:
            continue
        units.append(x)
        logs.append(orbit_lognorms(op, x, H))
    if not units:
        raise InvalidArgumentError("at least one nonzero seed is required")
    L = np.vstack(logs)
    width = max(u.shape[0] for u in units)
    acc = np.zeros(width)
    picks = []
    for k in range(1, H + 1):
        j = int(np.argmax(L[:, k]))
        picks.append(j)
        term = np.pad(units[j], (0, width - units[j].shape[0])) / k**2
        acc = np.maximum(acc, term) if op.aggregation == SUP_AGG else acc + term
    if op.space.membership == UNIT_LOWER_BOUND:
        vec, _ = into_cone(op.space, acc)
    else:
        vec = ConeVector(op.space, acc)
    with np.errstate(over="ignore"):
        pick_norms = np.array([math.exp(L[picks[k - 1], k]) for k in range(1, H + 1)])
    return vec, picks, pick_norms


def radius_witness(op: ConeOperator, H: int, seeds=None) -> ConeVector:
    """``x = V_k k^{-2} x_k`` (or the sum) where ``x_k`` nearly attains ``||T^k||``.

    Each ``x_k`` is the unit seed with the largest ``||T^k x_k||``, so
    ``||T^k x|| >= k^{-2} ||T^k x_k||`` for every ``k <= H``.
    """
    return radius_witness_details(op, H, seeds)[0]


def eigenvector_from_power(op: ConeOperator, y: ConeVector, t: float, m: int,
                           tol: float = 1e-9) -> ConeVector:
    """Turn ``T^m y = t^m y`` into an eigenvector ``x = y v S y v ... v S^{m-1} y``."""
    op.check_vector(y)
    if y.is_zero:
        raise InvalidArgumentError("y must be nonzero")
    if not (t > 0) or m < 1:
        raise InvalidArgumentError("need t > 0 and m >= 1")
    S = op.scaled(1.0 / t)
    norm = op.space.norm
    orbit = [np.asarray(y.values, dtype=float)]
    for _ in range(m):
        orbit.append(S.apply_array(orbit[-1]))
    ny = array_norm(orbit[0], norm)
    if array_norm(orbit[m] - orbit[0], norm) > tol * ny:
        raise NotAPowerEigenvectorError(f"(T/t)^{m} y differs from y")
    stack = np.vstack(orbit[:m])
    x = stack.max(axis=0) if op.aggregation == SUP_AGG else stack.sum(axis=0)
    if array_norm(S.apply_array(x) - x, norm) > tol * array_norm(x, norm):
        raise NotAPowerEigenvectorError("assembled vector fails T x = t x")
    return ConeVector(op.space, x)


def orbit_local_certificate(op: ConeOperator, x: ConeVector, eps: float, H: int,
                            approx_horizon: Optional[int] = None) -> ApproxEigenpair:
    """Certificate at ``t = r_x(T)`` seeded from the normalized orbit of ``x``."""
    from .spectral import local_radius, matrix_local_radius

    op.check_vector(x)
    if x.is_zero:
        raise InvalidArgumentError("x must be nonzero")
    if isinstance(op, MaxTimesMatrix):
        t = matrix_local_radius(op, x)
    else:
        t = local_radius(op, x, H).value
    seeds = []
    cur = np.asarray(x.values, dtype=float)
    for _ in range(H + 1):
        nrm = array_norm(cur, op.space.norm)
        if nrm == 0:
            break
        seeds.append(cur / nrm)
        cur = op.apply_array(seeds[-1])
    pair = approx_eigenvector(op, t, eps, seeds, approx_horizon)
    pair.trace["orbit_seed"] = True
    return pair
