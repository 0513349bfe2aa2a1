"""Spectral radius estimates and exact tropical spectra of max-times matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cone import ConeVector, array_norm
from .errors import ConeSpecError, InvalidArgumentError
from .operators import ConeOperator, MaxTimesMatrix, orbit_lognorms

UPPER_BOUND_FROM_INF = "upper-bound-from-inf"
LIMSUP_LOCAL = "limsup-local"
EXACT_CYCLE_MEAN = "exact-cycle-mean"

# relative tolerance used to group equal spectral values and critical nodes
_VALUE_TOL = 1e-12
EIGEN_TOL = 1e-9


@dataclass(frozen=True)
class RadiusEstimate:
    horizon: int
    samples: tuple  # (n, ||T^n||^{1/n}) or (n, ||T^n x||^{1/n})
    running_min: tuple
    value: float
    kind: str
    window: Optional[tuple] = None

    def to_dict(self) -> dict:
        d = {
            "value": self.value,
            "horizon": self.horizon,
            "kind": self.kind,
            "samples": [[n, v] for n, v in self.samples],
        }
        if self.window is not None:
            d["window"] = list(self.window)
        return d


def _root(mant: float, exp2: int, n: int) -> float:
    if mant == 0.0:
        return 0.0
    return float(mant ** (1.0 / n) * 2.0 ** (exp2 / n))


def bonsall_radius(op: ConeOperator, H: int) -> RadiusEstimate:
    """Upper bound ``min_{n <= H} ||T^n||^{1/n}`` on the cone spectral radius."""
    if H < 1:
        raise InvalidArgumentError("horizon must be at least 1")
    mant, exp2 = op.power_norms_split(H)
    samples = tuple((n, _root(float(mant[n]), int(exp2[n]), n)) for n in range(1, H + 1))
    running = tuple(np.minimum.accumulate([v for _, v in samples]).tolist())
    return RadiusEstimate(H, samples, running, running[-1], UPPER_BOUND_FROM_INF)


def local_radius(op: ConeOperator, x: ConeVector, H: int) -> RadiusEstimate:
    """Trailing-window surrogate for ``limsup ||T^n x||^{1/n}``.

    The value is the largest sample over ``n in [ceil(H/2), H]``; an orbit
    that reaches zero gives exactly 0.
    """
    if H < 1:
        raise InvalidArgumentError("horizon must be at least 1")
    op.check_vector(x)
    if x.is_zero:
        raise InvalidArgumentError("local radius of the zero vector is undefined")
    logs = orbit_lognorms(op, x.values, H)
    with np.errstate(over="ignore"):
        vals = [0.0 if logs[n] == -math.inf else float(math.exp(logs[n] / n)) for n in range(1, H + 1)]
    samples = tuple(zip(range(1, H + 1), vals))
    running = tuple(np.minimum.accumulate(vals).tolist())
    lo = math.ceil(H / 2)
    if np.any(logs == -math.inf):
        value = 0.0
    else:
        value = max(vals[lo - 1 :])
    return RadiusEstimate(H, samples, running, value, LIMSUP_LOCAL, window=(lo, H))


# ---------------------------------------------------------------------------
# exact max-times quantities


def _matrix(A) -> np.ndarray:
    if isinstance(A, MaxTimesMatrix):
        return A.matrix
    return MaxTimesMatrix(A).matrix


def _max_cycle_log_mean(W: np.ndarray) -> float:
    """Karp's maximum cycle mean on log weights (``-inf`` = no edge).

    Walks start anywhere (``D_0 = 0``), which equals adding a zero-weight
    super source, so reducible graphs are handled directly.
    """
    n = W.shape[0]
    if n == 0:
        return -math.inf
    D = np.full((n + 1, n), -np.inf)
    D[0] = 0.0
    for k in range(1, n + 1):
        # D[k, v] = max_u D[k-1, u] + W[v, u]  (edge u -> v has weight W[v, u])
        D[k] = np.max(W + D[k - 1][None, :], axis=1)
    best = -math.inf
    for v in range(n):
        if D[n, v] == -math.inf:
            continue
        worst = math.inf
        for k in range(n):
            if D[k, v] == -math.inf:
                continue
            worst = min(worst, (D[n, v] - D[k, v]) / (n - k))
        best = max(best, worst)
    return best


def _log_weights(A: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(A > 0, np.log(np.where(A > 0, A, 1.0)), -np.inf)


def _from_log(lm: float) -> float:
    # exp(log(.)) drifts by an ulp or two; snap back when a short decimal is that close
    if lm == -math.inf:
        return 0.0
    v = math.exp(lm)
    short = float(f"{v:.13g}")
    return short if abs(short - v) <= 8e-16 * v else v


def cycle_mean_radius(A) -> float:
    """Maximum cycle geometric mean, i.e. the exact spectral radius of ``T_A``."""
    return _from_log(_max_cycle_log_mean(_log_weights(_matrix(A))))


def reachable_sets(A) -> list:
    """Nodes reachable from each node ``j`` along edges ``j -> i`` with ``a(i, j) > 0``."""
    M = _matrix(A) > 0
    n = M.shape[0]
    out = []
    for j in range(n):
        seen = np.zeros(n, dtype=bool)
        seen[j] = True
        frontier = [j]
        while frontier:
            k = frontier.pop()
            for i in np.flatnonzero(M[:, k] & ~seen):
                seen[i] = True
                frontier.append(int(i))
        out.append(np.flatnonzero(seen))
    return out


def basis_local_radii(A) -> dict:
    """``{j: r_{e_j}(T_A)}`` with 1-based ``j``: the best cycle mean reachable from ``j``."""
    mat = _matrix(A)
    W = _log_weights(mat)
    out = {}
    for j, nodes in enumerate(reachable_sets(mat)):
        out[j + 1] = _from_log(_max_cycle_log_mean(W[np.ix_(nodes, nodes)]))
    return out


def matrix_local_radius(A, x: ConeVector) -> float:
    """Exact ``r_x(T_A)``: the largest basis radius over the support of ``x``."""
    radii = basis_local_radii(A)
    support = np.flatnonzero(x.values)
    if support.size == 0:
        raise InvalidArgumentError("local radius of the zero vector is undefined")
    return max(radii[int(j) + 1] for j in support)


def _maxtimes_product(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return np.max(P[:, :, None] * Q[None, :, :], axis=1)


def kleene_star(S: np.ndarray) -> np.ndarray:
    """``I v S v S^2 v ...`` for a matrix whose cycle means are all at most 1."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    star = np.maximum(S, np.eye(n))
    for k in range(n):
        star = np.maximum(star, np.outer(star[:, k], star[k, :]))
    return star


@dataclass
class PointSpectrumEntry:
    t: float
    eigenvector: Optional[ConeVector]
    node: Optional[int] = None  # 1-based node whose star column gave the vector

    def to_dict(self) -> dict:
        d = {"t": self.t}
        if self.eigenvector is not None:
            d["eigenvector"] = self.eigenvector.values.tolist()
        return d


def _distinct(values) -> list:
    out = []
    for v in sorted(values, reverse=True):
        if not out or abs(out[-1] - v) > _VALUE_TOL * max(1.0, abs(v)):
            out.append(v)
    return out


def verify_eigenvector(op: ConeOperator, t: float, v: ConeVector, tol: float = EIGEN_TOL) -> bool:
    nrm = array_norm(v.values, op.space.norm)
    if nrm == 0:
        return False
    diff = op.apply_array(v.values) - t * v.values
    return array_norm(diff, op.space.norm) <= tol * max(t, 1.0) * nrm


def finite_point_spectrum(A) -> list:
    """Distinct basis radii, each with a verified eigenvector when one is found.

    For ``t > 0`` the support is restricted to nodes whose reachable cycle
    mean is at most ``t`` (a reach-closed set), the Kleene star of ``A/t``
    is formed there, and star columns at critical nodes are checked
    against ``A v = t v``. For ``t = 0`` the last nonzero orbit vector of a
    nilpotent basis orbit is used.
    """
    op = A if isinstance(A, MaxTimesMatrix) else MaxTimesMatrix(A)
    mat = op.matrix
    n = op.n
    radii = basis_local_radii(op)
    r = np.array([radii[j + 1] for j in range(n)])
    entries = []
    for t in _distinct(r.tolist()):
        vec, node = None, None
        if t > 0:
            U = np.flatnonzero(r <= t * (1 + _VALUE_TOL))
            S = mat[np.ix_(U, U)] / t
            star = kleene_star(S)
            plus = _maxtimes_product(S, star)
            for pos in np.flatnonzero(np.diag(plus) >= 1 - EIGEN_TOL):
                cand = np.zeros(n)
                cand[U] = star[:, pos]
                cand /= cand.max()
                v = ConeVector(op.space, cand)
                if verify_eigenvector(op, t, v):
                    vec, node = v, int(U[pos]) + 1
                    break
        else:
            for j in np.flatnonzero(r == 0):
                cur = np.zeros(n)
                cur[j] = 1.0
                nxt = op.apply_array(cur)
                while np.any(nxt):
                    cur, nxt = nxt, op.apply_array(nxt)
                v = ConeVector(op.space, cur / cur.max())
                if verify_eigenvector(op, 0.0, v):
                    vec, node = v, int(j) + 1
                    break
        entries.append(PointSpectrumEntry(t, vec, node))
    return entries


# ---------------------------------------------------------------------------
# reports


@dataclass
class LocalRadiusEntry:
    label: str
    estimate: RadiusEstimate
    exact: Optional[float] = None

    @property
    def value(self) -> float:
        return self.exact if self.exact is not None else self.estimate.value

    def to_dict(self) -> dict:
        d = {"value": self.value, "estimate": self.estimate.value, "window": list(self.estimate.window)}
        if self.exact is not None:
            d["exact"] = self.exact
        return d


@dataclass
class CertificateAttempt:
    t: float
    pair: object = None  # ApproxEigenpair or None
    reason: Optional[str] = None
    message: Optional[str] = None

    def to_dict(self) -> dict:
        if self.pair is not None:
            return self.pair.to_dict()
        return {"t": self.t, "residual": None, "path": None, "vector": None,
                "reason": self.reason, "message": self.message}


@dataclass
class SpectralReport:
    radius: RadiusEstimate
    radius_value: float
    radius_exact: bool
    local_radii: dict
    ap_interval: tuple
    point_spectrum: Optional[list] = None
    certificates: list = field(default_factory=list)
    clamped: bool = False

    def to_dict(self) -> dict:
        radius = self.radius.to_dict()
        radius["value"] = self.radius_value
        radius["exact"] = self.radius_exact
        radius["upper_bound"] = self.radius.value
        return {
            "radius": radius,
            "local_radii": {k: v.to_dict() for k, v in self.local_radii.items()},
            "ap_interval": list(self.ap_interval),
            "ap_interval_clamped": self.clamped,
            "point_spectrum": None if self.point_spectrum is None
            else [e.to_dict() for e in self.point_spectrum],
            "certificates": [c.to_dict() for c in self.certificates],
        }


def _label(x: ConeVector, i: int) -> str:
    nz = np.flatnonzero(x.values)
    if nz.size == 1 and x.values[nz[0]] == 1.0:
        return f"e_{int(nz[0]) + 1}"
    return f"x_{i + 1}"


def ap_spectrum_report(
    op: ConeOperator,
    test_set: Sequence[ConeVector],
    H: int,
    eps: float,
    *,
    n_targets: int = 5,
    approx_horizon: Optional[int] = None,
) -> SpectralReport:
    """Radius, local radii over ``test_set``, the certified interval and certificates.

    Every value in ``[max local radius, radius]`` lies in the approximate
    point spectrum when the test set attains the power norms; up to
    ``n_targets`` evenly spaced values get approximate-eigenvector
    certificates. Failed constructions are recorded with a reason code.
    """
    from .approx import approx_eigenvector

    test_set = list(test_set)
    if not test_set:
        raise InvalidArgumentError("test set must be nonempty")
    est = bonsall_radius(op, H)
    exact = isinstance(op, MaxTimesMatrix)
    upper = cycle_mean_radius(op) if exact else est.value

    local = {}
    for i, x in enumerate(test_set):
        if x.is_zero:
            raise InvalidArgumentError("test vectors must be nonzero")
        entry = LocalRadiusEntry(_label(x, i), local_radius(op, x, H),
                                 matrix_local_radius(op, x) if exact else None)
        local[entry.label] = entry
    lower = max(e.value for e in local.values())
    clamped = lower > upper
    if clamped:
        lower = upper

    if upper - lower <= _VALUE_TOL * max(1.0, upper):
        targets = [upper]
    else:
        targets = np.linspace(lower, upper, n_targets).tolist()
    certs = []
    for t in targets:
        try:
            pair = approx_eigenvector(op, t, eps, test_set, approx_horizon)
            certs.append(CertificateAttempt(t, pair))
        except ConeSpecError as err:
            certs.append(CertificateAttempt(t, None, err.reason, str(err)))

    return SpectralReport(
        radius=est,
        radius_value=upper,
        radius_exact=exact,
        local_radii=local,
        ap_interval=(lower, upper),
        point_spectrum=finite_point_spectrum(op) if exact else None,
        certificates=certs,
        clamped=clamped,
    )
