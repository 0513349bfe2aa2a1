"""Worked examples packaged as operators plus checkable expected facts.

Each fixture builds a cone space and operator and lists facts that are
evaluated lazily through the public operations of :mod:`conespec.spectral`
and :mod:`conespec.approx`. Use :func:`make_fixture` to build one and
:func:`verify_fixture` to evaluate its facts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from . import approx, spectral
from .cone import (
    REL_TOL,
    SUP,
    ConeSpace,
    ConeVector,
    CountableSparse,
    array_norm,
)
from .errors import ConeViolationError, InvalidArgumentError, UnknownFixtureError
from .operators import FixtureOperator, MaxKernel, MaxTimesMatrix, ShiftOperator, power_orbit

EQ = "eq"  # |observed - expected| <= tolerance
LE = "le"  # observed <= expected + tolerance
TRUE = "true"  # observed is True


@dataclass
class Fact:
    id: str
    description: str
    expected: Any
    compute: Callable[[], Any]
    tolerance: float = 0.0
    mode: str = EQ


@dataclass
class FactResult:
    id: str
    description: str
    expected: Any
    observed: Any
    tolerance: float
    mode: str
    passed: bool

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "description": self.description,
            "expected": _plain(self.expected),
            "observed": _plain(self.observed),
            "tolerance": self.tolerance,
            "mode": self.mode,
            "passed": self.passed,
        }


@dataclass
class FixtureSpec:
    name: str
    params: dict
    space: ConeSpace
    operator: Any
    facts: list
    seeds: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _check(fact: Fact, observed) -> bool:
    if fact.mode == TRUE:
        return observed is True
    if observed is None or (isinstance(observed, float) and math.isnan(observed)):
        return False
    if fact.mode == LE:
        return observed <= fact.expected + fact.tolerance
    if isinstance(fact.expected, (list, tuple)):
        return len(observed) == len(fact.expected) and all(
            abs(o - e) <= fact.tolerance for o, e in zip(observed, fact.expected)
        )
    return abs(observed - fact.expected) <= fact.tolerance


def verify_fixture(spec: FixtureSpec) -> list:
    """Evaluate every expected fact; failures inside a fact count as a fail."""
    results = []
    for fact in spec.facts:
        try:
            observed = fact.compute()
            ok = _check(fact, observed)
        except Exception as err:  # a crashing fact is a failing fact
            observed, ok = f"{type(err).__name__}: {err}", False
        results.append(FactResult(fact.id, fact.description, fact.expected, _plain(observed),
                                  fact.tolerance, fact.mode, bool(ok)))
    return results


def _ks(params, default):
    k = params.get("k", default)
    ks = tuple(int(v) for v in (k if isinstance(k, (list, tuple)) else [k]))
    if any(v < 1 for v in ks):
        raise InvalidArgumentError("k must be a positive integer")
    return ks


def _raises(fn, exc) -> bool:
    try:
        fn()
    except exc:
        return True
    return False


def _certificate_facts(op, t, eps, seeds, tag, H=None):
    """Residual within its own bound, and the stored residual rechecks."""
    cache = {}

    def pair():
        if "p" not in cache:
            cache["p"] = approx.approx_eigenvector(op, t, eps, seeds, H)
        return cache["p"]

    return [
        Fact(f"{tag}-within-bound", f"certificate at t={t:g}, eps={eps:g} meets its residual bound",
             True, lambda: bool(pair().residual <= pair().bound), mode=TRUE),
        Fact(f"{tag}-recheck", "stored residual equals a direct recomputation",
             0.0, lambda: abs(pair().recheck(op) - pair().residual), 1e-12),
    ]


# ---------------------------------------------------------------------------
# fixtures


def _backward_shift_l2(params):
    ks = _ks(params, (20, 100))
    need = max(k * k + 1 for k in ks)
    top = int(params.get("max_index", 1 << max(1, math.ceil(math.log2(need)))))
    if top < need:
        raise InvalidArgumentError(f"max_index must be at least {need} for k={max(ks)}")
    op = ShiftOperator("l2-cone")
    space = op.space
    ladder = [space.basis(1 << i) for i in range(int(math.log2(top)) + 1)]
    if (1 << (len(ladder) - 1)) != top:
        ladder.append(space.basis(top))
    H = top + 2
    tested = [space.basis(j) for j in (1, 2, 7, 64, 1000)] + [
        space.sparse({1: 1.0, 3: 2.5, 8: 1.0}),
        space.sparse({2: 4.0, 5: 1.0, 40: 3.0, 41: 1.5}),
    ]
    facts = [
        Fact("radius", "Bonsall radius equals 1", 1.0,
             lambda: spectral.bonsall_radius(op, 40).value),
        Fact("local-radii-zero", "largest local radius over the tested cone elements", 0.0,
             lambda: max(spectral.local_radius(op, x, 2 * len(x) + 2).value for x in tested)),
        Fact("membership", "coordinates below 1 are rejected", True,
             lambda: _raises(lambda: space.vector([1.0, 0.5]), ConeViolationError), mode=TRUE),
        Fact("norm", "Euclidean norm of (3, 4)", 5.0, lambda: space.vector([3.0, 4.0]).norm()),
    ]
    for k in ks:
        facts.append(Fact(
            f"case1-k{k}", f"geometric-sum residual at k={k} is at most 5/k", 5.0 / k,
            (lambda k=k: approx.case1_construct(op, k, ladder, H).residual), mode=LE))
    return FixtureSpec("backward-shift-l2", {"k": list(ks), "max_index": top}, space, op, facts,
                       ladder, {"horizon": H, "tested": tested})


def _linf_left_shift(params):
    top = int(params.get("max_index", 4096))
    op = ShiftOperator("linf")
    space = op.space
    basis = [space.basis(j) for j in range(1, 11)]
    ladder = [space.basis(1 << i) for i in range(int(math.log2(top)) + 1)]
    facts = [
        Fact("shift-e1", "T e_1 = 0", True, lambda: op.apply(space.basis(1)).is_zero, mode=TRUE),
        Fact("shift-ej", "T e_j = e_(j-1) for j = 2..10", True,
             lambda: all(op.apply(space.basis(j)) == space.basis(j - 1) for j in range(2, 11)),
             mode=TRUE),
        Fact("radius", "Bonsall radius equals 1", 1.0,
             lambda: spectral.bonsall_radius(op, 40).value),
        Fact("local-radii-zero", "local radii of e_1..e_10", 0.0,
             lambda: max(spectral.local_radius(op, x, 20).value for x in basis)),
        Fact("ap-interval", "certified interval from the basis test set", [0.0, 1.0],
             lambda: list(spectral.ap_spectrum_report(op, basis, 20, 1e-2, n_targets=2).ap_interval),
             1e-12),
    ]
    facts += _certificate_facts(op, 1.0, 1e-2, ladder, "cert-t1")
    facts += _certificate_facts(op, 0.5, 1e-2, ladder, "cert-t05")
    return FixtureSpec("linf-left-shift", {"max_index": top}, space, op, facts, ladder)


def _multiplication(params):
    N = int(params.get("N", 2001))
    ks = _ks(params, (2, 5, 10))
    idx = np.arange(N)
    op = MaxKernel.from_functions(1.0, N, lambda S, T: S, lambda s: s, lambda s: s)
    space = op.space
    s = op.grid.points

    def monomial(k):
        return ConeVector(space, s**k)

    facts = [
        Fact("radius", "Bonsall radius equals 1 exactly", 1.0,
             lambda: spectral.bonsall_radius(op, 50).value),
        Fact("fixed-support", "only the endpoint s=1 has unit multiplier, so fixed vectors live there",
             [float(N - 1)], lambda: [float(i) for i in idx[np.isclose(s, 1.0, rtol=0, atol=0)]]),
    ]
    for k in ks:
        expected = k**k / (k + 1) ** (k + 1)
        facts.append(Fact(f"residual-s^{k}", f"residual of s^{k} at t=1 matches k^k/(k+1)^(k+1)",
                          expected, (lambda k=k: approx.residual(op, 1.0, monomial(k))), 2.0 / N))
        facts.append(Fact(f"not-fixed-s^{k}", f"s^{k} is not a fixed vector", True,
                          (lambda k=k: approx.residual(op, 1.0, monomial(k)) > 0), mode=TRUE))
    cache = {}

    def cert():
        if "p" not in cache:
            cache["p"] = approx.approx_eigenvector(op, 1.0, 0.01)
        return cache["p"]

    facts.append(Fact("cert-t1", "envelope certificate at t=1, eps=0.01", 0.06,
                      lambda: cert().residual, mode=LE))
    facts.append(Fact("cert-t1-recheck", "stored residual equals a direct recomputation", 0.0,
                      lambda: abs(cert().recheck(op) - cert().residual), 1e-12))
    return FixtureSpec("multiplication", {"N": N, "k": list(ks)}, space, op, facts)


def _nonlip_index(j: int, family: int) -> int:
    """Array position of ``x_j`` (family 0), ``y_j`` (1) or ``z_j`` (2), 1-based ``j``."""
    return 3 * (j - 1) + family


def nonlipschitz_member(values) -> bool:
    """``beta_j = j alpha_j + j gamma_j`` for every ``j`` (relative tolerance)."""
    v = np.asarray(values, dtype=float)
    n = -(-v.shape[0] // 3)
    v = np.pad(v, (0, 3 * n - v.shape[0])).reshape(n, 3)
    j = np.arange(1, n + 1)
    want = j * v[:, 0] + j * v[:, 2]
    return bool(np.all(np.abs(v[:, 1] - want) <= REL_TOL * np.maximum(1.0, np.abs(want))))


def _nonlip_rule(values):
    v = np.asarray(values, dtype=float)
    n = -(-v.shape[0] // 3)
    a = np.pad(v, (0, 3 * n - v.shape[0])).reshape(n, 3)[:, 0]
    out = np.zeros((n, 3))
    out[:, 1] = np.arange(1, n + 1) * a
    out[:, 2] = a
    return out.reshape(-1)


def _sub(a, b):
    n = max(a.shape[0], b.shape[0])
    return np.pad(a, (0, n - a.shape[0])) - np.pad(b, (0, n - b.shape[0]))


def _nonlip_power_norm(n: int) -> float:
    return 1.0 if n == 1 else 0.0


def _non_lipschitz(params):
    ks = _ks(params, (10, 50))
    space = ConeSpace(CountableSparse(), SUP)
    seeds = []
    for k in ks:
        arr = np.zeros(3 * k)
        arr[_nonlip_index(k, 0)] = 1.0 / k
        arr[_nonlip_index(k, 1)] = 1.0
        seeds.append(ConeVector(space, arr))
    op = FixtureOperator(space, _nonlip_rule, _nonlip_power_norm, sup_preserving=True,
                         lipschitz=None, norm_bound=1.0, membership=nonlipschitz_member, seeds=seeds)
    facts = [
        Fact("power-norm-2", "T^2 = 0, so the radius is 0", 0.0, lambda: op.power_norms(2)[2]),
        Fact("radius", "Bonsall radius", 0.0, lambda: spectral.bonsall_radius(op, 5).value),
        Fact("membership", "beta_j != j alpha_j + j gamma_j is rejected", True,
             lambda: _raises(lambda: op.vector([1.0, 0.5, 0.0]), ConeViolationError), mode=TRUE),
        Fact("image-in-cone", "T u_k stays in the cone", True,
             lambda: all(op.member(op.apply_array(u.values)) for u in seeds), mode=TRUE),
    ]
    for k, u in zip(ks, seeds):
        def gap(u=u):
            return array_norm(_sub(op.apply_array(u.values), u.values), SUP)

        def ratio(u=u):
            Tu = op.apply_array(u.values)
            return array_norm(_sub(op.apply_array(Tu), Tu), SUP) / array_norm(_sub(Tu, u.values), SUP)

        facts += [
            Fact(f"unit-k{k}", f"||u_{k}|| = 1", 1.0, (lambda u=u: u.norm())),
            Fact(f"residual-k{k}", f"||T u_{k} - u_{k}|| = 1/{k}", 1.0 / k, gap),
            Fact(f"lipschitz-ratio-k{k}", f"||T^2 u_{k} - T u_{k}|| / ||T u_{k} - u_{k}|| = {k}",
                 float(k), ratio),
            Fact(f"square-zero-k{k}", f"T^2 u_{k} = 0", True,
                 (lambda u=u: not np.any(op.apply_array(op.apply_array(u.values)))), mode=TRUE),
        ]
    return FixtureSpec("non-lipschitz", {"k": list(ks)}, space, op, facts, seeds)


def _finite_kernel(params):
    A = np.asarray(params.get("matrix", [[3.0, 0.0], [1.0, 2.0]]), dtype=float)
    op = MaxTimesMatrix(A)
    space = op.space
    n = op.n
    basis = [space.basis(j) for j in range(1, n + 1)]
    exact = spectral.cycle_mean_radius(op)
    H = 60 * n
    cache = {}

    def report():
        if "r" not in cache:
            cache["r"] = spectral.ap_spectrum_report(op, basis, H, 1e-3)
        return cache["r"]

    def sound():
        certs = [c.pair for c in report().certificates if c.pair is not None]
        return all(p.t <= exact + 1e-3 for p in certs if p.residual <= 1e-6)

    facts = [
        Fact("radius-vs-cycle-mean", "finite-horizon radius bound approaches the max cycle mean",
             exact, lambda: spectral.bonsall_radius(op, H).value, 1e-6 * (1 + exact)),
        Fact("ones-attains-norm", "||A^n 1|| equals ||A^n|| along the whole horizon", True,
             lambda: bool(np.allclose(
                 [s for _, s in spectral.local_radius(op, space.ones(), H).samples],
                 [s for _, s in spectral.bonsall_radius(op, H).samples], rtol=1e-12, atol=0)),
             mode=TRUE),
        Fact("point-spectrum", "point spectrum values equal the distinct basis local radii",
             sorted(set(spectral.basis_local_radii(op).values())),
             lambda: sorted(e.t for e in spectral.finite_point_spectrum(op)), 1e-12),
        Fact("eigenvectors-verified", "every attached eigenvector satisfies Av = tv", True,
             lambda: all(spectral.verify_eigenvector(op, e.t, e.eigenvector)
                         for e in spectral.finite_point_spectrum(op) if e.eigenvector is not None),
             mode=TRUE),
        Fact("ap-interval-upper", "certified interval ends at the radius", exact,
             lambda: report().ap_interval[1], 1e-12),
        Fact("soundness", "certificates with residual <= 1e-6 never exceed the radius", True,
             sound, mode=TRUE),
    ]
    return FixtureSpec("finite-kernel", {"matrix": A.tolist()}, space, op, facts, basis)


def _interval_kernel(params):
    N = int(params.get("N", 201))
    if N < 2:
        raise InvalidArgumentError("N must be at least 2")
    op = MaxKernel.from_functions(
        1.0, N,
        lambda S, T: 1.0 + S * T,
        lambda s: s / 2.0,
        lambda s: np.minimum(s + 0.5, 1.0),
    )
    space = op.space
    dense = np.zeros((N, N))
    for i in range(N):
        for j in range(N):
            dense[i, j] = op.kernel_value(i, j)

    def basis_power_norms(nmax):
        # ||T^n|| = max_j ||T^n e_j||, via the dense max-times matrix of the kernel
        M = MaxTimesMatrix(dense)
        out = []
        for n in range(1, nmax + 1):
            best = 0.0
            for j in range(1, N + 1):
                best = max(best, power_orbit(M, M.space.basis(j), n)[n].norm())
            out.append(best)
        return out

    def submult():
        b = op.power_norms(12)
        return all(b[m + n] <= b[m] * b[n] * (1 + 1e-12)
                   for m in range(1, 7) for n in range(1, 7))

    facts = [
        Fact("bn-consistency", "power norms equal the max over grid indicators (n <= 4)",
             [float(v) for v in basis_power_norms(4)], lambda: op.power_norms(4)[1:].tolist(), 1e-12),
        Fact("bn-submultiplicative", "b_(m+n) <= b_m b_n", True, submult, mode=TRUE),
        Fact("radius", "the s=1 self-loop of weight 2 dominates", 2.0,
             lambda: spectral.bonsall_radius(op, 40).value, 1e-12),
    ]
    facts += _certificate_facts(op, 2.0, 1e-2, None, "cert-radius")
    return FixtureSpec("interval-kernel", {"N": N, "a": 1.0}, space, op, facts,
                       op.default_seeds())


FIXTURES = {
    "backward-shift-l2": _backward_shift_l2,
    "linf-left-shift": _linf_left_shift,
    "multiplication": _multiplication,
    "non-lipschitz": _non_lipschitz,
    "finite-kernel": _finite_kernel,
    "interval-kernel": _interval_kernel,
}

PARAMETERS = {
    "backward-shift-l2": {"k": "positive integers (default 20, 100)",
                          "max_index": "largest ladder index, at least k^2+1"},
    "linf-left-shift": {"max_index": "largest ladder index (default 4096)"},
    "multiplication": {"N": "grid size (default 2001)", "k": "monomial degrees (default 2, 5, 10)"},
    "non-lipschitz": {"k": "positive integers (default 10, 50)"},
    "finite-kernel": {"matrix": "nonnegative square matrix (default [[3,0],[1,2]])"},
    "interval-kernel": {"N": "grid size (default 201)"},
}


def make_fixture(name: str, params: Optional[dict] = None) -> FixtureSpec:
    if name not in FIXTURES:
        raise UnknownFixtureError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    return FIXTURES[name](dict(params or {}))
