import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conespec.cone import (
    EUCLIDEAN,
    NONNEGATIVE,
    SUP,
    UNIT_LOWER_BOUND,
    ConeSpace,
    ConeVector,
    CountableSparse,
    FiniteSet,
    UniformGrid,
    birkhoff_gap,
    difference,
    into_cone,
    norm,
    scale,
    sup_difference_bound,
    sup_difference_norm_bound,
    sup_join,
)
from conespec.errors import ConeViolationError, DomainMismatchError, InvalidArgumentError

F2 = ConeSpace(FiniteSet(2))
F5 = ConeSpace(FiniteSet(5))

coords = st.floats(0, 1e3, allow_nan=False, allow_infinity=False)
vec5 = arrays(np.float64, 5, elements=coords)
signed = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def family(draw_len, dim):
    return st.lists(arrays(np.float64, dim, elements=coords), min_size=draw_len, max_size=draw_len)


def test_domain_validation():
    with pytest.raises(InvalidArgumentError):
        FiniteSet(0)
    with pytest.raises(InvalidArgumentError):
        UniformGrid(0.0, 5)
    with pytest.raises(InvalidArgumentError):
        UniformGrid(1.0, 1)
    with pytest.raises(InvalidArgumentError):
        ConeSpace(UniformGrid(1.0, 5), EUCLIDEAN)
    with pytest.raises(InvalidArgumentError):
        ConeSpace(FiniteSet(3), SUP, UNIT_LOWER_BOUND)


def test_grid_points_include_endpoints():
    g = UniformGrid(0.3, 7)
    pts = g.points
    assert pts[0] == 0.0 and pts[-1] == 0.3
    assert np.all(np.diff(pts) > 0)


def test_sup_join_examples():
    x = F2.vector([1.0, 0.0])
    assert sup_join(x, x) == x
    assert sup_join(x, F2.vector([0.0, 2.0])) == F2.vector([1.0, 2.0])


def test_sup_join_domain_mismatch():
    with pytest.raises(DomainMismatchError):
        sup_join(F2.vector([1, 0]), ConeSpace(FiniteSet(2), EUCLIDEAN).vector([1, 0]))


def test_sup_join_random_pairs_match_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(100):
        a, b = rng.random(5), rng.random(5)
        got = sup_join(F5.vector(a), F5.vector(b)).values
        assert all(got[i] == max(a[i], b[i]) for i in range(5))


def test_norm_examples():
    assert norm(F2.zeros()) == 0.0
    assert norm(F2.vector([1.0, 2.0])) == 2.0
    assert norm(ConeSpace(FiniteSet(2), EUCLIDEAN).vector([3.0, 4.0])) == 5.0


def test_scale_examples():
    x = F2.vector([1.0, 3.0])
    assert scale(1.0, x) == x
    assert scale(0.0, x).is_zero
    assert scale(2.0, x) == F2.vector([2.0, 6.0])
    with pytest.raises(InvalidArgumentError):
        scale(-1.0, x)


def test_unit_lower_bound_membership_and_scaling():
    L2 = ConeSpace(CountableSparse(), EUCLIDEAN, UNIT_LOWER_BOUND)
    x = L2.sparse({1: 2.0, 4: 1.0})
    assert x.values.tolist() == [2.0, 0.0, 0.0, 1.0]
    with pytest.raises(ConeViolationError):
        L2.vector([0.5])
    with pytest.raises(ConeViolationError):
        scale(0.5, x)
    assert scale(0.0, x).is_zero
    assert scale(3.0, x).coordinates() == {1: 6.0, 4: 3.0}


def test_into_cone_rescaling():
    L2 = ConeSpace(CountableSparse(), EUCLIDEAN, UNIT_LOWER_BOUND)
    v, nrm = into_cone(L2, [0.5, 0.25])
    assert v.values.tolist() == [2.0, 1.0] and nrm == pytest.approx(5**0.5)
    u, nrm = into_cone(F2, [0.5, 0.25])
    assert u.values.tolist() == [1.0, 0.5] and nrm == 1.0
    with pytest.raises(InvalidArgumentError):
        into_cone(F2, [0.0, 0.0])


def test_sparse_vectors_are_canonical():
    S = ConeSpace(CountableSparse())
    assert S.vector([1.0, 0.0, 0.0]) == S.basis(1)
    assert difference(S.basis(3), S.basis(1)).tolist() == [-1.0, 0.0, 1.0]


def test_dense_length_mismatch():
    with pytest.raises(DomainMismatchError):
        F2.vector([1.0, 2.0, 3.0])
    with pytest.raises(ConeViolationError):
        F2.vector([1.0, -2.0])


def test_vectors_are_immutable():
    x = F2.vector([1.0, 2.0])
    with pytest.raises(ValueError):
        x.values[0] = 5.0


@given(vec5, vec5, vec5)
def test_join_lattice_laws(a, b, c):
    x, y, z = F5.vector(a), F5.vector(b), F5.vector(c)
    assert sup_join(x, y) == sup_join(y, x)
    assert sup_join(sup_join(x, y), z) == sup_join(x, sup_join(y, z))
    assert sup_join(x, x) == x
    # monotone: x <= x v z, so (x v y) <= (x v z) v y
    assert np.all(sup_join(x, y).values <= sup_join(sup_join(x, z), y).values)


@given(vec5, st.floats(0, 1e3))
def test_norm_homogeneous(a, c):
    for kind in (SUP, EUCLIDEAN):
        x = ConeSpace(FiniteSet(5), kind).vector(a)
        assert norm(scale(c, x)) == pytest.approx(c * norm(x), rel=1e-12, abs=1e-300)


@given(vec5, vec5)
def test_norm_monotone(a, b):
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    for kind in (SUP, EUCLIDEAN):
        S = ConeSpace(FiniteSet(5), kind, NONNEGATIVE)
        assert norm(S.vector(lo)) <= norm(S.vector(hi)) * (1 + 1e-12)


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(family(n, 4), family(n, 4))))
def test_birkhoff_inequality(pair):
    xs, ys = pair
    for kind in (SUP, EUCLIDEAN):
        lhs, rhs = birkhoff_gap(xs, ys, kind)
        assert lhs <= rhs * (1 + 1e-12) + 1e-12


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(family(n, 4), family(n, 4))))
def test_sup_difference_pointwise(pair):
    xs, ys = pair
    lhs, bound = sup_difference_bound(xs, ys)
    assert np.all(lhs <= bound + 1e-12 * (1 + np.abs(bound)))


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(family(n, 4), family(n, 4))))
def test_sup_difference_norm_form(pair):
    xs, ds = pair
    ys = [np.asarray(x) for x in xs]
    xs = [y + d for y, d in zip(ys, ds)]  # x_j >= y_j >= 0
    for kind in (SUP, EUCLIDEAN):
        lhs, rhs = sup_difference_norm_bound(xs, ys, kind)
        assert lhs <= rhs * (1 + 1e-12) + 1e-12


def test_sup_difference_norm_form_requires_order():
    with pytest.raises(InvalidArgumentError):
        sup_difference_norm_bound([np.array([0.0])], [np.array([1.0])])


def test_cone_vector_constructor_skips_check_when_asked():
    v = ConeVector(F2, [1.0, 2.0], check=False)
    assert v.norm() == 2.0
