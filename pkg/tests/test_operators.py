import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conespec.cone import ConeSpace, FiniteSet, UniformGrid, scale, sup_join
from conespec.errors import DomainMismatchError, InvalidArgumentError
from conespec.operators import (
    MaxKernel,
    MaxTimesMatrix,
    ShiftOperator,
    SumMatrix,
    log_power_norm,
    power_norm,
    power_orbit,
    window_indices,
)
from oracles import maxtimes_apply, maxtimes_power

A28 = MaxTimesMatrix([[0, 2], [8, 0]])

# zero or comfortably normal, so products never land in the subnormal range
entries = st.one_of(st.just(0.0), st.floats(1e-50, 4))
coords = st.one_of(st.just(0.0), st.floats(1e-50, 10))


@st.composite
def square(draw, nmax=5):
    n = draw(st.integers(1, nmax))
    A = draw(arrays(np.float64, (n, n), elements=entries))
    x = draw(arrays(np.float64, n, elements=coords))
    y = draw(arrays(np.float64, n, elements=coords))
    return A, x, y


def multiplication_kernel(N=201):
    return MaxKernel.from_functions(1.0, N, lambda S, T: S, lambda s: s, lambda s: s)


def test_identity_matrix_fixes_vectors():
    op = MaxTimesMatrix(np.eye(3))
    x = op.space.vector([0.5, 2.0, 0.0])
    assert op.apply(x) == x


def test_maxtimes_apply_example():
    assert A28.apply(A28.space.vector([1, 1])).values.tolist() == [2.0, 8.0]


def test_linf_shift_moves_basis_down():
    op = ShiftOperator("linf")
    assert op.apply(op.space.basis(1)).is_zero
    for j in range(2, 8):
        assert op.apply(op.space.basis(j)) == op.space.basis(j - 1)


def test_power_orbit_examples():
    x = A28.space.vector([1, 1])
    assert power_orbit(A28, x, 0) == [x]
    got = [v.values.tolist() for v in power_orbit(A28, x, 2)]
    # second step: (max(0*2, 2*8), max(8*2, 0*8)) = (16, 16)
    assert got == [[1, 1], [2, 8], [16, 16]]
    assert got[2] == maxtimes_apply(A28.matrix, got[1]).tolist()
    sh = ShiftOperator("linf")
    orbit = power_orbit(sh, sh.space.basis(3), 3)
    assert orbit == [sh.space.basis(3), sh.space.basis(2), sh.space.basis(1), sh.space.zeros()]


def test_power_norm_examples():
    assert power_norm(A28, 1) == 8.0
    assert power_norm(A28, 2) == 16.0
    mult = multiplication_kernel()
    assert all(power_norm(mult, n) == 1.0 for n in (1, 2, 7, 40))
    assert ShiftOperator("l2-cone").power_norms(5).tolist() == [1.0] * 6


def test_power_norm_matches_path_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        A = rng.uniform(0, 2, (n, n)) * (rng.random((n, n)) < 0.7)
        op = MaxTimesMatrix(A)
        for k in (1, 2, 3):
            assert power_norm(op, k) == pytest.approx(maxtimes_power(A, k).max(), rel=1e-12)


def test_power_norm_overflow_is_carried_in_log_domain():
    op = MaxTimesMatrix([[1e200]])
    assert power_norm(op, 3) == math.inf
    assert log_power_norm(op, 3) == pytest.approx(3 * math.log(1e200), rel=1e-12)
    assert log_power_norm(MaxTimesMatrix([[0, 1], [0, 0]]), 2) == -math.inf


def test_power_norm_requires_positive_n():
    with pytest.raises(InvalidArgumentError):
        power_norm(A28, 0)


def test_sum_matrix_norms():
    op = SumMatrix([[1, 2], [3, 1]])
    assert op.norm_bound == 4.0 == op.lipschitz
    A = np.array([[1.0, 2.0], [3.0, 1.0]])
    assert power_norm(op, 3) == pytest.approx(np.linalg.matrix_power(A, 3).sum(axis=1).max())


def test_structural_flags():
    assert A28.sup_preserving and A28.aggregation == "sup" and A28.lipschitz == A28.norm_bound
    s = SumMatrix([[1.0]])
    assert s.additive and s.aggregation == "sum" and not s.sup_preserving
    assert ShiftOperator("linf").norm_bound == 1.0


def test_matrix_validation():
    with pytest.raises(InvalidArgumentError):
        MaxTimesMatrix([[1, -1], [0, 0]])
    with pytest.raises(InvalidArgumentError):
        MaxTimesMatrix([[1, 2, 3]])
    with pytest.raises(DomainMismatchError):
        A28.apply(MaxTimesMatrix(np.eye(3)).space.basis(1))


def test_kernel_windows_round_inward():
    g = UniformGrid(1.0, 11)
    lo, hi = window_indices(g, [0.05] * 11, [0.36] * 11)
    assert lo[0] == 1 and hi[0] == 3
    lo, hi = window_indices(g, [0.3] * 11, [0.3] * 11)  # exact grid point survives rounding
    assert lo[0] == 3 and hi[0] == 3
    with pytest.raises(InvalidArgumentError):
        window_indices(g, [0.31] * 11, [0.39] * 11)


def test_kernel_apply_matches_direct_max():
    op = MaxKernel.from_functions(1.0, 21, lambda S, T: 1 + S * T, lambda s: s / 2,
                                  lambda s: np.minimum(s + 0.5, 1.0))
    s = op.grid.points
    rng = np.random.default_rng(0)
    x = rng.random(21)
    got = op.apply_array(x)
    for i in range(21):
        window = [j for j in range(21) if s[i] / 2 - 1e-12 <= s[j] <= min(s[i] + 0.5, 1) + 1e-12]
        assert got[i] == max((1 + s[i] * s[j]) * x[j] for j in window)


def test_kernel_validation():
    g = UniformGrid(1.0, 3)
    with pytest.raises(InvalidArgumentError):
        MaxKernel(g, [0, 0, 0], [2, 2, 2], -np.ones((3, 3)))
    with pytest.raises(InvalidArgumentError):
        MaxKernel(g, [1, 0, 0], [0, 2, 2], np.ones((3, 3)))


def test_scaled_operator():
    S = A28.scaled(0.25)
    assert S.apply(A28.space.vector([1, 1])).values.tolist() == [0.5, 2.0]
    assert S.power_norms(4).tolist() == pytest.approx([1.0, 2.0, 1.0, 2.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        A28.scaled(0.0)


@given(square(), st.one_of(st.just(0.0), st.floats(1e-50, 100)))
def test_positive_homogeneity(data, c):
    A, x, _ = data
    for op in (MaxTimesMatrix(A), SumMatrix(A)):
        v = op.space.vector(x)
        lhs = op.apply(scale(c, v)).values
        rhs = scale(c, op.apply(v)).values
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=0)


@given(square())
def test_sup_preservation_is_exact(data):
    A, x, y = data
    op = MaxTimesMatrix(A)
    u, v = op.space.vector(x), op.space.vector(y)
    assert op.apply(sup_join(u, v)) == sup_join(op.apply(u), op.apply(v))


@given(square())
def test_sum_matrix_additive(data):
    A, x, y = data
    op = SumMatrix(A)
    lhs = op.apply_array(x + y)
    rhs = op.apply_array(x) + op.apply_array(y)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


@given(square())
def test_lipschitz_bound(data):
    A, x, y = data
    for op in (MaxTimesMatrix(A), SumMatrix(A)):
        gap = np.max(np.abs(op.apply_array(x) - op.apply_array(y)))
        assert gap <= op.lipschitz * np.max(np.abs(x - y)) * (1 + 1e-12) + 1e-12


@given(square(), st.integers(1, 6), st.integers(1, 6))
def test_power_norms_submultiplicative(data, m, n):
    A = data[0]
    for op in (MaxTimesMatrix(A), SumMatrix(A), multiplication_kernel(21)):
        b = op.power_norms(m + n)
        assert b[m + n] <= b[m] * b[n] * (1 + 1e-12)


@given(square(), st.integers(1, 8))
def test_power_norm_attained_on_basis(data, n):
    op = MaxTimesMatrix(data[0])
    best = max(power_orbit(op, e, n)[n].norm() for e in op.default_seeds())
    assert power_norm(op, n) == pytest.approx(best, rel=1e-12, abs=0)


def test_l2_cone_shift_stays_in_cone():
    op = ShiftOperator("l2-cone")
    x = op.space.sparse({1: 1.0, 2: 3.0, 5: 1.5})
    assert op.apply(x).coordinates() == {1: 3.0, 4: 1.5}
    assert op.apply(x).norm() == pytest.approx(math.hypot(3.0, 1.5))


def test_maxtimes_apply_oracle_agrees():
    rng = np.random.default_rng(7)
    A = rng.random((4, 4))
    x = rng.random(4)
    assert np.array_equal(MaxTimesMatrix(A).apply_array(x), maxtimes_apply(A, x))


def test_unused_dense_space_has_ones():
    assert ConeSpace(FiniteSet(3)).ones().values.tolist() == [1.0, 1.0, 1.0]
