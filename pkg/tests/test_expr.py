import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conespec.errors import ExprError
from conespec.expr import Binary, Const, Var, compile_expr, evaluate, parse_expr


def ev(text, s=0.0, t=0.0):
    return float(evaluate(parse_expr(text), s, t))


def test_examples():
    assert ev("s", s=0.5) == 0.5
    assert ev("min(s+t, 1)", 0.7, 0.6) == 1.0
    with pytest.raises(ExprError) as info:
        parse_expr("s *")
    assert info.value.position == 3
    assert "offset 3" in str(info.value)


@pytest.mark.parametrize("text,value", [
    ("-2^2", -4.0),
    ("2^3^2", 512.0),
    ("2^-1", 0.5),
    ("8/4/2", 1.0),
    ("1-2-3", -4.0),
    ("1+2*3", 7.0),
    ("(1+2)*3", 9.0),
    ("max(1, 2) + abs(-3)", 5.0),
    ("exp(0)", 1.0),
    ("1.5e1", 15.0),
    (".5", 0.5),
])
def test_precedence(text, value):
    assert ev(text) == value


def test_tree_shape():
    assert parse_expr("s + 1") == Binary("+", Var("s"), Const(1.0))
    assert parse_expr("  s+1 ") == parse_expr("s+1")


@pytest.mark.parametrize("text,pos", [
    ("", 0), ("(s", 2), ("s)", 1), ("foo(s)", 0), ("min(s)", 0), ("s $ t", 2), ("1 +", 3), ("u", 0),
])
def test_errors_carry_offsets(text, pos):
    with pytest.raises(ExprError) as info:
        parse_expr(text)
    assert info.value.position == pos


def test_vectorized_and_broadcast():
    s = np.linspace(0, 1, 5)
    out = evaluate(parse_expr("1 + 0*s"), s, 0.0)
    assert out.shape == (5,)
    S, T = np.meshgrid(s, s, indexing="ij")
    assert evaluate(parse_expr("s*t"), S, T) == pytest.approx(S * T)


def test_compile_rejects_non_finite():
    f = compile_expr("1/s")
    assert f(2.0, 0.0) == 0.5
    with pytest.raises(ExprError):
        f(np.array([0.0, 1.0]), 0.0)


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_matches_python_arithmetic(s, t):
    assert ev("s*t - (s + t)/2", s, t) == pytest.approx(s * t - (s + t) / 2, rel=1e-15, abs=1e-12)
    assert ev("max(s, t) - min(s, t)", s, t) == abs(s - t)
