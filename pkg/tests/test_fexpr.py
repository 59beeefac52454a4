import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transfer_solve.fexpr import (Add, Const, Cos, Div, EvalError, Exp, Log, Mul, Neg, ParseError,
                                  Pow, Sin, Sub, VarS, VarZ, compile_expr, eval_expr, evaluate,
                                  evaluate_many, parse, partial, to_text)


def test_parse_exp_sum():
    assert parse("exp(s+z1)+exp(s+z2)", 2) == Add(Exp(Add(VarS(), VarZ(1))),
                                                  Exp(Add(VarS(), VarZ(2))))


def test_parse_single_variable():
    assert parse("z1", 1) == VarZ(1)


def test_parse_rational_example():
    want = Div(Add(VarZ(1), Pow(VarZ(2), Const(2))), Add(Const(1), Pow(VarS(), Const(2))))
    assert parse("(z1 + z2^2)/(1+s^2)", 2) == want


@pytest.mark.parametrize("text, tree", [
    ("-z1^2", Pow(Neg(VarZ(1)), Const(2))),
    ("z1^2^3", Pow(VarZ(1), Pow(Const(2), Const(3)))),
    ("1-2-3", Sub(Sub(Const(1), Const(2)), Const(3))),
    ("2*z1/3", Div(Mul(Const(2), VarZ(1)), Const(3))),
    ("1+2*i", Add(Const(1), Mul(Const(2), Const(1j)))),
    ("log(sin(s))*cos(z1)", Mul(Log(Sin(VarS())), Cos(VarZ(1)))),
    ("1.5e-3", Const(0.0015)),
])
def test_precedence(text, tree):
    assert parse(text, 1) == tree


@pytest.mark.parametrize("text, pos", [
    ("z1 + * 2", 5),
    ("z3", 0),
    ("exp(z1", 6),
    ("(z1))", 4),
    ("z1 $ 2", 3),
    ("foo(z1)", 0),
    ("", 0),
])
def test_parse_errors_report_position(text, pos):
    with pytest.raises(ParseError) as info:
        parse(text, 2)
    assert info.value.position == pos
    assert 0 <= info.value.position <= len(text)


def test_eval_examples():
    assert eval_expr(parse("exp(s+z1)", 1), 0, [0]) == 1
    assert eval_expr(parse("z1+z2", 2), 7 - 3j, [1, 1]) == 2
    v = eval_expr(parse("exp(z1*z2 - s^2)", 2), 2, [0, 0])
    assert v == pytest.approx(0.0183156388887342, rel=1e-14)  # mpmath exp(-4)


@pytest.mark.parametrize("text, z", [("1/z1", 0), ("log(z1)", 0), ("z1^-1", 0), ("exp(z1)", 1000)])
def test_eval_errors(text, z):
    with pytest.raises(EvalError):
        eval_expr(parse(text, 1), 0, [z])


def test_principal_branches():
    f = compile_expr(parse("log(z1)", 1), 1)
    assert evaluate(f, 0, [-1]) == pytest.approx(1j * math.pi)
    g = compile_expr(parse("z1^0.5", 1), 1)
    assert evaluate(g, 0, [-4]) == pytest.approx(2j)


def test_vectorized_matches_scalar():
    f = compile_expr(parse("(z1 + z2^2)/(1+s^2) + exp(z1*z2 - s^2)", 2), 2)
    rng = np.random.default_rng(0)
    S = rng.normal(size=7) + 0.3j * rng.normal(size=7)
    Z = rng.normal(size=(7, 2)) + 1j * rng.normal(size=(7, 2))
    vec = evaluate_many(f, S, Z)
    for s, z, v in zip(S, Z, vec):
        assert v == pytest.approx(evaluate(f, s, list(z)), rel=1e-14)


def test_vectorized_flags_division_by_zero():
    f = compile_expr(parse("1/z1", 1), 1)
    with pytest.raises(EvalError):
        evaluate_many(f, np.zeros(2), np.zeros((2, 1)))


def test_partial_examples():
    f1 = compile_expr(parse("z1", 1), 1)
    assert abs(partial(f1, 1, 3j, [2 - 1j]) - 1) < 1e-9
    f2 = compile_expr(parse("exp(s+z1)", 1), 1)
    d = partial(f2, 1, -10, [0])
    assert abs(d - 4.53999297624849e-05) / 4.53999297624849e-05 < 1e-9
    f3 = compile_expr(parse("z2^2", 2), 2)
    assert abs(partial(f3, 2, 0, [0, 3]) - 6) < 1e-6


# (expression, symbolic derivative wrt z1) at a fixed point
CORPUS = [
    ("z1", lambda s, z: 1),
    ("z1^2", lambda s, z: 2 * z),
    ("z1^3 - 2*z1", lambda s, z: 3 * z * z - 2),
    ("exp(s+z1)", lambda s, z: cmath.exp(s + z)),
    ("sin(z1)", lambda s, z: cmath.cos(z)),
    ("cos(s*z1)", lambda s, z: -s * cmath.sin(s * z)),
    ("log(z1)", lambda s, z: 1 / z),
    ("1/(1+z1^2)", lambda s, z: -2 * z / (1 + z * z) ** 2),
    ("exp(z1*z1 - s^2)", lambda s, z: 2 * z * cmath.exp(z * z - s * s)),
    ("(z1 + 0.25)/(1+s^2)", lambda s, z: 1 / (1 + s * s)),
]


@pytest.mark.parametrize("text, deriv", CORPUS)
def test_partial_matches_symbolic(text, deriv):
    f = compile_expr(parse(text, 1), 1)
    s, z = 0.3 - 0.2j, 0.7 + 0.4j
    want = deriv(s, z)
    assert abs(partial(f, 1, s, [z]) - want) <= 1e-5 * abs(want)


leaves = st.one_of(
    st.builds(VarS),
    st.builds(VarZ, st.integers(1, 3)),
    st.builds(Const, st.floats(0, 100, allow_nan=False).map(complex)),
    st.just(Const(1j)),
)


def _extend(children):
    return st.one_of(
        st.builds(Add, children, children), st.builds(Sub, children, children),
        st.builds(Mul, children, children), st.builds(Div, children, children),
        st.builds(Pow, children, children), st.builds(Neg, children),
        st.builds(Exp, children), st.builds(Log, children),
        st.builds(Sin, children), st.builds(Cos, children),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_print_parse_round_trip(tree):
    assert parse(to_text(tree), 3) == tree


@settings(max_examples=100, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-1, 1))
def test_eval_is_compositional(a, b, c):
    inner = parse("sin(z1) + s*z2", 2)
    outer_text = "exp(w) * z1 - w^2"
    s, z = complex(a, c), [complex(b, 0.5), complex(c, a)]
    w = eval_expr(inner, s, z)
    whole = parse(outer_text.replace("w", f"({to_text(inner)})"), 2)
    sub = parse(outer_text.replace("w", f"({to_text(Const(0))} + q)").replace("q", "z2"), 2)
    assert eval_expr(whole, s, z) == pytest.approx(eval_expr(sub, s, [z[0], w]), rel=1e-12, abs=1e-12)
