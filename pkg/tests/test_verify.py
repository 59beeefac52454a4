import cmath
import random

import pytest
from conftest import make_problem
from oracles import conj_contour, fib

from transfer_solve import fexpr
from transfer_solve.solver import ensure_contractive, solve
from transfer_solve.verify import (FAIL, INCONCLUSIVE, PASS, SAMPLED_NOTE, binet, check_asymptotics,
                                   check_decay, check_z_independence, holomorphy_probe, residual,
                                   residual_of, verify_solution)

FIB = make_problem("z1+z2", 2, radius=2.0)


@pytest.fixture(scope="module")
def exp_handle():
    p = ensure_contractive(make_problem("exp(s+z1)+exp(s+z2)", 2, params=(0.5,)))
    return solve(p, -p.cutoff.J - 1)


def test_decay_fibonacci_fails():
    v = check_decay(FIB)
    assert v.verdict == FAIL
    assert v.rho[0] == pytest.approx(v.rho[-1])


def test_decay_exponential_passes():
    v = check_decay(make_problem("exp(s+z1)+exp(s+z2)", 2))
    assert v.verdict == PASS
    assert v.ratio == pytest.approx(cmath.exp(-1).real, rel=1e-6)
    assert v.note == SAMPLED_NOTE


def test_decay_constant_passes():
    v = check_decay(make_problem("0.25", 2, radius=1.0, anchor=0.25))
    assert v.verdict == PASS and all(r == 0 for r in v.rho)


@pytest.mark.parametrize("text", ["exp(s+z1)+exp(s+z2)", "(z1 + z2^2)/(1+s^2)", "exp(z1*z2 - s^2)"])
def test_decay_verdict_monotone_in_cutoff(text):
    p = make_problem(text, 2, radius=1.0, a=0.75)
    verdicts = [check_decay(p.with_cutoff(J)).verdict for J in (1.0, 2.0, 4.0, 8.0, 16.0)]
    assert FAIL not in verdicts
    first = verdicts.index(PASS)
    assert all(v == PASS for v in verdicts[first:])


def test_decay_needs_enough_terms():
    with pytest.raises(ValueError):
        check_decay(FIB, 7)


def test_partial_sums_nondecreasing():
    v = check_decay(make_problem("(z1 + z2^2)/(1+s^2)", 2, radius=1.0))
    assert all(b >= a for a, b in zip(v.partial_sums, v.partial_sums[1:]))


@pytest.mark.parametrize("n", [0, 1, 2, 10, 17])
def test_binet_integers(n):
    assert abs(binet(n) - fib(n)) < 1e-9


def test_binet_satisfies_fibonacci_equation():
    rng = random.Random(7)
    pts = [0.5 + 0.3j] + [complex(rng.uniform(-10, 10), rng.uniform(-2, 2)) for _ in range(20)]
    for s in pts:
        assert residual_of(binet, FIB, s) < 1e-9 * max(1.0, abs(binet(s + 2)))
    assert residual_of(binet, FIB, 0.5 + 0.3j) < 1e-10


def test_residual_constant():
    p = make_problem("0.25", 2, radius=1.0, anchor=0.25)
    assert residual_of(lambda s: 0.25, p, -3 + 0.2j) == 0
    assert residual(solve(p, -5), -3) == 0


def test_residual_converged(exp_handle):
    assert residual(exp_handle, -15) < 1e-10


def test_z_independence_first_order():
    p = make_problem("exp(s+z1)", 1)
    assert check_z_independence(p, -12, [0, 0.3, -0.3 + 0.2j]) < 1e-12


def test_z_independence_constant():
    p = make_problem("0.25", 1, radius=1.0, anchor=0.25)
    assert check_z_independence(p, -4, [0.25, 0.5, 0j]) == 0


def test_z_independence_tightens_with_tolerance():
    starts = [0.9, -0.9j, 0.5 + 0.5j]
    loose = check_z_independence(make_problem("exp(s+z1)", 1, radius=1.0, tail_eps=1e-6), -3, starts)
    tight = check_z_independence(make_problem("exp(s+z1)", 1, radius=1.0, tail_eps=1e-7), -3, starts)
    assert tight <= max(loose / 10, 1e-15)


def test_z_independence_needs_two_starts():
    with pytest.raises(ValueError):
        check_z_independence(FIB, -4, [0j])


def test_asymptotics_exponential(exp_handle):
    rep = check_asymptotics(exp_handle, [-20, -25, -30], fexpr.parse("2*exp(s-2)", 2))
    assert abs(rep.ratios[-1] - 1) < 0.01
    assert rep.spread_last < 1e-3


def test_asymptotics_default_model_matches(exp_handle):
    explicit = check_asymptotics(exp_handle, [-30], fexpr.parse("2*exp(s-2)", 2))
    default = check_asymptotics(exp_handle, [-30])
    assert default.ratios[0] == pytest.approx(explicit.ratios[0], rel=1e-12)


def test_asymptotics_constant():
    p = make_problem("0.25", 2, radius=1.0, anchor=0.25)
    rep = check_asymptotics(solve(p, -5), [-6, -8], lambda s: 0.25)
    assert rep.ratios == [1, 1]


def test_asymptotics_gaussian():
    p = ensure_contractive(make_problem("exp(z1*z2 - s^2)", 2, radius=1.0, a=0.75, params=(0.5,)))
    h = solve(p, -p.cutoff.J - 1)
    rep = check_asymptotics(h, [-6, -7, -8], lambda s: cmath.exp(-(s - 2) ** 2))
    assert abs(rep.ratios[-1] - 1) < 0.05


def test_asymptotics_zero_model_gives_none(exp_handle):
    assert check_asymptotics(exp_handle, [-20], lambda s: 0).ratios == [None]


def test_holomorphy_constant():
    assert holomorphy_probe(lambda s: 3 - 2j, -15, 0.25) < 1e-14


def test_holomorphy_converged(exp_handle):
    assert holomorphy_probe(exp_handle, -15, 0.25) < 1e-8


def test_holomorphy_detects_conjugate():
    r = 0.25
    d = holomorphy_probe(lambda s: s.conjugate(), -15, r)
    assert d == pytest.approx(abs(conj_contour(r)), rel=1e-12)
    assert d > 1e-3


def test_holomorphy_quadrature_order():
    f = lambda s: 1 / (s - 1.2)  # pole outside the unit circle, exact integral 0
    d64, d128 = holomorphy_probe(f, 0, 1.0, 64), holomorphy_probe(f, 0, 1.0, 128)
    assert d128 <= d64 / 4
    assert holomorphy_probe(lambda s: 1.0, 0, 1.0, 64) < 1e-14
    with pytest.raises(ValueError):
        holomorphy_probe(f, 0, 1.0, 32)


def test_verify_solution_all_pass(exp_handle):
    rep = verify_solution(exp_handle).to_dict()
    for key in ("hypothesis", "residual_stats", "z_independence", "contraction",
                "asymptotics", "holomorphy"):
        assert rep[key]["verdict"] == PASS, key
    assert rep["residual_stats"]["max"] < 1e-8
    assert rep["note"] == SAMPLED_NOTE


def test_verify_rational_asymptotics_inconclusive():
    p = ensure_contractive(make_problem("(z1 + z2^2)/(1+s^2)", 2, radius=1.0, a=0.75, params=(0.5,)))
    rep = verify_solution(solve(p, -p.cutoff.J - 1)).to_dict()
    assert rep["asymptotics"]["verdict"] == INCONCLUSIVE
    assert rep["residual_stats"]["verdict"] == PASS
