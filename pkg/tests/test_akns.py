import threading
from fractions import Fraction

import pytest
import sympy

from aknsgap import (ConstantVector, DiffPoly, EllipticParams, GaussRat, Inconclusive, Infeasible, SymPoly,
                     compute_fg, csc_series, dp_derive, dp_integrate, example2_pq, parse_expr,
                     propagation_check, solve_constants, solve_polynomial_system, stationary_depth,
                     stationary_residual)
from aknsgap.algebra import I

F = Fraction
P, Q = DiffPoly.var("p"), DiffPoly.var("q")


# --- the recursion ----------------------------------------------------------

def test_first_members():
    assert compute_fg(1).f == Q * (-I) and compute_fg(1).g == P * I
    assert compute_fg(2).f == parse_expr("1/2*q^(1) - i*C1*q")
    assert compute_fg(2).g == parse_expr("1/2*p^(1) + i*C1*p")


def test_third_member_printed_form():
    pair = compute_fg(3)
    assert pair.f == parse_expr("i/4*q^(2) - i/2*p*q^2 + C1/2*q^(1) - i*C2*q")
    assert pair.g == parse_expr("-i/4*p^(2) + i/2*p^2*q + C1/2*p^(1) + i*C2*p")
    assert pair.constants_used == ("C1", "C2")


@pytest.mark.parametrize("k", range(1, 9))
def test_exactness_of_the_density(k):
    pair = compute_fg(k)
    h = P * pair.f + Q * pair.g
    H = dp_integrate(h)
    assert dp_derive(H) == h


def _constant_weight(c: SymPoly) -> set:
    out = set()
    for mono, _ in c.sorted_terms():
        out.add(sum(int(name[1:]) * e for name, e in mono))
    return out


@pytest.mark.parametrize("k", range(1, 9))
def test_weight_and_charge_grading(k):
    pair = compute_fg(k)
    for poly, charge in ((pair.f, 1), (pair.g, -1)):
        for mono, coeff in poly:
            assert mono.deg_q - mono.deg_p == charge
            assert {mono.weight + w for w in _constant_weight(coeff)} == {k}


def _swap_conjugate(f: DiffPoly) -> DiffPoly:
    out = DiffPoly()
    for mono, coeff in f:
        term = DiffPoly.const(SymPoly({m: c.conj() for m, c in coeff.terms.items()}))
        for idx, exp in mono.factors:
            name = "q" if idx % 2 == 0 else "p"
            term = term * DiffPoly.var(name, idx // 2) ** exp
        out = out + term
    return out


@pytest.mark.parametrize("k", range(1, 8))
def test_p_q_swap_with_conjugation(k):
    pair = compute_fg(k)
    assert _swap_conjugate(pair.f) == pair.g


def test_scaling_symmetry_numeric():
    # p -> lam p, q -> q / lam scales f by 1/lam and g by lam
    p, q = csc_series(3, 12), csc_series(F(1, 3), 12)
    lam = GaussRat(2, 1)
    c = ConstantVector((1, F(-1, 2), 3))
    for k in range(1, 5):
        a = stationary_residual(p, q, k, c)
        b = stationary_residual(p.scale(lam), q.scale(lam.inverse()), k, c)
        assert b.residual_f.agrees_with(a.residual_f.scale(lam.inverse()))
        assert b.residual_g.agrees_with(a.residual_g.scale(lam))


def test_concurrent_memo_is_consistent():
    results = []

    def work():
        results.append(str(compute_fg(7).f))

    threads = [threading.Thread(target=work) for _ in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(results)) == 1


# --- analytic oracle: csc derivatives as polynomials in csc and cot -----------

_c, _t = sympy.symbols("c t")


def _d(expr):
    # (csc)' = -csc cot, (cot)' = -csc^2, then cot^2 -> csc^2 - 1
    out = sympy.expand(sympy.diff(expr, _c) * (-_c * _t) + sympy.diff(expr, _t) * (-_c ** 2))
    return sympy.expand(out.subs(_t ** 2, _c ** 2 - 1))


def _reduce(expr):
    expr = sympy.expand(expr)
    while sympy.degree(expr, _t) > 1:
        expr = sympy.expand(sympy.rem(sympy.Poly(expr, _t), sympy.Poly(_t ** 2 - _c ** 2 + 1, _t)).as_expr())
    return expr


def analytic_on_csc(f: DiffPoly, scale_p, scale_q, constants: dict) -> sympy.Expr:
    derivs = {}

    def deriv(base, j):
        key = (base, j)
        if key not in derivs:
            derivs[key] = base if j == 0 else _d(deriv(base, j - 1))
        return derivs[key]

    total = sympy.Integer(0)
    for mono, coeff in f.subs(constants):
        val = coeff.constant_value()
        term = sympy.Rational(val.re.numerator, val.re.denominator) + \
            sympy.I * sympy.Rational(val.im.numerator, val.im.denominator)
        for idx, exp in mono.factors:
            scale = scale_p if idx % 2 == 0 else scale_q
            term *= (scale * deriv(_c, idx // 2)) ** exp
        total += term
    return _reduce(total)


def test_csc_n1_solution_vanishes_analytically():
    consts = {"C1": 0, "C2": F(-1, 4)}
    pair = compute_fg(3)
    assert analytic_on_csc(pair.f, 1, 1, consts) == 0
    assert analytic_on_csc(pair.g, 1, 1, consts) == 0
    assert analytic_on_csc(pair.f, 1, 1, {"C1": 0, "C2": 0}) != 0


def test_csc_n2_golden_constants_vanish_analytically():
    consts = {"C1": 0, "C2": F(-5, 2), "C3": 0, "C4": F(9, 16), "C5": 0}
    pair = compute_fg(6)
    assert analytic_on_csc(pair.f, 2, 2, consts) == 0
    assert analytic_on_csc(pair.g, 2, 2, consts) == 0


# --- stationarity on series ---------------------------------------------------

def test_csc_n1_residual_and_failure_location():
    p = csc_series(1, 30)
    v = stationary_residual(p, p, 2, ConstantVector.parse("0,-1/4"))
    assert v.is_zero and v.checked_through == 28
    bad = stationary_residual(p, p, 2, ConstantVector.zeros(2))
    assert not bad.is_zero
    assert bad.first_nonzero == {"which": "f3", "order": -1, "coeff": "-1/4*i"}


def test_propagation():
    p = csc_series(1, 30)
    c = ConstantVector.parse("0,-1/4")
    assert propagation_check(p, p, 2, c, 3)
    assert not propagation_check(p, p, 2, ConstantVector.parse("0,-1/4,1"), 3)


def test_stationary_depth_bookkeeping():
    p = csc_series(2, 40)
    assert stationary_depth(p, p, 5, 30) == 35
    v = stationary_residual(p.truncate(35), p.truncate(35), 5, ConstantVector.parse("0,-5/2,0,9/16,0"), 30)
    assert v.is_zero and v.checked_through == 30


def test_solve_constants_csc():
    p = csc_series(1, 30)
    assert solve_constants(p, p, 2) == ConstantVector.parse("0,-1/4")
    p2 = csc_series(2, 30)
    assert solve_constants(p2, p2, 4) == ConstantVector.parse("0,-5/2,0,9/16")
    for m in (1, 2, 3):
        with pytest.raises(Infeasible):
            solve_constants(p2, p2, m)


@pytest.mark.parametrize("m", range(1, 5))
def test_mismatched_residues_are_infeasible(m):
    with pytest.raises(Infeasible):
        solve_constants(csc_series(1, 20), csc_series(2, 20), m)


@pytest.mark.parametrize("alpha, beta, m, expected", [
    (1, 1, 2, "0,-3/2"),
    (2, 2, 4, "0,-15,0,22"),
    (1, 4, 4, "0,-15,0,22"),
])
def test_elliptic_example_constants(alpha, beta, m, expected):
    p, q = example2_pq(EllipticParams(4, 0, 1), alpha, beta, 24)
    c = solve_constants(p, q, m)
    assert c == ConstantVector.parse(expected)
    assert stationary_residual(p, q, m, c).is_zero


# --- the polynomial solver ----------------------------------------------------

x, y = SymPoly.var("x"), SymPoly.var("y")


def test_solver_linear_and_branching():
    assert solve_polynomial_system([x + y - 3, x - y - 1], ["x", "y"]) == {"x": GaussRat(2), "y": GaussRat(1)}
    sol = solve_polynomial_system([x * x - 4, x * y - 2], ["x", "y"])
    assert sol["x"] ** 2 == 4 and sol["x"] * sol["y"] == 2
    assert solve_polynomial_system([x - 1], ["x", "y"])["y"] == 0


def test_solver_infeasible_and_inconclusive():
    with pytest.raises(Infeasible):
        solve_polynomial_system([x - 1, x - 2], ["x"])
    with pytest.raises(Infeasible):
        solve_polynomial_system([x * x - 2], ["x"])
    with pytest.raises(Inconclusive):
        solve_polynomial_system([x * y - 1], ["x", "y"])
