import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aknsgap import DiffPoly, GaussRat, NotExactError, ParseError, SymPoly, dp_derive, dp_integrate, parse_expr
from aknsgap.algebra import I, ZERO, DiffMono

from helpers import rand_diffpoly, rand_sympoly

fracs = st.fractions(min_value=-20, max_value=20, max_denominator=12)
gauss = st.builds(GaussRat, fracs, fracs)


# --- GaussRat ---------------------------------------------------------------

@pytest.mark.parametrize("text, value", [
    ("3/4+1/2*i", GaussRat(Fraction(3, 4), Fraction(1, 2))),
    ("i", I),
    ("-i", -I),
    ("-1/2*i", GaussRat(0, Fraction(-1, 2))),
    ("0", ZERO),
    ("7", GaussRat(7)),
])
def test_gauss_canonical_text(text, value):
    assert GaussRat.parse(text) == value
    assert str(value) == text


def test_gauss_division_example():
    assert (GaussRat(1, 1) / GaussRat(1, -1)) == I
    with pytest.raises(ZeroDivisionError):
        GaussRat(1) / ZERO


@settings(max_examples=500, deadline=None)
@given(gauss, gauss, gauss)
def test_gauss_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a and a * b == b * a
    if a:
        assert a * a.inverse() == GaussRat(1)
    assert GaussRat.parse(str(a)) == a
    assert (a * a.conj()).im == 0 and (a * a.conj()).re == a.abs2()


@pytest.mark.parametrize("bad", ["1/0", "3/4+", "2**i", "", "1.5", "x"])
def test_gauss_rejects_malformed(bad):
    with pytest.raises((ParseError, ZeroDivisionError)):
        GaussRat.parse(bad)


# --- SymPoly ----------------------------------------------------------------

def test_sympoly_text_and_substitution():
    c = SymPoly.parse("C1 - 1/2*C2")
    assert str(c) == "C1 - 1/2*C2"
    assert c.subs({"C1": 1, "C2": 2}) == SymPoly()
    assert str(SymPoly.parse("(1/2+i)*C1")) == "(1/2+i)*C1"
    z = SymPoly.var("z")
    assert (z * z - 1).subs({"z": z + 1}) == z * z + z * 2


def test_sympoly_ring_axioms_500_triples():
    rng = random.Random(11)
    for _ in range(500):
        a, b, c = (rand_sympoly(rng) for _ in range(3))
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a * b == b * a
        assert a - a == SymPoly()
        assert SymPoly.parse(str(a)) == a


# --- DiffPoly ---------------------------------------------------------------

def test_diffpoly_text_round_trip():
    f = parse_expr("1/4*i*q^(2) - 1/2*i*p*q^2 + 1/2*C1*q^(1) - i*C2*q")
    assert parse_expr(str(f)) == f
    assert DiffPoly.parse(str(f)) == f


def test_diffpoly_ring_axioms():
    rng = random.Random(12)
    for _ in range(200):
        a, b, c = (rand_diffpoly(rng, terms=3, max_degree=2, symbolic=True) for _ in range(3))
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a * b == b * a


def test_derive_is_a_derivation():
    rng = random.Random(13)
    for _ in range(200):
        a, b = rand_diffpoly(rng), rand_diffpoly(rng)
        lam = GaussRat(rng.randint(-5, 5), rng.randint(-5, 5))
        assert dp_derive(a + b * lam) == dp_derive(a) + dp_derive(b) * lam
        assert dp_derive(a * b) == dp_derive(a) * b + a * dp_derive(b)


def test_derive_small_cases():
    p, q = DiffPoly.var("p"), DiffPoly.var("q")
    assert dp_derive(p * q) == DiffPoly.var("p", 1) * q + p * DiffPoly.var("q", 1)
    assert dp_derive(DiffPoly.const(SymPoly.var("C1"))) == DiffPoly()


def test_integrate_inverts_derive_on_200_random_polys():
    rng = random.Random(14)
    for _ in range(200):
        f = rand_diffpoly(rng, symbolic=rng.random() < 0.3)
        f = f - DiffPoly.const(f.constant_term())
        h = dp_derive(f)
        if not h:
            continue
        assert dp_integrate(h) == f


def test_integrate_rejects_non_exact():
    p, q = DiffPoly.var("p"), DiffPoly.var("q")
    with pytest.raises(NotExactError) as err:
        dp_integrate(p * q)
    assert isinstance(err.value.witness, DiffMono)
    with pytest.raises(NotExactError):
        dp_integrate(DiffPoly.const(1))
    assert dp_integrate(DiffPoly.var("p", 1) * q + p * DiffPoly.var("q", 1)) == p * q


def test_parse_error_reports_column():
    with pytest.raises(ParseError) as err:
        parse_expr("p + $x")
    assert err.value.column == 5
    with pytest.raises(ParseError) as err:
        parse_expr("(p + q")
    assert err.value.column == 7
