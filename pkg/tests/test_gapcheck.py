import random
from fractions import Fraction

import pytest

from aknsgap import (ConstantVector, EllipticParams, GaussRat, LaurentSeries, PotentialPoleData, build_potential,
                     csc_series, example2_pq, finite_gap_check, gap_pipeline, wp_series)
from aknsgap.series import DepthError

from helpers import rand_gauss, pattern_pole

F = Fraction


def test_build_potential_csc():
    c = csc_series(1, 6)
    u = build_potential(c, c, 1)
    assert u.coeff(-2) == 2 and u.coeff(0) == F(2, 3) and u.coeff(2) == F(2, 15)
    z = LaurentSeries.zero(6)
    assert build_potential(z, z, 1).is_zero()
    with pytest.raises(ValueError):
        build_potential(c, csc_series(1, 8), 1)


@pytest.mark.parametrize("u, expected", [
    (lambda: build_potential(csc_series(1, 12), csc_series(1, 12), 1), (True, 1)),
    (lambda: build_potential(csc_series(2, 12), csc_series(2, 12), 2), (True, 2)),
    (lambda: csc_series(1, 12) * csc_series(1, 12), (False, None)),
    (lambda: wp_series(EllipticParams(4, 0, 1), 12).scale(12), (True, 3)),
])
def test_verdicts(u, expected):
    r = finite_gap_check(u())
    assert (r.finite_gap, r.n) == expected


def test_example2_potential_passes():
    p, q = example2_pq(EllipticParams(4, 0, 1), 1, 1, 12)
    r = finite_gap_check(build_potential(p, q, 1))
    assert r.finite_gap and r.n == 1
    p, q = example2_pq(EllipticParams(4, 0, 1), 2, 2, 12)
    assert finite_gap_check(build_potential(p, q, 2)).finite_gap


def test_odd_coefficient_failure_and_depth():
    r = finite_gap_check(PotentialPoleData((6, 0, 0, F(1, 2))))
    assert not r.finite_gap and r.first_failure == {"condition": "odd-vanishing", "index": 1, "detail": "a_1 = 1/2"}
    with pytest.raises(DepthError):
        finite_gap_check(PotentialPoleData((6, 0, 0)))
    with pytest.raises(ValueError):
        PotentialPoleData((0, 1))


def test_built_potential_from_classified_poles():
    rng = random.Random(600)
    for n in (1, 2, 3):
        for _ in range(100):
            p, q = pattern_pole(rng, n).to_series()
            r = finite_gap_check(build_potential(p, q, n))
            assert r.finite_gap and r.n == n


def test_constant_shift_leaves_other_coefficients():
    rng = random.Random(601)
    for _ in range(100):
        n = rng.randint(1, 3)
        coeffs = [GaussRat(n * (n + 1))] + [rand_gauss(rng) for _ in range(2 * n + 2)]
        u = PotentialPoleData(tuple(coeffs))
        shift = rand_gauss(rng)
        shifted = PotentialPoleData(tuple(c + shift if k == 2 else c for k, c in enumerate(coeffs)))
        assert all(u.a(k) == shifted.a(k) for k in range(-2, u.depth + 1) if k != 0)
        assert finite_gap_check(u) == finite_gap_check(shifted)


def test_pipeline_examples():
    c1 = csc_series(1, 24)
    r = gap_pipeline(c1, c1, 2, ConstantVector.parse("0,-1/4"))
    assert r.finite_gap and r.n == 1
    assert [s["stage"] for s in r.stages] == ["classification", "stationarity", "finite-gap"]
    c2 = csc_series(2, 24)
    r = gap_pipeline(c2, c2, 5, ConstantVector.parse("0,-5/2,0,9/16,0"))
    assert r.finite_gap and r.n == 2
    assert build_potential(c2, c2, 2).coeff(-2) == 6


def test_pipeline_names_the_failing_stage():
    r = gap_pipeline(csc_series(1, 20), csc_series(2, 20), 2, ConstantVector.parse("0,-1/4"))
    assert not r.finite_gap and r.first_failure["stage"] == "classification"
    assert r.first_failure["code"] == "leading-product-not-square"
    c1 = csc_series(1, 20)
    r = gap_pipeline(c1, c1, 2, ConstantVector.parse("0,0"))
    assert not r.finite_gap and r.first_failure["stage"] == "stationarity"
    assert r.first_failure["which"] == "f3" and r.first_failure["order"] == -1


def test_pipeline_common_n_across_poles():
    c1, c2 = csc_series(1, 24), csc_series(2, 24)
    r = gap_pipeline(c1, c1, 5, ConstantVector.parse("0,-1/4"), extra_poles=[(c2, c2)])
    assert not r.finite_gap and r.first_failure["stage"] == "common-n"
    r = gap_pipeline(c1, c1, 2, ConstantVector.parse("0,-1/4"), extra_poles=[(c1, c1)],
                          attestations={"class": "simply periodic"})
    assert r.finite_gap and r.attestations == {"class": "simply periodic", "m": 2}
