"""Finite-gap certification of u = ((n+1)/n) p q from Laurent data at its poles.

The local criterion at a pole: a_-2 = n(n+1) for a positive integer n, and
a_-1 = a_1 = a_3 = ... = a_{2n-1} = 0. Global hypotheses on u (rational,
simply periodic or elliptic, finitely many poles per strip) cannot be decided
from finitely many coefficients; callers record them as attestations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Sequence

from .akns import stationary_residual
from .algebra import GaussRat
from .poles import PoleData, classify_pole
from .series import DepthError, LaurentSeries

__all__ = [
    "PotentialPoleData",
    "GapReport",
    "build_potential",
    "finite_gap_check",
    "gap_pipeline",
]


@dataclass(frozen=True)
class PotentialPoleData:
    """Laurent coefficients a_-2, a_-1, a_0, ... of u at one pole."""

    a_coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(GaussRat.coerce(c) for c in self.a_coeffs)
        if not coeffs or not coeffs[0]:
            raise ValueError("double pole required: a_-2 must be present and nonzero")
        object.__setattr__(self, "a_coeffs", coeffs)

    @property
    def depth(self) -> int:
        return len(self.a_coeffs) - 3

    def a(self, k: int) -> GaussRat:
        return self.a_coeffs[k + 2]

    @classmethod
    def from_series(cls, u: LaurentSeries) -> "PotentialPoleData":
        if u.min_order < -2:
            raise ValueError(f"pole of order {-u.min_order} exceeds 2")
        return cls(tuple(u.coeff(e) for e in range(-2, u.max_order + 1)))

    def to_series(self) -> LaurentSeries:
        return LaurentSeries(-2, self.a_coeffs)


@dataclass(frozen=True)
class GapReport:
    finite_gap: bool
    n: int | None
    first_failure: dict | None
    stages: tuple = ()
    attestations: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "finite_gap": self.finite_gap,
            "n": self.n,
            "first_failure": self.first_failure,
            "stages": list(self.stages),
            "attestations": dict(sorted(self.attestations.items())),
        }


def build_potential(p_series: LaurentSeries, q_series: LaurentSeries, n: int) -> LaurentSeries:
    """u = ((n+1)/n) p q."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if p_series.max_order != q_series.max_order:
        raise ValueError(f"depth mismatch: p known through x^{p_series.max_order}, "
                         f"q through x^{q_series.max_order}")
    return (p_series * q_series).scale(Fraction(n + 1, n))


def _n_from_leading(a: GaussRat) -> int | None:
    if a.im or a.re.denominator != 1 or a.re <= 0:
        return None
    v = a.re.numerator
    r = isqrt(1 + 4 * v)
    if r * r != 1 + 4 * v:
        return None
    return (r - 1) // 2


def finite_gap_check(u: PotentialPoleData | LaurentSeries) -> GapReport:
    if isinstance(u, LaurentSeries):
        u = PotentialPoleData.from_series(u)
    lead = u.a(-2)
    n = _n_from_leading(lead)
    if n is None:
        return GapReport(False, None, {"condition": "leading", "index": -2,
                                       "detail": f"a_-2 = {lead} is not n(n+1) for a positive integer n"})
    for k in [-1] + list(range(1, 2 * n, 2)):
        if k > u.depth:
            raise DepthError(2 * n - 1, f"potential data must reach index {2 * n - 1} (have {u.depth})")
        if u.a(k):
            return GapReport(False, n, {"condition": "odd-vanishing", "index": k,
                                        "detail": f"a_{k} = {u.a(k)}"})
    return GapReport(True, n, None)


def gap_pipeline(p_series: LaurentSeries, q_series: LaurentSeries, m: int, c,
                      K: int | None = None, extra_poles: Sequence[tuple[LaurentSeries, LaurentSeries]] = (),
                      attestations: dict | None = None) -> GapReport:
    """Pole classification, stationarity, potential construction and the
    finite-gap check, at the pole of the given expansions and any extra poles.

    Classification runs first: a common n at every pole is a precondition of
    the whole chain. The first failing stage is named in the report.
    """
    attest = dict(attestations or {})
    attest["m"] = m
    stages = []
    poles = [(p_series, q_series)] + list(extra_poles)

    def fail(n, failure):
        return GapReport(False, n, failure, tuple(stages), attest)

    common_n = None
    for idx, (p, q) in enumerate(poles):
        report = classify_pole(PoleData.from_series(p, q))
        stages.append({"pole": idx, "stage": "classification", "ok": report.passes, "n": report.n})
        if not report.passes:
            return fail(report.n, {"stage": "classification", "pole": idx, **report.first_failure})
        if common_n is None:
            common_n = report.n
        elif report.n != common_n:
            return fail(None, {"stage": "common-n", "pole": idx,
                               "detail": f"n = {report.n} differs from {common_n}"})
    for idx, (p, q) in enumerate(poles):
        verdict = stationary_residual(p, q, m, c, K)
        stages.append({"pole": idx, "stage": "stationarity", "ok": verdict.is_zero,
                       "checked_through": verdict.checked_through})
        if not verdict.is_zero:
            return fail(common_n, {"stage": "stationarity", "pole": idx, **verdict.first_nonzero})
    for idx, (p, q) in enumerate(poles):
        gap = finite_gap_check(build_potential(p, q, common_n))
        stages.append({"pole": idx, "stage": "finite-gap", "ok": gap.finite_gap, "n": gap.n})
        if not gap.finite_gap:
            return fail(common_n, {"stage": "finite-gap", "pole": idx, **gap.first_failure})
        if gap.n != common_n:
            return fail(common_n, {"stage": "finite-gap", "pole": idx,
                                   "detail": f"potential certifies n = {gap.n}, expected {common_n}"})
    return GapReport(True, common_n, None, tuple(stages), attest)
