"""Truncated Laurent series with exact coefficients.

A ``LaurentSeries`` knows its coefficients for exponents ``min_order`` through
``max_order``; everything above ``max_order`` is unknown (an ``O(x^(max_order+1))``
tail). Arithmetic propagates that bound, so no result ever claims a
coefficient it cannot know.

Coefficients are ``GaussRat`` or ``SymPoly``; both can be mixed freely.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial, isqrt
from typing import Callable, Iterable, Sequence

from .algebra import ONE, ZERO, DiffPoly, GaussRat, SymPoly

__all__ = [
    "LaurentSeries",
    "DepthError",
    "LogarithmicObstruction",
    "EllipticParams",
    "l_arith",
    "l_derive",
    "l_integrate",
    "eval_diffpoly",
    "required_depth",
    "sin_series",
    "csc_series",
    "wp_series",
    "wp_taylor_at_halfperiod",
    "example2_pq",
]


class DepthError(ValueError):
    """Input series are truncated too early for the requested output order."""

    def __init__(self, required: int, message: str = ""):
        self.required = required
        super().__init__(message or f"insufficient truncation depth: inputs must be known through x^{required}")


class LogarithmicObstruction(ValueError):
    """Integrating a series whose x^-1 coefficient is nonzero."""


def _coerce(c):
    if isinstance(c, (GaussRat, SymPoly)):
        return c
    return GaussRat.coerce(c)


def _as_scalar(c):
    if isinstance(c, SymPoly):
        v = c.constant_value()
        if v is not None:
            return v
    return c


class LaurentSeries:
    """Immutable truncated Laurent series ``sum c_e x^e`` for ``min_order <= e <= max_order``.

    Leading zero coefficients are stripped, so ``min_order`` is the true
    valuation whenever the series is not known to vanish through ``max_order``.
    """

    __slots__ = ("min_order", "max_order", "coeffs")

    def __init__(self, min_order: int, coeffs: Sequence, max_order: int | None = None):
        coeffs = [_coerce(c) for c in coeffs]
        if max_order is None:
            max_order = min_order + len(coeffs) - 1
        known = max_order - min_order + 1
        if known < 0:
            min_order, coeffs = max_order + 1, []
        else:
            coeffs = coeffs[:known] + [ZERO] * (known - len(coeffs))
        start = 0
        while start < len(coeffs) and not coeffs[start]:
            start += 1
        object.__setattr__(self, "min_order", min_order + start)
        object.__setattr__(self, "max_order", max_order)
        object.__setattr__(self, "coeffs", tuple(coeffs[start:]))

    def __setattr__(self, name, value):
        raise AttributeError("LaurentSeries is immutable")

    @classmethod
    def zero(cls, max_order: int) -> "LaurentSeries":
        return cls(max_order + 1, [], max_order)

    @classmethod
    def monomial(cls, c, exponent: int, max_order: int) -> "LaurentSeries":
        return cls(exponent, [c], max_order)

    # access --------------------------------------------------------------
    def coeff(self, e: int):
        if e > self.max_order:
            raise DepthError(e, f"coefficient of x^{e} is beyond the truncation x^{self.max_order}")
        if e < self.min_order:
            return ZERO
        return self.coeffs[e - self.min_order]

    def __getitem__(self, e: int):
        return self.coeff(e)

    def items(self) -> Iterable[tuple[int, object]]:
        return ((self.min_order + k, c) for k, c in enumerate(self.coeffs))

    def coeff_list(self, start: int) -> list:
        """Coefficients for exponents ``start .. max_order``."""
        return [self.coeff(e) for e in range(start, self.max_order + 1)]

    def is_zero(self) -> bool:
        return not self.coeffs

    def first_nonzero(self) -> tuple[int, object] | None:
        return (self.min_order, self.coeffs[0]) if self.coeffs else None

    def truncate(self, max_order: int) -> "LaurentSeries":
        if max_order > self.max_order:
            raise DepthError(max_order)
        return LaurentSeries(self.min_order, self.coeffs, max_order)

    def map(self, fn: Callable) -> "LaurentSeries":
        return LaurentSeries(self.min_order, [fn(c) for c in self.coeffs], self.max_order)

    def subs(self, values) -> "LaurentSeries":
        """Substitute constant symbols inside ``SymPoly`` coefficients."""
        return self.map(lambda c: _as_scalar(c.subs(values)) if isinstance(c, SymPoly) else c)

    # arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        hi = min(self.max_order, other.max_order)
        lo = min(self.min_order, other.min_order)
        out = []
        for e in range(lo, hi + 1):
            a = self.coeffs[e - self.min_order] if self.min_order <= e else None
            b = other.coeffs[e - other.min_order] if other.min_order <= e else None
            if a is None:
                out.append(b if b is not None else ZERO)
            elif b is None:
                out.append(a)
            else:
                out.append(a + b)
        return LaurentSeries(lo, out, hi)

    def __neg__(self):
        return LaurentSeries(self.min_order, [-c for c in self.coeffs], self.max_order)

    def __sub__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self + (-other)

    def scale(self, c) -> "LaurentSeries":
        c = _as_scalar(_coerce(c))
        if not c:
            return LaurentSeries.zero(self.max_order)
        return LaurentSeries(self.min_order, [x * c for x in self.coeffs], self.max_order)

    def __mul__(self, other):
        if isinstance(other, LaurentSeries):
            return self.mul(other)
        if isinstance(other, (GaussRat, SymPoly, int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (GaussRat, SymPoly, int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def mul(self, other: "LaurentSeries", max_order: int | None = None) -> "LaurentSeries":
        """Product, optionally truncated early at ``max_order``."""
        lo = self.min_order + other.min_order
        hi = min(self.max_order + other.min_order, other.max_order + self.min_order)
        if max_order is not None:
            hi = min(hi, max_order)
        a, b = self.coeffs, other.coeffs
        na, nb = len(a), len(b)
        out = []
        for k in range(hi - lo + 1):
            s = None
            for i in range(max(0, k - nb + 1), min(k, na - 1) + 1):
                x, y = a[i], b[k - i]
                if x and y:
                    s = x * y if s is None else s + x * y
            out.append(ZERO if s is None else s)
        return LaurentSeries(lo, out, hi)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        if k == 0:
            return LaurentSeries(0, [ONE], self.max_order - self.min_order)
        result = self
        for _ in range(k - 1):
            result = result.mul(self)
        return result

    def derive(self) -> "LaurentSeries":
        out = [c * e for e, c in self.items()]
        return LaurentSeries(self.min_order - 1, out, self.max_order - 1)

    def integrate(self) -> "LaurentSeries":
        if self.max_order < -1 and self.coeffs:
            raise DepthError(-1, "residue unknown: series truncated below x^-1")
        res = self.coeff(-1) if self.max_order >= -1 else ZERO
        if res:
            raise LogarithmicObstruction(f"logarithmic obstruction: nonzero residue {res}")
        out = []
        for e, c in self.items():
            out.append(ZERO if e == -1 else c / (e + 1))
        return LaurentSeries(self.min_order + 1, out, self.max_order + 1)

    # comparison ----------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (self.max_order == other.max_order and self.min_order == other.min_order
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.min_order, self.max_order, self.coeffs))

    def agrees_with(self, other: "LaurentSeries") -> bool:
        """Equal on every exponent both series know."""
        hi = min(self.max_order, other.max_order)
        lo = min(self.min_order, other.min_order)
        return all(self.coeff(e) == other.coeff(e) for e in range(lo, hi + 1))

    def __repr__(self):
        return f"LaurentSeries({self})"

    def __str__(self):
        parts = []
        for e, c in self.items():
            if c:
                parts.append(f"({c})*x^{e}" if e else f"({c})")
        body = " + ".join(parts) if parts else "0"
        return f"{body} + O(x^{self.max_order + 1})"

    # file format -----------------------------------------------------------
    def to_dict(self, var: str = "x", center: str = "0") -> dict:
        return {
            "var": var,
            "center": center,
            "min_order": self.min_order,
            "max_order": self.max_order,
            "coeffs": [str(c) for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LaurentSeries":
        min_order = int(data["min_order"])
        coeffs = [_parse_coeff(s) for s in data.get("coeffs", [])]
        max_order = data.get("max_order")
        return cls(min_order, coeffs, None if max_order is None else int(max_order))


def _parse_coeff(text):
    if isinstance(text, int) and not isinstance(text, bool):
        return GaussRat(text)
    sp = SymPoly.parse(text)
    return _as_scalar(sp)


# ---------------------------------------------------------------------------
# Top-level operations
# ---------------------------------------------------------------------------


def l_arith(a: LaurentSeries, b: LaurentSeries, op: str) -> LaurentSeries:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown series operation {op!r}")


def l_derive(a: LaurentSeries) -> LaurentSeries:
    return a.derive()


def l_integrate(a: LaurentSeries) -> LaurentSeries:
    return a.integrate()


def _product_precision(parts: list[LaurentSeries]) -> int:
    total_min = sum(s.min_order for s in parts)
    return min(s.max_order + total_min - s.min_order for s in parts)


class _DerivativeCache:
    def __init__(self, p: LaurentSeries, q: LaurentSeries):
        self.chains = {"p": [p], "q": [q]}
        self.powers: dict[tuple[int, int], LaurentSeries] = {}

    def get(self, idx: int) -> LaurentSeries:
        chain = self.chains["p" if idx % 2 == 0 else "q"]
        j = idx // 2
        while len(chain) <= j:
            chain.append(chain[-1].derive())
        return chain[j]

    def factors(self, mono) -> list[LaurentSeries]:
        return [self.get(idx) for idx, e in mono.factors for _ in range(e)]


def _eval_plan(f: DiffPoly, cache: _DerivativeCache, p: LaurentSeries, q: LaurentSeries) -> int:
    precision = None
    for mono in f.terms:
        if not mono.factors:
            continue
        prec = _product_precision(cache.factors(mono))
        precision = prec if precision is None else min(precision, prec)
    if precision is None:
        precision = min(p.max_order, q.max_order)
    return precision


def required_depth(f: DiffPoly, p: LaurentSeries, q: LaurentSeries, order: int) -> int:
    """Input truncation (same for p and q) needed to know ``f(p, q)`` through x^order."""
    depth = min(p.max_order, q.max_order)
    prec = _eval_plan(f, _DerivativeCache(p, q), p, q)
    return order + depth - prec


def eval_diffpoly(f: DiffPoly, p_series: LaurentSeries, q_series: LaurentSeries,
                  order: int | None = None) -> LaurentSeries:
    """Substitute series for ``p^(j)``, ``q^(j)`` in ``f``.

    The result is known through the largest exponent the inputs determine, or
    through ``order`` when given (``DepthError`` if the inputs fall short).
    """
    cache = _DerivativeCache(p_series, q_series)
    precision = _eval_plan(f, cache, p_series, q_series)
    if order is not None:
        if order > precision:
            depth = min(p_series.max_order, q_series.max_order)
            raise DepthError(order + depth - precision)
        precision = order
    result = LaurentSeries.zero(precision)
    by_mono: dict = {}
    for mono, coeff in f.terms.items():
        c = _as_scalar(coeff)
        if not mono.factors:
            term = LaurentSeries(0, [c], precision)
        else:
            key = mono.factors
            series = by_mono.get(key)
            if series is None:
                parts = cache.factors(mono)
                series = parts[0].truncate(min(parts[0].max_order, precision - sum(s.min_order for s in parts[1:])))
                for k, s in enumerate(parts[1:], start=1):
                    rest = sum(t.min_order for t in parts[k + 1:])
                    series = series.mul(s, max_order=precision - rest)
                by_mono[key] = series
            term = series.scale(c)
        result = result + term
    return result.truncate(precision) if result.max_order > precision else result


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def sin_series(K: int) -> LaurentSeries:
    """Taylor series of sin(x) through x^K."""
    coeffs = []
    for e in range(K + 1):
        if e % 2:
            coeffs.append(GaussRat(Fraction((-1) ** (e // 2), factorial(e))))
        else:
            coeffs.append(ZERO)
    return LaurentSeries(0, coeffs, K)


def _invert_power_series(a: list[Fraction], n: int) -> list[Fraction]:
    b = [Fraction(1) / a[0]]
    for k in range(1, n):
        s = sum(a[j] * b[k - j] for j in range(1, min(k, len(a) - 1) + 1))
        b.append(-s / a[0])
    return b


def csc_series(scale=1, K: int = 10) -> LaurentSeries:
    """``scale / sin(x)`` at x = 0 through x^K, by exact inversion of sin(x)/x."""
    if K < 0:
        raise ValueError("K must be non-negative")
    scale = GaussRat.coerce(scale)
    sinc = [Fraction((-1) ** (j // 2), factorial(j + 1)) if j % 2 == 0 else Fraction(0) for j in range(K + 2)]
    inv = _invert_power_series(sinc, K + 2)
    return LaurentSeries(-1, [scale * c for c in inv], K)


@dataclass(frozen=True)
class EllipticParams:
    """Weierstrass invariants with a rational half-period value ``e2``."""

    g2: GaussRat = GaussRat(4)
    g3: GaussRat = GaussRat(0)
    e2: GaussRat = GaussRat(1)

    def __post_init__(self):
        for name in ("g2", "g3", "e2"):
            object.__setattr__(self, name, GaussRat.coerce(getattr(self, name)))
        if 4 * self.e2 ** 3 - self.g2 * self.e2 - self.g3:
            raise ValueError(f"e2 = {self.e2} is not a root of 4e^3 - g2*e - g3")


def _wp_laurent_coeffs(g2: GaussRat, g3: GaussRat, kmax: int) -> dict[int, GaussRat]:
    c: dict[int, GaussRat] = {}
    for k in range(2, kmax + 1):
        if k == 2:
            c[k] = g2 / 20
        elif k == 3:
            c[k] = g3 / 28
        else:
            s = ZERO
            for m in range(2, k - 1):
                s = s + c[m] * c[k - m]
            c[k] = s * Fraction(3, (2 * k + 1) * (k - 3))
    return c


def wp_series(params: EllipticParams, K: int) -> LaurentSeries:
    """Weierstrass p-function at its pole, x^-2 + sum c_k x^(2k-2), through x^K."""
    kmax = max(2, (K + 2) // 2)
    c = _wp_laurent_coeffs(params.g2, params.g3, kmax)
    coeffs = [ZERO] * (K + 3)
    coeffs[0] = ONE
    for k, v in c.items():
        e = 2 * k - 2
        if e <= K:
            coeffs[e + 2] = v
    return LaurentSeries(-2, coeffs, K)


def wp_taylor_at_halfperiod(params: EllipticParams, K: int) -> LaurentSeries:
    """Taylor series of the p-function around the half-period where it equals ``e2``.

    Starts from value ``e2`` and zero slope, then applies p'' = 6 p^2 - g2/2.
    """
    t = [params.e2, ZERO]
    for j in range(0, K - 1):
        sq = ZERO
        for a in range(j + 1):
            sq = sq + t[a] * t[j - a]
        rhs = sq * 6 - (params.g2 / 2 if j == 0 else ZERO)
        t.append(rhs / ((j + 2) * (j + 1)))
    return LaurentSeries(0, t[:K + 1], K)


def _positive_square_root(c: GaussRat) -> int | None:
    if c.im or c.re.denominator != 1 or c.re <= 0:
        return None
    r = isqrt(c.re.numerator)
    return r if r * r == c.re.numerator else None


def example2_pq(params: EllipticParams, alpha, beta, K: int) -> tuple[LaurentSeries, LaurentSeries]:
    """Series at x = 0 of ``alpha*r`` and ``beta*r`` where r = zeta(x) - zeta(x - w2) - zeta(w2).

    Uses zeta' = -wp: the regular part of zeta(x) integrates minus the regular
    part of wp, and -zeta(x - w2) - zeta(w2) integrates wp around the
    half-period (the constants cancel because zeta is odd).
    """
    alpha, beta = GaussRat.coerce(alpha), GaussRat.coerce(beta)
    if _positive_square_root(alpha * beta) is None:
        raise ValueError(f"alpha*beta = {alpha * beta} is not the square of a positive integer")
    wp = wp_series(params, K - 1)
    wp_regular = wp - LaurentSeries.monomial(ONE, -2, wp.max_order)
    zeta_regular = -wp_regular.integrate()
    shifted = wp_taylor_at_halfperiod(params, K - 1).integrate()
    r = LaurentSeries.monomial(ONE, -1, K) + zeta_regular + shifted
    return r.scale(alpha), r.scale(beta)
