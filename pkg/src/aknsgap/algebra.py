"""Exact coefficient arithmetic and the differential polynomial ring in p, q.

Three layers live here:

* ``GaussRat``: complex numbers ``re + im*i`` with rational parts.
* ``SymPoly``: polynomials in named constant symbols (``C1``, ``z``, ...) with
  ``GaussRat`` coefficients.
* ``DiffPoly``: polynomials in ``p^(j)``, ``q^(j)`` (x-derivatives of p and q)
  with ``SymPoly`` coefficients, closed under the total derivative and under
  formal integration of exact elements.

All values are immutable once built. Text forms round-trip through ``parse``.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

__all__ = [
    "GaussRat",
    "SymPoly",
    "DiffMono",
    "DiffPoly",
    "ParseError",
    "NotExactError",
    "I",
    "ONE",
    "ZERO",
    "dp_derive",
    "dp_integrate",
    "parse_expr",
]

RationalLike = Union[int, Fraction, str]


class ParseError(ValueError):
    """Malformed canonical text. ``column`` is 1-based within the parsed string."""

    def __init__(self, message: str, text: str = "", column: int = 0):
        self.text = text
        self.column = column
        where = f" at column {column}" if column else ""
        super().__init__(f"{message}{where}: {text!r}" if text else message)


class NotExactError(ValueError):
    """Raised by ``dp_integrate`` when the input is not a total derivative."""

    def __init__(self, witness: "DiffMono", message: str = ""):
        self.witness = witness
        super().__init__(message or f"not exact: no antiderivative reaches monomial {witness}")


# ---------------------------------------------------------------------------
# Gaussian rationals
# ---------------------------------------------------------------------------


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class GaussRat:
    """Exact complex rational ``re + im*i``."""

    __slots__ = ("re", "im")

    def __init__(self, re: RationalLike = 0, im: RationalLike = 0):
        object.__setattr__(self, "re", _frac(re))
        object.__setattr__(self, "im", _frac(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussRat is immutable")

    @classmethod
    def coerce(cls, x) -> "GaussRat":
        if isinstance(x, GaussRat):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(x)
        if isinstance(x, complex):
            raise TypeError("floating-point complex values are not exact")
        if isinstance(x, str):
            return cls.parse(x)
        raise TypeError(f"cannot convert {type(x).__name__} to GaussRat")

    @classmethod
    def parse(cls, text: str) -> "GaussRat":
        poly = parse_expr(text)
        value = poly.constant_value()
        if value is None:
            raise ParseError("expected a Gaussian rational", text, _first_symbol_column(text))
        return value

    # arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, GaussRat):
            return GaussRat(self.re + other.re, self.im + other.im)
        if isinstance(other, (int, Fraction)):
            return GaussRat(self.re + other, self.im)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GaussRat):
            return GaussRat(self.re - other.re, self.im - other.im)
        if isinstance(other, (int, Fraction)):
            return GaussRat(self.re - other, self.im)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return GaussRat(other - self.re, -self.im)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, GaussRat):
            a, b, c, d = self.re, self.im, other.re, other.im
            if not b:
                return GaussRat(a * c, a * d)
            if not d:
                return GaussRat(a * c, b * c)
            return GaussRat(a * c - b * d, a * d + b * c)
        if isinstance(other, (int, Fraction)):
            return GaussRat(self.re * other, self.im * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("GaussRat division by zero")
            return GaussRat(self.re / other, self.im / other)
        if isinstance(other, GaussRat):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return GaussRat(other) * self.inverse()
        return NotImplemented

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result, base = ONE, self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def inverse(self) -> "GaussRat":
        n = self.abs2()
        if n == 0:
            raise ZeroDivisionError("GaussRat division by zero")
        return GaussRat(self.re / n, -self.im / n)

    def conj(self) -> "GaussRat":
        return GaussRat(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return self.im == 0

    # comparison ----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, GaussRat):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, SymPoly):
            return other == self
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __repr__(self):
        return f"GaussRat({str(self)!r})"

    def __str__(self):
        re_, im_ = self.re, self.im
        if im_ == 0:
            return str(re_)
        if im_ == 1:
            im_s = "i"
        elif im_ == -1:
            im_s = "-i"
        else:
            im_s = f"{im_}*i"
        if re_ == 0:
            return im_s
        return f"{re_}{im_s}" if im_s.startswith("-") else f"{re_}+{im_s}"

    def _needs_parens(self) -> bool:
        return bool(self.re) and bool(self.im)


ZERO = GaussRat(0)
ONE = GaussRat(1)
I = GaussRat(0, 1)


# ---------------------------------------------------------------------------
# Polynomials in constant symbols
# ---------------------------------------------------------------------------

_SYM_RE = re.compile(r"([A-Za-z_]+?)(\d*)$")


def symbol_key(name: str):
    """Natural ordering: C2 < C10, letters before indices."""
    m = _SYM_RE.match(name)
    if m is None:
        return (name, -1, name)
    prefix, digits = m.groups()
    return (prefix, int(digits) if digits else -1, name)


SymMono = tuple  # tuple of (name, exp) sorted by symbol_key


def _mono_mul(a: SymMono, b: SymMono) -> SymMono:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for name, e in b:
        d[name] = d.get(name, 0) + e
    return tuple(sorted(d.items(), key=lambda t: symbol_key(t[0])))


def _mono_key(m: SymMono):
    return (sum(e for _, e in m), tuple((symbol_key(n), e) for n, e in m))


class SymPoly:
    """Polynomial in named constant symbols with ``GaussRat`` coefficients.

    Monomials are sparse: a sorted tuple of ``(symbol, exponent)`` pairs. No
    zero coefficient is ever stored.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[SymMono, GaussRat] | None = None):
        clean = {}
        if terms:
            for m, c in terms.items():
                c = GaussRat.coerce(c)
                if c:
                    clean[m] = c
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("SymPoly is immutable")

    @classmethod
    def _raw(cls, terms: dict) -> "SymPoly":
        obj = object.__new__(cls)
        object.__setattr__(obj, "terms", terms)
        object.__setattr__(obj, "_hash", None)
        return obj

    @classmethod
    def const(cls, c) -> "SymPoly":
        c = GaussRat.coerce(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def var(cls, name: str) -> "SymPoly":
        return cls._raw({((name, 1),): ONE})

    @classmethod
    def coerce(cls, x) -> "SymPoly":
        if isinstance(x, SymPoly):
            return x
        return cls.const(x)

    @classmethod
    def parse(cls, text: str) -> "SymPoly":
        poly = parse_expr(text)
        sp = poly.as_sympoly()
        if sp is None:
            raise ParseError("expected a polynomial in constant symbols", text, _first_symbol_column(text, "pq"))
        return sp

    # structure -----------------------------------------------------------
    @property
    def variables(self) -> tuple[str, ...]:
        names = {n for m in self.terms for n, _ in m}
        return tuple(sorted(names, key=symbol_key))

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_value(self) -> GaussRat | None:
        if not self.terms:
            return ZERO
        if len(self.terms) == 1 and () in self.terms:
            return self.terms[()]
        return None

    def constant_term(self) -> GaussRat:
        return self.terms.get((), ZERO)

    def degree(self, name: str | None = None) -> int:
        if not self.terms:
            return -1
        if name is None:
            return max(sum(e for _, e in m) for m in self.terms)
        return max(dict(m).get(name, 0) for m in self.terms)

    def coeffs_in(self, name: str) -> dict[int, "SymPoly"]:
        """Coefficients as a polynomial in ``name`` (other symbols kept)."""
        out: dict[int, dict] = {}
        for m, c in self.terms.items():
            d = dict(m)
            e = d.pop(name, 0)
            rest = tuple(sorted(d.items(), key=lambda t: symbol_key(t[0])))
            out.setdefault(e, {})[rest] = c
        return {e: SymPoly._raw(t) for e, t in out.items()}

    def subs(self, values: Mapping[str, object]) -> "SymPoly":
        if not values or not self.terms:
            return self
        vals = {k: SymPoly.coerce(v) for k, v in values.items()}
        result = SymPoly._raw({})
        for m, c in self.terms.items():
            kept = []
            factor = SymPoly.const(c)
            for name, e in m:
                if name in vals:
                    factor = factor * vals[name] ** e
                else:
                    kept.append((name, e))
            result = result + factor * SymPoly._raw({tuple(kept): ONE})
        return result

    def sorted_terms(self) -> list[tuple[SymMono, GaussRat]]:
        # total degree descending, then lexicographic in the natural symbol order
        return sorted(self.terms.items(),
                      key=lambda t: (-sum(e for _, e in t[0]), tuple((symbol_key(n), -e) for n, e in t[0])))

    # arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, SymPoly):
            if isinstance(other, (GaussRat, int, Fraction)):
                other = SymPoly.const(other)
            else:
                return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        t = dict(self.terms)
        for m, c in other.terms.items():
            s = t.get(m)
            if s is None:
                t[m] = c
            else:
                s = s + c
                if s:
                    t[m] = s
                else:
                    del t[m]
        return SymPoly._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return SymPoly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, (SymPoly, GaussRat, int, Fraction)):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (GaussRat, int, Fraction)):
            if not other:
                return SymPoly._raw({})
            return SymPoly._raw({m: c * other for m, c in self.terms.items()})
        if not isinstance(other, SymPoly):
            return NotImplemented
        if not self.terms or not other.terms:
            return SymPoly._raw({})
        t: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                s = t.get(m)
                t[m] = c1 * c2 if s is None else s + c1 * c2
        return SymPoly._raw({m: c for m, c in t.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SymPoly):
            c = other.constant_value()
            if c is None:
                raise TypeError("division by a non-constant SymPoly")
            other = c
        if isinstance(other, (GaussRat, int, Fraction)):
            inv = GaussRat.coerce(other).inverse()
            return SymPoly._raw({m: c * inv for m, c in self.terms.items()})
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = SymPoly.const(ONE)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # comparison ----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, SymPoly):
            return self.terms == other.terms
        if isinstance(other, (GaussRat, int, Fraction)):
            c = self.constant_value()
            return c is not None and c == other
        return NotImplemented

    def __hash__(self):
        h = self._hash
        if h is None:
            c = self.constant_value()
            h = hash(c) if c is not None else hash(frozenset(self.terms.items()))
            object.__setattr__(self, "_hash", h)
        return h

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"SymPoly({str(self)!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in m)
            if not mono:
                s = str(c)
            elif c == 1:
                s = mono
            elif c == -1:
                s = "-" + mono
            elif c._needs_parens():
                s = f"({c})*{mono}"
            else:
                s = f"{c}*{mono}"
            parts.append(s)
        out = parts[0]
        for s in parts[1:]:
            out += f" - {s[1:]}" if s.startswith("-") else f" + {s}"
        return out


# ---------------------------------------------------------------------------
# Differential monomials and polynomials
# ---------------------------------------------------------------------------
# A differential variable is encoded as an index: 2*j for p^(j), 2*j+1 for
# q^(j). Sorting by index gives p < q and lower derivative order first.


def var_index(name: str, order: int) -> int:
    if name not in ("p", "q") or order < 0:
        raise ValueError(f"bad differential variable {name}^({order})")
    return 2 * order + (0 if name == "p" else 1)


def var_name(idx: int) -> tuple[str, int]:
    return ("p" if idx % 2 == 0 else "q", idx // 2)


class DiffMono:
    """Monomial in p^(j), q^(j): a sorted tuple of ``(index, exponent)``."""

    __slots__ = ("factors", "_hash")

    def __init__(self, factors: Iterable[tuple[int, int]] = ()):
        d: dict[int, int] = {}
        for idx, e in factors:
            if e < 0:
                raise ValueError("negative exponent")
            if e:
                d[idx] = d.get(idx, 0) + e
        object.__setattr__(self, "factors", tuple(sorted(d.items())))
        object.__setattr__(self, "_hash", hash(self.factors))

    def __setattr__(self, name, value):
        raise AttributeError("DiffMono is immutable")

    @classmethod
    def _raw(cls, factors: tuple) -> "DiffMono":
        obj = object.__new__(cls)
        object.__setattr__(obj, "factors", factors)
        object.__setattr__(obj, "_hash", hash(factors))
        return obj

    @classmethod
    def of(cls, name: str, order: int = 0, exp: int = 1) -> "DiffMono":
        return cls([(var_index(name, order), exp)])

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.factors)

    @property
    def deg_p(self) -> int:
        return sum(e for idx, e in self.factors if idx % 2 == 0)

    @property
    def deg_q(self) -> int:
        return sum(e for idx, e in self.factors if idx % 2 == 1)

    @property
    def weight(self) -> int:
        """Weight with p^(j), q^(j) counted as j + 1."""
        return sum(e * (idx // 2 + 1) for idx, e in self.factors)

    @property
    def max_order(self) -> int:
        return max((idx // 2 for idx, _ in self.factors), default=-1)

    def sort_key(self):
        return (self.degree, tuple(reversed(self.factors)))

    def __lt__(self, other: "DiffMono"):
        return self.sort_key() < other.sort_key()

    def __mul__(self, other: "DiffMono") -> "DiffMono":
        if not self.factors:
            return other
        if not other.factors:
            return self
        return DiffMono(self.factors + other.factors)

    def derive(self) -> list[tuple[int, "DiffMono"]]:
        """Leibniz rule: list of ``(multiplicity, monomial)``."""
        out = []
        fs = self.factors
        for pos, (idx, e) in enumerate(fs):
            rest = list(fs[:pos]) + ([(idx, e - 1)] if e > 1 else []) + list(fs[pos + 1:])
            out.append((e, DiffMono(rest + [(idx + 2, 1)])))
        return out

    def __eq__(self, other):
        return isinstance(other, DiffMono) and self.factors == other.factors

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"DiffMono({str(self)!r})"

    def __str__(self):
        if not self.factors:
            return "1"
        parts = []
        for idx, e in self.factors:
            name, j = var_name(idx)
            parts.append(f"{name}^({j})" if e == 1 else f"{name}^({j})^{e}")
        return " * ".join(parts)


UNIT = DiffMono()


class DiffPoly:
    """Differential polynomial: map ``DiffMono -> SymPoly`` without zero values."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[DiffMono, object] | None = None):
        clean = {}
        if terms:
            for m, c in terms.items():
                c = SymPoly.coerce(c)
                if c:
                    clean[m] = c
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("DiffPoly is immutable")

    @classmethod
    def _raw(cls, terms: dict) -> "DiffPoly":
        obj = object.__new__(cls)
        object.__setattr__(obj, "terms", terms)
        object.__setattr__(obj, "_hash", None)
        return obj

    @classmethod
    def var(cls, name: str, order: int = 0) -> "DiffPoly":
        return cls._raw({DiffMono.of(name, order): SymPoly.const(ONE)})

    @classmethod
    def const(cls, c) -> "DiffPoly":
        c = SymPoly.coerce(c)
        return cls._raw({UNIT: c} if c else {})

    @classmethod
    def coerce(cls, x) -> "DiffPoly":
        if isinstance(x, DiffPoly):
            return x
        return cls.const(x)

    @classmethod
    def parse(cls, text: str) -> "DiffPoly":
        return parse_expr(text)

    # structure -----------------------------------------------------------
    def sorted_terms(self) -> list[tuple[DiffMono, SymPoly]]:
        return sorted(self.terms.items(), key=lambda t: t[0].sort_key(), reverse=True)

    def constant_term(self) -> SymPoly:
        return self.terms.get(UNIT, SymPoly._raw({}))

    def constant_value(self) -> GaussRat | None:
        sp = self.as_sympoly()
        return None if sp is None else sp.constant_value()

    def as_sympoly(self) -> SymPoly | None:
        if not self.terms:
            return SymPoly._raw({})
        if len(self.terms) == 1 and UNIT in self.terms:
            return self.terms[UNIT]
        return None

    def max_order(self) -> int:
        return max((m.max_order for m in self.terms), default=-1)

    def symbols(self) -> tuple[str, ...]:
        names = set()
        for c in self.terms.values():
            names.update(c.variables)
        return tuple(sorted(names, key=symbol_key))

    def subs(self, values: Mapping[str, object]) -> "DiffPoly":
        """Substitute constant symbols in the coefficients."""
        return DiffPoly({m: c.subs(values) for m, c in self.terms.items()})

    # arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, DiffPoly):
            if isinstance(other, (SymPoly, GaussRat, int, Fraction)):
                other = DiffPoly.const(other)
            else:
                return NotImplemented
        t = dict(self.terms)
        for m, c in other.terms.items():
            s = t.get(m)
            if s is None:
                t[m] = c
            else:
                s = s + c
                if s:
                    t[m] = s
                else:
                    del t[m]
        return DiffPoly._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, (DiffPoly, SymPoly, GaussRat, int, Fraction)):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (SymPoly, GaussRat, int, Fraction)):
            if not other:
                return DiffPoly._raw({})
            t = {}
            for m, c in self.terms.items():
                v = c * other
                if v:
                    t[m] = v
            return DiffPoly._raw(t)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        t: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 * m2
                s = t.get(m)
                t[m] = c1 * c2 if s is None else s + c1 * c2
        return DiffPoly._raw({m: c for m, c in t.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (GaussRat, int, Fraction)):
            inv = GaussRat.coerce(other).inverse()
            return self * inv
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = DiffPoly.const(ONE)
        for _ in range(k):
            result = result * self
        return result

    def derive(self) -> "DiffPoly":
        return dp_derive(self)

    # comparison ----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, DiffPoly):
            return self.terms == other.terms
        if isinstance(other, (SymPoly, GaussRat, int, Fraction)):
            return self == DiffPoly.const(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[DiffMono, SymPoly]]:
        return iter(self.sorted_terms())

    def __repr__(self):
        return f"DiffPoly({str(self)!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            if m.factors:
                parts.append(f"({c}) * {m}")
            else:
                parts.append(f"({c})")
        return " + ".join(parts)


def dp_derive(f: DiffPoly) -> DiffPoly:
    """Total x-derivative; constant symbols are annihilated."""
    t: dict = {}
    for m, c in f.terms.items():
        for mult, dm in m.derive():
            v = c * mult
            s = t.get(dm)
            t[dm] = v if s is None else s + v
    return DiffPoly._raw({m: c for m, c in t.items() if c})


# ---------------------------------------------------------------------------
# Formal integration
# ---------------------------------------------------------------------------


def _orders_with_sum(count: int, total: int, max_part: int) -> Iterator[tuple[int, ...]]:
    """Non-increasing tuples of ``count`` non-negative ints summing to ``total``."""
    if count == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, max_part), -1, -1):
        if first * count < total:
            break
        for rest in _orders_with_sum(count - 1, total - first, first):
            yield (first,) + rest


def _candidate_monos(deg_p: int, deg_q: int, weight: int) -> list[DiffMono]:
    """All monomials with the given p-degree, q-degree and weight."""
    extra = weight - deg_p - deg_q
    if extra < 0:
        return []
    out = []
    for split in range(extra + 1):
        for po in _orders_with_sum(deg_p, split, split):
            for qo in _orders_with_sum(deg_q, extra - split, extra - split):
                fac = [(2 * j, 1) for j in po] + [(2 * j + 1, 1) for j in qo]
                out.append(DiffMono(fac))
    return out


def _solve_graded(h_terms: dict[DiffMono, SymPoly], deg_p: int, deg_q: int, weight: int) -> dict[DiffMono, SymPoly]:
    cands = _candidate_monos(deg_p, deg_q, weight - 1)
    witness_default = max(h_terms, key=lambda m: m.sort_key())
    if not cands:
        raise NotExactError(witness_default)

    # Columns: derivatives of candidates, integer entries.
    rows: dict[DiffMono, int] = {}
    columns = []
    for cm in cands:
        col = {}
        for mult, dm in cm.derive():
            r = rows.setdefault(dm, len(rows))
            col[r] = col.get(r, 0) + mult
        columns.append(col)
    for m in h_terms:
        if m not in rows:
            raise NotExactError(m)

    row_labels = [None] * len(rows)
    for m, r in rows.items():
        row_labels[r] = m

    # Right-hand sides, one per symbol monomial of the coefficients.
    sym_monos = sorted({sm for c in h_terms.values() for sm in c.terms}, key=_mono_key)
    nrows, ncols, nrhs = len(rows), len(cands), len(sym_monos)
    A = [[Fraction(0)] * ncols for _ in range(nrows)]
    for j, col in enumerate(columns):
        for r, v in col.items():
            A[r][j] = Fraction(v)
    B = [[ZERO] * nrhs for _ in range(nrows)]
    for m, c in h_terms.items():
        r = rows[m]
        for k, sm in enumerate(sym_monos):
            B[r][k] = c.terms.get(sm, ZERO)

    labels = list(range(nrows))
    pivots = []
    prow = 0
    for col in range(ncols):
        piv = next((r for r in range(prow, nrows) if A[r][col]), None)
        if piv is None:
            continue
        A[prow], A[piv] = A[piv], A[prow]
        B[prow], B[piv] = B[piv], B[prow]
        labels[prow], labels[piv] = labels[piv], labels[prow]
        inv = 1 / A[prow][col]
        A[prow] = [a * inv for a in A[prow]]
        B[prow] = [b * inv for b in B[prow]]
        for r in range(nrows):
            if r != prow and A[r][col]:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[prow])]
                B[r] = [a - b * f for a, b in zip(B[r], B[prow])]
        pivots.append(col)
        prow += 1
        if prow == nrows:
            break
    for r in range(prow, nrows):
        if any(B[r]):
            raise NotExactError(row_labels[labels[r]])

    out: dict[DiffMono, SymPoly] = {}
    for r, col in enumerate(pivots):
        coeff = SymPoly({sm: B[r][k] for k, sm in enumerate(sym_monos)})
        if coeff:
            out[cands[col]] = coeff
    return out


def dp_integrate(h: DiffPoly) -> DiffPoly:
    """Antiderivative ``H`` with ``H' = h`` and zero constant term.

    Exactness is decided per graded piece (p-degree, q-degree, weight) by a
    finite linear solve over all candidate antiderivative monomials. Raises
    ``NotExactError`` carrying a witness monomial otherwise.
    """
    groups: dict[tuple[int, int, int], dict] = {}
    for m, c in h.terms.items():
        groups.setdefault((m.deg_p, m.deg_q, m.weight), {})[m] = c
    result: dict[DiffMono, SymPoly] = {}
    for key in sorted(groups):
        deg_p, deg_q, weight = key
        if deg_p + deg_q == 0:
            raise NotExactError(UNIT, "not exact: a nonzero constant integrates to a multiple of x")
        result.update(_solve_graded(groups[key], deg_p, deg_q, weight))
    return DiffPoly._raw(result)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<diff>[pq])\^\((?P<order>\d+)\)"
    r"|(?P<num>\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    pos = 0
    tokens = []
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            col = len(text) - len(text[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {text[col - 1]!r}", text, col)
        col = m.end() - len(m.group(0).lstrip()) + 1
        if m.group("diff"):
            tokens.append(("diff", (m.group("diff"), int(m.group("order"))), col))
        elif m.group("num"):
            tokens.append(("num", int(m.group("num")), col))
        elif m.group("name"):
            tokens.append(("name", m.group("name"), col))
        else:
            tokens.append(("op", m.group("op"), col))
        pos = m.end()
    tokens.append(("end", None, len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.text, tok[2])

    def parse(self) -> DiffPoly:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        val = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return val

    def expr(self) -> DiffPoly:
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        elif self.peek()[:2] == ("op", "+"):
            self.take()
        val = self.term() * sign
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self) -> DiffPoly:
        val = self.factor()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op_tok = self.take()
            rhs = self.factor()
            if op_tok[1] == "*":
                val = val * rhs
            else:
                c = rhs.constant_value()
                if c is None:
                    self.fail("division by a non-constant", op_tok)
                if not c:
                    self.fail("division by zero", op_tok)
                val = val / c
        return val

    def factor(self) -> DiffPoly:
        base = self.atom()
        while self.peek()[:2] == ("op", "^"):
            self.take()
            tok = self.take()
            if tok[0] != "num":
                self.fail("expected integer exponent", tok)
            base = base ** tok[1]
        return base

    def atom(self) -> DiffPoly:
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return DiffPoly.const(GaussRat(val))
        if kind == "diff":
            return DiffPoly.var(*val)
        if kind == "name":
            if val == "i":
                return DiffPoly.const(I)
            if val in ("p", "q"):
                return DiffPoly.var(val, 0)
            return DiffPoly.const(SymPoly.var(val))
        if tok[:2] == ("op", "("):
            inner = self.expr()
            if self.peek()[:2] != ("op", ")"):
                self.fail("expected ')'")
            self.take()
            return inner
        if tok[:2] == ("op", "-"):
            return -self.factor()
        self.fail(f"unexpected token {val!r}", tok)


def _first_symbol_column(text: str, names: str | None = None) -> int:
    """Column of the first token that is not a number: any symbol, or only p/q when ``names`` is given."""
    for kind, val, col in _tokenize(text):
        if kind == "diff" or (kind == "name" and val != "i" and (names is None or val in names)):
            return col
    return 0


def parse_expr(text: str) -> DiffPoly:
    """Parse canonical (or hand-written) text into a ``DiffPoly``.

    Accepts integers, ``/``, ``i``, constant symbols, ``p``, ``q`` and
    ``p^(j)``, ``q^(j)``, with ``+ - * ^`` and parentheses.
    """
    if not isinstance(text, str):
        raise ParseError(f"expected a string, got {type(text).__name__}")
    return _Parser(text).parse()
