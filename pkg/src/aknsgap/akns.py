"""Stationary AKNS hierarchy: the (f_k, g_k) recursion and its stationarity checks.

The recursion is

    f_{k+1} =  (i/2) f_k' - i q (H_k + C_k)
    g_{k+1} = -(i/2) g_k' + i p (H_k + C_k),      H_k' = p f_k + q g_k,

seeded with f_1 = -i q, g_1 = i p. ``H_k`` is the antiderivative with zero
constant term; the integration constants enter only through the symbols C_k.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .algebra import I, ZERO, DiffPoly, GaussRat, NotExactError, SymPoly, dp_integrate, symbol_key
from .series import LaurentSeries, eval_diffpoly, required_depth

__all__ = [
    "HierarchyPair",
    "ConstantVector",
    "StationaryVerdict",
    "InternalInvariantError",
    "SolveError",
    "Infeasible",
    "Inconclusive",
    "constant_symbol",
    "compute_fg",
    "stationary_residual",
    "stationary_depth",
    "solve_constants",
    "solve_polynomial_system",
    "propagation_check",
]


class InternalInvariantError(RuntimeError):
    """A mathematical invariant of the recursion failed; indicates a bug."""


class SolveError(ValueError):
    pass


class Infeasible(SolveError):
    """No Gaussian-rational constants make the residual vanish."""


class Inconclusive(SolveError):
    """Nonlinear branching exceeded its bound or hit an undecidable root search."""


def constant_symbol(k: int) -> str:
    return f"C{k}"


@dataclass(frozen=True)
class HierarchyPair:
    k: int
    f: DiffPoly
    g: DiffPoly
    constants_used: tuple[str, ...]


@dataclass(frozen=True)
class ConstantVector:
    """Values of C_1, ..., C_m in order. ``None`` keeps a constant symbolic."""

    values: tuple = ()

    def __post_init__(self):
        vals = tuple(None if v is None else GaussRat.coerce(v) for v in self.values)
        object.__setattr__(self, "values", vals)

    @classmethod
    def parse(cls, text: str) -> "ConstantVector":
        text = text.strip()
        if not text:
            return cls(())
        return cls(tuple(GaussRat.parse(t) for t in text.split(",")))

    @classmethod
    def zeros(cls, m: int) -> "ConstantVector":
        return cls((ZERO,) * m)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k: int):
        return self.values[k]

    def extended(self, m: int) -> "ConstantVector":
        """Pad with zeros so that C_1 .. C_m all have values."""
        if len(self.values) >= m:
            return self
        return ConstantVector(self.values + (ZERO,) * (m - len(self.values)))

    def as_mapping(self) -> dict[str, GaussRat]:
        return {constant_symbol(k + 1): v for k, v in enumerate(self.values) if v is not None}

    def to_strings(self) -> list[str]:
        return ["symbolic" if v is None else str(v) for v in self.values]

    def __str__(self):
        return "(" + ", ".join(self.to_strings()) + ")"


@dataclass(frozen=True)
class StationaryVerdict:
    m: int
    residual_f: LaurentSeries
    residual_g: LaurentSeries
    checked_through: int
    is_zero: bool
    first_nonzero: dict | None = field(default=None)


# ---------------------------------------------------------------------------
# The recursion
# ---------------------------------------------------------------------------

_P = DiffPoly.var("p")
_Q = DiffPoly.var("q")
_HALF_I = I / 2

_memo: dict[int, HierarchyPair] = {}
_memo_lock = threading.Lock()


def _step(pair: HierarchyPair) -> HierarchyPair:
    k = pair.k
    try:
        H = dp_integrate(_P * pair.f + _Q * pair.g)
    except NotExactError as exc:
        raise InternalInvariantError(f"p*f_{k} + q*g_{k} is not exact: {exc}") from exc
    S = H + SymPoly.var(constant_symbol(k))
    f = pair.f.derive() * _HALF_I - _Q * S * I
    g = -(pair.g.derive() * _HALF_I) + _P * S * I
    return HierarchyPair(k + 1, f, g, pair.constants_used + (constant_symbol(k),))


def compute_fg(k: int) -> HierarchyPair:
    """(f_k, g_k) with symbolic constants C_1 .. C_{k-1}; memoized."""
    if k < 1:
        raise ValueError("k must be >= 1")
    pair = _memo.get(k)
    if pair is not None:
        return pair
    with _memo_lock:
        if not _memo:
            _memo[1] = HierarchyPair(1, _Q * (-I), _P * I, ())
        start = max(j for j in _memo if j <= k)
        pair = _memo[start]
        while pair.k < k:
            pair = _step(pair)
            _memo[pair.k] = pair
    return pair


# ---------------------------------------------------------------------------
# Stationarity on series
# ---------------------------------------------------------------------------


def _constants_mapping(c) -> dict[str, GaussRat]:
    if c is None:
        return {}
    if isinstance(c, ConstantVector):
        return c.as_mapping()
    if isinstance(c, Mapping):
        return {k: GaussRat.coerce(v) for k, v in c.items()}
    return ConstantVector(tuple(c)).as_mapping()


def _first_nonzero(rf: LaurentSeries, rg: LaurentSeries, k: int) -> dict | None:
    best = None
    for name, series in ((f"f{k}", rf), (f"g{k}", rg)):
        hit = series.first_nonzero()
        if hit is not None and (best is None or hit[0] < best["order"]):
            best = {"which": name, "order": hit[0], "coeff": str(hit[1])}
    return best


def stationary_depth(p_series: LaurentSeries, q_series: LaurentSeries, m: int, K: int) -> int:
    """Input truncation needed to verify f_{m+1}, g_{m+1} through x^K."""
    pair = compute_fg(m + 1)
    return max(required_depth(pair.f, p_series, q_series, K),
               required_depth(pair.g, p_series, q_series, K))


def _evaluate(k: int, p_series, q_series, constants: Mapping[str, GaussRat], K: int | None):
    pair = compute_fg(k)
    f, g = pair.f.subs(constants), pair.g.subs(constants)
    if K is None:
        rf = eval_diffpoly(f, p_series, q_series)
        rg = eval_diffpoly(g, p_series, q_series)
        top = min(rf.max_order, rg.max_order)
        return rf.truncate(top), rg.truncate(top), top
    return eval_diffpoly(f, p_series, q_series, K), eval_diffpoly(g, p_series, q_series, K), K


def stationary_residual(p_series: LaurentSeries, q_series: LaurentSeries, m: int,
                        c=None, K: int | None = None) -> StationaryVerdict:
    """Evaluate f_{m+1}, g_{m+1} on the series with constants substituted.

    Without ``K`` every coefficient the inputs determine is checked.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rf, rg, top = _evaluate(m + 1, p_series, q_series, _constants_mapping(c), K)
    first = _first_nonzero(rf, rg, m + 1)
    return StationaryVerdict(m, rf, rg, top, first is None, first)


def propagation_check(p_series: LaurentSeries, q_series: LaurentSeries, m: int, c,
                      depth: int, K: int | None = None) -> bool:
    """True iff f_k = g_k = 0 for m+1 <= k <= m+depth, unspecified constants set to zero."""
    constants = ConstantVector(tuple(c.values if isinstance(c, ConstantVector) else c)).extended(m + depth)
    mapping = constants.as_mapping()
    for k in range(m + 1, m + depth + 1):
        rf, rg, _ = _evaluate(k, p_series, q_series, mapping, K)
        if not (rf.is_zero() and rg.is_zero()):
            return False
    return True


# ---------------------------------------------------------------------------
# Solving for the constants
# ---------------------------------------------------------------------------


def _divisors(n: int, limit: int = 10 ** 12) -> list[int] | None:
    n = abs(n)
    if n > limit:
        return None
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def _rational_roots(poly: SymPoly, var: str) -> list[GaussRat] | None:
    """All Gaussian-rational roots of a univariate polynomial, or None if undecided."""
    by_exp = poly.coeffs_in(var)
    top = max(by_exp)
    lead = by_exp[top].constant_value()
    coeffs = {}
    for e, c in by_exp.items():
        v = c.constant_value()
        if v is None:
            return None
        coeffs[e] = v / lead
    if any(v.im for v in coeffs.values()):
        return None
    low = min(coeffs)
    roots = [ZERO] if low > 0 else []
    fr = {e - low: v.re for e, v in coeffs.items()}
    deg = top - low
    if deg == 0:
        return roots
    denom = 1
    for v in fr.values():
        denom = denom * v.denominator // _gcd(denom, v.denominator)
    ints = {e: int(v * denom) for e, v in fr.items()}
    a0, an = ints.get(0, 0), ints[deg]
    num_divs, den_divs = _divisors(a0), _divisors(an)
    if num_divs is None or den_divs is None:
        return None
    found = set()
    for d in num_divs:
        for e in den_divs:
            for s in (1, -1):
                r = Fraction(s * d, e)
                if r in found:
                    continue
                if sum(c * r ** k for k, c in fr.items()) == 0:
                    found.add(r)
    roots.extend(GaussRat(r) for r in sorted(found))
    return sorted(roots, key=lambda g: (g.re, g.im))


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


class _Budget:
    def __init__(self, bound: int):
        self.bound = bound
        self.used = 0

    def spend(self):
        self.used += 1
        if self.used > self.bound:
            raise Inconclusive(f"branch bound {self.bound} exceeded")


def _compose(assign: dict[str, SymPoly], var: str, value: SymPoly) -> dict[str, SymPoly]:
    out = {k: v.subs({var: value}) for k, v in assign.items()}
    out[var] = value
    return out


def _solve(eqs: list[SymPoly], assign: dict[str, SymPoly], unknowns: set[str],
           budget: _Budget) -> dict[str, SymPoly] | None:
    queue = list(eqs)
    deferred: list[SymPoly] = []
    while queue:
        e = queue.pop(0).subs(assign)
        if not e:
            continue
        names = [v for v in e.variables if v in unknowns]
        if not names:
            return None
        if e.degree() == 1:
            var = min(names, key=symbol_key)
            coeff = e.coeffs_in(var)[1].constant_value()
            rest = e - SymPoly.var(var) * coeff
            assign = _compose(assign, var, -rest / coeff)
            queue = deferred + queue
            deferred = []
            continue
        if len(names) == 1:
            roots = _rational_roots(e, names[0])
            if roots is None:
                raise Inconclusive(f"cannot decide Gaussian-rational roots of {e}")
            remaining = deferred + queue
            for root in roots:
                budget.spend()
                sub = _solve(remaining, _compose(assign, names[0], SymPoly.const(root)), unknowns, budget)
                if sub is not None:
                    return sub
            return None
        deferred.append(e)
    if deferred:
        raise Inconclusive(f"unresolved multivariate nonlinear equation {deferred[0]}")
    return assign


def solve_polynomial_system(equations: Sequence[SymPoly], variables: Sequence[str],
                            branch_bound: int = 16) -> dict[str, GaussRat]:
    """First Gaussian-rational solution in deterministic order.

    Equations are consumed in the given order; a linear equation eliminates its
    smallest unknown, a univariate nonlinear one branches over its rational
    roots. Unknowns left unconstrained are set to zero.
    """
    unknowns = set(variables)
    result = _solve(list(equations), {}, unknowns, _Budget(branch_bound))
    if result is None:
        raise Infeasible("no Gaussian-rational solution")
    free = {v: ZERO for v in variables}
    values = {}
    for v in variables:
        expr = result.get(v, SymPoly.var(v)).subs(free)
        values[v] = expr.constant_value()
    for eq in equations:
        if eq.subs(values):
            raise InternalInvariantError(f"solution does not satisfy {eq}")
    return values


def solve_constants(p_series: LaurentSeries, q_series: LaurentSeries, m: int,
                    K: int | None = None, branch_bound: int = 16) -> ConstantVector:
    """Exact C_1 .. C_m with f_{m+1} = g_{m+1} = 0 through x^K.

    Raises ``Infeasible`` or ``Inconclusive``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rf, rg, top = _evaluate(m + 1, p_series, q_series, {}, K)
    equations = []
    for e in range(min(rf.min_order, rg.min_order), top + 1):
        for series in (rf, rg):
            c = series.coeff(e)
            if c:
                equations.append(SymPoly.coerce(c))
    names = [constant_symbol(k) for k in range(1, m + 1)]
    values = solve_polynomial_system(equations, names, branch_bound)
    return ConstantVector(tuple(values[n] for n in names))
