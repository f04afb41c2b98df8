"""Simple-pole analysis of (p, q): the leading-coefficient classifier, the pq
product pattern, and leading-coefficient probes of f_k, g_k.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

from .algebra import ZERO, GaussRat, SymPoly
from .akns import ConstantVector, compute_fg, constant_symbol
from .series import DepthError, LaurentSeries, eval_diffpoly

__all__ = [
    "PoleData",
    "PoleReport",
    "ProductReport",
    "ProbeResult",
    "ClassificationError",
    "leading_square_root",
    "classify_pole",
    "product_laurent",
    "fg_pole_probe",
]


def _coerce(c):
    return c if isinstance(c, (GaussRat, SymPoly)) else GaussRat.coerce(c)


@dataclass(frozen=True)
class PoleData:
    """Laurent coefficients of p (``phi``) and q (``psi``) at a simple pole.

    Lists start at index -1, so ``phi[0]`` is the residue of p.
    """

    phi: tuple
    psi: tuple

    def __post_init__(self):
        phi = tuple(_coerce(c) for c in self.phi)
        psi = tuple(_coerce(c) for c in self.psi)
        if not phi or not psi or not phi[0] or not psi[0]:
            raise ValueError("simple pole required: phi_-1 and psi_-1 must be present and nonzero")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)

    @property
    def depth(self) -> int:
        """Largest index k for which both phi_k and psi_k are known."""
        return min(len(self.phi), len(self.psi)) - 2

    def phi_at(self, k: int):
        return self.phi[k + 1]

    def psi_at(self, k: int):
        return self.psi[k + 1]

    def require_depth(self, k: int):
        if self.depth < k:
            raise DepthError(k, f"pole data must reach index {k} (have {self.depth})")

    def to_series(self) -> tuple[LaurentSeries, LaurentSeries]:
        d = self.depth
        return (LaurentSeries(-1, self.phi[:d + 2], d), LaurentSeries(-1, self.psi[:d + 2], d))

    @classmethod
    def from_series(cls, p: LaurentSeries, q: LaurentSeries, K: int | None = None) -> "PoleData":
        top = min(p.max_order, q.max_order) if K is None else K
        return cls(tuple(p.coeff(e) for e in range(-1, top + 1)),
                   tuple(q.coeff(e) for e in range(-1, top + 1)))

    def to_dict(self) -> dict:
        return {"phi": [str(c) for c in self.phi], "psi": [str(c) for c in self.psi]}

    def with_phi(self, k: int, value) -> "PoleData":
        phi = list(self.phi)
        phi[k + 1] = value
        return PoleData(tuple(phi), self.psi)

    def with_psi(self, k: int, value) -> "PoleData":
        psi = list(self.psi)
        psi[k + 1] = value
        return PoleData(self.phi, tuple(psi))


@dataclass(frozen=True)
class PoleReport:
    n: int | None
    passes: bool
    first_failure: dict | None
    checked_through: int

    def to_dict(self) -> dict:
        return {"n": self.n, "passes": self.passes, "first_failure": self.first_failure,
                "checked_through": self.checked_through}


def leading_square_root(product) -> tuple[int | None, str | None]:
    """Positive integer n with n^2 == product, else ``(None, failure code)``."""
    if isinstance(product, SymPoly):
        c = product.constant_value()
        if c is None:
            return None, "leading-product-symbolic"
        product = c
    if product.im or product.re.denominator != 1:
        return None, "leading-product-not-integer"
    v = product.re.numerator
    if v <= 0:
        return None, "leading-product-not-square"
    r = isqrt(v)
    if r * r != v:
        return None, "leading-product-not-square"
    return r, None


def classify_pole(d: PoleData) -> PoleReport:
    """Check phi_-1 psi_-1 = n^2 and phi_k = (-1)^(k+1) psi_k phi_-1^2 / n^2 for 0 <= k <= 2n-1."""
    a, b = d.phi_at(-1), d.psi_at(-1)
    product = a * b
    n, code = leading_square_root(product)
    if n is None:
        detail = f"leading product {product} not a perfect square"
        if code == "leading-product-not-integer":
            detail = f"leading product {product} is not an integer"
        return PoleReport(None, False, {"condition": "a", "index": -1, "code": code, "detail": detail}, -1)
    d.require_depth(2 * n - 1)
    ratio = a * a / (n * n)
    for k in range(2 * n):
        expected = d.psi_at(k) * ratio * (1 if k % 2 else -1)
        if d.phi_at(k) != expected:
            return PoleReport(n, False, {"condition": "b", "index": k, "code": "coefficient-pattern",
                                         "detail": f"phi_{k} = {d.phi_at(k)}, expected {expected}"}, k - 1)
    return PoleReport(n, True, None, 2 * n - 1)


class ClassificationError(ValueError):
    def __init__(self, report: PoleReport):
        self.report = report
        super().__init__(f"pole classification failed: {report.first_failure}")


@dataclass(frozen=True)
class ProductReport:
    series: LaurentSeries
    n: int
    vanishing_ok: bool
    first_failure: dict | None


def product_laurent(d: PoleData) -> ProductReport:
    """Laurent series of pq with its h_-2 = n^2, h_-1 = h_1 = ... = h_{2n-1} = 0 check."""
    report = classify_pole(d)
    if not report.passes:
        raise ClassificationError(report)
    n = report.n
    p, q = d.to_series()
    pq = p * q
    failure = None
    if pq.coeff(-2) != n * n:
        failure = {"index": -2, "value": str(pq.coeff(-2))}
    else:
        for e in [-1] + list(range(1, 2 * n, 2)):
            if pq.coeff(e):
                failure = {"index": e, "value": str(pq.coeff(e))}
                break
    return ProductReport(pq, n, failure is None, failure)


@dataclass(frozen=True)
class ProbeResult:
    """Coefficients of f_k, g_k at x^-k (``*_lead``) and x^(-k+1) (``*_next``)."""

    k: int
    A_lead: object
    B_lead: object
    order: int | None
    A_next: object = None
    B_next: object = None


def fg_pole_probe(k: int, d: PoleData, constants=None) -> ProbeResult:
    """Evaluate f_k, g_k on the pole data and read off the top coefficients.

    Constants default to zero. ``order`` is the lowest exponent with a nonzero
    coefficient in f_k or g_k among those the data determine.
    """
    pair = compute_fg(k)
    if constants is None:
        mapping = {constant_symbol(j): ZERO for j in range(1, k)}
    else:
        cv = constants if isinstance(constants, ConstantVector) else ConstantVector(tuple(constants))
        mapping = cv.extended(k - 1).as_mapping()
    f, g = pair.f.subs(mapping), pair.g.subs(mapping)
    p, q = d.to_series()
    sf = eval_diffpoly(f, p, q)
    sg = eval_diffpoly(g, p, q)
    top = min(sf.max_order, sg.max_order)
    if top < -k:
        raise DepthError(-1)
    orders = [s.min_order for s in (sf, sg) if s.min_order <= top]
    order = min(orders) if orders else None
    nxt = -k + 1
    A_next = sf.coeff(nxt) if nxt <= top else None
    B_next = sg.coeff(nxt) if nxt <= top else None
    return ProbeResult(k, sf.coeff(-k), sg.coeff(-k), order, A_next, B_next)
