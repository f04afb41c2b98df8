"""Local Frobenius solutions of the ZS-AKNS system at a simple pole.

The system is

    i y1' - i q y2 = z y1
   -i y2' + i p y1 = z y2

with ``y = (x - a)^sigma * sum (alpha_k, beta_k) (x - a)^k``. Matching the
coefficient of ``(x - a)^(sigma + k - 1)`` gives, for each k >= 1,

    (sigma+k) alpha_k - psi_-1 beta_k =  sum_{j<k} psi_j beta_{k-1-j} - i z alpha_{k-1}
    phi_-1 alpha_k - (sigma+k) beta_k = -sum_{j<k} phi_j alpha_{k-1-j} - i z beta_{k-1}

whose determinant n^2 - (sigma+k)^2 vanishes only at k = 2n on the sigma = -n
branch. z stays symbolic, so every identity holds for all z at once.
"""
from __future__ import annotations

from dataclasses import dataclass

from .algebra import I, GaussRat, SymPoly
from .poles import PoleData, leading_square_root
from .series import LaurentSeries

__all__ = [
    "FrobeniusSolution",
    "MeromorphyVerdict",
    "NonIntegerExponents",
    "ResonanceObstruction",
    "indicial_exponents",
    "local_solution",
    "meromorphy_verdict",
    "residual_check",
]

Z = SymPoly.var("z")


class NonIntegerExponents(ValueError):
    """phi_-1 psi_-1 is not a perfect square: the pole is a branch point."""


class ResonanceObstruction(ValueError):
    def __init__(self, obstruction: SymPoly, sigma: int, k: int):
        self.obstruction = obstruction
        self.sigma = sigma
        self.k = k
        super().__init__(f"resonance at k={k} (sigma={sigma}) is obstructed: {obstruction}")


@dataclass(frozen=True)
class FrobeniusSolution:
    sigma: int
    n: int
    alpha: tuple
    beta: tuple
    resonance_free_choice: str | None = None

    @property
    def K(self) -> int:
        return len(self.alpha) - 1


@dataclass(frozen=True)
class MeromorphyVerdict:
    meromorphic: bool
    obstruction: SymPoly | None
    n: int | None
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "meromorphic": self.meromorphic,
            "n": self.n,
            "obstruction": None if self.obstruction is None else str(self.obstruction),
            "reason": self.reason,
        }


def indicial_exponents(d: PoleData) -> tuple[int, int]:
    """Roots sigma = +n, -n of sigma^2 = phi_-1 psi_-1."""
    product = d.phi_at(-1) * d.psi_at(-1)
    n, _ = leading_square_root(product)
    if n is None:
        raise NonIntegerExponents(f"non-integer exponents: phi_-1*psi_-1 = {product}")
    return n, -n


def local_solution(d: PoleData, sigma: int, K: int) -> FrobeniusSolution:
    """Coefficients (alpha_k, beta_k), k = 0..K, as polynomials in z.

    Normalised by (alpha_0, beta_0) = (psi_-1, sigma). At a solvable resonance
    alpha_2n is set to 0; an unsolvable one raises ``ResonanceObstruction``.
    """
    n, _ = indicial_exponents(d)
    if sigma not in (n, -n):
        raise ValueError(f"sigma must be +-{n}")
    if sigma == -n and K < 2 * n:
        raise ValueError(f"K must reach the resonance index {2 * n}")
    d.require_depth(K - 1)
    phi_m1, psi_m1 = d.phi_at(-1), d.psi_at(-1)
    alpha = [SymPoly.coerce(psi_m1)]
    beta = [SymPoly.const(GaussRat(sigma))]
    choice = None
    for k in range(1, K + 1):
        s = sigma + k
        F1 = -(Z * alpha[k - 1] * I)
        F2 = -(Z * beta[k - 1] * I)
        for j in range(k):
            F1 = F1 + beta[k - 1 - j] * d.psi_at(j)
            F2 = F2 - alpha[k - 1 - j] * d.phi_at(j)
        det = n * n - s * s
        if det:
            alpha.append((F2 * psi_m1 - F1 * s) / det)
            beta.append((F2 * s - F1 * phi_m1) / det)
        else:
            obstruction = F1 * phi_m1 - F2 * s
            if obstruction:
                raise ResonanceObstruction(obstruction, sigma, k)
            alpha.append(SymPoly())
            beta.append(-F1 / psi_m1)
            choice = f"alpha_{k} = 0"
    return FrobeniusSolution(sigma, n, tuple(alpha), tuple(beta), choice)


def meromorphy_verdict(d: PoleData, K: int | None = None) -> MeromorphyVerdict:
    """Both exponent branches solved with symbolic z; meromorphic iff no obstruction."""
    try:
        n, _ = indicial_exponents(d)
    except NonIntegerExponents as exc:
        return MeromorphyVerdict(False, None, None, str(exc))
    K = 2 * n if K is None else K
    try:
        local_solution(d, n, K)
        local_solution(d, -n, K)
    except ResonanceObstruction as exc:
        return MeromorphyVerdict(False, exc.obstruction, n, "logarithmic term at resonance")
    return MeromorphyVerdict(True, SymPoly(), n, None)


def residual_check(d: PoleData, sol: FrobeniusSolution, K: int | None = None) -> str | int:
    """Substitute the truncated solution into the system.

    Returns ``"clean"`` when every determinable coefficient vanishes, else the
    lowest exponent carrying a nonzero residual.
    """
    if not sol.alpha[0] and not sol.beta[0]:
        raise ValueError("zero solution: (alpha_0, beta_0) must not both vanish")
    top = sol.K if K is None else min(K, sol.K)
    y1 = LaurentSeries(sol.sigma, sol.alpha[:top + 1], sol.sigma + top)
    y2 = LaurentSeries(sol.sigma, sol.beta[:top + 1], sol.sigma + top)
    p, q = d.to_series()
    r1 = y1.derive().scale(I) - (q * y2).scale(I) - y1.scale(Z)
    r2 = -y2.derive().scale(I) + (p * y1).scale(I) - y2.scale(Z)
    hits = [s.min_order for s in (r1, r2) if not s.is_zero()]
    return min(hits) if hits else "clean"
