"""Seeded generators shared by the property suites."""
from __future__ import annotations

import random
from fractions import Fraction

from aknsgap import DiffPoly, GaussRat, PoleData, SymPoly


def rand_frac(rng: random.Random, span: int = 9, nonzero: bool = False) -> Fraction:
    while True:
        f = Fraction(rng.randint(-span, span), rng.randint(1, 6))
        if f or not nonzero:
            return f


def rand_gauss(rng: random.Random, nonzero: bool = False, real: bool = False) -> GaussRat:
    while True:
        g = GaussRat(rand_frac(rng), 0 if real else rand_frac(rng))
        if g or not nonzero:
            return g


def rand_sympoly(rng: random.Random, names=("C1", "C2", "z"), terms: int = 3) -> SymPoly:
    out = SymPoly()
    for _ in range(rng.randint(0, terms)):
        t = SymPoly.const(rand_gauss(rng))
        for name in names:
            t = t * SymPoly.var(name) ** rng.randint(0, 2)
        out = out + t
    return out


def rand_diffpoly(rng: random.Random, max_order: int = 3, max_degree: int = 3, terms: int = 4,
                  symbolic: bool = False) -> DiffPoly:
    out = DiffPoly()
    for _ in range(rng.randint(1, terms)):
        coeff = rand_sympoly(rng, ("C1",), 2) if symbolic else rand_gauss(rng, nonzero=True)
        t = DiffPoly.const(coeff)
        for _ in range(rng.randint(0, max_degree)):
            t = t * DiffPoly.var(rng.choice("pq"), rng.randint(0, max_order))
        out = out + t
    return out


def pattern_pole(rng: random.Random, n: int, depth: int | None = None, through: int | None = None) -> PoleData:
    """Random pole data obeying the classification pattern for n.

    The sign pattern is imposed for indices 0..``through`` (default 2n, the
    extent the odd-coefficient chain of pq needs); later entries are random.
    """
    depth = 2 * n + 1 if depth is None else depth
    through = 2 * n if through is None else through
    a = rand_frac(rng, nonzero=True)
    if rng.random() < 0.3:
        a = GaussRat(a, rand_frac(rng))
        if not a:
            a = GaussRat(1, 1)
    a = GaussRat.coerce(a)
    b = GaussRat(n * n) / a
    ratio = a * a / (n * n)
    phi, psi = [a], [b]
    for k in range(depth + 1):
        s = rand_gauss(rng)
        psi.append(s)
        phi.append(s * ratio * (1 if k % 2 else -1) if k <= through else rand_gauss(rng))
    return PoleData(tuple(phi), tuple(psi))
