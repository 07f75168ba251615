"""Random ideal members and non-members for both families."""

from __future__ import annotations

import random
from fractions import Fraction

from matchideal.algebra import Polynomial, mono_from_vars, x, y
from matchideal.certificate import expand
from matchideal.matching import generators_P, partial_matching
from matchideal.tour import bipartite_matching, generators_Q


def variables(kind: str, n: int) -> list:
    if kind == "match":
        return [x(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
    return [y(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]


def generators(kind: str, n: int) -> list:
    return generators_P(n) if kind == "match" else generators_Q(n)


def random_monomial(kind: str, n: int, degree: int, rng: random.Random):
    pool = variables(kind, n)
    return mono_from_vars(rng.choice(pool) for _ in range(degree))


def random_member(kind: str, n: int, degree: int, rng: random.Random) -> Polynomial:
    """``sum q_g g`` with ``deg(q_g g) <= degree`` and total degree exactly ``degree``."""
    gens = [g for g in generators(kind, n) if g.degree <= degree]
    while True:
        F = Polynomial()
        for _ in range(rng.randint(1, 3)):
            g = rng.choice(gens)
            q = Polynomial({random_monomial(kind, n, degree - g.degree, rng): rng.choice([-3, -2, -1, 1, 2, 3])
                            for _ in range(rng.randint(1, 2))})
            F = F + q * expand(g, n)
        if not F.is_zero() and F.degree == degree:
            return F


def random_partial(kind: str, n: int, size: int, rng: random.Random):
    if kind == "match":
        verts = rng.sample(range(1, n + 1), 2 * size)
        return partial_matching(zip(verts[::2], verts[1::2]), n)
    rows = rng.sample(range(1, n + 1), size)
    cols = rng.sample(range(1, n + 1), size)
    return bipartite_matching(zip(rows, cols), n)


def random_nonmember(kind: str, n: int, degree: int, rng: random.Random) -> Polynomial:
    """A member plus a nonzero multiple of one solution-supported monomial."""
    size = rng.randint(0, min(degree, n // 2 if kind == "match" else n))
    m = random_partial(kind, n, size, rng)
    return random_member(kind, n, degree, rng) + Polynomial.monomial(m, Fraction(rng.choice([1, -1, 2, -3]), rng.choice([1, 2])))
