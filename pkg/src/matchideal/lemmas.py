"""Constructive congruences shared by the matching and tour ideals.

Each function returns a right-hand side together with a certificate whose
source is the left-hand side; everything here is family-generic and works
through the hooks of :class:`matchideal.engine.Family`.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from functools import lru_cache
from math import factorial

from .algebra import Monomial, Polynomial, Permutation, act
from .certificate import (
    CofactorTable,
    DerivationCertificate,
    Gen,
    build_certificate,
    chain,
    linear_combination,
    zero_certificate,
)
from .engine import Family

_lock = threading.Lock()


def expand_unit(fam: Family, m: Monomial, gen: Gen) -> tuple[Polynomial, DerivationCertificate]:
    """``x_M`` congruent to the sum of its extensions through one uncovered vertex/row."""
    exts = fam.unit_terms(m, gen)[0]
    table = CofactorTable()
    fam.unit_certificate_terms(table, m, gen, 1)
    rhs = Polynomial({e: 1 for e in exts})
    return rhs, build_certificate(fam.name, fam.n, Polynomial.monomial(m), rhs, table)


@lru_cache(maxsize=32)
def _lift_memo(name: str, n: int, k: int) -> dict:
    return {}


def lift(fam: Family, m: Monomial, k: int) -> tuple[Polynomial, DerivationCertificate]:
    """Average ``x_M`` over all its extensions of size ``k``."""
    cert = _lift(fam, m, k, _lift_memo(fam.name, fam.n, k))
    return cert.result, cert


def _lift(fam: Family, m: Monomial, k: int, memo: dict) -> DerivationCertificate:
    if len(m) == k:
        return zero_certificate(fam.name, fam.n, Polynomial.monomial(m))
    with _lock:
        hit = memo.get(m)
    if hit is not None:
        return hit
    units = fam.vertex_units(m)
    share = Fraction(1, len(units))
    step = linear_combination(((share, expand_unit(fam, m, g)[1]) for g in units), fam.name, fam.n)
    parts = [(w, _lift(fam, ext, k, memo)) for ext, w in sorted(step.result.terms.items())]
    cert = chain(step, linear_combination(parts, fam.name, fam.n))
    with _lock:
        memo[m] = cert
    return cert


def symmetric_sum(F: Polynomial, n: int) -> Polynomial:
    """``sum over sigma in S_n of sigma F``, built along the coset chain S_1 < S_2 < ... < S_n."""
    G = F
    for k in range(2, n + 1):
        total = G
        for j in range(1, k):
            total = total + act(Permutation.transposition(n, j, k), G)
        G = total
    return G


def telescoped_symmetrization(fam: Family, F: Polynomial, transposition_certificate) -> DerivationCertificate:
    """Certificate of ``n! F - sum_sigma sigma F`` congruent to 0.

    With ``G_1 = F`` and ``G_k = sum_{j <= k} (j k) G_{k-1}`` one has
    ``k G_{k-1} - G_k = sum_{j < k} (G_{k-1} - (j k) G_{k-1})``; weighting the
    k-th identity by ``n!/k!`` telescopes to the claim.
    """
    n = fam.n
    parts = []
    G = F
    for k in range(2, n + 1):
        total = G
        weight = Fraction(factorial(n), factorial(k))
        for j in range(1, k):
            moved = act(Permutation.transposition(n, j, k), G)
            total = total + moved
            if moved != G:
                parts.append((weight, transposition_certificate(G, moved, j, k)))
        G = total
    if not parts:
        return zero_certificate(fam.name, fam.n, F.scale(factorial(n)) - G)
    return linear_combination(parts, fam.name, fam.n)
