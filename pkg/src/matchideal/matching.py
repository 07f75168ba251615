"""The perfect-matching ideal of K_n: generators, oracles, normal forms and
low-degree derivations.

Partial matchings are passed around as iterables of vertex pairs and
represented internally as multilinear monomials ``x_M``.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from typing import Iterable

from .algebra import Monomial, Polynomial, x
from .certificate import (
    ADJ,
    DEG,
    SQ,
    CofactorTable,
    DerivationCertificate,
    Gen,
    build_certificate,
    chain,
    linear_combination,
    relabel_certificate,
    reversed_certificate,
    verify_certificate,
    zero_certificate,
)
from .config import current_limits
from .engine import MatchFamily, family, matching_mono, mono_vars, perfect_matchings
from .errors import (
    DerivationTooLarge,
    InternalInvariant,
    InvalidInput,
    InvalidLevel,
    InvalidSize,
    NotAMember,
    SymmetrizationTooLarge,
    VertexCollision,
    VertexCovered,
)
from .lemmas import expand_unit, lift, symmetric_sum, telescoped_symmetrization

__all__ = [
    "generators_P",
    "enumerate_perfect_matchings",
    "is_zero_on_matchings",
    "matching_witness",
    "normal_form",
    "expand_vertex",
    "lift_matching",
    "symmetrize_constant",
    "matching_constant",
    "lift_generator",
    "derive_zero",
    "verify_certificate",
    "partial_matching",
]


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise InvalidSize(f"K_n needs an even n >= 2, got {n}")


def _fam(n: int) -> MatchFamily:
    _check_even(n)
    return family("match", n)


def partial_matching(edges: Iterable, n: int) -> Monomial:
    """Validate a set of disjoint pairs and return its monomial ``x_M``."""
    seen: set = set()
    variables = []
    for u, v in edges:
        if u == v or not (1 <= u <= n and 1 <= v <= n):
            raise InvalidInput(f"bad edge {u}-{v} for K_{n}")
        if u in seen or v in seen:
            raise InvalidInput(f"edges share a vertex at {u}-{v}")
        seen.update((u, v))
        variables.append(x(u, v))
    return matching_mono(variables)


def edges_of(m) -> tuple:
    """Sorted vertex pairs of a matching monomial or variable set."""
    vs = mono_vars(m) if isinstance(m, tuple) else m
    return tuple(sorted((v[1], v[2]) for v in vs))


def generators_P(n: int) -> list[Gen]:
    _check_even(n)
    gens = [SQ(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
    for u in range(1, n + 1):
        others = [v for v in range(1, n + 1) if v != u]
        gens.extend(ADJ(u, v, w) for i, v in enumerate(others) for w in others[i + 1:])
    gens.extend(DEG(v) for v in range(1, n + 1))
    return gens


def enumerate_perfect_matchings(n: int) -> list[tuple]:
    """All ``(n-1)!!`` perfect matchings as sorted edge tuples."""
    _check_even(n)
    return list(perfect_matchings(n))


def matching_witness(F: Polynomial, n: int):
    """``(matching, value)`` for a perfect matching where ``F`` is nonzero, else None."""
    fam = _fam(n)
    perfect_matchings(n)  # enforce the oracle bound
    hit = fam.nonzero_solution(F)
    return None if hit is None else (edges_of(hit[0]), hit[1])


def is_zero_on_matchings(F: Polynomial, n: int) -> bool:
    return matching_witness(F, n) is None


def normal_form(F: Polynomial, n: int) -> tuple[Polynomial, DerivationCertificate]:
    """Rewrite ``F`` so every monomial is a partial matching."""
    return _fam(n).normal_form(F)


def expand_vertex(M: Iterable, a: int, n: int) -> tuple[Polynomial, DerivationCertificate]:
    """``x_M`` congruent to the sum of ``x_{M + au}`` over uncovered ``u``."""
    fam = _fam(n)
    m = partial_matching(M, n)
    if not 1 <= a <= n:
        raise InvalidInput(f"vertex {a} not in 1..{n}")
    if a in fam._partners(m):
        raise VertexCovered(f"vertex {a} is covered by the matching")
    return expand_unit(fam, m, DEG(a))


def lift_matching(M: Iterable, k: int, n: int) -> tuple[Polynomial, DerivationCertificate]:
    """``x_M`` congruent to ``1/C(n/2-d, k-d)`` times the sum of its size-``k`` extensions."""
    fam = _fam(n)
    m = partial_matching(M, n)
    if not len(m) <= k <= n // 2:
        raise InvalidLevel(f"need |M| = {len(m)} <= k <= {n // 2}, got k = {k}")
    return lift(fam, m, k)


def matching_constant(n: int, k: int) -> int:
    """Closed form of the symmetrized constant of one size-``k`` matching monomial."""
    return 2**k * factorial(k) * factorial(n - 2 * k) * comb(n // 2, k)


def symmetrize_constant(F: Polynomial, n: int) -> tuple[Fraction, DerivationCertificate]:
    """``sum over S_n of sigma F`` congruent to a constant, in degree ``deg F``."""
    fam = _fam(n)
    limit = current_limits().max_symmetrize
    if n > limit:
        raise SymmetrizationTooLarge(f"n={n} exceeds the symmetrization bound {limit}")
    return _symmetrize(fam, F)


def _symmetrize(fam: MatchFamily, F: Polynomial) -> tuple[Fraction, DerivationCertificate]:
    fam.check_kind(F)
    n = fam.n
    H = symmetric_sum(F, n)
    nf, nf_cert = fam.normal_form(H)
    by_size: dict = {}
    for m, c in nf.terms.items():
        by_size.setdefault(len(m), {})[m] = c
    parts = [(1, zero_certificate("match", n, Polynomial.constant(nf.constant_term())))]
    levels = fam.matchings_up_to(n // 2)
    for k, terms in sorted(by_size.items()):
        if k == 0:
            continue
        values = set(terms.values())
        if len(values) != 1 or len(terms) != len(levels[k]):
            raise InternalInvariant(f"symmetrized polynomial is not constant on size-{k} matchings")
        (alpha,) = values
        size = comb(n // 2, k)
        # lift gives 1 ~ (1/size) * sum_k; reversed and scaled it gives alpha * sum_k ~ alpha * size
        parts.append((alpha * size, reversed_certificate(lift(fam, (), k)[1])))
    classes = linear_combination(parts, "match", n)
    cert = chain(nf_cert, classes)
    return cert.result.constant_term(), cert


def lift_generator(cert: DerivationCertificate, a: int, b: int) -> DerivationCertificate:
    """Move ``L ~ G`` over K_{n-2} to ``L x_ab ~ G x_ab`` over K_n, with n-1, n the new vertices."""
    if cert.family != "match":
        raise InvalidInput("lift_generator expects a matching certificate")
    n = cert.n + 2
    if {a, b} != {n - 1, n}:
        raise VertexCollision(f"{{{a}, {b}}} are not the fresh vertices {{{n - 1}, {n}}}")
    e = ((x(a, b), 1),)
    table = CofactorTable()
    for gen, q in cert.cofactors:
        if gen.name == "DEG":
            (v,) = gen.args
            table.add_poly(DEG(v), q.terms, 1, e)
            table.add_poly(ADJ(a, v, b), q.terms, -1)
            table.add_poly(ADJ(b, v, a), q.terms, -1)
        else:
            table.add_poly(gen, q.terms, 1, e)
    xab = Polynomial.var(x(a, b))
    return DerivationCertificate(
        "match", n, cert.source * xab, cert.result * xab, cert.degree + 1, table.items(), cert.method
    )


def derive_zero(F: Polynomial, n: int, method: str = "direct", degree: int | None = None) -> DerivationCertificate:
    """Certificate of ``F`` congruent to 0 over P_n, of degree at most ``2 deg F - 1``.

    ``degree`` asks the direct method for a specific bound instead.
    """
    fam = _fam(n)
    if method == "direct":
        try:
            return fam.derive(F, degree)
        except NotAMember as exc:
            if exc.witness is not None:
                exc.witness = edges_of(exc.witness)
            raise
    if method != "inductive":
        raise InvalidInput(f"unknown method {method!r}")
    limits = current_limits()
    if n > limits.max_inductive_n or F.degree > limits.max_inductive_degree:
        raise DerivationTooLarge(
            f"inductive derivation is limited to n <= {limits.max_inductive_n}, deg <= {limits.max_inductive_degree}"
        )
    fam.check_kind(F)
    hit = fam.nonzero_solution(F)
    if hit is not None:
        raise NotAMember(f"polynomial is {hit[1]} on a perfect matching", witness=edges_of(hit[0]), value=hit[1])
    return _inductive(fam, F)


def _inductive(fam: MatchFamily, F: Polynomial) -> DerivationCertificate:
    nf, nf_cert = fam.normal_form(F)
    if nf.is_zero():
        return DerivationCertificate("match", fam.n, F, nf, nf_cert.degree, nf_cert.cofactors, "inductive")
    d = int(nf.degree)
    if d == 0:
        raise InternalInvariant("nonzero constant passed the membership oracle")
    if d == 1:
        tail = fam.derive(nf, degree=1, check_oracle=False)
    else:
        swaps = telescoped_symmetrization(fam, nf, lambda G, moved, a, u: _swap_certificate(fam, G, moved, a, u))
        c, sym = _symmetrize(fam, nf)
        if c:
            raise InternalInvariant(f"symmetrized constant of an ideal member is {c}, not 0")
        scale = Fraction(1, factorial(fam.n))
        tail = linear_combination([(scale, swaps), (scale, sym)], "match", fam.n)
    return chain(nf_cert, tail, method="inductive")


def _swap_certificate(fam: MatchFamily, G: Polynomial, moved: Polynomial, a: int, u: int) -> DerivationCertificate:
    """``G - (a u)G`` congruent to 0 for ``G`` in normal form and in the ideal."""
    n = fam.n
    P = G - moved
    table = CofactorTable()
    expanded: dict = {}

    def put(m, c):
        v = expanded.get(m, 0) + c
        if v:
            expanded[m] = v
        else:
            expanded.pop(m, None)

    for m, c in P.terms.items():
        cov = fam._partners(m)
        if a in cov and u in cov:
            put(m, c)
        elif a in cov or u in cov:
            gen = DEG(u) if a in cov else DEG(a)
            fam.unit_certificate_terms(table, m, gen, c)
            for ext in fam.unit_terms(m, gen)[0]:
                put(ext, c)
        else:
            raise InternalInvariant("a monomial avoiding both swapped vertices survived the difference")
    Q = Polynomial(expanded)
    step = build_certificate("match", n, P, Q, table)
    if Q.is_zero():
        return step
    groups: dict = {}
    for m, c in Q.terms.items():
        cov = fam._partners(m)
        b, v = cov[a], cov[u]
        if b == u:
            key, rest = (u,), _drop(m, x(a, u))
        else:
            key, rest = (b, v), _drop(m, x(a, b), x(u, v))
        groups.setdefault(key, {})[rest] = c
    parts = [(1, _group_certificate(fam, a, u, key, terms)) for key, terms in sorted(groups.items())]
    return chain(step, linear_combination(parts, "match", n))


def _drop(m: Monomial, *variables) -> Monomial:
    return tuple(t for t in m if t[0] not in variables)


def _group_certificate(fam: MatchFamily, a: int, u: int, key: tuple, terms: dict) -> DerivationCertificate:
    """Certify ``x_ab x_uv L`` (or ``x_au L``) congruent to 0 from a smaller instance."""
    n = fam.n
    fixed = (a, u) if len(key) == 1 else (a, key[0], u, key[1])
    W = [w for w in range(1, n + 1) if w not in fixed]
    pos = {w: i for i, w in enumerate(W, start=1)}
    L = Polynomial({tuple((x(pos[v[1]], pos[v[2]]), 1) for v in mono_vars(m)): c for m, c in terms.items()})
    sub = family("match", len(W))
    if not sub.vanishes(L):
        raise InternalInvariant(f"restricted polynomial for swap ({a} {u}) does not vanish on K_{len(W)}")
    cert = _inductive(sub, L)
    if len(key) == 1:
        cert = lift_generator(cert, n - 1, n)
        images = {n - 1: a, n: u}
    else:
        cert = lift_generator(lift_generator(cert, n - 3, n - 2), n - 1, n)
        images = {n - 3: u, n - 2: key[1], n - 1: a, n: key[0]}
    images.update({i: w for w, i in pos.items()})
    return relabel_certificate(cert, n, images.__getitem__)
