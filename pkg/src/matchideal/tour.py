"""The tour ideal on K_{n,n}: rows are vertices, columns are positions, and the
solutions are the n! permutation matrices. Permutations act on row labels only.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from typing import Iterable, NamedTuple

from .algebra import Monomial, Polynomial, y
from .certificate import (
    COL,
    COLADJ,
    ROW,
    ROWADJ,
    RSQ,
    CofactorTable,
    DerivationCertificate,
    Gen,
    build_certificate,
    chain,
    linear_combination,
    relabel_certificate,
    zero_certificate,
)
from .config import current_limits
from .engine import TourFamily, family, matching_mono, mono_vars, tours
from .errors import (
    DerivationTooLarge,
    InternalInvariant,
    InvalidInput,
    InvalidLevel,
    InvalidSize,
    NotAMember,
    RowCovered,
    SymmetrizationTooLarge,
    VertexCollision,
)
from .lemmas import expand_unit, lift, symmetric_sum, telescoped_symmetrization

__all__ = [
    "generators_Q",
    "enumerate_tours",
    "is_zero_on_tours",
    "tour_witness",
    "tour_normal_form",
    "tour_expand_vertex",
    "tour_lift_matching",
    "tour_symmetrize_constant",
    "tour_constant_report",
    "tour_lift_generator",
    "tour_derive_zero",
    "bipartite_matching",
]


def _fam(n: int) -> TourFamily:
    if n < 1:
        raise InvalidSize(f"K_{{n,n}} needs n >= 1, got {n}")
    return family("tour", n)


def bipartite_matching(pairs: Iterable, n: int) -> Monomial:
    """Validate ``(row, column)`` pairs with distinct rows and columns; return ``y_M``."""
    rows, cols, variables = set(), set(), []
    for i, j in pairs:
        if not (1 <= i <= n and 1 <= j <= n):
            raise InvalidInput(f"bad cell ({i}, {j}) for K_{{{n},{n}}}")
        if i in rows or j in cols:
            raise InvalidInput(f"cell ({i}, {j}) reuses a row or column")
        rows.add(i)
        cols.add(j)
        variables.append(y(i, j))
    return matching_mono(variables)


def _as_tour(sol: frozenset) -> tuple:
    return tuple(j for _, j in sorted((v[1], v[2]) for v in sol))


def generators_Q(n: int) -> list[Gen]:
    _fam(n)
    r = range(1, n + 1)
    gens = [ROW(i) for i in r] + [COL(j) for j in r]
    gens += [RSQ(i, j) for i in r for j in r]
    gens += [ROWADJ(i, j, k) for i in r for j in r for k in r if j < k]
    gens += [COLADJ(i, j, k) for j in r for i in r for k in r if i < k]
    return gens


def enumerate_tours(n: int) -> list[tuple]:
    """All permutations as image tuples ``(sigma(1), ..., sigma(n))``."""
    _fam(n)
    return list(tours(n))


def tour_witness(F: Polynomial, n: int):
    fam = _fam(n)
    tours(n)
    hit = fam.nonzero_solution(F)
    return None if hit is None else (_as_tour(hit[0]), hit[1])


def is_zero_on_tours(F: Polynomial, n: int) -> bool:
    return tour_witness(F, n) is None


def tour_normal_form(F: Polynomial, n: int) -> tuple[Polynomial, DerivationCertificate]:
    return _fam(n).normal_form(F)


def tour_expand_vertex(M: Iterable, a: int, n: int) -> tuple[Polynomial, DerivationCertificate]:
    """``y_M`` congruent to the sum of ``y_{M + (a, v)}`` over uncovered columns ``v``."""
    fam = _fam(n)
    m = bipartite_matching(M, n)
    if not 1 <= a <= n:
        raise InvalidInput(f"row {a} not in 1..{n}")
    if any(v[1] == a for v in mono_vars(m)):
        raise RowCovered(f"row {a} is covered by the matching")
    return expand_unit(fam, m, ROW(a))


def tour_lift_matching(M: Iterable, k: int, n: int) -> tuple[Polynomial, DerivationCertificate]:
    fam = _fam(n)
    m = bipartite_matching(M, n)
    if not len(m) <= k <= n:
        raise InvalidLevel(f"need |M| = {len(m)} <= k <= {n}, got k = {k}")
    return lift(fam, m, k)


class ConstantReport(NamedTuple):
    """Symmetrized constant of a single monomial next to the closed form ``(n-k)! C(n,k)``."""

    constant: Fraction
    closed_form: Fraction
    matches: bool


def tour_symmetrize_constant(F: Polynomial, n: int) -> tuple[Fraction, DerivationCertificate]:
    """``sum over S_n (acting on rows) of sigma F`` congruent to a constant."""
    fam = _fam(n)
    limit = current_limits().max_tour_symmetrize
    if n > limit:
        raise SymmetrizationTooLarge(f"n={n} exceeds the tour symmetrization bound {limit}")
    return _symmetrize(fam, F)


def tour_constant_report(F: Polynomial, n: int) -> ConstantReport:
    """Compare the computed constant of ``c * y_M`` with the closed form ``(n-k)! C(n,k)``."""
    nf, _ = tour_normal_form(F, n)
    if len(nf) != 1:
        raise InvalidInput("the closed form applies to a single partial-matching monomial")
    ((m, coeff),) = nf.terms.items()
    k = len(m)
    constant, _ = tour_symmetrize_constant(F, n)
    closed = coeff * factorial(n - k) * comb(n, k)
    return ConstantReport(constant, Fraction(closed), constant == closed)


def _column_class_certificate(fam: TourFamily, cols: tuple) -> DerivationCertificate:
    """Sum of all ``y_M`` with column set ``cols`` congruent to 1.

    With ``P_t`` the sum over matchings onto the first ``t`` columns,
    ``P_{t-1} * COL(c_t)`` reduces to ``P_t - P_{t-1}``.
    """
    table = CofactorTable()
    layer = [()]
    for c in cols:
        nxt = []
        for m in layer:
            fam.unit_certificate_terms(table, m, COL(c), -1)
            nxt.extend(fam.unit_terms(m, COL(c))[0])
        layer = nxt
    source = Polynomial({m: 1 for m in layer})
    return build_certificate("tour", fam.n, source, Polynomial.constant(1), table)


def _symmetrize(fam: TourFamily, F: Polynomial) -> tuple[Fraction, DerivationCertificate]:
    fam.check_kind(F)
    n = fam.n
    H = symmetric_sum(F, n)
    nf, nf_cert = fam.normal_form(H)
    classes: dict = {}
    for m, c in nf.terms.items():
        if m:
            classes.setdefault(tuple(sorted(v[2] for v in mono_vars(m))), {})[m] = c
    parts = [(1, zero_certificate("tour", n, Polynomial.constant(nf.constant_term())))]
    for cols, terms in sorted(classes.items()):
        values = set(terms.values())
        expected = factorial(n) // factorial(n - len(cols))
        if len(values) != 1 or len(terms) != expected:
            raise InternalInvariant(f"symmetrized polynomial is not constant on column class {cols}")
        parts.append((values.pop(), _column_class_certificate(fam, cols)))
    cert = chain(nf_cert, linear_combination(parts, "tour", n))
    return cert.result.constant_term(), cert


def tour_lift_generator(cert: DerivationCertificate, a: int, b: int) -> DerivationCertificate:
    """Move ``L ~ G`` over Q_{n-2} to ``L y_ab y_ba ~ G y_ab y_ba`` over Q_n (a, b the new labels)."""
    if cert.family != "tour":
        raise InvalidInput("tour_lift_generator expects a tour certificate")
    n = cert.n + 2
    if {a, b} != {n - 1, n}:
        raise VertexCollision(f"{{{a}, {b}}} are not the fresh labels {{{n - 1}, {n}}}")
    ab, ba = y(a, b), y(b, a)
    both = ((ab, 1), (ba, 1)) if ab < ba else ((ba, 1), (ab, 1))
    table = CofactorTable()
    for gen, q in cert.cofactors:
        if gen.name == "ROW":
            (i,) = gen.args
            table.add_poly(ROW(i), q.terms, 1, both)
            # y_ib clashes with y_ab in column b, y_ia with y_ba in column a
            table.add_poly(COLADJ(i, b, a), q.terms, -1, ((ba, 1),))
            table.add_poly(COLADJ(i, a, b), q.terms, -1, ((ab, 1),))
        elif gen.name == "COL":
            (j,) = gen.args
            table.add_poly(COL(j), q.terms, 1, both)
            table.add_poly(ROWADJ(a, j, b), q.terms, -1, ((ba, 1),))
            table.add_poly(ROWADJ(b, j, a), q.terms, -1, ((ab, 1),))
        else:
            table.add_poly(gen, q.terms, 1, both)
    factor = Polynomial({both: 1})
    return DerivationCertificate(
        "tour", n, cert.source * factor, cert.result * factor, cert.degree + 2, table.items(), cert.method
    )


def tour_derive_zero(F: Polynomial, n: int, method: str = "direct", degree: int | None = None) -> DerivationCertificate:
    """Certificate of ``F`` congruent to 0 over Q_n, of degree at most ``2 deg F - 1``."""
    fam = _fam(n)
    if method == "direct":
        try:
            return fam.derive(F, degree)
        except NotAMember as exc:
            if exc.witness is not None:
                exc.witness = _as_tour(exc.witness)
            raise
    if method != "inductive":
        raise InvalidInput(f"unknown method {method!r}")
    limits = current_limits()
    deg = F.degree
    if n > limits.max_inductive_n or deg > limits.max_inductive_degree or (
        deg >= 2 and n > limits.max_tour_symmetrize
    ):
        raise DerivationTooLarge("tour input beyond the inductive bounds")
    fam.check_kind(F)
    tours(n)
    hit = fam.nonzero_solution(F)
    if hit is not None:
        raise NotAMember(f"polynomial is {hit[1]} on a tour", witness=_as_tour(hit[0]), value=hit[1])
    return _inductive(fam, F)


def _inductive(fam: TourFamily, F: Polynomial) -> DerivationCertificate:
    nf, nf_cert = fam.normal_form(F)
    if nf.is_zero():
        return DerivationCertificate("tour", fam.n, F, nf, nf_cert.degree, nf_cert.cofactors, "inductive")
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
        tail = linear_combination([(scale, swaps), (scale, sym)], "tour", fam.n)
    return chain(nf_cert, tail, method="inductive")


def _swap_certificate(fam: TourFamily, G: Polynomial, moved: Polynomial, a: int, u: int) -> DerivationCertificate:
    """``G - (a u)G`` congruent to 0, swapping rows ``a`` and ``u``."""
    n = fam.n
    P = G - moved
    table = CofactorTable()
    expanded: dict = {}
    for m, c in P.terms.items():
        rows = {v[1] for v in mono_vars(m)}
        if a in rows and u in rows:
            targets = [m]
        elif a in rows or u in rows:
            gen = ROW(u) if a in rows else ROW(a)
            fam.unit_certificate_terms(table, m, gen, c)
            targets = fam.unit_terms(m, gen)[0]
        else:
            raise InternalInvariant("a monomial avoiding both swapped rows survived the difference")
        for t in targets:
            v = expanded.get(t, 0) + c
            if v:
                expanded[t] = v
            else:
                expanded.pop(t, None)
    Q = Polynomial(expanded)
    step = build_certificate("tour", n, P, Q, table)
    if Q.is_zero():
        return step
    groups: dict = {}
    for m, c in Q.terms.items():
        col = {v[1]: v[2] for v in mono_vars(m)}
        b, v = col[a], col[u]
        rest = tuple(t for t in m if t[0] not in (y(a, b), y(u, v)))
        groups.setdefault((b, v), {})[rest] = c
    parts = [(1, _group_certificate(fam, a, u, b, v, terms)) for (b, v), terms in sorted(groups.items())]
    return chain(step, linear_combination(parts, "tour", n))


def _group_certificate(fam: TourFamily, a: int, u: int, b: int, v: int, terms: dict) -> DerivationCertificate:
    """Certify ``y_ab y_uv L`` congruent to 0 from Q_{n-2}."""
    n = fam.n
    R = [i for i in range(1, n + 1) if i not in (a, u)]
    C = [j for j in range(1, n + 1) if j not in (b, v)]
    rpos = {w: i for i, w in enumerate(R, start=1)}
    cpos = {w: j for j, w in enumerate(C, start=1)}
    L = Polynomial(
        {tuple(sorted((y(rpos[t[1]], cpos[t[2]]), 1) for t in mono_vars(m))): c for m, c in terms.items()}
    )
    sub = family("tour", n - 2)
    if not sub.vanishes(L):
        raise InternalInvariant(f"restricted polynomial for row swap ({a} {u}) does not vanish on Q_{n - 2}")
    cert = tour_lift_generator(_inductive(sub, L), n - 1, n)
    rows = {n - 1: a, n: u}
    rows.update({i: w for w, i in rpos.items()})
    cols = {n: b, n - 1: v}
    cols.update({j: w for w, j in cpos.items()})
    return relabel_certificate(cert, n, rows.__getitem__, cols.__getitem__)
