"""Rewriting and linear solving shared by the matching and tour ideals.

Both ideals have the same shape: squares ``z^2 - z``, products of two
variables that share an endpoint, and linear "unit" constraints (vertex
degree for matchings, row and column sums for tours). Modulo the first two
families every monomial reduces to either 0 or a partial-matching monomial,
so a degree-``D`` derivation of ``F`` exists exactly when ``nf(F)`` lies in
the span of the reduced unit multiples ``x_M * g`` with ``|M| <= D - 1``.
That span is what ``derive`` solves for; the correction terms that turn the
reduced identity back into a genuine certificate are synthesized afterwards.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Iterable, Iterator

from .algebra import ONE, Monomial, Polynomial, mono_mul, x
from .certificate import (
    ADJ,
    COL,
    COLADJ,
    DEG,
    ROW,
    ROWADJ,
    RSQ,
    SQ,
    CofactorTable,
    DerivationCertificate,
    Gen,
    build_certificate,
)
from .config import current_limits
from .errors import (
    DerivationTooLarge,
    InternalInvariant,
    InvalidLevel,
    KindMismatch,
    NotAMember,
    OracleTooLarge,
)
from .linsolve import ExactSystem


def matching_mono(variables: Iterable) -> Monomial:
    return tuple((v, 1) for v in sorted(variables))


def mono_vars(m: Monomial) -> list:
    return [v for v, _ in m]


def mono_with(m: Monomial, var) -> Monomial:
    return tuple(sorted(m + ((var, 1),)))


def mono_without(m: Monomial, *drop) -> Monomial:
    return tuple(t for t in m if t[0] not in drop)


class Family:
    """Common machinery; subclasses describe the combinatorics."""

    name = ""
    var_kind = ""
    full_size = 0

    def __init__(self, n: int):
        self.n = n

    # -- hooks -----------------------------------------------------------
    def square_gen(self, var) -> Gen:
        raise NotImplementedError

    def conflict(self, variables: list):
        """First clash ``(gen, var1, var2)`` among multilinear variables, or None."""
        raise NotImplementedError

    def units(self, m: Monomial) -> list[Gen]:
        """Linear generators whose product with ``m`` does not reduce to 0."""
        raise NotImplementedError

    def pivot(self, m: Monomial) -> Gen:
        raise NotImplementedError

    def vertex_units(self, m: Monomial) -> list[Gen]:
        """Units that expand ``x_M`` through one uncovered vertex (matching) or row (tour)."""
        raise NotImplementedError

    def unit_terms(self, m: Monomial, gen: Gen) -> tuple[list, list]:
        """Split ``m * gen``: (partial-matching extensions, [(clash gen, rest monomial)])."""
        raise NotImplementedError

    def extensions(self, m: Monomial) -> Iterator[Monomial]:
        """Partial matchings with exactly one more edge than ``m``."""
        raise NotImplementedError

    def solutions(self) -> list[frozenset]:
        raise NotImplementedError

    # -- normal form -------------------------------------------------------
    def reduce_monomial(self, m: Monomial, c: Fraction, table: CofactorTable | None):
        """Rewrite ``c * m`` to ``c * x_M`` or 0, recording cofactors in ``table``."""
        cur = m
        for var, e in m:
            if e < 2:
                continue
            rest = mono_without(cur, var)
            if table is not None:
                gen = self.square_gen(var)
                for j in range(2, e + 1):
                    table.add(gen, mono_mul(rest, ((var, j - 2),) if j > 2 else ONE), -c)
            cur = mono_with(rest, var)
        clash = self.conflict(mono_vars(cur))
        if clash is None:
            return cur
        gen, v1, v2 = clash
        if table is not None:
            table.add(gen, mono_without(cur, v1, v2), -c)
        return None

    def check_kind(self, p: Polynomial) -> None:
        if p.kind not in (None, self.var_kind):
            raise KindMismatch(f"expected {self.var_kind}-variables, got {p.kind}-variables")

    def normal_form(self, p: Polynomial, with_certificate: bool = True):
        self.check_kind(p)
        table = CofactorTable() if with_certificate else None
        out: dict = {}
        for m, c in p.terms.items():
            r = self.reduce_monomial(m, c, table)
            if r is not None:
                v = out.get(r, 0) + c
                if v:
                    out[r] = v
                else:
                    out.pop(r, None)
        nf = Polynomial(out)
        if not with_certificate:
            return nf, None
        return nf, build_certificate(self.name, self.n, p, nf, table)

    def support_terms(self, p: Polynomial) -> dict:
        """Terms keyed by variable support, dropping supports that are never all 1."""
        out: dict = {}
        for m, c in p.terms.items():
            vs = mono_vars(m)
            if self.conflict(vs) is not None:
                continue
            key = frozenset(vs)
            out[key] = out.get(key, 0) + c
        return {k: v for k, v in out.items() if v}

    # -- oracle ---------------------------------------------------------------
    def nonzero_solution(self, p: Polynomial):
        """A solution where ``p`` is nonzero, with its value, or None."""
        self.check_kind(p)
        terms = list(self.support_terms(p).items())
        for sol in self.solutions():
            value = sum((c for s, c in terms if s <= sol), Fraction(0))
            if value:
                return sol, value
        return None

    def vanishes(self, p: Polynomial) -> bool:
        return self.nonzero_solution(p) is None

    # -- partial matchings -------------------------------------------------
    def matchings_up_to(self, size: int) -> list[list[Monomial]]:
        return _levels(self, min(size, self.full_size))

    def unit_certificate_terms(self, table: CofactorTable, m: Monomial, gen: Gen, a) -> None:
        """Add ``a * (m * gen + clash corrections)`` to ``table``."""
        table.add(gen, m, a)
        for cgen, rest in self.unit_terms(m, gen)[1]:
            table.add(cgen, rest, -a)

    # -- derivation ----------------------------------------------------------
    def derive(self, p: Polynomial, degree: int | None = None, check_oracle: bool = True) -> DerivationCertificate:
        """Certificate of ``p`` congruent to 0 of degree at most ``degree`` (default ``2 deg p - 1``)."""
        self.check_kind(p)
        if p.is_zero():
            return DerivationCertificate(self.name, self.n, p, p, -1, (), "direct")
        d = int(p.degree)
        target = max(2 * d - 1, 0) if degree is None else degree
        if d > target:
            raise InvalidLevel(f"requested degree {target} is below deg F = {d}")
        nf, cert = self.normal_form(p)
        confirmed = False
        if check_oracle and self.oracle_ok():
            hit = self.nonzero_solution(nf)
            if hit is not None:
                raise NotAMember(f"polynomial is {hit[1]} on a solution", witness=hit[0], value=hit[1])
            confirmed = True
        table = CofactorTable()
        table.merge(cert)
        if not nf.is_zero():
            if target >= self.full_size:
                coeffs = self._greedy(nf)
            else:
                coeffs = self._solve(nf, target)
                if coeffs is None:
                    if not confirmed:
                        raise NotAMember("polynomial is not in the span of degree-bounded generator multiples")
                    if degree is None:
                        raise InternalInvariant(f"no degree-{target} certificate for an ideal member")
                    raise DerivationTooLarge(f"no certificate of degree {target}")
            for (m, gen), a in coeffs.items():
                self.unit_certificate_terms(table, m, gen, a)
        out = build_certificate(self.name, self.n, p, Polynomial({}), table, method="direct")
        return out

    def oracle_ok(self) -> bool:
        raise NotImplementedError

    def _greedy(self, nf: Polynomial) -> dict:
        """Push every term up one level with its pivot unit; what is left is a sum over solutions."""
        residual = dict(nf.terms)
        coeffs: dict = {}
        buckets: dict = {}
        for m in residual:
            buckets.setdefault(len(m), set()).add(m)
        for size in range(self.full_size):
            for m in sorted(buckets.get(size, ())):
                c = residual.pop(m, 0)
                if not c:
                    continue
                gen = self.pivot(m)
                coeffs[(m, gen)] = c
                for ext in self.unit_terms(m, gen)[0]:
                    v = residual.get(ext, 0) + c
                    if v:
                        residual[ext] = v
                    else:
                        residual.pop(ext, None)
                    buckets.setdefault(size + 1, set()).add(ext)
        left = {m: c for m, c in residual.items() if c}
        if left:
            m, c = min(left.items())
            raise NotAMember(f"polynomial is {c} on a solution", witness=frozenset(mono_vars(m)), value=c)
        return coeffs

    def _solve(self, nf: Polynomial, degree: int):
        system = unit_system(self, degree)
        sol = system.solve({m: -c for m, c in nf.terms.items()})
        if sol is None:
            return None
        return {system.columns[j]: a for j, a in sol.items()}


@lru_cache(maxsize=None)
def _levels_cached(name: str, n: int, size: int):
    fam = family(name, n)
    levels = [[ONE]]
    for _ in range(size):
        nxt = set()
        for m in levels[-1]:
            nxt.update(fam.extensions(m))
        levels.append(sorted(nxt))
    return levels


def _levels(fam: Family, size: int) -> list[list[Monomial]]:
    return _levels_cached(fam.name, fam.n, size)


@lru_cache(maxsize=None)
def unit_system(fam: Family, degree: int) -> ExactSystem:
    """The reduced unit columns for derivations of the given degree (cached)."""
    levels = fam.matchings_up_to(degree)
    rows = [m for level in levels for m in level]
    columns = []
    entries = []
    for size, level in enumerate(levels):
        if size > degree - 1:
            break
        for m in level:
            for gen in fam.units(m):
                col = {m: -1}
                for ext in fam.unit_terms(m, gen)[0]:
                    col[ext] = col.get(ext, 0) + 1
                columns.append((m, gen))
                entries.append(col)
    return ExactSystem(rows, columns, entries)


class MatchFamily(Family):
    name = "match"
    var_kind = "x"

    def __init__(self, n: int):
        super().__init__(n)
        self.full_size = n // 2

    def __hash__(self):
        return hash((self.name, self.n))

    def __eq__(self, other):
        return isinstance(other, Family) and (self.name, self.n) == (other.name, other.n)

    def square_gen(self, var) -> Gen:
        return SQ(var[1], var[2])

    def conflict(self, variables):
        seen: dict = {}
        for var in variables:
            _, u, v = var
            for a, b in ((u, v), (v, u)):
                if a in seen:
                    return ADJ(a, seen[a], b), x(a, seen[a]), var
                seen[a] = b
        return None

    def _partners(self, m: Monomial) -> dict:
        out = {}
        for (_, u, v), _e in m:
            out[u] = v
            out[v] = u
        return out

    def units(self, m):
        cov = self._partners(m)
        return [DEG(v) for v in range(1, self.n + 1) if v not in cov]

    vertex_units = units

    def pivot(self, m):
        cov = self._partners(m)
        return DEG(next(v for v in range(1, self.n + 1) if v not in cov))

    def unit_terms(self, m, gen):
        (v,) = gen.args
        cov = self._partners(m)
        exts, corr = [], []
        for u in range(1, self.n + 1):
            if u == v:
                continue
            if u in cov:
                w = cov[u]
                corr.append((ADJ(u, v, w), mono_without(m, x(u, w))))
            else:
                exts.append(mono_with(m, x(u, v)))
        return exts, corr

    def extensions(self, m):
        cov = self._partners(m)
        free = [v for v in range(1, self.n + 1) if v not in cov]
        for u, v in itertools.combinations(free, 2):
            yield mono_with(m, x(u, v))

    def solutions(self):
        return perfect_matching_sets(self.n)

    def oracle_ok(self) -> bool:
        return self.n % 2 == 0 and self.n <= current_limits().max_oracle


class TourFamily(Family):
    name = "tour"
    var_kind = "y"

    def __init__(self, n: int):
        super().__init__(n)
        self.full_size = n

    def __hash__(self):
        return hash((self.name, self.n))

    def __eq__(self, other):
        return isinstance(other, Family) and (self.name, self.n) == (other.name, other.n)

    def square_gen(self, var) -> Gen:
        return RSQ(var[1], var[2])

    def conflict(self, variables):
        rows: dict = {}
        for var in variables:
            _, i, j = var
            if i in rows:
                return ROWADJ(i, rows[i], j), ("y", i, rows[i]), var
            rows[i] = j
        cols: dict = {}
        for var in variables:
            _, i, j = var
            if j in cols:
                return COLADJ(cols[j], j, i), ("y", cols[j], j), var
            cols[j] = i
        return None

    @staticmethod
    def _cover(m: Monomial):
        rows = {v[1]: v[2] for v, _ in m}
        cols = {v[2]: v[1] for v, _ in m}
        return rows, cols

    def units(self, m):
        rows, cols = self._cover(m)
        r = range(1, self.n + 1)
        return [ROW(i) for i in r if i not in rows] + [COL(j) for j in r if j not in cols]

    def vertex_units(self, m):
        rows, _ = self._cover(m)
        return [ROW(i) for i in range(1, self.n + 1) if i not in rows]

    def pivot(self, m):
        rows, _ = self._cover(m)
        return ROW(next(i for i in range(1, self.n + 1) if i not in rows))

    def unit_terms(self, m, gen):
        rows, cols = self._cover(m)
        exts, corr = [], []
        if gen.name == "ROW":
            (i,) = gen.args
            for j in range(1, self.n + 1):
                if j in cols:
                    k = cols[j]
                    corr.append((COLADJ(i, j, k), mono_without(m, ("y", k, j))))
                else:
                    exts.append(mono_with(m, ("y", i, j)))
        else:
            (j,) = gen.args
            for i in range(1, self.n + 1):
                if i in rows:
                    k = rows[i]
                    corr.append((ROWADJ(i, j, k), mono_without(m, ("y", i, k))))
                else:
                    exts.append(mono_with(m, ("y", i, j)))
        return exts, corr

    def extensions(self, m):
        rows, cols = self._cover(m)
        for i in range(1, self.n + 1):
            if i in rows:
                continue
            for j in range(1, self.n + 1):
                if j not in cols:
                    yield mono_with(m, ("y", i, j))

    def solutions(self):
        return tour_sets(self.n)

    def oracle_ok(self) -> bool:
        return self.n <= current_limits().max_tour_oracle


@lru_cache(maxsize=None)
def family(name: str, n: int) -> Family:
    return MatchFamily(n) if name == "match" else TourFamily(n)


# -- solution enumeration -----------------------------------------------------


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


@lru_cache(maxsize=None)
def _perfect_matchings(n: int) -> tuple:
    def rec(free: tuple):
        if not free:
            yield ()
            return
        a = free[0]
        for idx in range(1, len(free)):
            b = free[idx]
            rest = free[1:idx] + free[idx + 1:]
            for tail in rec(rest):
                yield ((a, b),) + tail

    return tuple(rec(tuple(range(1, n + 1))))


def perfect_matchings(n: int) -> tuple:
    """All perfect matchings of K_n as sorted edge tuples, in lexicographic order."""
    limit = current_limits().max_oracle
    if n > limit:
        raise OracleTooLarge(f"n={n} exceeds the enumeration bound {limit}")
    return _perfect_matchings(n)


@lru_cache(maxsize=None)
def _pm_sets(n: int) -> list:
    return [frozenset(x(u, v) for u, v in pm) for pm in _perfect_matchings(n)]


def perfect_matching_sets(n: int) -> list[frozenset]:
    perfect_matchings(n)
    return _pm_sets(n)


def tours(n: int) -> list[tuple]:
    """All permutations of [n] as image tuples, lexicographically."""
    limit = current_limits().max_tour_oracle
    if n > limit:
        raise OracleTooLarge(f"n={n} exceeds the tour enumeration bound {limit}")
    return _tours(n)


@lru_cache(maxsize=None)
def _tours(n: int) -> list:
    return list(itertools.permutations(range(1, n + 1)))


@lru_cache(maxsize=None)
def _tour_sets(n: int) -> list:
    return [frozenset(("y", i, s) for i, s in enumerate(sigma, start=1)) for sigma in _tours(n)]


def tour_sets(n: int) -> list[frozenset]:
    tours(n)
    return _tour_sets(n)


def expected_tour_count(n: int) -> int:
    return factorial(n)
