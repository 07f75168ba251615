"""TSP instances, the tour-value polynomial, the doubling reduction to even
permutations, and the odd-clique refutation built from a matching SoS identity.

A tour is a permutation ``sigma`` read as a position map: vertex ``i`` is
visited at position ``sigma(i)``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .algebra import Permutation, Polynomial, format_polynomial, parse_polynomial, parse_rational, x, y
from .certificate import (
    ADJ,
    DEG,
    SQ,
    CofactorTable,
    DerivationCertificate,
    Gen,
    Verdict,
    certificate_from_blocks,
    format_certificate,
    split_blocks,
    verify_certificate,
)
from .errors import FormatError, InternalInvariant, InvalidInput, InvalidSize, NotAMember, NotAnSos, NotMetric
from .matching import derive_zero, is_zero_on_matchings

# -- instances -----------------------------------------------------------------------


@dataclass(frozen=True)
class TspInstance:
    """Distances ``d(i, j)`` for ordered pairs ``i != j``; must be a (possibly asymmetric) metric."""

    n: int
    dist: dict

    def __post_init__(self):
        n = self.n
        dist = {k: Fraction(v) for k, v in self.dist.items()}
        object.__setattr__(self, "dist", dist)
        pairs = {(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j}
        if set(dist) != pairs:
            raise InvalidInput(f"need a distance for each of the {len(pairs)} ordered pairs")
        for (i, j), v in dist.items():
            if v < 0:
                raise NotMetric(f"d({i},{j}) = {v} is negative")
        for i, j, k in ((i, j, k) for i in range(1, n + 1) for j in range(1, n + 1) for k in range(1, n + 1)):
            if len({i, j, k}) == 3 and dist[(i, k)] > dist[(i, j)] + dist[(j, k)]:
                raise NotMetric(f"d({i},{k}) > d({i},{j}) + d({j},{k})")

    def d(self, i: int, j: int) -> Fraction:
        return self.dist[(i, j)]

    @classmethod
    def from_matrix(cls, rows) -> "TspInstance":
        n = len(rows)
        return cls(n, {(i + 1, j + 1): rows[i][j] for i in range(n) for j in range(n) if i != j})

    @classmethod
    def uniform(cls, n: int, value=1) -> "TspInstance":
        return cls(n, {(i, j): value for i in range(1, n + 1) for j in range(1, n + 1) if i != j})


def random_metric(n: int, rng: random.Random, high: int = 10) -> TspInstance:
    """Random integer weights closed under shortest paths (asymmetric in general)."""
    d = [[0 if i == j else rng.randint(1, high) for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return TspInstance.from_matrix(d)


def format_instance(inst: TspInstance) -> str:
    lines = [f"TSP n={inst.n}\n"]
    for (i, j), v in sorted(inst.dist.items()):
        lines.append(f"d {i} {j} {v}\n")
    return "".join(lines)


def parse_instance(text: str) -> TspInstance:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines or not lines[0].startswith("TSP"):
        raise FormatError("instance must start with 'TSP n=<n>'")
    try:
        n = int(lines[0].split("n=")[1].split()[0])
    except (IndexError, ValueError):
        raise FormatError(f"bad instance header {lines[0]!r}") from None
    dist = {}
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 4 or parts[0] != "d":
            raise FormatError(f"bad distance line {line!r}")
        try:
            # decimals such as 0.25 become exact rationals
            dist[(int(parts[1]), int(parts[2]))] = Fraction(parts[3])
        except ValueError:
            raise FormatError(f"bad distance line {line!r}") from None
    return TspInstance(n, dist)


# -- tour values -------------------------------------------------------------------------


def visiting_order(sigma: Iterable[int]) -> list[int]:
    """Vertices listed by position."""
    sigma = tuple(sigma)
    order = [0] * len(sigma)
    for i, p in enumerate(sigma, start=1):
        order[p - 1] = i
    return order


def from_order(order: Iterable[int]) -> tuple:
    order = list(order)
    sigma = [0] * len(order)
    for p, v in enumerate(order, start=1):
        sigma[v - 1] = p
    return tuple(sigma)


def tour_value(inst: TspInstance, sigma: Iterable[int]) -> Fraction:
    order = visiting_order(sigma)
    n = len(order)
    if n != inst.n:
        raise InvalidInput("tour size does not match the instance")
    return sum((inst.d(order[p], order[(p + 1) % n]) for p in range(n) if n > 1), Fraction(0))


def val_polynomial(inst: TspInstance) -> Polynomial:
    """``sum d(u,v) y_{u,p} y_{v,p+1}`` with positions taken cyclically."""
    n = inst.n
    terms: dict = {}
    for p in range(1, n + 1):
        q = p % n + 1
        if q == p:
            continue
        for (u, v), w in inst.dist.items():
            if w:
                m = tuple(sorted(((y(u, p), 1), (y(v, q), 1))))
                terms[m] = terms.get(m, 0) + w
    return Polynomial(terms)


# -- doubling -------------------------------------------------------------------------------


def double_instance(inst: TspInstance) -> TspInstance:
    """Clone every vertex ``i`` (label ``2i-1``) as ``i'`` (label ``2i``) at distance 0."""
    n = inst.n
    dist = {}
    for i in range(1, n + 1):
        dist[(2 * i - 1, 2 * i)] = 0
        dist[(2 * i, 2 * i - 1)] = 0
        for j in range(1, n + 1):
            if i != j:
                for a in (2 * i - 1, 2 * i):
                    for b in (2 * j - 1, 2 * j):
                        dist[(a, b)] = inst.d(i, j)
    return TspInstance(2 * n, dist)


def phi_map(sigma: Iterable[int]) -> tuple:
    """Canonical doubled tour: ``Phi(sigma)(2i-1) = 2 sigma(i) - 1`` and ``Phi(sigma)(2i) = 2 sigma(i)``."""
    out = []
    for s in sigma:
        out.extend((2 * s - 1, 2 * s))
    return tuple(out)


def is_canonical(tau: Iterable[int]) -> bool:
    tau = tuple(tau)
    return all(tau[2 * i + 1] == tau[2 * i] + 1 and tau[2 * i] % 2 == 1 for i in range(len(tau) // 2))


def canonicalize(tau: Iterable[int], inst: TspInstance) -> tuple:
    """Move every clone right behind its original; the value never goes up."""
    tau = tuple(tau)
    if len(tau) % 2 or len(tau) != inst.n:
        raise InvalidInput("expected a tour of the doubled instance")
    originals = [v for v in visiting_order(tau) if v % 2 == 1]
    order = []
    for v in originals:
        order.extend((v, v + 1))
    out = from_order(order)
    if tour_value(inst, out) > tour_value(inst, tau):
        raise InternalInvariant("canonicalization increased the tour value")
    return out


# -- odd set identity and folding -------------------------------------------------------------


@dataclass(frozen=True)
class OddSplit:
    m: int
    S: tuple
    T: tuple
    U: tuple


def odd_split(n: int) -> OddSplit:
    if n % 2 or n < 4:
        raise InvalidSize(f"need an even n >= 4, got {n}")
    m = n // 2 if (n // 2) % 2 else n // 2 - 1
    U = (2 * m + 1, 2 * m + 2) if m == n // 2 - 1 else ()
    return OddSplit(m, tuple(range(1, m + 1)), tuple(range(m + 1, 2 * m + 1)), U)


def crossing_sum(n: int) -> Polynomial:
    """Sum of the edges leaving S."""
    split = odd_split(n)
    return Polynomial({((x(u, v), 1),): 1 for u in split.S for v in range(1, n + 1) if v not in split.S})


def odd_set_slack(n: int, eps=0) -> tuple[Polynomial, Polynomial, DerivationCertificate]:
    """``f = (|S|-1)/2 + eps/2 - x(E[S])`` congruent to half the crossing sum minus ``(1-eps)/2``."""
    if n < 10 or n % 2:
        raise InvalidSize(f"need an even n >= 10, got {n}")
    eps = Fraction(eps)
    if not 0 <= eps < 1:
        raise InvalidInput("eps must lie in [0, 1)")
    split = odd_split(n)
    S = split.S
    inner = Polynomial({((x(u, v), 1),): 1 for i, u in enumerate(S) for v in S[i + 1:]})
    f = Polynomial.constant(Fraction(split.m - 1, 2) + eps / 2) - inner
    rhs = crossing_sum(n).scale(Fraction(1, 2)) - Fraction(1, 2) * (1 - eps)
    table = CofactorTable()
    for u in S:
        table.add(DEG(u), (), Fraction(1, 2))
    cert = DerivationCertificate("match", n, f, rhs, 1, table.items(), "direct")
    return f, rhs, cert


def _fold_var(split: OddSplit):
    S, T = set(split.S), set(split.T)
    m = split.m

    def fn(var):
        _, u, v = var
        if split.U and (u, v) == split.U:
            return 1
        if u in S and v in S:
            return var
        if u in T and v in T:
            return x(u - m, v - m)
        return None

    return fn


def fold_substitution(p: Polynomial, n: int) -> Polynomial:
    """Keep edges inside S, copy edges inside T onto S, match U, drop everything else."""
    return p.map_variables(_fold_var(odd_split(n)))


def fold_generator(gen: Gen, n: int) -> tuple[Gen, Fraction] | None:
    """``(g', c)`` with ``fold(gen) = c * g'`` over K_m, or None when it folds to 0."""
    split = odd_split(n)
    S, T, m = set(split.S), set(split.T), split.m
    side = lambda v: "S" if v in S else "T" if v in T else "U"
    down = lambda v: v - m if v in T else v
    a = gen.args
    if gen.name == "DEG":
        if side(a[0]) == "U":
            return None
        return DEG(down(a[0])), Fraction(1)
    if gen.name == "SQ":
        if side(a[0]) != side(a[1]) or side(a[0]) == "U":
            return None
        return SQ(down(a[0]), down(a[1])), Fraction(1)
    if gen.name == "ADJ":
        if len({side(v) for v in a}) != 1 or side(a[0]) == "U":
            return None
        return ADJ(*map(down, a)), Fraction(1)
    raise InvalidInput(f"{gen} is not a matching generator")


def fold_certificate(cert: DerivationCertificate) -> DerivationCertificate:
    """Push a P_n certificate through the folding substitution into P_m."""
    n = cert.n
    split = odd_split(n)
    fn = _fold_var(split)
    table = CofactorTable()
    for gen, q in cert.cofactors:
        image = fold_generator(gen, n)
        if image is None:
            continue
        g2, c = image
        table.add_poly(g2, q.map_variables(fn).terms, c)
    return DerivationCertificate(
        "match", split.m, cert.source.map_variables(fn), cert.result.map_variables(fn), cert.degree, table.items(),
        cert.method,
    )


# -- refutations -----------------------------------------------------------------------------


@dataclass(frozen=True)
class RefutationCertificate:
    """``-(1-eps)/2`` congruent to ``sum g^2 + mu`` over P_m (m odd) in degree ``2k - 1``."""

    m: int
    eps: Fraction
    k: int
    mu: Fraction
    squares: tuple
    certificate: DerivationCertificate


def build_refutation(squares: Iterable[Polynomial], mu, eps, n: int) -> RefutationCertificate:
    """Turn ``rhs == sum g^2 + mu`` on the perfect matchings of K_n into a refutation over K_m."""
    squares = tuple(squares)
    mu, eps = Fraction(mu), Fraction(eps)
    f, rhs, _ = odd_set_slack(n, eps)
    sos = sum((g * g for g in squares), Polynomial.constant(mu))
    F = rhs - sos
    if not is_zero_on_matchings(F, n):
        raise NotAnSos("the claimed sum of squares does not match the slack on every perfect matching")
    k = max(1, int(F.degree))
    try:
        derivation = derive_zero(F, n, degree=2 * k - 1)
    except NotAMember as exc:  # pragma: no cover - the oracle above already passed
        raise InternalInvariant(str(exc)) from exc
    lifted = DerivationCertificate("match", n, rhs, sos, derivation.degree, derivation.cofactors, "direct")
    folded = fold_certificate(lifted)
    m = odd_split(n).m
    return RefutationCertificate(m, eps, k, mu, tuple(fold_substitution(g, n) for g in squares), folded)


def verify_refutation(ref: RefutationCertificate) -> Verdict:
    cert = ref.certificate
    if ref.m % 2 == 0:
        return Verdict(False, f"m = {ref.m} is not odd")
    if not 0 <= ref.eps < 1:
        return Verdict(False, "eps must lie in [0, 1)")
    if ref.mu < 0:
        return Verdict(False, f"mu = {ref.mu} is negative")
    if cert.family != "match" or cert.n != ref.m:
        return Verdict(False, "embedded certificate is not over P_m")
    if cert.degree > 2 * ref.k - 1:
        return Verdict(False, f"certificate degree {cert.degree} exceeds 2k - 1 = {2 * ref.k - 1}")
    if cert.source != Polynomial.constant(-(1 - ref.eps) / 2):
        return Verdict(False, "source must be the constant -(1 - eps)/2")
    sos = sum((g * g for g in ref.squares), Polynomial.constant(ref.mu))
    if cert.result != sos:
        return Verdict(False, "result is not the stated sum of squares plus mu")
    verdict = verify_certificate(cert)
    if not verdict:
        return verdict
    return Verdict(True, f"ok k={ref.k}")


def refutation_example(n: int = 10, eps=0) -> tuple[list[Polynomial], Fraction]:
    """Squares for the slack identity: with ``c`` the crossing sum (odd on matchings),
    ``(c - 1)/2 = g1^2 + g2^2`` for ``c`` in {1, 3, 5}."""
    c = crossing_sum(n)
    g2 = (c - 1) * (c - 3) / 8
    g1 = (c - 1) / 2 - g2
    return [g1, g2], Fraction(eps) / 2


def format_refutation(ref: RefutationCertificate) -> str:
    eps = ref.eps
    parts = [f"REFUTE m={ref.m} eps={eps.numerator}/{eps.denominator} k={ref.k}\n", f"MU {ref.mu}\n"]
    for g in ref.squares:
        parts.append("SQUARE\n")
        parts.append(format_polynomial(g))
    parts.append(format_certificate(ref.certificate))
    return "".join(parts)


def parse_refutation(text: str) -> RefutationCertificate:
    blocks = split_blocks(text.splitlines())
    if not blocks or not blocks[0][0].startswith("REFUTE"):
        raise FormatError("refutation must start with a REFUTE line")
    fields = dict(tok.split("=", 1) for tok in blocks[0][0].split()[1:] if "=" in tok)
    try:
        m, eps, k = int(fields["m"]), parse_rational(fields["eps"]), int(fields["k"])
    except KeyError:
        raise FormatError("REFUTE line needs m=, eps= and k=") from None
    mu = None
    squares = []
    rest = 1
    for idx in range(1, len(blocks)):
        head, body = blocks[idx]
        if head.startswith("MU"):
            mu = parse_rational(head.split()[1])
        elif head == "SQUARE":
            squares.append(parse_polynomial(body))
        elif head.startswith("CERT"):
            rest = idx
            break
        else:
            raise FormatError(f"unexpected block {head!r}")
    else:
        raise FormatError("refutation needs an embedded CERT block")
    if mu is None:
        raise FormatError("refutation needs a MU line")
    return RefutationCertificate(m, eps, k, mu, tuple(squares), certificate_from_blocks(blocks[rest:]))


def phi_permutation(sigma: Iterable[int]) -> Permutation:
    return Permutation(phi_map(sigma))
