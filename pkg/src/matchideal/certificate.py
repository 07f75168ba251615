"""Generators of the matching and tour ideals, derivation certificates, and
their text format.

A certificate records a congruence ``F + sum_g q_g * g = G`` where every
``g`` is a generator and ``max deg(q_g * g) <= d``. Checking it is a purely
syntactic polynomial identity test plus a degree check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, NamedTuple

from .algebra import (
    ONE,
    Monomial,
    Polynomial,
    ZERO,
    format_polynomial,
    mono_degree,
    mono_mul,
    parse_polynomial,
    x,
    y,
)
from .errors import FormatError, InternalInvariant, InvalidInput

MATCH_GENS = ("SQ", "ADJ", "DEG")
TOUR_GENS = ("RSQ", "ROWADJ", "COLADJ", "ROW", "COL")
_ORDER = {name: i for i, name in enumerate(("DEG", "ADJ", "SQ", "ROW", "COL", "ROWADJ", "COLADJ", "RSQ"))}
_ARITY = {"SQ": 2, "ADJ": 3, "DEG": 1, "RSQ": 2, "ROWADJ": 3, "COLADJ": 3, "ROW": 1, "COL": 1}


class Gen(NamedTuple):
    """Identifier of one generator, e.g. ``Gen("ADJ", (u, v, w))``."""

    name: str
    args: tuple

    def __str__(self) -> str:
        return " ".join([self.name, *map(str, self.args)])

    @property
    def family(self) -> str:
        return "match" if self.name in MATCH_GENS else "tour"

    @property
    def degree(self) -> int:
        return 1 if self.name in ("DEG", "ROW", "COL") else 2

    def sort_key(self):
        return (_ORDER[self.name], self.args)


# canonical constructors


def SQ(u: int, v: int) -> Gen:
    return Gen("SQ", (min(u, v), max(u, v)))


def ADJ(u: int, v: int, w: int) -> Gen:
    """``x_{uv} x_{uw}``: two edges meeting at ``u``."""
    return Gen("ADJ", (u, min(v, w), max(v, w)))


def DEG(v: int) -> Gen:
    return Gen("DEG", (v,))


def RSQ(i: int, j: int) -> Gen:
    return Gen("RSQ", (i, j))


def ROWADJ(i: int, j: int, k: int) -> Gen:
    """``y_{ij} y_{ik}``: row ``i`` used twice."""
    return Gen("ROWADJ", (i, min(j, k), max(j, k)))


def COLADJ(i: int, j: int, k: int) -> Gen:
    """``y_{ij} y_{kj}``: column ``j`` used twice."""
    return Gen("COLADJ", (min(i, k), j, max(i, k)))


def ROW(i: int) -> Gen:
    return Gen("ROW", (i,))


def COL(j: int) -> Gen:
    return Gen("COL", (j,))


_CANON = {"SQ": SQ, "ADJ": ADJ, "DEG": DEG, "RSQ": RSQ, "ROWADJ": ROWADJ, "COLADJ": COLADJ, "ROW": ROW, "COL": COL}


def make_gen(name: str, *args: int) -> Gen:
    try:
        ctor = _CANON[name]
    except KeyError:
        raise InvalidInput(f"unknown generator {name!r}") from None
    if len(args) != _ARITY[name]:
        raise InvalidInput(f"{name} takes {_ARITY[name]} indices")
    return ctor(*args)


def parse_gen(text: str) -> Gen:
    parts = text.split()
    try:
        return make_gen(parts[0], *map(int, parts[1:]))
    except (IndexError, ValueError) as exc:
        raise FormatError(f"bad generator id {text!r}: {exc}") from None


def gen_problem(gen: Gen, n: int) -> str | None:
    """Return why ``gen`` is not a generator of P_n / Q_n, or None if it is."""
    if any(not 1 <= a <= n for a in gen.args):
        return f"{gen}: index out of range 1..{n}"
    name, a = gen.name, gen.args
    if name == "SQ" and a[0] == a[1]:
        return f"{gen}: loop edge"
    if name == "ADJ" and len({a[0], a[1], a[2]}) != 3:
        return f"{gen}: indices must be distinct"
    if name in ("ROWADJ", "COLADJ") and ((name == "ROWADJ" and a[1] == a[2]) or (name == "COLADJ" and a[0] == a[2])):
        return f"{gen}: indices must be distinct"
    return None


@lru_cache(maxsize=None)
def expand(gen: Gen, n: int) -> Polynomial:
    """The generator as a polynomial over K_n (or K_{n,n})."""
    name, a = gen.name, gen.args
    if name == "SQ":
        e = x(*a)
        return Polynomial({((e, 2),): 1, ((e, 1),): -1})
    if name == "ADJ":
        u, v, w = a
        return Polynomial.product([x(u, v), x(u, w)])
    if name == "DEG":
        (v,) = a
        terms = {((x(u, v), 1),): 1 for u in range(1, n + 1) if u != v}
        terms[ONE] = -1
        return Polynomial(terms)
    if name == "RSQ":
        e = y(*a)
        return Polynomial({((e, 2),): 1, ((e, 1),): -1})
    if name == "ROWADJ":
        i, j, k = a
        return Polynomial.product([y(i, j), y(i, k)])
    if name == "COLADJ":
        i, j, k = a
        return Polynomial.product([y(i, j), y(k, j)])
    if name == "ROW":
        (i,) = a
        terms = {((y(i, j), 1),): 1 for j in range(1, n + 1)}
        terms[ONE] = -1
        return Polynomial(terms)
    if name == "COL":
        (j,) = a
        terms = {((y(i, j), 1),): 1 for i in range(1, n + 1)}
        terms[ONE] = -1
        return Polynomial(terms)
    raise InvalidInput(f"unknown generator {name!r}")


def relabel_gen(gen: Gen, rows: Callable[[int], int], cols: Callable[[int], int] | None = None) -> Gen:
    """Rename vertices (matching) or rows and columns (tour) of a generator."""
    name, a = gen.name, gen.args
    if gen.family == "match":
        return make_gen(name, *map(rows, a))
    cols = cols or (lambda j: j)
    if name == "RSQ":
        return RSQ(rows(a[0]), cols(a[1]))
    if name == "ROWADJ":
        return ROWADJ(rows(a[0]), cols(a[1]), cols(a[2]))
    if name == "COLADJ":
        return COLADJ(rows(a[0]), cols(a[1]), rows(a[2]))
    if name == "ROW":
        return ROW(rows(a[0]))
    return COL(cols(a[0]))


# -- certificates ------------------------------------------------------------


class Verdict(NamedTuple):
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class DerivationCertificate:
    """Witness of ``source + sum q_g * g = result`` with ``deg(q_g g) <= degree``."""

    family: str  # "match" or "tour"
    n: int
    source: Polynomial
    result: Polynomial
    degree: int
    cofactors: tuple = ()  # ((Gen, Polynomial), ...) in canonical order
    method: str = field(default="", compare=False)

    def cofactor_map(self) -> dict:
        return dict(self.cofactors)

    def actual_degree(self):
        """Largest ``deg(q_g * g)``; ``-inf`` when there are no cofactors."""
        return max((q.degree + g.degree for g, q in self.cofactors), default=float("-inf"))

    def with_degree(self, d: int) -> "DerivationCertificate":
        return DerivationCertificate(self.family, self.n, self.source, self.result, d, self.cofactors, self.method)


def verify_certificate(cert: DerivationCertificate) -> Verdict:
    """Check the congruence exactly; returns a falsy Verdict naming the first failure."""
    expected = "match" if cert.family == "match" else "tour"
    total: dict = dict(cert.source.terms)
    worst = float("-inf")
    for gen, q in cert.cofactors:
        if gen.family != expected:
            return Verdict(False, f"generator {gen} does not belong to the {expected} family")
        problem = gen_problem(gen, cert.n)
        if problem:
            return Verdict(False, problem)
        if q.is_zero():
            continue
        deg = q.degree + gen.degree
        worst = max(worst, deg)
        if deg > cert.degree:
            return Verdict(False, f"degree violation: deg(q*{gen}) = {deg} > {cert.degree}")
        _accumulate_product(total, q.terms, expand(gen, cert.n).terms)
    for m, c in cert.result.terms.items():
        v = total.get(m, 0) - c
        if v:
            total[m] = v
        else:
            total.pop(m, None)
    if total:
        m, c = min(total.items(), key=lambda t: (mono_degree(t[0]), t[0]))
        shown = Polynomial({m: c})
        return Verdict(False, f"polynomial mismatch: source + sum q*g - result has term {shown}")
    if cert.degree < 0 and cert.cofactors and worst > float("-inf"):
        return Verdict(False, "degree -1 allows structural equality only")
    return Verdict(True, "ok")


def _accumulate_product(acc: dict, p: Mapping, q: Mapping, scale=1) -> None:
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = mono_mul(m1, m2)
            v = acc.get(m, 0) + scale * c1 * c2
            if v:
                acc[m] = v
            else:
                acc.pop(m, None)


class CofactorTable:
    """Mutable accumulator ``gen -> {monomial: coefficient}`` used while building certificates."""

    __slots__ = ("table",)

    def __init__(self):
        self.table: dict = {}

    def add(self, gen: Gen, mono: Monomial, c) -> None:
        if not c:
            return
        row = self.table.setdefault(gen, {})
        v = row.get(mono, 0) + c
        if v:
            row[mono] = v
        else:
            del row[mono]

    def add_poly(self, gen: Gen, poly: Mapping[Monomial, Fraction], scale=1, times: Monomial = ONE) -> None:
        for m, c in poly.items():
            self.add(gen, mono_mul(m, times), scale * c)

    def merge(self, cert: DerivationCertificate, scale=1, times: Monomial = ONE) -> None:
        for gen, q in cert.cofactors:
            self.add_poly(gen, q.terms, scale, times)

    def items(self) -> tuple:
        out = []
        for gen in sorted(self.table, key=Gen.sort_key):
            row = self.table[gen]
            if row:
                out.append((gen, Polynomial(row)))
        return tuple(out)

    def degree(self):
        return max(
            (mono_degree(m) + g.degree for g, row in self.table.items() for m in row),
            default=float("-inf"),
        )


def build_certificate(
    family: str,
    n: int,
    source: Polynomial,
    result: Polynomial,
    table: CofactorTable,
    degree: int | None = None,
    method: str = "",
) -> DerivationCertificate:
    """Freeze an accumulator; ``degree`` defaults to the actual degree used."""
    cofactors = table.items()
    if degree is None:
        d = table.degree()
        degree = -1 if d == float("-inf") else int(d)
    return DerivationCertificate(family, n, source, result, degree, cofactors, method)


def linear_combination(parts: Iterable[tuple], family: str, n: int, method: str = "") -> DerivationCertificate:
    """Combine ``[(scale, cert), ...]`` into one certificate of the summed congruence."""
    table = CofactorTable()
    src: dict = {}
    res: dict = {}
    degree = -1
    for scale, cert in parts:
        scale = Fraction(scale)
        if not scale:
            continue
        table.merge(cert, scale)
        for m, c in cert.source.terms.items():
            src[m] = src.get(m, 0) + scale * c
        for m, c in cert.result.terms.items():
            res[m] = res.get(m, 0) + scale * c
        degree = max(degree, cert.degree)
    return build_certificate(family, n, Polynomial(src), Polynomial(res), table, degree, method)


def relabel_certificate(
    cert: DerivationCertificate,
    n: int,
    rows: Callable[[int], int],
    cols: Callable[[int], int] | None = None,
) -> DerivationCertificate:
    """Rename vertices (or rows/columns) throughout a certificate, moving it to size ``n``."""
    if cert.family == "match":
        vfn = lambda v: x(rows(v[1]), rows(v[2]))
    else:
        c = cols or (lambda j: j)
        vfn = lambda v: ("y", rows(v[1]), c(v[2]))

    def poly(p: Polynomial) -> Polynomial:
        return Polynomial({tuple(sorted((vfn(v), e) for v, e in m)): c for m, c in p.terms.items()})

    table = CofactorTable()
    for gen, q in cert.cofactors:
        table.add_poly(relabel_gen(gen, rows, cols), poly(q).terms)
    return DerivationCertificate(
        cert.family, n, poly(cert.source), poly(cert.result), cert.degree, table.items(), cert.method
    )


# -- text format -------------------------------------------------------------

_HEADERS = ("SOURCE", "RESULT", "COFACTOR", "CERT", "REFUTE", "MU", "SQUARE", "NUMCERT", "GRAM", "END")


def format_certificate(cert: DerivationCertificate) -> str:
    lines = [f"CERT {cert.family.upper()} n={cert.n} d={cert.degree}\n"]
    if cert.method:
        lines.append(f"# method={cert.method}\n")
    lines.append("SOURCE\n")
    lines.append(format_polynomial(cert.source))
    lines.append("RESULT\n")
    lines.append(format_polynomial(cert.result))
    for gen, q in cert.cofactors:
        lines.append(f"COFACTOR {gen} :\n")
        lines.append(format_polynomial(q))
    return "".join(lines)


def split_blocks(lines: Iterable[str]) -> list[tuple[str, list[str]]]:
    """Group lines under their header lines (first word in upper case)."""
    blocks: list = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split()[0]
        if head in _HEADERS:
            blocks.append((line, []))
        elif not blocks:
            raise FormatError(f"content before any header: {line!r}")
        else:
            blocks[-1][1].append(line)
    return blocks


def _header_fields(header: str) -> dict:
    out = {}
    for tok in header.split()[1:]:
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


def certificate_from_blocks(blocks: list[tuple[str, list[str]]]) -> DerivationCertificate:
    if not blocks or not blocks[0][0].startswith("CERT"):
        raise FormatError("certificate must start with a CERT line")
    header = blocks[0][0].split()
    if len(header) < 2 or header[1] not in ("MATCH", "TOUR"):
        raise FormatError(f"bad certificate header {blocks[0][0]!r}")
    fields = _header_fields(blocks[0][0])
    try:
        n, d = int(fields["n"]), int(fields["d"])
    except (KeyError, ValueError):
        raise FormatError("certificate header needs n=<int> d=<int>") from None
    source = result = None
    table = CofactorTable()
    for head, body in blocks[1:]:
        if head == "SOURCE":
            source = parse_polynomial(body)
        elif head == "RESULT":
            result = parse_polynomial(body)
        elif head.startswith("COFACTOR"):
            spec = head[len("COFACTOR"):].strip()
            if not spec.endswith(":"):
                raise FormatError(f"cofactor header must end with ':': {head!r}")
            gen = parse_gen(spec[:-1].strip())
            table.add_poly(gen, parse_polynomial(body).terms)
        else:
            raise FormatError(f"unexpected block {head!r} in certificate")
    if source is None or result is None:
        raise FormatError("certificate needs SOURCE and RESULT blocks")
    return DerivationCertificate(header[1].lower(), n, source, result, d, table.items())


def parse_certificate(text: str) -> DerivationCertificate:
    return certificate_from_blocks(split_blocks(text.splitlines()))


def zero_certificate(family: str, n: int, poly: Polynomial = ZERO) -> DerivationCertificate:
    """``poly`` congruent to itself with no cofactors (degree -1 = equality)."""
    return DerivationCertificate(family, n, poly, poly, -1, ())


def chain(first: DerivationCertificate, *rest: DerivationCertificate, method: str = "") -> DerivationCertificate:
    """Compose ``F ~ G`` and ``G ~ H`` (and so on) into ``F ~ H``."""
    table = CofactorTable()
    table.merge(first)
    prev, degree = first, first.degree
    for cert in rest:
        if cert.source != prev.result:
            raise InternalInvariant("chained certificates do not meet")
        table.merge(cert)
        degree = max(degree, cert.degree)
        prev = cert
    return DerivationCertificate(first.family, first.n, first.source, prev.result, degree, table.items(),
                                 method or first.method)


def reversed_certificate(cert: DerivationCertificate) -> DerivationCertificate:
    """``G ~ F`` from ``F ~ G``."""
    table = CofactorTable()
    table.merge(cert, -1)
    return DerivationCertificate(cert.family, cert.n, cert.result, cert.source, cert.degree, table.items(), cert.method)
