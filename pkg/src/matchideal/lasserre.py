"""Level-k moment relaxation of TSP over the tour ideal, SDPA export, and a
checker for numeric sum-of-squares certificates.

Products of basis monomials are reduced syntactically: ``y_M y_M'`` becomes
``y_{M u M'}`` when the union is a bipartite partial matching and 0 otherwise.
Every other relation enters as a generator-multiple equality of degree <= k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from math import comb, factorial
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .algebra import ONE, Monomial, Polynomial, format_polynomial, parse_polynomial, parse_rational, y
from .certificate import (
    COL,
    ROW,
    CofactorTable,
    DerivationCertificate,
    build_certificate,
    expand,
    gen_problem,
    parse_gen,
    split_blocks,
)
from .config import current_limits
from .engine import family
from .errors import BasisTooLarge, FormatError, InvalidLevel, ShapeError
from .tsp import TspInstance, val_polynomial


def _cells(m: Monomial) -> tuple:
    return tuple((v[1], v[2]) for v, _ in m)


def _mono(cells: Iterable) -> Monomial:
    return tuple(sorted((y(i, j), 1) for i, j in cells))


def mono_text(m: Monomial) -> str:
    return " ".join(f"y{i}_{j}" for i, j in _cells(m)) or "1"


def _parse_mono(text: str) -> Monomial:
    if text.strip() == "1":
        return ONE
    cells = []
    for tok in text.split():
        if not tok.startswith("y") or "_" not in tok:
            raise FormatError(f"bad monomial token {tok!r}")
        i, j = tok[1:].split("_")
        cells.append((int(i), int(j)))
    return _mono(cells)


def bipartite_matchings(n: int, size: int) -> list[Monomial]:
    """All ``y_M`` with ``|M| = size``, in canonical order."""
    out = []
    for rows in combinations(range(1, n + 1), size):
        for cols in permutations(range(1, n + 1), size):
            out.append(_mono(zip(rows, cols)))
    return sorted(out)


def basis_size(n: int, k: int) -> int:
    return sum(comb(n, j) ** 2 * factorial(j) for j in range(min(k // 2, n) + 1))


def union(a: Monomial, b: Monomial) -> Monomial | None:
    """``y_{A u B}`` if the union is a bipartite partial matching, else None."""
    cells = set(_cells(a)) | set(_cells(b))
    rows = {i for i, _ in cells}
    cols = {j for _, j in cells}
    if len(rows) != len(cells) or len(cols) != len(cells):
        return None
    return _mono(cells)


@dataclass(frozen=True)
class MomentBasis:
    n: int
    k: int
    monomials: tuple

    @classmethod
    def build(cls, n: int, k: int, max_basis: int | None = None) -> "MomentBasis":
        if k < 1:
            raise InvalidLevel(f"level must be >= 1, got {k}")
        cap = current_limits().max_basis if max_basis is None else max_basis
        size = basis_size(n, k)
        if size > cap:
            raise BasisTooLarge(f"basis of size {size} exceeds the cap {cap}")
        monos = [m for j in range(min(k // 2, n) + 1) for m in bipartite_matchings(n, j)]
        return cls(n, k, tuple(monos))

    def __len__(self) -> int:
        return len(self.monomials)


@dataclass(frozen=True)
class MomentProgram:
    """Moment variables ``y_N`` (index 0 is ``y_{}`` fixed to 1), the moment matrix as
    index entries (None for a structural 0), equalities ``sum a_N y_N = 0`` and the
    objective ``sum c_N y_N``."""

    n: int
    k: int
    basis: MomentBasis
    variables: tuple
    matrix: tuple
    equalities: tuple  # tuple of dicts var-index -> Fraction
    objective: dict = field(hash=False)

    @property
    def index(self) -> dict:
        return {m: i for i, m in enumerate(self.variables)}

    def objective_value(self, values) -> Fraction:
        return sum((c * values[i] for i, c in self.objective.items()), Fraction(0))


def _linear_form(p: Polynomial, index: dict) -> dict:
    out: dict = {}
    for m, c in p.terms.items():
        i = index[m]
        out[i] = out.get(i, 0) + c
    return {i: c for i, c in out.items() if c}


def lasserre_build(inst: TspInstance, k: int, max_basis: int | None = None) -> MomentProgram:
    n = inst.n
    basis = MomentBasis.build(n, k, max_basis)
    fam = family("tour", n)
    objective_poly = fam.normal_form(val_polynomial(inst), with_certificate=False)[0]
    top = max(k, objective_poly.degree if objective_poly else 0)
    variables = [m for j in range(min(top, n) + 1) for m in bipartite_matchings(n, j)]
    index = {m: i for i, m in enumerate(variables)}
    matrix = tuple(
        tuple(None if (u := union(a, b)) is None else index[u] for b in basis.monomials) for a in basis.monomials
    )
    # RSQ and the clash generators reduce to 0 under the syntactic rule; only
    # multiples of ROW/COL survive
    units = [ROW(i) for i in range(1, n + 1)] + [COL(j) for j in range(1, n + 1)]
    rows, seen = [], set()
    for size in range(min(k - 1, n) + 1):
        for mult in bipartite_matchings(n, size):
            for g in units:
                prod = Polynomial.monomial(mult) * expand(g, n)
                row = _linear_form(fam.normal_form(prod, with_certificate=False)[0], index)
                key = tuple(sorted(row.items()))
                if row and key not in seen:
                    seen.add(key)
                    rows.append(row)
    objective = _linear_form(objective_poly, index)
    return MomentProgram(n, k, basis, tuple(variables), matrix, tuple(rows), objective)


# -- feasibility of moment assignments ---------------------------------------------------


def moment_assignment(prog: MomentProgram, sigma: Iterable[int]) -> list[Fraction]:
    """Rank-one moments of the tour ``sigma`` (vertex ``i`` at position ``sigma(i)``)."""
    cells = {(i, p) for i, p in enumerate(sigma, start=1)}
    return [Fraction(int(set(_cells(m)) <= cells)) for m in prog.variables]


def moment_matrix(prog: MomentProgram, values) -> list[list]:
    return [[0 if e is None else values[e] for e in row] for row in prog.matrix]


def is_psd_exact(A: list[list]) -> bool:
    """Exact positive semidefiniteness of a symmetric rational matrix by pivoted elimination."""
    A = [[Fraction(v) for v in row] for row in A]
    n = len(A)
    if any(A[i][j] != A[j][i] for i in range(n) for j in range(i)):
        return False
    live = list(range(n))
    while live:
        if any(A[i][i] < 0 for i in live):
            return False
        piv = next((i for i in live if A[i][i] > 0), None)
        if piv is None:
            return all(A[i][j] == 0 for i in live for j in live)
        live.remove(piv)
        d = A[piv][piv]
        for i in live:
            f = A[i][piv] / d
            if f:
                for j in live:
                    A[i][j] -= f * A[piv][j]
    return True


class Feasibility(NamedTuple):
    ok: bool
    reason: str
    objective: Fraction | float

    def __bool__(self) -> bool:
        return self.ok


def check_moments(prog: MomentProgram, values) -> Feasibility:
    """Exact check of normalization, equalities and PSD-ness for rational moments."""
    values = [Fraction(v) for v in values]
    if len(values) != len(prog.variables):
        raise ShapeError(f"expected {len(prog.variables)} moments, got {len(values)}")
    obj = prog.objective_value(values)
    if values[0] != 1:
        return Feasibility(False, "y_{} must be 1", obj)
    for r, row in enumerate(prog.equalities):
        if sum(c * values[i] for i, c in row.items()):
            return Feasibility(False, f"equality {r} violated", obj)
    if not is_psd_exact(moment_matrix(prog, values)):
        return Feasibility(False, "moment matrix is not PSD", obj)
    return Feasibility(True, "ok", obj)


# -- SDPA export -------------------------------------------------------------------------


def _num(c) -> str:
    return repr(float(c))


def export_sdpa(prog: MomentProgram, path) -> tuple[Path, Path]:
    """Write ``<path>`` in SDPA sparse format and ``<path>.idx`` with the monomial map.

    Free variables are ``y_N`` for every nonempty ``N``. Block 1 is the moment
    matrix; block 2 is diagonal and holds each equality twice with opposite signs.
    """
    path = Path(path)
    nvar = len(prog.variables) - 1
    neq = len(prog.equalities)
    B = len(prog.basis)
    lines = [f"* level-{prog.k} moment relaxation, n={prog.n}", f"{nvar}", "2" if neq else "1"]
    lines.append(f"{B} {-2 * neq}" if neq else f"{B}")
    c = [prog.objective.get(i, 0) for i in range(1, nvar + 1)]
    lines.append(" ".join(_num(v) for v in c) if c else "")
    entries: dict = {}
    for a in range(B):
        for b in range(a, B):
            e = prog.matrix[a][b]
            if e is None:
                continue
            # F(x) = sum F_i x_i - F_0, so the y_{} = 1 contribution sits in F_0 with a minus sign
            mat, val = (0, -1) if e == 0 else (e, 1)
            entries[(mat, 1, a + 1, b + 1)] = entries.get((mat, 1, a + 1, b + 1), 0) + val
    for r, row in enumerate(prog.equalities):
        for i, v in row.items():
            mat, v = (0, -v) if i == 0 else (i, v)
            entries[(mat, 2, 2 * r + 1, 2 * r + 1)] = v
            entries[(mat, 2, 2 * r + 2, 2 * r + 2)] = -v
    for key in sorted(entries):
        if entries[key]:
            lines.append(" ".join(map(str, key)) + " " + _num(entries[key]))
    path.write_text("\n".join(lines) + "\n")
    idx = path.with_name(path.name + ".idx")
    manifest = {
        "n": prog.n,
        "k": prog.k,
        "objective_constant": str(prog.objective.get(0, Fraction(0))),
        "basis": [mono_text(m) for m in prog.basis.monomials],
        "variables": [mono_text(m) for m in prog.variables[1:]],
        "equalities": neq,
    }
    idx.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path, idx


@dataclass
class SdpaProgram:
    """Float image of an exported program, keyed by monomials."""

    n: int
    k: int
    basis: list
    variables: list  # includes the empty monomial at index 0
    matrix: dict  # (a, b) -> {var index: coefficient}, a <= b
    equalities: list  # list of {var index: coefficient}
    objective: dict


def read_sdpa(path) -> SdpaProgram:
    path = Path(path)
    manifest = json.loads(path.with_name(path.name + ".idx").read_text())
    body = [ln for ln in path.read_text().splitlines() if ln.strip() and ln[0] not in "*\""]
    try:
        nvar = int(body[0].split()[0])
        nblocks = int(body[1].split()[0])
        sizes = [int(t) for t in body[2].replace(",", " ").split()[:nblocks]]
    except (IndexError, ValueError):
        raise FormatError("malformed SDPA header") from None
    variables = [ONE] + [_parse_mono(t) for t in manifest["variables"]]
    if len(variables) != nvar + 1:
        raise FormatError("manifest and SDPA file disagree on the variable count")
    rest = body[3:]
    c_line = rest[0].split() if nvar else []
    if nvar:
        rest = rest[1:]
    objective = {i + 1: float(v) for i, v in enumerate(c_line) if float(v)}
    const = Fraction(manifest["objective_constant"])
    if const:
        objective[0] = float(const)
    matrix: dict = {}
    diag: dict = {}
    for line in rest:
        parts = line.split()
        if len(parts) != 5:
            raise FormatError(f"bad SDPA entry {line!r}")
        mat, blk, i, j = map(int, parts[:4])
        v = float(parts[4])
        var, v = (0, -v) if mat == 0 else (mat, v)
        if blk == 1:
            matrix.setdefault((i - 1, j - 1), {})[var] = v
        elif blk == 2 and i % 2 == 1:
            diag.setdefault((i - 1) // 2, {})[var] = v
    equalities = [diag.get(r, {}) for r in range(abs(sizes[1]) // 2 if nblocks > 1 else 0)]
    return SdpaProgram(
        manifest["n"], manifest["k"], [_parse_mono(t) for t in manifest["basis"]], variables, matrix, equalities,
        objective,
    )


# -- numeric certificates ------------------------------------------------------------------


@dataclass(frozen=True)
class NumericSosCertificate:
    """``val_I - C - b^T G b - sum q_g g`` should reduce to 0; ``b`` is the moment basis."""

    n: int
    k: int
    bound: Fraction | float
    gram: tuple  # rows of numbers
    cofactors: tuple = ()  # ((Gen, Polynomial), ...)


class NumericReport(NamedTuple):
    ok: bool
    bound: Fraction | float
    min_eigenvalue: float
    residual: float
    reason: str

    def __bool__(self) -> bool:
        return self.ok


def _residual(inst: TspInstance, cert: NumericSosCertificate, basis: MomentBasis) -> Polynomial:
    monos = basis.monomials
    terms: dict = {}
    for a, row in enumerate(cert.gram):
        for b, g in enumerate(row):
            g = Fraction(g)
            if g:
                terms[(a, b)] = g
    gram_poly: dict = {}
    for (a, b), g in terms.items():
        u = union(monos[a], monos[b])
        if u is not None:
            gram_poly[u] = gram_poly.get(u, 0) + g
    total = val_polynomial(inst) - Fraction(cert.bound) - Polynomial(gram_poly)
    for gen, q in cert.cofactors:
        total = total - q * expand(gen, inst.n)
    return family("tour", inst.n).normal_form(total, with_certificate=False)[0]


def verify_numeric_certificate(inst: TspInstance, cert: NumericSosCertificate, tol: float | None = None) -> NumericReport:
    """Gram PSD up to ``tol``, cofactor degrees at most k, residual within ``tol`` after
    the tour normal form. ``tol = 0`` makes every check exact."""
    tol = current_limits().numeric_tol if tol is None else tol
    if cert.n != inst.n:
        raise ShapeError(f"certificate is for n={cert.n}, instance has n={inst.n}")
    basis = MomentBasis.build(inst.n, cert.k)
    B = len(basis)
    if len(cert.gram) != B or any(len(row) != B for row in cert.gram):
        raise ShapeError(f"Gram matrix must be {B}x{B}")
    for gen, _ in cert.cofactors:
        if gen.family != "tour" or gen_problem(gen, inst.n):
            raise ShapeError(f"{gen} is not a Q_{inst.n} generator")
    bound = cert.bound
    G = np.array([[float(v) for v in row] for row in cert.gram], dtype=float)
    min_eig = float(np.linalg.eigvalsh((G + G.T) / 2).min()) if B else 0.0
    asym = max((abs(Fraction(cert.gram[i][j]) - Fraction(cert.gram[j][i])) for i in range(B) for j in range(i)),
               default=Fraction(0))
    for gen, q in cert.cofactors:
        if q and q.degree + gen.degree > cert.k:
            return NumericReport(False, bound, min_eig, float("nan"), f"cofactor of {gen} exceeds degree {cert.k}")
    residual = _residual(inst, cert, basis)
    worst = max((abs(c) for c in residual.terms.values()), default=Fraction(0))
    if tol == 0:
        if asym:
            return NumericReport(False, bound, min_eig, float(worst), "Gram matrix is not symmetric")
        if not is_psd_exact(cert.gram):
            return NumericReport(False, bound, min_eig, float(worst), "Gram matrix is not PSD")
        if worst:
            return NumericReport(False, bound, min_eig, float(worst), "residual is not zero")
        return NumericReport(True, bound, min_eig, 0.0, "ok")
    if asym > tol:
        return NumericReport(False, bound, min_eig, float(worst), "Gram matrix is not symmetric")
    if min_eig < -tol:
        return NumericReport(False, bound, min_eig, float(worst), f"minimum eigenvalue {min_eig:.3g} below -tol")
    if worst > tol:
        return NumericReport(False, bound, min_eig, float(worst), f"residual {float(worst):.3g} above tol")
    return NumericReport(True, bound, min_eig, float(worst), "ok")


def numeric_to_derivation(inst: TspInstance, cert: NumericSosCertificate) -> DerivationCertificate:
    """Exact congruence ``val - C - b^T G b`` to its reduced residual, for rational inputs."""
    n = inst.n
    basis = MomentBasis.build(n, cert.k)
    monos = basis.monomials
    gram_poly: dict = {}
    for a, row in enumerate(cert.gram):
        for b, g in enumerate(row):
            g = Fraction(g)
            if g:
                prod = Polynomial.monomial(monos[a]) * Polynomial.monomial(monos[b])
                for mm, c in prod.terms.items():
                    gram_poly[mm] = gram_poly.get(mm, 0) + g * c
    source = val_polynomial(inst) - Fraction(cert.bound) - Polynomial(gram_poly)
    table = CofactorTable()
    rest = source
    for gen, q in cert.cofactors:
        table.add_poly(gen, q.terms, -1)
        rest = rest - q * expand(gen, n)
    nf, nf_cert = family("tour", n).normal_form(rest)
    table.merge(nf_cert)
    return build_certificate("tour", n, source, nf, table, method="numeric")


def pair_square_certificate(inst: TspInstance) -> NumericSosCertificate:
    """Valid level-2 certificate from ``y_a y_b = ((y_a + y_b)^2 - y_a - y_b)/2``.

    The linear leftovers collapse through the row constraints, which gives the
    (weak) bound ``C = -sum_u (out_u + in_u)/2``.
    """
    n = inst.n
    basis = MomentBasis.build(n, 2)
    pos = {m: i for i, m in enumerate(basis.monomials)}
    B = len(basis)
    G = [[Fraction(0)] * B for _ in range(B)]
    for m, c in val_polynomial(inst).terms.items():
        a, b = (pos[((v, 1),)] for v, _ in m)
        half = c / 2
        G[a][a] += half
        G[b][b] += half
        G[a][b] += half
        G[b][a] += half
    r = {u: sum(inst.d(u, v) + inst.d(v, u) for v in range(1, n + 1) if v != u) / 2 for u in range(1, n + 1)}
    cofactors = tuple((ROW(u), Polynomial.constant(-r[u])) for u in range(1, n + 1) if r[u])
    return NumericSosCertificate(n, 2, -sum(r.values(), Fraction(0)), tuple(map(tuple, G)), cofactors)


def congruence_certificate(inst: TspInstance, bound, k: int = 2) -> NumericSosCertificate:
    """Zero Gram matrix plus cofactors from a degree-k derivation of ``val - bound``."""
    from .tour import tour_derive_zero

    F = val_polynomial(inst) - Fraction(bound)
    deriv = tour_derive_zero(F, inst.n, degree=k)
    B = len(MomentBasis.build(inst.n, k))
    zero = tuple(tuple(Fraction(0) for _ in range(B)) for _ in range(B))
    return NumericSosCertificate(inst.n, k, Fraction(bound), zero, tuple((g, -q) for g, q in deriv.cofactors))


# -- text format -----------------------------------------------------------------------------


def _entry(v) -> str:
    return str(v) if isinstance(v, (int, Fraction)) else repr(float(v))


def format_numeric_certificate(cert: NumericSosCertificate) -> str:
    lines = [f"NUMCERT n={cert.n} k={cert.k} C={_entry(cert.bound)}\n", "GRAM\n"]
    for row in cert.gram:
        lines.append(" ".join(_entry(v) for v in row) + "\n")
    for gen, q in cert.cofactors:
        lines.append(f"COFACTOR {gen} :\n")
        lines.append(format_polynomial(q))
    return "".join(lines)


def _number(tok: str):
    try:
        return parse_rational(tok)
    except Exception:
        try:
            return Fraction(tok)
        except ValueError:
            raise FormatError(f"bad number {tok!r}") from None


def parse_numeric_certificate(text: str) -> NumericSosCertificate:
    blocks = split_blocks(text.splitlines())
    if not blocks or not blocks[0][0].startswith("NUMCERT"):
        raise FormatError("numeric certificate must start with a NUMCERT line")
    fields = dict(tok.split("=", 1) for tok in blocks[0][0].split()[1:] if "=" in tok)
    try:
        n, k, bound = int(fields["n"]), int(fields["k"]), _number(fields["C"])
    except (KeyError, ValueError):
        raise FormatError("NUMCERT line needs n=, k= and C=") from None
    gram: list = []
    cofactors: list = []
    for head, body in blocks[1:]:
        if head == "GRAM":
            gram = [tuple(_number(t) for t in line.split()) for line in body]
        elif head.startswith("COFACTOR"):
            spec = head[len("COFACTOR"):].strip()
            if not spec.endswith(":"):
                raise FormatError(f"cofactor header must end with ':': {head!r}")
            cofactors.append((parse_gen(spec[:-1].strip()), parse_polynomial(body)))
        else:
            raise FormatError(f"unexpected block {head!r}")
    return NumericSosCertificate(n, k, bound, tuple(gram), tuple(cofactors))
