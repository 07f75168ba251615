"""Group actions on solutions: orbit connectors, junta discovery, orbit
closure checks, and turning a symmetric SDP formulation plus a dual into a
sum of squares on the solution set.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

import numpy as np

from .algebra import Permutation, all_permutations, parse_rational
from .config import current_limits
from .engine import perfect_matchings, tours
from .errors import DualInvalid, FormatError, InternalInvariant, InvalidInput, NotPsd, OracleTooLarge

# -- actions on solutions ---------------------------------------------------------


def _edges(M: Iterable) -> tuple:
    return tuple(sorted((min(u, v), max(u, v)) for u, v in M))


def act_matching(sigma: Permutation, M: Iterable) -> tuple:
    return _edges((sigma(u), sigma(v)) for u, v in M)


def act_tour(sigma: Permutation, tour: tuple) -> tuple:
    """Relabel rows: vertex ``sigma(i)`` takes the position vertex ``i`` had."""
    inv = sigma.inverse()
    return tuple(tour[inv(i) - 1] for i in range(1, len(tour) + 1))


def orbit_connector(M1: Iterable, M2: Iterable, S: Iterable[int]) -> Permutation:
    """An even permutation fixing ``S`` pointwise and carrying ``M1`` onto ``M2``.

    Requires ``|S| < n/2`` and that both matchings agree on the edges inside ``S``.
    """
    M1, M2, S = _edges(M1), _edges(M2), sorted(set(S))
    n = 2 * len(M1)
    verts = set(range(1, n + 1))
    for M in (M1, M2):
        if len(M) * 2 != n or {v for e in M for v in e} != verts:
            raise InvalidInput("both arguments must be perfect matchings of the same K_n")
    if not set(S) <= verts:
        raise InvalidInput("S must be a set of vertices")
    if 2 * len(S) >= n:
        raise InvalidInput(f"|S| = {len(S)} must be below n/2 = {n // 2}")
    inside = lambda M: {e for e in M if e[0] in S and e[1] in S}
    if inside(M1) != inside(M2):
        raise InvalidInput("the matchings differ on edges inside S")
    p1 = {u: v for e in M1 for u, v in (e, e[::-1])}
    p2 = {u: v for e in M2 for u, v in (e, e[::-1])}
    images = {s: s for s in S}
    for s in S:
        if p1[s] not in S:
            images[p1[s]] = p2[s]
    rest1 = [e for e in M1 if e[0] not in images and e[1] not in images]
    used = set(images.values())
    rest2 = [e for e in M2 if e[0] not in used and e[1] not in used]
    for (a, b), (c, d) in zip(rest1, rest2):
        images[a], images[b] = c, d
    sigma = Permutation(tuple(images[i] for i in range(1, n + 1)))
    if not sigma.is_even():
        free = [e for e in M2 if e[0] not in S and e[1] not in S]
        if not free:
            raise InternalInvariant("no edge of M2 avoids S")
        u, v = free[0]
        sigma = Permutation.transposition(n, u, v).compose(sigma)
    if act_matching(sigma, M1) != M2 or any(sigma(s) != s for s in S) or not sigma.is_even():
        raise InternalInvariant("orbit connector failed its own check")
    return sigma


# -- functions on solutions ----------------------------------------------------------


@dataclass(frozen=True)
class SolutionFunction:
    """A value for every perfect matching (``kind="match"``) or tour (``kind="tour"``)."""

    kind: str
    n: int
    table: dict = field(hash=False)

    def __post_init__(self):
        expected = set(solutions(self.kind, self.n))
        if set(self.table) != expected:
            raise InvalidInput(f"table must cover exactly the {len(expected)} solutions")

    @classmethod
    def from_callable(cls, kind: str, n: int, fn: Callable) -> "SolutionFunction":
        return cls(kind, n, {s: fn(s) for s in solutions(kind, n)})

    def __call__(self, s):
        return self.table[s]

    def values(self) -> tuple:
        return tuple(self.table[s] for s in solutions(self.kind, self.n))


def solutions(kind: str, n: int) -> list:
    if kind == "match":
        return list(perfect_matchings(n))
    if kind == "tour":
        return list(tours(n))
    raise InvalidInput(f"unknown solution kind {kind!r}")


def format_solution_function(h: SolutionFunction) -> str:
    lines = [f"FUNC {h.kind.upper()} n={h.n}\n"]
    for s in solutions(h.kind, h.n):
        label = " ".join(f"{u}-{v}" for u, v in s) if h.kind == "match" else " ".join(map(str, s))
        value = h.table[s]
        if isinstance(value, Fraction):
            value = str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
        lines.append(f"{label} {value}\n")
    return "".join(lines)


def parse_solution_function(text: str) -> SolutionFunction:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines or not lines[0].startswith("FUNC"):
        raise FormatError("expected a FUNC header")
    head = lines[0].split()
    try:
        kind = head[1].lower()
        n = int(head[2].split("=")[1])
    except (IndexError, ValueError):
        raise FormatError(f"bad header {lines[0]!r}") from None
    table = {}
    for line in lines[1:]:
        *label, value = line.split()
        if kind == "match":
            key = _edges(tuple(map(int, tok.split("-"))) for tok in label)
        else:
            key = tuple(map(int, label))
        table[key] = parse_rational(value)
    return SolutionFunction(kind, n, table)


class JuntaReport(NamedTuple):
    support: tuple
    table: dict  # pattern -> value
    sign_needed: bool = False


def _pattern(kind: str, s, W: tuple, sign: bool):
    if kind == "match":
        return tuple(e for e in s if e[0] in W and e[1] in W)
    key = tuple(s[w - 1] for w in W)
    return key + (Permutation(s).sign,) if sign else key


def _consistent(h: SolutionFunction, W: tuple, sign: bool):
    table: dict = {}
    for s, value in h.table.items():
        key = _pattern(h.kind, s, W, sign)
        if table.setdefault(key, value) != value:
            return None
    return table


def find_junta_support(h: SolutionFunction) -> JuntaReport:
    """Smallest vertex set W (then lexicographically first) that determines ``h``.

    Matchings are read through their edges inside W; tours through the
    positions of the vertices of W, and if that is not enough, also the sign.
    """
    for size in range(h.n + 1):
        for W in itertools.combinations(range(1, h.n + 1), size):
            table = _consistent(h, W, False)
            if table is not None:
                return JuntaReport(W, table, False)
            if h.kind == "tour":
                table = _consistent(h, W, True)
                if table is not None:
                    return JuntaReport(W, table, True)
    raise InternalInvariant("the full vertex set always determines h")


def determined_by(h: SolutionFunction, W: Iterable[int], sign: bool = False) -> bool:
    return _consistent(h, tuple(sorted(W)), sign) is not None


def apply_group_check(H: Iterable[SolutionFunction], group: str = "S_n", tol: float = 1e-9) -> bool:
    """Whether ``s -> h(g^-1 s)`` stays in ``H`` for every ``h`` in ``H`` and ``g`` in the group."""
    H = list(H)
    if not H:
        return True
    kind, n = H[0].kind, H[0].n
    if any(h.kind != kind or h.n != n for h in H):
        raise InvalidInput("all functions must live on the same solution set")
    if n > 8:
        raise OracleTooLarge("group enumeration is limited to n <= 8")
    if group not in ("S_n", "A_n"):
        raise InvalidInput(f"unknown group {group!r}")
    sols = solutions(kind, n)
    index = {s: i for i, s in enumerate(sols)}
    members = [np.array([float(h.table[s]) for s in sols]) for h in H]
    act = act_matching if kind == "match" else act_tour
    for g in all_permutations(n):
        if group == "A_n" and not g.is_even():
            continue
        ginv = g.inverse()
        perm = [index[act(ginv, s)] for s in sols]
        for vals in members:
            moved = vals[perm]
            if not any(np.max(np.abs(moved - other), initial=0.0) <= tol for other in members):
                return False
    return True


# -- SDP formulation to sum of squares -----------------------------------------------


@dataclass
class SdpFormulationData:
    """Per-solution PSD points ``X^s`` of a size-``d`` formulation and its objectives.

    ``linear[f]`` is the matrix ``W`` of the affine functional ``<W, X> + offset[f]``
    that reproduces objective ``f`` on every ``X^s``; ``bound[f]`` and
    ``guarantee[f]`` are the claimed and true bounds (C and S), and
    ``dual_U``/``dual_mu`` the dual certificate of ``bound[f]``.
    """

    d: int
    solutions: list
    points: list  # X^s in the order of ``solutions``
    values: list  # values[f][s_index]
    linear: list
    offset: list
    bound: list
    guarantee: list
    dual_U: list
    dual_mu: list


@dataclass
class SosDecomposition:
    functions: dict  # (i, j) -> per-solution values of h_ij, i <= j, deduplicated
    coefficients: np.ndarray  # square root of U
    mu: float
    residuals: np.ndarray  # |bound - f(s) - (sum of squares + mu)| per solution
    all_functions: dict = field(default_factory=dict)

    def sum_of_squares(self, index: int) -> float:
        d = self.coefficients.shape[0]
        h = np.array([[self.all_functions[(i, j)][index] for j in range(d)] for i in range(d)])
        return float(np.sum((self.coefficients @ h) ** 2) + self.mu)


def psd_sqrt(A: np.ndarray, clamp: float | None = None) -> np.ndarray:
    """Symmetric PSD square root; eigenvalues in [-clamp, 0) count as 0."""
    clamp = current_limits().psd_clamp if clamp is None else clamp
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput("expected a square matrix")
    if not np.allclose(A, A.T, atol=clamp, rtol=0):
        raise NotPsd("matrix is not symmetric")
    w, V = np.linalg.eigh((A + A.T) / 2)
    if w.size and w.min() < -clamp:
        raise NotPsd(f"minimum eigenvalue {w.min():.3g} is below -{clamp:g}")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def formulation_to_sos(data: SdpFormulationData, f: int, tol: float = 1e-9) -> SosDecomposition:
    """Rewrite ``bound - f(s)`` as ``sum_ij (sum_k sqrtU_ik h_kj(s))^2 + mu`` with ``h = sqrt(X^s)``."""
    d = data.d
    U = data.dual_U[f]
    mu = data.dual_mu[f]
    if U is None or mu is None:
        raise DualInvalid("a dual certificate (U, mu) is required")
    if mu < -tol:
        raise DualInvalid(f"mu = {mu} is negative")
    values = [float(v) for v in data.values[f]]
    if max(values) > float(data.guarantee[f]) + tol:
        raise InvalidInput("an objective value exceeds its stated guarantee")
    W = np.asarray(data.linear[f], dtype=float)
    bound = float(data.bound[f])
    roots = []
    for s, X in enumerate(data.points):
        X = np.asarray(X, dtype=float)
        if X.shape != (d, d):
            raise InvalidInput(f"X for solution {s} is not {d}x{d}")
        if abs(float(np.sum(W * X)) + float(data.offset[f]) - values[s]) > tol:
            raise InvalidInput(f"the linearization misses f on solution {s}")
        if abs(bound - values[s] - float(np.sum(np.asarray(U) * X)) - mu) > tol:
            raise DualInvalid(f"bound - f(s) != Tr(U X^s) + mu on solution {s}")
        roots.append(psd_sqrt(X))
    root_U = psd_sqrt(U)
    every = {(i, j): np.array([r[i, j] for r in roots]) for i in range(d) for j in range(d)}
    distinct: dict = {}
    for i in range(d):
        for j in range(i, d):
            vals = every[(i, j)]
            if not any(np.max(np.abs(vals - other), initial=0.0) <= tol for other in distinct.values()):
                distinct[(i, j)] = vals
    if len(distinct) > comb(d + 1, 2):
        raise InternalInvariant("more distinct square-root entries than C(d+1, 2)")
    out = SosDecomposition(distinct, root_U, mu, np.zeros(len(roots)), every)
    out.residuals = np.array([abs(bound - values[s] - out.sum_of_squares(s)) for s in range(len(roots))])
    if out.residuals.size and out.residuals.max() > tol:
        raise DualInvalid(f"sum-of-squares identity off by {out.residuals.max():.3g}")
    return out


def sos_functions(kind: str, n: int, data: SdpFormulationData, sos: SosDecomposition) -> list[SolutionFunction]:
    """The deduplicated ``h_ij`` as solution functions (values rounded to rationals)."""
    out = []
    for vals in sos.functions.values():
        table = {s: Fraction(float(v)).limit_denominator(10**9) for s, v in zip(data.solutions, vals)}
        out.append(SolutionFunction(kind, n, table))
    return out


def pm4_example() -> SdpFormulationData:
    """Rank-one 2x2 formulation of PM(4) for the indicator of edge 12.

    The three perfect matchings sit at 120 degree angles on the unit circle;
    ``<diag(1, -1/3), v v^T>`` is 1 on {12, 34} and 0 on the others, and
    ``U = diag(0, 4/3)``, ``mu = 0`` certifies the bound 1.
    """
    sols = list(perfect_matchings(4))
    r = np.sqrt(3) / 2
    vecs = [np.array([1.0, 0.0]), np.array([-0.5, r]), np.array([-0.5, -r])]
    points = [np.outer(v, v) for v in vecs]
    f = [1 if (1, 2) in s else 0 for s in sols]
    return SdpFormulationData(
        d=2,
        solutions=sols,
        points=points,
        values=[f],
        linear=[np.diag([1.0, -1.0 / 3.0])],
        offset=[0.0],
        bound=[1.0],
        guarantee=[1.0],
        dual_U=[np.diag([0.0, 4.0 / 3.0])],
        dual_mu=[0.0],
    )


def edge_indicator_example(n: int = 4) -> SdpFormulationData:
    """Diagonal formulation with one coordinate per edge (invariant under S_n)."""
    sols = list(perfect_matchings(n))
    edges = list(itertools.combinations(range(1, n + 1), 2))
    points = [np.diag([1.0 if e in s else 0.0 for e in edges]) for s in sols]
    f = [1 if (1, 2) in s else 0 for s in sols]
    U = np.diag([1.0 if e[0] == 1 and e != (1, 2) else 0.0 for e in edges])
    return SdpFormulationData(
        d=len(edges),
        solutions=sols,
        points=points,
        values=[f],
        linear=[np.diag([1.0 if e == (1, 2) else 0.0 for e in edges])],
        offset=[0.0],
        bound=[1.0],
        guarantee=[1.0],
        dual_U=[U],
        dual_mu=[0.0],
    )


# -- directory format ----------------------------------------------------------------


def write_formulation(data: SdpFormulationData, directory, kind: str = "match") -> None:
    """Dense matrices as text files plus ``manifest.json`` describing them."""
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    fmt = "%.17g"
    points = []
    for s, X in enumerate(data.points):
        name = f"X{s}.txt"
        np.savetxt(path / name, np.asarray(X, dtype=float), fmt=fmt)
        points.append(name)
    objectives = []
    for f in range(len(data.values)):
        entry = {
            "values": [str(Fraction(v)) for v in data.values[f]],
            "linear": f"W{f}.txt",
            "offset": float(data.offset[f]),
            "bound": float(data.bound[f]),
            "guarantee": float(data.guarantee[f]),
            "dual_U": None,
            "dual_mu": None if data.dual_mu[f] is None else float(data.dual_mu[f]),
        }
        np.savetxt(path / entry["linear"], np.asarray(data.linear[f], dtype=float), fmt=fmt)
        if data.dual_U[f] is not None:
            entry["dual_U"] = f"U{f}.txt"
            np.savetxt(path / entry["dual_U"], np.asarray(data.dual_U[f], dtype=float), fmt=fmt)
        objectives.append(entry)
    manifest = {
        "kind": kind,
        "d": data.d,
        "solutions": [list(map(list, s)) if kind == "match" else list(s) for s in data.solutions],
        "points": points,
        "objectives": objectives,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def read_formulation(directory) -> tuple[str, SdpFormulationData]:
    path = Path(directory)
    try:
        manifest = json.loads((path / "manifest.json").read_text())
        kind, d = manifest["kind"], int(manifest["d"])
        load = lambda name: np.loadtxt(path / name, ndmin=2).reshape(d, d)
        sols = [tuple(map(tuple, s)) if kind == "match" else tuple(s) for s in manifest["solutions"]]
        objs = manifest["objectives"]
        return kind, SdpFormulationData(
            d=d,
            solutions=sols,
            points=[load(name) for name in manifest["points"]],
            values=[[Fraction(v) for v in o["values"]] for o in objs],
            linear=[load(o["linear"]) for o in objs],
            offset=[o["offset"] for o in objs],
            bound=[o["bound"] for o in objs],
            guarantee=[o["guarantee"] for o in objs],
            dual_U=[None if o["dual_U"] is None else load(o["dual_U"]) for o in objs],
            dual_mu=[o["dual_mu"] for o in objs],
        )
    except (OSError, KeyError, ValueError) as exc:
        raise FormatError(f"cannot read formulation from {path}: {exc}") from None
