"""Sparse exact-rational polynomials over edge variables, and permutations.

Two variable families exist and may not be mixed inside one polynomial:

* matching variables ``x_{uv}`` on the complete graph K_n, stored as
  ``("x", u, v)`` with ``u < v``;
* tour variables ``y_{ij}`` on the complete bipartite graph K_{n,n}, stored
  as ``("y", i, j)`` where ``i`` is the row (vertex) and ``j`` the column
  (position).

A monomial is a tuple of ``(variable, exponent)`` pairs sorted by variable;
the empty tuple is the unit monomial. Polynomials map monomials to nonzero
``Fraction`` coefficients and are immutable.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Iterator, Mapping, Union

from .errors import FormatError, KindMismatch, SizeMismatch, UnboundVariable

Var = tuple  # ("x", u, v) | ("y", i, j)
Monomial = tuple  # tuple[tuple[Var, int], ...]
Number = Union[int, Fraction]

ZERO_DEGREE = -math.inf
ONE: Monomial = ()


def x(u: int, v: int) -> Var:
    """Matching variable for the edge {u, v}."""
    if u == v:
        raise ValueError(f"matching variable needs distinct endpoints, got {u}, {v}")
    return ("x", u, v) if u < v else ("x", v, u)


def y(i: int, j: int) -> Var:
    """Tour variable: vertex ``i`` sits at position ``j``."""
    return ("y", i, j)


def var_name(var: Var) -> str:
    return f"{var[0]}{var[1]}_{var[2]}"


def mono_from_vars(variables: Iterable[Var]) -> Monomial:
    counts: dict = {}
    for v in variables:
        counts[v] = counts.get(v, 0) + 1
    return tuple(sorted(counts.items()))


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    merged = dict(a)
    for v, e in b:
        merged[v] = merged.get(v, 0) + e
    return tuple(sorted(merged.items()))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational, float)):
        return Fraction(c)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _kind_of_monomials(monomials: Iterable[Monomial]):
    kind = None
    for m in monomials:
        for v, _ in m:
            if kind is None:
                kind = v[0]
            elif v[0] != kind:
                raise KindMismatch("matching and tour variables in one polynomial")
    return kind


class Polynomial:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("_terms", "_kind", "_hash")

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        cleaned = {}
        if terms:
            for m, c in terms.items():
                c = _as_fraction(c)
                if c:
                    cleaned[m] = c
        self._terms = cleaned
        self._kind = _kind_of_monomials(cleaned)
        self._hash = None

    @classmethod
    def _wrap(cls, terms: dict) -> "Polynomial":
        # trusted: Fraction values, no zeros, single kind
        p = cls.__new__(cls)
        p._terms = terms
        p._kind = False  # computed lazily
        p._hash = None
        return p

    @classmethod
    def constant(cls, c: Number) -> "Polynomial":
        return cls({ONE: c})

    @classmethod
    def var(cls, v: Var) -> "Polynomial":
        return cls._wrap({((v, 1),): Fraction(1)})

    @classmethod
    def monomial(cls, m: Monomial, c: Number = 1) -> "Polynomial":
        return cls({m: c})

    @classmethod
    def product(cls, variables: Iterable[Var]) -> "Polynomial":
        return cls._wrap({mono_from_vars(variables): Fraction(1)})

    # -- inspection ---------------------------------------------------

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return self._terms

    @property
    def kind(self):
        """``"x"``, ``"y"`` or ``None`` for constants."""
        if self._kind is False:
            self._kind = _kind_of_monomials(self._terms)
        return self._kind

    @property
    def degree(self):
        if not self._terms:
            return ZERO_DEGREE
        return max(mono_degree(m) for m in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get(ONE, Fraction(0))

    def coefficient(self, m: Monomial) -> Fraction:
        return self._terms.get(m, Fraction(0))

    def variables(self) -> set:
        return {v for m in self._terms for v, _ in m}

    def is_multilinear(self) -> bool:
        return all(e == 1 for m in self._terms for _, e in m)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[Monomial, Fraction]]:
        return iter(self._terms.items())

    def __bool__(self) -> bool:
        return bool(self._terms)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._wrap({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return add(self, -other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return add(other, -self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c: Number) -> "Polynomial":
        c = _as_fraction(c)
        if not c:
            return ZERO
        return Polynomial._wrap({m: c * v for m, v in self._terms.items()})

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- evaluation and group action ----------------------------------

    def evaluate(self, point: Mapping[Var, Number]) -> Fraction:
        return evaluate(self, point)

    def act(self, sigma: "Permutation") -> "Polynomial":
        return act(sigma, self)

    def map_variables(self, fn: Callable[[Var], Union[Var, Number, None]]) -> "Polynomial":
        """Substitute each variable by another variable or a constant.

        ``fn`` returns a variable, a number, or ``None`` (meaning 0).
        """
        out: dict = {}
        for m, c in self._terms.items():
            coeff = c
            new_vars: dict = {}
            for v, e in m:
                img = fn(v)
                if img is None:
                    coeff = Fraction(0)
                    break
                if isinstance(img, tuple):
                    new_vars[img] = new_vars.get(img, 0) + e
                else:
                    coeff *= _as_fraction(img) ** e
                    if not coeff:
                        break
            if not coeff:
                continue
            key = tuple(sorted(new_vars.items()))
            val = out.get(key, 0) + coeff
            if val:
                out[key] = val
            else:
                out.pop(key, None)
        return Polynomial(out)

    # -- text ---------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        return sorted(self._terms.items(), key=lambda t: (mono_degree(t[0]), t[0]))

    def to_text(self) -> str:
        return format_polynomial(self)

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            parts.append(_format_term(m, c))
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Polynomial({self})"


def _coerce(value):
    if isinstance(value, Polynomial):
        return value
    if isinstance(value, (int, Fraction)):
        return Polynomial.constant(value)
    return NotImplemented


ZERO = Polynomial()


def _check_kinds(p: Polynomial, q: Polynomial) -> None:
    kp, kq = p.kind, q.kind
    if kp is not None and kq is not None and kp != kq:
        raise KindMismatch(f"cannot combine {kp}-polynomial with {kq}-polynomial")


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    _check_kinds(p, q)
    if len(p._terms) < len(q._terms):
        p, q = q, p
    out = dict(p._terms)
    for m, c in q._terms.items():
        v = out.get(m)
        if v is None:
            out[m] = c
        else:
            v += c
            if v:
                out[m] = v
            else:
                del out[m]
    return Polynomial._wrap(out)


def mul(p: Polynomial, q: Polynomial) -> Polynomial:
    _check_kinds(p, q)
    out: dict = {}
    for m1, c1 in p._terms.items():
        for m2, c2 in q._terms.items():
            m = mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return Polynomial._wrap(out)


def evaluate(p: Polynomial, point: Mapping[Var, Number]) -> Fraction:
    total = Fraction(0)
    for m, c in p._terms.items():
        term = c
        for v, e in m:
            try:
                val = point[v]
            except KeyError:
                raise UnboundVariable(f"no value for {var_name(v)}") from None
            term *= _as_fraction(val) ** e
        total += term
    return total


def evaluate_01(p: Polynomial, support: set | frozenset) -> Fraction:
    """Evaluate at the 0/1 point whose 1-coordinates are ``support``."""
    total = Fraction(0)
    for m, c in p._terms.items():
        if all(v in support for v, _ in m):
            total += c
    return total


def act(sigma: "Permutation", p: Polynomial) -> Polynomial:
    """Apply a vertex permutation.

    Matching variables map ``x_{uv} -> x_{sigma(u) sigma(v)}``; tour
    variables only have their row relabelled, ``y_{ij} -> y_{sigma(i) j}``.
    """
    n = sigma.n
    img = sigma.images
    for m in p._terms:
        for v, _ in m:
            if v[1] > n or v[2] > n:
                raise SizeMismatch(f"permutation on [{n}] cannot act on {var_name(v)}")
    if p.kind == "x":
        fn = lambda v: x(img[v[1] - 1], img[v[2] - 1])
    else:
        fn = lambda v: ("y", img[v[1] - 1], v[2])
    return relabel(p, fn)


def relabel(p: Polynomial, fn: Callable[[Var], Var]) -> Polynomial:
    """Apply an injective variable renaming."""
    out = {}
    for m, c in p._terms.items():
        out[tuple(sorted((fn(v), e) for v, e in m))] = c
    return Polynomial._wrap(out)


# -- permutations --------------------------------------------------------


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{1, ..., n}``; ``images[i - 1]`` is the image of ``i``."""

    images: tuple

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        object.__setattr__(self, "images", images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError(f"{images} is not a permutation of 1..{len(images)}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def transposition(cls, n: int, a: int, b: int) -> "Permutation":
        images = list(range(1, n + 1))
        images[a - 1], images[b - 1] = b, a
        return cls(tuple(images))

    @classmethod
    def from_cycles(cls, n: int, *cycles: Iterable[int]) -> "Permutation":
        images = list(range(1, n + 1))
        for cycle in cycles:
            cycle = list(cycle)
            for a, b in zip(cycle, cycle[1:] + cycle[:1]):
                images[a - 1] = b
        return cls(tuple(images))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def compose(self, other: "Permutation") -> "Permutation":
        """``(self o other)(i) = self(other(i))``."""
        if other.n != self.n:
            raise SizeMismatch("composing permutations of different sizes")
        return Permutation(tuple(self.images[j - 1] for j in other.images))

    __mul__ = compose

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.images, start=1):
            inv[j - 1] = i
        return Permutation(tuple(inv))

    @property
    def sign(self) -> int:
        seen = [False] * self.n
        parity = 0
        for start in range(self.n):
            if seen[start]:
                continue
            length = 0
            j = start
            while not seen[j]:
                seen[j] = True
                j = self.images[j] - 1
                length += 1
            parity += length - 1
        return -1 if parity % 2 else 1

    def is_even(self) -> bool:
        return self.sign == 1

    def __str__(self) -> str:
        return " ".join(map(str, self.images))


def all_permutations(n: int) -> Iterator[Permutation]:
    for images in itertools.permutations(range(1, n + 1)):
        yield Permutation(images)


# -- text format ------------------------------------------------------------

_VAR_RE = re.compile(r"^([xy])(\d+)_(\d+)(?:\^(\d+))?$")


def _format_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _format_term(m: Monomial, c: Fraction) -> str:
    pieces = [_format_coeff(c)]
    for v, e in m:
        pieces.append(var_name(v) + (f"^{e}" if e > 1 else ""))
    return " ".join(pieces)


def format_polynomial(p: Polynomial) -> str:
    """One term per line; the zero polynomial is the single line ``0``."""
    if p.is_zero():
        return "0\n"
    return "".join(_format_term(m, c) + "\n" for m, c in p.sorted_terms())


def parse_rational(token: str) -> Fraction:
    try:
        if "/" in token:
            num, den = token.split("/")
            return Fraction(int(num), int(den))
        return Fraction(int(token))
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"bad rational {token!r}") from None


def parse_term(line: str) -> tuple[Monomial, Fraction]:
    tokens = line.split()
    coeff = parse_rational(tokens[0])
    factors = []
    for tok in tokens[1:]:
        match = _VAR_RE.match(tok)
        if not match:
            raise FormatError(f"bad variable token {tok!r}")
        kind, a, b, e = match.groups()
        a, b = int(a), int(b)
        if kind == "x":
            if a >= b:
                raise FormatError(f"matching variable must be written x<u>_<v> with u < v: {tok!r}")
            v = ("x", a, b)
        else:
            v = ("y", a, b)
        factors.extend([v] * int(e or 1))
    return mono_from_vars(factors), coeff


def parse_polynomial(text: str | Iterable[str]) -> Polynomial:
    lines = text.splitlines() if isinstance(text, str) else text
    acc: dict = {}
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m, c = parse_term(line)
        acc[m] = acc.get(m, 0) + c
    return Polynomial(acc)
