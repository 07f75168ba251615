"""Exact sparse linear solving for the derivation engine.

The systems are built once per (family, n, degree) and then solved for many
right-hand sides, so the expensive part (choosing independent columns and
rows) happens once. Independence is detected modulo a 62-bit prime with
python-flint's ``nmod_mat``; independence mod p implies independence over Q,
and every returned solution is re-checked exactly against all rows, so the
prime can only ever cost completeness, never soundness.
"""

from __future__ import annotations

import threading
from fractions import Fraction

from flint import fmpq, fmpq_mat, fmpz_mat, nmod_mat

_PRIME = 4611686018427387847  # largest prime below 2**62


def _pivots(rows: int, cols: int, entries: list[dict]) -> list[int]:
    """Indices of the columns picked by reduced row echelon form mod p."""
    mat = nmod_mat(rows, cols, _PRIME)
    for j, col in enumerate(entries):
        for i, v in col.items():
            mat[i, j] = v % _PRIME
    red, rank = mat.rref()
    out = []
    i = 0
    for j in range(cols):
        if i < rank and int(red[i, j]) != 0:
            out.append(j)
            i += 1
    return out


class ExactSystem:
    """Sparse system ``sum_j a_j * column_j = rhs`` over monomial-indexed rows."""

    def __init__(self, rows: list, columns: list, entries: list[dict]):
        self.rows = rows
        self.columns = columns
        self.entries = entries
        self.row_index = {m: i for i, m in enumerate(rows)}
        self._lock = threading.Lock()
        self._ready = False

    def _prepare(self) -> None:
        with self._lock:
            if self._ready:
                return
            idx = self.row_index
            sparse = [{idx[m]: v for m, v in col.items()} for col in self.entries]
            cols = _pivots(len(self.rows), len(sparse), sparse)
            # independent rows of the pivot block = pivot columns of its transpose
            transposed: list[dict] = [dict() for _ in self.rows]
            for k, j in enumerate(cols):
                for i, v in sparse[j].items():
                    transposed[i][k] = v
            rows = _pivots(len(cols), len(self.rows), transposed)
            r = len(cols)
            square = fmpz_mat(r, r)
            pos = {i: t for t, i in enumerate(rows)}
            for k, j in enumerate(cols):
                for i, v in sparse[j].items():
                    if i in pos:
                        square[pos[i], k] = v
            self._cols = cols
            self._rows = rows
            self._sparse = sparse
            self._inverse = square.inv() if r else None
            self._ready = True

    def solve(self, rhs: dict):
        """Return ``{column index: value}`` solving the system, or None if inconsistent."""
        self._prepare()
        idx = self.row_index
        dense: dict = {}
        for m, v in rhs.items():
            if m not in idx:
                return None
            dense[idx[m]] = Fraction(v)
        r = len(self._cols)
        sol: dict = {}
        if r:
            vec = fmpq_mat(r, 1)
            for t, i in enumerate(self._rows):
                if i in dense:
                    c = dense[i]
                    vec[t, 0] = fmpq(c.numerator, c.denominator)
            out = self._inverse * vec
            for k, j in enumerate(self._cols):
                val = out[k, 0]
                if val != 0:
                    sol[j] = Fraction(int(val.p), int(val.q))
        # exact check against every row
        residual = dict(dense)
        for j, a in sol.items():
            for i, v in self._sparse[j].items():
                residual[i] = residual.get(i, 0) - a * v
        if any(v for v in residual.values()):
            return None
        return sol

