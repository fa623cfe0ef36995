"""Exact rational linear algebra and a small dense simplex solver.

Everything here works on :class:`fractions.Fraction` so that face
combinatorics never depend on a floating point tolerance.  Problem sizes
are tiny (a handful of variables, a dozen constraints), so dense
list-of-lists tableaux are adequate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Vector = tuple[Fraction, ...]


def to_fraction(value) -> Fraction:
    """Convert ints, decimal strings, ``"p/q"`` strings and floats to a Fraction.

    Floats go through their shortest ``repr`` so that ``0.1`` becomes
    ``1/10`` rather than the binary expansion of the double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    # numpy scalars and friends
    if hasattr(value, "item"):
        return to_fraction(value.item())
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


def vec(values: Iterable) -> Vector:
    return tuple(to_fraction(v) for v in values)


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns the matrix and its pivot columns."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return len(rref(rows)[1])


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[Vector]:
    """Basis of ``{v : rows @ v = 0}``; the standard basis when *rows* is empty."""
    if not rows:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    m, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][fc]
        basis.append(tuple(v))
    return basis


def solve(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> Vector | None:
    """Solve a square system exactly; ``None`` if singular."""
    n = len(a)
    aug = [list(row) + [rhs] for row, rhs in zip(a, b)]
    m, pivots = rref(aug)
    if pivots != list(range(n)):
        return None
    return tuple(m[i][n] for i in range(n))


def inverse(a: Sequence[Sequence[Fraction]]) -> list[list[Fraction]] | None:
    n = len(a)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    m, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        return None
    return [row[n:] for row in m]


def matvec(a: Sequence[Sequence[Fraction]], x: Sequence[Fraction]) -> Vector:
    return tuple(dot(row, x) for row in a)


# --------------------------------------------------------------------------
# Linear programming


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "unbounded" or "infeasible"
    value: Fraction | None = None
    x: Vector | None = None


class _Tableau:
    """Bland-rule simplex on ``max c.z  s.t.  T z = rhs, z >= 0``."""

    def __init__(self, rows, rhs, basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r: int, c: int) -> None:
        inv = 1 / self.rows[r][c]
        self.rows[r] = [v * inv for v in self.rows[r]]
        self.rhs[r] *= inv
        for i in range(len(self.rows)):
            if i != r:
                f = self.rows[i][c]
                if f != 0:
                    self.rows[i] = [a - f * b for a, b in zip(self.rows[i], self.rows[r])]
                    self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = c

    def optimize(self, cost: Sequence[Fraction], allowed: int) -> bool:
        """Run to optimality over the first *allowed* columns; False if unbounded."""
        while True:
            cb = [cost[j] for j in self.basis]
            entering = None
            for j in range(allowed):
                if j in self.basis:
                    continue
                red = cost[j] - sum((cb[i] * self.rows[i][j] for i in range(len(self.rows))), Fraction(0))
                if red > 0:
                    entering = j
                    break
            if entering is None:
                return True
            best = None
            for i, row in enumerate(self.rows):
                if row[entering] > 0:
                    ratio = self.rhs[i] / row[entering]
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return False
            self.pivot(best[1], entering)


def lp_max(
    c: Sequence,
    a_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    a_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
) -> LPResult:
    """Maximize ``c.x`` over free ``x`` with ``a_ub x <= b_ub`` and ``a_eq x = b_eq``.

    Two-phase simplex with Bland's rule in exact arithmetic.
    """
    n = len(c)
    c = vec(c)
    a_ub = [vec(r) for r in a_ub]
    a_eq = [vec(r) for r in a_eq]
    b_ub = vec(b_ub)
    b_eq = vec(b_eq)
    m_ub, m_eq = len(a_ub), len(a_eq)
    m = m_ub + m_eq
    # columns: u (n), v (n), slacks (m_ub), artificials (m); x = u - v
    nstruct = 2 * n + m_ub
    ncols = nstruct + m
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for i in range(m):
        if i < m_ub:
            coeffs, b = a_ub[i], b_ub[i]
        else:
            coeffs, b = a_eq[i - m_ub], b_eq[i - m_ub]
        row = [Fraction(0)] * ncols
        for j in range(n):
            row[j] = coeffs[j]
            row[n + j] = -coeffs[j]
        if i < m_ub:
            row[2 * n + i] = Fraction(1)
        if b < 0:
            row = [-v for v in row]
            b = -b
        row[nstruct + i] = Fraction(1)
        rows.append(row)
        rhs.append(b)

    tab = _Tableau(rows, rhs, [nstruct + i for i in range(m)])
    phase1 = [Fraction(0)] * nstruct + [Fraction(-1)] * m
    tab.optimize(phase1, ncols)
    if any(tab.rhs[i] != 0 for i in range(m) if tab.basis[i] >= nstruct):
        return LPResult("infeasible")
    # drive remaining (zero-level) artificials out of the basis
    keep = []
    for i in range(m):
        if tab.basis[i] >= nstruct:
            col = next((j for j in range(nstruct) if tab.rows[i][j] != 0), None)
            if col is None:
                continue  # redundant equality row
            tab.pivot(i, col)
        keep.append(i)
    tab.rows = [tab.rows[i][:nstruct] for i in keep]
    tab.rhs = [tab.rhs[i] for i in keep]
    tab.basis = [tab.basis[i] for i in keep]

    cost = list(c) + [-v for v in c] + [Fraction(0)] * m_ub
    if not tab.optimize(cost, nstruct):
        return LPResult("unbounded")
    z = [Fraction(0)] * nstruct
    for i, j in enumerate(tab.basis):
        z[j] = tab.rhs[i]
    x = tuple(z[j] - z[n + j] for j in range(n))
    return LPResult("optimal", dot(c, x), x)
