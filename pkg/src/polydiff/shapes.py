"""Standard polytopes and their affine symmetry groups."""

from __future__ import annotations

import itertools
from fractions import Fraction

from .polytope import Polytope, canonicalize


def _unit(n, j, s=1):
    return [s if i == j else 0 for i in range(n)]


def cube(n: int = 3) -> Polytope:
    """The unit cube ``[0, 1]^n``."""
    hs = []
    for j in range(n):
        hs.append((_unit(n, j, -1), 0))
        hs.append((_unit(n, j, 1), 1))
    return canonicalize(Polytope(hs))


def square() -> Polytope:
    return cube(2)


def simplex(n: int = 2) -> Polytope:
    """``{x >= 0, sum(x) <= 1}``."""
    hs = [(_unit(n, j, -1), 0) for j in range(n)]
    hs.append(([1] * n, 1))
    return canonicalize(Polytope(hs))


def triangle() -> Polytope:
    return simplex(2)


def cross_polytope(n: int = 3) -> Polytope:
    """``{x : sum |x_i| <= 1}``; the octahedron for ``n = 3``."""
    hs = [(list(signs), 1) for signs in itertools.product((-1, 1), repeat=n)]
    return canonicalize(Polytope(hs))


def octahedron() -> Polytope:
    return cross_polytope(3)


def cube_symmetries(n: int):
    """All ``(L, t)`` with ``x -> L x + t`` mapping ``[0, 1]^n`` onto itself.

    These are the signed permutation matrices; a sign flip on axis ``j``
    comes with ``t_j = 1`` so that ``x_j -> 1 - x_j``.
    """
    out = []
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1, -1), repeat=n):
            L = [[Fraction(0)] * n for _ in range(n)]
            t = [Fraction(0)] * n
            for row, (col, s) in enumerate(zip(perm, signs)):
                L[row][col] = Fraction(s)
                if s < 0:
                    t[row] = Fraction(1)
            out.append((L, t))
    return out
