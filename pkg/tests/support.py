"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

import numpy as np

from polydiff import exact
from polydiff.diffeo import Diffeo, affine_symmetry, invert, try_near_identity
from polydiff.fields import PolynomialField, random_stratified_field
from polydiff.shapes import cube, cube_symmetries, cross_polytope, square, triangle

BUMP = {(1, 0): Fraction(2, 5), (2, 0): Fraction(-2, 5)}  # 0.4 x (1 - x)


def bump_field(P=None, scale=1):
    P = P or square()
    comp = {k: v * Fraction(scale) for k, v in BUMP.items()}
    return PolynomialField(P, [comp, {}])


def brute_force_faces(P):
    """Every realizable exact active set, by a strict-feasibility LP per subset.

    For each subset S of constraints, maximize s subject to equality on S and
    ``<a_j, x> + s <= b_j`` off S.  A positive optimum means some point has
    exactly S as its active set.  Returns ``{frozenset(S): dim}``.
    """
    n = P.dim
    hs = P.halfspaces
    out = {}
    for r in range(len(hs) + 1):
        for S in itertools.combinations(range(len(hs)), r):
            a_eq = [list(hs[i][0]) + [Fraction(0)] for i in S]
            b_eq = [hs[i][1] for i in S]
            a_ub = [list(hs[j][0]) + [Fraction(1)] for j in range(len(hs)) if j not in S]
            b_ub = [hs[j][1] for j in range(len(hs)) if j not in S]
            a_ub.append([Fraction(0)] * n + [Fraction(1)])
            b_ub.append(Fraction(1))
            res = exact.lp_max([0] * n + [1], a_ub, b_ub, a_eq, b_eq)
            if res.status == "optimal" and res.value > 0:
                dim = n - exact.rank([hs[i][0] for i in S]) if S else n
                out[frozenset(S)] = dim
    return out


def oracle_polytopes():
    return {
        "square": square(),
        "2-simplex": triangle(),
        "cube": cube(3),
        "4-cube": cube(4),
        "octahedron": cross_polytope(3),
    }


@lru_cache(maxsize=None)
def shapes():
    return {"square": square(), "triangle": triangle(), "cube": cube(3)}


@lru_cache(maxsize=None)
def gated_pool(name: str, count: int = 6, target: float = 0.45):
    """Admitted near-identity diffeos from seeded random fields."""
    P = shapes()[name]
    return tuple(try_near_identity(random_stratified_field(P, 1000 + s, target=target)) for s in range(count))


def symmetry_letters(name: str):
    P = shapes()[name]
    if name == "triangle":
        # permutations of the three vertices (0,0), (1,0), (0,1)
        maps = [
            ([[1, 0], [0, 1]], [0, 0]),
            ([[0, 1], [1, 0]], [0, 0]),
            ([[-1, -1], [1, 0]], [1, 0]),
            ([[0, 1], [-1, -1]], [0, 1]),
            ([[-1, -1], [0, 1]], [1, 0]),
            ([[1, 0], [-1, -1]], [0, 1]),
        ]
    else:
        maps = cube_symmetries(P.dim)
    return tuple(affine_symmetry(L, t, P) for L, t in maps)


def random_word(name: str, rng, max_len: int = 4, symmetries: bool = True) -> Diffeo:
    P = shapes()[name]
    pool = gated_pool(name)
    syms = symmetry_letters(name)
    word = []
    for _ in range(int(rng.integers(1, max_len + 1))):
        kind = int(rng.integers(0, 3 if symmetries else 2))
        if kind == 0:
            word.extend(pool[int(rng.integers(len(pool)))].word)
        elif kind == 1:
            word.extend(invert(pool[int(rng.integers(len(pool)))]).word)
        else:
            word.extend(syms[int(rng.integers(len(syms)))].word)
    return Diffeo(P, word)


def interior_points(P, count, seed, margin=1e-3):
    """Points of the polytope at distance > margin from every facet."""
    rng = np.random.default_rng(seed)
    verts = P.vertex_array
    out = []
    norms = np.linalg.norm(P.A, axis=1)
    while len(out) < count:
        x = rng.dirichlet(np.ones(len(verts))) @ verts
        if np.all((P.b - P.A @ x) / norms > margin):
            out.append(x)
    return np.array(out)


def fd_jacobian(fn, x, h):
    n = len(x)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (fn(x + e) - fn(x - e)) / (2 * h)
    return J



