"""Convex polytopes in halfspace form, their face lattices and strata.

A polytope is stored as rational constraints ``<a_i, x> <= b_i``.  All
face combinatorics (vertices, faces, active sets, affine hulls) are exact;
the float copies ``A`` and ``b`` serve membership tests and projections of
floating point points.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from . import exact
from .errors import (
    EmptyInterior,
    GeometryError,
    NotInPolytope,
    ProjectionNotConverged,
    Unbounded,
)
from .exact import Vector

TOL_ACTIVE = 1e-9
TOL_PROJ = 1e-12
PROJ_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class Face:
    """A non-empty face, identified by the constraints active on it.

    ``affine_basis`` spans the tangent space of the face (the direction
    space of its affine hull) and ``witness`` is an exact point of its
    relative interior.
    """

    id: int
    active: frozenset
    dim: int
    affine_basis: tuple[Vector, ...]
    witness: Vector
    vertex_ids: tuple[int, ...]

    def basis_array(self, n: int) -> np.ndarray:
        if not self.affine_basis:
            return np.zeros((0, n))
        return np.array([[float(v) for v in b] for b in self.affine_basis])

    def witness_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.witness])


@dataclass(frozen=True)
class FaceLattice:
    faces: tuple[Face, ...]
    vertices: tuple[Vector, ...]
    by_dim: dict
    by_active: dict
    by_vertices: dict
    # incidence[i] is the set of ids of faces contained in face i (including i)
    incidence: tuple[frozenset, ...]

    def __len__(self):
        return len(self.faces)

    def __iter__(self):
        return iter(self.faces)

    def counts(self) -> dict[int, int]:
        return {d: len(fs) for d, fs in sorted(self.by_dim.items())}

    @property
    def top(self) -> Face:
        return self.faces[-1]

    def is_subface(self, inner: Face, outer: Face) -> bool:
        return inner.id in self.incidence[outer.id]


class Polytope:
    """Bounded convex polytope ``{x : <a_i, x> <= b_i}`` with non-empty interior.

    Parameters
    ----------
    halfspaces : iterable of (normal, offset)
        Entries may be ints, Fractions, ``"p/q"`` strings or floats (floats are
        read through their decimal repr).
    canonical : bool
        Set by :func:`canonicalize`; callers should not pass it.
    """

    def __init__(self, halfspaces: Iterable, *, canonical: bool = False):
        hs = []
        for a, b in halfspaces:
            a = exact.vec(a)
            if all(v == 0 for v in a):
                raise ValueError("halfspace with zero normal")
            hs.append((a, exact.to_fraction(b)))
        if not hs:
            raise Unbounded("no halfspaces given")
        n = len(hs[0][0])
        if n == 0 or any(len(a) != n for a, _ in hs):
            raise ValueError("inconsistent halfspace dimensions")
        self.dim = n
        self.halfspaces: tuple[tuple[Vector, Fraction], ...] = tuple(hs)
        self.canonical = canonical
        self.A = np.array([[float(v) for v in a] for a, _ in hs])
        self.b = np.array([float(b) for _, b in hs])
        self.A.setflags(write=False)
        self.b.setflags(write=False)
        self._check_interior()
        self.bbox = self._bounding_box()

    # -- construction checks ------------------------------------------------

    def _check_interior(self):
        n = self.dim
        a_ub = [list(a) + [Fraction(1)] for a, _ in self.halfspaces]
        b_ub = [b for _, b in self.halfspaces]
        a_ub.append([Fraction(0)] * n + [Fraction(1)])
        b_ub.append(Fraction(1))
        res = exact.lp_max([0] * n + [1], a_ub, b_ub)
        if res.status != "optimal" or res.value <= 0:
            raise EmptyInterior("no point satisfies every constraint strictly")
        self.interior_point: Vector = res.x[:n]

    def _bounding_box(self) -> tuple[Vector, Vector]:
        lo, hi = [], []
        a_ub = [a for a, _ in self.halfspaces]
        b_ub = [b for _, b in self.halfspaces]
        for j in range(self.dim):
            e = [Fraction(int(i == j)) for i in range(self.dim)]
            up = exact.lp_max(e, a_ub, b_ub)
            down = exact.lp_max([-v for v in e], a_ub, b_ub)
            if up.status == "unbounded" or down.status == "unbounded":
                raise Unbounded(f"recession direction along coordinate {j}")
            hi.append(up.value)
            lo.append(-down.value)
        return tuple(lo), tuple(hi)

    # -- basic protocol -------------------------------------------------------

    def __repr__(self):
        return f"Polytope(dim={self.dim}, halfspaces={len(self.halfspaces)}, canonical={self.canonical})"

    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        return self.dim == other.dim and self.halfspaces == other.halfspaces

    def __hash__(self):
        return hash(self.halfspaces)

    @property
    def n_halfspaces(self) -> int:
        return len(self.halfspaces)

    @cached_property
    def lattice(self) -> FaceLattice:
        return face_lattice(self)

    @property
    def vertices(self) -> tuple[Vector, ...]:
        return self.lattice.vertices

    @cached_property
    def vertex_array(self) -> np.ndarray:
        v = np.array([[float(c) for c in p] for p in self.vertices])
        v.setflags(write=False)
        return v

    def describe_constraint(self, i: int) -> str:
        """Render constraint *i* as an equation, e.g. ``x=0`` or ``x+y=1``."""
        a, b = self.halfspaces[i]
        names = _var_names(self.dim)
        sign = -1 if next(v for v in a if v != 0) < 0 else 1
        terms = []
        for coef, name in zip(a, names):
            coef *= sign
            if coef == 0:
                continue
            mag = "" if abs(coef) == 1 else f"{abs(coef)}*"
            if not terms:
                terms.append(("-" if coef < 0 else "") + mag + name)
            else:
                terms.append(("-" if coef < 0 else "+") + mag + name)
        return "".join(terms) + f"={b * sign}"

    def describe_face(self, face: Face) -> str:
        if not face.active:
            return "interior"
        return ", ".join(self.describe_constraint(i) for i in sorted(face.active))


def _var_names(n: int) -> list[str]:
    return list("xyzw")[:n] if n <= 4 else [f"x{i}" for i in range(1, n + 1)]


# --------------------------------------------------------------------------
# Operations


def canonicalize(P: Polytope) -> Polytope:
    """Drop implied halfspaces; every remaining one supports a facet."""
    if P.canonical:
        return P
    keep = list(P.halfspaces)
    i = 0
    while i < len(keep):
        a, b = keep[i]
        others = keep[:i] + keep[i + 1:]
        res = exact.lp_max(a, [o[0] for o in others], [o[1] for o in others])
        if res.status == "optimal" and res.value <= b:
            keep.pop(i)
        else:
            i += 1
    return Polytope(keep, canonical=True)


def face_lattice(P: Polytope) -> FaceLattice:
    """Enumerate all non-empty faces of a canonical polytope exactly.

    Vertices come from solving every rank-``n`` subset of constraints; the
    remaining faces are generated by intersecting faces with facets.
    """
    if not P.canonical:
        raise GeometryError("face_lattice requires a canonical polytope; call canonicalize first")
    n = P.dim
    normals = [a for a, _ in P.halfspaces]
    offsets = [b for _, b in P.halfspaces]

    verts: dict[Vector, frozenset] = {}
    for subset in itertools.combinations(range(len(normals)), n):
        x = exact.solve([normals[i] for i in subset], [offsets[i] for i in subset])
        if x is None or x in verts:
            continue
        slack = [exact.dot(a, x) - b for a, b in zip(normals, offsets)]
        if all(s <= 0 for s in slack):
            verts[x] = frozenset(i for i, s in enumerate(slack) if s == 0)
    vertices = tuple(sorted(verts))
    tight = [verts[v] for v in vertices]

    top = frozenset(range(len(vertices)))
    found = {top}
    frontier = [top]
    while frontier:
        nxt = []
        for vs in frontier:
            active = frozenset.intersection(*(tight[v] for v in vs))
            for i in range(len(normals)):
                if i in active:
                    continue
                sub = frozenset(v for v in vs if i in tight[v])
                if sub and sub not in found:
                    found.add(sub)
                    nxt.append(sub)
        frontier = nxt

    records = []
    for vs in found:
        active = frozenset.intersection(*(tight[v] for v in vs))
        act_normals = [normals[i] for i in sorted(active)]
        dim = n - exact.rank(act_normals)
        pts = [vertices[v] for v in sorted(vs)]
        aff_dim = exact.rank([[p - q for p, q in zip(pt, pts[0])] for pt in pts[1:]]) if len(pts) > 1 else 0
        if aff_dim != dim:
            raise GeometryError(f"face dimension mismatch ({aff_dim} vs {dim}); not canonical?")
        basis = tuple(exact.nullspace(act_normals, n))
        witness = tuple(sum(c) / len(pts) for c in zip(*pts))
        records.append((dim, tuple(sorted(active)), active, basis, witness, tuple(sorted(vs))))
    records.sort(key=lambda r: (r[0], r[1]))

    faces = tuple(
        Face(id=k, active=r[2], dim=r[0], affine_basis=r[3], witness=r[4], vertex_ids=r[5])
        for k, r in enumerate(records)
    )
    by_dim: dict[int, tuple[Face, ...]] = {}
    for f in faces:
        by_dim.setdefault(f.dim, ())
        by_dim[f.dim] += (f,)
    vsets = [frozenset(f.vertex_ids) for f in faces]
    incidence = tuple(
        frozenset(j for j, other in enumerate(vsets) if other <= vsets[i]) for i in range(len(faces))
    )
    return FaceLattice(
        faces=faces,
        vertices=vertices,
        by_dim=by_dim,
        by_active={f.active: f for f in faces},
        by_vertices={frozenset(f.vertex_ids): f for f in faces},
        incidence=incidence,
    )


def _is_exact_point(x) -> bool:
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in x)


def active_set(P: Polytope, x, tol: float = TOL_ACTIVE) -> frozenset:
    """Indices of constraints tight at *x*; raises NotInPolytope outside M."""
    if _is_exact_point(x):
        xs = exact.vec(x)
        slack = [exact.dot(a, xs) - b for a, b in P.halfspaces]
        for i, s in enumerate(slack):
            if s > 0:
                raise NotInPolytope(xs, i, s)
        return frozenset(i for i, s in enumerate(slack) if s == 0)
    x = np.asarray(x, dtype=float)
    r = P.A @ x - P.b
    worst = int(np.argmax(r))
    if r[worst] > tol:
        raise NotInPolytope(x, worst, float(r[worst]))
    return frozenset(np.flatnonzero(r >= -tol).tolist())


def smallest_face(P: Polytope, x, tol: float = TOL_ACTIVE) -> Face:
    """The smallest face containing *x*.

    For float points the tight set is taken within *tol* and then closed
    (the face spanned by the vertices tight on all of it), so a point near
    a vertex of a non-simple polytope still resolves to a lattice face.
    """
    lat = P.lattice
    act = active_set(P, x, tol)
    face = lat.by_active.get(act)
    if face is not None:
        return face
    vs = frozenset(f.vertex_ids[0] for f in lat.by_dim.get(0, ()) if act <= f.active)
    if vs in lat.by_vertices:
        return lat.by_vertices[vs]
    raise GeometryError(f"active set {sorted(act)} at {list(x)} is not realized by any face")


def index(P: Polytope, x, tol: float = TOL_ACTIVE) -> int:
    """Codimension of the smallest face containing *x*."""
    return P.dim - smallest_face(P, x, tol).dim


def strata(P: Polytope, i: int) -> tuple[Face, ...]:
    if not 0 <= i <= P.dim:
        raise ValueError(f"stratum index must lie in 0..{P.dim}")
    return P.lattice.by_dim.get(P.dim - i, ())


def contains(P: Polytope, x, tol: float = TOL_ACTIVE) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.all(P.A @ x <= P.b + tol))


def project(P: Polytope, x, tol: float = TOL_PROJ, max_sweeps: int = PROJ_MAX_SWEEPS) -> np.ndarray:
    """Euclidean nearest point of the polytope (Dykstra over the halfspaces)."""
    z, sweeps = _kernels.dykstra(P.A, P.b, np.asarray(x, dtype=float), tol, max_sweeps)
    if sweeps < 0:
        raise ProjectionNotConverged(f"Dykstra did not converge within {max_sweeps} sweeps")
    return z


def sample(P: Polytope, face: Face, count: int, seed: int = 42, *, exact_points: bool = False):
    """Deterministic points of the relative interior of *face*.

    Points are convex combinations of the face's vertices whose weights are
    bounded below by ``1 / (2 k)`` for ``k`` vertices.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng([seed, face.id])
    vids = face.vertex_ids
    k = len(vids)
    if exact_points:
        verts = [P.vertices[v] for v in vids]
        out = []
        for _ in range(count):
            raw = [Fraction(int(w)) for w in rng.integers(1, 1000, size=k)]
            total = sum(raw)
            weights = [(r / total + Fraction(1, k)) / 2 for r in raw]
            out.append(tuple(sum(w * v[j] for w, v in zip(weights, verts)) for j in range(P.dim)))
        return out
    verts = P.vertex_array[list(vids)]
    weights = 0.5 * rng.dirichlet(np.ones(k), size=count) + 0.5 / k
    return weights @ verts


def sample_all(P: Polytope, per_face: int, seed: int = 42) -> list[tuple[Face, np.ndarray]]:
    """Samples from every face (vertices give a single point)."""
    out = []
    for f in P.lattice:
        cnt = 1 if f.dim == 0 else per_face
        out.append((f, sample(P, f, cnt, seed)))
    return out


def sample_strata(P: Polytope, total: int, seed: int = 42) -> np.ndarray:
    """About *total* points covering every face: one per vertex, an equal
    share per higher face, and the remainder in the interior."""
    faces = list(P.lattice)
    nonvertex = [f for f in faces if f.dim > 0]
    nverts = len(faces) - len(nonvertex)
    share = max(1, (total - nverts) // (2 * max(1, len(nonvertex) - 1)))
    chunks = []
    for f in faces:
        if f.dim == 0:
            cnt = 1
        elif f.dim == P.dim:
            continue
        else:
            cnt = share
        chunks.append(sample(P, f, cnt, seed))
    used = sum(len(c) for c in chunks)
    chunks.append(sample(P, P.lattice.top, max(1, total - used), seed))
    return np.vstack(chunks)


# --------------------------------------------------------------------------
# JSON


def _frac_str(v: Fraction) -> str:
    return str(v)


def polytope_to_json(P: Polytope) -> dict:
    return {
        "dim": P.dim,
        "halfspaces": [
            {"a": [_frac_str(v) for v in a], "b": _frac_str(b)} for a, b in P.halfspaces
        ],
    }


def polytope_from_json(data) -> Polytope:
    """Parse ``{"dim": n, "halfspaces": [{"a": [...], "b": ...}, ...]}``."""
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    try:
        n = int(data["dim"])
        hs = [(h["a"], h["b"]) for h in data["halfspaces"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed polytope JSON: {exc}") from exc
    if any(len(a) != n for a, _ in hs):
        raise ValueError("halfspace normal length does not match dim")
    return Polytope(hs)


def lattice_to_json(P: Polytope) -> list[dict]:
    lat = P.lattice
    return [
        {
            "active": sorted(f.active),
            "dim": f.dim,
            "vertices": [[_frac_str(c) for c in lat.vertices[v]] for v in f.vertex_ids],
        }
        for f in lat
    ]


def halfspaces_from_arrays(A: Sequence[Sequence], b: Sequence) -> list:
    return list(zip(A, b))
