"""Face-respecting diffeomorphisms as words over gated generators.

A :class:`Diffeo` is a finite word whose letters are near-identity maps
``id + f`` admitted by the operator-norm gate, their inverses, and affine
symmetries of the polytope.  Letters are applied right to left, so
``compose(a, b)`` evaluates ``b`` first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from . import exact
from .errors import (
    DomainMismatch,
    GateNotSatisfied,
    InternalInvariantViolation,
    InversionNotConverged,
    NotASymmetry,
    NotStratified,
    ProjectionNotConverged,
)
from .fields import (
    GateCertificate,
    InverseChartField,
    PolynomialField,
    VectorField,
    _check_inside,
    field_from_json,
    field_to_json,
    rho,
    sup_op_norm,
    zero_field,
)
from .polytope import PROJ_MAX_SWEEPS, TOL_ACTIVE, TOL_PROJ, Polytope, project, sample, smallest_face

TOL_INV = 1e-10


# --------------------------------------------------------------------------
# Letters


@dataclass(frozen=True, eq=False)
class NearIdentity:
    """The map ``x -> x + f(x)`` with a passing gate certificate."""

    field: VectorField
    cert: GateCertificate

    def apply(self, x, tol_inv: float = TOL_INV):
        return x + self.field._eval(x)

    def jacobian(self, x, tol_inv: float = TOL_INV):
        return np.eye(len(x)) + self.field._jacobian(x)

    def inverse(self):
        return Inverse(self)

    def to_json(self):
        return {"near_identity": field_to_json(self.field)}


@dataclass(frozen=True, eq=False)
class Inverse:
    """``(id + f)^{-1}``, evaluated by projected Banach iteration."""

    letter: NearIdentity

    def apply(self, y, tol_inv: float = TOL_INV):
        return invert_point(self.letter.field, y, cert=self.letter.cert, tol_inv=tol_inv)

    def jacobian(self, y, tol_inv: float = TOL_INV):
        x = self.apply(y, tol_inv)
        return np.linalg.inv(self.letter.jacobian(x))

    def inverse(self):
        return self.letter

    def to_json(self):
        return {"inverse_of": field_to_json(self.letter.field)}


@dataclass(frozen=True, eq=False)
class AffineSymmetry:
    """``x -> L x + t`` permuting the vertices; ``L`` and ``t`` are exact."""

    L: tuple
    t: tuple

    def __post_init__(self):
        object.__setattr__(self, "_Lf", np.array([[float(v) for v in r] for r in self.L]))
        object.__setattr__(self, "_tf", np.array([float(v) for v in self.t]))

    def apply(self, x, tol_inv: float = TOL_INV):
        return self._Lf @ x + self._tf

    def apply_exact(self, x):
        return tuple(a + b for a, b in zip(exact.matvec(self.L, exact.vec(x)), self.t))

    def jacobian(self, x, tol_inv: float = TOL_INV):
        return self._Lf.copy()

    def inverse(self):
        Linv = exact.inverse(self.L)
        t = tuple(-v for v in exact.matvec(Linv, self.t))
        return AffineSymmetry(tuple(tuple(r) for r in Linv), t)

    def to_json(self):
        def num(v: Fraction):
            return int(v) if v.denominator == 1 else str(v)

        return {"affine": {"L": [[num(v) for v in r] for r in self.L], "t": [num(v) for v in self.t]}}


Letter = NearIdentity | Inverse | AffineSymmetry


# --------------------------------------------------------------------------
# Words


class Diffeo:
    """A word of letters on a fixed polytope, applied right to left."""

    def __init__(self, domain: Polytope, word: Sequence = (), tol_inv: float = TOL_INV):
        self.domain = domain
        self.word: tuple = tuple(word)
        self.tol_inv = tol_inv

    def __repr__(self):
        names = [type(l).__name__ for l in self.word]
        return f"Diffeo({' . '.join(names) or 'id'})"

    def __len__(self):
        return len(self.word)

    @property
    def face_respecting_by_construction(self) -> bool:
        """True when no affine letter occurs (each remaining letter fixes every face)."""
        return not any(isinstance(l, AffineSymmetry) for l in self.word)

    def _vertex(self, x):
        """The vertex *x* sits on (within tol_active), or None."""
        P = self.domain
        if np.count_nonzero(P.A @ x - P.b >= -TOL_ACTIVE) < P.dim:
            return None
        face = smallest_face(P, x)
        if face.dim == 0:
            return P.vertex_array[face.vertex_ids[0]].copy()
        return None

    def eval(self, x, check: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if check:
            _check_inside(self.domain, x)
        if self.face_respecting_by_construction:
            v = self._vertex(x)
            if v is not None:
                return v
        for letter in reversed(self.word):
            x = letter.apply(x, self.tol_inv)
        return x

    __call__ = eval

    def eval_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.eval(x) for x in X]).reshape(X.shape)

    def jacobian(self, x, check: bool = True) -> np.ndarray:
        """Chain rule over the word."""
        x = np.asarray(x, dtype=float)
        if check:
            _check_inside(self.domain, x)
        J = np.eye(self.domain.dim)
        for letter in reversed(self.word):
            J = letter.jacobian(x, self.tol_inv) @ J
            x = letter.apply(x, self.tol_inv)
        return J

    def inverse_jacobian(self, y, check: bool = True) -> np.ndarray:
        """Jacobian of the inverse map at *y*, as ``(d'(d^{-1}(y)))^{-1}``."""
        x = invert(self).eval(y, check)
        return np.linalg.inv(self.jacobian(x, check=False))

    def to_json(self) -> list:
        return [l.to_json() for l in self.word]


def identity(P: Polytope) -> Diffeo:
    return Diffeo(P, ())


def _gate(f: VectorField, cert: GateCertificate | None = None) -> GateCertificate:
    if cert is None:
        cert = sup_op_norm(f)
    if cert.stratified is not None and not cert.stratified.passed:
        raise NotStratified(cert.stratified)
    if not cert.sound or not cert.q < 1:
        raise GateNotSatisfied(cert.q, cert.argmax)
    return cert


def try_near_identity(f: VectorField, cert: GateCertificate | None = None, **cert_kwargs) -> Diffeo:
    """Admit ``id + f`` when *f* is stratified and its certified norm is below 1.

    A rejection means only that the sufficient gate failed.

    Raises
    ------
    NotStratified
        With the first violating face, point and constraint.
    GateNotSatisfied
        With the certified ``q`` and the location of the grid maximum.
    """
    if cert is None:
        cert = sup_op_norm(f, **cert_kwargs)
    cert = _gate(f, cert)
    return Diffeo(f.domain, (NearIdentity(f, cert),))


def affine_symmetry(L, t, P: Polytope) -> Diffeo:
    """One-letter word ``x -> L x + t``; *L* must be invertible and permute the vertices."""
    n = P.dim
    L = tuple(exact.vec(r) for r in L)
    t = exact.vec(t)
    if len(L) != n or any(len(r) != n for r in L) or len(t) != n:
        raise NotASymmetry("shape of L or t does not match the dimension")
    if exact.inverse(L) is None:
        raise NotASymmetry("L is singular")
    letter = AffineSymmetry(L, t)
    verts = set(P.vertices)
    images = {letter.apply_exact(v) for v in P.vertices}
    if images != verts:
        stray = sorted(images - verts)
        raise NotASymmetry(f"vertex images leave the vertex set, e.g. {[str(c) for c in stray[0]]}")
    return Diffeo(P, (letter,))


def _same_domain(*ds: Diffeo):
    first = ds[0].domain
    for d in ds[1:]:
        if d.domain != first:
            raise DomainMismatch("diffeomorphisms live on different polytopes")


def compose(d1: Diffeo, d2: Diffeo) -> Diffeo:
    """``d1 o d2``."""
    _same_domain(d1, d2)
    return Diffeo(d1.domain, d1.word + d2.word, min(d1.tol_inv, d2.tol_inv))


def invert(d: Diffeo) -> Diffeo:
    return Diffeo(d.domain, tuple(l.inverse() for l in reversed(d.word)), d.tol_inv)


def conjugate(psi: Diffeo, phi: Diffeo) -> Diffeo:
    """``psi o phi o psi^{-1}``."""
    _same_domain(psi, phi)
    return compose(compose(psi, phi), invert(psi))


# --------------------------------------------------------------------------
# Inversion


def invert_point(
    f: VectorField,
    y,
    cert: GateCertificate | None = None,
    tol_inv: float = TOL_INV,
    check: bool = True,
) -> np.ndarray:
    """Solve ``x + f(x) = y`` for ``x`` in the polytope.

    Projected Banach iteration ``x <- project(y - f(x))`` from ``x = y``,
    stopped once ``|step| q / (1 - q) < tol_inv``; the iteration cap is
    ``ceil(log(tol_inv) / log(q)) + 50``.

    Raises
    ------
    GateNotSatisfied
        If the certificate does not give ``q < 1``.
    InversionNotConverged
        If the cap is hit, which a sound certificate rules out.
    """
    P = f.domain
    y = np.asarray(y, dtype=float)
    if check:
        _check_inside(P, y)
    if cert is None:
        cert = sup_op_norm(f)
    q = cert.q
    if not q < 1:
        raise GateNotSatisfied(q, cert.argmax)
    if cert.stratified is not None and cert.stratified.passed:
        if np.count_nonzero(P.A @ y - P.b >= -TOL_ACTIVE) >= P.dim:
            face = smallest_face(P, y)
            if face.dim == 0:
                return P.vertex_array[face.vertex_ids[0]].copy()
    q_cap = min(max(q, 1e-3), 1 - 1e-12)
    max_iter = int(math.ceil(math.log(tol_inv) / math.log(q_cap))) + 50
    arrays = f.polynomial_arrays() if isinstance(f, PolynomialField) else None
    if arrays is not None:
        x, iters, status = _kernels.invert_poly(
            arrays[0], arrays[1], P.A, P.b, y, q, tol_inv, max_iter, TOL_PROJ, PROJ_MAX_SWEEPS
        )
        if status == 2:
            raise ProjectionNotConverged(f"projection failed during inversion at iteration {iters}")
        if status == 1:
            raise InversionNotConverged(f"no convergence in {max_iter} iterations (q={q!r})")
        return x
    factor = q / (1 - q)
    x = y.copy()
    for _ in range(max_iter):
        x_new = project(P, y - f._eval(x))
        step = float(np.linalg.norm(x_new - x))
        x = x_new
        if step * factor < tol_inv:
            return x
    raise InversionNotConverged(f"no convergence in {max_iter} iterations (q={q!r})")


# --------------------------------------------------------------------------
# Charts


def chart(d: Diffeo) -> VectorField:
    """``d - id`` for the identity or a single (possibly inverted) near-identity letter."""
    if not d.word:
        return zero_field(d.domain)
    if len(d.word) == 1:
        letter = d.word[0]
        if isinstance(letter, NearIdentity):
            return letter.field
        if isinstance(letter, Inverse):
            return InverseChartField(letter.letter.field, letter.letter.cert, tol_inv=min(d.tol_inv, 1e-13))
    raise ValueError("chart is only available for a single near-identity letter")


def chart_product(f: VectorField, g: VectorField, f_cert=None, g_cert=None) -> VectorField:
    """Chart of ``(id + f) o (id + g)``, i.e. ``g + f o (id + g)``.

    Both fields must pass the gate.
    """
    _gate(f, f_cert)
    g_cert = _gate(g, g_cert)
    return rho(g, f, g_cert)


# --------------------------------------------------------------------------
# Face permutation


@dataclass(frozen=True)
class FacePermutation:
    """Bijection of the face lattice induced by a diffeomorphism."""

    domain: Polytope
    mapping: tuple  # face id -> face id

    def __call__(self, face_id: int) -> int:
        return self.mapping[face_id]

    def __matmul__(self, other: "FacePermutation") -> "FacePermutation":
        """``self o other``."""
        return FacePermutation(self.domain, tuple(self.mapping[i] for i in other.mapping))

    def inverse(self) -> "FacePermutation":
        inv = [0] * len(self.mapping)
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return FacePermutation(self.domain, tuple(inv))

    @property
    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.mapping))

    def cycles(self, dim: int | None = None) -> list[tuple[int, ...]]:
        """Cycle decomposition, optionally restricted to faces of one dimension."""
        faces = self.domain.lattice.faces
        seen = set()
        out = []
        for f in faces:
            if f.id in seen or (dim is not None and f.dim != dim):
                continue
            cyc = [f.id]
            seen.add(f.id)
            j = self.mapping[f.id]
            while j != f.id:
                cyc.append(j)
                seen.add(j)
                j = self.mapping[j]
            out.append(tuple(cyc))
        return out

    def as_dict(self):
        return {"mapping": list(self.mapping), "identity": self.is_identity}


def face_permutation(d: Diffeo) -> FacePermutation:
    """Apply *d* to each face's interior witness and read off the image face.

    Raises
    ------
    InternalInvariantViolation
        If the induced map changes a dimension or is not a bijection.
    """
    P = d.domain
    lat = P.lattice
    mapping = []
    for face in lat:
        img = d.eval(face.witness_array(), check=False)
        target = smallest_face(P, img)
        if target.dim != face.dim:
            raise InternalInvariantViolation(
                f"face {face.id} (dim {face.dim}) maps into face {target.id} (dim {target.dim})"
            )
        mapping.append(target.id)
    if len(set(mapping)) != len(mapping):
        raise InternalInvariantViolation("induced face map is not injective")
    return FacePermutation(P, tuple(mapping))


def is_boundary_fixing(d: Diffeo, samples: int = 8, seed: int = 42, tol: float = TOL_ACTIVE) -> bool:
    """True iff *d* fixes sampled points of every proper face within *tol*."""
    P = d.domain
    for face in P.lattice:
        if face.dim == P.dim:
            continue
        pts = sample(P, face, 1 if face.dim == 0 else samples, seed)
        for x in pts:
            if np.max(np.abs(d.eval(x, check=False) - x)) > tol:
                return False
    return True


# --------------------------------------------------------------------------
# JSON and grids


def diffeo_to_json(d: Diffeo) -> list:
    return d.to_json()


def diffeo_from_json(data, P: Polytope, **cert_kwargs) -> Diffeo:
    """Parse a letter list; every near-identity letter is gated on the way in."""
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    if not isinstance(data, list):
        raise ValueError("diffeo JSON must be a list of letters")
    word = []
    for item in data:
        if not isinstance(item, dict) or len(item) != 1:
            raise ValueError(f"malformed letter {item!r}")
        (key, val), = item.items()
        if key == "near_identity":
            word.extend(try_near_identity(field_from_json(val, P), **cert_kwargs).word)
        elif key == "inverse_of":
            word.extend(invert(try_near_identity(field_from_json(val, P), **cert_kwargs)).word)
        elif key == "affine":
            try:
                word.extend(affine_symmetry(val["L"], val["t"], P).word)
            except (KeyError, TypeError) as exc:
                raise ValueError(f"malformed affine letter: {exc}") from exc
        else:
            raise ValueError(f"unknown letter kind {key!r}")
    return Diffeo(P, word)


def grid(P: Polytope, per_axis: int) -> np.ndarray:
    """Tensor grid over the bounding box, restricted to the polytope (``ij`` order)."""
    if per_axis < 2:
        raise ValueError("need at least 2 points per axis")
    lo, hi = P.bbox
    axes = [np.linspace(float(a), float(b), per_axis) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    keep = np.all(pts @ P.A.T <= P.b + 1e-15, axis=1)
    return pts[keep]
