"""Vector fields on a polytope, the stratification test and norm certificates.

A field ``f : M -> R^n`` is *stratified* when ``f(x)`` is tangent to the
smallest face through ``x`` for every ``x``; near-identity maps ``id + f``
built from such fields are the generators handled in :mod:`polydiff.diffeo`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from . import exact
from . import polynomial as poly
from .errors import GateNotSatisfied, NotInPolytope
from .polytope import TOL_ACTIVE, Polytope, sample

TOL_STRAT = 1e-10
CERT_MAX_POINTS = 1_000_000
CERT_STABLE = 1e-3


def _check_inside(P: Polytope, x: np.ndarray, tol: float = TOL_ACTIVE):
    r = P.A @ x - P.b
    worst = int(np.argmax(r))
    if r[worst] > tol:
        raise NotInPolytope(x, worst, float(r[worst]))


class VectorField:
    """Base class.  Subclasses are immutable once constructed."""

    kind = "abstract"

    def __init__(self, domain: Polytope):
        self.domain = domain
        self._certs: dict = {}
        self._strat: dict = {}

    @property
    def dim(self) -> int:
        return self.domain.dim

    def eval(self, x, check: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if check:
            _check_inside(self.domain, x)
        return self._eval(x)

    def jacobian(self, x, check: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if check:
            _check_inside(self.domain, x)
        return self._jacobian(x)

    def eval_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self._eval(x) for x in X]).reshape(X.shape[0], self.dim)

    def jacobian_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self._jacobian(x) for x in X]).reshape(X.shape[0], self.dim, self.dim)

    def eval_exact(self, x) -> tuple[Fraction, ...] | None:
        """Exact value at a rational point, or None when unsupported."""
        return None

    def polynomial_arrays(self):
        """``(exps, coefs)`` when the field is a polynomial map, else None."""
        return None

    def _eval(self, x):
        raise NotImplementedError

    def _jacobian(self, x):
        raise NotImplementedError

    def __add__(self, other):
        return sum_fields(self, other)

    def __mul__(self, c):
        return scale_field(self, c)

    __rmul__ = __mul__


class PolynomialField(VectorField):
    """Field whose components are polynomials with rational coefficients."""

    kind = "polynomial"

    def __init__(self, domain: Polytope, components: Sequence):
        super().__init__(domain)
        n = domain.dim
        comps = [poly.clean(c) for c in components]
        if len(comps) != n:
            raise ValueError(f"expected {n} components, got {len(comps)}")
        for c in comps:
            if any(len(k) != n for k in c):
                raise ValueError("exponent length does not match the dimension")
        self.components = tuple(comps)
        self._exps, self._coefs = poly.to_arrays(comps, n)
        self._exps.setflags(write=False)
        self._coefs.setflags(write=False)

    @property
    def degree(self) -> int:
        return max(poly.degree(c) for c in self.components)

    def polynomial_arrays(self):
        return self._exps, self._coefs

    def _eval(self, x):
        return _kernels.poly_eval(self._exps, self._coefs, x)

    def _jacobian(self, x):
        return _kernels.poly_jacobian(self._exps, self._coefs, x)

    def _monomials(self, X):
        return np.prod(np.power(X[:, None, :], self._exps[None, :, :]), axis=2)

    def eval_many(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self._monomials(X) @ self._coefs.T

    def jacobian_many(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = self.dim
        out = np.empty((X.shape[0], n, n))
        for k in range(n):
            d = self._exps[:, k]
            shifted = self._exps.copy()
            shifted[:, k] = np.maximum(d - 1, 0)
            mon = d[None, :] * np.prod(np.power(X[:, None, :], shifted[None, :, :]), axis=2)
            out[:, :, k] = mon @ self._coefs.T
        return out

    def eval_exact(self, x):
        xs = exact.vec(x)
        return tuple(poly.evaluate(c, xs) for c in self.components)

    def jacobian_lipschitz_bound(self) -> float:
        """Bound on ``|J(x) - J(y)|_op / |x - y|`` over the bounding box.

        Each second partial is re-expanded about the box centre and bounded
        by the sum of absolute coefficients times powers of the half-widths;
        the Frobenius norm of the resulting tensor bounds the operator norm
        increment.  Centring avoids the cancellation that inflates bounds for
        products of facet slacks.
        """
        lo, hi = self.domain.bbox
        n = self.dim
        centre = [(a + b) / 2 for a, b in zip(lo, hi)]
        half = [float(b - a) / 2 for a, b in zip(lo, hi)]
        shift = [poly.affine([int(i == j) for i in range(n)], centre[j], n) for j in range(n)]
        total = 0.0
        for comp in self.components:
            centred = poly.substitute(comp, shift, n)
            for k in range(n):
                dk = poly.derivative(centred, k)
                for m in range(n):
                    total += poly.abs_bound(poly.derivative(dk, m), half) ** 2
        return math.sqrt(total)


class AffineField(PolynomialField):
    """``f(x) = A x + b``."""

    kind = "affine"

    def __init__(self, domain: Polytope, A, b=None):
        n = domain.dim
        A = [exact.vec(row) for row in A]
        b = exact.vec(b) if b is not None else (Fraction(0),) * n
        if len(A) != n or any(len(r) != n for r in A) or len(b) != n:
            raise ValueError("affine field shape does not match the dimension")
        self.A = tuple(A)
        self.b = b
        comps = [poly.affine(A[i], b[i], n) for i in range(n)]
        super().__init__(domain, comps)
        self.matrix = np.array([[float(v) for v in r] for r in A])


def zero_field(P: Polytope) -> PolynomialField:
    return PolynomialField(P, [{} for _ in range(P.dim)])


def sum_fields(f: VectorField, g: VectorField) -> VectorField:
    if not (isinstance(f, PolynomialField) and isinstance(g, PolynomialField)):
        raise TypeError("only polynomial fields can be added")
    if f.domain != g.domain:
        raise ValueError("fields live on different polytopes")
    return PolynomialField(f.domain, [poly.add(a, b) for a, b in zip(f.components, g.components)])


def scale_field(f: VectorField, c) -> VectorField:
    if not isinstance(f, PolynomialField):
        raise TypeError("only polynomial fields can be scaled")
    return PolynomialField(f.domain, [poly.scale(a, c) for a in f.components])


class CompositeField(VectorField):
    """``g + f o (id + g)``, evaluated lazily.

    This is the chart-level right translation by ``id + g``; ``g`` must
    carry a passing certificate so that ``id + g`` maps the polytope into
    itself.
    """

    kind = "composite"

    def __init__(self, g: VectorField, f: VectorField, g_cert: "GateCertificate"):
        if g.domain != f.domain:
            raise ValueError("fields live on different polytopes")
        super().__init__(g.domain)
        self.g = g
        self.f = f
        self.g_cert = g_cert

    def _eval(self, x):
        gx = self.g._eval(x)
        return gx + self.f._eval(x + gx)

    def _jacobian(self, x):
        gx = self.g._eval(x)
        jg = self.g._jacobian(x)
        return jg + self.f._jacobian(x + gx) @ (np.eye(self.dim) + jg)

    def eval_exact(self, x):
        xs = exact.vec(x)
        gx = self.g.eval_exact(xs)
        if gx is None:
            return None
        fx = self.f.eval_exact(tuple(a + b for a, b in zip(xs, gx)))
        if fx is None:
            return None
        return tuple(a + b for a, b in zip(gx, fx))


class InverseChartField(VectorField):
    """``(id + f)^{-1} - id`` for a gated stratified field ``f``."""

    kind = "inverse_chart"

    def __init__(self, f: VectorField, cert: "GateCertificate", tol_inv: float = 1e-13):
        super().__init__(f.domain)
        self.f = f
        self.cert = cert
        self.tol_inv = tol_inv

    def _preimage(self, x):
        from .diffeo import invert_point

        return invert_point(self.f, x, cert=self.cert, tol_inv=self.tol_inv)

    def _eval(self, x):
        return self._preimage(x) - x

    def _jacobian(self, x):
        z = self._preimage(x)
        n = self.dim
        return np.linalg.inv(np.eye(n) + self.f._jacobian(z)) - np.eye(n)


# --------------------------------------------------------------------------
# Stratification


@dataclass(frozen=True)
class StratificationViolation:
    face_id: int
    face: str
    point: tuple
    constraint: int
    value: float
    mode: str

    def as_dict(self):
        return {
            "face_id": self.face_id,
            "face": self.face,
            "point": [float(v) for v in self.point],
            "constraint": self.constraint,
            "value": float(self.value),
            "mode": self.mode,
        }


@dataclass(frozen=True)
class StratificationReport:
    passed: bool
    mode: str
    checked_points: int
    checked_faces: int
    violation: StratificationViolation | None = None

    def __bool__(self):
        return self.passed

    def summary(self) -> str:
        if self.passed:
            return f"stratified ({self.mode}, {self.checked_points} points, {self.checked_faces} faces)"
        v = self.violation
        return (
            f"not stratified: face {v.face} constraint {v.constraint} "
            f"value {float(v.value)!r} at {[float(c) for c in v.point]} ({v.mode})"
        )


def _symbolic_violation(f: PolynomialField) -> StratificationViolation | None:
    """Check ``lambda o f`` vanishes identically on the affine hull of each facet.

    Facets suffice: the active constraints of a lower face are exactly the
    facets containing it, so tangency to every facet gives tangency to
    every face.
    """
    P = f.domain
    n = P.dim
    for face in sorted(P.lattice.by_dim.get(n - 1, ()), key=lambda fc: sorted(fc.active)):
        (i,) = tuple(face.active)
        a, _ = P.halfspaces[i]
        m = len(face.affine_basis)
        forms = [
            poly.affine([face.affine_basis[k][j] for k in range(m)], face.witness[j], m)
            for j in range(n)
        ]
        lam_f: poly.Poly = {}
        for j in range(n):
            if a[j]:
                lam_f = poly.add(lam_f, poly.scale(f.components[j], a[j]))
        restricted = poly.substitute(lam_f, forms, m)
        if restricted:
            pts = [face.witness] + [P.vertices[v] for v in face.vertex_ids]
            pts += sample(P, face, 4, seed=0, exact_points=True)
            for pt in pts:
                val = poly.evaluate(lam_f, pt)
                if val != 0:
                    return StratificationViolation(face.id, P.describe_face(face), pt, i, val, "exact")
            return StratificationViolation(face.id, P.describe_face(face), face.witness, i, Fraction(0), "exact")
    return None


def is_stratified(
    f: VectorField,
    samples_per_face: int = 8,
    seed: int = 42,
    tol: float = TOL_STRAT,
    symbolic: bool = True,
) -> StratificationReport:
    """Test ``f(x)`` in ``E(x)`` at face samples and, exactly, at every vertex.

    Polynomial fields are additionally checked symbolically, which is the
    authoritative test for them.
    """
    key = (samples_per_face, seed, tol, symbolic)
    if key in f._strat:
        return f._strat[key]
    P = f.domain
    n = P.dim
    lat = P.lattice
    mode = "sampled"
    checked_pts = 0
    violation = None

    if symbolic and isinstance(f, PolynomialField):
        mode = "exact+sampled"
        violation = _symbolic_violation(f)

    if violation is None:
        proper = [fc for fc in lat if 0 < fc.dim < n]
        proper.sort(key=lambda fc: (-fc.dim, sorted(fc.active)))
        for face in proper:
            pts = sample(P, face, samples_per_face, seed)
            vals = f.eval_many(pts)
            act = sorted(face.active)
            lam = P.A[act] @ vals.T  # (k, samples)
            checked_pts += len(pts)
            bad = np.argwhere(np.abs(lam) > tol)
            if bad.size:
                r, c = bad[0]
                violation = StratificationViolation(
                    face.id, P.describe_face(face), tuple(pts[c]), act[r], float(lam[r, c]), "sampled"
                )
                break

    if violation is None:
        for face in lat.by_dim.get(0, ()):
            v = lat.vertices[face.vertex_ids[0]]
            checked_pts += 1
            val = f.eval_exact(v)
            if val is not None:
                nz = [j for j, c in enumerate(val) if c != 0]
                if nz:
                    i = min(face.active)
                    violation = StratificationViolation(
                        face.id, P.describe_face(face), v, i, val[nz[0]], "vertex-exact"
                    )
                    break
            else:
                fv = f._eval(np.array([float(c) for c in v]))
                if np.max(np.abs(fv)) > tol:
                    violation = StratificationViolation(
                        face.id, P.describe_face(face), v, min(face.active), float(np.max(np.abs(fv))), "vertex"
                    )
                    break

    report = StratificationReport(
        passed=violation is None,
        mode=mode,
        checked_points=checked_pts,
        checked_faces=len(lat) - 1,
        violation=violation,
    )
    f._strat[key] = report
    return report


# --------------------------------------------------------------------------
# Operator-norm certificates


@dataclass(frozen=True)
class GateCertificate:
    """Upper bound ``q`` on ``sup_x |f'(x)|_op`` plus stratification evidence.

    ``sound`` is False only for ``mode == "estimate"``.
    """

    q: float
    mode: str
    sound: bool
    stratified: StratificationReport | None
    grid_max: float | None = None
    argmax: tuple | None = None
    mesh: float | None = None
    points: int = 0
    history: tuple = dc_field(default=())

    @property
    def admits(self) -> bool:
        return self.sound and self.q < 1 and self.stratified is not None and self.stratified.passed

    def as_dict(self):
        return {
            "q": self.q,
            "mode": self.mode,
            "sound": self.sound,
            "stratified": None if self.stratified is None else self.stratified.passed,
            "grid_max": self.grid_max,
            "argmax": None if self.argmax is None else [float(v) for v in self.argmax],
            "mesh": self.mesh,
            "points": self.points,
        }


def spectral_norms(J: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a stack.

    Closed forms for sizes up to 3 (the 3 x 3 case uses the trigonometric
    eigenvalue formula on ``J^T J``); SVD otherwise.
    """
    n = J.shape[-1]
    if n == 1:
        return np.abs(J[..., 0, 0])
    if n == 2:
        a, b, c, d = J[..., 0, 0], J[..., 0, 1], J[..., 1, 0], J[..., 1, 1]
        s = a * a + b * b + c * c + d * d
        det = a * d - b * c
        disc = np.sqrt(np.maximum(s * s - 4 * det * det, 0.0))
        return np.sqrt(0.5 * (s + disc))
    if n == 3:
        G = np.einsum("...ji,...jk->...ik", J, J)
        off = G[..., 0, 1] ** 2 + G[..., 0, 2] ** 2 + G[..., 1, 2] ** 2
        q = np.trace(G, axis1=-2, axis2=-1) / 3
        diag = np.stack([G[..., i, i] - q for i in range(3)], axis=-1)
        p = np.sqrt((np.sum(diag ** 2, axis=-1) + 2 * off) / 6)
        safe = np.where(p > 0, p, 1.0)
        B = (G - q[..., None, None] * np.eye(3)) / safe[..., None, None]
        r = np.clip(np.linalg.det(B) / 2, -1.0, 1.0)
        lam = np.where(p > 0, q + 2 * p * np.cos(np.arccos(r) / 3), q)
        return np.sqrt(np.maximum(lam, 0.0))
    return np.linalg.svd(J, compute_uv=False)[..., 0]


def _tensor_grid_values(polys, axes) -> np.ndarray:
    """Values of each polynomial on the tensor grid spanned by *axes*.

    Returns an array of shape ``(prod(len(ax)), len(polys))`` in ``ij``
    order, computed by contracting the dense coefficient tensor with one
    Vandermonde matrix per axis.
    """
    n = len(axes)
    deg = max((poly.degree(p) for p in polys), default=0)
    C = np.zeros((len(polys),) + (deg + 1,) * n)
    for r, p in enumerate(polys):
        for k, v in p.items():
            C[(r,) + k] = float(v)
    out = C
    powers = np.arange(deg + 1)
    for ax in axes:
        V = np.power(ax[:, None], powers[None, :])
        out = np.tensordot(out, V, axes=([1], [1]))
    return out.reshape(len(polys), -1).T


def _grid(P: Polytope, h: float):
    lo = np.array([float(v) for v in P.bbox[0]])
    hi = np.array([float(v) for v in P.bbox[1]])
    counts = [max(2, int(math.ceil((b - a) / h - 1e-12)) + 1) for a, b in zip(lo, hi)]
    axes = [np.linspace(a, b, c) for a, b, c in zip(lo, hi, counts)]
    spacing = np.array([(b - a) / (c - 1) for a, b, c in zip(lo, hi, counts)])
    return axes, spacing, int(np.prod(counts))


def _inside_mask(P: Polytope, axes, radius: float) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    slack = np.linalg.norm(P.A, axis=1) * radius
    return pts, np.all(pts @ P.A.T <= P.b + slack + 1e-15, axis=1)


def _certified_grid(f: PolynomialField, max_points: int, stable: float, estimate_only: bool):
    """Grid search for the Jacobian norm plus a covering-radius slack.

    Any point of the polytope lies within ``radius`` (half the grid cell
    diagonal) of a kept grid point, so ``max + L * radius`` bounds the
    supremum when ``L`` bounds the Jacobian's Lipschitz constant.
    """
    P = f.domain
    n = P.dim
    lo = np.array([float(v) for v in P.bbox[0]])
    hi = np.array([float(v) for v in P.bbox[1]])
    h = float(np.linalg.norm(hi - lo)) / 16
    lam = 0.0 if estimate_only else f.jacobian_lipschitz_bound()
    partials = [poly.derivative(f.components[i], k) for i in range(n) for k in range(n)]
    best = None
    history = []
    total_pts = 0
    prev_q = math.inf
    while True:
        axes, spacing, count = _grid(P, h)
        if best is not None and count > max_points:
            break
        radius = 0.5 * float(np.linalg.norm(spacing))
        pts, keep = _inside_mask(P, axes, radius)
        jac = _tensor_grid_values(partials, axes)[keep].reshape(-1, n, n)
        pts = pts[keep]
        norms = spectral_norms(jac)
        k = int(np.argmax(norms))
        gmax = float(norms[k])
        # pad for rounding in the closed-form norms
        q = gmax * (1 + 1e-12) + lam * radius
        total_pts += len(pts)
        history.append((float(np.max(spacing)), gmax, q))
        if best is None or q < best[0]:
            best = (q, gmax, tuple(pts[k]), float(np.max(spacing)))
        if estimate_only or prev_q - q < stable:
            break
        prev_q = q
        h /= 2
    return best, total_pts, tuple(history)


def sup_op_norm(
    f: VectorField,
    mode: str | None = None,
    *,
    max_points: int = CERT_MAX_POINTS,
    stable: float = CERT_STABLE,
    samples_per_face: int = 8,
    tol_strat: float = TOL_STRAT,
) -> GateCertificate:
    """Upper bound on ``sup_x |f'(x)|_op`` (Euclidean operator norm).

    Modes
    -----
    exact
        Affine fields: the spectral norm of ``A``.
    certified
        Polynomial fields: grid maximum plus a Lipschitz slack for the
        Jacobian, with the mesh halved until the bound stops improving by
        more than *stable* or the grid would exceed *max_points*.
        Composite and inverse-chart fields get a bound composed from the
        certificates of their parts.
    estimate
        Grid maximum on the coarsest mesh only; not a bound.
    """
    if mode is None:
        mode = "exact" if isinstance(f, AffineField) else "certified"
    key = (mode, max_points, stable, samples_per_face, tol_strat)
    if key in f._certs:
        return f._certs[key]
    strat = is_stratified(f, samples_per_face=samples_per_face, tol=tol_strat)

    if mode == "exact":
        if not isinstance(f, AffineField):
            raise ValueError("exact mode needs an affine field")
        q = float(np.linalg.norm(f.matrix, 2))
        cert = GateCertificate(q, "exact", True, strat)
    elif isinstance(f, CompositeField):
        cg = f.g_cert
        cf = sup_op_norm(f.f, max_points=max_points, stable=stable) if mode != "estimate" else None
        if mode == "estimate":
            cert = _estimate_generic(f, strat)
        else:
            q = cg.q + cf.q * (1 + cg.q)
            cert = GateCertificate(q, "composite", cg.sound and cf.sound, strat)
    elif isinstance(f, InverseChartField):
        qf = f.cert.q
        q = qf / (1 - qf) if qf < 1 else math.inf
        cert = GateCertificate(q, "inverse-chart", f.cert.sound, strat)
    elif isinstance(f, PolynomialField):
        (q, gmax, arg, mesh), pts, hist = _certified_grid(f, max_points, stable, mode == "estimate")
        cert = GateCertificate(q, mode, mode != "estimate", strat, gmax, arg, mesh, pts, hist)
    else:
        cert = _estimate_generic(f, strat)
    f._certs[key] = cert
    return cert


def _estimate_generic(f: VectorField, strat) -> GateCertificate:
    P = f.domain
    axes, spacing, _ = _grid(P, float(np.linalg.norm(np.ptp(P.vertex_array, axis=0))) / 16)
    pts, keep = _inside_mask(P, axes, 0.0)
    pts = pts[keep]
    norms = spectral_norms(f.jacobian_many(pts))
    k = int(np.argmax(norms))
    return GateCertificate(float(norms[k]), "estimate", False, strat, float(norms[k]), tuple(pts[k]),
                           float(np.max(spacing)), len(pts))


def certify(f: VectorField, mode: str | None = None, **kwargs) -> GateCertificate:
    """Certificate that must admit ``id + f``; raises GateNotSatisfied otherwise."""
    cert = sup_op_norm(f, mode, **kwargs)
    if not cert.sound or not cert.q < 1:
        raise GateNotSatisfied(cert.q, cert.argmax)
    return cert


def rho(g: VectorField, f: VectorField, g_cert: GateCertificate | None = None) -> CompositeField:
    """The field ``g + f o (id + g)``; requires ``id + g`` to pass the gate."""
    if g_cert is None:
        g_cert = sup_op_norm(g)
    if not g_cert.admits:
        if g_cert.stratified is not None and not g_cert.stratified.passed:
            raise GateNotSatisfied(g_cert.q, message=f"g is {g_cert.stratified.summary()}")
        raise GateNotSatisfied(g_cert.q, g_cert.argmax)
    return CompositeField(g, f, g_cert)


# --------------------------------------------------------------------------
# Construction helpers


def _is_box(P: Polytope) -> bool:
    for a, _ in P.halfspaces:
        if sum(1 for v in a if v != 0) != 1 or sum(abs(v) for v in a) != 1:
            return False
    return True


def _is_simplex(P: Polytope) -> bool:
    return len(P.halfspaces) == P.dim + 1 and len(P.vertices) == P.dim + 1


def _random_poly(rng, n: int, deg: int, scale_den: int = 4) -> poly.Poly:
    p: poly.Poly = {}
    for d in range(deg + 1):
        for k in _exponents(n, d):
            c = int(rng.integers(-scale_den, scale_den + 1))
            if c:
                p[k] = Fraction(c, scale_den)
    return p


def _exponents(n: int, d: int):
    if n == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _exponents(n - 1, d - first):
            yield (first,) + rest


def _barycentric(P: Polytope) -> list[poly.Poly]:
    """Affine barycentric coordinates of a simplex, one per vertex."""
    n = P.dim
    verts = P.vertices
    # beta_k(x) = c_k . x + d_k with beta_k(v_l) = delta_kl
    rows = [list(v) + [Fraction(1)] for v in verts]
    inv = exact.inverse(rows)
    out = []
    for k in range(n + 1):
        coeffs = [inv[j][k] for j in range(n)]
        out.append(poly.affine(coeffs, inv[n][k], n))
    return out


def stratified_basis_field(P: Polytope, rng, degree: int = 3, boundary_fixing: bool = False) -> PolynomialField:
    """A random stratified polynomial field with small rational coefficients.

    Boxes use ``(x_j - lo_j)(hi_j - x_j) p_j(x)`` in component ``j``;
    simplices use ``sum h_kl beta_k beta_l (v_k - v_l)`` over vertex pairs.
    With *boundary_fixing* (or on other polytopes) the product of all
    facet slacks multiplies a random vector polynomial, which vanishes on
    the whole boundary.
    """
    n = P.dim
    if boundary_fixing or not (_is_box(P) or _is_simplex(P)):
        bubble = poly.const(1, n)
        for a, b in P.halfspaces:
            bubble = poly.mul(bubble, poly.affine([-v for v in a], b, n))
        extra = max(1, degree - poly.degree(bubble))
        comps = [poly.mul(bubble, _random_poly(rng, n, extra) or poly.const(1, n)) for _ in range(n)]
        return PolynomialField(P, comps)
    if _is_box(P):
        lo, hi = P.bbox
        comps = []
        for j in range(n):
            base = poly.mul(poly.affine([int(i == j) for i in range(n)], -lo[j], n),
                            poly.affine([-int(i == j) for i in range(n)], hi[j], n))
            comps.append(poly.mul(base, _random_poly(rng, n, max(0, degree - 2))))
        return PolynomialField(P, comps)
    beta = _barycentric(P)
    verts = P.vertices
    comps = [dict() for _ in range(n)]
    for k in range(n + 1):
        for l in range(k + 1, n + 1):
            h = _random_poly(rng, n, max(0, degree - 2))
            term = poly.mul(poly.mul(beta[k], beta[l]), h)
            for j in range(n):
                comps[j] = poly.add(comps[j], poly.scale(term, verts[k][j] - verts[l][j]))
    return PolynomialField(P, comps)


def random_stratified_field(
    P: Polytope,
    seed: int,
    degree: int = 3,
    target: float = 0.5,
    boundary_fixing: bool = False,
) -> PolynomialField:
    """Random stratified field rescaled so its sampled norm is about *target*."""
    rng = np.random.default_rng(seed)
    for _ in range(20):
        f = stratified_basis_field(P, rng, degree, boundary_fixing)
        est = sup_op_norm(f, "estimate").q
        if est > 1e-9:
            factor = Fraction(target / est).limit_denominator(1000)
            return scale_field(f, factor)
    return zero_field(P)


# --------------------------------------------------------------------------
# JSON


def field_to_json(f: VectorField) -> dict:
    if isinstance(f, AffineField):
        def num(v):
            return int(v) if v.denominator == 1 else str(v)

        return {"kind": "affine", "A": [[num(v) for v in r] for r in f.A], "b": [num(v) for v in f.b]}
    if isinstance(f, PolynomialField):
        return {"kind": "polynomial", "components": [poly.to_json(c) for c in f.components]}
    if isinstance(f, CompositeField):
        return {"kind": "composite", "g": field_to_json(f.g), "f": field_to_json(f.f)}
    raise TypeError(f"cannot serialize {type(f).__name__}")


def field_from_json(data, P: Polytope) -> VectorField:
    """Parse polynomial, affine or composite field JSON on polytope *P*."""
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    try:
        kind = data["kind"]
        if kind == "polynomial":
            comps = [poly.from_json(c, P.dim) for c in data["components"]]
            return PolynomialField(P, comps)
        if kind == "affine":
            return AffineField(P, data["A"], data.get("b"))
        if kind == "composite":
            g = field_from_json(data["g"], P)
            f = field_from_json(data["f"], P)
            return rho(g, f)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed field JSON: {exc}") from exc
    raise ValueError(f"unknown field kind {data.get('kind')!r}")
