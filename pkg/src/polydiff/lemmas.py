"""Numerical checkers for geometric lemmas and a local-addition falsifier.

The falsifier turns the non-existence argument for local additions on
manifolds with boundary into a search: in the chart ``[0, inf)^k x R^(n-k)``
a candidate ``tau`` with ``tau(x, 0) = x`` and a non-degenerate fibre
derivative is pushed along ``t -> tau(t e, -theta t u)`` until its first
coordinate goes negative, i.e. the image leaves the model space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from . import polynomial as poly
from .diffeo import Diffeo, invert_point
from .errors import CurveNotInM, GateNotSatisfied, NoWitnessFound
from .fields import VectorField, sup_op_norm
from .polytope import TOL_ACTIVE, Polytope, contains, sample, smallest_face

# --------------------------------------------------------------------------
# Derivatives of curves point into the face


@dataclass(frozen=True)
class DerToFaceReport:
    epsilon: float
    passed: bool
    checked: int
    detail: str = ""

    def as_dict(self):
        return {"epsilon": self.epsilon, "passed": self.passed, "checked": self.checked, "detail": self.detail}


def check_der_to_face(
    P: Polytope,
    x0,
    v,
    w=None,
    t_max: float = 1.0,
    samples: int = 200,
    tol: float = TOL_ACTIVE,
    floor: float = 1e-12,
) -> DerToFaceReport:
    """Find ``eps > 0`` with ``x0 + t v`` in the polytope for sampled ``t <= eps``.

    The curve ``x0 + t v + t^2 w`` must stay in the polytope on
    ``[0, t_max]``; this is checked on a dense grid first.  The scan halves
    ``eps`` from ``t_max`` until the segment passes and then bisects
    towards the first failing length.

    Raises
    ------
    CurveNotInM
        If the quadratic curve leaves the polytope.
    """
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.zeros_like(x0) if w is None else np.asarray(w, dtype=float)
    ts = np.linspace(0.0, t_max, 4 * samples + 1)
    curve = x0[None, :] + ts[:, None] * v[None, :] + (ts ** 2)[:, None] * w[None, :]
    viol = curve @ P.A.T - P.b
    if np.any(viol > tol):
        k = int(np.argmax(np.max(viol, axis=1)))
        raise CurveNotInM(f"curve leaves the polytope at t={ts[k]!r}")

    def segment_ok(eps):
        seg = x0[None, :] + np.linspace(0.0, eps, samples + 1)[:, None] * v[None, :]
        return bool(np.all(seg @ P.A.T <= P.b + tol))

    checked = 0
    eps = t_max
    bad = None
    while eps >= floor:
        checked += 1
        if segment_ok(eps):
            break
        bad = eps
        eps /= 2
    else:
        return DerToFaceReport(0.0, False, checked, "no admissible segment above the scan floor")
    if bad is not None:
        lo, hi = eps, bad
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            checked += 1
            if segment_ok(mid):
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
        eps = lo
    return DerToFaceReport(float(eps), True, checked)


# --------------------------------------------------------------------------
# Tangent spaces of faces map onto tangent spaces of image faces


@dataclass(frozen=True)
class FaceIntoFaceReport:
    passed: bool
    inclusion: bool
    spans_equal: bool
    checked: int
    max_residual: float
    failure: dict | None = None

    def as_dict(self):
        return {
            "passed": self.passed,
            "inclusion": self.inclusion,
            "spans_equal": self.spans_equal,
            "checked": self.checked,
            "max_residual": self.max_residual,
            "failure": self.failure,
        }


def _orthonormal(B: np.ndarray) -> np.ndarray:
    if B.shape[1] == 0:
        return B
    q, _ = np.linalg.qr(B)
    return q


def check_face_into_face(d: Diffeo, samples: int = 4, seed: int = 42, tol: float = 1e-8) -> FaceIntoFaceReport:
    """Check that ``d'(x)`` maps ``E(x)`` onto the tangent span at ``d(x)``.

    For each face and each sample ``x`` in its relative interior the image
    of every basis vector of ``E(x)`` must lie in the span of the image
    face (inclusion), and the image must have full rank equal to that
    face's dimension (equality of spans).
    """
    P = d.domain
    n = P.dim
    inclusion = True
    spans = True
    worst = 0.0
    checked = 0
    failure = None
    for face in P.lattice:
        pts = sample(P, face, 1 if face.dim == 0 else samples, seed)
        B = face.basis_array(n).T  # columns span E(x)
        for x in pts:
            checked += 1
            y = d.eval(x, check=False)
            target = smallest_face(P, y)
            J = d.jacobian(x, check=False)
            img = J @ B
            Q = _orthonormal(target.basis_array(n).T)
            resid = img - Q @ (Q.T @ img)
            r = float(np.max(np.abs(resid), initial=0.0)) / (1.0 + np.linalg.norm(img))
            worst = max(worst, r)
            rank = int(np.linalg.matrix_rank(img, tol=1e-10)) if img.size else 0
            ok_inc = bool(r <= tol)
            ok_span = rank == face.dim == target.dim
            if not (ok_inc and ok_span) and failure is None:
                failure = {
                    "face": P.describe_face(face),
                    "point": [float(c) for c in x],
                    "image_face": P.describe_face(target),
                    "residual": r,
                    "rank": rank,
                }
            inclusion &= ok_inc
            spans &= ok_span
    return FaceIntoFaceReport(inclusion and spans, inclusion, spans, checked, worst, failure)


# --------------------------------------------------------------------------
# Lipschitz constant of the inverse


@dataclass(frozen=True)
class LipInverseReport:
    passed: bool
    empirical: float
    bound: float
    q: float
    pairs: int
    route: str

    def as_dict(self):
        return {
            "passed": self.passed,
            "empirical": self.empirical,
            "bound": self.bound,
            "q": self.q,
            "pairs": self.pairs,
            "route": self.route,
        }


def _pairs_in(P: Polytope, count: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Random pairs: half generic, half differing along one coordinate axis."""
    verts = P.vertex_array
    k = len(verts)

    def pts(m):
        return rng.dirichlet(np.ones(k), size=m) @ verts

    half = count // 2
    a = pts(count)
    b = np.empty_like(a)
    b[:half] = pts(half)
    n = P.dim
    for i in range(half, count):
        axis = (i - half) % n
        step = np.zeros(n)
        step[axis] = rng.uniform(0.01, 0.3) * (1 if rng.random() < 0.5 else -1)
        cand = a[i] + step
        while not contains(P, cand, 0.0):
            step *= 0.5
            cand = a[i] + step
        b[i] = cand
    return a, b


def check_lip_inverse(
    f: VectorField,
    pairs: int = 500,
    seed: int = 42,
    cert=None,
    tol_inv: float = 1e-12,
) -> LipInverseReport:
    """Empirical ``|phi^{-1}(a) - phi^{-1}(b)| / |a - b|`` against ``1 / (1 - q)``.

    For gated stratified fields ``a`` and ``b`` are drawn from the polytope
    and inverted.  Otherwise ``id + f`` need not map the polytope into
    itself, so pairs ``x1, x2`` are drawn in the domain and the ratio is
    read off their images (``route == "forward"``).
    """
    if cert is None:
        cert = sup_op_norm(f)
    q = cert.q
    if not q < 1:
        raise GateNotSatisfied(q, cert.argmax)
    rng = np.random.default_rng(seed)
    P = f.domain
    a, b = _pairs_in(P, pairs, rng)
    if cert.admits:
        route = "inverse"
        xa = np.array([invert_point(f, p, cert=cert, tol_inv=tol_inv) for p in a])
        xb = np.array([invert_point(f, p, cert=cert, tol_inv=tol_inv) for p in b])
        num = np.linalg.norm(xa - xb, axis=1)
        den = np.linalg.norm(a - b, axis=1)
    else:
        route = "forward"
        num = np.linalg.norm(a - b, axis=1)
        den = np.linalg.norm((a + f.eval_many(a)) - (b + f.eval_many(b)), axis=1)
    keep = den > 1e-9
    ratio = float(np.max(num[keep] / den[keep])) if np.any(keep) else 0.0
    bound = 1.0 / (1.0 - q)
    return LipInverseReport(ratio <= bound + 1e-6, ratio, bound, q, int(np.count_nonzero(keep)), route)


# --------------------------------------------------------------------------
# Local additions


@dataclass(frozen=True)
class LocalAdditionCandidate:
    """A polynomial map ``tau(x, y)`` on inner tangent vectors of ``[0, inf)^k x R^(n-k)``.

    ``components`` holds ``n`` polynomials in the ``2 n`` variables
    ``(x_1, ..., x_n, y_1, ..., y_n)``.  ``radius`` restricts the domain to
    ``max |coordinate| < radius`` when the candidate is only defined near
    the zero section.
    """

    components: tuple
    n: int = 1
    k: int = 1
    description: str = ""
    radius: float = math.inf

    def __post_init__(self):
        if len(self.components) != self.n:
            raise ValueError(f"expected {self.n} components")
        if not 1 <= self.k <= self.n:
            raise ValueError("need 1 <= k <= n")
        for c in self.components:
            if any(len(e) != 2 * self.n for e in c):
                raise ValueError("components must be polynomials in 2n variables")
        exps, coefs = poly.to_arrays(self.components, 2 * self.n)
        object.__setattr__(self, "_arrays", (exps, coefs))

    def __call__(self, x, y) -> np.ndarray:
        z = np.concatenate([np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))])
        return _kernels.poly_eval(self._arrays[0], self._arrays[1], z)

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "k": self.k,
            "description": self.description,
            "components": [poly.to_json(c) for c in self.components],
        }
        if math.isfinite(self.radius):
            out["radius"] = self.radius
        return out

    @classmethod
    def from_json(cls, data) -> "LocalAdditionCandidate":
        """Accepts the full form or ``{"tau": [terms], ...}`` for one variable pair."""
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        try:
            if "tau" in data:
                n = 1
                comps = (poly.from_json(data["tau"], 2),)
            else:
                n = int(data.get("n", 1))
                comps = tuple(poly.from_json(c, 2 * n) for c in data["components"])
            radius = data.get("radius")
            return cls(
                comps,
                n=n,
                k=int(data.get("k", 1)),
                description=str(data.get("description", "")),
                radius=math.inf if radius is None else float(radius),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed candidate JSON: {exc}") from exc


def candidate_from_terms(terms: dict, description: str = "") -> LocalAdditionCandidate:
    """One-dimensional candidate from ``{(i, j): coef}`` meaning ``coef * x^i y^j``."""
    return LocalAdditionCandidate((poly.clean(terms),), n=1, k=1, description=description)


@dataclass(frozen=True)
class FalsificationWitness:
    failure_mode: str  # A2_violated | A1_jacobian_singular | leaves_M
    theta: float | None
    t: float | None
    h_value: float | None
    point: tuple | None = None
    detail: dict = dc_field(default_factory=dict)

    def as_dict(self):
        return {
            "failure_mode": self.failure_mode,
            "theta": self.theta,
            "t": self.t,
            "h_value": self.h_value,
            "point": None if self.point is None else [float(v) for v in self.point],
            "detail": self.detail,
        }


def _fibre_derivative(c: LocalAdditionCandidate, h: float) -> np.ndarray:
    """``d tau / d y`` at the origin by one-sided differences with one Richardson step."""
    n = c.n
    zero = np.zeros(n)
    base = c(zero, zero)
    D = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        d1 = (c(zero, h * e) - base) / h
        d2 = (c(zero, 0.5 * h * e) - base) / (0.5 * h)
        D[:, j] = 2 * d2 - d1
    return D


def falsify_local_addition(
    c: LocalAdditionCandidate,
    tol: float = 1e-9,
    fd_step: float = 1e-6,
    t_start: float = 1e-3,
    t_floor: float = 1e-12,
    shrink: float = 0.5,
    a2_samples: int = 16,
) -> FalsificationWitness:
    """Show that *c* is not a local addition by producing a concrete failure.

    1. ``tau(x, 0) = x`` on sample base points, else ``A2_violated``.
    2. The fibre derivative ``D = d tau / d y (0, 0)``; a singular ``D``
       makes ``(tau, base projection)`` singular at the origin
       (``A1_jacobian_singular``).
    3. Otherwise pick a direction ``u`` with ``s = (D u)_1 != 0``, set
       ``theta = 2 / s`` and scan ``h(t) = tau_1(t e, -theta t u)`` over a
       geometric grid of ``t`` until ``h(t) < 0`` (``leaves_M``).

    Raises
    ------
    NoWitnessFound
        If the scan reaches *t_floor* without a negative value.
    """
    n, k = c.n, c.k
    limit = min(1.0, 0.5 * c.radius)
    rng = np.random.default_rng(0)
    for i in range(a2_samples):
        x = rng.uniform(0.0, limit, size=n) if i else np.zeros(n)
        val = c(x, np.zeros(n))
        if np.max(np.abs(val - x)) > tol:
            return FalsificationWitness(
                "A2_violated", None, None, float(np.max(np.abs(val - x))), tuple(x),
                {"tau_x_0": [float(v) for v in val]},
            )

    D = _fibre_derivative(c, fd_step)
    det = float(np.linalg.det(D))
    row = D[0]
    if abs(det) <= tol or np.max(np.abs(row)) <= tol:
        return FalsificationWitness(
            "A1_jacobian_singular", None, None, None, tuple(np.zeros(2 * n)),
            {"dtau_dy": D.tolist(), "det": det},
        )
    j = int(np.argmax(np.abs(row)))
    s = float(row[j])
    theta = 2.0 / s
    u = np.zeros(n)
    u[j] = 1.0
    base = np.zeros(n)
    base[:k] = 1.0

    t = t_start
    bound = max(1.0, abs(theta))
    if math.isfinite(c.radius):
        t = min(t, 0.5 * c.radius / bound)
    scanned = 0
    while t >= t_floor:
        scanned += 1
        x = t * base
        y = -theta * t * u
        hval = float(c(x, y)[0])
        if hval < 0:
            return FalsificationWitness(
                "leaves_M", theta, t, hval, tuple(np.concatenate([x, y])),
                {"dtau_dy": float(s), "direction": j, "scanned": scanned},
            )
        t *= shrink
    raise NoWitnessFound(f"h(t) stayed non-negative down to t={t_floor!r} (theta={theta!r})")


def standard_candidates() -> list[LocalAdditionCandidate]:
    """Ten admissible candidates on ``[0, inf)`` plus the degenerate ones used in tests."""
    specs = [
        ({(1, 0): 1, (0, 1): 1}, "x + y"),
        ({(1, 0): 1, (0, 1): 2}, "x + 2y"),
        ({(1, 0): 1, (0, 1): "1/2"}, "x + y/2"),
        ({(1, 0): 1, (0, 1): 1, (1, 1): 1}, "x + y + xy"),
        ({(1, 0): 1, (0, 1): 1, (0, 2): 1}, "x + y + y^2"),
        ({(1, 0): 1, (0, 1): 1, (0, 2): -3}, "x + y - 3y^2"),
        ({(1, 0): 1, (0, 1): 3, (0, 3): 1}, "x + 3y + y^3"),
        ({(1, 0): 1, (0, 1): 1, (2, 1): 5, (1, 2): -2}, "x + y + 5x^2y - 2xy^2"),
        ({(1, 0): 1, (0, 1): "1/10", (0, 4): 1}, "x + y/10 + y^4"),
        ({(1, 0): 1, (0, 1): "1/3", (3, 1): 1, (2, 2): -1}, "x + y/3 + x^3y - x^2y^2"),
    ]
    return [candidate_from_terms(t, d) for t, d in specs]


def degenerate_candidates() -> list[LocalAdditionCandidate]:
    return [
        candidate_from_terms({(1, 0): 1}, "x"),
        candidate_from_terms({(1, 0): 1, (1, 1): 1}, "x + xy"),
        candidate_from_terms({(1, 0): 1, (0, 2): 1}, "x + y^2"),
    ]


def negative_slope_candidate() -> LocalAdditionCandidate:
    """``x - y + 2xy + y^2``: the scan then runs with a negative ``theta``."""
    return candidate_from_terms({(1, 0): 1, (0, 1): -1, (1, 1): 2, (0, 2): 1}, "x - y + 2xy + y^2")


def chart_candidate() -> LocalAdditionCandidate:
    """``tau(x, y) = x + y`` on ``[0, inf) x R``."""
    n = 2
    comps = []
    for i in range(n):
        comps.append({tuple(int(m == i) for m in range(2 * n)): 1, tuple(int(m == n + i) for m in range(2 * n)): 1})
    return LocalAdditionCandidate(tuple(poly.clean(c) for c in comps), n=2, k=1, description="x + y on [0,inf) x R")
