import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polydiff.diffeo import affine_symmetry, identity, try_near_identity
from polydiff.errors import CurveNotInM, GateNotSatisfied, NoWitnessFound
from polydiff.fields import AffineField, zero_field
from polydiff.lemmas import (
    FalsificationWitness,
    LocalAdditionCandidate,
    candidate_from_terms,
    chart_candidate,
    check_der_to_face,
    check_face_into_face,
    check_lip_inverse,
    degenerate_candidates,
    falsify_local_addition,
    negative_slope_candidate,
    standard_candidates,
)
from polydiff.shapes import square

from support import bump_field, random_word, shapes


# -- der-to-face ----------------------------------------------------------------


def test_der_to_face_straight_segment():
    rep = check_der_to_face(square(), [0, 0.5], [1, 0], None, t_max=1.0)
    assert rep.passed
    assert rep.epsilon >= 1.0


def test_der_to_face_curved_at_vertex():
    rep = check_der_to_face(square(), [0, 0], [1, 1], [-1, 0], t_max=0.3)
    assert rep.passed and rep.epsilon > 0


def test_der_to_face_interior():
    rep = check_der_to_face(square(), [0.5, 0.5], [3, -2], None, t_max=0.01)
    assert rep.epsilon == 0.01


def test_der_to_face_bisects_below_t_max():
    # gamma(t) = 0.9 + t - 4 t^2 stays below 1 on [0, 1/4]; the tangent line exits at t = 0.1
    rep = check_der_to_face(square(), [0.9, 0.5], [1, 0], [-4, 0], t_max=0.25)
    assert rep.passed
    assert rep.epsilon == pytest.approx(0.1, abs=1e-8)


def test_der_to_face_rejects_curve_outside():
    with pytest.raises(CurveNotInM):
        check_der_to_face(square(), [0, 0.5], [-1, 0], None, t_max=0.1)


def _admissible_curve(P, rng):
    """Random quadratic curve starting on a random face and staying in P."""
    lat = list(P.lattice)
    face = lat[int(rng.integers(len(lat)))]
    verts = P.vertex_array
    x0 = face.witness_array()
    target = rng.dirichlet(np.ones(len(verts))) @ verts
    other = rng.dirichlet(np.ones(len(verts))) @ verts
    v = target - x0
    w = 0.5 * (other - target)
    # gamma(t) = (1 - t) x0 + t target + t^2 (other - target)/2 stays in P for t <= 1
    # as a convex combination when t^2/2 <= t
    return x0, v, w


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_der_to_face_never_fails_on_admissible_curves(seed):
    rng = np.random.default_rng(seed)
    P = shapes()[("square", "triangle", "cube")[seed % 3]]
    x0, v, w = _admissible_curve(P, rng)
    rep = check_der_to_face(P, x0, v, w, t_max=float(rng.uniform(0.05, 1.0)))
    assert rep.passed and rep.epsilon > 0


# -- face-into-face ----------------------------------------------------------------


def test_face_into_face_identity():
    rep = check_face_into_face(identity(square()))
    assert rep.passed and rep.max_residual == 0


def test_face_into_face_bump():
    rep = check_face_into_face(try_near_identity(bump_field()))
    assert rep.passed


def test_face_into_face_rotation_maps_tangents():
    r = affine_symmetry([[0, 1], [-1, 0]], [0, 1], square())
    J = r.jacobian([0, 0.5])
    assert np.allclose(J @ [0, 1], [1, 0])
    assert check_face_into_face(r).passed


def test_face_into_face_random_words():
    rng = np.random.default_rng(3)
    for name in ("square", "triangle", "cube"):
        rep = check_face_into_face(random_word(name, rng), samples=3)
        assert rep.inclusion and rep.spans_equal


# -- Lipschitz inverse ----------------------------------------------------------


def test_lip_inverse_zero():
    rep = check_lip_inverse(zero_field(square()))
    assert rep.bound == 1
    assert rep.empirical <= 1 + 1e-12


def test_lip_inverse_linear_attains_bound():
    rep = check_lip_inverse(AffineField(square(), [[-0.3, 0], [0, 0]]))
    assert rep.route == "forward"
    assert rep.bound == pytest.approx(1 / 0.7)
    assert rep.empirical == pytest.approx(1 / 0.7, rel=1e-9)
    assert rep.passed


def test_lip_inverse_positive_diagonal():
    rep = check_lip_inverse(AffineField(square(), [[0.3, 0], [0, 0]]))
    assert rep.empirical == pytest.approx(1.0, rel=1e-9)
    assert rep.passed


def test_lip_inverse_bump():
    rep = check_lip_inverse(bump_field())
    assert rep.route == "inverse"
    assert rep.passed
    assert rep.empirical <= 5 / 3 + 1e-6


def test_lip_inverse_needs_gate():
    with pytest.raises(GateNotSatisfied):
        check_lip_inverse(bump_field(scale=3))


# -- falsifier ------------------------------------------------------------------


def test_x_plus_y():
    w = falsify_local_addition(candidate_from_terms({(1, 0): 1, (0, 1): 1}))
    assert w.failure_mode == "leaves_M"
    assert w.theta == pytest.approx(2.0)
    assert w.t == 1e-3
    assert w.h_value == pytest.approx(-1e-3)


@pytest.mark.parametrize("c", degenerate_candidates(), ids=lambda c: c.description)
def test_degenerate_candidates(c):
    assert falsify_local_addition(c).failure_mode == "A1_jacobian_singular"


@pytest.mark.parametrize("c", standard_candidates(), ids=lambda c: c.description)
def test_standard_candidates_leave(c):
    w = falsify_local_addition(c)
    assert w.failure_mode == "leaves_M"
    assert w.h_value < 0
    assert w.theta * w.detail["dtau_dy"] == pytest.approx(2.0)


def test_negative_slope_scans_other_side():
    w = falsify_local_addition(negative_slope_candidate())
    assert w.failure_mode == "leaves_M"
    assert w.theta < 0 and w.h_value < 0


def test_a2_violation():
    w = falsify_local_addition(candidate_from_terms({(1, 0): 1, (0, 1): 1, (2, 0): 1}))
    assert w.failure_mode == "A2_violated"


def test_chart_model_two_dimensions():
    w = falsify_local_addition(chart_candidate())
    assert w.failure_mode == "leaves_M"
    assert len(w.point) == 4
    assert w.point[0] > 0 and w.h_value < 0


def test_no_witness_is_reported():
    # h(t) = -t + 10^6 t^2 only turns negative below 1e-6; floor above that
    c = candidate_from_terms({(1, 0): 1, (0, 1): 1, (0, 2): 250_000})
    with pytest.raises(NoWitnessFound):
        falsify_local_addition(c, t_floor=1e-5)
    assert falsify_local_addition(c).failure_mode == "leaves_M"


def test_radius_limits_scan():
    c = LocalAdditionCandidate(candidate_from_terms({(1, 0): 1, (0, 1): 1}).components, radius=1e-4)
    w = falsify_local_addition(c)
    assert max(abs(v) for v in w.point) < 1e-4


@settings(max_examples=60, deadline=None)
@given(
    slope=st.floats(0.05, 5.0),
    coefs=st.lists(st.integers(-5, 5), min_size=5, max_size=5),
)
def test_any_admissible_polynomial_is_falsified(slope, coefs):
    # tau = x + slope*y + y*(c0 x + c1 y + c2 x^2 + c3 xy + c4 y^3): satisfies tau(x, 0) = x
    terms = {(1, 0): 1, (0, 1): slope, (1, 1): coefs[0], (0, 2): coefs[1], (2, 1): coefs[2],
             (1, 2): coefs[3], (0, 4): coefs[4]}
    w = falsify_local_addition(candidate_from_terms({k: v for k, v in terms.items() if v}))
    assert w.failure_mode == "leaves_M"


def test_candidate_json_round_trip():
    c = chart_candidate()
    d = LocalAdditionCandidate.from_json(json.dumps(c.to_json()))
    assert d.components == c.components and d.n == 2
    short = LocalAdditionCandidate.from_json({"tau": [{"exp": [1, 0], "coef": 1}, {"exp": [0, 1], "coef": 1}]})
    assert short.n == 1
    with pytest.raises(ValueError):
        LocalAdditionCandidate.from_json({"components": [[{"exp": [1], "coef": 1}]]})


def test_witness_json_fields():
    w = falsify_local_addition(candidate_from_terms({(1, 0): 1, (0, 1): 1}))
    data = json.loads(json.dumps(w.as_dict()))
    assert set(data) == {"failure_mode", "theta", "t", "h_value", "point", "detail"}
    assert isinstance(w, FalsificationWitness)
    assert math.isfinite(data["h_value"])
