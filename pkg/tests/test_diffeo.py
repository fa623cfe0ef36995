import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polydiff.diffeo import (
    AffineSymmetry,
    Diffeo,
    affine_symmetry,
    chart,
    chart_product,
    compose,
    conjugate,
    diffeo_from_json,
    diffeo_to_json,
    face_permutation,
    grid,
    identity,
    invert,
    invert_point,
    is_boundary_fixing,
    try_near_identity,
)
from polydiff.errors import (
    DomainMismatch,
    GateNotSatisfied,
    InversionNotConverged,
    NotASymmetry,
    NotInPolytope,
    NotStratified,
)
from polydiff.fields import AffineField, PolynomialField, random_stratified_field, rho, sup_op_norm, zero_field
from polydiff.polytope import contains, index, sample, sample_strata, smallest_face
from polydiff.shapes import cube, square, triangle

from support import bump_field, fd_jacobian, gated_pool, interior_points, random_word, shapes

ROTATION = ([[0, 1], [-1, 0]], [0, 1])  # (x, y) -> (y, 1 - x)


def rotation():
    return affine_symmetry(*ROTATION, square())


# -- admission ------------------------------------------------------------------


def test_bump_accepted():
    d = try_near_identity(bump_field())
    assert d.word[0].cert.q == pytest.approx(0.4, abs=0.01)


def test_strong_bump_rejected():
    with pytest.raises(GateNotSatisfied) as info:
        try_near_identity(bump_field(scale=3))
    assert info.value.q >= 1.2


def test_constant_rejected_as_not_stratified():
    f = PolynomialField(square(), [{(0, 0): "1/10"}, {}])
    with pytest.raises(NotStratified) as info:
        try_near_identity(f)
    assert info.value.report.violation.face == "x=0"


def test_zero_field_gives_identity():
    d = try_near_identity(zero_field(square()))
    assert np.array_equal(d.eval([0.3, 0.4]), [0.3, 0.4])


def test_affine_rotation_accepted_and_applied():
    r = rotation()
    assert np.allclose(r.eval([0, 0]), [0, 1])
    assert np.allclose(affine_symmetry([[1, 0], [0, 1]], [0, 0], square()).eval([0.2, 0.3]), [0.2, 0.3])


@pytest.mark.parametrize("L, t", [([[2, 0], [0, 2]], [0, 0]), ([[1, 0], [0, 0]], [0, 0]), ([[1, 0], [0, 1]], [1, 0])])
def test_non_symmetries_rejected(L, t):
    with pytest.raises(NotASymmetry):
        affine_symmetry(L, t, square())


def test_triangle_symmetry():
    d = affine_symmetry([[-1, -1], [1, 0]], [1, 0], triangle())
    assert np.allclose(d.eval([0, 0]), [1, 0])


# -- evaluation and inversion -----------------------------------------------------


def test_eval_bump():
    d = try_near_identity(bump_field())
    assert np.allclose(d.eval([0.5, 0.5]), [0.6, 0.5])


def test_vertices_fixed():
    for name in ("square", "triangle", "cube"):
        P = shapes()[name]
        d = random_word(name, np.random.default_rng(0), symmetries=False)
        for v in P.vertex_array:
            assert np.array_equal(d.eval(v), v)


def test_eval_outside_raises():
    with pytest.raises(NotInPolytope):
        try_near_identity(bump_field()).eval([1.2, 0.1])


def test_invert_point_bump():
    x = invert_point(bump_field(), [0.6, 0.5])
    assert np.allclose(x, [0.5, 0.5], atol=1e-9)


def test_invert_point_against_bisection():
    # first coordinate solves x + 0.4 x (1 - x) = y on [0, 1]
    y = 0.37
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid + 0.4 * mid * (1 - mid) < y:
            lo = mid
        else:
            hi = mid
    x = invert_point(bump_field(), [y, 0.2])
    assert x[0] == pytest.approx(lo, abs=1e-10)


def test_invert_point_zero_field():
    assert np.allclose(invert_point(zero_field(square()), [0.3, 0.9]), [0.3, 0.9])


def test_invert_point_vertex_short_circuit():
    f = random_stratified_field(cube(), seed=3)
    for v in cube().vertex_array:
        assert np.array_equal(invert_point(f, v), v)


def test_invert_point_generic_path_matches_kernel():
    f = bump_field()
    g = rho(zero_field(square()), f)  # composite: generic Python loop
    y = np.array([0.55, 0.25])
    assert np.allclose(invert_point(g, y), invert_point(f, y), atol=1e-10)


def test_invert_point_residual_bound():
    for name in ("square", "triangle", "cube"):
        P = shapes()[name]
        f = random_stratified_field(P, seed=9, target=0.8)
        cert = sup_op_norm(f)
        for y in sample_strata(P, 60, seed=2):
            x = invert_point(f, y, cert=cert)
            assert np.linalg.norm(x + f.eval(x) - y) <= 1e-10 * (1 + cert.q)
            assert contains(P, x, 1e-12)


def test_broken_certificate_detected():
    f = bump_field(scale=2)  # true sup 0.8
    cert = sup_op_norm(f)
    fake = type(cert)(0.01, cert.mode, True, cert.stratified)
    with pytest.raises(InversionNotConverged):
        invert_point(f, [0.05, 0.5], cert=fake, tol_inv=1e-14)


def test_forward_images_stay_in_polytope():
    for name in ("square", "triangle", "cube"):
        P = shapes()[name]
        for d in gated_pool(name):
            for x in sample_strata(P, 50, seed=1):
                assert contains(P, d.eval(x), 1e-9)


# -- Jacobians --------------------------------------------------------------------


def test_jacobian_near_identity_is_i_plus_a():
    f = bump_field()
    d = try_near_identity(f)
    x = np.array([0.3, 0.7])
    assert np.allclose(d.jacobian(x), np.eye(2) + f.jacobian(x))


def test_inverse_jacobian_affine():
    P = square()
    f = AffineField(P, [[0.3, 0], [0, 0.2]])
    # not stratified on the square, so build the letter by hand from its exact certificate
    from polydiff.diffeo import NearIdentity

    d = Diffeo(P, (NearIdentity(f, sup_op_norm(f)),))
    assert np.allclose(np.linalg.inv(d.jacobian([0.2, 0.2])), np.diag([1 / 1.3, 1 / 1.2]))


def test_identity_jacobian():
    assert np.array_equal(identity(square()).jacobian([0.1, 0.2]), np.eye(2))


def test_word_jacobian_matches_finite_differences():
    rng = np.random.default_rng(4)
    for name in ("square", "cube"):
        P = shapes()[name]
        d = random_word(name, rng, max_len=3)
        d = Diffeo(P, d.word, tol_inv=1e-14)
        for x in interior_points(P, 10, seed=3, margin=1e-3):
            J = d.jacobian(x)
            fd = fd_jacobian(lambda z: d.eval(z, check=False), x, 1e-5)
            assert np.linalg.norm(fd - J) <= 1e-5 * np.linalg.norm(J)


def test_inverse_jacobian_formula():
    P = triangle()
    d = Diffeo(P, try_near_identity(random_stratified_field(P, seed=8)).word, tol_inv=1e-14)
    inv = invert(d)
    for x in interior_points(P, 10, seed=1, margin=1e-3):
        fd = fd_jacobian(lambda z: inv.eval(z, check=False), x, 1e-4)
        assert np.allclose(d.inverse_jacobian(x), fd, rtol=1e-5, atol=1e-7)
        assert np.allclose(d.inverse_jacobian(x), inv.jacobian(x), atol=1e-9)


# -- group structure ----------------------------------------------------------------


def test_compose_with_inverse_is_identity():
    d = gated_pool("cube")[0]
    e = compose(d, invert(d))
    for x in sample_strata(cube(), 100, seed=3):
        assert np.allclose(e.eval(x), x, atol=1e-8)


def test_conjugate_by_identity():
    d = gated_pool("square")[1]
    c = conjugate(identity(square()), d)
    for x in sample_strata(square(), 20, seed=1):
        assert np.allclose(c.eval(x), d.eval(x), atol=1e-12)


def test_conjugate_rotation_face_respecting():
    d = try_near_identity(bump_field())
    assert face_permutation(conjugate(rotation(), d)).is_identity


def test_domain_mismatch():
    with pytest.raises(DomainMismatch):
        compose(identity(square()), identity(triangle()))
    with pytest.raises(DomainMismatch):
        conjugate(identity(square()), identity(cube()))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_group_laws_on_random_words(seed):
    rng = np.random.default_rng(seed)
    name = ("square", "cube")[seed % 2]
    P = shapes()[name]
    a, b, c = (random_word(name, rng) for _ in range(3))
    X = sample_strata(P, 20, seed=seed)
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    ident = identity(P)
    for x in X:
        assert np.allclose(left.eval(x), right.eval(x), atol=1e-8)
        assert np.allclose(compose(a, ident).eval(x), a.eval(x), atol=1e-12)
        assert np.allclose(compose(invert(a), a).eval(x), x, atol=1e-8)


# -- charts ---------------------------------------------------------------------


def test_chart_of_letter_and_identity():
    f = bump_field()
    assert chart(try_near_identity(f)) is f
    assert np.array_equal(chart(identity(square())).eval([0.3, 0.3]), [0, 0])
    with pytest.raises(ValueError):
        chart(compose(try_near_identity(f), try_near_identity(f)))


def test_chart_product_with_zero():
    f = bump_field()
    z = zero_field(square())
    for x in ([0.2, 0.4], [0.9, 0.1]):
        assert np.allclose(chart_product(f, z).eval(x), f.eval(x))
        assert np.allclose(chart_product(z, f).eval(x), f.eval(x))


def test_chart_product_bump():
    f = bump_field()
    assert np.allclose(chart_product(f, f).eval([0.5, 0.5]), [0.196, 0])


def test_chart_product_rejects_ungated():
    with pytest.raises(GateNotSatisfied):
        chart_product(bump_field(scale=3), bump_field())


def test_chart_product_of_inverse_pair_vanishes():
    g = random_stratified_field(square(), seed=2, target=0.3)
    h = chart(invert(try_near_identity(g)))
    p = chart_product(g, h)
    for x in sample_strata(square(), 30, seed=1):
        assert np.allclose(p.eval(x), 0, atol=1e-10)


def test_chart_product_matches_composition():
    for name in ("square", "triangle", "cube"):
        P = shapes()[name]
        f, g = (chart(d) for d in gated_pool(name)[:2])
        both = compose(try_near_identity(f), try_near_identity(g))
        h = chart_product(f, g)
        for x in sample_strata(P, 40, seed=5):
            assert np.max(np.abs(both.eval(x) - x - h.eval(x))) < 1e-10


# -- face permutation -------------------------------------------------------------


def test_near_identity_words_induce_identity():
    rng = np.random.default_rng(1)
    for name in ("square", "triangle", "cube"):
        assert face_permutation(random_word(name, rng, symmetries=False)).is_identity


def test_rotation_cycles():
    pi = face_permutation(rotation())
    assert [len(c) for c in pi.cycles(0)] == [4]
    assert [len(c) for c in pi.cycles(1)] == [4]
    assert pi.cycles(2) == [(square().lattice.top.id,)]


def test_rotation_fourth_power():
    r = rotation()
    r4 = compose(compose(r, r), compose(r, r))
    assert face_permutation(r4).is_identity
    assert not face_permutation(compose(r, r)).is_identity


def test_face_permutation_homomorphism():
    rng = np.random.default_rng(12)
    for _ in range(10):
        a = random_word("cube", rng)
        b = random_word("cube", rng)
        assert face_permutation(compose(a, b)) == face_permutation(a) @ face_permutation(b)


def test_relative_interior_preserved():
    rng = np.random.default_rng(5)
    P = cube()
    d = random_word("cube", rng, symmetries=False)
    for face in P.lattice:
        for x in sample(P, face, 2, seed=0):
            assert smallest_face(P, d.eval(x)) is face


def test_index_preserved_with_symmetries():
    rng = np.random.default_rng(7)
    P = square()
    d = random_word("square", rng)
    for x in sample_strata(P, 60, seed=0):
        assert index(P, d.eval(x)) == index(P, x)


# -- boundary fixing --------------------------------------------------------------


def test_boundary_fixing_examples():
    P = square()
    b = PolynomialField(P, [{(1, 1): "2/5", (2, 1): "-2/5", (1, 2): "-2/5", (2, 2): "2/5"}, {}])
    assert is_boundary_fixing(try_near_identity(b))
    assert not is_boundary_fixing(try_near_identity(bump_field()))
    assert is_boundary_fixing(identity(P))
    assert not is_boundary_fixing(rotation())


# -- JSON and grids -----------------------------------------------------------------


def test_diffeo_json_round_trip():
    P = square()
    d = compose(rotation(), invert(try_near_identity(bump_field())))
    data = json.loads(json.dumps(diffeo_to_json(d)))
    assert [next(iter(l)) for l in data] == ["affine", "inverse_of"]
    e = diffeo_from_json(data, P)
    for x in sample_strata(P, 20, seed=0):
        assert np.allclose(e.eval(x), d.eval(x), atol=1e-12)


def test_diffeo_json_gates_letters():
    with pytest.raises(GateNotSatisfied):
        diffeo_from_json([{"near_identity": {"kind": "polynomial", "components": [
            [{"exp": [1, 0], "coef": 1.2}, {"exp": [2, 0], "coef": -1.2}], []]}}], square())
    with pytest.raises(ValueError):
        diffeo_from_json([{"twist": {}}], square())


def test_affine_letter_inverse_exact():
    letter = rotation().word[0]
    inv = letter.inverse()
    assert isinstance(inv, AffineSymmetry)
    assert inv.apply_exact(letter.apply_exact((0, 0))) == (0, 0)


def test_grid():
    assert len(grid(square(), 3)) == 9
    assert len(grid(triangle(), 3)) == 6
    with pytest.raises(ValueError):
        grid(square(), 1)
