"""Face-respecting diffeomorphisms of convex polytopes.

Polytopes are held exactly in halfspace form; vector fields, gate
certificates and diffeomorphism words are built on top of them.
"""

from ._kernels import BACKEND
from .diffeo import (
    AffineSymmetry,
    Diffeo,
    FacePermutation,
    Inverse,
    NearIdentity,
    affine_symmetry,
    chart,
    chart_product,
    compose,
    conjugate,
    diffeo_from_json,
    diffeo_to_json,
    face_permutation,
    identity,
    invert,
    invert_point,
    is_boundary_fixing,
    try_near_identity,
)
from .errors import (
    CurveNotInM,
    DomainMismatch,
    EmptyInterior,
    GateNotSatisfied,
    GateRejection,
    GeometryError,
    InternalInvariantViolation,
    InversionNotConverged,
    NoWitnessFound,
    NotASymmetry,
    NotInPolytope,
    NotStratified,
    NumericalError,
    PolydiffError,
    ProjectionNotConverged,
    Unbounded,
)
from .fields import (
    AffineField,
    CompositeField,
    GateCertificate,
    InverseChartField,
    PolynomialField,
    StratificationReport,
    VectorField,
    certify,
    field_from_json,
    field_to_json,
    is_stratified,
    random_stratified_field,
    rho,
    sup_op_norm,
    zero_field,
)
from .lemmas import (
    FalsificationWitness,
    LocalAdditionCandidate,
    check_der_to_face,
    check_face_into_face,
    check_lip_inverse,
    falsify_local_addition,
)
from .polytope import (
    Face,
    FaceLattice,
    Polytope,
    active_set,
    canonicalize,
    contains,
    face_lattice,
    index,
    polytope_from_json,
    polytope_to_json,
    project,
    sample,
    smallest_face,
    strata,
)
from .shapes import cross_polytope, cube, octahedron, simplex, square, triangle

__version__ = "0.1.0"

__all__ = [
    "AffineField",
    "AffineSymmetry",
    "BACKEND",
    "CompositeField",
    "CurveNotInM",
    "Diffeo",
    "DomainMismatch",
    "EmptyInterior",
    "Face",
    "FaceLattice",
    "FacePermutation",
    "FalsificationWitness",
    "GateCertificate",
    "GateNotSatisfied",
    "GateRejection",
    "GeometryError",
    "InternalInvariantViolation",
    "Inverse",
    "InverseChartField",
    "InversionNotConverged",
    "LocalAdditionCandidate",
    "NearIdentity",
    "NoWitnessFound",
    "NotASymmetry",
    "NotInPolytope",
    "NotStratified",
    "NumericalError",
    "PolydiffError",
    "PolynomialField",
    "Polytope",
    "ProjectionNotConverged",
    "StratificationReport",
    "Unbounded",
    "VectorField",
    "active_set",
    "affine_symmetry",
    "canonicalize",
    "certify",
    "chart",
    "chart_product",
    "check_der_to_face",
    "check_face_into_face",
    "check_lip_inverse",
    "compose",
    "conjugate",
    "contains",
    "cross_polytope",
    "cube",
    "diffeo_from_json",
    "diffeo_to_json",
    "face_lattice",
    "face_permutation",
    "falsify_local_addition",
    "field_from_json",
    "field_to_json",
    "identity",
    "index",
    "invert",
    "invert_point",
    "is_boundary_fixing",
    "is_stratified",
    "octahedron",
    "polytope_from_json",
    "polytope_to_json",
    "project",
    "random_stratified_field",
    "rho",
    "sample",
    "simplex",
    "smallest_face",
    "square",
    "strata",
    "sup_op_norm",
    "triangle",
    "try_near_identity",
    "zero_field",
]
