"""Exact separated basis transformations on truncated polynomial spaces.

Public surface::

    from sepbasis import FAMILIES, family_transform, derive_differential_form
    t = family_transform(FAMILIES["laguerre"], 3)
    form, matrix = derive_differential_form(t, base_projectors(t.source), FAMILIES["laguerre"].eigenvalues(3))
    str(form)   # '-(x*D^2 - x*D + D)'

Everything is rational; there is no floating point anywhere.
"""

from .core import ONE, X, ZERO, Polynomial, Q, fmt_rational, parse_rational
from .covariant import (
    EigenSpec,
    MomentFunctional,
    SeparatedTransform,
    coordinate_projector,
    derive_differential_form,
    derive_operator,
    derive_raising,
    frobenius_covariant,
    moment_projector,
    rejected_projector,
    separated_compose,
    similarity_conjugate,
    spectral_expand,
    transform_projector,
    two_point_operator,
    umbral_apply,
)
from .errors import (
    ConsistencyError,
    CovariantUndefinedError,
    DegreeOverflowError,
    FrameMismatchError,
    NotDifferentialFormError,
    NotTriangularError,
    SepBasisError,
    SingularMatrixError,
    SpanError,
)
from .expr import ParseError, parse_operator, parse_poly
from .families import (
    FAMILIES,
    FamilySpec,
    PearsonPair,
    base_projectors,
    family_transform,
    gen_classical,
    gen_sequence,
    pearson_eigenvalue,
    pearson_operator,
    pearson_transform,
    rodrigues_general,
)
from .opspace import (
    BasisFamily,
    DiffForm,
    LinearMap,
    OperatorExpr,
    apply_operator,
    basis_coordinates,
    build_basis,
    compile_operator,
    eigenvalues_triangular,
    map_apply,
    map_compose,
    map_invert,
    op_from_action,
    to_differential_form,
)

__version__ = "0.1.0"
