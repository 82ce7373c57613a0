"""Symbolic-numeric calculus on Lie, Jacobi and Jacobi-Nijenhuis algebroids.

Structures are given in a coordinate frame; identities are checked by
evaluating residual expressions at seeded random points.
"""
from .algebroid import (
    Algebroid,
    Form,
    Multivector,
    contract_form,
    contract_mv,
    differential,
    lie_derivative,
    pairing,
    schouten,
    sharp,
    tangent_algebroid,
    top_coefficient,
    validate_algebroid,
    wedge,
)
from .catalog import SpecDocument, SpecError, fixture, load_spec
from .expr import Expr, VarSpace
from .jacobi import (
    BaseJacobiPair,
    JacobiAlgebroid,
    TriangularJB,
    build_dual_algebroid,
    induced_base_jacobi,
    is_jacobi_bivector,
    sj_bracket,
)
from .nijenhuis import Endo, JNAlgebroid, is_compatible
from .parser import parse_expr
from .poisson import extend
from .program import BACKEND
from .sampling import DEFAULT, Report, Sampling

__version__ = "0.1.0"
