"""Jacobi algebroids: 1-cocycle twisted calculus, Jacobi bivectors, duals.

A Jacobi algebroid is a Lie algebroid A with a closed 1-form phi0.  A
Jacobi bivector P ([P, P]^phi0 = 0) makes the dual bundle A* a Lie
algebroid with anchor rho o P# and a 1-cocycle X0 = -P#(phi0).  Sections
of A* are represented by 1-forms on A; multivectors of the dual algebroid
are forms on A with the same coefficient tuples.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from . import expr as ex
from .algebroid import (
    Algebroid,
    Form,
    Multivector,
    ParentMismatch,
    contract_form,
    contract_mv,
    differential,
    pairing,
    schouten,
    sharp,
    tangent_algebroid,
    validate_algebroid,
    wedge,
)
from .sampling import DEFAULT, Report, Sampling, check, combine

__all__ = [
    "JacobiAlgebroid",
    "TriangularJB",
    "BaseJacobiPair",
    "NotJacobi",
    "check_cocycle",
    "sj_bracket",
    "phi_diff",
    "phi_lie",
    "bivector_value",
    "is_jacobi_bivector",
    "dual_bracket",
    "dual_bracket_of",
    "build_dual_algebroid",
    "induced_base_jacobi",
    "bivectors_compatible",
    "check_base_compatibility",
    "to_dual",
    "from_dual",
]


class NotJacobi(ValueError):
    """Raised when a bivector fails the Jacobi condition."""

    def __init__(self, report: Report):
        super().__init__(f"[P,P]^phi0 does not vanish (residual {report.residual:.3e})")
        self.report = report


@dataclass(frozen=True, eq=False)
class JacobiAlgebroid:
    A: Algebroid
    phi0: Form

    def __post_init__(self):
        if not isinstance(self.phi0, Form) or self.phi0.degree != 1:
            raise ValueError("phi0 must be a 1-form")
        if self.phi0.parent is not self.A:
            raise ParentMismatch("phi0 does not live on A")

    @classmethod
    def untwisted(cls, A: Algebroid) -> "JacobiAlgebroid":
        return cls(A, Form.zero(A, 1))

    def validate(self, sampling: Sampling = DEFAULT) -> Report:
        return combine(
            "jacobi-algebroid",
            "Lie algebroid with closed phi0",
            [validate_algebroid(self.A, sampling), check_cocycle(self.A, self.phi0, sampling)],
        )


def check_cocycle(A: Algebroid, phi: Form, sampling: Sampling = DEFAULT) -> Report:
    return check("cocycle", "d(phi) = 0", differential(A, phi).exprs(), A.vars, sampling)


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


def sj_bracket(J: JacobiAlgebroid, P: Multivector, Q: Multivector) -> Multivector:
    """[P,Q] + (p-1) P ^ i_phi0 Q - (-1)^{p-1} (q-1) i_phi0 P ^ Q."""
    p, q = P.degree, Q.degree
    if P.parent is not J.A or Q.parent is not J.A:
        raise ParentMismatch("operands do not live on the Jacobi algebroid")
    out = schouten(P, Q)
    if p - 1:
        out = out + wedge(P, contract_form(J.phi0, Q)) * (p - 1)
    if q - 1:
        out = out - wedge(contract_form(J.phi0, P), Q) * (_sign(p - 1) * (q - 1))
    return out


def phi_diff(J: JacobiAlgebroid, w: Form) -> Form:
    """d^phi0 w = d w + phi0 ^ w."""
    return differential(J.A, w) + wedge(J.phi0, w)


def phi_lie(J: JacobiAlgebroid, X: Multivector, w: Form) -> Form:
    """i_X d^phi0 w + (-1)^{p-1} d^phi0 i_X w."""
    if X.parent is not J.A or w.parent is not J.A:
        raise ParentMismatch("operands do not live on the Jacobi algebroid")
    p = X.degree
    out = contract_mv(X, phi_diff(J, w))
    if p <= w.degree:
        second = phi_diff(J, contract_mv(X, w))
        out = out + second * _sign(p - 1)
    return out


def bivector_value(P: Multivector, alpha: Form, beta: Form) -> ex.Expr:
    """P(alpha, beta) = <beta, P# alpha>."""
    return pairing(beta, sharp(P, alpha))


def is_jacobi_bivector(J: JacobiAlgebroid, P: Multivector, sampling: Sampling = DEFAULT) -> Report:
    if P.degree != 2:
        raise ValueError("a Jacobi bivector has degree 2")
    return check("jacobi-bivector", "[P,P]^phi0 = 0", sj_bracket(J, P, P).exprs(), J.A.vars, sampling)


def dual_bracket_of(J: JacobiAlgebroid, P: Multivector, alpha: Form, beta: Form) -> Form:
    """L^phi0_{P#a} b - L^phi0_{P#b} a - d^phi0 P(a, b)."""
    out = phi_lie(J, sharp(P, alpha), beta) - phi_lie(J, sharp(P, beta), alpha)
    return out - phi_diff(J, Form.scalar(J.A, bivector_value(P, alpha, beta)))


def to_dual(w: Form, dual: Algebroid) -> Multivector:
    """A form on A seen as a multivector of the dual algebroid."""
    return Multivector(dual, w.degree, w.coeffs)


def from_dual(X: Multivector, A: Algebroid) -> Form:
    return Form(A, X.degree, X.coeffs)


@dataclass(frozen=True, eq=False)
class TriangularJB:
    """(A, phi0, P) with P Jacobi, together with the dual algebroid and X0."""

    J: JacobiAlgebroid
    P: Multivector
    dual: Algebroid
    X0: Multivector  # -P#(phi0), a section of A
    report: Report | None = None

    @property
    def A(self) -> Algebroid:
        return self.J.A

    @property
    def phi0(self) -> Form:
        return self.J.phi0

    def X0_form(self) -> Form:
        """X0 as a 1-form (1-cocycle) of the dual algebroid."""
        return Form(self.dual, 1, self.X0.coeffs)

    def dual_jacobi(self) -> JacobiAlgebroid:
        return JacobiAlgebroid(self.dual, self.X0_form())

    def bracket(self, alpha: Form, beta: Form) -> Form:
        return dual_bracket_of(self.J, self.P, alpha, beta)


def dual_bracket(T: TriangularJB, alpha: Form, beta: Form) -> Form:
    return dual_bracket_of(T.J, T.P, alpha, beta)


def build_dual_algebroid(
    J: JacobiAlgebroid,
    P: Multivector,
    sampling: Sampling = DEFAULT,
    verify: bool = True,
    name: str = "",
) -> TriangularJB:
    """Dual algebroid A*_P read off from the bracket on the coframe.

    With ``verify`` the Jacobi condition gates construction, and the dual
    algebroid axioms and the cocycle property of X0 are reported.
    """
    A = J.A
    parts = []
    if verify:
        jac = is_jacobi_bivector(J, P, sampling)
        if not jac.passed:
            raise NotJacobi(jac)
        parts.append(jac)
    n = A.rank
    sharps = [sharp(P, A.coframe(a)) for a in range(n)]
    anchor = [A.anchor_of(s) for s in sharps]
    structure = {}
    for i, j in combinations(range(n), 2):
        br = dual_bracket_of(J, P, A.coframe(i), A.coframe(j))
        for (k,), c in br.coeffs.items():
            structure[(k, i, j)] = c
            structure[(k, j, i)] = ex.neg(c)
    dual = Algebroid(A.vars, anchor, structure, name=name or f"{A.name}*")
    X0 = -sharp(P, J.phi0)
    report = None
    if verify:
        parts.append(validate_algebroid(dual, sampling))
        parts.append(
            check(
                "X0-cocycle",
                "d_* X0 = 0 with X0 = -P#(phi0)",
                differential(dual, Form(dual, 1, X0.coeffs)).exprs(),
                A.vars,
                sampling,
            )
        )
        report = combine("triangular", "dual Jacobi algebroid (A*, X0)", parts)
    return TriangularJB(J, P, dual, X0, report)


@dataclass(frozen=True, eq=False)
class BaseJacobiPair:
    """Jacobi pair (P_M, E_M) on the tangent algebroid of the base."""

    P_M: Multivector
    E_M: Multivector

    @property
    def TM(self) -> Algebroid:
        return self.P_M.parent

    def check(self, sampling: Sampling = DEFAULT) -> Report:
        P, E = self.P_M, self.E_M
        vars = self.TM.vars
        return combine(
            "base-jacobi-pair",
            "Jacobi manifold identities",
            [
                check("[P,P]+2E^P", "[P_M,P_M] = -2 E_M ^ P_M",
                      (schouten(P, P) + wedge(E, P) * 2).exprs(), vars, sampling),
                check("[E,P]", "[E_M,P_M] = 0", schouten(E, P).exprs(), vars, sampling),
            ],
        )


def push_bivector(A: Algebroid, P: Multivector, TM: Algebroid) -> Multivector:
    """rho^2 P on the base."""
    m = A.base_dim
    vals = {}
    for mu, nu in combinations(range(m), 2):
        terms = []
        for (a, b), c in P.coeffs.items():
            ra, rb = A.anchor[a], A.anchor[b]
            terms.append(ex.mul(c, ex.sub(ex.mul(ra[mu], rb[nu]), ex.mul(rb[mu], ra[nu]))))
        vals[(mu, nu)] = ex.add(*terms)
    return Multivector(TM, 2, vals)


def induced_base_jacobi(T: TriangularJB, TM: Algebroid | None = None) -> BaseJacobiPair:
    """P_M = rho^2 P and E_M = rho(P# phi0)."""
    A = T.A
    TM = TM or tangent_algebroid(A.vars)
    P_M = push_bivector(A, T.P, TM)
    E_M = Multivector.from_components(TM, A.anchor_of(sharp(T.P, T.phi0)))
    return BaseJacobiPair(P_M, E_M)


def bivectors_compatible(
    J: JacobiAlgebroid, P1: Multivector, P2: Multivector, sampling: Sampling = DEFAULT
) -> Report:
    """[P1,P2]^phi0 = 0, plus the two identities it splits into."""
    vars = J.A.vars
    E1, E2 = sharp(P1, J.phi0), sharp(P2, J.phi0)
    expanded = schouten(P1, P2) + wedge(E1, P2) + wedge(E2, P1)
    e_part = schouten(E1, P2) + schouten(E2, P1)
    return combine(
        "bivectors-compatible",
        "[P1,P2]^phi0 = 0",
        [
            check("sj[P1,P2]", "[P1,P2]^phi0 = 0", sj_bracket(J, P1, P2).exprs(), vars, sampling),
            check("[P1,P2]+P1#phi^P2+P2#phi^P1", "expanded twisted bracket",
                  expanded.exprs(), vars, sampling),
            check("[P1#phi,P2]+[P2#phi,P1]", "vector part of compatibility",
                  e_part.exprs(), vars, sampling),
        ],
    )


def check_base_compatibility(
    pair1: BaseJacobiPair, pair2: BaseJacobiPair, sampling: Sampling = DEFAULT
) -> Report:
    """[L1,L2] = -E1^L2 - E2^L1 and [E1,L2] + [E2,L1] = 0."""
    L1, E1, L2, E2 = pair1.P_M, pair1.E_M, pair2.P_M, pair2.E_M
    vars = L1.parent.vars
    return combine(
        "base-compatible",
        "compatible Jacobi structures on the base",
        [
            check("[L1,L2]+E1^L2+E2^L1", "[L1,L2] = -E1^L2 - E2^L1",
                  (schouten(L1, L2) + wedge(E1, L2) + wedge(E2, L1)).exprs(), vars, sampling),
            check("[E1,L2]+[E2,L1]", "[E1,L2] + [E2,L1] = 0",
                  (schouten(E1, L2) + schouten(E2, L1)).exprs(), vars, sampling),
        ],
    )
