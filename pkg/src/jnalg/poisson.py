"""The extended algebroid A x R over M x R and the exponential gauge maps.

Given a Jacobi algebroid (A, phi0) over M, the same bundle pulled back to
M x R carries the anchor rho(e_a) + <phi0, e_a> d/dt and the same frame
brackets.  Under this structure phi0 becomes exact (it is the differential
of the coordinate t), Jacobi bivectors P become Poisson bivectors e^{-t} P,
and twisted brackets turn into plain Schouten brackets of gauged objects.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import expr as ex
from .algebroid import Algebroid, Form, Multivector, differential, pairing, schouten
from .jacobi import (
    JacobiAlgebroid,
    TriangularJB,
    build_dual_algebroid,
    dual_bracket_of,
    sj_bracket,
    to_dual,
)
from .sampling import DEFAULT, Report, Sampling, check, combine

__all__ = [
    "ExtendedAlgebroid",
    "extend",
    "gauge_mv",
    "gauge_form",
    "check_gauging_bracket",
    "check_dual_gauging",
    "check_time_independent_dual",
]

T_NAME = "t"


@dataclass(frozen=True, eq=False)
class ExtendedAlgebroid:
    hatA: Algebroid
    origin: JacobiAlgebroid

    @property
    def t(self) -> ex.Expr:
        return ex.var(T_NAME)

    def lift(self, obj):
        """A t-independent object of A regarded on the extended algebroid."""
        return obj.on(self.hatA)

    def phi0_exact(self, sampling: Sampling = DEFAULT) -> Report:
        dt = differential(self.hatA, Form.scalar(self.hatA, self.t))
        return check("phi0=dt", "phi0 = d(t) on the extension",
                     (dt - self.lift(self.origin.phi0)).exprs(), self.hatA.vars, sampling)

    def poisson_check(self, P: Multivector, sampling: Sampling = DEFAULT) -> Report:
        """[P~, P~] = 0 on the extension."""
        Pt = gauge_mv(self, P)
        return check("poissonized", "[P~,P~] = 0 with P~ = e^{-t} P",
                     schouten(Pt, Pt).exprs(), self.hatA.vars, sampling)


def extend(J: JacobiAlgebroid) -> ExtendedAlgebroid:
    A = J.A
    if A.vars.has_t:
        raise ValueError("coordinate space already contains t")
    vars = A.vars.extended()
    rows = []
    for a, row in enumerate(A.anchor):
        rows.append(list(row) + [J.phi0.coeffs.get((a,), ex.ZERO)])
    hatA = Algebroid(vars, rows, dict(A.structure_items()), name=f"{A.name}^")
    return ExtendedAlgebroid(hatA, J)


def gauge_mv(E: ExtendedAlgebroid, P: Multivector) -> Multivector:
    """e^{-(p-1)t} P."""
    return E.lift(P) * ex.exp(ex.mul(-(P.degree - 1), E.t))


def gauge_form(E: ExtendedAlgebroid, w: Form) -> Form:
    """e^{pt} w."""
    return E.lift(w) * ex.exp(ex.mul(w.degree, E.t))


def check_gauging_bracket(
    E: ExtendedAlgebroid, P: Multivector, Q: Multivector, sampling: Sampling = DEFAULT
) -> Report:
    """Schouten bracket of gauged objects against the gauged twisted bracket."""
    lhs = schouten(gauge_mv(E, P), gauge_mv(E, Q))
    rhs = gauge_mv(E, sj_bracket(E.origin, P, Q))
    return check("gauging-bracket", "[X~,Y~] = ([X,Y]^phi0)~",
                 (lhs - rhs).exprs(), E.hatA.vars, sampling)


def _hat_dual(E: ExtendedAlgebroid, T: TriangularJB, sampling: Sampling) -> TriangularJB:
    Pt = gauge_mv(E, T.P)
    return build_dual_algebroid(JacobiAlgebroid.untwisted(E.hatA), Pt, sampling, verify=False)


def check_dual_gauging(
    T: TriangularJB, alpha: Form, beta: Form, sampling: Sampling = DEFAULT,
    E: ExtendedAlgebroid | None = None, hat: TriangularJB | None = None,
) -> Report:
    """[a^, b^]_{P~} = ([a, b]_P)^ for forms of any degree.

    Both sides are plain Schouten brackets: on the left in the dual of the
    extension by the Poisson bivector P~, on the right in A*_P.
    """
    E = E or extend(T.J)
    hat = hat or _hat_dual(E, T, sampling)
    lhs = schouten(to_dual(gauge_form(E, alpha), hat.dual), to_dual(gauge_form(E, beta), hat.dual))
    br = schouten(to_dual(alpha, T.dual), to_dual(beta, T.dual))
    rhs = gauge_form(E, Form(T.A, br.degree, br.coeffs))
    diff = Form(E.hatA, lhs.degree, lhs.coeffs) - rhs
    return check("dual-gauging", "[a^,b^]_{P~} = ([a,b]_P)^", diff.exprs(), E.hatA.vars, sampling)


def check_time_independent_dual(
    T: TriangularJB, alpha: Form, beta: Form, sampling: Sampling = DEFAULT,
    E: ExtendedAlgebroid | None = None,
) -> Report:
    """[a,b]_{P~} = e^{-t}([a,b]_P - <a,X0> b + <b,X0> a) for t-independent 1-forms."""
    E = E or extend(T.J)
    hatJ = JacobiAlgebroid.untwisted(E.hatA)
    lhs = dual_bracket_of(hatJ, gauge_mv(E, T.P), E.lift(alpha), E.lift(beta))
    inner = (
        T.bracket(alpha, beta)
        - beta * pairing(alpha, T.X0)
        + alpha * pairing(beta, T.X0)
    )
    rhs = E.lift(inner) * ex.exp(ex.neg(E.t))
    return check("dual-time-independent", "[a,b]_{P~} = e^{-t}([a,b]_P - <a,X0>b + <b,X0>a)",
                 (lhs - rhs).exprs(), E.hatA.vars, sampling)

