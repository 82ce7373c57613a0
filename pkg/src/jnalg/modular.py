"""Modular forms and modular vector fields.

Top sections are passed as ``ModularData``: eta (top multivector of A),
mu (volume form of the base) and optionally nu (top form of A, i.e. a top
multivector of A*).  Modular forms of A are 1-forms of A; modular forms of
A* are sections of A and are returned as degree-1 multivectors on A.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import expr as ex
from .algebroid import (
    Algebroid,
    Form,
    Multivector,
    contract_mv,
    differential,
    lie_derivative,
    pairing,
    schouten,
    sharp,
    tangent_algebroid,
    top_coefficient,
    wedge,
)
from .expr import Expr, VarSpace
from .jacobi import (
    BaseJacobiPair,
    JacobiAlgebroid,
    TriangularJB,
    build_dual_algebroid,
    check_cocycle,
    induced_base_jacobi,
    sj_bracket,
    to_dual,
)
from .nijenhuis import Endo, JNAlgebroid, deform, np_bivector
from .poisson import extend, gauge_form, gauge_mv
from .program import evaluate_many
from .sampling import DEFAULT, Report, Sampling, check, combine

__all__ = [
    "ModularData",
    "ModularForm",
    "ModularField",
    "divergence",
    "modular_form",
    "check_change_of_section",
    "jacobi_modular_form",
    "dual_modular_form",
    "xnp_field",
    "hamiltonians",
    "field_hierarchy",
    "covered_fields",
    "marrero_field",
    "mnp_relation",
    "duality_battery",
    "poisson_modular_field",
    "jacobi_manifold_modular_field",
    "modular_bridge",
    "probe_forms",
]

_NONVANISHING = 1e-6


# ---------------------------------------------------------------- data


@dataclass(frozen=True, eq=False)
class ModularData:
    """eta in X^n(A), mu in Omega^m(M), nu in Omega^n(A)."""

    eta: Multivector
    mu: Form
    nu: Form | None = None

    @classmethod
    def from_scalars(cls, A: Algebroid, eta=1, mu=1, nu=None, TM: Algebroid | None = None):
        TM = TM or tangent_algebroid(A.vars)
        n, m = A.rank, TM.rank
        e = Multivector(A, n, {tuple(range(n)): ex.as_expr(eta)})
        u = Form(TM, m, {tuple(range(m)): ex.as_expr(mu)})
        v = None if nu is None else Form(A, n, {tuple(range(n)): ex.as_expr(nu)})
        return cls(e, u, v)

    @property
    def A(self) -> Algebroid:
        return self.eta.parent

    @property
    def TM(self) -> Algebroid:
        return self.mu.parent

    def require_nu(self) -> Form:
        if self.nu is None:
            raise ValueError("a top form nu of A is required")
        return self.nu

    def check_nonvanishing(self, sampling: Sampling = DEFAULT) -> None:
        tops = [("eta", top_coefficient(self.eta)), ("mu", top_coefficient(self.mu))]
        if self.nu is not None:
            tops.append(("nu", top_coefficient(self.nu)))
        pts = sampling.sample(self.A.vars)
        vals = evaluate_many([t for _, t in tops], self.A.vars, pts)
        for (name, _), col in zip(tops, vals.T):
            if np.min(np.abs(col)) <= _NONVANISHING:
                raise ValueError(f"top section {name} vanishes at a sample point")
            # a sign change means a zero somewhere in the box
            if np.min(col) < 0 < np.max(col):
                raise ValueError(f"top section {name} changes sign on the sample box")

    def check_normalized(self, sampling: Sampling = DEFAULT) -> Report:
        nu = self.require_nu()
        return check("<nu,eta>=1", "<nu, eta> = 1",
                     [ex.sub(pairing(nu, self.eta), ex.ONE)], self.A.vars, sampling)

    def rescaled(self, f_eta=1, f_mu=1, f_nu=1) -> "ModularData":
        return ModularData(
            self.eta * f_eta, self.mu * f_mu, None if self.nu is None else self.nu * f_nu
        )


@dataclass(frozen=True, eq=False)
class ModularForm:
    form: Form | Multivector
    basis: ModularData
    flavor: str  # "plain" or "jacobi"
    report: Report


@dataclass(frozen=True, eq=False)
class ModularField:
    field: Multivector
    kind: str  # "XNP", "Marrero", "PoissonManifold", "JacobiManifold"
    report: Report | None = None


# ---------------------------------------------------------------- helpers


def divergence(mu: Form, components: Sequence[Expr]) -> Expr:
    """div_mu V = top(L_V mu) / top(mu) on the base."""
    TM = mu.parent
    V = Multivector.from_components(TM, components)
    return ex.mul(top_coefficient(lie_derivative(V, mu)), ex.power(top_coefficient(mu), -1))


def _d_log(A: Algebroid, f: Expr) -> Form:
    """d ln|f| = df / f."""
    return differential(A, Form.scalar(A, f)) * ex.power(f, -1)


def _sign_constant(f: Expr, vars: VarSpace, sampling: Sampling) -> bool:
    vals = evaluate_many([f], vars, sampling.sample(vars))[:, 0]
    return bool(np.all(vals > _NONVANISHING) or np.all(vals < -_NONVANISHING))


def _as_section(w: Form, A: Algebroid) -> Multivector:
    """A 1-form of the dual algebroid as a section of A."""
    return Multivector(A, w.degree, w.coeffs)


def _d_sharp(Q: Multivector, h: Expr) -> Multivector:
    """d_Q h = -Q#(dh)."""
    A = Q.parent
    return -sharp(Q, differential(A, Form.scalar(A, h)))


def probe_forms(A: Algebroid, count: int = 5, seed: int = 42, degree: int = 1) -> list[Form]:
    """Deterministic smooth test forms with coefficients of moderate size."""
    rng = np.random.default_rng([seed, 7919])
    names = A.vars.names
    out = []
    for _ in range(count):
        coeffs = {}
        for I in combinations(range(A.rank), degree):
            lin = ex.add(*(ex.mul(round(float(rng.uniform(-1, 1)), 3), ex.var(v)) for v in names),
                         round(float(rng.uniform(-1, 1)), 3))
            kind = int(rng.integers(3))
            c = ex.sin(lin) if kind == 0 else ex.cos(lin) if kind == 1 else ex.add(ex.mul(lin, lin), 0.5)
            coeffs[I] = c
        out.append(Form(A, degree, coeffs))
    return out


# ---------------------------------------------------------------- modular forms


def _modular_coeffs(A: Algebroid, data: ModularData, bracket=None) -> list[Expr]:
    eta, mu = data.eta, data.mu
    inv = ex.power(top_coefficient(eta), -1)
    out = []
    for a in range(A.rank):
        X = A.frame(a)
        br = schouten(X, eta) if bracket is None else bracket(X, eta)
        out.append(ex.add(ex.mul(top_coefficient(br), inv), divergence(mu, A.anchor_of(X))))
    return out


def modular_form(A: Algebroid, data: ModularData, sampling: Sampling = DEFAULT) -> ModularForm:
    """<xi, X> eta (x) mu = L_X eta (x) mu + eta (x) L_{rho X} mu."""
    if data.eta.parent is not A:
        raise ValueError("eta does not live on A")
    data.check_nonvanishing(sampling)
    xi = Form.from_components(A, _modular_coeffs(A, data))
    rep = check_cocycle(A, xi, sampling).renamed("modular-cocycle")
    return ModularForm(xi, data, "plain", rep)


def check_change_of_section(A: Algebroid, data: ModularData, f: Expr,
                            sampling: Sampling = DEFAULT, on: str = "eta") -> Report:
    """xi' - xi - d ln|f| = 0 when eta (x) mu is rescaled by f."""
    if not _sign_constant(f, A.vars, sampling):
        raise ValueError("rescaling function changes sign or vanishes on the sample box")
    new = data.rescaled(f_eta=f) if on == "eta" else data.rescaled(f_mu=f)
    xi = modular_form(A, data, sampling).form
    xi2 = modular_form(A, new, sampling).form
    return check("change-of-section", "xi' = xi + d ln|f|",
                 (xi2 - xi - _d_log(A, f)).exprs(), A.vars, sampling)


def _D(J: JacobiAlgebroid, data: ModularData, X: Multivector, g: Expr) -> Expr:
    """D^phi0_X (g eta (x) mu), as the coefficient of eta (x) mu."""
    eta = data.eta
    br = sj_bracket(J, X, eta * g)
    return ex.add(
        ex.mul(top_coefficient(br), ex.power(top_coefficient(eta), -1)),
        ex.mul(g, divergence(data.mu, J.A.anchor_of(X))),
    )


def jacobi_modular_form(J: JacobiAlgebroid, data: ModularData, sampling: Sampling = DEFAULT,
                        exact_primitive: Expr | None = None, extended: bool = True) -> ModularForm:
    """xi^phi0 = xi - (n-1) phi0, with the flatness of D^phi0 and optional
    comparisons against the extension and against an exact phi0."""
    A = J.A
    n = A.rank
    plain = modular_form(A, data, sampling)
    xi_phi = plain.form - J.phi0 * (n - 1)
    direct = Form.from_components(A, _modular_coeffs(A, data, lambda X, e: sj_bracket(J, X, e)))
    parts = [
        plain.report,
        check_cocycle(A, xi_phi, sampling).renamed("jacobi-modular-cocycle"),
        check("D^phi-form", "D^phi0 = D - (n-1) phi0", (direct - xi_phi).exprs(), A.vars, sampling),
    ]
    flat = []
    g = ex.add(ex.cos(ex.var(A.vars.names[0])), 2)
    for i, j in combinations(range(n), 2):
        X, Y = A.frame(i), A.frame(j)
        XY = schouten(X, Y)
        for s in (ex.ONE, g):
            lhs = ex.sub(_D(J, data, X, _D(J, data, Y, s)), _D(J, data, Y, _D(J, data, X, s)))
            flat.append(ex.sub(lhs, _D(J, data, XY, s)))
    parts.append(check("D^phi-flatness", "D_X D_Y - D_Y D_X = D_[X,Y]", flat, A.vars, sampling))
    if exact_primitive is not None:
        dg = differential(A, Form.scalar(A, exact_primitive))
        parts.append(check("phi0-exact", "phi0 = d g", (J.phi0 - dg).exprs(), A.vars, sampling))
        parts.append(check("class-coincidence", "xi^phi0 - xi = -(n-1) d g",
                           (xi_phi - plain.form + dg * (n - 1)).exprs(), A.vars, sampling))
    if extended:
        E = extend(J)
        t = E.t
        hat_data = ModularData(
            E.lift(data.eta) * ex.exp(ex.mul(-(n - 1), t)),
            _wedge_dt(data.mu, E.hatA.vars),
        )
        xi_hat = Form.from_components(E.hatA, _modular_coeffs(E.hatA, hat_data))
        parts.append(check("extended-modular", "xi_hat wrt (eta~, mu^dt) = xi^phi0",
                           (xi_hat - E.lift(xi_phi)).exprs(), E.hatA.vars, sampling))
        hat_plain = ModularData(E.lift(data.eta), hat_data.mu)
        xi_hat0 = Form.from_components(E.hatA, _modular_coeffs(E.hatA, hat_plain))
        parts.append(check("extended-modular-ungauged", "xi_hat wrt (eta, mu^dt) = xi",
                           (xi_hat0 - E.lift(plain.form)).exprs(), E.hatA.vars, sampling))
    return ModularForm(xi_phi, data, "jacobi", combine("jacobi-modular", "modular form of (A, phi0)", parts))


def _wedge_dt(mu: Form, vars: VarSpace) -> Form:
    """mu ^ dt on the tangent algebroid of M x R (t is the last coordinate)."""
    T = tangent_algebroid(vars)
    m = mu.parent.rank
    return Form(T, m + 1, {tuple(range(m + 1)): top_coefficient(mu)})


# ---------------------------------------------------------------- dual side


def _dual_xi(T: TriangularJB, data: ModularData, dual: Algebroid | None = None) -> Multivector:
    dual = dual or T.dual
    nu = data.require_nu()
    dd = ModularData(to_dual(nu, dual), data.mu)
    return _as_section(Form.from_components(dual, _modular_coeffs(dual, dd)), T.A)


def dual_modular_form(T: TriangularJB, data: ModularData, sampling: Sampling = DEFAULT,
                      extended: bool = True) -> ModularForm:
    """xi_{A*} (a section of A) together with xi^{X0}_{A*} = xi_{A*} - (n-1) X0.

    The two relations with the dual of the extension are checked:
    xi_{A*} = e^t xi_{A^*} wrt (e^{nt} nu, mu^dt) and
    xi^{X0}_{A*} = e^t xi_{A^*} wrt (nu, mu^dt) + X0.
    """
    A = T.A
    n = A.rank
    nu = data.require_nu()
    data.check_nonvanishing(sampling)
    xi = _dual_xi(T, data)
    xi_X0 = xi - T.X0 * (n - 1)
    parts = [
        check("dual-modular-cocycle", "d_* xi_{A*} = 0",
              differential(T.dual, Form(T.dual, 1, xi.coeffs)).exprs(), A.vars, sampling)
    ]
    if extended:
        E = extend(T.J)
        hat = build_dual_algebroid(JacobiAlgebroid.untwisted(E.hatA), gauge_mv(E, T.P),
                                   sampling, verify=False)
        mu_t = _wedge_dt(data.mu, E.hatA.vars)
        et = ex.exp(E.t)
        gauged = ModularData(to_dual(gauge_form(E, nu), hat.dual), mu_t)
        xi_hat = Form.from_components(hat.dual, _modular_coeffs(hat.dual, gauged))
        parts.append(check("dual-extended", "xi_{A*} = e^t xi_{A^*}(nu^)",
                           [ex.sub(ex.mul(et, c), d) for c, d in
                            zip(xi_hat.components(), E.lift(xi).components())],
                           E.hatA.vars, sampling))
        plain = ModularData(to_dual(E.lift(nu), hat.dual), mu_t)
        xi_hat2 = Form.from_components(hat.dual, _modular_coeffs(hat.dual, plain))
        parts.append(check("dual-extended-X0", "xi^{X0}_{A*} = e^t xi_{A^*}(nu) + X0",
                           [ex.sub(ex.add(ex.mul(et, c), x0), d) for c, x0, d in
                            zip(xi_hat2.components(), E.lift(T.X0).components(),
                                E.lift(xi_X0).components())],
                           E.hatA.vars, sampling))
    return ModularForm(xi, data, "plain", combine("dual-modular", "modular form of A*", parts))


# ---------------------------------------------------------------- Jacobi-Nijenhuis


def _xnp_pieces(JN: JNAlgebroid, data: ModularData):
    T, N = JN.T, JN.N
    A = T.A
    n = A.rank
    xi = _dual_xi(T, data)
    deformed = deform(T.dual, N.transpose(T.dual), verify=False)
    xi_N = _dual_xi(T, data, deformed)
    X = xi_N - N.apply(xi)
    X1 = N.apply(T.X0)
    X_twisted = (xi_N - X1 * (n - 1)) - N.apply(xi - T.X0 * (n - 1))
    return X, X_twisted


def xnp_field(JN: JNAlgebroid, data: ModularData, sampling: Sampling = DEFAULT) -> ModularField:
    """X_(N,P) = xi_{A*_{N*}} - N xi_{A*}, checked against d_P(tr N) = -P#(d tr N)."""
    A = JN.T.A
    data.check_nonvanishing(sampling)
    X, X_twisted = _xnp_pieces(JN, data)
    dP = _d_sharp(JN.P, JN.N.trace())
    parts = [
        check("xnp-twisted", "xi^{X1}_{A*N*} - N xi^{X0}_{A*} = X_(N,P)",
              (X_twisted - X).exprs(), A.vars, sampling),
        check("xnp=d_P(trN)", "X_(N,P) = -P#(d tr N)", (X - dP).exprs(), A.vars, sampling),
    ]
    x = ex.var(A.vars.names[0])
    for k, (fe, fm, fn) in enumerate(_rescalings(x)):
        X2, _ = _xnp_pieces(JN, data.rescaled(f_eta=fe, f_mu=fm, f_nu=fn))
        parts.append(check(f"xnp-rescale-{k}", "X_(N,P) independent of nu, mu",
                           (X2 - X).exprs(), A.vars, sampling))
    return ModularField(X, "XNP", combine("xnp", "modular vector field of (A, phi0, P, N)", parts))


def _rescalings(x: Expr):
    return [
        (1, ex.add(ex.sin(x), 2), ex.exp(x)),
        (1, ex.exp(ex.mul(-0.5, x)), 1),
        (1, 3, ex.add(ex.mul(x, x), 1)),
    ]


def hamiltonians(N: Endo, i: int, sampling: Sampling = DEFAULT) -> Expr:
    """h_0 = ln det N, h_i = tr(N^i) / i."""
    A = N.parent
    if i == 0:
        d = N.det()
        if not _sign_constant(d, A.vars, sampling):
            raise ValueError("h_0 needs a non-degenerate N (det N vanishes or changes sign)")
        vals = evaluate_many([d], A.vars, sampling.sample(A.vars))[:, 0]
        return ex.ln(d if vals[0] > 0 else ex.neg(d))
    if i < 0:
        d = N.det()
        if not _sign_constant(d, A.vars, sampling):
            raise ValueError("negative powers need a non-degenerate N")
    return ex.simplify_basic(ex.mul(ex.power(ex.const(i), -1), N.power(i).trace()))


def _np_power(JN: JNAlgebroid, i: int) -> Multivector:
    if i >= 0:
        return JN.bivector(i)
    return np_bivector(JN.N.power(i), JN.P, verify=False)


def field_hierarchy(JN: JNAlgebroid, data: ModularData, levels: Iterable[int] = (2, 3),
                    sampling: Sampling = DEFAULT, X: Multivector | None = None):
    """For each level l and i + j = l (0 <= i <= j): N^{l-1} X_(N,P), d_{N^i P} h_j and
    d_{N^j P} h_i.  Pairs needing h_0 are skipped when N is degenerate."""
    A = JN.T.A
    if X is None:
        X, _ = _xnp_pieces(JN, data)
    out = {}
    parts = []
    for lvl in levels:
        if lvl < 1:
            raise ValueError("levels start at 1")
        base = JN.power(lvl - 1).apply(X)
        out[lvl] = base
        for i in range(0, lvl // 2 + 1):
            j = lvl - i
            try:
                hj, hi = hamiltonians(JN.N, j, sampling), hamiltonians(JN.N, i, sampling)
            except ValueError:
                continue
            a = _d_sharp(_np_power(JN, i), hj)
            b = _d_sharp(_np_power(JN, j), hi)
            parts.append(check(f"level{lvl}:N^{lvl - 1}X=d_N^{i}P(h{j})", "N^{i+j-1} X = d_{N^i P} h_j",
                               (base - a).exprs(), A.vars, sampling))
            parts.append(check(f"level{lvl}:d_N^{i}P(h{j})=d_N^{j}P(h{i})", "d_{N^i P} h_j = d_{N^j P} h_i",
                               (a - b).exprs(), A.vars, sampling))
    return out, combine("field-hierarchy", "hierarchy of modular vector fields", parts)


def covered_fields(JN: JNAlgebroid, data: ModularData, levels: Iterable[int] = (2, 3),
                   sampling: Sampling = DEFAULT):
    """Fields on M and on TM x R covered by the hierarchy."""
    T = JN.T
    A = T.A
    fields, rep = field_hierarchy(JN, data, levels, sampling)
    TM = tangent_algebroid(A.vars)
    Tt = tangent_algebroid(A.vars.extended())
    on_M, on_MR = {}, {}
    parts = [rep]
    for lvl, X in fields.items():
        XM = A.anchor_of(X)
        on_M[lvl] = Multivector.from_components(TM, XM)
        i, j = 0, lvl
        Ti = TriangularJB(T.J, _np_power(JN, i), T.dual, T.X0)
        pair = induced_base_jacobi(Ti, TM)
        hj = hamiltonians(JN.N, j, sampling)
        dh = differential(TM, Form.scalar(TM, hj))
        cov = -sharp(pair.P_M, dh)
        parts.append(check(f"level{lvl}:rho(X)=-(N^iP)_M#dh_j", "X_M = -(N^i P)_M# (dh_j)",
                           [ex.sub(a, b) for a, b in zip(XM, cov.components())], A.vars, sampling))
        t_comp = pairing(dh, pair.E_M)
        Y = Multivector.from_components(Tt, list(XM) + [t_comp])
        on_MR[lvl] = Y
        phi_X = pairing(T.phi0, X)
        parts.append(check(f"level{lvl}:<phi0,X>=<dh_j,E_M>", "<phi0, X> = <dh_j, E_M^i>",
                           [ex.sub(phi_X, t_comp)], A.vars, sampling))
    return (on_M, on_MR), combine("covered-fields", "hierarchies on M and TM x R", parts)


# ---------------------------------------------------------------- Marrero field


def _marrero(T: TriangularJB, data: ModularData, xi: Multivector | None = None) -> Multivector:
    A = T.A
    xi = xi if xi is not None else _dual_xi(T, data)
    comps = []
    for a in range(A.rank):
        alpha = A.coframe(a)
        comps.append(ex.add(
            pairing(alpha, xi),
            pairing(alpha, T.X0),
            top_or_zero(contract_mv(T.P, differential(A, alpha))),
            ex.neg(divergence(data.mu, A.anchor_of(sharp(T.P, alpha)))),
        ))
    return Multivector.from_components(A, comps)


def top_or_zero(w: Form) -> Expr:
    """The scalar of a degree-0 form."""
    return w.coeffs.get((), ex.ZERO)


def marrero_field(T: TriangularJB, data: ModularData, sampling: Sampling = DEFAULT) -> ModularField:
    """M(a) = xi_{A*}(a) + X0(a) + i_P da - div_mu(rho P# a), with the gauge
    relations on the extension checked on every coframe element."""
    A = T.A
    n = A.rank
    nu = data.require_nu()
    data.check_nonvanishing(sampling)
    M = _marrero(T, data)
    E = extend(T.J)
    Pt = gauge_mv(E, T.P)
    nu_hat = gauge_form(E, nu)
    inv_top = ex.power(top_coefficient(nu_hat), -1)
    hat = build_dual_algebroid(JacobiAlgebroid.untwisted(E.hatA), Pt, sampling, verify=False)
    emt = ex.exp(ex.neg(E.t))
    gauge, gen = [], []
    for a in range(n):
        alpha = E.hatA.coframe(a)
        Xa = ex.mul(ex.neg(top_coefficient(wedge(alpha, differential(E.hatA, contract_mv(Pt, nu_hat))))),
                    inv_top)
        gauge.append(ex.sub(Xa, ex.mul(emt, M.coeffs.get((a,), ex.ZERO))))
        br = schouten(to_dual(alpha, hat.dual), to_dual(nu_hat, hat.dual))
        ipda = top_or_zero(contract_mv(T.P, differential(A, A.coframe(a))))
        gen.append(ex.sub(Xa, ex.add(ex.mul(top_coefficient(br), inv_top), ex.mul(emt, ipda))))
    parts = [
        check("marrero-gauge", "X^(a) = e^{-t} M(a)", gauge, E.hatA.vars, sampling),
        check("marrero-generator", "X^(a) nu^ = [a, nu^]_{P~} + e^{-t} (i_P da) nu^", gen,
              E.hatA.vars, sampling),
    ]
    return ModularField(M, "Marrero", combine("marrero", "modular field of (A, phi0, P)", parts))


def mnp_relation(JN: JNAlgebroid, data: ModularData, sampling: Sampling = DEFAULT) -> Report:
    """<a, M_(N,P)> = <a, X_(N,P)> + i_P d_N a - i_P d N* a on the coframe."""
    T, N = JN.T, JN.N
    A = T.A
    data.check_nonvanishing(sampling)
    X, _ = _xnp_pieces(JN, data)
    D = JN.deformed
    TN = build_dual_algebroid(D, T.P.on(D.A), sampling, verify=False)

    def mnp(d: ModularData) -> Multivector:
        M0 = _marrero(T, d)
        dN = ModularData(d.eta.on(D.A), d.mu, d.nu.on(D.A))
        M1 = _marrero(TN, dN).on(A)
        return M1 - N.apply(M0)

    M = mnp(data)
    rel, ipn = [], []
    for a in range(A.rank):
        alpha = A.coframe(a)
        i_dN = top_or_zero(contract_mv(T.P.on(D.A), differential(D.A, alpha.on(D.A))))
        i_dNs = top_or_zero(contract_mv(T.P, differential(A, N.transpose_apply(alpha))))
        rel.append(ex.sub(pairing(alpha, M), ex.add(pairing(alpha, X), i_dN, ex.neg(i_dNs))))
        # i_P d_N = 2 i_NP d - i_P d N*, from d_N = i_N d - d i_N
        i_NP = top_or_zero(contract_mv(JN.NP, differential(A, alpha)))
        ipn.append(ex.sub(i_dN, ex.sub(ex.mul(2, i_NP), i_dNs)))
    x = ex.var(A.vars.names[0])
    M2 = mnp(data.rescaled(f_nu=ex.add(ex.cos(x), 2)))
    parts = [
        check("mnp-relation", "<a,M_(N,P)> = <a,X_(N,P)> + i_P d_N a - i_P d N*a", rel, A.vars, sampling),
        check("i_P d_N", "i_P d_N a = 2 i_NP d a - i_P d N*a", ipn, A.vars, sampling),
        check("mnp-nu-independent", "M_(N,P) independent of nu", (M2 - M).exprs(), A.vars, sampling),
    ]
    return combine("mnp", "M_(N,P) against X_(N,P)", parts)


# ---------------------------------------------------------------- duality


def duality_battery(T: TriangularJB, data: ModularData, sampling: Sampling = DEFAULT,
                    probes: int = 5) -> Report:
    """Duality between the modular forms of A and A* (see module docstring)."""
    A = T.A
    n = A.rank
    nu, eta = data.require_nu(), data.eta
    norm = data.check_normalized(sampling)
    if not norm.passed:
        raise ValueError("top sections are not normalized: <nu, eta> != 1")
    data.check_nonvanishing(sampling)
    xi_A = modular_form(A, data, sampling).form
    xi_phi = xi_A - T.phi0 * (n - 1)
    xi_dual = _dual_xi(T, data)
    xi_dual_X0 = xi_dual - T.X0 * (n - 1)
    M = _marrero(T, data, xi_dual)
    di_P_nu = differential(A, contract_mv(T.P, nu))
    alphas = [A.coframe(a) for a in range(A.rank)] + probe_forms(A, probes, sampling.seed)

    def corr(alpha: Form) -> Expr:
        return ex.mul(2, pairing(wedge(alpha, di_P_nu), eta))

    v1, v2, v3 = [], [], []
    for alpha in alphas:
        aX0 = pairing(alpha, T.X0)
        lhs = pairing(alpha, sharp(T.P, xi_A))
        lhs_phi = pairing(alpha, sharp(T.P, xi_phi))
        v1.append(ex.add(lhs, pairing(alpha, xi_dual_X0), aX0, corr(alpha)))
        v2.append(ex.add(lhs, pairing(alpha, xi_dual), ex.mul(-(n - 2), aX0), corr(alpha)))
        v3.append(ex.add(lhs_phi, pairing(alpha, xi_dual_X0), ex.mul(-(n - 2), aX0), corr(alpha)))
    phi_slot = ex.sub(pairing(T.phi0, xi_dual),
                      ex.sub(pairing(T.phi0, M), divergence(data.mu, A.anchor_of(T.X0))))
    parts = [
        norm,
        check("jacobi-duality", "P#xi_A(a) = -xi^{X0}_{A*}(a) - <a,X0> - 2<a^d i_P nu, eta>",
              v1, A.vars, sampling),
        check("jacobi-duality-(n-2)", "P#xi_A(a) = -xi_{A*}(a) + (n-2)<a,X0> - 2<a^d i_P nu, eta>",
              v2, A.vars, sampling),
        check("jacobi-duality-phi0", "P#xi^phi0_A(a) = -xi^{X0}_{A*}(a) + (n-2)<a,X0> - 2<a^d i_P nu, eta>",
              v3, A.vars, sampling),
        check("phi0-slot", "xi_{A*}(phi0) = M(phi0) - div_mu rho(X0)", [phi_slot], A.vars, sampling),
    ]
    parts.extend(_poisson_side_duality(T, data, alphas, sampling))
    return combine("duality", "duality of modular classes of A and A*", parts)


def _poisson_side_duality(T: TriangularJB, data: ModularData, alphas, sampling: Sampling):
    """Lie-derivative lemma and triangular duality for (A^, P~)."""
    E = extend(T.J)
    H = E.hatA
    Pt = gauge_mv(E, T.P)
    hat = build_dual_algebroid(JacobiAlgebroid.untwisted(H), Pt, sampling, verify=False)
    nu, eta = E.lift(data.require_nu()), E.lift(data.eta)
    mu_t = _wedge_dt(data.mu, H.vars)
    hd = ModularData(eta, mu_t, nu)
    xi_hat = Form.from_components(H, _modular_coeffs(H, hd))
    xi_hat_dual = _as_section(
        Form.from_components(hat.dual, _modular_coeffs(hat.dual, ModularData(to_dual(nu, hat.dual), mu_t))), H
    )
    di = differential(H, contract_mv(Pt, nu))
    lem1, lem2, tres = [], [], []
    t = E.t
    hat_alphas = [E.lift(a) for a in alphas] + [E.lift(alphas[-1]) * ex.exp(ex.mul(0.5, t))]
    for alpha in hat_alphas:
        lie = lie_derivative(sharp(Pt, alpha), nu)
        br = Form(H, nu.degree, schouten(to_dual(alpha, hat.dual), to_dual(nu, hat.dual)).coeffs)
        ipda = top_or_zero(contract_mv(Pt, differential(H, alpha)))
        lem1.extend((lie - br - nu * ex.mul(2, ipda)).exprs())
        lem2.extend((lie + br + wedge(alpha, di) * 2).exprs())
        tres.append(ex.add(pairing(alpha, sharp(Pt, xi_hat)), pairing(alpha, xi_hat_dual),
                           ex.mul(2, pairing(wedge(alpha, di), eta))))
    vars = H.vars
    return [
        check("lie-lemma", "L_{P#a} nu = [a,nu]_P + 2 i_P(da) nu", lem1, vars, sampling),
        check("lie-lemma-2", "L_{P#a} nu = -[a,nu]_P - 2 a ^ d i_P nu", lem2, vars, sampling),
        check("triangular-duality", "P#xi_A(a) = -xi_{A*}(a) - 2<a ^ d i_P nu, eta>", tres, vars, sampling),
    ]


# ---------------------------------------------------------------- manifolds


def poisson_modular_field(Pi: Multivector, mu: Form, sampling: Sampling = DEFAULT,
                          verify: bool = True) -> ModularField:
    """X(f) = div_mu(Pi# df) on the coordinate frame."""
    TM = Pi.parent
    if verify:
        rep = check("poisson", "[Pi,Pi] = 0", schouten(Pi, Pi).exprs(), TM.vars, sampling)
        if not rep.passed:
            raise ValueError(f"bivector is not Poisson (residual {rep.residual:.3e})")
    comps = [divergence(mu, sharp(Pi, TM.coframe(v)).components()) for v in range(TM.rank)]
    return ModularField(Multivector.from_components(TM, comps), "PoissonManifold")


def jacobi_manifold_modular_field(pair: BaseJacobiPair, mu: Form,
                                  sampling: Sampling = DEFAULT) -> ModularField:
    """V = e^t X^{T(M x R)} for Pi = e^{-t}(P_M + d/dt ^ E_M) and mu ^ dt."""
    TM = pair.TM
    m = TM.rank
    vars = TM.vars.extended()
    Tt = tangent_algebroid(vars)
    emt = ex.exp(ex.neg(ex.var("t")))
    coeffs = {k: ex.mul(emt, v) for k, v in pair.P_M.coeffs.items()}
    # d/dt ^ E = -sum E^mu d/dx^mu ^ d/dt
    for (mu_i,), c in pair.E_M.coeffs.items():
        coeffs[(mu_i, m)] = ex.neg(ex.mul(emt, c))
    Pi = Multivector(Tt, 2, coeffs)
    X = poisson_modular_field(Pi, _wedge_dt(mu, vars), sampling)
    V = X.field * ex.exp(ex.var("t"))
    return ModularField(V, "JacobiManifold", X.report)


def modular_bridge(T: TriangularJB, data: ModularData, sampling: Sampling = DEFAULT) -> Report:
    """rho(xi_{A*}) = rho(M) + V^{(P_M,E_M)} + div_mu rho(X0) d/dt on M x R,
    together with the version on the extension before t is separated."""
    A = T.A
    m = A.base_dim
    xi = _dual_xi(T, data)
    M = _marrero(T, data, xi)
    pair = induced_base_jacobi(T)
    V = jacobi_manifold_modular_field(pair, data.mu, sampling).field
    lhs = list(A.anchor_of(xi)) + [ex.ZERO]
    rM = list(A.anchor_of(M)) + [ex.ZERO]
    div = divergence(data.mu, A.anchor_of(T.X0))
    Vc = V.components()
    rhs = [ex.add(rM[k], Vc[k]) for k in range(m)] + [ex.add(Vc[m], div)]
    vars = A.vars.extended()
    # rho^(xi) + <phi0,xi> d/dt = rho(M) + <phi0,M> d/dt + e^t X^T
    full_l = list(A.anchor_of(xi)) + [pairing(T.phi0, xi)]
    full_r = [ex.add(rM[k], Vc[k]) for k in range(m)] + [ex.add(pairing(T.phi0, M), Vc[m])]
    return combine("bridge", "modular fields of A*, of (A,phi0,P) and of the base Jacobi manifold", [
        check("bridge", "rho(xi_{A*}) = rho(M) + V + div_mu rho(X0) d/dt",
              [ex.sub(a, b) for a, b in zip(lhs, rhs)], vars, sampling),
        check("bridge-extended", "rho^(xi_{A^*}) = rho^(X^) + X^{T(M x R)}",
              [ex.sub(a, b) for a, b in zip(full_l, full_r)], vars, sampling),
    ])
