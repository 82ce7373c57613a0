"""Nijenhuis operators on algebroids and Jacobi-Nijenhuis compatibility.

An endomorphism N is stored by its matrix on the frame, N(e_j) = sum_i
N[i][j] e_i; its transpose acts on the coframe.  The bivector NP is the
one with (NP)# = N o P#.
"""
from __future__ import annotations

from functools import cached_property
from itertools import combinations, permutations
from typing import Sequence

from . import expr as ex
from .algebroid import (
    Algebroid,
    Form,
    Multivector,
    ParentMismatch,
    differential,
    schouten,
    tangent_algebroid,
    validate_algebroid,
)
from .jacobi import (
    BaseJacobiPair,
    JacobiAlgebroid,
    TriangularJB,
    build_dual_algebroid,
    check_base_compatibility,
    check_cocycle,
    dual_bracket_of,
    induced_base_jacobi,
    sj_bracket,
)
from .sampling import DEFAULT, Report, Sampling, check, combine

__all__ = [
    "Endo",
    "JNAlgebroid",
    "TorsionError",
    "NotAntisymmetric",
    "torsion",
    "deformed_bracket",
    "check_torsion",
    "deform",
    "deform_jacobi",
    "pull_cocycle",
    "np_bivector",
    "concomitant",
    "deformed_dual_bracket",
    "strong_concomitant",
    "is_compatible",
    "check_poisson_transfer",
    "bivector_hierarchy",
    "base_hierarchy",
    "dual_hierarchy",
]


class TorsionError(ValueError):
    def __init__(self, report: Report):
        super().__init__(f"Nijenhuis torsion does not vanish (residual {report.residual:.3e})")
        self.report = report


class NotAntisymmetric(ValueError):
    def __init__(self, report: Report):
        super().__init__(f"NP is not antisymmetric (residual {report.residual:.3e})")
        self.report = report


class Endo:
    """Bundle endomorphism of an algebroid, given on the frame."""

    __slots__ = ("parent", "matrix")

    def __init__(self, parent: Algebroid, matrix: Sequence[Sequence]):
        n = parent.rank
        if len(matrix) != n or any(len(r) != n for r in matrix):
            raise ValueError(f"endomorphism matrix must be {n}x{n}")
        self.parent = parent
        self.matrix = tuple(tuple(ex.as_expr(v) for v in row) for row in matrix)

    @classmethod
    def identity(cls, parent: Algebroid) -> "Endo":
        return cls.scalar(parent, ex.ONE)

    @classmethod
    def scalar(cls, parent: Algebroid, f) -> "Endo":
        n = parent.rank
        f = ex.as_expr(f)
        return cls(parent, [[f if i == j else ex.ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def diag(cls, parent: Algebroid, entries: Sequence) -> "Endo":
        n = parent.rank
        return cls(parent, [[entries[i] if i == j else ex.ZERO for j in range(n)] for i in range(n)])

    def __repr__(self) -> str:
        rows = "; ".join(", ".join(str(v) for v in r) for r in self.matrix)
        return f"Endo([{rows}])"

    @property
    def rank(self) -> int:
        return self.parent.rank

    def on(self, parent: Algebroid) -> "Endo":
        return Endo(parent, self.matrix)

    def transpose(self, parent: Algebroid | None = None) -> "Endo":
        """N* as an endomorphism of ``parent`` (by default the same algebroid)."""
        n = self.rank
        return Endo(parent or self.parent, [[self.matrix[j][i] for j in range(n)] for i in range(n)])

    def apply(self, X: Multivector) -> Multivector:
        if X.degree != 1:
            raise ValueError("N acts on sections")
        if X.parent is not self.parent:
            raise ParentMismatch("section does not live on N's algebroid")
        c = X.components()
        n = self.rank
        return Multivector.from_components(
            X.parent, [ex.add(*(ex.mul(self.matrix[i][j], c[j]) for j in range(n))) for i in range(n)]
        )

    def transpose_apply(self, a: Form) -> Form:
        """(N* a)_j = sum_i N[i][j] a_i."""
        if a.degree != 1:
            raise ValueError("N* acts on 1-forms")
        if a.parent is not self.parent:
            raise ParentMismatch("form does not live on N's algebroid")
        c = a.components()
        n = self.rank
        return Form.from_components(
            a.parent, [ex.add(*(ex.mul(self.matrix[i][j], c[i]) for i in range(n))) for j in range(n)]
        )

    def __matmul__(self, other: "Endo") -> "Endo":
        n = self.rank
        m = [
            [
                ex.simplify_basic(ex.add(*(ex.mul(self.matrix[i][k], other.matrix[k][j]) for k in range(n))))
                for j in range(n)
            ]
            for i in range(n)
        ]
        return Endo(self.parent, m)

    def power(self, k: int) -> "Endo":
        if k < 0:
            return self.inverse().power(-k)
        out = Endo.identity(self.parent)
        for _ in range(k):
            out = self @ out
        return out

    def trace(self) -> ex.Expr:
        return ex.add(*(self.matrix[i][i] for i in range(self.rank)))

    def det(self) -> ex.Expr:
        n = self.rank
        terms = []
        for perm in permutations(range(n)):
            sign = 1
            for i in range(n):
                for j in range(i + 1, n):
                    if perm[i] > perm[j]:
                        sign = -sign
            t = ex.mul(*(self.matrix[i][perm[i]] for i in range(n)))
            terms.append(t if sign > 0 else ex.neg(t))
        return ex.simplify_basic(ex.add(*terms))

    def inverse(self) -> "Endo":
        """Adjugate over determinant; only ranks up to 3 are supported."""
        n = self.rank
        if n > 3:
            raise NotImplementedError("symbolic inverse is limited to rank <= 3")
        d = self.det()
        if d is ex.ZERO:
            raise ZeroDivisionError("endomorphism is singular")
        inv_d = ex.power(d, -1)
        if n == 1:
            return Endo(self.parent, [[inv_d]])
        adj = [[ex.ZERO] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                rows = [r for r in range(n) if r != j]
                cols = [c for c in range(n) if c != i]
                minor = Endo._minor(self.matrix, rows, cols)
                adj[i][j] = minor if (i + j) % 2 == 0 else ex.neg(minor)
        return Endo(self.parent, [[ex.simplify_basic(ex.mul(v, inv_d)) for v in row] for row in adj])

    @staticmethod
    def _minor(m, rows, cols) -> ex.Expr:
        if len(rows) == 1:
            return m[rows[0]][cols[0]]
        (a, b), (c, d) = rows, cols
        return ex.sub(ex.mul(m[a][c], m[b][d]), ex.mul(m[a][d], m[b][c]))


# ---------------------------------------------------------------- torsion / deformation


def deformed_bracket(N: Endo, X: Multivector, Y: Multivector) -> Multivector:
    """[X,Y]_N = [NX,Y] + [X,NY] - N[X,Y]."""
    return schouten(N.apply(X), Y) + schouten(X, N.apply(Y)) - N.apply(schouten(X, Y))


def torsion(N: Endo, X: Multivector, Y: Multivector) -> Multivector:
    """T_N(X,Y) = [NX,NY] - N[X,Y]_N."""
    return schouten(N.apply(X), N.apply(Y)) - N.apply(deformed_bracket(N, X, Y))


def check_torsion(N: Endo, sampling: Sampling = DEFAULT) -> Report:
    A = N.parent
    exprs = []
    for i, j in combinations(range(A.rank), 2):
        exprs.extend(torsion(N, A.frame(i), A.frame(j)).exprs())
    return check("torsion", "T_N(e_i,e_j) = 0", exprs, A.vars, sampling)


def deform(A: Algebroid, N: Endo, sampling: Sampling = DEFAULT, verify: bool = True) -> Algebroid:
    """A_N with bracket [,]_N and anchor rho o N."""
    if N.parent is not A:
        raise ParentMismatch("N does not act on A")
    if verify:
        rep = check_torsion(N, sampling)
        if not rep.passed:
            raise TorsionError(rep)
    n = A.rank
    anchor = [A.anchor_of(N.apply(A.frame(a))) for a in range(n)]
    structure = {}
    for i, j in combinations(range(n), 2):
        for (k,), c in deformed_bracket(N, A.frame(i), A.frame(j)).coeffs.items():
            structure[(k, i, j)] = c
            structure[(k, j, i)] = ex.neg(c)
    return Algebroid(A.vars, anchor, structure, name=f"{A.name}_N")


def deform_jacobi(J: JacobiAlgebroid, N: Endo, sampling: Sampling = DEFAULT, verify: bool = True):
    """(A_N, N* phi0)."""
    AN = deform(J.A, N, sampling, verify)
    return JacobiAlgebroid(AN, N.transpose_apply(J.phi0).on(AN))


def pull_cocycle(N: Endo, J: JacobiAlgebroid, sampling: Sampling = DEFAULT) -> Form:
    """phi1 = N* phi0, a 1-cocycle of A_N (returned as a form on A_N)."""
    JN = deform_jacobi(J, N, sampling)
    rep = check_cocycle(JN.A, JN.phi0, sampling)
    if not rep.passed:
        raise ArithmeticError(f"N* phi0 is not closed on A_N (residual {rep.residual:.3e})")
    return JN.phi0


# ---------------------------------------------------------------- NP and compatibility


def _np_matrix(N: Endo, P: Multivector):
    n = N.rank
    return [
        [ex.add(*(ex.mul(N.matrix[k][j], P.coeff((i, j))) for j in range(n))) for k in range(n)]
        for i in range(n)
    ]


def np_antisymmetry(N: Endo, P: Multivector, sampling: Sampling = DEFAULT) -> Report:
    m = _np_matrix(N, P)
    n = N.rank
    exprs = [ex.add(m[i][k], m[k][i]) for i in range(n) for k in range(i, n)]
    return check("np-antisymmetry", "N P# = P# N*", exprs, N.parent.vars, sampling)


def np_bivector(N: Endo, P: Multivector, sampling: Sampling = DEFAULT, verify: bool = True) -> Multivector:
    """NP with (NP)(a, b) = <b, N P# a>."""
    if P.degree != 2:
        raise ValueError("P must be a bivector")
    if P.parent is not N.parent:
        raise ParentMismatch("P and N live on different algebroids")
    if verify:
        rep = np_antisymmetry(N, P, sampling)
        if not rep.passed:
            raise NotAntisymmetric(rep)
    m = _np_matrix(N, P)
    n = N.rank
    return Multivector(
        P.parent, 2, {(i, k): ex.simplify_basic(m[i][k]) for i, k in combinations(range(n), 2)}
    )


class JNAlgebroid:
    """(A, phi0, P, N); derived objects are computed on first use."""

    def __init__(self, T: TriangularJB, N: Endo, sampling: Sampling = DEFAULT):
        if N.parent is not T.A:
            raise ParentMismatch("N does not act on A")
        self.T = T
        self.N = N
        self.sampling = sampling

    @property
    def J(self) -> JacobiAlgebroid:
        return self.T.J

    @property
    def P(self) -> Multivector:
        return self.T.P

    @cached_property
    def NP(self) -> Multivector:
        return np_bivector(self.N, self.P, self.sampling)

    @cached_property
    def deformed(self) -> JacobiAlgebroid:
        return deform_jacobi(self.J, self.N, self.sampling, verify=False)

    def power(self, k: int) -> Endo:
        return self._powers(k)[k]

    def _powers(self, k: int) -> list[Endo]:
        cache = self.__dict__.setdefault("_pow", [Endo.identity(self.T.A)])
        while len(cache) <= k:
            cache.append(self.N @ cache[-1])
        return cache

    def bivector(self, k: int) -> Multivector:
        """N^k P."""
        cache = self.__dict__.setdefault("_biv", [self.P])
        while len(cache) <= k:
            cache.append(np_bivector(self.N, cache[-1], self.sampling))
        return cache[k]

    def phi(self, k: int) -> Form:
        """phi_k = N*^k phi0 as a form on A."""
        return self.power(k).transpose_apply(self.J.phi0)


def concomitant(T: TriangularJB, N: Endo, alpha: Form, beta: Form,
                sampling: Sampling = DEFAULT, JN: JNAlgebroid | None = None) -> Form:
    """[a,b]_{NP} - [a,b]^N_P."""
    JN = JN or JNAlgebroid(T, N, sampling)
    b1 = dual_bracket_of(T.J, JN.NP, alpha, beta)
    D = JN.deformed
    b2 = dual_bracket_of(D, T.P.on(D.A), alpha.on(D.A), beta.on(D.A))
    return b1 - b2.on(T.A)


def deformed_dual_bracket(T: TriangularJB, N: Endo, alpha: Form, beta: Form) -> Form:
    """Bracket of (A*_P)_{N*}: [N*a,b]_P + [a,N*b]_P - N*[a,b]_P."""
    return (
        T.bracket(N.transpose_apply(alpha), beta)
        + T.bracket(alpha, N.transpose_apply(beta))
        - N.transpose_apply(T.bracket(alpha, beta))
    )


def strong_concomitant(T: TriangularJB, N: Endo, alpha: Form, beta: Form,
                       sampling: Sampling = DEFAULT, JN: JNAlgebroid | None = None) -> Form:
    """[a,b]_{NP} - [N*a,b]_P - [a,N*b]_P + N*[a,b]_P."""
    JN = JN or JNAlgebroid(T, N, sampling)
    return dual_bracket_of(T.J, JN.NP, alpha, beta) - deformed_dual_bracket(T, N, alpha, beta)


def is_compatible(T: TriangularJB, N: Endo, sampling: Sampling = DEFAULT) -> Report:
    """Torsion, NP = PN*, vanishing concomitant, and the consequence [NP,P]^phi0 = 0.

    The concomitant is tensorial once NP is antisymmetric, so it is tested
    on coframe pairs and on the pairs (phi0, e^i).
    """
    A = T.A
    parts = [check_torsion(N, sampling), np_antisymmetry(N, T.P, sampling)]
    if parts[1].passed:
        JN = JNAlgebroid(T, N, sampling)
        exprs = []
        for i, j in combinations(range(A.rank), 2):
            exprs.extend(concomitant(T, N, A.coframe(i), A.coframe(j), JN=JN).exprs())
        parts.append(check("concomitant", "C(P,N)(e^i,e^j) = 0", exprs, A.vars, sampling))
        exprs = []
        for i in range(A.rank):
            exprs.extend(concomitant(T, N, T.phi0, A.coframe(i), JN=JN).exprs())
        parts.append(check("concomitant-phi0", "C(P,N)(phi0,e^i) = 0", exprs, A.vars, sampling))
        parts.append(check("[NP,P]^phi0", "[NP,P]^phi0 = 0",
                           sj_bracket(T.J, JN.NP, T.P).exprs(), A.vars, sampling))
    return combine("compatible", "Jacobi-Nijenhuis compatibility of (P, N)", parts)


def check_poisson_transfer(T: TriangularJB, N: Endo, sampling: Sampling = DEFAULT) -> Report:
    """C(P,N)(a,b) = e^t C^(P~,N)(a,b) and C(P,N)(phi0,a) = e^t C^(P~,N)(dt,a)."""
    from .poisson import extend, gauge_mv

    A = T.A
    E = extend(T.J)
    hatJ = JacobiAlgebroid.untwisted(E.hatA)
    That = TriangularJB(hatJ, gauge_mv(E, T.P), E.hatA, Multivector.zero(E.hatA, 1))
    Nhat = N.on(E.hatA)
    JN, JNhat = JNAlgebroid(T, N, sampling), JNAlgebroid(That, Nhat, sampling)
    et = ex.exp(E.t)
    dt = differential(E.hatA, Form.scalar(E.hatA, E.t))
    exprs = []
    for i, j in combinations(range(A.rank), 2):
        a, b = A.coframe(i), A.coframe(j)
        lhs = concomitant(T, N, a, b, JN=JN).on(E.hatA)
        rhs = concomitant(That, Nhat, E.lift(a), E.lift(b), JN=JNhat) * et
        exprs.extend((lhs - rhs).exprs())
    for i in range(A.rank):
        a = A.coframe(i)
        lhs = concomitant(T, N, T.phi0, a, JN=JN).on(E.hatA)
        rhs = concomitant(That, Nhat, dt, E.lift(a), JN=JNhat) * et
        exprs.extend((lhs - rhs).exprs())
    return check("poisson-transfer", "C(P,N) = e^t C^(P~,N)", exprs, E.hatA.vars, sampling)


# ---------------------------------------------------------------- hierarchies


def bivector_hierarchy(JN: JNAlgebroid, kmax: int = 3, sampling: Sampling = DEFAULT):
    """[N^k P for k = 0..kmax] and the report of all [N^i P, N^j P]^phi0."""
    bivs = [JN.bivector(k) for k in range(kmax + 1)]
    parts = []
    for i in range(kmax + 1):
        for j in range(i, kmax + 1):
            parts.append(check(f"[N^{i}P,N^{j}P]^phi0", "[N^i P, N^j P]^phi0 = 0",
                               sj_bracket(JN.J, bivs[i], bivs[j]).exprs(), JN.T.A.vars, sampling))
    return bivs, combine("bivector-hierarchy", "compatible Jacobi bivectors N^k P", parts)


def _pair_of(J: JacobiAlgebroid, P: Multivector, TM: Algebroid | None = None) -> BaseJacobiPair:
    T = TriangularJB(J, P, J.A, Multivector.zero(J.A, 1))
    return induced_base_jacobi(T, TM)


def base_hierarchy(JN: JNAlgebroid, kmax: int = 3, sampling: Sampling = DEFAULT):
    TM = tangent_algebroid(JN.T.A.vars)
    pairs = [_pair_of(JN.J, JN.bivector(k), TM) for k in range(kmax + 1)]
    parts = [p.check(sampling).renamed(f"pair-{k}") for k, p in enumerate(pairs)]
    for i in range(kmax + 1):
        for j in range(i + 1, kmax + 1):
            parts.append(check_base_compatibility(pairs[i], pairs[j], sampling).renamed(f"pairs-{i}-{j}"))
    return pairs, combine("base-hierarchy", "compatible Jacobi structures on the base", parts)


def _same_algebroid(name: str, A: Algebroid, B: Algebroid, sampling: Sampling) -> Report:
    exprs = []
    for a in range(A.rank):
        for mu in range(A.base_dim):
            exprs.append(ex.sub(A.anchor[a][mu], B.anchor[a][mu]))
    for i, j in combinations(range(A.rank), 2):
        for k in range(A.rank):
            exprs.append(ex.sub(A.structure(k, i, j), B.structure(k, i, j)))
    return check(name, "same anchor and structure functions", exprs, A.vars, sampling)


def dual_hierarchy(JN: JNAlgebroid, kmax: int = 2, sampling: Sampling = DEFAULT):
    """Dual algebroids A*_{N^k P} with cocycles X_k = N^k X0, and the
    coincidences the hierarchy theorem predicts."""
    T, N = JN.T, JN.N
    A = T.A
    out = []
    parts = []
    for k in range(kmax + 1):
        Tk = build_dual_algebroid(T.J, JN.bivector(k), sampling, name=f"A*_{k}")
        Xk = JN.power(k).apply(T.X0)
        parts.append(check(f"X_{k}=N^kX0", "X_k = N^k X0", (Tk.X0 - Xk).exprs(), A.vars, sampling))
        parts.append(check(f"X_{k}-cocycle", "d_* X_k = 0",
                           differential(Tk.dual, Form(Tk.dual, 1, Xk.coeffs)).exprs(), A.vars, sampling))
        parts.append(validate_algebroid(Tk.dual, sampling))
        for i in range(1, k + 1):
            Ji = deform_jacobi(T.J, JN.power(k - i), sampling, verify=False)
            Ti = build_dual_algebroid(Ji, JN.bivector(i).on(Ji.A), sampling, verify=False)
            parts.append(_same_algebroid(f"dual({k - i},{i})=A*_{k}", Ti.dual, Tk.dual, sampling))
        if k >= 1:
            Nk_star = JN.power(k).transpose(T.dual)
            deformed = deform(T.dual, Nk_star, sampling, verify=False)
            parts.append(_same_algebroid(f"(A*)_N*^{k}=A*_{k}", deformed, Tk.dual, sampling))
        out.append((Tk.dual, Xk))
    parts.append(check_torsion(N.transpose(T.dual), sampling).renamed("N*-torsion-on-A*"))
    return out, combine("dual-hierarchy", "hierarchy of triangular Jacobi bialgebroids", parts)

