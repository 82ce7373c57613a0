"""Lie algebroids in a chosen frame, and their graded calculus.

An algebroid of rank n over a coordinate patch with coordinates ``vars``
is given by its anchor matrix ``anchor[a][mu]`` (so that
rho(e_a) = sum_mu anchor[a][mu] d/dx^mu) and structure functions
``C[k][i][j]`` with [e_i, e_j] = sum_k C^k_ij e_k.

Multivectors and forms are stored as maps from strictly increasing index
tuples (0-based) to coefficient expressions, with the determinant
convention (e^1 ^ e^2)(e_1, e_2) = 1.  Objects of negative degree, or of
degree above the rank, are legal and always zero.

Sign conventions (all fixed by the test battery):

* interior product by a 1-form puts it in the first slot,
  (i_phi P)(a_1, ..., a_{p-1}) = P(phi, a_1, ..., a_{p-1});
* interior product by a decomposable multivector composes as
  i_{X_1 ^ ... ^ X_p} = i_{X_1} o ... o i_{X_p};
* the Schouten bracket satisfies [X, f] = rho(X) f, graded antisymmetry
  [P, Q] = -(-1)^{(p-1)(q-1)} [Q, P] and the graded Leibniz rule
  [P, Q ^ R] = [P, Q] ^ R + (-1)^{(p-1)q} Q ^ [P, R].
"""
from __future__ import annotations

from collections import defaultdict
from itertools import combinations
from typing import Callable, Iterable, Mapping, Sequence

from . import expr as ex
from .expr import Expr, VarSpace
from .sampling import DEFAULT, Report, Sampling, check, combine

__all__ = [
    "Algebroid",
    "ParentMismatch",
    "Multivector",
    "Form",
    "tangent_algebroid",
    "wedge",
    "contract_form",
    "contract_vector",
    "contract_mv",
    "pairing",
    "differential",
    "schouten",
    "lie_derivative",
    "top_coefficient",
    "sharp",
    "validate_algebroid",
]


class ParentMismatch(ValueError):
    pass


class Algebroid:
    """Coordinate presentation of a Lie algebroid."""

    def __init__(
        self,
        vars: VarSpace | Sequence[str],
        anchor: Sequence[Sequence],
        structure: Mapping[tuple[int, int, int], object] | None = None,
        name: str = "",
    ):
        self.vars = vars if isinstance(vars, VarSpace) else VarSpace(vars)
        self.rank = len(anchor)
        self.base_dim = len(self.vars)
        rows = []
        for a, row in enumerate(anchor):
            if len(row) != self.base_dim:
                raise ValueError(
                    f"anchor row {a} has {len(row)} entries, base dimension is {self.base_dim}"
                )
            rows.append(tuple(ex.as_expr(v) for v in row))
        self.anchor: tuple[tuple[Expr, ...], ...] = tuple(rows)
        n = self.rank
        # C[i][j] = {k: C^k_ij}
        self.C: list[list[dict[int, Expr]]] = [[{} for _ in range(n)] for _ in range(n)]
        for (k, i, j), v in (structure or {}).items():
            if not (0 <= k < n and 0 <= i < n and 0 <= j < n):
                raise ValueError(f"structure index {(k, i, j)} out of range for rank {n}")
            v = ex.as_expr(v)
            if v is not ex.ZERO:
                self.C[i][j][k] = v
        self.name = name
        self._rho: dict[tuple[int, Expr], Expr] = {}

    @classmethod
    def from_upper(cls, vars, anchor, upper: Mapping[tuple[int, int, int], object], name=""):
        """Build from C^k_ij given for i < j, extended antisymmetrically."""
        full: dict[tuple[int, int, int], Expr] = {}
        for (k, i, j), v in upper.items():
            if i == j:
                raise ValueError("diagonal structure functions must vanish")
            if i > j:
                i, j = j, i
                v = ex.neg(ex.as_expr(v))
            full[(k, i, j)] = ex.as_expr(v)
            full[(k, j, i)] = ex.neg(ex.as_expr(v))
        return cls(vars, anchor, full, name=name)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<Algebroid{label} rank={self.rank} base={list(self.vars.names)}>"

    def structure(self, k: int, i: int, j: int) -> Expr:
        return self.C[i][j].get(k, ex.ZERO)

    def structure_items(self):
        for i in range(self.rank):
            for j in range(self.rank):
                for k, v in self.C[i][j].items():
                    yield (k, i, j), v

    def rho(self, a: int, f: Expr) -> Expr:
        """rho(e_a) f."""
        key = (a, f)
        hit = self._rho.get(key)
        if hit is None:
            if f.kind == ex.CONST:
                hit = ex.ZERO
            else:
                names = self.vars.names
                hit = ex.add(
                    *(
                        ex.mul(c, ex.diff(f, names[mu]))
                        for mu, c in enumerate(self.anchor[a])
                        if c is not ex.ZERO and names[mu] in f.fv
                    )
                )
            self._rho[key] = hit
        return hit

    def anchor_of(self, X: "Multivector") -> list[Expr]:
        """Components of the vector field rho(X) on the base."""
        _require_degree(X, 1)
        return [
            ex.add(*(ex.mul(c, self.anchor[idx[0]][mu]) for idx, c in X.coeffs.items()))
            for mu in range(self.base_dim)
        ]

    def with_vars(self, vars: VarSpace, name: str | None = None) -> "Algebroid":
        """Same algebroid regarded over a larger coordinate space (zero columns added)."""
        old = self.vars.names
        rows = []
        for row in self.anchor:
            d = dict(zip(old, row))
            rows.append([d.get(v, ex.ZERO) for v in vars.names])
        return Algebroid(vars, rows, dict(self.structure_items()), name=name or self.name)

    def frame(self, a: int) -> "Multivector":
        return Multivector(self, 1, {(a,): ex.ONE})

    def coframe(self, a: int) -> "Form":
        return Form(self, 1, {(a,): ex.ONE})


def tangent_algebroid(vars: VarSpace | Sequence[str], name: str = "") -> Algebroid:
    """TM in the coordinate frame: identity anchor, vanishing structure."""
    vars = vars if isinstance(vars, VarSpace) else VarSpace(vars)
    m = len(vars)
    anchor = [[ex.ONE if a == mu else ex.ZERO for mu in range(m)] for a in range(m)]
    return Algebroid(vars, anchor, {}, name=name or f"T{list(vars.names)}")


# ---------------------------------------------------------------- index words


def _sort_word(word: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """(sign of the sorting permutation, sorted word); sign 0 on repeats."""
    w = list(word)
    sign = 1
    for i in range(1, len(w)):
        j = i
        while j > 0 and w[j - 1] > w[j]:
            w[j - 1], w[j] = w[j], w[j - 1]
            sign = -sign
            j -= 1
        if j > 0 and w[j - 1] == w[j]:
            return 0, ()
    return sign, tuple(w)


class _Acc:
    __slots__ = ("terms",)

    def __init__(self):
        self.terms: dict[tuple[int, ...], list[Expr]] = defaultdict(list)

    def push(self, word: Sequence[int], sign: int, value: Expr) -> None:
        s, key = _sort_word(word)
        if s == 0 or value is ex.ZERO:
            return
        self.terms[key].append(value if s * sign > 0 else ex.neg(value))

    def push_sorted(self, key: tuple[int, ...], sign: int, value: Expr) -> None:
        if value is ex.ZERO:
            return
        self.terms[key].append(value if sign > 0 else ex.neg(value))

    def build(self) -> dict[tuple[int, ...], Expr]:
        return {k: ex.add(*v) for k, v in self.terms.items()}


# ---------------------------------------------------------------- graded objects


class _Graded:
    """Antisymmetric coefficient array over increasing index tuples."""

    __slots__ = ("parent", "degree", "coeffs")

    def __init__(self, parent: Algebroid, degree: int, coeffs: Mapping | None = None):
        self.parent = parent
        self.degree = degree
        clean: dict[tuple[int, ...], Expr] = {}
        for idx, v in (coeffs or {}).items():
            idx = tuple(idx)
            v = ex.as_expr(v)
            if v is ex.ZERO:
                continue
            if len(idx) != degree or any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError(f"index {idx} is not an increasing {degree}-tuple")
            if idx and not (0 <= idx[0] and idx[-1] < parent.rank):
                raise ValueError(f"index {idx} out of range for rank {parent.rank}")
            clean[idx] = v
        self.coeffs = clean

    @classmethod
    def zero(cls, parent: Algebroid, degree: int):
        return cls(parent, degree, {})

    @classmethod
    def scalar(cls, parent: Algebroid, f):
        return cls(parent, 0, {(): ex.as_expr(f)})

    @classmethod
    def from_components(cls, parent: Algebroid, comps: Sequence):
        """Degree-1 object from a full component list."""
        return cls(parent, 1, {(a,): c for a, c in enumerate(comps)})

    @classmethod
    def from_antisymmetric(cls, parent: Algebroid, degree: int, values: Mapping):
        """From values on arbitrary index words; entries are sorted with sign.

        Both orderings of a word may be given; they must then agree.
        """
        acc: dict[tuple[int, ...], Expr] = {}
        for word, v in values.items():
            s, key = _sort_word(word)
            if s == 0:
                continue
            v = ex.as_expr(v)
            acc.setdefault(key, v if s > 0 else ex.neg(v))
        return cls(parent, degree, acc)

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v}" for k, v in sorted(self.coeffs.items()))
        return f"{type(self).__name__}(deg={self.degree}, {{{body}}})"

    def coeff(self, idx: Sequence[int]) -> Expr:
        s, key = _sort_word(idx)
        if s == 0:
            return ex.ZERO
        v = self.coeffs.get(key, ex.ZERO)
        return v if s > 0 else ex.neg(v)

    def components(self) -> list[Expr]:
        _require_degree(self, 1)
        return [self.coeffs.get((a,), ex.ZERO) for a in range(self.parent.rank)]

    def exprs(self) -> list[Expr]:
        return [self.coeffs[k] for k in sorted(self.coeffs)]

    def on(self, parent: Algebroid):
        """The same coefficients viewed as living on another algebroid."""
        if parent.rank != self.parent.rank:
            raise ValueError("rank mismatch")
        return type(self)(parent, self.degree, self.coeffs)

    def map(self, fn: Callable[[Expr], Expr]):
        return type(self)(self.parent, self.degree, {k: fn(v) for k, v in self.coeffs.items()})

    def _check(self, other) -> None:
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.parent is not self.parent:
            raise ParentMismatch("operands live on different algebroids")
        if other.degree != self.degree:
            raise ValueError(f"degree mismatch {self.degree} vs {other.degree}")

    def __add__(self, other):
        self._check(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return type(self)(
            self.parent,
            self.degree,
            {k: ex.add(self.coeffs.get(k, ex.ZERO), other.coeffs.get(k, ex.ZERO)) for k in keys},
        )

    def __sub__(self, other):
        self._check(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return type(self)(
            self.parent,
            self.degree,
            {k: ex.sub(self.coeffs.get(k, ex.ZERO), other.coeffs.get(k, ex.ZERO)) for k in keys},
        )

    def __neg__(self):
        return self.map(ex.neg)

    def __mul__(self, f):
        f = ex.as_expr(f)
        return self.map(lambda v: ex.mul(f, v))

    __rmul__ = __mul__

    def is_structurally_zero(self) -> bool:
        return not self.coeffs

    def same_as(self, other) -> bool:
        """Coefficient-wise identity after canonical rebuilding (no sampling)."""
        self._check(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(
            ex.simplify_basic(self.coeff(k)) is ex.simplify_basic(other.coeff(k)) for k in keys
        )


class Multivector(_Graded):
    __slots__ = ()


class Form(_Graded):
    __slots__ = ()


def _require_degree(obj: _Graded, degree: int) -> None:
    if obj.degree != degree:
        raise ValueError(f"expected degree {degree}, got {obj.degree}")


def _same_parent(a: _Graded, b: _Graded) -> Algebroid:
    if a.parent is not b.parent:
        raise ParentMismatch("operands live on different algebroids")
    return a.parent


# ---------------------------------------------------------------- algebra


def wedge(a: _Graded, b: _Graded):
    """Exterior product (shuffle signs)."""
    if type(a) is not type(b):
        raise TypeError("wedge needs two multivectors or two forms")
    parent = _same_parent(a, b)
    deg = a.degree + b.degree
    if a.degree < 0 or b.degree < 0:
        return type(a).zero(parent, deg)
    acc = _Acc()
    for I, x in a.coeffs.items():
        for J, y in b.coeffs.items():
            acc.push(I + J, 1, ex.mul(x, y))
    return type(a)(parent, deg, acc.build())


def _interior1(v: Mapping[tuple[int, ...], Expr], obj: _Graded):
    """Insert a degree-1 object of the dual kind into the first slot."""
    acc = _Acc()
    comps = {idx[0]: c for idx, c in v.items()}
    for I, c in obj.coeffs.items():
        for r, a in enumerate(I):
            f = comps.get(a)
            if f is None:
                continue
            acc.push_sorted(I[:r] + I[r + 1 :], -1 if r % 2 else 1, ex.mul(f, c))
    return type(obj)(obj.parent, obj.degree - 1, acc.build())


def contract_form(phi: Form, P: Multivector) -> Multivector:
    """i_phi P for a 1-form phi."""
    if not isinstance(phi, Form) or not isinstance(P, Multivector):
        raise TypeError("contract_form(Form, Multivector)")
    _same_parent(phi, P)
    _require_degree(phi, 1)
    return _interior1(phi.coeffs, P)


def contract_vector(X: Multivector, w: Form) -> Form:
    """i_X w for a section X."""
    if not isinstance(X, Multivector) or not isinstance(w, Form):
        raise TypeError("contract_vector(Multivector, Form)")
    _same_parent(X, w)
    _require_degree(X, 1)
    return _interior1(X.coeffs, w)


def contract_mv(X: Multivector, w: Form) -> Form:
    """i_X w with i_{X_1 ^ ... ^ X_p} = i_{X_1} o ... o i_{X_p}."""
    if not isinstance(X, Multivector) or not isinstance(w, Form):
        raise TypeError("contract_mv(Multivector, Form)")
    parent = _same_parent(X, w)
    deg = w.degree - X.degree
    if deg < 0 or X.degree < 0:
        return Form.zero(parent, deg)
    acc = _Acc()
    for I, x in X.coeffs.items():
        for J, y in w.coeffs.items():
            word = list(J)
            sign = 1
            for a in reversed(I):
                try:
                    pos = word.index(a)
                except ValueError:
                    sign = 0
                    break
                if pos % 2:
                    sign = -sign
                del word[pos]
            if sign:
                acc.push_sorted(tuple(word), sign, ex.mul(x, y))
    return Form(parent, deg, acc.build())


def pairing(w: Form, X: Multivector) -> Expr:
    """<w, X> = sum_I w_I X^I (determinant convention)."""
    _same_parent(w, X)
    if w.degree != X.degree:
        raise ValueError("pairing needs equal degrees")
    return ex.add(*(ex.mul(c, X.coeffs[k]) for k, c in w.coeffs.items() if k in X.coeffs))


def sharp(P: Multivector, alpha: Form) -> Multivector:
    """P#alpha = i_alpha P, so that <beta, P#alpha> = P(alpha, beta)."""
    _require_degree(P, 2)
    return contract_form(alpha, P)


def top_coefficient(s: _Graded) -> Expr:
    n = s.parent.rank
    if s.degree != n:
        raise ValueError(f"top_coefficient needs degree {n}, got {s.degree}")
    return s.coeffs.get(tuple(range(n)), ex.ZERO)


# ---------------------------------------------------------------- calculus


def differential(A: Algebroid, w: Form) -> Form:
    """Algebroid differential by the Cartan formula on frame sections."""
    if w.parent is not A:
        raise ParentMismatch("form does not live on this algebroid")
    p = w.degree
    n = A.rank
    if p < 0 or p + 1 > n:
        return Form.zero(A, p + 1)
    out: dict[tuple[int, ...], Expr] = {}
    coeffs = w.coeffs
    for K in combinations(range(n), p + 1):
        terms: list[Expr] = []
        for r, k in enumerate(K):
            c = coeffs.get(K[:r] + K[r + 1 :])
            if c is not None:
                d = A.rho(k, c)
                terms.append(d if r % 2 == 0 else ex.neg(d))
        if p >= 1:
            for r in range(len(K)):
                for s in range(r + 1, len(K)):
                    a, b = K[r], K[s]
                    rest = K[:r] + K[r + 1 : s] + K[s + 1 :]
                    for c, C in A.C[a][b].items():
                        sgn, key = _sort_word((c,) + rest)
                        if sgn == 0:
                            continue
                        val = coeffs.get(key)
                        if val is None:
                            continue
                        if (r + s) % 2:
                            sgn = -sgn
                        t = ex.mul(C, val)
                        terms.append(t if sgn > 0 else ex.neg(t))
        if terms:
            out[K] = ex.add(*terms)
    return Form(A, p + 1, out)


def schouten(P: Multivector, Q: Multivector) -> Multivector:
    """Schouten bracket of A-multivector fields."""
    if not isinstance(P, Multivector) or not isinstance(Q, Multivector):
        raise TypeError("schouten(Multivector, Multivector)")
    A = _same_parent(P, Q)
    p, q = P.degree, Q.degree
    deg = p + q - 1
    if p < 0 or q < 0:
        return Multivector.zero(A, deg)
    acc = _Acc()
    s3 = 1 if ((q - 1) * p + q) % 2 == 0 else -1
    for I, f in P.coeffs.items():
        for J, g in Q.coeffs.items():
            # f g [e_I, e_J]
            if p >= 1 and q >= 1:
                fg = ex.mul(f, g)
                for r, a in enumerate(I):
                    Irest = I[:r] + I[r + 1 :]
                    for s, b in enumerate(J):
                        Jrest = J[:s] + J[s + 1 :]
                        sign = -1 if (r + s) % 2 else 1
                        for c, C in A.C[a][b].items():
                            acc.push((c,) + Irest + Jrest, sign, ex.mul(fg, C))
            # f [e_I, g] ^ e_J
            if p >= 1:
                for r, a in enumerate(I):
                    dg = A.rho(a, g)
                    if dg is ex.ZERO:
                        continue
                    sign = -1 if (p - 1 - r) % 2 else 1
                    acc.push(I[:r] + I[r + 1 :] + J, sign, ex.mul(f, dg))
            # (-1)^{(q-1)p+q} g [e_J, f] ^ e_I
            if q >= 1:
                for s, b in enumerate(J):
                    df = A.rho(b, f)
                    if df is ex.ZERO:
                        continue
                    sign = s3 * (-1 if (q - 1 - s) % 2 else 1)
                    acc.push(J[:s] + J[s + 1 :] + I, sign, ex.mul(g, df))
    return Multivector(A, deg, acc.build())


def lie_derivative(X: Multivector, w: Form) -> Form:
    """L_X w = i_X d w + (-1)^{p-1} d i_X w for X of degree p."""
    A = _same_parent(X, w)
    p = X.degree
    deg = w.degree - p + 1
    if deg < 0:
        return Form.zero(A, deg)
    out = contract_mv(X, differential(A, w))
    if p <= w.degree:
        second = differential(A, contract_mv(X, w))
        out = out + (second if (p - 1) % 2 == 0 else -second)
    return out


# ---------------------------------------------------------------- validation


def validate_algebroid(A: Algebroid, sampling: Sampling = DEFAULT) -> Report:
    """Structure antisymmetry, frame Jacobi identity, anchor morphism."""
    n, names = A.rank, A.vars.names
    antisym = []
    for i in range(n):
        for j in range(i, n):
            for k in range(n):
                antisym.append(ex.add(A.structure(k, i, j), A.structure(k, j, i)))
    jac = []
    for i, j, k in combinations(range(n), 3):
        for l in range(n):
            terms = []
            for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                for m, C in A.C[a][b].items():
                    terms.append(ex.mul(C, A.structure(l, m, c)))
                terms.append(ex.neg(A.rho(c, A.structure(l, a, b))))
            jac.append(ex.add(*terms))
    morph = []
    for i, j in combinations(range(n), 2):
        for mu in range(A.base_dim):
            lhs = ex.add(*(ex.mul(C, A.anchor[m][mu]) for m, C in A.C[i][j].items()))
            rhs = ex.sub(A.rho(i, A.anchor[j][mu]), A.rho(j, A.anchor[i][mu]))
            morph.append(ex.sub(lhs, rhs))
    parts = [
        check("structure-antisymmetry", "C^k_ij = -C^k_ji", antisym, A.vars, sampling),
        check("frame-jacobi", "sum_cyc [[e_i,e_j],e_k] = 0", jac, A.vars, sampling),
        check("anchor-morphism", "rho([e_i,e_j]) = [rho e_i, rho e_j]", morph, A.vars, sampling),
    ]
    return combine("validate", "Lie algebroid axioms on the frame", parts, sampling)
