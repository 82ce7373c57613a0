"""Structure files and the built-in fixture catalog.

A structure file is a UTF-8 JSON document.  Frame indices in keys are
1-based; expressions are strings in the parser grammar.

    {
      "coords": ["x", "y"],
      "rank": 3,
      "anchor": [["1", "0"], ["0", "1"], ["0", "0"]],
      "structure": {"3,1,2": "x"},        # C^k_ij, i != j
      "phi0": ["0", "0", "1"],
      "P": {"1,2": "exp(x)", "2,3": "-1"},
      "N": [["1", "0", "0"], ...],          # N[i][j]: N(e_j) = sum_i N[i][j] e_i
      "eta": "1", "mu": "1", "nu": "1",
      "sampling": {"points": 25, "seed": 42, "tol": 1e-8, "box": [-1, 1]}
    }
"""
from __future__ import annotations

import difflib
import json
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import expr as ex
from .algebroid import (
    Algebroid,
    Form,
    Multivector,
    contract_vector,
    differential,
    lie_derivative,
    pairing,
    sharp,
    tangent_algebroid,
    wedge,
)
from .expr import Expr, VarSpace
from .jacobi import BaseJacobiPair, JacobiAlgebroid, NotJacobi, TriangularJB, build_dual_algebroid
from .modular import ModularData
from .nijenhuis import Endo, JNAlgebroid, is_compatible
from .parser import ParseError, parse_expr
from .sampling import DEFAULT, Report, Sampling, combine

__all__ = [
    "SpecError",
    "SpecDocument",
    "load_spec",
    "parse_spec",
    "fixture",
    "FIXTURES",
    "tmr_of_jacobi",
    "tmr_dual",
    "tmr_dual_bracket",
    "embed_pair",
    "embed_form_pair",
]

KEYS = ("coords", "rank", "anchor", "structure", "phi0", "P", "N", "eta", "mu", "nu", "sampling", "name")
SAMPLING_KEYS = ("points", "seed", "tol", "box")


class SpecError(ValueError):
    """Malformed or inconsistent structure document."""


@dataclass(frozen=True, eq=False)
class SpecDocument:
    raw: Mapping[str, Any]
    vars: VarSpace
    anchor: tuple[tuple[Expr, ...], ...]
    structure: Mapping[tuple[int, int, int], Expr]
    phi0: tuple[Expr, ...] | None = None
    P: Mapping[tuple[int, int], Expr] | None = None
    N: tuple[tuple[Expr, ...], ...] | None = None
    eta: Expr | None = None
    mu: Expr | None = None
    nu: Expr | None = None
    sampling: Sampling = DEFAULT
    name: str = ""
    gates: tuple = field(default=(), repr=False)
    pair: tuple | None = field(default=None, repr=False)  # (Lambda, E) strings for tmr fixtures

    @property
    def rank(self) -> int:
        return len(self.anchor)

    @cached_property
    def algebroid(self) -> Algebroid:
        return Algebroid.from_upper(self.vars, self.anchor, self.structure, name=self.name)

    @cached_property
    def jacobi(self) -> JacobiAlgebroid:
        A = self.algebroid
        if self.phi0 is None:
            return JacobiAlgebroid.untwisted(A)
        return JacobiAlgebroid(A, Form.from_components(A, self.phi0))

    @cached_property
    def bivector(self) -> Multivector:
        if self.P is None:
            raise SpecError("this command needs a bivector 'P'")
        return Multivector.from_antisymmetric(self.algebroid, 2, self.P)

    @cached_property
    def endo(self) -> Endo:
        if self.N is None:
            raise SpecError("this command needs an endomorphism 'N'")
        return Endo(self.algebroid, self.N)

    def triangular(self, sampling: Sampling | None = None, verify: bool = True) -> TriangularJB:
        return build_dual_algebroid(self.jacobi, self.bivector, sampling or self.sampling, verify=verify)

    def jn(self, sampling: Sampling | None = None) -> JNAlgebroid:
        s = sampling or self.sampling
        return JNAlgebroid(self.triangular(s), self.endo, s)

    def modular_data(self, need_nu: bool = True) -> ModularData:
        missing = [k for k, v in (("eta", self.eta), ("mu", self.mu)) if v is None]
        if need_nu and self.nu is None:
            missing.append("nu")
        if missing:
            raise SpecError(f"this command needs top sections: {', '.join(missing)}")
        return ModularData.from_scalars(self.algebroid, self.eta, self.mu, self.nu)

    def with_sampling(self, sampling: Sampling) -> "SpecDocument":
        return replace(self, sampling=sampling)

    def base_pair(self) -> BaseJacobiPair:
        """The Jacobi pair a tmr fixture was built from."""
        if self.pair is None:
            raise SpecError(f"{self.name or 'document'} does not carry a base Jacobi pair")
        Lam, E = self.pair
        _, L, Ee = _parse_pair(self.vars.names, Lam, E)
        return BaseJacobiPair(L, Multivector.from_components(L.parent, Ee))

    def check_gates(self, sampling: Sampling | None = None) -> Report:
        """Structural gates declared by a fixture (empty for plain files)."""
        s = sampling or self.sampling
        return combine("gates", "fixture gates", [g(self, s) for g in self.gates])


# ---------------------------------------------------------------- parsing


def _index(text: str, arity: int, bound: int, key: str) -> tuple[int, ...]:
    try:
        idx = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise SpecError(f"{key}: malformed index {text!r}") from None
    if len(idx) != arity:
        raise SpecError(f"{key}: index {text!r} needs {arity} entries")
    for i in idx:
        if not 1 <= i <= bound:
            raise SpecError(f"{key}: index {text!r} out of range 1..{bound}")
    return tuple(i - 1 for i in idx)


def _expr(value, vars: VarSpace, where: str) -> Expr:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return ex.const(value)
    if not isinstance(value, str):
        raise SpecError(f"{where}: expected an expression string, got {type(value).__name__}")
    try:
        return parse_expr(value, vars)
    except ParseError as err:
        raise SpecError(f"{where}: {err}") from err


def _list(value, n: int, where: str) -> list:
    if not isinstance(value, list):
        raise SpecError(f"{where}: expected a list")
    if len(value) != n:
        raise SpecError(f"{where}: expected {n} entries, got {len(value)}")
    return value


def _sampling(raw: Mapping | None) -> Sampling:
    if raw is None:
        return DEFAULT
    if not isinstance(raw, Mapping):
        raise SpecError("sampling: expected an object")
    for k in raw:
        if k not in SAMPLING_KEYS:
            near = difflib.get_close_matches(k, SAMPLING_KEYS, n=1)
            hint = f" (did you mean {near[0]!r}?)" if near else ""
            raise SpecError(f"sampling: unknown key {k!r}{hint}")
    box = raw.get("box", list(DEFAULT.box))
    if not (isinstance(box, list) and len(box) == 2 and box[0] < box[1]):
        raise SpecError("sampling: box must be [lo, hi] with lo < hi")
    return Sampling(
        points=int(raw.get("points", DEFAULT.points)),
        seed=int(raw.get("seed", DEFAULT.seed)),
        tol=float(raw.get("tol", DEFAULT.tol)),
        box=(float(box[0]), float(box[1])),
    )


def parse_spec(raw: Mapping[str, Any], gates: Sequence = ()) -> SpecDocument:
    """Validate a decoded structure document and parse every expression."""
    if not isinstance(raw, Mapping):
        raise SpecError("top level must be a JSON object")
    for k in raw:
        if k not in KEYS:
            near = difflib.get_close_matches(k, KEYS, n=1)
            hint = f" (did you mean {near[0]!r}?)" if near else ""
            raise SpecError(f"unknown key {k!r}{hint}")
    for k in ("coords", "rank", "anchor"):
        if k not in raw:
            raise SpecError(f"missing key {k!r}")
    coords = raw["coords"]
    if not (isinstance(coords, list) and all(isinstance(c, str) for c in coords)):
        raise SpecError("coords: expected a list of names")
    try:
        vars = VarSpace(coords)
    except ValueError as err:
        raise SpecError(f"coords: {err}") from err
    n, m = raw["rank"], len(vars)
    if not isinstance(n, int) or n < 1:
        raise SpecError("rank: expected a positive integer")
    anchor = tuple(
        tuple(_expr(v, vars, f"anchor[{a + 1}][{mu + 1}]")
              for mu, v in enumerate(_list(row, m, f"anchor[{a + 1}]")))
        for a, row in enumerate(_list(raw["anchor"], n, "anchor"))
    )
    structure: dict[tuple[int, int, int], Expr] = {}
    for key, v in (raw.get("structure") or {}).items():
        k, i, j = _index(key, 3, n, "structure")
        if i == j:
            raise SpecError(f"structure: diagonal entry {key!r}")
        e = _expr(v, vars, f"structure[{key}]")
        if i > j:
            i, j, e = j, i, ex.neg(e)
        if (k, i, j) in structure and structure[(k, i, j)] is not e:
            raise SpecError(f"structure: conflicting entries for {key!r}")
        structure[(k, i, j)] = e
    phi0 = None
    if raw.get("phi0") is not None:
        phi0 = tuple(_expr(v, vars, f"phi0[{a + 1}]") for a, v in enumerate(_list(raw["phi0"], n, "phi0")))
    P = None
    if raw.get("P") is not None:
        P = {}
        for key, v in raw["P"].items():
            i, j = _index(key, 2, n, "P")
            if i == j:
                raise SpecError(f"P: diagonal entry {key!r}")
            P[(i, j)] = _expr(v, vars, f"P[{key}]")
    N = None
    if raw.get("N") is not None:
        N = tuple(
            tuple(_expr(v, vars, f"N[{i + 1}][{j + 1}]") for j, v in enumerate(_list(row, n, f"N[{i + 1}]")))
            for i, row in enumerate(_list(raw["N"], n, "N"))
        )
    tops = {k: None if raw.get(k) is None else _expr(raw[k], vars, k) for k in ("eta", "mu", "nu")}
    return SpecDocument(
        raw=raw, vars=vars, anchor=anchor, structure=structure, phi0=phi0, P=P, N=N,
        sampling=_sampling(raw.get("sampling")), name=str(raw.get("name", "")), gates=tuple(gates),
        **tops,
    )


def load_spec(path: str | Path) -> SpecDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise SpecError(f"cannot read {path}: {err.strerror}") from err
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecError(f"{path}: invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from err
    return parse_spec(raw)


# ---------------------------------------------------------------- TM x R and T*M x R


def embed_pair(A: Algebroid, Lam: Mapping[tuple[int, int], Expr], E: Sequence[Expr]) -> Multivector:
    """(Lambda, E) as Lambda + e0 ^ E on TM x R, e0 being the last frame element."""
    last = A.rank - 1
    vals = {k: ex.as_expr(v) for k, v in Lam.items()}
    for mu, c in enumerate(E):
        vals[(last, mu)] = ex.as_expr(c)
    return Multivector.from_antisymmetric(A, 2, vals)


def embed_form_pair(A: Algebroid, alpha: Form, beta: Form) -> Form:
    """(alpha, beta) in Omega^k(M) + Omega^{k-1}(M) as alpha + e0* ^ beta."""
    last = A.rank - 1
    vals = dict(alpha.coeffs)
    for I, c in beta.coeffs.items():
        vals[(last,) + I] = c
    return Form.from_antisymmetric(A, alpha.degree, vals)


def _parse_pair(coords, Lam, E):
    vars = VarSpace(coords)
    m = len(vars)
    lam = {}
    for key, v in Lam.items():
        i, j = _index(key, 2, m, "Lambda")
        lam[(i, j)] = _expr(v, vars, f"Lambda[{key}]")
    Ee = [_expr(v, vars, f"E[{k + 1}]") for k, v in enumerate(_list(list(E), m, "E"))]
    return vars, Multivector.from_antisymmetric(tangent_algebroid(vars), 2, lam), Ee


def _pair_gate(doc: SpecDocument, s: Sampling) -> Report:
    return doc.base_pair().check(s)


def _jacobi_gate(doc: SpecDocument, s: Sampling) -> Report:
    try:
        return doc.triangular(s).report
    except NotJacobi as err:
        return err.report


def _compat_gate(doc: SpecDocument, s: Sampling) -> Report:
    return is_compatible(doc.triangular(s, verify=False), doc.endo, s)


def _validate_gate(doc: SpecDocument, s: Sampling) -> Report:
    return doc.jacobi.validate(s)


def _s(e: Expr) -> str:
    return str(e)


def tmr_of_jacobi(coords=("x", "y"), Lam=None, E=None, tops=None) -> SpecDocument:
    """TM x R with phi0 = (0, 1) and the embedded Jacobi pair (Lambda, E).

    Defaults to Lambda = e^x d/dx ^ d/dy, E = d/dy on R^2."""
    coords = list(coords)
    m = len(coords)
    Lam = {"1,2": "exp(x)"} if Lam is None else dict(Lam)
    E = ["0", "1"] if E is None else list(E)
    vars, _, _ = _parse_pair(coords, Lam, E)
    anchor = [["1" if a == mu else "0" for mu in range(m)] for a in range(m)] + [["0"] * m]
    P = dict(Lam)
    for mu, c in enumerate(E):
        if c not in ("0", 0):
            P[f"{m + 1},{mu + 1}"] = c
    raw = {
        "name": "tmr_of_jacobi",
        "coords": coords,
        "rank": m + 1,
        "anchor": anchor,
        "phi0": ["0"] * m + ["1"],
        "P": P,
        **(tops or {"eta": "1", "mu": "1", "nu": "1"}),
    }
    doc = parse_spec(raw, gates=(_validate_gate, _pair_gate, _jacobi_gate))
    return replace(doc, pair=(dict(Lam), list(E)))


def tmr_dual_bracket(Lam: Multivector, E: Multivector, a: tuple[Form, Expr], b: tuple[Form, Expr]):
    """Bracket of (alpha, f), (beta, g) in T*M x R for the Jacobi pair (Lambda, E)."""
    TM = Lam.parent
    (alpha, f), (beta, g) = a, b
    d = lambda h: differential(TM, Form.scalar(TM, h))
    val = lambda u, v: pairing(v, sharp(Lam, u))  # Lambda(u, v)
    one = (
        lie_derivative(sharp(Lam, alpha), beta)
        - lie_derivative(sharp(Lam, beta), alpha)
        - d(val(alpha, beta))
        + lie_derivative(E, beta) * f
        - lie_derivative(E, alpha) * g
        - contract_vector(E, wedge(alpha, beta))
    )
    two = ex.add(
        val(beta, alpha), val(alpha, d(g)), ex.neg(val(beta, d(f))),
        ex.mul(f, _apply(E, g)), ex.neg(ex.mul(g, _apply(E, f))),
    )
    return one, two


def _apply(X: Multivector, f: Expr) -> Expr:
    A = X.parent
    return ex.add(*(ex.mul(c, A.rho(idx[0], f)) for idx, c in X.coeffs.items()))


def tmr_dual(coords=("x", "y"), Lam=None, E=None, tops=None) -> SpecDocument:
    """T*M x R with the bracket of a Jacobi pair and the 1-cocycle (-E, 0).

    Frame: (dx^1, 0), ..., (dx^m, 0), (0, 1)."""
    coords = list(coords)
    m = len(coords)
    Lam = {"1,2": "exp(x)"} if Lam is None else dict(Lam)
    E = ["0", "1"] if E is None else list(E)
    vars, L, Ee = _parse_pair(coords, Lam, E)
    TM = L.parent
    Ev = Multivector.from_components(TM, Ee)
    frame = [(TM.coframe(i), ex.ZERO) for i in range(m)] + [(Form.zero(TM, 1), ex.ONE)]
    anchor = []
    for alpha, f in frame:
        v = sharp(L, alpha) + Ev * f
        anchor.append([_s(c) for c in v.components()])
    structure = {}
    for i in range(m + 1):
        for j in range(i + 1, m + 1):
            one, two = tmr_dual_bracket(L, Ev, frame[i], frame[j])
            comps = list(one.components()) + [two]
            for k, c in enumerate(comps):
                c = ex.simplify_basic(c)
                if c is not ex.ZERO:
                    structure[f"{k + 1},{i + 1},{j + 1}"] = _s(c)
    raw = {
        "name": "tmr_dual",
        "coords": coords,
        "rank": m + 1,
        "anchor": anchor,
        "structure": structure,
        "phi0": [_s(ex.neg(c)) for c in Ee] + ["0"],
        **(tops or {}),
    }
    doc = parse_spec(raw, gates=(_validate_gate, _pair_gate))
    return replace(doc, pair=(dict(Lam), list(E)))


# ---------------------------------------------------------------- catalog


def _abelian2() -> SpecDocument:
    return parse_spec({
        "name": "abelian2",
        "coords": ["x"],
        "rank": 2,
        "anchor": [["0"], ["0"]],
        "phi0": ["1", "0"],
        "P": {"1,2": "x"},
        "N": [["2 + sin(x)", "0"], ["0", "2 + sin(x)"]],
        "eta": "1", "mu": "1", "nu": "1",
    }, gates=(_validate_gate, _jacobi_gate, _compat_gate))


def _tangent(m: int) -> SpecDocument:
    if m < 1:
        raise SpecError("tangent(m) needs m >= 1")
    coords = ["x", "y", "z", "w"][:m] if m <= 4 else [f"x{i + 1}" for i in range(m)]
    raw = {
        "name": f"tangent({m})",
        "coords": coords,
        "rank": m,
        "anchor": [["1" if a == mu else "0" for mu in range(m)] for a in range(m)],
        "eta": "1", "mu": "1", "nu": "1",
    }
    gates = [_validate_gate]
    if m >= 2:
        # rank-two Poisson bivector tangent to an involutive plane field
        raw["P"] = {"1,2": f"exp({coords[0]})"}
        gates.append(_jacobi_gate)
    return parse_spec(raw, gates=gates)


def _contact_r3() -> SpecDocument:
    # contact structure dz - y dx on R^3 as a Jacobi pair
    doc = tmr_of_jacobi(
        ("x", "y", "z"), {"1,2": "1", "2,3": "-y"}, ["0", "0", "1"],
        tops={"eta": "2 + sin(x)", "mu": "exp(y)", "nu": "1/(2 + sin(x))"},
    )
    return replace(doc, name="contact_r3")


def _e2_line() -> SpecDocument:
    # the line with Lambda = 0 and E = d/dz
    doc = tmr_of_jacobi(("z",), {}, ["1"])
    return replace(doc, name="e2_line", raw={**doc.raw, "name": "e2_line"})


def _pn_r4() -> SpecDocument:
    return parse_spec({
        "name": "pn_r4",
        "coords": ["q1", "q2", "p1", "p2"],
        "rank": 4,
        "anchor": [["1" if a == mu else "0" for mu in range(4)] for a in range(4)],
        "P": {"1,3": "1", "2,4": "1"},
        "N": _diag(["q1 + 2", "q2 + 2", "q1 + 2", "q2 + 2"]),
        "eta": "1", "mu": "2 + cos(q1)", "nu": "1",
    }, gates=(_validate_gate, _jacobi_gate, _compat_gate))


def _conformal_r4() -> SpecDocument:
    # phi0 = dg and P = e^g (canonical), a locally conformal symplectic pair
    g = "0.5*q1 + 0.3*sin(p2)"
    return parse_spec({
        "name": "conformal_r4",
        "coords": ["q1", "q2", "p1", "p2"],
        "rank": 4,
        "anchor": [["1" if a == mu else "0" for mu in range(4)] for a in range(4)],
        "phi0": ["0.5", "0", "0", "0.3*cos(p2)"],
        "P": {"1,3": f"exp({g})", "2,4": f"exp({g})"},
        "N": _diag(["q1 + 2", "q2 + 2", "q1 + 2", "q2 + 2"]),
        "eta": "1", "mu": "2 + cos(q1)", "nu": "1",
    }, gates=(_validate_gate, _jacobi_gate, _compat_gate))


def _diag(entries):
    n = len(entries)
    return [[entries[i] if i == j else "0" for j in range(n)] for i in range(n)]


FIXTURES = {
    "abelian2": _abelian2,
    "tmr_of_jacobi": tmr_of_jacobi,
    "tmr_dual": tmr_dual,
    "contact_r3": _contact_r3,
    "e2_line": _e2_line,
    "pn_r4": _pn_r4,
    "conformal_r4": _conformal_r4,
}

_TANGENT = re.compile(r"tangent\((\d+)\)$")


_GATED: set[str] = set()


def fixture(name: str) -> SpecDocument:
    """Catalog entry by name; ``tangent(m)`` takes the dimension in brackets.

    The entry's structural gates run on first load in a process; a failing
    gate is a catalog defect and raises SpecError.
    """
    m = _TANGENT.match(name)
    if m:
        doc = _tangent(int(m.group(1)))
    elif name in FIXTURES:
        doc = FIXTURES[name]()
    else:
        known = ", ".join(sorted(FIXTURES) + ["tangent(m)"])
        raise SpecError(f"unknown fixture {name!r} (known: {known})")
    if name not in _GATED:
        rep = doc.check_gates()
        if not rep.passed:
            raise SpecError(f"fixture {name!r} fails its gates: {', '.join(rep.failures)}")
        _GATED.add(name)
    return doc
