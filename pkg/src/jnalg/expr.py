"""Closed-form scalar expressions over named coordinates.

Nodes are hash-consed: two structurally equal trees are the same Python
object, so ``a is b`` (and ``a == b``) is structural equality.  All
construction goes through the smart constructors below, which keep trees
in a canonical flattened form (constant folding, 0/1 absorption,
like-term and like-power collection).

Ordering inside sums and products uses a hash that does not depend on
``PYTHONHASHSEED``; printed forms and evaluation order are therefore
reproducible across processes.
"""
from __future__ import annotations

import math
import threading
import weakref
import zlib
from numbers import Real
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Expr",
    "VarSpace",
    "DomainError",
    "const",
    "var",
    "add",
    "mul",
    "neg",
    "sub",
    "div",
    "power",
    "exp",
    "ln",
    "sin",
    "cos",
    "diff",
    "simplify_basic",
    "evaluate",
    "ZERO",
    "ONE",
    "is_zero",
    "FUNCTIONS",
]

CONST, VAR, ADD, MUL, POW, EXP, LN, SIN, COS = range(9)
FUNCTIONS = {"exp": EXP, "ln": LN, "sin": SIN, "cos": COS}
_FUNC_NAMES = {v: k for k, v in FUNCTIONS.items()}

_intern: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_intern_lock = threading.Lock()


class DomainError(ArithmeticError):
    """Evaluation left the domain of a partial node (``ln`` or a division)."""

    def __init__(self, message: str, node: "Expr"):
        super().__init__(message)
        self.node = node


class VarSpace:
    """Ordered coordinate names; ``t`` may only appear last."""

    __slots__ = ("names", "_index")

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate coordinate names in {names}")
        for n in names:
            if n in FUNCTIONS:
                raise ValueError(f"{n!r} is a reserved function name")
        if "t" in names[:-1]:
            raise ValueError("'t' may only appear as the last coordinate")
        self.names = names
        self._index = {n: i for i, n in enumerate(names)}

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name) -> bool:
        return name in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, VarSpace) and other.names == self.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"VarSpace({list(self.names)!r})"

    def index(self, name: str) -> int:
        return self._index[name]

    @property
    def has_t(self) -> bool:
        return bool(self.names) and self.names[-1] == "t"

    def extended(self) -> "VarSpace":
        """The same space with the extra coordinate ``t`` appended."""
        if "t" in self._index:
            raise ValueError("coordinate space already contains 't'")
        return VarSpace(self.names + ("t",))

    def base(self) -> "VarSpace":
        return VarSpace(self.names[:-1]) if self.has_t else self


class Expr:
    __slots__ = ("kind", "value", "args", "fv", "_hash", "_diff", "_str", "__weakref__")

    kind: int
    value: object
    args: tuple

    def __hash__(self) -> int:
        return self._hash

    # identity is structural equality thanks to interning
    def __eq__(self, other) -> bool:
        return self is other

    def __repr__(self) -> str:
        return f"Expr({self})"

    def __str__(self) -> str:
        s = self._str
        if s is None:
            s = _format(self)
            self._str = s
        return s

    def __reduce__(self):
        return (_rebuild, (str(self),))

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        if isinstance(k, bool) or not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        return power(self, k)

    @property
    def is_const(self) -> bool:
        return self.kind == CONST

    def free_vars(self) -> frozenset[str]:
        return self.fv

    def size(self) -> int:
        """Number of distinct nodes in the DAG."""
        seen: set[int] = set()
        stack = [self]
        while stack:
            e = stack.pop()
            if id(e) not in seen:
                seen.add(id(e))
                stack.extend(e.args)
        return len(seen)


def _rebuild(text: str) -> Expr:
    from .parser import parse_expr

    return parse_expr(text)


def _node(kind: int, value, args: tuple) -> Expr:
    key = (kind, value, args)
    with _intern_lock:
        e = _intern.get(key)
        if e is not None:
            return e
        e = object.__new__(Expr)
        e.kind = kind
        e.value = value
        e.args = args
        if kind == VAR:
            vh = zlib.crc32(value.encode())
            e.fv = frozenset((value,))
        else:
            # hash(None) is address-based before 3.12
            vh = 0 if value is None else hash(value)
            if not args:
                e.fv = frozenset()
            elif len(args) == 1:
                e.fv = args[0].fv
            else:
                e.fv = frozenset().union(*(a.fv for a in args))
        e._hash = hash((kind, vh) + tuple(a._hash for a in args))
        e._diff = None
        e._str = None
        _intern[key] = e
        return e


def const(v) -> Expr:
    v = float(v)
    if math.isnan(v):
        raise ValueError("NaN constant")
    if v == 0.0:
        v = 0.0  # fold -0.0
    return _node(CONST, v, ())


def var(name: str) -> Expr:
    return _node(VAR, name, ())


ZERO = const(0.0)
ONE = const(1.0)
MINUS_ONE = const(-1.0)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, Real):
        return const(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def _order(e: Expr):
    return (e.kind, e._hash)


def _split_coeff(e: Expr) -> tuple[float, Expr | None]:
    """Split a term into (numeric coefficient, non-constant monomial)."""
    if e.kind == CONST:
        return e.value, None
    if e.kind == MUL and e.args[0].kind == CONST:
        rest = e.args[1:]
        if len(rest) == 1:
            return e.args[0].value, rest[0]
        return e.args[0].value, _node(MUL, None, rest)
    return 1.0, e


def _scale(c: float, m: Expr) -> Expr:
    if c == 1.0:
        return m
    if c == 0.0:
        return ZERO
    if m.kind == MUL:
        return _node(MUL, None, (const(c),) + m.args)
    return _node(MUL, None, (const(c), m))


def add(*terms) -> Expr:
    total = 0.0
    coeffs: dict[Expr, float] = {}
    stack = [as_expr(t) for t in reversed(terms)]
    while stack:
        t = stack.pop()
        if t.kind == ADD:
            stack.extend(reversed(t.args))
            continue
        c, m = _split_coeff(t)
        if m is None:
            total += c
        else:
            coeffs[m] = coeffs.get(m, 0.0) + c
    items = [(m, c) for m, c in coeffs.items() if c != 0.0]
    items.sort(key=lambda mc: _order(mc[0]))
    out = [_scale(c, m) for m, c in items]
    if total != 0.0:
        out.insert(0, const(total))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return _node(ADD, None, tuple(out))


def mul(*factors) -> Expr:
    coeff = 1.0
    powers: dict[Expr, int] = {}
    exp_args: list[Expr] = []
    stack = [as_expr(f) for f in reversed(factors)]
    while stack:
        f = stack.pop()
        k = f.kind
        if k == CONST:
            coeff *= f.value
        elif k == MUL:
            stack.extend(reversed(f.args))
        elif k == EXP:
            exp_args.append(f.args[0])
        elif k == POW:
            base = f.args[0]
            powers[base] = powers.get(base, 0) + f.value
        else:
            powers[f] = powers.get(f, 0) + 1
    if coeff == 0.0:
        return ZERO
    out = []
    for base, k in powers.items():
        if k == 0:
            continue
        p = power(base, k)
        if p.kind == CONST:
            coeff *= p.value
        else:
            out.append(p)
    if exp_args:
        e = exp(add(*exp_args))
        if e.kind == CONST:
            coeff *= e.value
        else:
            out.append(e)
    if coeff == 0.0:
        return ZERO
    out.sort(key=_order)
    if not out:
        return const(coeff)
    if coeff == 1.0 and len(out) == 1:
        return out[0]
    if len(out) == 1 and out[0].kind == ADD:
        # c*(a + b) -> c*a + c*b, so sums have a single canonical spelling
        return add(*(mul(coeff, t) for t in out[0].args))
    if coeff != 1.0:
        out.insert(0, const(coeff))
    return _node(MUL, None, tuple(out))


def neg(e) -> Expr:
    return mul(MINUS_ONE, e)


def sub(a, b) -> Expr:
    return add(a, neg(as_expr(b)))


def div(a, b) -> Expr:
    return mul(a, power(as_expr(b), -1))


def power(base, k: int) -> Expr:
    base = as_expr(base)
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return base
    kind = base.kind
    if kind == CONST:
        v = base.value
        if v == 0.0 and k < 0:
            return _node(POW, k, (base,))
        try:
            return const(v**k)
        except OverflowError:
            return _node(POW, k, (base,))
    if kind == POW:
        return power(base.args[0], base.value * k)
    if kind == MUL:
        return mul(*(power(f, k) for f in base.args))
    if kind == EXP:
        return exp(mul(k, base.args[0]))
    return _node(POW, k, (base,))


def exp(a) -> Expr:
    a = as_expr(a)
    if a.kind == CONST:
        try:
            return const(math.exp(a.value))
        except OverflowError:
            pass
    return _node(EXP, None, (a,))


def ln(a) -> Expr:
    a = as_expr(a)
    if a.kind == CONST and a.value > 0.0:
        return const(math.log(a.value))
    if a.kind == EXP:
        return a.args[0]
    return _node(LN, None, (a,))


def sin(a) -> Expr:
    a = as_expr(a)
    if a.kind == CONST:
        return const(math.sin(a.value))
    return _node(SIN, None, (a,))


def cos(a) -> Expr:
    a = as_expr(a)
    if a.kind == CONST:
        return const(math.cos(a.value))
    return _node(COS, None, (a,))


def is_zero(e: Expr) -> bool:
    """Structural zero test (exact); numeric zero-testing lives in sampling."""
    return e is ZERO


# ---------------------------------------------------------------- calculus


def diff(e: Expr, v: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to coordinate ``v``."""
    cache = e._diff
    if cache is None:
        cache = e._diff = {}
    else:
        hit = cache.get(v)
        if hit is not None:
            return hit
    k = e.kind
    if k == CONST:
        d = ZERO
    elif k == VAR:
        d = ONE if e.value == v else ZERO
    elif v not in e.fv:
        d = ZERO
    elif k == ADD:
        d = add(*(diff(a, v) for a in e.args))
    elif k == MUL:
        terms = []
        args = e.args
        for i, a in enumerate(args):
            da = diff(a, v)
            if da is ZERO:
                continue
            terms.append(mul(*args[:i], da, *args[i + 1 :]))
        d = add(*terms)
    elif k == POW:
        b = e.args[0]
        d = mul(e.value, power(b, e.value - 1), diff(b, v))
    elif k == EXP:
        d = mul(e, diff(e.args[0], v))
    elif k == LN:
        a = e.args[0]
        d = div(diff(a, v), a)
    elif k == SIN:
        a = e.args[0]
        d = mul(cos(a), diff(a, v))
    elif k == COS:
        a = e.args[0]
        d = neg(mul(sin(a), diff(a, v)))
    else:  # pragma: no cover
        raise AssertionError(k)
    cache[v] = d
    return d


def simplify_basic(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the canonicalising constructors.

    Trees built through this module are already canonical, so this is the
    identity on them; it matters for trees whose children were produced by
    a different rewriting (e.g. after substitution).
    """
    memo: dict[int, Expr] = {}

    def go(n: Expr) -> Expr:
        hit = memo.get(id(n))
        if hit is not None:
            return hit
        k = n.kind
        if k in (CONST, VAR):
            r = n
        elif k == ADD:
            r = add(*(go(a) for a in n.args))
        elif k == MUL:
            r = mul(*(go(a) for a in n.args))
        elif k == POW:
            r = power(go(n.args[0]), n.value)
        else:
            r = _apply_func(k, go(n.args[0]))
        memo[id(n)] = r
        return r

    return go(e)


def _apply_func(kind: int, a: Expr) -> Expr:
    return {EXP: exp, LN: ln, SIN: sin, COS: cos}[kind](a)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions."""
    memo: dict[int, Expr] = {}

    def go(n: Expr) -> Expr:
        hit = memo.get(id(n))
        if hit is not None:
            return hit
        k = n.kind
        if k == CONST:
            r = n
        elif k == VAR:
            r = as_expr(mapping.get(n.value, n))
        elif k == ADD:
            r = add(*(go(a) for a in n.args))
        elif k == MUL:
            r = mul(*(go(a) for a in n.args))
        elif k == POW:
            r = power(go(n.args[0]), n.value)
        else:
            r = _apply_func(k, go(n.args[0]))
        memo[id(n)] = r
        return r

    return go(e)


# ---------------------------------------------------------------- evaluation

_TINY = 1e-300


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    """Evaluate at a single point given as ``{name: value}``."""
    memo: dict[int, float] = {}
    order = _postorder(e)
    for n in order:
        k = n.kind
        if k == CONST:
            r = n.value
        elif k == VAR:
            try:
                r = float(point[n.value])
            except KeyError:
                raise KeyError(f"point does not assign coordinate {n.value!r}") from None
            if not math.isfinite(r):
                raise ValueError(f"coordinate {n.value!r} is not finite")
        elif k == ADD:
            r = 0.0
            for a in n.args:
                r += memo[id(a)]
        elif k == MUL:
            r = 1.0
            for a in n.args:
                r *= memo[id(a)]
        elif k == POW:
            x = memo[id(n.args[0])]
            if n.value < 0:
                den = x ** (-n.value)
                if abs(den) < _TINY:
                    raise DomainError(f"division by ~0 in {n}", n)
                r = 1.0 / den
            else:
                r = x**n.value
        else:
            x = memo[id(n.args[0])]
            if k == EXP:
                r = math.exp(x)
            elif k == LN:
                if x <= 0.0:
                    raise DomainError(f"ln of non-positive value {x!r} in {n}", n)
                r = math.log(x)
            elif k == SIN:
                r = math.sin(x)
            else:
                r = math.cos(x)
        memo[id(n)] = r
    return memo[id(e)]


def _postorder(root: Expr) -> list[Expr]:
    out: list[Expr] = []
    seen: set[int] = set()
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        n, expanded = stack.pop()
        if expanded:
            out.append(n)
            continue
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.append((n, True))
        for a in reversed(n.args):
            if id(a) not in seen:
                stack.append((a, False))
    return out


def postorder(roots: Sequence[Expr]) -> list[Expr]:
    """Topological order over the union DAG of ``roots`` (children first)."""
    out: list[Expr] = []
    seen: set[int] = set()
    for root in roots:
        stack: list[tuple[Expr, bool]] = [(root, False)]
        while stack:
            n, expanded = stack.pop()
            if expanded:
                out.append(n)
                continue
            if id(n) in seen:
                continue
            seen.add(id(n))
            stack.append((n, True))
            for a in reversed(n.args):
                if id(a) not in seen:
                    stack.append((a, False))
    return out


# ---------------------------------------------------------------- printing


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _format(e: Expr) -> str:
    k = e.kind
    if k == CONST:
        return _fmt_number(e.value)
    if k == VAR:
        return e.value
    if k == ADD:
        parts = [str(e.args[0])]
        for a in e.args[1:]:
            c, m = _split_coeff(a)
            if c < 0.0:
                parts.append(" - ")
                parts.append(str(const(-c)) if m is None else str(_scale(-c, m)))
            else:
                parts.append(" + ")
                parts.append(str(a))
        return "".join(parts)
    if k == MUL:
        return _format_mul(e)
    if k == POW:
        return f"{_format_base(e.args[0])}^{e.value}"
    return f"{_FUNC_NAMES[k]}({e.args[0]})"


def _format_base(b: Expr) -> str:
    if b.kind in (VAR, EXP, LN, SIN, COS):
        return str(b)
    if b.kind == CONST and b.value >= 0.0:
        return str(b)
    return f"({b})"


def _format_factor(f: Expr) -> str:
    if f.kind == ADD or (f.kind == CONST and f.value < 0.0):
        return f"({f})"
    return str(f)


def _format_mul(e: Expr) -> str:
    c, _ = _split_coeff(e)
    rest = e.args[1:] if e.args[0].kind == CONST else e.args
    num = [f for f in rest if not (f.kind == POW and f.value < 0)]
    den = [power(f.args[0], -f.value) for f in rest if f.kind == POW and f.value < 0]
    sign = ""
    if c < 0.0:
        sign = "-"
        c = -c
    head = []
    if c != 1.0 or not num:
        head.append(_fmt_number(c))
    head.extend(_format_factor(f) for f in num)
    s = "*".join(head)
    for d in den:
        s += "/" + _format_factor(d)
    return sign + s
