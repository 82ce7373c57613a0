"""Bounded random generators shared by the test modules.

Coefficients stay O(1) on the default box so that absolute residual
tolerances are meaningful: constants in [-2, 2], exp only of halved
arguments, nesting depth at most 2.
"""
import random
from itertools import combinations

import numpy as np
from hypothesis import strategies as st

from jnalg import expr as ex
from jnalg.algebroid import Form, Multivector
from jnalg.sampling import DEFAULT, residual

CONSTS = [-2.0, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0]


def rand_expr(rng: random.Random, names, depth: int = 2) -> ex.Expr:
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.4:
            return ex.const(rng.choice(CONSTS))
        return ex.var(rng.choice(names))
    k = rng.choice(["add", "mul", "sin", "cos", "exp"])
    a = rand_expr(rng, names, depth - 1)
    if k == "add":
        return ex.add(a, rand_expr(rng, names, depth - 1))
    if k == "mul":
        return ex.mul(a, rand_expr(rng, names, depth - 1))
    if k == "exp":
        return ex.exp(ex.mul(0.5, ex.sin(a)))
    return getattr(ex, k)(a)


def rand_graded(rng: random.Random, A, degree: int, cls=Multivector):
    if degree < 0 or degree > A.rank:
        return cls.zero(A, degree)
    names = A.vars.names
    return cls(A, degree, {I: rand_expr(rng, names) for I in combinations(range(A.rank), degree)})


def res(obj, sampling=DEFAULT) -> float:
    """Max residual of a graded object (or a list of expressions)."""
    if isinstance(obj, (Multivector, Form)):
        return residual(obj.exprs(), obj.parent.vars, sampling)[0]
    raise TypeError(obj)


def sign(k: int) -> int:
    return -1 if k % 2 else 1


seeds = st.integers(min_value=0, max_value=2**31 - 1)


@st.composite
def exprs(draw, names=("x", "y"), max_depth=4):
    """Hypothesis strategy for well-defined expressions on the default box."""
    depth = draw(st.integers(0, max_depth))

    def build(d):
        if d == 0:
            if draw(st.booleans()):
                return ex.const(draw(st.sampled_from(CONSTS)))
            return ex.var(draw(st.sampled_from(names)))
        k = draw(st.sampled_from(["add", "mul", "sin", "cos", "exp", "sub", "square", "inv"]))
        a = build(d - 1)
        if k == "add":
            return ex.add(a, build(d - 1))
        if k == "sub":
            return ex.sub(a, build(d - 1))
        if k == "mul":
            return ex.mul(a, build(d - 1))
        if k == "square":
            return ex.power(a, 2)
        if k == "inv":
            return ex.power(ex.add(2.5, ex.sin(a)), -1)
        if k == "exp":
            return ex.exp(ex.mul(0.5, ex.sin(a)))
        return getattr(ex, k)(a)

    return build(depth)


def points(names, n=20, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, (n, len(names)))
