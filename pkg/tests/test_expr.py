import math
import pickle

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jnalg import expr as ex
from jnalg.expr import DomainError, VarSpace
from jnalg.parser import ParseError, UnknownIdentifier, parse_expr
from jnalg.program import evaluate_many

from helpers import exprs, points

XY = VarSpace(["x", "y"])
x, y, t = ex.var("x"), ex.var("y"), ex.var("t")


def at(e, names, pts):
    return np.array([ex.evaluate(e, dict(zip(names, p))) for p in pts])


class TestParse:
    def test_product_node(self):
        e = parse_expr("x*exp(t)", ["x", "t"])
        assert e.kind == ex.MUL
        assert set(e.args) == {x, ex.exp(t)}

    def test_trailing_operator_offset(self):
        with pytest.raises(ParseError) as err:
            parse_expr("2+", ["x"])
        assert err.value.offset == 2

    @pytest.mark.parametrize("text,offset", [("(x", 2), ("x**2", 2), ("sin x", 4), ("x ^ y", 4), ("1.2.3", 3)])
    def test_syntax_offsets(self, text, offset):
        with pytest.raises(ParseError) as err:
            parse_expr(text, ["x", "y"])
        assert err.value.offset == offset

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifier) as err:
            parse_expr("x + zeta", ["x"])
        assert err.value.name == "zeta"
        assert err.value.offset == 4

    def test_pythagoras_against_math(self):
        e = parse_expr("sin(x)^2+cos(x)^2", ["x"])
        pts = points(["x"], 20, seed=3) * 5
        got = at(e, ["x"], pts)
        want = np.array([math.sin(p[0]) ** 2 + math.cos(p[0]) ** 2 for p in pts])
        assert np.max(np.abs(got - want)) < 1e-12
        assert np.max(np.abs(got - 1.0)) < 1e-12

    def test_unary_minus_and_precedence(self):
        e = parse_expr("-x^2 + 2*y/4", XY)
        assert ex.evaluate(e, {"x": 3.0, "y": 2.0}) == pytest.approx(-8.0)

    def test_whitespace_insignificant(self):
        assert parse_expr(" exp ( x )*  y ", XY) is parse_expr("exp(x)*y", XY)

    @given(exprs())
    def test_round_trip(self, e):
        assert parse_expr(str(e), XY) is e

    @given(exprs())
    def test_pickle_round_trip(self, e):
        assert pickle.loads(pickle.dumps(e)) is e


class TestDiff:
    def test_power_rule(self):
        assert ex.diff(x**2, "x") is ex.mul(2, x)

    def test_exp_factor(self):
        e = ex.mul(ex.exp(t), x)
        assert ex.diff(e, "t") is e

    def test_constants(self):
        assert ex.diff(ex.const(3.5), "x") is ex.ZERO
        assert ex.diff(y, "x") is ex.ZERO

    def test_finite_differences(self):
        import random

        from helpers import rand_expr

        rng = random.Random(10)
        h = 1e-5
        pts = points(["x", "y"], 20, seed=11)
        for _ in range(10):
            e = rand_expr(rng, ["x", "y"], depth=5)
            for v, col in (("x", 0), ("y", 1)):
                d = at(ex.diff(e, v), ["x", "y"], pts)
                up, dn = pts.copy(), pts.copy()
                up[:, col] += h
                dn[:, col] -= h
                fd = (at(e, ["x", "y"], up) - at(e, ["x", "y"], dn)) / (2 * h)
                assert np.max(np.abs(d - fd)) < 1e-6, e

    @given(exprs(), exprs(), st.floats(-3, 3), st.floats(-3, 3))
    def test_linear(self, e1, e2, a, b):
        lhs = ex.diff(ex.add(ex.mul(a, e1), ex.mul(b, e2)), "x")
        rhs = ex.add(ex.mul(a, ex.diff(e1, "x")), ex.mul(b, ex.diff(e2, "x")))
        pts = points(["x", "y"], 20)
        assert np.max(np.abs(at(lhs, "xy", pts) - at(rhs, "xy", pts))) < 1e-10

    @given(exprs(), exprs())
    def test_leibniz(self, e1, e2):
        lhs = ex.diff(ex.mul(e1, e2), "y")
        rhs = ex.add(ex.mul(ex.diff(e1, "y"), e2), ex.mul(e1, ex.diff(e2, "y")))
        pts = points(["x", "y"], 20)
        assert np.max(np.abs(at(lhs, "xy", pts) - at(rhs, "xy", pts))) < 1e-10


class TestEval:
    def test_zero(self):
        assert ex.evaluate(ex.ZERO, {"x": 0.3}) == 0.0

    def test_ln_domain(self):
        with pytest.raises(DomainError) as err:
            ex.evaluate(ex.ln(x), {"x": -1.0})
        assert err.value.node is ex.ln(x)

    def test_division_domain(self):
        with pytest.raises(DomainError):
            ex.evaluate(ex.div(1, x), {"x": 0.0})

    def test_simple_value(self):
        assert ex.evaluate(ex.mul(x, ex.exp(t)), {"x": 2.0, "t": 0.0}) == 2.0

    def test_incomplete_point(self):
        with pytest.raises(KeyError):
            ex.evaluate(ex.add(x, y), {"x": 1.0})

    def test_non_finite_point(self):
        with pytest.raises(ValueError):
            ex.evaluate(x, {"x": float("nan")})

    @given(exprs())
    def test_batch_matches_pointwise(self, e):
        pts = points(["x", "y"], 8, seed=5)
        batch = evaluate_many([e], XY, pts)[:, 0]
        assert np.allclose(batch, at(e, "xy", pts), rtol=1e-13, atol=1e-13)


class TestSimplify:
    def test_absorption(self):
        assert ex.simplify_basic(parse_expr("0*x + 1*y", XY)) is y

    def test_cancellation(self):
        assert ex.simplify_basic(ex.sub(x, x)) is ex.ZERO

    def test_coefficient_distribution(self):
        assert ex.mul(-1, ex.add(x, y)) is ex.add(ex.neg(x), ex.neg(y))

    @given(exprs())
    def test_semantics_preserved(self, e):
        pts = points(["x", "y"], 20, seed=8)
        s = ex.simplify_basic(e)
        assert np.max(np.abs(at(s, "xy", pts) - at(e, "xy", pts))) < 1e-10

    @given(exprs())
    def test_idempotent(self, e):
        s = ex.simplify_basic(e)
        assert ex.simplify_basic(s) is s

    def test_substitute(self):
        e = ex.substitute(ex.mul(x, ex.sin(y)), {"y": x})
        assert ex.evaluate(e, {"x": 0.5}) == pytest.approx(0.5 * math.sin(0.5))


class TestVarSpace:
    def test_duplicates(self):
        with pytest.raises(ValueError):
            VarSpace(["x", "x"])

    def test_t_last_only(self):
        with pytest.raises(ValueError):
            VarSpace(["t", "x"])
        assert VarSpace(["x", "t"]).has_t

    def test_extended(self):
        V = XY.extended()
        assert V.names == ("x", "y", "t")
        assert V.base() == XY
        with pytest.raises(ValueError):
            V.extended()

    def test_reserved_names(self):
        with pytest.raises(ValueError):
            VarSpace(["exp"])

    def test_pow_type(self):
        with pytest.raises(TypeError):
            x ** 0.5
