import random

import pytest
from hypothesis import given, settings

from jnalg import expr as ex
from jnalg.algebroid import Form, Multivector, schouten, validate_algebroid, wedge
from jnalg.catalog import fixture
from jnalg.jacobi import JacobiAlgebroid, build_dual_algebroid
from jnalg.poisson import (
    check_dual_gauging,
    check_gauging_bracket,
    check_time_independent_dual,
    extend,
    gauge_form,
    gauge_mv,
)

from batteries import GERSTENHABER_FIXTURES, gauging_residuals
from helpers import rand_graded, res, seeds

t = ex.var("t")
CATALOG = ("abelian2", "tangent(2)", "tmr_of_jacobi", "contact_r3", "e2_line", "pn_r4", "conformal_r4")


class TestExtend:
    def test_abelian_anchor(self):
        E = extend(fixture("abelian2").jacobi)
        assert E.hatA.vars.names == ("x", "t")
        assert [list(r) for r in E.hatA.anchor] == [[ex.ZERO, ex.ONE], [ex.ZERO, ex.ZERO]]

    def test_tmr_last_frame_is_dt(self):
        E = extend(fixture("tmr_of_jacobi").jacobi)
        assert list(E.hatA.anchor[2]) == [ex.ZERO, ex.ZERO, ex.ONE]

    @pytest.mark.parametrize("name", CATALOG)
    def test_valid_and_exact(self, name):
        E = extend(fixture(name).jacobi)
        assert validate_algebroid(E.hatA).passed
        assert E.phi0_exact().passed

    def test_untwisted_has_zero_t_column(self):
        A = fixture("tangent(2)").algebroid
        E = extend(JacobiAlgebroid.untwisted(A))
        assert all(row[-1] is ex.ZERO for row in E.hatA.anchor)
        rng = random.Random(0)
        P, Q = rand_graded(rng, A, 2), rand_graded(rng, A, 1)
        assert res(schouten(E.lift(P), E.lift(Q)) - E.lift(schouten(P, Q))) < 1e-12

    def test_refuses_double_extension(self):
        E = extend(fixture("abelian2").jacobi)
        with pytest.raises(ValueError):
            extend(JacobiAlgebroid.untwisted(E.hatA))


class TestGaugeMaps:
    def test_weights(self):
        E = extend(fixture("abelian2").jacobi)
        A = E.origin.A
        X = A.frame(0)
        assert gauge_mv(E, X).coeffs == {(0,): ex.ONE}
        P = wedge(A.frame(0), A.frame(1))
        assert gauge_mv(E, P).coeffs == {(0, 1): ex.exp(ex.neg(t))}
        assert gauge_mv(E, Multivector.scalar(A, 2)).coeffs == {(): ex.mul(2, ex.exp(t))}
        assert gauge_form(E, Form.scalar(A, 2)).coeffs == {(): ex.const(2)}
        assert gauge_form(E, A.coframe(1)).coeffs == {(1,): ex.exp(t)}
        top = Form(A, 2, {(0, 1): 1})
        assert gauge_form(E, top).coeffs == {(0, 1): ex.exp(ex.mul(2, t))}

    @given(seeds)
    def test_multiplicative_over_wedge(self, seed):
        rng = random.Random(seed)
        E = extend(fixture("tmr_of_jacobi").jacobi)
        A = E.origin.A
        for p in range(3):
            for q in range(3 - p + 1):
                P, Q = rand_graded(rng, A, p), rand_graded(rng, A, q)
                # weights -(p-1) and -(q-1) add up to -(p+q-1) - 1
                lhs = gauge_mv(E, wedge(P, Q))
                rhs = wedge(gauge_mv(E, P), gauge_mv(E, Q)) * ex.exp(ex.neg(t))
                assert res(lhs - rhs) < 1e-12
                a, b = rand_graded(rng, A, p, Form), rand_graded(rng, A, q, Form)
                assert res(gauge_form(E, wedge(a, b)) - wedge(gauge_form(E, a), gauge_form(E, b))) < 1e-12


class TestGaugingCorrespondence:
    @settings(max_examples=5)
    @given(seeds)
    def test_double_expansion(self, seed):
        for name in GERSTENHABER_FIXTURES:
            doc = fixture(name)
            worst = gauging_residuals(doc.jacobi, doc.bivector, seed)
            assert max(worst.values()) < 1e-8, (name, worst)

    def test_sections_untouched(self):
        J = fixture("tmr_of_jacobi").jacobi
        E = extend(J)
        X, Y = J.A.frame(0) * ex.var("y"), J.A.frame(2)
        lhs = schouten(gauge_mv(E, X), gauge_mv(E, Y))
        assert lhs.same_as(E.lift(schouten(X, Y)))
        assert check_gauging_bracket(E, X, Y).residual == 0.0

    @pytest.mark.parametrize("name", CATALOG)
    def test_poissonization_sound(self, name):
        doc = fixture(name)
        E = extend(doc.jacobi)
        assert E.poisson_check(doc.bivector).passed

    def test_non_jacobi_not_poisson(self):
        # [P~,P~] is the gauge of [P,P]^phi0, so failure carries over
        doc = fixture("tangent(3)")
        J = doc.jacobi
        P = Multivector(J.A, 2, {(0, 1): 1, (1, 2): ex.var("y")})
        assert not extend(J).poisson_check(P).passed

    @pytest.mark.parametrize("name", ["abelian2", "tmr_of_jacobi", "contact_r3", "conformal_r4"])
    def test_time_independent_dual(self, name):
        T = fixture(name).triangular()
        rng = random.Random(5)
        for _ in range(3):
            a, b = rand_graded(rng, T.A, 1, Form), rand_graded(rng, T.A, 1, Form)
            assert check_time_independent_dual(T, a, b).passed

    def test_diagonal_dual_gauging(self):
        T = fixture("abelian2").triangular()
        a = Form(T.A, 1, {(0,): ex.var("x"), (1,): 1})
        rep = check_dual_gauging(T, a, a)
        assert rep.passed and rep.residual == 0.0

    def test_hat_dual_is_algebroid(self):
        J = fixture("contact_r3").jacobi
        E = extend(J)
        hat = build_dual_algebroid(JacobiAlgebroid.untwisted(E.hatA), gauge_mv(E, fixture("contact_r3").bivector))
        assert hat.report.passed
