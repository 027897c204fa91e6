import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parisian_ruin.analytics import (ConstantSpec, LimitConstants, c4_branches,
                                     c4_drift_constants, exact_zero_window_constant,
                                     grid_minimize_q, quadratic_form, required_constants,
                                     single_ruin_prob, std_normal, sup_tail,
                                     theoretical_ratio_limit)
from parisian_ruin.errors import AssemblyError, ParameterError
from parisian_ruin.model import ModelParams, RegimeTag, classify_regime

mpmath.mp.dps = 40


def P(a, rho, c1=0.0, c2=0.0, s1=0.0, s2=0.0):
    return ModelParams(c1, c2, a, rho, s1, s2)


class TestNormal:
    def test_examples(self):
        assert std_normal(0.0)[0] == 0.5
        assert std_normal(-1.0)[0] == pytest.approx(0.15865525393145707, rel=1e-14)
        assert std_normal(1.0)[1] == pytest.approx(0.15865525393145707, rel=1e-14)

    @settings(max_examples=300, deadline=None)
    @given(x=st.floats(-37, 37))
    def test_against_erfc_oracle(self, x):
        cdf, sf, pdf = std_normal(x)
        assert abs(cdf + sf - 1) <= 1e-14
        exact = float(mpmath.ncdf(x))
        if exact > 0:
            assert cdf == pytest.approx(exact, rel=1e-12)
        assert pdf == pytest.approx(float(mpmath.npdf(x)), rel=1e-13)

    def test_array_and_domain(self):
        c, s, _ = std_normal(np.array([-1.0, 0.0, 1.0]))
        assert c.shape == (3,) and s[1] == 0.5
        with pytest.raises(ParameterError):
            std_normal(float("inf"))


class TestSingleRuin:
    def test_examples(self):
        assert single_ruin_prob(0.0, 1.0, 1.0) == pytest.approx(0.31731050786291415, rel=1e-13)
        assert single_ruin_prob(1.0, 0.0, 1.0) == pytest.approx(1.0, abs=1e-15)
        expected = float(mpmath.ncdf(-3) + mpmath.exp(-4) * mpmath.ncdf(1))
        assert single_ruin_prob(2.0, 1.0, 1.0) == pytest.approx(expected, rel=1e-13)

    def test_large_drift_no_overflow(self):
        v = single_ruin_prob(-40.0, 30.0, 1.0)
        assert 0.0 <= v <= 1.0 and math.isfinite(v)

    def test_domain(self):
        with pytest.raises(ParameterError):
            single_ruin_prob(1.0, 1.0, 0.0)
        with pytest.raises(ParameterError):
            single_ruin_prob(1.0, -1.0, 1.0)

    def test_sup_tail_matches(self):
        x = np.array([-1.0, 0.0, 0.5, 2.0])
        v = sup_tail(x, 1.0, 1.0)
        assert v[0] == 1.0
        assert v[3] == pytest.approx(single_ruin_prob(1.0, 2.0), rel=1e-14)


class TestQuadraticForm:
    def test_examples(self):
        assert quadratic_form(P(1.0, 0.0), 1e9, 1.0, 1.0) == pytest.approx(2.0)
        assert quadratic_form(P(1.0, -0.5), 1e9, 1.0, 1.0) == pytest.approx(4.0, rel=1e-12)
        assert quadratic_form(P(0.8, 0.1), 1e9, 1.0, 1.0) == pytest.approx(1.48 / 0.99, rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(s=st.floats(0.01, 1), t=st.floats(0.01, 1), rho=st.floats(-0.95, 0.95),
           a=st.floats(0.05, 1), c1=st.floats(-2, 2), c2=st.floats(-2, 2))
    def test_matches_matrix_inverse(self, s, t, rho, a, c1, c2):
        p = P(a, rho, c1, c2)
        u = 5.0
        m = min(s, t)
        cov = np.array([[s, rho * m], [rho * m, t]])
        b = np.array([1 + c1 * s / u, a + c2 * t / u])
        assert quadratic_form(p, u, s, t) == pytest.approx(b @ np.linalg.solve(cov, b), rel=1e-9)
        assert quadratic_form(p, u, s, t) > 0

    def test_singular(self):
        with pytest.raises(ParameterError):
            quadratic_form(P(1.0, 0.0), 1.0, 0.0, 1.0)
        with pytest.raises(ParameterError):
            quadratic_form(P(1.0, 0.0), 1.0, 1.0, 1.5)


class TestGridMinimize:
    def test_examples(self):
        g = grid_minimize_q(P(1.0, -0.6), 1e6)
        assert min(abs(g.t - 1 / 1.32), abs(g.s - 1 / 1.32)) <= 1e-5
        g = grid_minimize_q(P(0.8, 0.1), 1e6)
        assert (g.s, g.t) == (1.0, 1.0)

    def test_lemma_equal_case(self):
        # a = 1, rho = -1/2, c1 = c2 = 1, u = 10: t_u = 1/(1 + (c2 + c1/2)/u)
        g = grid_minimize_q(P(1.0, -0.5, 1.0, 1.0), 10.0, 1e-3, refinements=3)
        t = 1 / (1 + 1.5 / 10)
        assert min(abs(g.t - t), abs(g.s - t)) <= 1e-6

    def test_bad_step(self):
        with pytest.raises(ParameterError):
            grid_minimize_q(P(1.0, 0.0), 10.0, 0.05)


class TestC4:
    def test_boundaries_continuous(self):
        rng = np.random.default_rng(2024)
        for c1 in rng.uniform(-3, 3, 50):
            # c2 = -c1/2 and c2 = -2 c1: the two branches meeting there agree
            for c2 in (-0.5 * c1, -2.0 * c1):
                b = c4_branches(c1, c2)
                lo = c4_drift_constants(c1, np.nextafter(c2, -np.inf))[2]
                hi = c4_drift_constants(c1, np.nextafter(c2, np.inf))[2]
                at = c4_drift_constants(c1, c2)[2]
                assert abs(lo - hi) <= 1e-12 and abs(at - hi) <= 1e-12
                assert min(abs(x - at) for x in b) <= 1e-12

    def test_zero_drift(self):
        p1, p2, c4 = c4_drift_constants(0.0, 0.0)
        assert c4 == 1.0 and p1 == 1.0 and p2 == 1.0
        p1, p2, c4 = c4_drift_constants(0.0, 0.0, "consistent")
        assert (p1, p2) == (0.5, 0.5)

    def test_examples(self):
        e = lambda x, y: math.exp(-2 * (x / 2 + y) ** 2 / 3) * float(mpmath.ncdf(y + x / 2))
        p1, p2, c4 = c4_drift_constants(0.0, 1.0)
        assert p1 == pytest.approx(e(0, 1), rel=1e-14)
        assert (p1, p2, c4) == pytest.approx((0.431961, 0.585310, 1.017271), abs=5e-7)
        p1, p2, c4 = c4_drift_constants(2.0, -1.0)
        assert p2 == pytest.approx(0.2082235, abs=5e-8)
        assert c4 == pytest.approx(0.7082235, abs=5e-8)

    def test_convention(self):
        with pytest.raises(ParameterError):
            c4_drift_constants(0, 0, "other")


def _exact_consts(p):
    tag = classify_regime(p).tag
    lc = LimitConstants(tag)
    for spec in required_constants(p):
        lc.values[spec.name] = exact_zero_window_constant(spec)
    return lc


class TestLimit:
    @pytest.mark.parametrize("a,rho,c1,c2", [
        (0.3, 0.7, 0, 0), (0.5, 0.5, 0, 0), (0.8, 0.0, 0, 0), (0.5, -0.3660254037844386, 0, 0),
        (1.0, -0.5, 0.3, -0.1), (0.5, -0.8, 0, 0), (1.0, -0.6, 0, 0.2), (1.0, -0.6, 0.2, 0.0),
    ])
    def test_zero_windows_give_one(self, a, rho, c1, c2):
        p = P(a, rho, c1, c2)
        lc = _exact_consts(p)
        assert theoretical_ratio_limit(p, lc) == pytest.approx(1.0, rel=1e-12)

    def test_case_i_ratio(self):
        p = P(0.8, 0.1, s1=1, s2=1)
        lc = LimitConstants(RegimeTag.CASE_I, {"R_S": 2.0, "R_00": 5.0})
        assert theoretical_ratio_limit(p, lc) == 0.4

    def test_missing_constant(self):
        p = P(0.3, 0.7, s1=1)
        with pytest.raises(AssemblyError):
            theoretical_ratio_limit(p, LimitConstants(RegimeTag.DOM_A_LT_RHO))
        with pytest.raises(AssemblyError):
            theoretical_ratio_limit(p, LimitConstants(RegimeTag.CASE_I, {"R_S": 1, "R_00": 1}))

    def test_required_constants_per_regime(self):
        names = lambda p: [s.name for s in required_constants(p)]
        assert names(P(0.3, 0.7, s1=1)) == ["C_P"]
        assert names(P(0.8, 0.1, s1=1, s2=1)) == ["R_S", "R_00"]
        assert names(P(1.0, -0.5)) == ["P_S1", "P_S2", "H_S1", "H_S2"]
        assert names(P(0.5, -0.8)) == ["P", "H"]

    def test_exact_zero_values(self):
        assert exact_zero_window_constant(ConstantSpec("P", "P", (("w1", 1), ("w2", 1), ("S", 0)))) == 2.0
        assert exact_zero_window_constant(ConstantSpec("H", "H", (("b", 0.7), ("S", 0)))) == 0.7
        assert exact_zero_window_constant(ConstantSpec("C", "C_P", (("S", 0),))) == 2.0
        assert exact_zero_window_constant(ConstantSpec("C", "C_P", (("S", 1),))) is None
