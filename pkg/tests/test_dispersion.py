import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beltrami_kp.dispersion import (
    PhysicalParams,
    c_fun,
    derived_constants,
    g_eps_multiplier,
    g_full,
    g_tilde,
    kappa,
    kappa_min,
    t_fun,
    theta_min,
    verify_no_nonzero_roots,
)
from beltrami_kp.spectral import make_grid

mp.mp.dps = 40


def mp_constants(alpha):
    """40-digit closed forms, the independent oracle for the derived constants."""
    a = mp.mpf(alpha)
    return {
        "c0sq": 2 / a * mp.tan(a / 2),
        "beta0": (-mp.cos(a) + a / mp.sin(a)) / (2 * a**2),
        "beta_star": (1 / a) * (-mp.cot(a) / a + 1 / mp.sin(a) ** 2) * mp.tan(a / 2),
        "d_alpha": a / mp.sin(a) + a * mp.cot(a) / 2,
        "gap": mp.sin(a) ** -3 * mp.sin(a / 2) ** 4 * (2 * a - mp.sin(2 * a)) / a**2,
    }


def mp_c(mu, alpha):
    z = mp.mpf(alpha) ** 2 - mp.mpf(mu)
    if z == 0:
        return mp.mpf(1)
    s = mp.sqrt(z)  # complex for z < 0; s cot s is then real
    return mp.re(s * mp.cot(s))


class TestSymbols:
    def test_joint_value(self):
        for a in (0.0, 0.3, 1.2):
            assert c_fun(a * a, a) == 1.0
            assert t_fun(a * a, a) == 1.0

    @pytest.mark.parametrize("alpha", [0.3, 0.7, 1.2])
    def test_values_at_zero(self, alpha):
        assert c_fun(0.0, alpha) == pytest.approx(alpha / math.tan(alpha), rel=1e-14)
        assert t_fun(0.0, alpha) == pytest.approx(math.tan(alpha) / alpha, rel=1e-14)

    def test_alpha_zero_values(self):
        assert c_fun(1.0, 0.0) == pytest.approx(1.3130352854993313, rel=1e-15)
        assert t_fun(1.0, 0.0) == pytest.approx(0.7615941559557649, rel=1e-15)
        assert c_fun(0.0, 0.0) == 1.0

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 1.5])
    def test_against_high_precision(self, alpha):
        mus = [0.0, 1e-6, alpha**2 * 0.5, alpha**2 + 5e-5, alpha**2 + 2e-4, 0.37, 3.0, 55.0, 100.0]
        for mu in mus:
            assert c_fun(mu, alpha) == pytest.approx(float(mp_c(mu, alpha)), rel=5e-14)

    @pytest.mark.parametrize("alpha", [0.0, 0.3, 0.7, 1.0, 1.2, 1.5])
    def test_t_times_c(self, alpha):
        mu = np.linspace(0.0, 100.0, 20001)
        np.testing.assert_allclose(t_fun(mu, alpha) * c_fun(mu, alpha), 1.0, rtol=1e-12)

    @pytest.mark.parametrize("alpha", [0.2, 0.9, 1.4])
    def test_continuity_across_joint(self, alpha):
        z = np.linspace(-3e-4, 3e-4, 601)
        mu = alpha**2 - z
        exact = np.array([float(mp_c(m, alpha)) for m in mu])
        np.testing.assert_allclose(c_fun(mu, alpha), exact, rtol=1e-10)

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
    def test_increasing_and_concave(self, alpha):
        p = PhysicalParams(alpha, "auto")
        mu = np.linspace(0.0, 100.0, 2001)
        for f in (c_fun(mu, alpha), kappa_min(mu, p)):
            d = np.diff(f)
            assert np.all(d > 0)
            assert np.all(np.diff(d) < 1e-12)

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            c_fun(1.0, math.pi / 2)


class TestConstants:
    @pytest.mark.parametrize("alpha", [1e-5, 1e-3, 0.05, 0.0999, 0.1, 0.3, 0.7, 1.0, 1.2, 1.5])
    def test_against_closed_forms(self, alpha):
        dc = derived_constants(alpha)
        ref = mp_constants(alpha)
        assert dc.c0**2 == pytest.approx(float(ref["c0sq"]), rel=1e-13)
        assert dc.beta0 == pytest.approx(float(ref["beta0"]), rel=1e-13)
        assert dc.beta_star == pytest.approx(float(ref["beta_star"]), rel=1e-13)
        assert dc.d_alpha == pytest.approx(float(ref["d_alpha"]), rel=1e-13)
        assert dc.beta_star - dc.beta0 == pytest.approx(float(ref["gap"]), rel=1e-6, abs=1e-15)

    def test_near_zero_limit(self):
        dc = derived_constants(0.0)
        assert dc.beta0 == pytest.approx(1 / 3, abs=1e-12)
        assert dc.beta_star == pytest.approx(1 / 3, abs=1e-12)
        assert dc.c0 == 1.0 and dc.d_alpha == 1.5
        assert dc.c0_vec == (1.0, -0.0)

    def test_beta0_at_one(self):
        assert derived_constants(1.0).beta0 == pytest.approx(0.5 * (-math.cos(1) + 1 / math.sin(1)), rel=1e-14)
        assert derived_constants(1.0).beta0 == pytest.approx(0.324046, abs=1e-6)

    def test_beta_star_exceeds_beta0(self):
        for a in np.linspace(1e-3, 1.5, 300):
            dc = derived_constants(a)
            assert dc.beta_star > dc.beta0

    @pytest.mark.parametrize("alpha", [0.3, 0.7, 1.2])
    def test_item_iv_identity(self, alpha):
        dc = derived_constants(alpha)
        c1, c2 = dc.c0_vec
        assert alpha * c1 * (-c2 + c1 / math.tan(alpha)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("alpha", [math.pi / 2, -1.6, 2.0])
    def test_out_of_range(self, alpha):
        with pytest.raises(ValueError):
            derived_constants(alpha)


class TestParams:
    def test_auto_beta(self):
        p = PhysicalParams(1.0, "auto")
        assert p.beta == pytest.approx(derived_constants(1.0).beta_star + 0.1, rel=1e-15)

    def test_warns_below_beta_star(self):
        with pytest.warns(RuntimeWarning):
            PhysicalParams(1.0, 0.3)

    def test_no_warning_in_hypothesis(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            PhysicalParams(0.0, 1.0)

    @pytest.mark.parametrize("kw", [dict(beta=-1.0), dict(eps=-0.1), dict(delta=0.0), dict(beta="big"), dict(alpha=1.6)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            PhysicalParams(**kw)

    def test_speed_vector(self):
        p = PhysicalParams(0.5, 1.0, eps=0.1)
        assert p.c_vec[0] == pytest.approx(0.99 * p.c0_vec[0], rel=1e-15)
        assert math.hypot(*p.c0_vec) == pytest.approx(p.c0, rel=1e-15)


class TestDispersionFunction:
    @pytest.mark.parametrize("alpha", [0.0, 0.4, 1.0, 1.4])
    def test_origin_vanishes(self, alpha):
        assert abs(g_tilde(0.0, 0.0, PhysicalParams(alpha, "auto"))) < 1e-12

    @given(k1=st.floats(0.01, 5), k2=st.floats(-5, 5), alpha=st.floats(-1.4, 1.4))
    def test_tilde_matches_full(self, k1, k2, alpha):
        p = PhysicalParams(alpha, 2.0)
        assert g_tilde(k1, k2 / k1, p) == pytest.approx(g_full(k1, k2, p), rel=1e-11, abs=1e-11)

    def test_full_at_origin_rejected(self):
        with pytest.raises(ValueError):
            g_full(0.0, 0.0, PhysicalParams())

    def test_perp_convention(self):
        """Flipping ``k_perp`` would flip the sign of the alpha term; pin it down."""
        p = PhysicalParams(1.0, 1.0)
        c1, c2 = p.c0_vec
        k1, k2 = 0.3, 0.8
        ksq = k1**2 + k2**2
        ck, ckp = c1 * k1 + c2 * k2, c1 * k2 - c2 * k1
        expect = -(1.0 * ckp * ck + c_fun(ksq, 1.0) * ck**2) / ksq + 1 + ksq
        assert g_full(k1, k2, p) == pytest.approx(expect, rel=1e-14)

    @pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (0.5, None), (1.0, 0.8)])
    def test_quadratic_model(self, alpha, beta):
        p = PhysicalParams(alpha, beta if beta is not None else "auto")

        def d2(f, h):
            return (f(h) + f(-h) - 2 * f(0.0)) / h**2

        def rich(f, h=1e-3):
            return (4 * d2(f, h / 2) - d2(f, h)) / 3

        a = 0.5 * rich(lambda s: g_tilde(s, 0.0, p))
        b = 0.5 * rich(lambda s: g_tilde(0.0, s, p))
        assert a == pytest.approx(p.beta - p.beta0, rel=1e-6)
        assert b == pytest.approx(p.sec2_half, rel=1e-6)

    @given(k1=st.floats(0.05, 3), k2=st.floats(-3, 3), eps=st.floats(0.0, 0.5))
    def test_eps_perturbation_identity(self, k1, k2, eps):
        p = PhysicalParams(0.8, 1.0)
        c1, c2 = p.c0_vec
        ksq = k1**2 + k2**2
        cD = c1 * k1 + c2 * k2
        cL = c1 * (0.8 * k2 + c_fun(ksq, 0.8) * k1) + c2 * (-0.8 * k1 + c_fun(ksq, 0.8) * k2)
        three_term = g_full(k1, k2, p) + (2 * eps**2 - eps**4) * cD * cL / ksq
        s = 1 - eps**2
        assert g_full(k1, k2, p, c=(s * c1, s * c2)) == pytest.approx(three_term, rel=1e-12, abs=1e-12)


class TestEpsMultiplier:
    def test_limit_symbol(self):
        p = PhysicalParams(0.6, 1.0)
        g = make_grid(8, 8, math.pi, math.pi)
        s = g_eps_multiplier(g, p).symbol
        i1, j0, j1 = list(g.k1).index(1.0), 0, list(g.k2).index(1.0)
        assert s[i1, j0] == pytest.approx(p.beta - p.beta0, rel=1e-15)
        assert s[i1, j1] == pytest.approx(p.beta - p.beta0 + p.sec2_half, rel=1e-15)
        assert s[0, 0] == 0 and s[0, j1] == 0

    def test_positive_eps_matches_tilde(self):
        p = PhysicalParams(0.6, 1.0, eps=0.1)
        g = make_grid(8, 8, math.pi, math.pi)
        s = g_eps_multiplier(g, p).symbol
        i1 = list(g.k1).index(1.0)
        assert s[i1, 0] == pytest.approx(g_tilde(0.1, 0.0, p) / 0.01, rel=1e-14)
        assert s[0, 0] == 0.0
        assert np.all(np.isfinite(s))

    def test_converges_to_limit(self):
        g = make_grid(16, 16, 4.0, 4.0)
        lim = g_eps_multiplier(g, PhysicalParams(0.6, 1.0)).symbol
        band = g.k1_zero_column | (np.arange(16)[:, None] == 0)
        errs = []
        for e in (0.04, 0.02, 0.01):
            s = g_eps_multiplier(g, PhysicalParams(0.6, 1.0, eps=e)).symbol
            errs.append(np.max(np.abs(np.where(band, 0, s - lim))))
        assert errs[1] < 0.6 * errs[0] and errs[2] < 0.6 * errs[1]


class TestKappa:
    def test_alpha_zero(self):
        p = PhysicalParams(0.0, 0.7)
        mu = np.linspace(0, 10, 11)
        np.testing.assert_allclose(kappa_min(mu, p), 1 + 0.7 * mu, rtol=1e-15)

    def test_brute_force_minimum(self):
        p = PhysicalParams(1.0, 1.0)
        th = np.linspace(-np.pi / 2 + 1e-6, np.pi / 2 - 1e-6, 1_000_001)
        vals = kappa(2.0, th, p)
        assert np.min(vals) == pytest.approx(kappa_min(2.0, p), abs=1e-8)
        assert th[np.argmin(vals)] == pytest.approx(theta_min(2.0, p), abs=1e-5)

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 1.4])
    def test_argmin_property(self, alpha):
        p = PhysicalParams(alpha, "auto")
        th = np.linspace(-1.5, 1.5, 3001)
        for mu in (0.0, 0.5, 10.0):
            assert kappa(mu, theta_min(mu, p), p) <= np.min(kappa(mu, th, p)) + 1e-14
            assert kappa(mu, theta_min(mu, p), p) == pytest.approx(kappa_min(mu, p), rel=1e-14)

    def test_theta_min_at_zero(self):
        p = PhysicalParams(0.9, 1.0)
        assert abs(theta_min(0.0, p)) == pytest.approx(math.atan(0.9 * p.c0**2 / 2), rel=1e-15)

    def test_kappa_undefined(self):
        with pytest.raises(ValueError):
            kappa(1.0, np.pi / 2, PhysicalParams())

    def test_equivalence_with_dispersion(self):
        """``g(k) = 0`` iff ``c(|k|^2) = kappa``: check the algebra at a generic k."""
        p = PhysicalParams(0.8, 0.9)
        c1, c2 = p.c0_vec
        k = np.array([0.7, -0.4])
        mu = k @ k
        theta = math.atan2(k[1], k[0]) - math.atan2(c2, c1)
        lhs = g_full(*k, p) * mu
        rhs = (p.c0**2 * mu * math.cos(theta) ** 2) * (kappa(mu, theta, p) - c_fun(mu, 0.8))
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestRootScan:
    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
    def test_no_roots(self, alpha):
        rep = verify_no_nonzero_roots(PhysicalParams(alpha, "auto"))
        assert rep.ok and rep.max_gap < 0 and rep.max_slope_gap < 0 and rep.in_hypothesis
        assert rep.npoints == 10_000

    def test_classical_regime(self):
        assert verify_no_nonzero_roots(PhysicalParams(0.0, 0.5)).ok

    def test_out_of_hypothesis_reports(self):
        with pytest.warns(RuntimeWarning):
            p = PhysicalParams(1.0, derived_constants(1.0).beta_star - 0.2)
        rep = verify_no_nonzero_roots(p)
        assert not rep.in_hypothesis
        assert isinstance(rep.ok, bool)
        assert rep.lines()

    def test_violation_found_for_weak_tension(self):
        with pytest.warns(RuntimeWarning):
            p = PhysicalParams(0.0, 0.05)
        rep = verify_no_nonzero_roots(p)
        assert not rep.ok and rep.violations

    def test_bad_range(self):
        with pytest.raises(ValueError):
            verify_no_nonzero_roots(PhysicalParams(), mu_max=0.0)
