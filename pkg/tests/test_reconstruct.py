import numpy as np
import pytest

from beltrami_kp.dispersion import PhysicalParams
from beltrami_kp.lumps import lump_field, matched_grid
from beltrami_kp.reconstruct import (
    CoverageError,
    eta2_bound,
    reconstruct_eta,
    reconstruction_report,
    trig_interpolate,
    trivial_flow,
)
from beltrami_kp.spectral import make_grid

P = PhysicalParams(alpha=0.0, beta=1.0, eps=0.1)


@pytest.fixture(scope="module")
def zeta():
    return lump_field(1, matched_grid(P, 64, 20.0), P)


def physical_grid(zeta, eps, n=None):
    g = zeta.grid
    n = n or g.nx
    return make_grid(n, n, g.Lx / eps, g.Ly / eps**2)


class TestInterpolation:
    def test_exact_at_nodes(self, zeta):
        g = zeta.grid
        vals = trig_interpolate(zeta, g.x, g.y)
        np.testing.assert_allclose(vals, zeta.values, atol=1e-13)

    def test_single_mode_off_grid(self, rng):
        g = make_grid(16, 16, np.pi, np.pi)
        f = g.sample(lambda X, Y: np.cos(2 * X) * np.sin(3 * Y))
        x, y = rng.uniform(-np.pi, np.pi, (2, 7))
        expected = np.outer(np.cos(2 * x), np.sin(3 * y))
        np.testing.assert_allclose(trig_interpolate(f, x, y), expected, atol=1e-13)


class TestReconstruction:
    def test_origin_value(self, zeta):
        phys = physical_grid(zeta, 0.1)
        eta = reconstruct_eta(zeta, P, phys)
        i, j = phys.nx // 2, phys.ny // 2
        assert phys.x[i] == 0 and phys.y[j] == 0
        assert eta.values[i, j] == pytest.approx(0.01 * zeta.values[32, 32], rel=1e-12)

    def test_eps_zero(self, zeta):
        phys = make_grid(8, 8, 1.0, 1.0)
        assert reconstruct_eta(zeta, P.with_eps(0.0), phys).max_abs() == 0.0

    def test_sign_flip_is_odd(self, zeta):
        phys = physical_grid(zeta, 0.1, n=48)
        a = reconstruct_eta(zeta, P, phys)
        b = reconstruct_eta(zeta * -1.0, P, phys)
        assert np.array_equal(a.values, -b.values)

    def test_coverage_error(self, zeta):
        g = zeta.grid
        phys = make_grid(32, 32, 1.5 * g.Lx / 0.1, g.Ly / 0.01)
        with pytest.raises(CoverageError):
            reconstruct_eta(zeta, P, phys)

    @pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
    def test_amplitude_ratio(self, zeta, eps):
        p = P.with_eps(eps)
        eta = reconstruct_eta(zeta, p, physical_grid(zeta, eps))
        rep = reconstruction_report(zeta, eta, p)
        assert rep.amplitude_ratio == pytest.approx(zeta.max_abs(), rel=1e-12)
        assert len(rep.lines()) == 5

    def test_eta2_bound(self, zeta):
        a = eta2_bound(zeta, P.with_eps(0.1))
        assert a > 0
        assert eta2_bound(zeta, P.with_eps(0.0)) == 0.0


class TestTrivialFlow:
    def test_surface_value(self):
        c = (0.7, -0.2)
        np.testing.assert_allclose(trivial_flow(0.9, c, 0.0), [0.7, -0.2, 0.0], atol=0)

    def test_speed_constant_in_depth(self):
        c = (0.7, -0.2)
        u = trivial_flow(1.1, c, np.linspace(-1, 0, 11))
        assert u.shape == (11, 3)
        np.testing.assert_allclose(np.hypot(u[:, 0], u[:, 1]), np.hypot(*c), rtol=1e-14)
        np.testing.assert_allclose(trivial_flow(1.1, c, -0.5), u[5], atol=1e-14)

    def test_irrotational_is_uniform(self):
        u = trivial_flow(0.0, (1.0, 0.5), np.linspace(-1, 0, 5))
        np.testing.assert_array_equal(u, np.tile([1.0, 0.5, 0.0], (5, 1)))

    def test_beltrami_property(self):
        # curl u = alpha u for u depending on z only: curl = (-du2/dz, du1/dz, 0)
        a, c, z, h = 0.8, (0.6, 0.3), -0.4, 1e-5
        up, um = trivial_flow(a, c, z + h), trivial_flow(a, c, z - h)
        du = (up - um) / (2 * h)
        curl = np.array([-du[1], du[0], 0.0])
        np.testing.assert_allclose(curl, a * trivial_flow(a, c, z), atol=1e-9)
