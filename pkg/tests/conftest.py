import numpy as np
import pytest
from hypothesis import settings

from beltrami_kp.spectral import RealField2D, make_grid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_grid():
    """8 x 8 grid on [-pi, pi)^2 with integer wavenumbers."""
    return make_grid(8, 8, np.pi, np.pi)


def band_limited(grid, rng, frac=1 / 3, even=False):
    """Random real field with modes only in ``|index| < frac * n / 2``."""
    K1, K2 = grid.kmesh
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    keep = (np.abs(K1) < frac * grid.k1_nyquist) & (np.abs(K2) < frac * grid.k2_nyquist)
    v = np.fft.ifft2(np.where(keep, c, 0.0)).real
    f = RealField2D(grid, v / np.max(np.abs(v)))
    if even:
        from beltrami_kp.spectral import symmetrize

        f = symmetrize(f)
    return f


def project(grid, values, mask):
    return RealField2D(grid, np.fft.ifft2(np.where(mask, np.fft.fft2(values), 0.0)).real)


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
