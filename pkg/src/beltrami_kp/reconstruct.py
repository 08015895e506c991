"""Physical surface from a scaled solution, and the trivial Beltrami flow.

A solution ``zeta`` of the reduced equation in scaled variables gives the
leading part of the free surface

    eta_1(x, y) = eps**2 zeta(eps x, eps**2 y).

The correction ``eta_2`` is not computed; only the size of its predicted
bound ``eps |||eta_1|||**2`` is reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .dispersion import PhysicalParams
from .spectral import RealField2D, SpectralGrid2D, band_mask, norm_ys

__all__ = [
    "CoverageError",
    "ReconstructionReport",
    "trig_interpolate",
    "reconstruct_eta",
    "eta2_bound",
    "reconstruction_report",
    "trivial_flow",
]

_COVER_RTOL = 1e-12


class CoverageError(ValueError):
    """The physical grid maps outside the periodic cell of the scaled field."""


def trig_interpolate(f: RealField2D, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` on the tensor grid ``X x Y``.

    ``X`` and ``Y`` are 1-D coordinate arrays; the result has shape
    ``(X.size, Y.size)``.  Nyquist modes enter through their real part, which
    keeps the interpolant real and exact at the grid nodes.
    """
    g = f.grid
    C = sfft.fft2(f.values)
    Ex = np.exp(1j * np.outer(np.asarray(X, float) + g.Lx, g.k1))
    Ey = np.exp(1j * np.outer(np.asarray(Y, float) + g.Ly, g.k2))
    return (Ex @ C @ Ey.T).real / g.npoints


def _check_coverage(zeta_grid: SpectralGrid2D, eps: float, phys: SpectralGrid2D) -> None:
    need_x, need_y = eps * phys.Lx, eps**2 * phys.Ly
    if need_x > zeta_grid.Lx * (1 + _COVER_RTOL) or need_y > zeta_grid.Ly * (1 + _COVER_RTOL):
        raise CoverageError(
            f"physical half-periods ({phys.Lx:g}, {phys.Ly:g}) map to ({need_x:g}, {need_y:g}) "
            f"in scaled variables, outside the cell ({zeta_grid.Lx:g}, {zeta_grid.Ly:g})"
        )


def reconstruct_eta(zeta: RealField2D, params: PhysicalParams, physical_grid: SpectralGrid2D) -> RealField2D:
    """``eps**2 zeta(eps x, eps**2 y)`` sampled on ``physical_grid``.

    Raises
    ------
    CoverageError
        If ``eps > 0`` and the rescaled physical box leaves the cell of ``zeta``.
    """
    eps = params.eps
    if eps == 0:
        return physical_grid.zeros()
    _check_coverage(zeta.grid, eps, physical_grid)
    vals = trig_interpolate(zeta, eps * physical_grid.x, eps**2 * physical_grid.y)
    return RealField2D(physical_grid, eps**2 * vals)


def eta2_bound(zeta: RealField2D, params: PhysicalParams) -> float:
    """Size ``eps |||eta_1|||**2 = eps**2 ||zeta||_{Y_1}**2`` of the omitted correction.

    ``zeta`` is first projected onto the scaled band so that the ``Y_1`` norm
    is finite.  The bound holds up to an unspecified constant.
    """
    eps = params.eps
    if eps == 0:
        return 0.0
    mask = band_mask(zeta.grid, params.delta, eps)
    zh = np.where(mask, sfft.fft2(zeta.values), 0.0)
    proj = RealField2D(zeta.grid, sfft.ifft2(zh).real)
    return eps**2 * norm_ys(proj, 1.0, rtol=1e-10) ** 2


@dataclass
class ReconstructionReport:
    eps: float
    max_eta: float
    max_zeta: float
    amplitude_ratio: float
    eta2_bound: float

    def lines(self) -> list[str]:
        return [
            f"eps = {self.eps:.17g}",
            f"max|eta_1| = {self.max_eta:.17g}",
            f"max|zeta| = {self.max_zeta:.17g}",
            f"max|eta_1| / eps^2 = {self.amplitude_ratio:.17g}",
            f"eta_2 bound (up to a constant) = {self.eta2_bound:.17g}",
        ]


def reconstruction_report(zeta: RealField2D, eta: RealField2D, params: PhysicalParams) -> ReconstructionReport:
    eps = params.eps
    ratio = eta.max_abs() / eps**2 if eps > 0 else float("nan")
    return ReconstructionReport(eps, eta.max_abs(), zeta.max_abs(), ratio, eta2_bound(zeta, params))


def trivial_flow(alpha: float, c_vec, z) -> np.ndarray:
    """The uniform Beltrami flow ``c1 (cos az, -sin az, 0) + c2 (sin az, cos az, 0)``.

    Returns an array of shape ``(3,)`` for scalar ``z`` and ``(n, 3)`` for an
    array of heights.
    """
    c1, c2 = (float(c) for c in c_vec)
    z = np.asarray(z, dtype=float)
    ca, sa = np.cos(alpha * z), np.sin(alpha * z)
    out = np.stack([c1 * ca + c2 * sa, -c1 * sa + c2 * ca, np.zeros_like(z)], axis=-1)
    return out
