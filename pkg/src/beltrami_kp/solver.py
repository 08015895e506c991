"""Full-dispersion reduced equation: residual, solvers and continuation in ``eps``.

The equation solved on the band ``chi_eps`` is the explicit truncation

    eps^-2 g_eps(D) zeta + 2 zeta + d_alpha chi_eps(D) zeta^2 = 0,

whose ``eps -> 0`` limit is the physical stationary KP-I equation.  The
remainder terms that are only defined through the three-dimensional reduction
are not part of the model.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from .bandsolve import IterationRecord, QuadraticBandProblem
from .dispersion import PhysicalParams, g_eps_multiplier, g_tilde
from .lumps import kp_band, kp_symbol, lump_field, matched_grid
from .spectral import RealField2D, SpectralGrid2D, band_mask, norm_ys, product_hat, symmetrize

logger = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "SolveResult",
    "ContinuationResult",
    "BandFeasibilityError",
    "ReplaceReport",
    "reduced_problem",
    "residual_reduced",
    "fixed_point_map",
    "linear_symbol",
    "check_band_feasibility",
    "solve",
    "continuation_in_eps",
    "replace_g_with_L_check",
    "symmetrize",
]

NYQUIST_FRACTION = 0.8


class BandFeasibilityError(ValueError):
    """The scaled band is not resolved by the grid."""


@dataclass(frozen=True)
class SolverConfig:
    """Iteration settings.

    ``method`` is ``"pipeline"`` (Petviashvili warm-up then Newton),
    ``"newton"`` or ``"petviashvili"``.  ``theta`` only affects reporting
    (the ``Y_{1+theta}`` distance).
    """

    method: str = "pipeline"
    max_iter: int = 30
    tol_residual: float = 1e-9
    krylov_tol: float = 1e-8
    petviashvili_gamma: float = 2.0
    petviashvili_steps: int = 20
    theta: float = 0.75
    symmetry: str = "even"

    def __post_init__(self):
        if self.method not in ("pipeline", "newton", "petviashvili"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.symmetry not in ("even", "full"):
            raise ValueError("symmetry must be 'even' or 'full'")
        if not (self.tol_residual > 0 and self.krylov_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.petviashvili_gamma > 1:
            raise ValueError("petviashvili_gamma must exceed 1")
        if not 0.5 < self.theta < 1:
            raise ValueError("theta must lie in (1/2, 1)")
        if self.max_iter < 0 or self.petviashvili_steps < 0:
            raise ValueError("iteration counts must be non-negative")


@dataclass
class SolveResult:
    zeta: RealField2D
    residual_norm: float
    iterations: int
    converged: bool
    params: PhysicalParams
    history: list = field(default_factory=list)
    distance_to_lump: dict = field(default_factory=dict)
    message: str = ""


@dataclass
class ContinuationResult:
    eps_values: list
    results: list
    reference: RealField2D
    reference_residual: float
    distances_y1: list
    distances_y1theta: list
    exponent_y1: float
    exponent_y1theta: float
    exponent_y1_stderr: float
    complete: bool

    def rows(self) -> list[list]:
        return [
            [e, r.converged, r.iterations, r.residual_norm, d1, d2]
            for e, r, d1, d2 in zip(self.eps_values, self.results, self.distances_y1, self.distances_y1theta)
        ]


# problem assembly ------------------------------------------------------------


def check_band_feasibility(grid: SpectralGrid2D, params: PhysicalParams) -> None:
    """Require ``delta/eps <= 0.8 k1_nyquist`` so the band is resolved."""
    if params.eps == 0:
        return
    need = params.delta / params.eps
    have = NYQUIST_FRACTION * grid.k1_nyquist
    if need > have:
        nx = int(2 ** math.ceil(math.log2(grid.nx * need / have)))
        raise BandFeasibilityError(
            f"band edge delta/eps = {need:.4g} exceeds {NYQUIST_FRACTION} x Nyquist = {have:.4g}; "
            f"use nx >= {nx} or a larger delta-to-eps ratio"
        )


def solver_band(grid: SpectralGrid2D, params: PhysicalParams) -> np.ndarray:
    """Retained modes: the scaled band without the mean mode and Nyquist rows.

    At ``eps = 0`` this is every mode with ``k1 != 0``.
    """
    if params.eps == 0:
        return kp_band(grid)
    m = band_mask(grid, params.delta, params.eps) & ~grid.nyquist_mask
    m[0, 0] = False
    return m


def linear_symbol(grid: SpectralGrid2D, params: PhysicalParams) -> np.ndarray:
    """``eps^-2 g_eps(k) + 2`` (the KP symbol at ``eps = 0``), zero off the band."""
    band = solver_band(grid, params)
    if params.eps == 0:
        s = kp_symbol(grid, params)
    else:
        s = g_eps_multiplier(grid, params).symbol + 2.0
    return np.where(band, s, 0.0)


def reduced_problem(grid: SpectralGrid2D, params: PhysicalParams, symmetry: str = "even") -> QuadraticBandProblem:
    check_band_feasibility(grid, params)
    band = solver_band(grid, params)
    return QuadraticBandProblem(grid, linear_symbol(grid, params), params.d_alpha, band, even=(symmetry == "even"))


def residual_reduced(zeta: RealField2D, params: PhysicalParams) -> RealField2D:
    """``eps^-2 g_eps(D) zeta + 2 zeta + d_alpha chi_eps(D) zeta^2`` for the band part of ``zeta``."""
    prob = reduced_problem(zeta.grid, params, symmetry="full")
    return RealField2D(zeta.grid, prob.residual(prob.project(zeta.values)))


def fixed_point_map(zeta: RealField2D, params: PhysicalParams) -> RealField2D:
    """``-(eps^-2 g_eps + 2)^-1 d_alpha chi_eps(D) zeta^2``."""
    prob = reduced_problem(zeta.grid, params, symmetry="full")
    z = prob.project(zeta.values)
    zh = sfft.fft2(z)
    nh = -prob.coeff * prob.project_hat(product_hat(zh, zh))
    return RealField2D(zeta.grid, sfft.ifft2(prob._inv * nh).real)


# solving ----------------------------------------------------------------------


def _distances(zeta: RealField2D, ref: RealField2D | None, theta: float) -> dict:
    if ref is None:
        return {}
    diff = zeta - ref
    return {"Y1": norm_ys(diff, 1.0), f"Y{1 + theta:g}": norm_ys(diff, 1.0 + theta)}


def solve(
    zeta0: RealField2D,
    params: PhysicalParams,
    cfg: SolverConfig = SolverConfig(),
    reference: RealField2D | None = None,
) -> SolveResult:
    """Solve the reduced equation from ``zeta0``.

    The residual of the returned field is re-evaluated independently of the
    iteration.  ``reference`` (if given) is used for the distance report.
    """
    if not np.all(np.isfinite(zeta0.values)):
        raise ValueError("initial field is not finite")
    prob = reduced_problem(zeta0.grid, params, cfg.symmetry)
    z = prob.project(zeta0.values)
    history: list[IterationRecord] = []
    iterations = 0
    if cfg.method in ("pipeline", "petviashvili"):
        steps = cfg.petviashvili_steps if cfg.method == "pipeline" else cfg.max_iter
        z, rec = prob.petviashvili(z, steps, cfg.petviashvili_gamma, tol=cfg.tol_residual)
        history.append(rec)
        iterations += rec.iterations
    if cfg.method in ("pipeline", "newton"):
        z, rec = prob.newton(z, tol=cfg.tol_residual, max_iter=cfg.max_iter, krylov_tol=cfg.krylov_tol)
        history.append(rec)
        iterations += rec.iterations
    zeta = RealField2D(zeta0.grid, z)
    rn = prob.norm(prob.residual(prob.project(z)))
    converged = rn <= cfg.tol_residual and not any(h.diverged for h in history)
    msg = "; ".join(h.message for h in history if h.message and not converged)
    return SolveResult(
        zeta, rn, iterations, converged, params, history, _distances(zeta, reference, cfg.theta), msg
    )


def reference_solution(
    k: int, grid: SpectralGrid2D, params: PhysicalParams, cfg: SolverConfig = SolverConfig()
) -> SolveResult:
    """Mapped lump refined by Newton on the ``eps = 0`` problem."""
    p0 = params.with_eps(0.0)
    return solve(lump_field(k, grid, p0), p0, replace(cfg, method="newton"))


def continuation_in_eps(
    k: int,
    eps_list,
    params: PhysicalParams,
    cfg: SolverConfig = SolverConfig(),
    grid: SpectralGrid2D | None = None,
    sign: float = 1.0,
) -> ContinuationResult:
    """Warm-started solves along a decreasing list of ``eps``.

    Distances are measured against the discrete ``eps = 0`` solution, the
    lump refined on the same grid (the sampled lump itself has infinite
    ``Y_1`` norm on a periodic grid because of its ``k1 = 0`` content).
    The first solve starts from ``sign`` times the mapped lump.
    """
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be strictly decreasing")
    grid = grid or matched_grid(params)
    for e in eps_list:
        check_band_feasibility(grid, params.with_eps(e))
    ref = reference_solution(k, grid, params, cfg)
    reference = ref.zeta * sign
    results = []
    z = reference
    for e in eps_list:
        p = params.with_eps(e)
        r = solve(z, p, cfg, reference=reference)
        logger.info("eps=%g converged=%s residual=%.3e its=%d", e, r.converged, r.residual_norm, r.iterations)
        results.append(r)
        if r.converged:
            z = r.zeta
    d1 = [r.distance_to_lump.get("Y1", float("nan")) for r in results]
    d2 = [r.distance_to_lump.get(f"Y{1 + cfg.theta:g}", float("nan")) for r in results]
    p1, se1 = _fit(eps_list, d1)
    p2, _ = _fit(eps_list, d2)
    return ContinuationResult(
        eps_list, results, reference, ref.residual_norm, d1, d2, p1, p2, se1,
        all(r.converged for r in results) and ref.converged,
    )


def _fit(xs, ys) -> tuple[float, float]:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    ok = np.isfinite(ys) & (ys > 0)
    if ok.sum() < 2:
        return float("nan"), float("nan")
    lx, ly = np.log(xs[ok]), np.log(ys[ok])
    if ok.sum() == 2:
        return float((ly[1] - ly[0]) / (lx[1] - lx[0])), float("nan")
    coef, cov = np.polyfit(lx, ly, 1, cov=True)
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


# symbol comparison ---------------------------------------------------------------


@dataclass
class ReplaceReport:
    theta: float
    eps_values: list
    max_ratio: list
    spread: float
    stable: bool


def replace_g_with_L_check(
    params: PhysicalParams, theta: float = 0.75, eps_values=(0.2, 0.1, 0.05), npts: int = 401
) -> ReplaceReport:
    """Envelope-normalised gap between the full and KP preconditioner symbols.

    On a ``npts x npts`` grid of ``(k1, m)`` with ``|k1|, |m| <= delta/eps``
    it evaluates

        |eps^2/(g~(eps k1, eps m) + 2 eps^2) - 1/(2 + (beta-beta0) k1^2 + sec^2 m^2)|
        / (eps^(1-theta) (1 + k1^2 + m^2)^(-(1+theta)/2))

    and reports the maximum for each ``eps``.
    """
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    ratios = []
    for e in eps_values:
        if not e > 0:
            raise ValueError("eps must be positive")
        R = params.delta / e
        k1 = np.linspace(-R, R, npts)
        K1, M = np.meshgrid(k1, k1, indexing="ij")
        full = e**2 / (g_tilde(e * K1, e * M, params) + 2 * e**2)
        kp = 1.0 / (2.0 + (params.beta - params.beta0) * K1**2 + params.sec2_half * M**2)
        env = e ** (1 - theta) * (1 + K1**2 + M**2) ** (-0.5 * (1 + theta))
        ratios.append(float(np.max(np.abs(full - kp) / env)))
    spread = max(ratios) / min(ratios)
    return ReplaceReport(theta, list(eps_values), ratios, spread, spread <= 2.0)
