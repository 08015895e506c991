"""Exact KP-I lumps, their scaling to the physical equation and residual oracles.

The normalised stationary KP-I equation is

    d_x^2(-u_xx + u + 3 u^2) + u_yy = 0,

with the symmetric lump solutions ``u_k = -2 d_x^2 log tau_k`` for ``k = 1, 2``.
The physical equation

    -(beta - beta0) z_xx + 2 z + sec^2(alpha/2) D2^2/D1^2 z + d_alpha z^2 = 0

is solved by ``z(x, y) = A u(a x, b y)`` with the scales of :class:`NormalizationMap`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import mpmath
import numpy as np
import scipy.fft as sfft

from .bandsolve import QuadraticBandProblem
from .dispersion import PhysicalParams
from .spectral import RealField2D, SpectralGrid2D, make_grid, product_hat

__all__ = [
    "Normalized",
    "Physical",
    "LumpSpec",
    "NormalizationMap",
    "NondegeneracyReport",
    "tau_star",
    "lump_u",
    "normalization_map",
    "lump_field",
    "matched_grid",
    "kp_residual_pointwise",
    "kp_residual_normalized",
    "kp_residual_divided",
    "kp_residual_physical",
    "kp_symbol",
    "kp_band",
    "linearized_kp_apply",
    "refine_discrete_lump",
    "nondegeneracy_report",
]

# Integer coefficients {(i, j): c} of x**i y**j for tau, tau_x and tau_xx.
TAU_TABLES = {
    1: (
        {(2, 0): 1, (0, 2): 1, (0, 0): 3},
        {(1, 0): 2},
        {(0, 0): 2},
    ),
    2: (
        {
            (6, 0): 1, (4, 2): 3, (4, 0): 25, (2, 4): 3, (2, 2): 90, (2, 0): -125,
            (0, 6): 1, (0, 4): 17, (0, 2): 475, (0, 0): 1875,
        },
        {(5, 0): 6, (3, 2): 12, (3, 0): 100, (1, 4): 6, (1, 2): 180, (1, 0): -250},
        {(4, 0): 30, (2, 2): 36, (2, 0): 300, (0, 4): 6, (0, 2): 180, (0, 0): -250},
    ),
}


def _check_k(k: int) -> None:
    if k not in TAU_TABLES:
        raise ValueError(f"only lumps k = 1, 2 are available, got {k!r}")


def _evalpoly(table: dict, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    for (i, j), c in table.items():
        out = out + c * x**i * y**j
    return out


def tau_star(k: int, x, y):
    """The polynomial ``tau_k(x, y)``."""
    _check_k(k)
    out = _evalpoly(TAU_TABLES[k][0], x, y)
    return out if out.ndim else float(out)


def lump_u(k: int, x, y):
    """Lump ``u_k = -2 (tau tau_xx - tau_x^2) / tau^2``.

    ``u_k`` is even in each variable; evaluating at ``|x|, |y|`` makes the
    reflection symmetry exact in floating point.
    """
    _check_k(k)
    x, y = np.abs(np.asarray(x, dtype=float)), np.abs(np.asarray(y, dtype=float))
    t, tx, txx = (_evalpoly(tab, x, y) for tab in TAU_TABLES[k])
    out = -2.0 * (t * txx - tx * tx) / (t * t)
    return out if out.ndim else float(out)


# normalisation -------------------------------------------------------------


@dataclass(frozen=True)
class Normalized:
    """Lumps of the normalised equation."""


@dataclass(frozen=True)
class Physical:
    """Lumps mapped to the physical equation for ``(alpha, beta)``."""

    alpha: float
    beta: float


@dataclass(frozen=True)
class LumpSpec:
    k: int = 1
    normalization: Union[Normalized, Physical] = Normalized()

    def __post_init__(self):
        _check_k(self.k)


@dataclass(frozen=True)
class NormalizationMap:
    """``z(x, y) = A u(a x, b y)`` maps normalised to physical lumps."""

    A: float
    a: float
    b: float


def normalization_map(params: PhysicalParams) -> NormalizationMap:
    gap = params.beta - params.beta0
    if not gap > 0:
        raise ValueError(f"need beta > beta0 = {params.beta0:.6g}, got beta = {params.beta:.6g}")
    A = 6.0 / params.d_alpha
    a = math.sqrt(2.0 / gap)
    b = math.sqrt(4.0 * math.cos(0.5 * params.alpha) ** 2 / gap)
    return NormalizationMap(A, a, b)


def matched_grid(params: PhysicalParams | None, n: int = 256, L: float = 40.0, ny: int | None = None) -> SpectralGrid2D:
    """Grid in physical KP variables covering ``[-L, L)^2`` in lump variables."""
    ny = n if ny is None else ny
    if params is None:
        return make_grid(n, ny, L, L)
    nm = normalization_map(params)
    return make_grid(n, ny, L / nm.a, L / nm.b)


def lump_field(k: int, grid: SpectralGrid2D, params: PhysicalParams | None = None) -> RealField2D:
    """Sample the normalised lump, or its physical image when ``params`` is given."""
    if params is None:
        return grid.sample(lambda X, Y: lump_u(k, X, Y))
    nm = normalization_map(params)
    return grid.sample(lambda X, Y: nm.A * lump_u(k, nm.a * X, nm.b * Y))


# high-precision pointwise residual ---------------------------------------


def _shifted_tau(k: int, x0, y0, P: int, Q: int):
    """Taylor coefficients of ``tau(x0 + s, y0 + t)`` for ``s**p t**q``, ``p <= P, q <= Q``."""
    T = [[mpmath.mpf(0)] * (Q + 1) for _ in range(P + 1)]
    for (i, j), c in TAU_TABLES[k][0].items():
        for p in range(min(i, P) + 1):
            cp = c * math.comb(i, p) * x0 ** (i - p)
            for q in range(min(j, Q) + 1):
                T[p][q] += cp * math.comb(j, q) * y0 ** (j - q)
    return T


def _mul(A, B, P, Q):
    C = [[mpmath.mpf(0)] * (Q + 1) for _ in range(P + 1)]
    for i, row in enumerate(A[: P + 1]):
        for j, a in enumerate(row[: Q + 1]):
            if a == 0:
                continue
            for p in range(P + 1 - i):
                Bp = B[p]
                for q in range(Q + 1 - j):
                    C[i + p][j + q] += a * Bp[q]
    return C


def kp_residual_pointwise(k: int, x: float, y: float, dps: int = 40) -> float:
    """Residual of the normalised equation for ``u_k`` at ``(x, y)`` in high precision.

    Works with truncated bivariate Taylor series of ``tau`` about the point:
    ``u = -2 (tau tau_ss - tau_s^2) / tau^2`` is obtained by series division,
    and the derivatives are read off the coefficients.
    """
    _check_k(k)
    P, Q = 4, 2
    with mpmath.workdps(dps):
        x0, y0 = mpmath.mpf(x), mpmath.mpf(y)
        T = _shifted_tau(k, x0, y0, P + 2, Q)
        Ts = [[(p + 1) * T[p + 1][q] for q in range(Q + 1)] for p in range(P + 1)]
        Tss = [[(p + 2) * (p + 1) * T[p + 2][q] for q in range(Q + 1)] for p in range(P + 1)]
        T0 = [row[:] for row in T[: P + 1]]
        N = _mul(T0, Tss, P, Q)
        N2 = _mul(Ts, Ts, P, Q)
        S = _mul(T0, T0, P, Q)
        U = [[mpmath.mpf(0)] * (Q + 1) for _ in range(P + 1)]
        for p in range(P + 1):
            for q in range(Q + 1):
                acc = -2 * (N[p][q] - N2[p][q])
                for i in range(p + 1):
                    for j in range(q + 1):
                        if i or j:
                            acc -= S[i][j] * U[p - i][q - j]
                U[p][q] = acc / S[0][0]
        W = _mul(U, U, P, Q)
        res = -24 * U[4][0] + 2 * U[2][0] + 6 * W[2][0] + 2 * U[0][2]
        return float(res)


# spectral residuals ---------------------------------------------------------


def kp_residual_normalized(u: RealField2D) -> tuple[RealField2D, float]:
    """Spectral residual ``d_x^2(-u_xx + u + 3u^2) + u_yy`` and its discrete L2 norm."""
    g = u.grid
    K1, K2 = g.kmesh
    uh = sfft.fft2(u.values)
    rh = -(K1**2) * (K1**2 * uh + uh + 3.0 * product_hat(uh, uh)) - K2**2 * uh
    r = RealField2D(g, sfft.ifft2(rh).real)
    return r, float(np.sqrt(np.sum(r.values**2) * g.cell_area))


def kp_band(grid: SpectralGrid2D) -> np.ndarray:
    """Modes where the divided form is defined: ``k1 != 0`` and not Nyquist."""
    K1, _ = grid.kmesh
    return (K1 != 0) & ~grid.nyquist_mask


def kp_symbol(grid: SpectralGrid2D, params: PhysicalParams | None = None) -> np.ndarray:
    """Linear symbol of the divided equation, zero where ``k1 = 0``.

    Normalised: ``1 + k1^2 + k2^2/k1^2``.  Physical:
    ``2 + (beta - beta0) k1^2 + sec^2(alpha/2) k2^2/k1^2``.
    """
    K1, _ = grid.kmesh
    m2 = np.nan_to_num(grid.ratio, nan=0.0) ** 2
    if params is None:
        s = 1.0 + K1**2 + m2
    else:
        s = 2.0 + (params.beta - params.beta0) * K1**2 + params.sec2_half * m2
    return np.where(K1 != 0, s, 0.0)


def _coeff(params):
    return 3.0 if params is None else params.d_alpha


def kp_residual_divided(u: RealField2D, params: PhysicalParams | None = None) -> tuple[RealField2D, float]:
    """Divided-form residual on the modes ``k1 != 0`` and its discrete L2 norm."""
    prob = QuadraticBandProblem(u.grid, kp_symbol(u.grid, params), _coeff(params), kp_band(u.grid), even=False)
    r = RealField2D(u.grid, prob.residual(prob.project(u.values)))
    return r, prob.norm(r.values)


def kp_residual_physical(zeta: RealField2D, params: PhysicalParams) -> tuple[RealField2D, float]:
    """Divided-form residual of the physical KP equation."""
    return kp_residual_divided(zeta, params)


def linearized_kp_apply(base: RealField2D, v: RealField2D, params: PhysicalParams | None = None) -> RealField2D:
    """Divided linearisation ``P(D) v + 2 d base v`` on the ``k1 != 0`` modes.

    Normalised: ``(1 + k1^2 + k2^2/k1^2) v + 6 base v``.
    """
    if base.grid != v.grid:
        raise ValueError("grid mismatch")
    prob = QuadraticBandProblem(v.grid, kp_symbol(v.grid, params), _coeff(params), kp_band(v.grid), even=False)
    return RealField2D(v.grid, prob.jacobian_apply(prob.project(base.values), prob.project(v.values)))


def refine_discrete_lump(
    k: int, grid: SpectralGrid2D, params: PhysicalParams | None = None, tol: float = 1e-10, max_iter: int = 12
) -> tuple[RealField2D, "object"]:
    """Newton-refine the sampled lump to a solution of the discrete divided equation.

    The iteration runs in the even subspace, which removes the translation
    kernel.  Returns the refined field and the iteration record.
    """
    u0 = lump_field(k, grid, params)
    prob = QuadraticBandProblem(grid, kp_symbol(grid, params), _coeff(params), kp_band(grid), even=True)
    z, rec = prob.newton(u0.values, tol=tol, max_iter=max_iter, krylov_tol=1e-10)
    return RealField2D(grid, z), rec


@dataclass
class NondegeneracyReport:
    """Lower spectrum of the preconditioned linearisation at a lump."""

    k: int
    symmetry: str
    grid: tuple
    eigenvalues: np.ndarray
    singular_values: np.ndarray
    near_zero_threshold: float
    gap_threshold: float
    kernel_dimension: int
    gap: float
    refine_residual: float
    conclusive: bool
    message: str = ""

    def passed(self, expected_kernel: int) -> bool:
        return self.conclusive and self.kernel_dimension == expected_kernel and self.gap > self.gap_threshold

    def lines(self) -> list[str]:
        return [
            f"k = {self.k}",
            f"symmetry = {self.symmetry}",
            f"grid = {self.grid}",
            f"refined lump residual = {self.refine_residual:.3e}",
            "smallest singular values = " + ", ".join(f"{s:.6e}" for s in self.singular_values),
            f"kernel dimension (< {self.near_zero_threshold:g}) = {self.kernel_dimension}",
            f"first value beyond kernel = {self.gap:.6e} (gap threshold {self.gap_threshold:g})",
            f"conclusive = {self.conclusive} {self.message}".rstrip(),
        ]


def nondegeneracy_report(
    k: int = 1,
    grid: SpectralGrid2D | None = None,
    symmetry: str = "full",
    n_eigs: int = 8,
    near_zero: float = 1e-4,
    gap_threshold: float = 0.05,
    base: RealField2D | None = None,
) -> NondegeneracyReport:
    """Smallest singular values of the normalised divided linearisation at ``u_k``.

    The operator ``P^{-1/2} (P + 6 u .) P^{-1/2}`` (``P = 1 + k1^2 + k2^2/k1^2``)
    is symmetric, so its singular values are the moduli of its eigenvalues.
    The base state is the lump refined to an exact discrete solution, so
    translations give exact kernel directions on the grid.
    """
    _check_k(k)
    sym = symmetry.lower()
    if sym not in ("full", "even"):
        raise ValueError("symmetry must be 'full' or 'even'")
    grid = grid or make_grid(256, 256, 40.0, 40.0)
    if base is None:
        base, rec = refine_discrete_lump(k, grid)
        res = rec.residuals[-1]
    else:
        res = kp_residual_divided(base)[1]
    prob = QuadraticBandProblem(grid, kp_symbol(grid), 3.0, kp_band(grid), even=(sym == "even"))
    msg = ""
    try:
        vals = prob.preconditioned_spectrum(base.values, k=n_eigs)
        conclusive = True
    except Exception as exc:  # ArpackNoConvergence and friends
        vals = np.full(n_eigs, np.nan)
        conclusive = False
        msg = f"eigensolver failed: {exc}"
    sv = np.sort(np.abs(vals))
    kernel = int(np.sum(sv < near_zero)) if conclusive else -1
    gap = float(sv[kernel]) if conclusive and kernel < len(sv) else float("nan")
    return NondegeneracyReport(
        k, sym, grid.shape, vals, sv, near_zero, gap_threshold, kernel, gap, float(res), conclusive, msg
    )
