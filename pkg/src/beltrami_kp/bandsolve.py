"""Newton-Krylov and Petviashvili iterations for band-limited quadratic equations.

Every stationary equation in this package has the form

    F(z) = P(D) z + d * Pi(z**2) = 0,

where ``P`` is a real even symbol, positive on the retained band, ``Pi`` is a
sharp projection onto a band of lattice modes and ``z`` lives in that band.
This module solves such equations on a grid.  Fields are plain ``ndarray``
here; the public wrappers in :mod:`beltrami_kp.solver` and
:mod:`beltrami_kp.lumps` attach grids and parameters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, eigsh, minres

from .spectral import SpectralGrid2D, product_hat

logger = logging.getLogger(__name__)

__all__ = ["QuadraticBandProblem", "IterationRecord", "NonConvergence"]


class NonConvergence(RuntimeError):
    """Raised by callers that require convergence."""


@dataclass
class IterationRecord:
    """History of an iterative solve."""

    method: str
    residuals: list = field(default_factory=list)
    krylov_iterations: list = field(default_factory=list)
    converged: bool = False
    diverged: bool = False
    message: str = ""

    @property
    def iterations(self) -> int:
        return max(len(self.residuals) - 1, 0)


class QuadraticBandProblem:
    """``F(z) = P z + d Pi(z^2)`` restricted to a band and optionally to even fields.

    Parameters
    ----------
    grid : SpectralGrid2D
    symbol : ndarray
        Real samples of ``P`` (FFT order).  Only band entries are used.
    coeff : float
        The quadratic coefficient ``d``.
    band : ndarray of bool
        Retained modes.  Nyquist rows are always removed so that the band is
        closed under ``k -> -k`` and products can be dealiased exactly.
    even : bool
        Restrict to fields with ``z(x, y) = z(-x, -y)``, i.e. real coefficients.
    """

    def __init__(self, grid: SpectralGrid2D, symbol: np.ndarray, coeff: float, band: np.ndarray, even: bool = True):
        self.grid = grid
        band = np.asarray(band, dtype=bool) & ~grid.nyquist_mask
        self.band = band
        self.symbol = np.where(band, np.real(symbol), 0.0)
        if np.any(self.symbol[band] <= 0):
            raise ValueError("linear symbol must be positive on the band")
        self.coeff = float(coeff)
        self.even = bool(even)
        self._inv = np.where(band, 1.0 / np.where(band, self.symbol, 1.0), 0.0)
        self._w = grid.cell_area

    # -- basic maps -------------------------------------------------------
    def project_hat(self, zh: np.ndarray) -> np.ndarray:
        out = np.where(self.band, zh, 0.0)
        return out.real.astype(complex) if self.even else out

    def project(self, z: np.ndarray) -> np.ndarray:
        return sfft.ifft2(self.project_hat(sfft.fft2(z))).real

    def _square_hat(self, zh):
        return product_hat(zh, zh)

    def residual_hat(self, zh: np.ndarray) -> np.ndarray:
        return self.symbol * zh + self.coeff * self.project_hat(self._square_hat(zh))

    def residual(self, z: np.ndarray) -> np.ndarray:
        return sfft.ifft2(self.residual_hat(sfft.fft2(z))).real

    def norm(self, z: np.ndarray) -> float:
        return float(np.sqrt(np.sum(z * z) * self._w))

    def residual_norm(self, z: np.ndarray) -> float:
        return self.norm(self.residual(z))

    def jacobian_apply(self, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        """``P v + 2 d Pi(z v)`` for band fields ``v``."""
        zh, vh = sfft.fft2(z), sfft.fft2(v)
        out = self.symbol * vh + 2.0 * self.coeff * self.project_hat(product_hat(zh, vh))
        return sfft.ifft2(out).real

    def apply_inverse_symbol(self, r: np.ndarray) -> np.ndarray:
        return sfft.ifft2(self._inv * self.project_hat(sfft.fft2(r))).real

    # -- Newton-Krylov ----------------------------------------------------
    def _operators(self, z: np.ndarray):
        n = self.grid.npoints
        shape = self.grid.shape
        zh = sfft.fft2(z)
        band, even = self.band, self.even

        def q(vh):
            out = np.where(band, vh, 0.0)
            return out.real.astype(complex) if even else out

        def a_mv(x):
            vh = sfft.fft2(x.reshape(shape))
            qv = q(vh)
            jv = self.symbol * qv + 2.0 * self.coeff * q(product_hat(zh, qv))
            out = jv + (vh - qv)
            return sfft.ifft2(out).real.ravel()

        def m_mv(x):
            vh = sfft.fft2(x.reshape(shape))
            qv = q(vh)
            return sfft.ifft2(self._inv * qv + (vh - qv)).real.ravel()

        A = LinearOperator((n, n), matvec=a_mv, dtype=float)
        M = LinearOperator((n, n), matvec=m_mv, dtype=float)
        return A, M

    def newton(
        self,
        z0: np.ndarray,
        tol: float = 1e-9,
        max_iter: int = 20,
        krylov_tol: float = 1e-8,
        krylov_maxiter: int = 400,
        divergence_window: int = 10,
        record: IterationRecord | None = None,
    ) -> tuple[np.ndarray, IterationRecord]:
        """Damped Newton iteration with a preconditioned MINRES inner solve.

        The step is halved (at most six times) when the residual does not
        decrease.  Iteration stops at ``tol`` (discrete L2 norm of ``F``).
        """
        rec = record or IterationRecord("newton")
        z = self.project(z0)
        r = self.residual(z)
        rn = self.norm(r)
        rec.residuals.append(rn)
        growth = 0
        for it in range(max_iter):
            if rn <= tol:
                rec.converged = True
                break
            A, M = self._operators(z)
            count = [0]

            def cb(_x):
                count[0] += 1

            step, info = minres(A, -r.ravel(), M=M, rtol=krylov_tol, maxiter=krylov_maxiter, callback=cb)
            rec.krylov_iterations.append(count[0])
            step = self.project(step.reshape(self.grid.shape))
            lam = 1.0
            for _ in range(7):
                z_new = z + lam * step
                r_new = self.residual(z_new)
                rn_new = self.norm(r_new)
                if rn_new < rn or lam < 0.02:
                    break
                lam *= 0.5
            growth = growth + 1 if rn_new >= rn else 0
            z, r, rn = z_new, r_new, rn_new
            rec.residuals.append(rn)
            logger.debug("newton it=%d residual=%.3e krylov=%d info=%d", it + 1, rn, count[0], info)
            if growth >= divergence_window:
                rec.diverged = True
                rec.message = f"residual grew over {divergence_window} successive iterations"
                break
        else:
            rec.converged = rn <= tol
        if rn <= tol:
            rec.converged = True
        if not rec.converged and not rec.message:
            rec.message = f"no convergence in {max_iter} iterations (residual {rn:.3e})"
        return z, rec

    # -- Petviashvili -----------------------------------------------------
    def petviashvili(
        self,
        z0: np.ndarray,
        n_steps: int = 20,
        gamma: float = 2.0,
        tol: float = 0.0,
        divergence_window: int = 10,
        record: IterationRecord | None = None,
    ) -> tuple[np.ndarray, IterationRecord]:
        """Petviashvili iteration ``z <- |S|**gamma P^{-1} N(z)`` with ``N(z) = -d Pi(z^2)``.

        ``S = <P z, z> / <N(z), z>`` is the stabilising factor; at a solution
        ``S = 1``.  Because ``N`` is even, a negated solution is mapped back to
        the solution in one step.
        """
        if not gamma > 1:
            raise ValueError("gamma must exceed 1")
        rec = record or IterationRecord("petviashvili")
        zh = self.project_hat(sfft.fft2(z0))
        rn = self.norm(sfft.ifft2(self.residual_hat(zh)).real)
        rec.residuals.append(rn)
        growth = 0
        for _ in range(n_steps):
            if rn <= tol:
                rec.converged = True
                break
            nh = -self.coeff * self.project_hat(self._square_hat(zh))
            num = float(np.sum(self.symbol * np.abs(zh) ** 2))
            den = float(np.real(np.sum(nh * np.conj(zh))))
            if den == 0.0 or num == 0.0:
                rec.message = "stabilising factor undefined (zero iterate)"
                break
            s = num / den
            zh = abs(s) ** gamma * self._inv * nh
            rn_new = self.norm(sfft.ifft2(self.residual_hat(zh)).real)
            growth = growth + 1 if rn_new >= rn else 0
            rn = rn_new
            rec.residuals.append(rn)
            if growth >= divergence_window:
                rec.diverged = True
                rec.message = f"residual grew over {divergence_window} successive iterations"
                break
        if tol > 0 and rn <= tol:
            rec.converged = True
        return sfft.ifft2(zh).real, rec

    # -- spectrum of the linearisation ------------------------------------
    def preconditioned_spectrum(self, z: np.ndarray, k: int = 8, tol: float = 1e-10, seed: int = 0):
        """Smallest algebraic eigenvalues of ``P^{-1/2} F'(z) P^{-1/2}`` on the band.

        The operator is ``I + 2d P^{-1/2} Pi (z P^{-1/2} .)``, symmetric and a
        compact perturbation of the identity, so Lanczos resolves its lower
        end quickly.  Modes outside the (even) band are mapped to ``10``.
        """
        shape = self.grid.shape
        n = self.grid.npoints
        zh = sfft.fft2(z)
        isq = np.sqrt(self._inv)
        band, even = self.band, self.even

        def q(vh):
            out = np.where(band, vh, 0.0)
            return out.real.astype(complex) if even else out

        def mv(x):
            vh = sfft.fft2(x.reshape(shape))
            qv = q(vh)
            w = isq * qv
            jw = qv + 2.0 * self.coeff * isq * q(product_hat(zh, w))
            return sfft.ifft2(jw + 10.0 * (vh - qv)).real.ravel()

        op = LinearOperator((n, n), matvec=mv, dtype=float)
        rng = np.random.default_rng(seed)
        v0 = self.project(rng.standard_normal(shape)).ravel()
        vals = eigsh(op, k=k, which="SA", tol=tol, v0=v0, return_eigenvectors=False, maxiter=20 * n)
        return np.sort(vals)
