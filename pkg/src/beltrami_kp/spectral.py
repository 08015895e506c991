"""Periodic pseudospectral machinery on a doubly periodic box.

The box is ``[-Lx, Lx) x [-Ly, Ly)`` sampled on ``nx x ny`` points.  Spectral
coefficients are stored in FFT order (``scipy.fft`` convention, unnormalised
forward transform), so that the wavenumber attached to index ``i`` is
``pi * fftfreq_index(i) / Lx``.

Every operator of the form ``f(D)`` with ``D = (-i d/dx, -i d/dy)`` is realised
by sampling the symbol ``f`` on the lattice; see :class:`MultiplierSpec`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

__all__ = [
    "SpectralGrid2D",
    "RealField2D",
    "SpectralField2D",
    "ZeroOut",
    "ValueAtLimit",
    "MultiplierSpec",
    "InfiniteNormError",
    "make_grid",
    "transform",
    "inverse",
    "apply_multiplier",
    "dealiased_product",
    "cutoff_chi",
    "cutoff_chi_eps",
    "band_mask",
    "sobolev_norm",
    "norm_ys",
    "norm_scaled",
    "l2_inner",
    "symmetrize",
    "product_hat",
    "fourier_l1",
    "sup_estimate_bound",
    "lp_norm",
]


class InfiniteNormError(ValueError):
    """Raised when a Y_s norm is requested for a field with energy on k1 = 0, k2 != 0."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpectralGrid2D:
    """Uniform periodic grid with its wavenumber lattice.

    Attributes
    ----------
    nx, ny : int
        Number of points (and retained modes) in each direction.
    Lx, Ly : float
        Half-period lengths.
    """

    nx: int
    ny: int
    Lx: float
    Ly: float

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n <= 0 or n % 2:
                raise ValueError(f"{name} must be a positive even integer, got {n!r}")
        for name in ("Lx", "Ly"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return 2.0 * self.Lx / self.nx

    @property
    def dy(self) -> float:
        return 2.0 * self.Ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def npoints(self) -> int:
        return self.nx * self.ny

    @cached_property
    def x(self) -> np.ndarray:
        return -self.Lx + self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return -self.Ly + self.dy * np.arange(self.ny)

    @cached_property
    def k1(self) -> np.ndarray:
        """x-wavenumbers in FFT order."""
        return np.pi * sfft.fftfreq(self.nx, d=1.0 / self.nx) / self.Lx

    @cached_property
    def k2(self) -> np.ndarray:
        return np.pi * sfft.fftfreq(self.ny, d=1.0 / self.ny) / self.Ly

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical coordinates ``(X, Y)`` with ``indexing='ij'``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def kmesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.k1, self.k2, indexing="ij")

    @cached_property
    def ksq(self) -> np.ndarray:
        K1, K2 = self.kmesh
        return K1**2 + K2**2

    @cached_property
    def ratio(self) -> np.ndarray:
        """``k2/k1`` on the lattice, ``nan`` on the column ``k1 = 0``."""
        K1, K2 = self.kmesh
        with np.errstate(divide="ignore", invalid="ignore"):
            m = K2 / K1
        m[K1 == 0] = np.nan
        return m

    @cached_property
    def k1_zero_column(self) -> np.ndarray:
        """Mask of the modes with ``k1 = 0`` and ``k2 != 0``."""
        K1, K2 = self.kmesh
        return (K1 == 0) & (K2 != 0)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        K1, K2 = self.kmesh
        i = np.zeros(self.shape, dtype=bool)
        i[self.nx // 2, :] = True
        i[:, self.ny // 2] = True
        return i

    @property
    def k1_nyquist(self) -> float:
        return np.pi * (self.nx // 2) / self.Lx

    @property
    def k2_nyquist(self) -> float:
        return np.pi * (self.ny // 2) / self.Ly

    def sample(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "RealField2D":
        X, Y = self.mesh
        return RealField2D(self, np.asarray(fn(X, Y), dtype=float))

    def zeros(self) -> "RealField2D":
        return RealField2D(self, np.zeros(self.shape))

    def scaled(self, sx: float, sy: float) -> "SpectralGrid2D":
        """Grid with half-periods ``(Lx*sx, Ly*sy)`` and the same mode counts."""
        return SpectralGrid2D(self.nx, self.ny, self.Lx * sx, self.Ly * sy)

    def as_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "Lx": self.Lx, "Ly": self.Ly}


def make_grid(nx: int, ny: int, Lx: float, Ly: float, strict: bool = False) -> SpectralGrid2D:
    """Build a grid; ``strict`` additionally requires powers of two."""
    if strict and not (_is_power_of_two(int(nx)) and _is_power_of_two(int(ny))):
        raise ValueError(f"strict mode requires powers of two, got ({nx}, {ny})")
    return SpectralGrid2D(int(nx), int(ny), float(Lx), float(Ly))


def _check_same_grid(a: SpectralGrid2D, b: SpectralGrid2D) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class RealField2D:
    """Grid samples of a real scalar field."""

    grid: SpectralGrid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"shape {v.shape} does not match grid {self.grid.shape}")
        if np.iscomplexobj(v):
            raise TypeError("RealField2D values must be real")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v.astype(float, copy=False))

    def _coerce(self, other):
        if isinstance(other, RealField2D):
            _check_same_grid(self.grid, other.grid)
            return other.values
        return other

    def __add__(self, other):
        return RealField2D(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return RealField2D(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return RealField2D(self.grid, self._coerce(other) - self.values)

    def __mul__(self, scalar):
        if isinstance(scalar, RealField2D):
            raise TypeError("use dealiased_product for field products")
        return RealField2D(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return RealField2D(self.grid, self.values / scalar)

    def __neg__(self):
        return RealField2D(self.grid, -self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class SpectralField2D:
    """Unnormalised FFT coefficients of a field (FFT order)."""

    grid: SpectralGrid2D
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    def hermitian_defect(self) -> float:
        """Relative violation of ``c(-k) = conj(c(k))``."""
        c = self.coeffs
        flipped = np.conj(np.roll(c[::-1, ::-1], 1, axis=(0, 1)))
        scale = max(np.max(np.abs(c)), np.finfo(float).tiny)
        return float(np.max(np.abs(c - flipped)) / scale)


Field = Union[RealField2D, SpectralField2D]


def transform(f: RealField2D) -> SpectralField2D:
    return SpectralField2D(f.grid, sfft.fft2(f.values))


def inverse(fh: SpectralField2D, rtol: float = 1e-12) -> RealField2D:
    """Inverse transform of coefficients of a real field.

    Raises ``ValueError`` if the Hermitian defect exceeds ``rtol``; the
    round-off imaginary part is dropped.
    """
    if fh.hermitian_defect() > rtol:
        raise ValueError("coefficients are not Hermitian; they do not represent a real field")
    return RealField2D(fh.grid, sfft.ifft2(fh.coeffs).real)


# singular-mode policies -----------------------------------------------------


@dataclass(frozen=True)
class ZeroOut:
    """Set the symbol to zero where its formula is undefined."""

    def fill(self, symbol: np.ndarray, mask: np.ndarray) -> None:
        symbol[mask] = 0.0


@dataclass(frozen=True)
class ValueAtLimit:
    """Replace the undefined samples by a prescribed (limit) value."""

    value: complex

    def fill(self, symbol: np.ndarray, mask: np.ndarray) -> None:
        symbol[mask] = self.value


@dataclass(frozen=True, eq=False)
class MultiplierSpec:
    """A Fourier symbol sampled on a grid's wavenumber lattice.

    ``singular`` marks the lattice points where the defining formula is not
    defined; they are filled by ``policy`` at construction.
    """

    grid: SpectralGrid2D
    symbol: np.ndarray
    policy: Union[ZeroOut, ValueAtLimit] = field(default_factory=ZeroOut)
    singular: np.ndarray | None = None

    def __post_init__(self):
        s = np.array(self.symbol, dtype=complex if np.iscomplexobj(self.symbol) else float)
        if s.shape != self.grid.shape:
            raise ValueError(f"symbol shape {s.shape} does not match grid {self.grid.shape}")
        mask = ~np.isfinite(s)
        if self.singular is not None:
            mask |= np.asarray(self.singular, dtype=bool)
        if mask.any():
            self.policy.fill(s, mask)
        if not np.all(np.isfinite(s)):
            raise ValueError("symbol not finite after applying the singular-mode policy")
        object.__setattr__(self, "symbol", s)
        object.__setattr__(self, "singular", mask)

    @classmethod
    def from_function(cls, grid, fn, policy=None, singular=None) -> "MultiplierSpec":
        """Sample ``fn(K1, K2)`` on the lattice, with floating-point warnings silenced."""
        K1, K2 = grid.kmesh
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            s = fn(K1, K2)
        s = np.broadcast_to(np.asarray(s), grid.shape).copy()
        return cls(grid, s, policy or ZeroOut(), singular)

    @classmethod
    def constant(cls, grid, value) -> "MultiplierSpec":
        return cls(grid, np.full(grid.shape, value))

    def __mul__(self, other):
        if isinstance(other, MultiplierSpec):
            _check_same_grid(self.grid, other.grid)
            return MultiplierSpec(self.grid, self.symbol * other.symbol)
        return MultiplierSpec(self.grid, self.symbol * other)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, MultiplierSpec):
            _check_same_grid(self.grid, other.grid)
            return MultiplierSpec(self.grid, self.symbol + other.symbol)
        return MultiplierSpec(self.grid, self.symbol + other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def is_even_real(self, rtol: float = 1e-13) -> bool:
        s = self.symbol
        if np.iscomplexobj(s) and np.max(np.abs(s.imag)) > rtol * max(np.max(np.abs(s)), 1.0):
            return False
        flipped = np.roll(s[::-1, ::-1], 1, axis=(0, 1))
        return bool(np.max(np.abs(s - flipped)) <= rtol * max(np.max(np.abs(s)), 1.0))


def apply_multiplier(m: MultiplierSpec, f: Field) -> Field:
    """Coefficientwise product; the output has the same representation as ``f``."""
    _check_same_grid(m.grid, f.grid)
    if isinstance(f, SpectralField2D):
        return SpectralField2D(f.grid, m.symbol * f.coeffs)
    return RealField2D(f.grid, sfft.ifft2(m.symbol * sfft.fft2(f.values)).real)


# dealiased products ---------------------------------------------------------


def _pad(ch: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Embed FFT-ordered coefficients in a larger array, dropping Nyquist rows."""
    nx, ny = ch.shape
    Mx, My = shape
    hx, hy = nx // 2, ny // 2
    out = np.zeros(shape, dtype=complex)
    ix = np.r_[0:hx, Mx - hx + 1 : Mx]
    iy = np.r_[0:hy, My - hy + 1 : My]
    sx = np.r_[0:hx, nx - hx + 1 : nx]
    sy = np.r_[0:hy, ny - hy + 1 : ny]
    out[np.ix_(ix, iy)] = ch[np.ix_(sx, sy)]
    return out


def _truncate(ch: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    nx, ny = shape
    Mx, My = ch.shape
    hx, hy = nx // 2, ny // 2
    out = np.zeros(shape, dtype=complex)
    ix = np.r_[0:hx, Mx - hx + 1 : Mx]
    iy = np.r_[0:hy, My - hy + 1 : My]
    sx = np.r_[0:hx, nx - hx + 1 : nx]
    sy = np.r_[0:hy, ny - hy + 1 : ny]
    out[np.ix_(sx, sy)] = ch[np.ix_(ix, iy)]
    return out


def _padded_shape(shape):
    return tuple(3 * ((n + 1) // 2) if n % 2 == 0 else 3 * n // 2 for n in shape)


def product_hat(ah: np.ndarray, bh: np.ndarray) -> np.ndarray:
    """Dealiased product of two coefficient arrays (FFT order, unnormalised).

    Inputs are zero-padded to 3/2 the size (the padding form of the 2/3 rule),
    multiplied pointwise and truncated back.  Nyquist modes are discarded.
    Works for complex-valued fields too.
    """
    n = ah.shape
    M = _padded_shape(n)
    scale = (M[0] * M[1]) / (n[0] * n[1])
    a = sfft.ifft2(_pad(ah, M))
    b = sfft.ifft2(_pad(bh, M))
    return _truncate(sfft.fft2(a * b), n) * scale


def dealiased_product(f: RealField2D, g: RealField2D) -> RealField2D:
    """Pointwise product of two real fields with 3/2 zero-padding."""
    _check_same_grid(f.grid, g.grid)
    ch = product_hat(sfft.fft2(f.values), sfft.fft2(g.values))
    return RealField2D(f.grid, sfft.ifft2(ch).real)


# cutoffs --------------------------------------------------------------------


def band_mask(grid: SpectralGrid2D, delta: float, eps: float | None = None) -> np.ndarray:
    """Boolean mask of the long-wave band.

    ``eps=None`` gives the unscaled band ``|k1| <= delta, |k2/k1| <= delta``.
    Otherwise the scaled band ``|eps k1| <= delta, |eps k2/k1| <= delta``.
    On the column ``k1 = 0`` only the mean mode is kept (closure of the set).
    ``eps = 0`` is the limit of the scaled bands: every mode with ``k1 != 0``
    plus the mean mode.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    K1, K2 = grid.kmesh
    slack = 1.0 + 1e-12
    if eps is None:
        a1, a2 = 1.0, 1.0
    else:
        if eps < 0:
            raise ValueError("eps must be non-negative")
        a1, a2 = eps, eps
    keep = (a1 * np.abs(K1) <= delta * slack) & (a2 * np.abs(K2) <= delta * np.abs(K1) * slack)
    keep[0, 0] = True
    if eps is not None and eps == 0:
        keep = ~grid.k1_zero_column
    return keep


def cutoff_chi(grid: SpectralGrid2D, delta: float) -> MultiplierSpec:
    return MultiplierSpec(grid, band_mask(grid, delta).astype(float))


def cutoff_chi_eps(grid: SpectralGrid2D, delta: float, eps: float) -> MultiplierSpec:
    return MultiplierSpec(grid, band_mask(grid, delta, eps).astype(float))


# norms ----------------------------------------------------------------------


def _weighted_sq(f: Field, weight: np.ndarray | float) -> float:
    fh = f.coeffs if isinstance(f, SpectralField2D) else sfft.fft2(f.values)
    g = f.grid
    return float(np.sum(weight * np.abs(fh) ** 2) * g.cell_area / g.npoints)


def l2_inner(f: RealField2D, g: RealField2D) -> float:
    """Discrete ``int f g`` over the box."""
    _check_same_grid(f.grid, g.grid)
    return float(np.sum(f.values * g.values) * f.grid.cell_area)


def sobolev_norm(f: Field, s: float = 0.0) -> float:
    """Discrete H^s norm, weight ``(1 + |k|^2)^s``."""
    return float(np.sqrt(_weighted_sq(f, (1.0 + f.grid.ksq) ** s)))


def _ys_weight(grid: SpectralGrid2D) -> np.ndarray:
    K1, _ = grid.kmesh
    w = 1.0 + K1**2 + np.nan_to_num(grid.ratio, nan=0.0) ** 2
    return w


def _check_no_k1_zero_energy(f: Field, rtol: float) -> None:
    fh = f.coeffs if isinstance(f, SpectralField2D) else sfft.fft2(f.values)
    col = np.abs(fh[f.grid.k1_zero_column])
    scale = np.max(np.abs(fh)) if fh.size else 0.0
    if col.size and np.max(col) > rtol * max(scale, np.finfo(float).tiny):
        raise InfiniteNormError(
            "field has energy on k1 = 0, k2 != 0 where the Y_s weight is infinite; "
            "project onto a band first"
        )


def norm_ys(f: Field, s: float = 1.0, rtol: float = 1e-12) -> float:
    """Discrete Y_s norm, weight ``(1 + k1^2 + k2^2/k1^2)^s``."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if s > 0:
        _check_no_k1_zero_energy(f, rtol)
    return float(np.sqrt(_weighted_sq(f, _ys_weight(f.grid) ** s)))


def norm_scaled(f: Field, eps: float, rtol: float = 1e-12) -> float:
    """The scaled band norm, weight ``1 + (k1^2 + k2^2/k1^2) / eps^2``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    _check_no_k1_zero_energy(f, rtol)
    K1, _ = f.grid.kmesh
    w = 1.0 + (K1**2 + np.nan_to_num(f.grid.ratio, nan=0.0) ** 2) / eps**2
    return float(np.sqrt(_weighted_sq(f, w)))


def symmetrize(f: RealField2D) -> RealField2D:
    """Even part under ``(x, y) -> (-x, -y)``, i.e. index ``i -> -i mod n``."""
    v = f.values
    return RealField2D(f.grid, 0.5 * (v + np.roll(v[::-1, ::-1], 1, axis=(0, 1))))


def fourier_l1(f: Field) -> float:
    """``int |f^(k)| dk`` with the unitary transform, as a lattice sum."""
    g = f.grid
    fh = f.coeffs if isinstance(f, SpectralField2D) else sfft.fft2(f.values)
    dk = (np.pi / g.Lx) * (np.pi / g.Ly)
    return float(np.sum(np.abs(fh)) * g.cell_area / (2 * np.pi) * dk)


def sup_estimate_bound(grid: SpectralGrid2D, mask: np.ndarray, eps: float) -> float:
    """Cauchy-Schwarz constant ``sqrt(I)/eps`` for ``||f^||_L1 <= C eps |||f|||`` on a band."""
    K1, _ = grid.kmesh
    w = 1.0 + (K1**2 + np.nan_to_num(grid.ratio, nan=0.0) ** 2) / eps**2
    dk = (np.pi / grid.Lx) * (np.pi / grid.Ly)
    return float(np.sqrt(np.sum(np.where(mask, 1.0 / w, 0.0)) * dk) / eps)


def lp_norm(f: RealField2D, p: float) -> float:
    return float((np.sum(np.abs(f.values) ** p) * f.grid.cell_area) ** (1.0 / p))
