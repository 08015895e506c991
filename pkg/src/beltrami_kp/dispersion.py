"""Dispersion functions, derived model constants and the no-other-roots scan.

The two transcendental symbols are

* ``c_fun(mu, alpha)``: ``sqrt(z) cot sqrt(z)`` with ``z = alpha**2 - mu``
  (continued as ``y coth y``, ``y = sqrt(-z)``, for ``z < 0``),
* ``t_fun(mu, alpha)``: its reciprocal ``tan sqrt(z) / sqrt(z)``.

Both have a removable singularity at ``z = 0`` where a Taylor series is used.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import MultiplierSpec, SpectralGrid2D, ValueAtLimit, ZeroOut

__all__ = [
    "PhysicalParams",
    "DerivedConstants",
    "RootScanReport",
    "c_fun",
    "t_fun",
    "derived_constants",
    "g_full",
    "g_tilde",
    "g_eps_multiplier",
    "kappa",
    "kappa_min",
    "theta_min",
    "verify_no_nonzero_roots",
]

ALPHA_MAX = 0.5 * math.pi

# Series switch for sqrt(z) cot sqrt(z) and its reciprocal.
Z_SERIES_RADIUS = 1e-4
# Below this |alpha| the derived constants use their Taylor series (see _series).
ALPHA_SERIES_RADIUS = 0.1

_COT_SERIES = (1.0, -1.0 / 3, -1.0 / 45, -2.0 / 945, -1.0 / 4725)
_TAN_SERIES = (1.0, 1.0 / 3, 2.0 / 15, 17.0 / 315, 62.0 / 2835)

# Coefficients of alpha**(2j), j = 0..6.
_C0SQ_SERIES = (1.0, 1 / 12, 1 / 120, 17 / 20160, 31 / 362880, 691 / 79833600, 5461 / 6227020800)
_BETA0_SERIES = (
    1 / 3, -1 / 90, 13 / 7560, 1 / 10800, 647 / 59875200, 176639 / 163459296000, 2867 / 26153487360,
)
_BETASTAR_SERIES = (
    1 / 3, 13 / 180, 97 / 7560, 613 / 302400, 17741 / 59875200, 1218053 / 29719872000,
    711511 / 130767436800,
)
_DALPHA_SERIES = (1.5, 0.0, 1 / 120, 1 / 1008, 1 / 9600, 17 / 1596672, 21421 / 19813248000)
_ACOT_SERIES = (1.0, -1 / 3, -1 / 45, -2 / 945, -1 / 4725, -2 / 93555, -1382 / 638512875)


def _poly(coeffs, z):
    out = np.zeros_like(z, dtype=float) + coeffs[-1]
    for c in coeffs[-2::-1]:
        out = out * z + c
    return out


def _check_alpha(alpha: float) -> None:
    if not abs(alpha) < ALPHA_MAX:
        raise ValueError(f"|alpha| must be < pi/2, got {alpha!r}")


def c_fun(mu, alpha: float):
    """The symbol ``c(mu)``, evaluated elementwise for ``mu >= 0``."""
    _check_alpha(alpha)
    mu = np.asarray(mu, dtype=float)
    z = alpha * alpha - mu
    out = np.empty_like(z)
    small = np.abs(z) < Z_SERIES_RADIUS
    pos = (z > 0) & ~small
    neg = (z < 0) & ~small
    out[small] = _poly(_COT_SERIES, z[small])
    s = np.sqrt(z[pos])
    out[pos] = s / np.tan(s)
    y = np.sqrt(-z[neg])
    out[neg] = y / np.tanh(y)
    return out if out.ndim else float(out)


def t_fun(mu, alpha: float):
    """The symbol ``t(mu) = 1/c(mu)``."""
    _check_alpha(alpha)
    mu = np.asarray(mu, dtype=float)
    z = alpha * alpha - mu
    out = np.empty_like(z)
    small = np.abs(z) < Z_SERIES_RADIUS
    pos = (z > 0) & ~small
    neg = (z < 0) & ~small
    out[small] = _poly(_TAN_SERIES, z[small])
    s = np.sqrt(z[pos])
    out[pos] = np.tan(s) / s
    y = np.sqrt(-z[neg])
    out[neg] = np.tanh(y) / y
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DerivedConstants:
    """Constants fixed by ``alpha`` alone."""

    alpha: float
    c0: float
    c0_vec: tuple[float, float]
    beta0: float
    beta_star: float
    d_alpha: float
    alpha_cot_alpha: float

    @property
    def sec2_half(self) -> float:
        return 1.0 / math.cos(0.5 * self.alpha) ** 2


def derived_constants(alpha: float) -> DerivedConstants:
    """Return ``c0``, its direction vector, ``beta0``, ``beta_star`` and ``d_alpha``.

    The closed forms lose about ``1e-16 / alpha**2`` in relative accuracy, so
    for ``|alpha| < 0.1`` a degree-12 Taylor series is used instead.
    """
    _check_alpha(alpha)
    a = float(alpha)
    if abs(a) < ALPHA_SERIES_RADIUS:
        a2 = a * a
        c0sq = float(_poly(_C0SQ_SERIES, a2))
        beta0 = float(_poly(_BETA0_SERIES, a2))
        beta_star = float(_poly(_BETASTAR_SERIES, a2))
        d_alpha = float(_poly(_DALPHA_SERIES, a2))
        acot = float(_poly(_ACOT_SERIES, a2))
    else:
        s, c = math.sin(a), math.cos(a)
        c0sq = 2.0 / a * math.tan(0.5 * a)
        beta0 = (-c + a / s) / (2 * a * a)
        beta_star = (1.0 / a) * (-c / (s * a) + 1.0 / s**2) * math.tan(0.5 * a)
        d_alpha = a / s + 0.5 * a * c / s
        acot = a * c / s
    c0 = math.sqrt(c0sq)
    vec = (c0 * math.cos(0.5 * a), -c0 * math.sin(0.5 * a))
    return DerivedConstants(a, c0, vec, beta0, beta_star, d_alpha, acot)


@dataclass(frozen=True)
class PhysicalParams:
    """Model constants ``alpha, beta, eps, delta`` with derived quantities.

    ``beta`` may be given as the string ``"auto"``, which resolves to
    ``beta_star(alpha) + 0.1``.  A warning is issued for ``beta <= beta_star``
    (outside the regime where the no-other-roots argument applies).
    """

    alpha: float = 0.0
    beta: float | str = 1.0
    eps: float = 0.0
    delta: float = 0.3
    consts: DerivedConstants = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_alpha(self.alpha)
        consts = derived_constants(self.alpha)
        object.__setattr__(self, "consts", consts)
        if isinstance(self.beta, str):
            if self.beta.strip().lower() != "auto":
                raise ValueError(f"beta must be a number or 'auto', got {self.beta!r}")
            object.__setattr__(self, "beta", consts.beta_star + 0.1)
        object.__setattr__(self, "beta", float(self.beta))
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.eps < 0:
            raise ValueError("eps must be non-negative")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.beta <= consts.beta_star:
            warnings.warn(
                f"beta = {self.beta:g} <= beta_star = {consts.beta_star:g}; "
                "nonzero roots of the dispersion function are not excluded",
                RuntimeWarning,
                stacklevel=3,
            )

    def with_eps(self, eps: float) -> "PhysicalParams":
        return PhysicalParams(self.alpha, self.beta, eps, self.delta)

    @property
    def c0(self) -> float:
        return self.consts.c0

    @property
    def c0_vec(self) -> tuple[float, float]:
        return self.consts.c0_vec

    @property
    def c_vec(self) -> tuple[float, float]:
        """The speed vector ``(1 - eps**2) c0_vec``."""
        f = 1.0 - self.eps**2
        return (f * self.c0_vec[0], f * self.c0_vec[1])

    @property
    def beta0(self) -> float:
        return self.consts.beta0

    @property
    def beta_star(self) -> float:
        return self.consts.beta_star

    @property
    def d_alpha(self) -> float:
        return self.consts.d_alpha

    @property
    def sec2_half(self) -> float:
        return self.consts.sec2_half

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "eps": self.eps, "delta": self.delta}


# dispersion function ---------------------------------------------------------


def _cvec(params: PhysicalParams, c):
    return params.c0_vec if c is None else (float(c[0]), float(c[1]))


def g_full(k1, k2, params: PhysicalParams, c=None):
    """Dispersion function ``g(k)`` for ``k != 0``; ``c`` defaults to ``c0_vec``.

    Uses ``k_perp = (k2, -k1)``.
    """
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    ksq = k1**2 + k2**2
    if np.any(ksq == 0):
        raise ValueError("g_full is undefined at k = 0; use g_tilde")
    c1, c2 = _cvec(params, c)
    ck = c1 * k1 + c2 * k2
    ckp = c1 * k2 - c2 * k1
    out = -(params.alpha * ckp * ck + c_fun(ksq, params.alpha) * ck**2) / ksq + 1.0 + params.beta * ksq
    return out if np.ndim(out) else float(out)


def g_tilde(k1, m, params: PhysicalParams, c=None):
    """Dispersion function in the variables ``(k1, m = k2/k1)``; analytic at the origin."""
    k1 = np.asarray(k1, dtype=float)
    m = np.asarray(m, dtype=float)
    c1, c2 = _cvec(params, c)
    w = 1.0 + m**2
    a = c1 + c2 * m
    out = (
        -(params.alpha * (c1 * m - c2) * a + c_fun(k1**2 * w, params.alpha) * a**2) / w
        + 1.0
        + params.beta * k1**2 * w
    )
    return out if np.ndim(out) else float(out)


def kp_limit_symbol(k1, k2, params: PhysicalParams):
    """``(beta - beta0) k1**2 + sec^2(alpha/2) k2**2/k1**2`` (``nan`` where ``k1 = 0``)."""
    k1 = np.asarray(k1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.asarray(k2, dtype=float) / k1
    return (params.beta - params.beta0) * k1**2 + params.sec2_half * m**2


def g_eps_multiplier(grid: SpectralGrid2D, params: PhysicalParams) -> MultiplierSpec:
    """Symbol of ``eps**-2 g(eps k1, eps**2 k2)`` (or its ``eps -> 0`` limit).

    The mean mode takes the limiting value 0 along the band; for ``eps = 0``
    the column ``k1 = 0, k2 != 0`` is singular and zeroed.
    """
    K1, K2 = grid.kmesh
    eps = params.eps
    if eps > 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            m = eps * K2 / K1
        s = np.empty(grid.shape)
        nz = K1 != 0
        s[nz] = g_tilde(eps * K1[nz], m[nz], params) / eps**2
        col = (~nz) & (K2 != 0)
        s[col] = g_full(np.zeros(col.sum()), eps**2 * K2[col], params) / eps**2
        s[0, 0] = np.nan
        return MultiplierSpec(grid, s, ValueAtLimit(0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = kp_limit_symbol(K1, K2, params)
    s[0, 0] = np.nan
    return MultiplierSpec(grid, s, ZeroOut())


# no-other-roots analysis ----------------------------------------------------


def kappa(mu, theta, params: PhysicalParams):
    """``(1 + beta mu - alpha c0^2 sin cos) / (c0^2 cos^2)`` for ``cos theta != 0``."""
    theta = np.asarray(theta, dtype=float)
    cs = np.cos(theta)
    if np.any(np.abs(cs) < 1e-12):
        raise ValueError("kappa is undefined where cos(theta) = 0")
    c0sq = params.c0**2
    out = (1.0 + params.beta * np.asarray(mu) - params.alpha * c0sq * np.sin(theta) * cs) / (c0sq * cs**2)
    return out if np.ndim(out) else float(out)


def kappa_min(mu, params: PhysicalParams):
    c0sq = params.c0**2
    b = 1.0 + params.beta * np.asarray(mu, dtype=float)
    out = b / c0sq - c0sq * params.alpha**2 / (4.0 * b)
    return out if np.ndim(out) else float(out)


def theta_min(mu, params: PhysicalParams):
    """Minimiser of :func:`kappa` over ``theta``.

    With ``theta`` the counterclockwise angle from ``c0`` to ``k`` (the
    convention under which ``kappa`` above follows from ``g(k) = 0``), writing
    ``t = tan(theta)`` gives ``c0^2 kappa = (1 + beta mu)(1 + t^2) - alpha c0^2 t``,
    minimised at ``t = alpha c0^2 / (2 (1 + beta mu))``.  The clockwise angle
    carries the opposite sign.
    """
    b = 1.0 + params.beta * np.asarray(mu, dtype=float)
    out = np.arctan(params.alpha * params.c0**2 / (2.0 * b))
    return out if np.ndim(out) else float(out)


@dataclass
class RootScanReport:
    """Outcome of :func:`verify_no_nonzero_roots`."""

    alpha: float
    beta: float
    beta_star: float
    mu_min: float
    mu_max: float
    npoints: int
    max_gap: float
    mu_at_max_gap: float
    margin_at_mu_min: float
    max_slope_gap: float
    mu_at_max_slope_gap: float
    in_hypothesis: bool
    ok: bool
    violations: list = field(default_factory=list)

    def lines(self) -> list[str]:
        return [
            f"alpha = {self.alpha:.17g}",
            f"beta = {self.beta:.17g}",
            f"beta_star = {self.beta_star:.17g}",
            f"in_hypothesis = {self.in_hypothesis}",
            f"mu_range = [{self.mu_min:.6g}, {self.mu_max:.6g}] with {self.npoints} points",
            f"max(c - kappa_min) = {self.max_gap:.17g} at mu = {self.mu_at_max_gap:.6g}",
            f"margin at mu_min = {self.margin_at_mu_min:.17g}",
            f"max(c' - kappa_min') = {self.max_slope_gap:.17g} at mu = {self.mu_at_max_slope_gap:.6g}",
            f"status = {'no nonzero roots detected' if self.ok else 'VIOLATION'}",
        ]


def verify_no_nonzero_roots(
    params: PhysicalParams, mu_max: float = 100.0, npoints: int = 10_000, mu_tol: float = 1e-6
) -> RootScanReport:
    """Scan ``c(mu) - kappa_min(mu)`` and the slope difference on ``[mu_tol, mu_max]``.

    A negative maximum certifies (on the scanned set) that ``g`` has no zeros
    besides the origin.  Out-of-hypothesis parameters are reported, not rejected.
    """
    if not (mu_max > mu_tol >= 0):
        raise ValueError("need mu_max > mu_tol >= 0")
    mu = np.linspace(mu_tol, mu_max, npoints)
    gap = c_fun(mu, params.alpha) - kappa_min(mu, params)
    h = 1e-5 * np.maximum(1.0, mu)
    dc = (c_fun(mu + h, params.alpha) - c_fun(mu - h, params.alpha)) / (2 * h)
    dk = (kappa_min(mu + h, params) - kappa_min(mu - h, params)) / (2 * h)
    slope = dc - dk
    i = int(np.argmax(gap))
    j = int(np.argmax(slope))
    viol = [float(v) for v in mu[gap >= 0][:10]]
    ok = bool(gap[i] < 0)
    return RootScanReport(
        alpha=params.alpha,
        beta=params.beta,
        beta_star=params.beta_star,
        mu_min=float(mu[0]),
        mu_max=float(mu[-1]),
        npoints=npoints,
        max_gap=float(gap[i]),
        mu_at_max_gap=float(mu[i]),
        margin_at_mu_min=float(-gap[0]),
        max_slope_gap=float(slope[j]),
        mu_at_max_slope_gap=float(mu[j]),
        in_hypothesis=params.beta > params.beta_star,
        ok=ok,
        violations=viol,
    )
