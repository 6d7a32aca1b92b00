"""Theoretical objects for the running maximum M_T of the log-price.

* the Garsia-Rodemich-Rumsey functional Y and its control radius R_T;
* the concentration bound with explicit constant C^2 = beta^2 (1 - rho^2) T;
* the Gaussian-type density bound for M_T and its integrated (CDF) form;
* the minimum of the last two, and calibration of the unnamed constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc

from .errors import InsufficientData, InvalidArgument
from .vol import VolBounds

DEFAULT_HEADROOM = 1.2


@dataclass(frozen=True)
class GrrParams:
    p0: int = 7
    gamma0: float = 4.5
    C_grr: float = 1.0

    def __post_init__(self):
        if int(self.p0) != self.p0:
            raise InvalidArgument(f"p0 must be an integer, got {self.p0}")
        if not self.p0 - 2 > self.gamma0 > 4:
            raise InvalidArgument(
                f"need p0 - 2 > gamma0 > 4, got p0={self.p0}, gamma0={self.gamma0}"
            )
        if not self.C_grr > 0:
            raise InvalidArgument(f"C_grr must be positive, got {self.C_grr}")


@dataclass(frozen=True)
class DensityBoundParams:
    """Density bound ``(c1/sqrt(T)) exp(-(z-x)^2 / (2 c2 T))``: ``c1`` amplitude, ``c2`` variance scale."""

    c1: float
    c2: float

    def __post_init__(self):
        if not self.c1 >= 0:
            raise InvalidArgument(f"c1 must be non-negative, got {self.c1}")
        if not self.c2 > 0:
            raise InvalidArgument(f"c2 must be positive, got {self.c2}")


# ---------------------------------------------------------------------------
# GRR functional


def _int_power(d: np.ndarray, k: int) -> np.ndarray:
    # d**k by repeated squaring; much cheaper than a generic pow for k ~ 14.
    result = np.ones_like(d)
    base = d.copy()
    while k:
        if k & 1:
            result *= base
        k >>= 1
        if k:
            base *= base
    return result


def y_functional(X: np.ndarray, dt: float, p0: int = 7, gamma0: float = 4.5) -> np.ndarray | float:
    """Trapezoidal double sum for ``int int (X_t - X_s)^(2p0) / |t-s|^gamma0 dt ds``.

    ``X`` is one path (1-D) or a batch (2-D, paths along axis 0) on a uniform
    grid with spacing ``dt``. Diagonal cells contribute 0. Terms too small to
    represent underflow to 0, which is below the sum's resolution anyway.
    """
    GrrParams(p0, gamma0)
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    m = X2.shape[1]
    w = np.ones(m)
    w[0] = w[-1] = 0.5
    total = np.zeros(X2.shape[0])
    for lag in range(1, m):
        d = X2[:, lag:] - X2[:, :-lag]
        terms = _int_power(d * d, p0) @ (w[lag:] * w[:-lag])
        total += terms / (lag * dt) ** gamma0
    total *= 2.0 * dt * dt
    return float(total[0]) if single else total


def grr_radius(beta: float, T: float, grr: GrrParams, x: float = 0.0) -> float:
    """``R_T(beta) = C_grr (beta - x)^(2 p0) T^((4 - gamma0)/2)``."""
    if not beta > x:
        raise InvalidArgument(f"level beta must exceed x, got beta={beta}, x={x}")
    return grr.C_grr * (beta - x) ** (2 * grr.p0) * T ** ((4.0 - grr.gamma0) / 2.0)


def calibrate_grr(
    Y: np.ndarray, sup_dev: np.ndarray, level: float, T: float, grr: GrrParams,
    headroom: float = DEFAULT_HEADROOM,
) -> GrrParams:
    """Largest C_grr for which ``Y <= R_T`` implies ``sup|X - x| <= level`` on the
    training paths, shrunk by ``headroom**(2 p0)`` (a ``headroom`` factor on the
    level itself, since R_T scales as level^(2 p0)).
    """
    Y, sup_dev = np.asarray(Y), np.asarray(sup_dev)
    violators = sup_dev > level
    if not np.any(violators):
        raise InsufficientData("no training path exceeds the level; C_grr is unconstrained")
    unit = grr_radius(level, T, GrrParams(grr.p0, grr.gamma0, 1.0))
    c_max = float(np.min(Y[violators])) / unit
    return GrrParams(grr.p0, grr.gamma0, c_max / headroom ** (2 * grr.p0))


# ---------------------------------------------------------------------------
# Tail bounds


def _check_rho(rho: float) -> None:
    if not -1 < rho < 1:
        raise InvalidArgument(f"rho must lie strictly inside (-1, 1), got {rho}")


def concentration_bound(b: float, center: float, T: float, vol_bounds: VolBounds, rho: float) -> float:
    """``exp(-(b - center)^2 / (2 beta^2 (1 - rho^2) T))``; 1 when ``b <= center``.

    Pass the empirical mean of M_T as ``center`` for the provable form, or the
    initial log-price for the form with the constant absorbed.
    """
    _check_rho(rho)
    if b <= center:
        return 1.0
    c2 = vol_bounds.beta ** 2 * (1.0 - rho * rho) * T
    return math.exp(-((b - center) ** 2) / (2.0 * c2))


def density_bound(z, x: float, T: float, params: DensityBoundParams):
    z = np.asarray(z, dtype=float)
    val = params.c1 / math.sqrt(T) * np.exp(-((z - x) ** 2) / (2.0 * params.c2 * T))
    return float(val) if val.ndim == 0 else val


def gaussian_tail(u):
    """Standard normal upper tail Q(u) = erfc(u / sqrt 2) / 2."""
    return 0.5 * erfc(np.asarray(u) / math.sqrt(2.0))


def cdf_bound(b: float, x: float, T: float, params: DensityBoundParams) -> float:
    """Integral of :func:`density_bound` over ``[b, inf)`` in closed form."""
    return float(params.c1 * math.sqrt(2 * math.pi * params.c2) * gaussian_tail((b - x) / math.sqrt(params.c2 * T)))


def cdf_bound_quad(b: float, x: float, T: float, params: DensityBoundParams) -> float:
    """Same quantity by adaptive quadrature; kept as a cross-check."""
    scale = math.sqrt(params.c2 * T)
    # Integrate in standardized units so the integrand is O(1).
    f = lambda u: params.c1 / math.sqrt(T) * scale * math.exp(-0.5 * u * u)
    val, _ = quad(f, (b - x) / scale, math.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def combined_bound(
    b: float, x: float, T: float, vol_bounds: VolBounds | None, rho: float,
    params: DensityBoundParams, center: float | None = None,
) -> float:
    """min(concentration bound, CDF bound); without vol bounds only the CDF bound applies."""
    cdf = cdf_bound(b, x, T, params)
    if vol_bounds is None:
        return cdf
    conc = concentration_bound(b, x if center is None else center, T, vol_bounds, rho)
    return min(conc, cdf)


# ---------------------------------------------------------------------------
# Calibration of the existence-only constants


def calibrate_cdf_amplitude(
    maturities: Sequence[float], probabilities: Sequence[float], x: float, b: float, c2: float,
    headroom: float = DEFAULT_HEADROOM,
) -> DensityBoundParams:
    """Smallest c1 (times ``headroom``) whose CDF bound covers every given probability."""
    unit = DensityBoundParams(1.0, c2)
    ratios = [p / cdf_bound(b, x, T, unit) for T, p in zip(maturities, probabilities)]
    if not ratios:
        raise InsufficientData("no rows to calibrate on")
    return DensityBoundParams(headroom * max(max(ratios), 0.0), c2)


def calibrate_density_amplitude(
    z: np.ndarray, density: np.ndarray, x: float, T: float, c2: float,
    headroom: float = DEFAULT_HEADROOM,
) -> DensityBoundParams:
    """Smallest c1 (times ``headroom``) whose density bound covers ``density`` at ``z``."""
    unit = density_bound(np.asarray(z), x, T, DensityBoundParams(1.0, c2))
    return DensityBoundParams(headroom * float(np.max(np.asarray(density) / unit)), c2)
