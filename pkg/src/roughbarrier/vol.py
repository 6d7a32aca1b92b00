"""Volatility paths on a time grid: constant, rough Bergomi and truncated rough Bergomi."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgument
from .kernel import TimeGrid

TRUNCATION_MODES = ("variance", "volatility")


@dataclass(frozen=True)
class VolBounds:
    """Uniform bounds ``alpha <= sigma_t <= beta``.

    ``alpha == beta`` is allowed so constant volatility can report its bounds.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        if not 0 < self.alpha <= self.beta:
            raise InvalidArgument(f"need 0 < alpha <= beta, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class ConstantVolParams:
    sigma0: float
    rho: float = 0.0

    tag = "const"

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise InvalidArgument(f"sigma0 must be positive, got {self.sigma0}")
        _check_rho(self.rho)

    def vol_bounds(self) -> VolBounds:
        return VolBounds(self.sigma0, self.sigma0)


@dataclass(frozen=True)
class RoughBergomiParams:
    """Rough Bergomi parameters.

    ``truncation_n=None`` gives the raw model. With a truncation level the
    log-variance exponent is passed through the clamp :func:`phi_n`;
    ``truncation_mode`` chooses whether the clamp acts on the variance
    (``sigma = sqrt(phi_n)`` with ``phi = sigma0^2 e^x``) or directly on the
    volatility (``sigma = phi_n`` with ``phi = sigma0 e^x``).
    """

    sigma0: float
    nu: float
    H: float
    rho: float
    truncation_n: Optional[float] = None
    truncation_mode: str = "variance"

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise InvalidArgument(f"sigma0 must be positive, got {self.sigma0}")
        if not self.nu >= 0:
            raise InvalidArgument(f"nu must be non-negative, got {self.nu}")
        if not 0 < self.H < 1:
            raise InvalidArgument(f"H must lie in (0, 1), got {self.H}")
        _check_rho(self.rho)
        if self.truncation_n is not None and not self.truncation_n > 0:
            raise InvalidArgument(f"truncation_n must be positive, got {self.truncation_n}")
        if self.truncation_mode not in TRUNCATION_MODES:
            raise InvalidArgument(f"truncation_mode must be one of {TRUNCATION_MODES}")

    @property
    def tag(self) -> str:
        return "rbergomi" if self.truncation_n is None else "rbergomi-trunc"

    def vol_bounds(self) -> Optional[VolBounds]:
        if self.truncation_n is None:
            return None
        return truncation_bounds(self.sigma0, self.truncation_n, self.truncation_mode)


def _check_rho(rho: float) -> None:
    if not -1 < rho < 1:
        raise InvalidArgument(f"rho must lie strictly inside (-1, 1), got {rho}")


def const_vol(grid: TimeGrid, sigma0: float) -> np.ndarray:
    if not sigma0 > 0:
        raise InvalidArgument(f"sigma0 must be positive, got {sigma0}")
    return np.full(grid.n_steps + 1, float(sigma0))


def _exponent(WH: np.ndarray, grid: TimeGrid, nu: float, H: float) -> np.ndarray:
    # g_i = nu W^H_{t_i} - nu^2 t_i^{2H} / 2, with W^H_0 = 0 prepended.
    WH = np.asarray(WH, dtype=float)
    full = np.concatenate([np.zeros(WH.shape[:-1] + (1,)), WH], axis=-1)
    return nu * full - 0.5 * nu * nu * grid.points ** (2 * H)


def rbergomi_vol(WH: np.ndarray, grid: TimeGrid, params: RoughBergomiParams) -> np.ndarray:
    """``sigma_{t_i} = sigma0 exp(g_i / 2)``; ``WH`` holds W^H at ``t_1..t_n``."""
    g = _exponent(WH, grid, params.nu, params.H)
    return params.sigma0 * np.exp(0.5 * g)


def _smoothstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)


def _bend(u: np.ndarray) -> np.ndarray:
    # psi(u) = int_0^u (1 - smoothstep); psi(0)=0, psi'(0)=1, psi''(0)=0,
    # flat from u=1 on with psi(1)=1/2, and psi(u) <= u.
    u = np.clip(u, 0.0, 1.0)
    u2 = u * u
    return u - u2 * u2 * (2.5 - 3.0 * u + u2)


def phi_n(x: np.ndarray, n: float, scale: float) -> np.ndarray:
    """C^2 monotone clamp of ``phi(x) = scale * exp(x)``.

    Equal to ``phi`` on ``[-n, n]``. Above ``n`` it blends into the constant
    ``phi(2n)`` with a quintic smoothstep over ``[n, 2n]``. Below ``-n`` the
    exponent is bent, ``phi(-n - n*psi((-n - x)/n))``, which stays above
    ``phi(x)``, and it is flat at ``phi(-3n/2)`` from ``-2n`` down.
    """
    if not n > 0:
        raise InvalidArgument(f"truncation level must be positive, got {n}")
    x = np.asarray(x, dtype=float)
    out = scale * np.exp(np.clip(x, -n, n))
    hi = x > n
    if np.any(hi):
        s = _smoothstep((x[hi] - n) / n)
        top = scale * math.exp(2 * n)
        out[hi] = (1.0 - s) * scale * np.exp(np.minimum(x[hi], 2 * n)) + s * top
    lo = x < -n
    if np.any(lo):
        out[lo] = scale * np.exp(-n - n * _bend((-n - x[lo]) / n))
    return out


def truncation_bounds(sigma0: float, n: float, mode: str = "variance") -> VolBounds:
    if mode == "variance":
        return VolBounds(sigma0 * math.exp(-0.75 * n), sigma0 * math.exp(n))
    return VolBounds(sigma0 * math.exp(-1.5 * n), sigma0 * math.exp(2 * n))


def truncated_rbergomi_vol(
    WH: np.ndarray, grid: TimeGrid, params: RoughBergomiParams, truncation_n: Optional[float] = None
) -> tuple[np.ndarray, VolBounds]:
    """Truncated rough Bergomi volatility and the bounds it satisfies by construction."""
    n = params.truncation_n if truncation_n is None else truncation_n
    if n is None or not n > 0:
        raise InvalidArgument(f"truncation_n must be positive, got {n}")
    g = _exponent(WH, grid, params.nu, params.H)
    if params.truncation_mode == "variance":
        sigma = np.sqrt(phi_n(g, n, params.sigma0 ** 2))
    else:
        sigma = phi_n(g, n, params.sigma0)
    bounds = truncation_bounds(params.sigma0, n, params.truncation_mode)
    # Round-off can push the flat regions a hair outside the closed-form bounds.
    return np.clip(sigma, bounds.alpha, bounds.beta), bounds
