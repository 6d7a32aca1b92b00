"""Time grids and exact joint sampling of (W, W^H, B).

W^H is the Riemann-Liouville Volterra process

    W^H_t = sqrt(2H) * int_0^t (t - s)^(H - 1/2) dW_s,

driven by the same Brownian motion W. The vector (W_{t_1..t_n}, W^H_{t_1..t_n})
is Gaussian, so it is sampled exactly from a Cholesky factor of its covariance.
B is an independent Brownian motion drawn from its own substream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import InvalidArgument, NumericalFailure
from .rng import TAG_B, TAG_JOINT, path_normals

JITTER_BASE = 1e-12
JITTER_GROWTH = 10.0
JITTER_TRIES = 3


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n_steps: int

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def points(self) -> np.ndarray:
        t = np.arange(self.n_steps + 1) * self.T / self.n_steps
        t[-1] = self.T
        return t


def build_grid(T: float, n_steps: int) -> TimeGrid:
    """Uniform grid ``t_i = i*T/n_steps`` on ``[0, T]``."""
    T = float(T)
    if not (T > 0 and math.isfinite(T)):
        raise InvalidArgument(f"maturity T must be positive and finite, got {T}")
    if int(n_steps) != n_steps or n_steps < 2:
        raise InvalidArgument(f"n_steps must be an integer >= 2, got {n_steps}")
    return TimeGrid(T, int(n_steps))


def _check_hurst(H: float) -> float:
    H = float(H)
    if not 0.0 < H < 1.0:
        raise InvalidArgument(f"Hurst exponent must lie in (0, 1), got {H}")
    return H


def rl_autocov(t: float, s: float, H: float, epsrel: float = 1e-10) -> float:
    """Cov(W^H_t, W^H_s) by adaptive quadrature.

    With ``m = min(t, s)`` the integrand ``(t-u)^a (m-u)^a`` (``a = H - 1/2``)
    has an algebraic endpoint singularity at ``u = m``; QUADPACK's QAWS rule
    integrates the factor ``(m-u)^a`` as a weight, which is the same as working
    in the reflected variable ``v = m - u``.
    """
    H = _check_hurst(H)
    lo, hi = min(t, s), max(t, s)
    if lo <= 0.0:
        return 0.0
    if lo == hi:
        return lo ** (2 * H)
    a = H - 0.5
    val, _ = quad(
        lambda u: (hi - u) ** a, 0.0, lo, weight="alg", wvar=(0.0, a),
        epsabs=0.0, epsrel=epsrel, limit=200,
    )
    return 2 * H * val


@lru_cache(maxsize=16)
def _rl_unit_cov(n: int, H: float) -> np.ndarray:
    # W^H autocovariance on the integer grid 1..n; scales by dt^(2H).
    k = np.arange(1, n + 1, dtype=float)
    cov = np.empty((n, n))
    for i in range(n):
        cov[i, i] = k[i] ** (2 * H)
        for j in range(i):
            cov[i, j] = cov[j, i] = rl_autocov(k[i], k[j], H)
    cov.setflags(write=False)
    return cov


def volterra_cov(grid: TimeGrid, H: float) -> np.ndarray:
    """Covariance of the stacked vector (W_{t_1..t_n}, W^H_{t_1..t_n}), shape (2n, 2n)."""
    H = _check_hurst(H)
    n = grid.n_steps
    t = grid.points[1:]
    ww = np.minimum.outer(t, t)
    hh = _rl_unit_cov(n, H) * grid.dt ** (2 * H)
    # Cov(W^H_t, W_s) = sqrt(2H)/(H+1/2) * (t^(H+1/2) - (t - t^s)^(H+1/2))
    tt = t[:, None]
    gap = tt - np.minimum.outer(t, t)
    hw = math.sqrt(2 * H) / (H + 0.5) * (tt ** (H + 0.5) - gap ** (H + 0.5))
    cov = np.empty((2 * n, 2 * n))
    cov[:n, :n] = ww
    cov[n:, n:] = hh
    cov[n:, :n] = hw
    cov[:n, n:] = hw.T
    return cov


def _semidefinite_cholesky(cov: np.ndarray, tol: float) -> np.ndarray:
    # Column Cholesky that zeroes columns with a non-positive pivot. Exact for
    # singular PSD matrices whose dependent rows are linear in earlier ones
    # (e.g. H = 1/2, where W^H = W).
    dim = cov.shape[0]
    L = np.zeros_like(cov)
    for j in range(dim):
        d = cov[j, j] - L[j, :j] @ L[j, :j]
        if d <= tol * max(cov[j, j], 1e-300):
            continue
        r = math.sqrt(d)
        L[j, j] = r
        L[j + 1:, j] = (cov[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / r
    return L


def cholesky_factor(cov: np.ndarray) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T ~= cov``.

    Order of attempts: plain Cholesky; a pivot-dropping semidefinite Cholesky
    accepted only if it reconstructs ``cov`` to 1e-10 relative; then Cholesky
    with diagonal jitter ``1e-12 * trace/dim``, grown tenfold up to three times.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InvalidArgument(f"covariance must be square, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-14 * max(np.abs(cov).max(), 1.0)):
        raise InvalidArgument("covariance matrix is not symmetric")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass

    dim = cov.shape[0]
    scale = np.abs(cov).max()
    L = _semidefinite_cholesky(cov, tol=1e-12)
    if np.abs(L @ L.T - cov).max() <= 1e-10 * scale:
        return L

    jitter = JITTER_BASE * np.trace(cov) / dim
    tried = []
    for _ in range(JITTER_TRIES):
        tried.append(jitter)
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(dim))
        except np.linalg.LinAlgError:
            jitter *= JITTER_GROWTH
    eig = np.linalg.eigvalsh(cov)
    raise NumericalFailure(
        "Cholesky factorization failed after jitter escalation",
        {"dim": dim, "min_eig": float(eig[0]), "max_eig": float(eig[-1]),
         "trace": float(np.trace(cov)), "jitter_tried": tried},
    )


@dataclass
class JointGaussianSample:
    """Per-path Gaussian inputs; each array has shape ``(n_paths, n_steps)``."""

    dW: np.ndarray
    WH: np.ndarray
    dB: np.ndarray


def sample_joint(factor: np.ndarray, dt: float, seed: int, start: int, stop: int) -> JointGaussianSample:
    """Sample paths ``start..stop-1`` from the stacked (W, W^H) factor.

    Path ``i`` reads ``2n`` normals from its (seed, i, joint) substream and ``n``
    normals from its (seed, i, B) substream, so the output for a path does not
    depend on the range it was requested in.
    """
    n = factor.shape[0] // 2
    z = path_normals(seed, TAG_JOINT, start, stop, 2 * n)
    g = z @ factor.T
    w = g[:, :n]
    dW = np.diff(w, axis=1, prepend=0.0)
    dB = math.sqrt(dt) * path_normals(seed, TAG_B, start, stop, n)
    return JointGaussianSample(dW=dW, WH=g[:, n:], dB=dB)


def sample_brownian(n_steps: int, dt: float, seed: int, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    """(dW, dB) only, from the same substreams as :func:`sample_joint`.

    The W block of the stacked factor is ``sqrt(dt)`` times a lower-triangular
    matrix of ones, so ``dW_i = sqrt(dt) * z_i`` reproduces the W increments of
    ``sample_joint`` up to factorization round-off.
    """
    z = path_normals(seed, TAG_JOINT, start, stop, 2 * n_steps)
    dW = math.sqrt(dt) * z[:, :n_steps]
    dB = math.sqrt(dt) * path_normals(seed, TAG_B, start, stop, n_steps)
    return dW, dB
