"""Euler simulation of the log-price

    X_t = x - 1/2 int_0^t sigma_s^2 ds + int_0^t sigma_s (rho dW_s + sqrt(1-rho^2) dB_s)

on a uniform grid, for constant and (truncated) rough Bergomi volatility.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidArgument
from .kernel import TimeGrid, cholesky_factor, sample_brownian, sample_joint, volterra_cov
from .rng import check_seed
from .vol import ConstantVolParams, RoughBergomiParams, rbergomi_vol, truncated_rbergomi_vol

Model = Union[ConstantVolParams, RoughBergomiParams]

# Fixed so that chunk boundaries, and hence every floating-point operation,
# are independent of the worker count.
CHUNK_PATHS = 4096


@dataclass
class PathBatch:
    grid: TimeGrid
    X: np.ndarray  # (n_paths, n_steps + 1)
    sigma: np.ndarray  # (n_paths, n_steps + 1)
    seed: int
    model_tag: str
    x0: float

    @property
    def n_paths(self) -> int:
        return self.X.shape[0]


@dataclass
class PathStatistics:
    M_T: np.ndarray
    argmax_index: np.ndarray
    m_T_hat: float


def _simulate_chunk(model: Model, grid: TimeGrid, factor, seed: int, x0: float, start: int, stop: int):
    n, dt = grid.n_steps, grid.dt
    if isinstance(model, ConstantVolParams):
        dW, dB = sample_brownian(n, dt, seed, start, stop)
        sigma = np.full((stop - start, n + 1), model.sigma0)
    else:
        sample = sample_joint(factor, dt, seed, start, stop)
        dW, dB = sample.dW, sample.dB
        if model.truncation_n is None:
            sigma = rbergomi_vol(sample.WH, grid, model)
        else:
            sigma, _ = truncated_rbergomi_vol(sample.WH, grid, model)
    rho = model.rho
    s = sigma[:, :-1]  # left endpoints
    inc = -0.5 * s * s * dt + s * (rho * dW + math.sqrt(1.0 - rho * rho) * dB)
    X = np.empty((stop - start, n + 1))
    X[:, 0] = x0
    np.cumsum(inc, axis=1, out=X[:, 1:])
    X[:, 1:] += x0
    return X, sigma


def model_factor(model: Model, grid: TimeGrid):
    """Cholesky factor of the (W, W^H) covariance, or None for constant vol."""
    if isinstance(model, ConstantVolParams):
        return None
    return cholesky_factor(volterra_cov(grid, model.H))


def iter_chunks(n_paths: int, chunk: int = CHUNK_PATHS):
    for start in range(0, n_paths, chunk):
        yield start, min(start + chunk, n_paths)


def simulate_batch(
    model: Model,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    *,
    x0: float = 0.0,
    workers: int = 1,
    factor=None,
) -> PathBatch:
    """Simulate ``n_paths`` log-price paths.

    Output is bit-identical for identical inputs whatever ``workers`` is:
    paths are cut into fixed chunks and each path reads only its own streams.
    ``factor`` lets callers reuse a precomputed covariance factor.
    """
    if int(n_paths) != n_paths or n_paths < 1:
        raise InvalidArgument(f"n_paths must be a positive integer, got {n_paths}")
    if workers < 1:
        raise InvalidArgument(f"workers must be >= 1, got {workers}")
    seed = check_seed(seed)
    n_paths = int(n_paths)
    if factor is None:
        factor = model_factor(model, grid)

    X = np.empty((n_paths, grid.n_steps + 1))
    sigma = np.empty_like(X)

    def run(bounds):
        start, stop = bounds
        X[start:stop], sigma[start:stop] = _simulate_chunk(model, grid, factor, seed, x0, start, stop)

    chunks = list(iter_chunks(n_paths))
    if workers == 1 or len(chunks) == 1:
        for c in chunks:
            run(c)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, chunks))
    return PathBatch(grid=grid, X=X, sigma=sigma, seed=seed, model_tag=model.tag, x0=float(x0))


def path_stats(batch: PathBatch) -> PathStatistics:
    """Discrete running maximum over grid indices ``0..n_steps``; ties go to the first index."""
    idx = np.argmax(batch.X, axis=1)
    M = batch.X[np.arange(batch.n_paths), idx]
    return PathStatistics(M_T=M, argmax_index=idx, m_T_hat=float(np.mean(M)))
