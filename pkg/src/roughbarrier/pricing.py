"""Monte Carlo estimators for the European call, the up-and-in call and the
barrier-hit probability, plus constant-volatility closed forms used as oracles.

Barrier monitoring is continuous. Inside each step the log-price is treated as
a Brownian bridge with the step's left-endpoint volatility, and each path
carries the conditional probability that it crossed the barrier (its hit
weight) instead of a sampled 0/1 indicator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from .errors import InvalidArgument
from .paths import PathBatch

_ROW_BLOCK = 8192


@dataclass(frozen=True)
class BarrierContract:
    S0: float
    K: float
    B: float
    T: float

    def __post_init__(self):
        for name in ("S0", "K", "B", "T"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidArgument(f"{name} must be positive and finite, got {v}")

    @property
    def x(self) -> float:
        return math.log(self.S0)

    @property
    def b(self) -> float:
        return math.log(self.B)


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    n_paths: int
    seed: int


def mc_estimate(samples: np.ndarray, seed: int) -> MCEstimate:
    samples = np.ascontiguousarray(samples, dtype=float)
    n = samples.size
    mean = float(np.sum(samples) / n)  # pairwise summation, fixed order
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MCEstimate(mean, se, n, seed)


def bridge_crossing_prob(x_lo, x_hi, b, sigma, dt):
    """P(bridge from ``x_lo`` to ``x_hi`` over ``dt`` touches ``b``), vectorized.

    ``x_lo`` and ``x_hi`` are the step's left and right end values.
    """
    x_lo, x_hi = np.asarray(x_lo, dtype=float), np.asarray(x_hi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0) or dt <= 0:
        raise InvalidArgument("bridge crossing needs sigma > 0 and dt > 0")
    above = (x_lo >= b) | (x_hi >= b)
    with np.errstate(over="ignore"):
        p = np.exp(-2.0 * (b - x_lo) * (b - x_hi) / (sigma * sigma * dt))
    return np.where(above, 1.0, p)


def hit_weights(batch: PathBatch, b: float) -> np.ndarray:
    """Per-path probability that the continuous path reached ``b``."""
    dt = batch.grid.dt
    out = np.empty(batch.n_paths)
    for start in range(0, batch.n_paths, _ROW_BLOCK):
        X = batch.X[start:start + _ROW_BLOCK]
        s = batch.sigma[start:start + _ROW_BLOCK, :-1]
        lo, hi = X[:, :-1], X[:, 1:]
        with np.errstate(over="ignore"):
            p = np.exp(-2.0 * (b - lo) * (b - hi) / (s * s * dt))
        # A step with an endpoint at or above b makes survival exactly 0.
        p[(lo >= b) | (hi >= b)] = 1.0
        with np.errstate(divide="ignore"):
            log_survival = np.sum(np.log1p(-np.minimum(p, 1.0)), axis=1)
        out[start:start + _ROW_BLOCK] = -np.expm1(log_survival)
    return out


def hit_probability(batch: PathBatch, b: float) -> MCEstimate:
    if batch.n_paths < 1:
        raise InvalidArgument("empty batch")
    return mc_estimate(hit_weights(batch, b), batch.seed)


def _check_batch_matches(batch: PathBatch, contract: BarrierContract) -> None:
    if not math.isclose(batch.x0, contract.x, rel_tol=0, abs_tol=1e-12):
        raise InvalidArgument(
            f"batch starts at log-price {batch.x0}, contract spot implies {contract.x}"
        )


def call_payoff(batch: PathBatch, K: float) -> np.ndarray:
    return np.maximum(np.exp(batch.X[:, -1]) - K, 0.0)


def price_european(batch: PathBatch, K: float) -> MCEstimate:
    if not K >= 0:
        raise InvalidArgument(f"strike must be non-negative, got {K}")
    return mc_estimate(call_payoff(batch, K), batch.seed)


def price_up_and_in(batch: PathBatch, contract: BarrierContract, weights: np.ndarray | None = None) -> MCEstimate:
    """Up-and-in call: terminal payoff times the path's hit weight."""
    if contract.B <= contract.S0:
        raise InvalidArgument(
            f"up-and-in contract needs B > S0 (got B={contract.B}, S0={contract.S0}); "
            "with B <= S0 the contract is the European call"
        )
    _check_batch_matches(batch, contract)
    if weights is None:
        weights = hit_weights(batch, contract.b)
    return mc_estimate(call_payoff(batch, contract.K) * weights, batch.seed)


# ---------------------------------------------------------------------------
# Constant-volatility closed forms (r = q = 0)


class BSOracle(NamedTuple):
    european: float
    up_and_in: float
    hit_probability: float


def bs_call(S0: float, K: float, T: float, sigma: float) -> float:
    if K <= 0:
        return S0 - K
    v = sigma * math.sqrt(T)
    if v == 0:
        return max(S0 - K, 0.0)
    d1 = math.log(S0 / K) / v + 0.5 * v
    return S0 * ndtr(d1) - K * ndtr(d1 - v)


def bs_hit_probability(x: float, b: float, T: float, sigma: float) -> float:
    """P(sup_{t<=T} X_t >= b) for X = x - sigma^2 t/2 + sigma W (reflection principle)."""
    if b <= x:
        return 1.0
    mu = -0.5 * sigma * sigma
    v = sigma * math.sqrt(T)
    if v == 0:
        return 0.0
    return float(
        ndtr((x - b + mu * T) / v) + math.exp(2 * mu * (b - x) / sigma ** 2) * ndtr((x - b - mu * T) / v)
    )


def bs_up_and_in_call(S0: float, K: float, B: float, T: float, sigma: float) -> float:
    """Continuously monitored up-and-in call (Reiner-Rubinstein), zero rates."""
    if B <= S0 or K >= B:
        # Either the barrier is hit at t=0, or S_T > K >= B forces a hit.
        return bs_call(S0, K, T, sigma)
    v = sigma * math.sqrt(T)
    if v == 0:
        return 0.0
    lam = 0.5  # (r - q + sigma^2/2) / sigma^2 with r = q = 0
    x1 = math.log(S0 / B) / v + lam * v
    y = math.log(B * B / (S0 * K)) / v + lam * v
    y1 = math.log(B / S0) / v + lam * v
    ratio = B / S0
    return float(
        S0 * ndtr(x1) - K * ndtr(x1 - v)
        - S0 * ratio ** (2 * lam) * (ndtr(-y) - ndtr(-y1))
        + K * ratio ** (2 * lam - 2) * (ndtr(-y + v) - ndtr(-y1 + v))
    )


def bs_oracles(contract: BarrierContract, sigma: float) -> BSOracle:
    S0, K, B, T = contract.S0, contract.K, contract.B, contract.T
    return BSOracle(
        european=bs_call(S0, K, T, sigma),
        up_and_in=bs_up_and_in_call(S0, K, B, T, sigma),
        hit_probability=bs_hit_probability(contract.x, contract.b, T, sigma),
    )
