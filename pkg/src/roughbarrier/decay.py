"""Maturity scans, decay-rate fits and bound dominance checks."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from . import bounds as bd
from .errors import InsufficientData, InvalidArgument
from .kernel import build_grid
from .paths import Model, path_stats, simulate_batch
from .pricing import BarrierContract, hit_weights, mc_estimate, price_european, price_up_and_in
from .rng import derive_seed

DEFAULT_MATURITIES = (0.5, 0.25, 0.1, 0.05, 0.025, 0.01)
NOISE_SE_MULTIPLE = 3.0


@dataclass
class DecayRow:
    T: float
    seed: int
    n_paths: int
    n_hits: int  # paths whose discrete maximum reached b
    hit: float
    hit_se: float
    barrier: float
    barrier_se: float
    european: float
    european_se: float
    m_hat: float
    concentration: float
    cdf: float
    combined: float


@dataclass
class DecayReport:
    rows: list[DecayRow]
    x: float
    b: float
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        Ts = [r.T for r in self.rows]
        if any(a <= c for a, c in zip(Ts, Ts[1:])):
            raise InvalidArgument("report maturities must be strictly decreasing")

    @property
    def maturities(self) -> np.ndarray:
        return np.array([r.T for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_csv(self, header: Iterable[str] = ()) -> str:
        """CSV text; floats are written with ``repr`` so parsing is lossless."""
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        names = [f.name for f in fields(DecayRow)]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for r in self.rows:
            writer.writerow([repr(getattr(r, n)) for n in names])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, x: float, b: float, constants: Optional[dict] = None) -> "DecayReport":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        reader = csv.DictReader(lines)
        types = {f.name: f.type for f in fields(DecayRow)}
        rows = []
        for rec in reader:
            rows.append(DecayRow(**{k: (int(v) if types[k] in ("int", int) else float(v)) for k, v in rec.items()}))
        return cls(rows, x, b, dict(constants or {}))

    def to_dict(self) -> dict:
        return {"x": self.x, "b": self.b, "constants": self.constants, "rows": [asdict(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "DecayReport":
        return cls([DecayRow(**r) for r in d["rows"]], d["x"], d["b"], dict(d.get("constants", {})))


def _check_maturities(T_grid: Sequence[float]) -> list[float]:
    Ts = [float(T) for T in T_grid]
    if not Ts:
        raise InvalidArgument("maturity grid is empty")
    if any(not 0 < T <= 1 for T in Ts):
        raise InvalidArgument(f"maturities must lie in (0, 1], got {Ts}")
    if any(a <= c for a, c in zip(Ts, Ts[1:])):
        raise InvalidArgument("maturities must be strictly decreasing")
    return Ts


def default_c2(model: Model) -> Optional[float]:
    """``beta^2 (1 - rho^2)`` from the model's vol bounds, if it has any."""
    vb = model.vol_bounds()
    if vb is None:
        return None
    return vb.beta ** 2 * (1.0 - model.rho ** 2)


def decay_scan(
    model: Model,
    contract: BarrierContract,
    T_grid: Sequence[float] = DEFAULT_MATURITIES,
    n_paths: int = 200_000,
    n_steps: int = 256,
    seed: int = 0,
    *,
    density: Optional[bd.DensityBoundParams] = None,
    center: str = "mean",
    workers: int = 1,
) -> DecayReport:
    """Simulate, price and bound at each maturity.

    Each row gets its own grid (fixed ``n_steps``) and its own seed
    ``derive_seed(seed, k)``. ``contract.T`` is ignored; ``T_grid`` sets the
    maturities. ``center`` is ``"mean"`` (empirical E[M_T]) or ``"spot"`` (x).
    Without ``density`` the CDF bound is reported as 1 (vacuous).
    """
    Ts = _check_maturities(T_grid)
    if contract.B <= contract.S0:
        raise InvalidArgument(f"scan needs B > S0, got B={contract.B}, S0={contract.S0}")
    if center not in ("mean", "spot"):
        raise InvalidArgument(f"center must be 'mean' or 'spot', got {center!r}")
    x, b = contract.x, contract.b
    vb = model.vol_bounds()
    rows = []
    for k, T in enumerate(Ts):
        row_seed = derive_seed(seed, k)
        batch = simulate_batch(model, build_grid(T, n_steps), n_paths, row_seed, x0=x, workers=workers)
        st = path_stats(batch)
        w = hit_weights(batch, b)
        hit = mc_estimate(w, row_seed)
        barrier = price_up_and_in(batch, contract, weights=w)
        euro = price_european(batch, contract.K)
        ctr = st.m_T_hat if center == "mean" else x
        conc = bd.concentration_bound(b, ctr, T, vb, model.rho) if vb is not None else 1.0
        cdf = bd.cdf_bound(b, x, T, density) if density is not None else 1.0
        rows.append(DecayRow(
            T=T, seed=row_seed, n_paths=int(n_paths), n_hits=int(np.count_nonzero(st.M_T >= b)),
            hit=hit.value, hit_se=hit.std_error,
            barrier=barrier.value, barrier_se=barrier.std_error,
            european=euro.value, european_se=euro.std_error,
            m_hat=st.m_T_hat, concentration=conc, cdf=cdf, combined=min(conc, cdf),
        ))
        del batch
    constants = {}
    if density is not None:
        constants.update(c1=density.c1, c2=density.c2)
    return DecayReport(rows, x, b, constants)


def calibrate_density(
    model: Model, contract: BarrierContract, T_grid: Sequence[float], n_paths: int, n_steps: int,
    seed: int, c2: Optional[float] = None, headroom: float = bd.DEFAULT_HEADROOM, workers: int = 1,
) -> bd.DensityBoundParams:
    """Calibrate c1 (at fixed c2) on an independent training scan.

    The training scan uses ``derive_seed(seed, 2**32)`` so it never shares
    streams with a scan run on ``seed``.
    """
    c2 = default_c2(model) if c2 is None else c2
    if c2 is None:
        raise InvalidArgument("model has no volatility bounds; c2 must be given")
    train = decay_scan(model, contract, T_grid, n_paths, n_steps, derive_seed(seed, 2 ** 32), workers=workers)
    return bd.calibrate_cdf_amplitude(train.maturities, train.column("hit"), train.x, train.b, c2, headroom)


# ---------------------------------------------------------------------------
# Rate fits


@dataclass
class PolynomialRateFit:
    maturities: np.ndarray  # usable rows, decreasing
    slopes: np.ndarray  # s_k between usable rows k and k+1
    slope_se: np.ndarray
    excluded: list[float]  # maturities dropped as noise-dominated
    superpolynomial: bool  # slopes strictly increase as T decreases
    beyond_noise: bool  # ... and each increase exceeds 2 combined SE


@dataclass
class GaussianRateFit:
    slope: float
    intercept: float
    r2: float
    C2_hat: float
    excluded: list[float]


def _usable(T, P, SE):
    T, P = np.asarray(T, dtype=float), np.asarray(P, dtype=float)
    SE = np.zeros_like(P) if SE is None else np.asarray(SE, dtype=float)
    keep = (P > 0) & (P >= NOISE_SE_MULTIPLE * SE)
    if keep.sum() < 3:
        raise InsufficientData(f"need >= 3 rows with estimate >= {NOISE_SE_MULTIPLE:g} SE, have {int(keep.sum())}")
    return T[keep], P[keep], SE[keep], [float(t) for t in T[~keep]]


def _series(report_or_T, P=None, SE=None):
    if isinstance(report_or_T, DecayReport):
        r = report_or_T
        return r.maturities, r.column("hit"), r.column("hit_se")
    return report_or_T, P, SE


def fit_polynomial_rate(report_or_T, P=None, SE=None) -> PolynomialRateFit:
    """Local log-log slopes ``d log P / d log T`` between adjacent usable rows."""
    T, P, SE, excluded = _usable(*_series(report_or_T, P, SE))
    order = np.argsort(-T)
    T, P, SE = T[order], P[order], SE[order]
    lT, lP = np.log(T), np.log(P)
    dlt = np.diff(lT)
    slopes = np.diff(lP) / dlt
    se_lp = SE / P  # delta method
    slope_se = np.sqrt(se_lp[:-1] ** 2 + se_lp[1:] ** 2) / np.abs(dlt)
    inc = np.diff(slopes)
    superpoly = bool(len(inc) > 0 and np.all(inc > 0))
    noise = 2.0 * np.sqrt(slope_se[:-1] ** 2 + slope_se[1:] ** 2)
    beyond = bool(len(inc) > 0 and np.all(inc > noise))
    return PolynomialRateFit(T, slopes, slope_se, excluded, superpoly, beyond)


def fit_gaussian_rate(report_or_T, x: float, b: float, P=None, SE=None) -> GaussianRateFit:
    """Least squares of ``log P`` on ``1/T``; ``C2_hat = -(b - x)^2 / slope``."""
    T, P, SE, excluded = _usable(*_series(report_or_T, P, SE))
    fit = stats.linregress(1.0 / T, np.log(P))
    slope = float(fit.slope)
    C2 = -((b - x) ** 2) / slope if slope < 0 else math.inf
    return GaussianRateFit(slope, float(fit.intercept), float(fit.rvalue ** 2), C2, excluded)


# ---------------------------------------------------------------------------
# Dominance


@dataclass
class DominanceResult:
    passed: list[bool]
    maturities: list[float]

    @property
    def ok(self) -> bool:
        return all(self.passed)

    @property
    def failed_rows(self) -> list[float]:
        return [T for T, p in zip(self.maturities, self.passed) if not p]


def verify_dominance(report: DecayReport, bound: str = "combined", se_multiple: float = 2.0) -> DominanceResult:
    """Row passes iff ``hit <= bound + se_multiple * hit_se``."""
    if bound not in ("combined", "concentration", "cdf"):
        raise InvalidArgument(f"unknown bound column {bound!r}")
    passed = [bool(r.hit <= getattr(r, bound) + se_multiple * r.hit_se) for r in report.rows]
    return DominanceResult(passed, [r.T for r in report.rows])
