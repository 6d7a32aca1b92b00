"""Run configuration: INI file with sections, command-line overrides, validation."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .bounds import DEFAULT_HEADROOM, DensityBoundParams
from .decay import DEFAULT_MATURITIES
from .errors import InvalidArgument
from .pricing import BarrierContract
from .vol import TRUNCATION_MODES, ConstantVolParams, RoughBergomiParams

DEFAULTS: dict[str, dict[str, str]] = {
    "model": {
        "kind": "rbergomi", "sigma0": "0.2", "nu": "0.5", "H": "0.2", "rho": "-0.3",
        "truncation_n": "5", "truncation_mode": "variance",
    },
    "contract": {"S0": "10", "K": "9.5", "B": "11", "T": "0.5"},
    "scan": {"maturities": ", ".join(repr(t) for t in DEFAULT_MATURITIES), "center": "mean"},
    "run": {"seed": "0", "paths": "200000", "steps": "256", "workers": "1"},
    "bounds": {"c1": "auto", "c2": "auto", "train_paths": "50000", "headroom": repr(DEFAULT_HEADROOM)},
    "synthetic": {"probabilities": "", "european": "", "barrier": ""},
}

# Settings that change wall-clock only; kept out of the reproducibility digest.
NON_RESULT_KEYS = {("run", "workers")}


class ConfigError(InvalidArgument):
    """Configuration rejected; the message names the offending field."""


@dataclass
class RunConfig:
    raw: dict[str, dict[str, str]]
    model: object
    contract: BarrierContract
    maturities: list[float]
    center: str
    seed: int
    paths: int
    steps: int
    workers: int
    c1: Optional[float]
    c2: Optional[float]
    train_paths: int
    headroom: float
    synthetic: dict[str, list[float]] = field(default_factory=dict)

    def digest(self) -> str:
        return config_digest(self.raw)

    def density_params(self) -> Optional[DensityBoundParams]:
        if self.c1 is None or self.c2 is None:
            return None
        return DensityBoundParams(self.c1, self.c2)


def config_digest(raw: dict[str, dict[str, str]]) -> str:
    canon = {s: {k: v for k, v in kv.items() if (s, k) not in NON_RESULT_KEYS} for s, kv in raw.items()}
    return hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()


def read_raw(path: Optional[str | Path]) -> dict[str, dict[str, str]]:
    """Merge defaults with an INI file or a ``manifest.json`` written by a previous run."""
    raw = {s: dict(kv) for s, kv in DEFAULTS.items()}
    if path is None:
        return raw
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        loaded = json.loads(text)
        loaded = loaded.get("config", loaded)
    else:
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.optionxform = str  # keep "H", "S0" as written
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        loaded = {s: dict(parser[s]) for s in parser.sections()}
    for section, kv in loaded.items():
        if section not in raw:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in kv.items():
            if key not in raw[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            raw[section][key] = str(value).strip()
    return raw


def _num(raw, section, key, kind=float, allow_auto=False):
    text = raw[section][key]
    if allow_auto and text.lower() in ("auto", "none", ""):
        return None
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected {kind.__name__}, got {text!r}") from None


def _floats(raw, section, key) -> list[float]:
    text = raw[section][key]
    if not text.strip():
        return []
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected comma-separated numbers, got {text!r}") from None


def build_config(raw: dict[str, dict[str, str]]) -> RunConfig:
    m = raw["model"]
    kind = m["kind"].lower()
    rho = _num(raw, "model", "rho")
    if not -1 < rho < 1:
        raise ConfigError(f"model.rho: must lie strictly inside (-1, 1), got {rho}")
    try:
        if kind == "const":
            model = ConstantVolParams(_num(raw, "model", "sigma0"), rho)
        elif kind == "rbergomi":
            mode = m["truncation_mode"]
            if mode not in TRUNCATION_MODES:
                raise ConfigError(f"model.truncation_mode: must be one of {TRUNCATION_MODES}")
            model = RoughBergomiParams(
                _num(raw, "model", "sigma0"), _num(raw, "model", "nu"), _num(raw, "model", "H"), rho,
                _num(raw, "model", "truncation_n", allow_auto=True), mode,
            )
        else:
            raise ConfigError(f"model.kind: must be 'rbergomi' or 'const', got {kind!r}")
    except ConfigError:
        raise
    except InvalidArgument as exc:
        raise ConfigError(f"model: {exc}") from None

    S0, K, B, T = (_num(raw, "contract", k) for k in ("S0", "K", "B", "T"))
    if not B > S0:
        raise ConfigError(f"contract.B: barrier must satisfy B > S0 (got B={B}, S0={S0})")
    if not 0 < T <= 1:
        raise ConfigError(f"contract.T: maturity must lie in (0, 1], got {T}")
    try:
        contract = BarrierContract(S0, K, B, T)
    except InvalidArgument as exc:
        raise ConfigError(f"contract: {exc}") from None

    maturities = _floats(raw, "scan", "maturities")
    if not maturities:
        raise ConfigError("scan.maturities: maturity grid is empty")
    if any(not 0 < t <= 1 for t in maturities):
        raise ConfigError(f"scan.maturities: every maturity must lie in (0, 1], got {maturities}")
    if any(a <= b for a, b in zip(maturities, maturities[1:])):
        raise ConfigError("scan.maturities: must be strictly decreasing")
    center = raw["scan"]["center"]
    if center not in ("mean", "spot"):
        raise ConfigError(f"scan.center: must be 'mean' or 'spot', got {center!r}")

    seed = _num(raw, "run", "seed", int)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"run.seed: must be an unsigned 64-bit integer, got {seed}")
    paths = _num(raw, "run", "paths", int)
    steps = _num(raw, "run", "steps", int)
    workers = _num(raw, "run", "workers", int)
    if paths < 2:
        raise ConfigError(f"run.paths: need at least 2 paths, got {paths}")
    if steps < 2:
        raise ConfigError(f"run.steps: need at least 2 steps, got {steps}")
    if workers < 1:
        raise ConfigError(f"run.workers: must be >= 1, got {workers}")

    c1 = _num(raw, "bounds", "c1", allow_auto=True)
    c2 = _num(raw, "bounds", "c2", allow_auto=True)
    if c1 is not None and c1 < 0:
        raise ConfigError(f"bounds.c1: must be non-negative, got {c1}")
    if c2 is not None and c2 <= 0:
        raise ConfigError(f"bounds.c2: must be positive, got {c2}")
    if c2 is None and model.vol_bounds() is None:
        raise ConfigError("bounds.c2: required when the model has no volatility bounds (untruncated rough Bergomi)")
    train_paths = _num(raw, "bounds", "train_paths", int)
    if train_paths < 2:
        raise ConfigError(f"bounds.train_paths: need at least 2, got {train_paths}")
    headroom = _num(raw, "bounds", "headroom")
    if headroom < 1:
        raise ConfigError(f"bounds.headroom: must be >= 1, got {headroom}")

    synthetic = {k: _floats(raw, "synthetic", k) for k in ("probabilities", "european", "barrier")}
    synthetic = {k: v for k, v in synthetic.items() if v}
    for k, v in synthetic.items():
        if len(v) != len(maturities):
            raise ConfigError(f"synthetic.{k}: expected {len(maturities)} values (one per maturity), got {len(v)}")

    return RunConfig(raw, model, contract, maturities, center, seed, paths, steps, workers,
                     c1, c2, train_paths, headroom, synthetic)


def load_config(path=None, overrides: Optional[dict[tuple[str, str], object]] = None) -> RunConfig:
    """Defaults, then the file, then ``overrides`` (command-line flags win)."""
    raw = read_raw(path)
    for (section, key), value in (overrides or {}).items():
        if value is not None:
            raw[section][key] = str(value)
    return build_config(raw)
