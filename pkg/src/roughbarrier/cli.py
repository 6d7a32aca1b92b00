"""Command-line entry point: ``price``, ``scan`` and ``validate``.

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 validation-suite failure (``validate`` only).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bd
from .config import ConfigError, RunConfig, load_config
from .decay import (
    DecayReport, DecayRow, calibrate_density, decay_scan, default_c2, fit_gaussian_rate,
    fit_polynomial_rate, verify_dominance,
)
from .errors import InsufficientData, InvalidArgument, NumericalFailure
from .kernel import build_grid
from .paths import simulate_batch
from .pricing import bs_oracles, hit_weights, mc_estimate, price_european, price_up_and_in
from .svg import Series, line_chart
from .vol import ConstantVolParams, RoughBergomiParams

log = logging.getLogger("roughbarrier")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_SUITE = 0, 1, 2, 3


def _row_digests(text: str) -> list[str]:
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return [hashlib.sha256(r.encode()).hexdigest() for r in rows[1:]]


def _write_manifest(out: Path, cfg: RunConfig, constants: dict, tables: dict[str, str], started: float) -> None:
    manifest = {
        "version": __version__,
        "config": cfg.raw,
        "config_digest": cfg.digest(),
        "seed": cfg.seed,
        "constants": constants,
        "wall_clock_seconds": round(time.time() - started, 3),
        "row_digests": {name: _row_digests(text) for name, text in tables.items()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _deterministic_vol(model) -> float | None:
    if isinstance(model, ConstantVolParams):
        return model.sigma0
    if isinstance(model, RoughBergomiParams) and model.nu == 0:
        return model.sigma0
    return None


# ---------------------------------------------------------------------------
# price


def cmd_price(cfg: RunConfig, out: Path) -> int:
    started = time.time()
    c = cfg.contract
    batch = simulate_batch(cfg.model, build_grid(c.T, cfg.steps), cfg.paths, cfg.seed, x0=c.x, workers=cfg.workers)
    w = hit_weights(batch, c.b)
    hit = mc_estimate(w, cfg.seed)
    barrier = price_up_and_in(batch, c, weights=w)
    euro = price_european(batch, c.K)
    vol = _deterministic_vol(cfg.model)
    oracle = bs_oracles(c, vol) if vol is not None else (math.nan,) * 3

    buf = io.StringIO()
    buf.write(f"# config_digest={cfg.digest()} version={__version__}\n")
    buf.write("# prices in currency units of S0; probabilities dimensionless; T in years; "
              "oracle_* are constant-vol closed forms (nan if vol is stochastic)\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["model", "S0", "K", "B", "T", "n_paths", "n_steps", "seed", "european", "european_se",
                 "barrier", "barrier_se", "hit", "hit_se", "oracle_european", "oracle_barrier", "oracle_hit"])
    wr.writerow([cfg.model.tag, *(repr(v) for v in (c.S0, c.K, c.B, c.T)), cfg.paths, cfg.steps, cfg.seed,
                 *(repr(v) for v in (euro.value, euro.std_error, barrier.value, barrier.std_error,
                                     hit.value, hit.std_error, *map(float, oracle)))])
    text = buf.getvalue()
    out.mkdir(parents=True, exist_ok=True)
    (out / "price.csv").write_text(text, encoding="utf-8")
    _write_manifest(out, cfg, {}, {"price.csv": text}, started)
    print(f"European   {euro.value:.6f} +/- {euro.std_error:.6f}")
    print(f"Up-and-in  {barrier.value:.6f} +/- {barrier.std_error:.6f}")
    print(f"P(hit)     {hit.value:.6g} +/- {hit.std_error:.3g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# scan


def _density_for(cfg: RunConfig) -> bd.DensityBoundParams:
    c2 = cfg.c2 if cfg.c2 is not None else default_c2(cfg.model)
    if cfg.c1 is not None:
        return bd.DensityBoundParams(cfg.c1, c2)
    log.info("calibrating c1 on %d training paths per row", cfg.train_paths)
    return calibrate_density(cfg.model, cfg.contract, cfg.maturities, cfg.train_paths, cfg.steps,
                             cfg.seed, c2=c2, headroom=cfg.headroom, workers=cfg.workers)


def synthetic_report(cfg: RunConfig, density: bd.DensityBoundParams | None) -> DecayReport:
    """Report built from injected values instead of Monte Carlo (chart plumbing)."""
    x, b = cfg.contract.x, cfg.contract.b
    nan = [math.nan] * len(cfg.maturities)
    probs = cfg.synthetic["probabilities"]
    eur = cfg.synthetic.get("european", nan)
    bar = cfg.synthetic.get("barrier", nan)
    vb = cfg.model.vol_bounds()
    rows = []
    for T, p, e, br in zip(cfg.maturities, probs, eur, bar):
        conc = bd.concentration_bound(b, x, T, vb, cfg.model.rho) if vb is not None else 1.0
        cdf = bd.cdf_bound(b, x, T, density) if density is not None else 1.0
        rows.append(DecayRow(T, cfg.seed, 0, 0, p, 0.0, br, 0.0, e, 0.0, x, conc, cdf, min(conc, cdf)))
    return DecayReport(rows, x, b, {} if density is None else {"c1": density.c1, "c2": density.c2})


def render_charts(report: DecayReport, digest: str) -> tuple[str, str]:
    T = report.maturities
    prices = line_chart(
        [Series("European call", T, report.column("european")),
         Series("Up-and-in call", T, report.column("barrier"))],
        title="Call prices vs maturity", xlabel="maturity T (years, log scale)", ylabel="price",
        x_log=True, note=f"config {digest[:12]}",
    )
    P = report.column("hit")
    series = [Series("P(hit)", 1.0 / T, P)]
    try:
        fit = fit_gaussian_rate(report, report.x, report.b)
        grid = np.linspace((1.0 / T).min(), (1.0 / T).max(), 50)
        series.append(Series(f"fit: log P = {fit.intercept:.3g} {fit.slope:+.3g}/T (R2={fit.r2:.3f})",
                             grid, np.exp(fit.intercept + fit.slope * grid), markers=False, dashed=True))
    except InsufficientData:
        pass
    rate = line_chart(series, title="Barrier hit probability vs 1/T", xlabel="1/T (1/years)",
                      ylabel="P(M_T >= b) (log scale)", y_log=True, note=f"config {digest[:12]}")
    tag = f"<!-- config_digest={digest} -->\n"
    return prices.replace(">\n", ">\n" + tag, 1), rate.replace(">\n", ">\n" + tag, 1)


def cmd_scan(cfg: RunConfig, out: Path) -> int:
    started = time.time()
    c2_known = cfg.c2 is not None or default_c2(cfg.model) is not None
    if cfg.synthetic:
        if "probabilities" not in cfg.synthetic:
            raise ConfigError("synthetic: 'probabilities' is required in synthetic-injection mode")
        density = bd.DensityBoundParams(cfg.c1, cfg.c2 or default_c2(cfg.model)) if cfg.c1 is not None and c2_known else None
        report = synthetic_report(cfg, density)
    else:
        density = _density_for(cfg)
        report = decay_scan(cfg.model, cfg.contract, cfg.maturities, cfg.paths, cfg.steps, cfg.seed,
                            density=density, center=cfg.center, workers=cfg.workers)
    constants = dict(report.constants)
    try:
        g = fit_gaussian_rate(report, report.x, report.b)
        p = fit_polynomial_rate(report)
        constants["fits"] = {"gaussian_slope": g.slope, "gaussian_intercept": g.intercept, "gaussian_r2": g.r2,
                             "C2_hat": g.C2_hat, "loglog_slopes": p.slopes.tolist(),
                             "superpolynomial": p.superpolynomial}
    except InsufficientData as exc:
        constants["fits"] = {"error": str(exc)}

    digest = cfg.digest()
    text = report.to_csv([
        f"config_digest={digest} version={__version__}",
        "T in years; hit = bridge-corrected P(M_T >= b); prices in currency units of S0; "
        "*_se = Monte Carlo standard errors; m_hat = mean discrete max of log-price",
    ])
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(text, encoding="utf-8")
    prices_svg, rate_svg = render_charts(report, digest)
    (out / "prices.svg").write_text(prices_svg, encoding="utf-8")
    (out / "rate.svg").write_text(rate_svg, encoding="utf-8")
    _write_manifest(out, cfg, constants, {"report.csv": text}, started)
    for r in report.rows:
        print(f"T={r.T:<7g} P(hit)={r.hit:.4g}+/-{r.hit_se:.2g}  barrier={r.barrier:.5g}  "
              f"european={r.european:.5g}  bound={r.combined:.4g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate


def cmd_validate(cfg: RunConfig, out: Path) -> int:
    """Oracle equivalence, nu=0 degeneration, ordering and bound dominance."""
    started = time.time()
    lines: list[str] = []
    ok_all = True

    def check(name: str, ok: bool, detail: str) -> None:
        nonlocal ok_all
        ok_all &= bool(ok)
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    c = cfg.contract
    grid = build_grid(c.T, cfg.steps)
    sigma0 = cfg.model.sigma0
    const = ConstantVolParams(sigma0, cfg.model.rho)
    batch = simulate_batch(const, grid, cfg.paths, cfg.seed, x0=c.x, workers=cfg.workers)
    oracle = bs_oracles(c, sigma0)
    w = hit_weights(batch, c.b)
    for name, est, ref in (
        ("oracle.european", price_european(batch, c.K), oracle.european),
        ("oracle.up_and_in", price_up_and_in(batch, c, weights=w), oracle.up_and_in),
        ("oracle.hit_probability", mc_estimate(w, cfg.seed), oracle.hit_probability),
    ):
        z = abs(est.value - ref) / est.std_error if est.std_error > 0 else math.inf * (est.value != ref)
        check(name, z <= 3.0, f"mc={est.value:.6g} se={est.std_error:.3g} closed_form={ref:.6g} |z|={z:.2f}")

    n_small = min(cfg.paths, 20_000)
    H = cfg.model.H if isinstance(cfg.model, RoughBergomiParams) else 0.2
    rb = RoughBergomiParams(sigma0, 0.0, H, cfg.model.rho)
    a = simulate_batch(const, grid, n_small, cfg.seed, x0=c.x)
    r = simulate_batch(rb, grid, n_small, cfg.seed, x0=c.x)
    diff = float(np.abs(a.X - r.X).max())
    check("degeneration.nu0", diff <= 1e-12, f"max |X_const - X_rbergomi(nu=0)| = {diff:.3g}")

    density = _density_for(cfg)
    report = decay_scan(cfg.model, c, cfg.maturities, cfg.paths, cfg.steps, cfg.seed,
                        density=density, center=cfg.center, workers=cfg.workers)
    order_ok = all(rw.barrier <= rw.european for rw in report.rows)
    check("ordering.barrier_le_european", order_ok, "up-and-in <= European on every scan row")
    kinds = ["cdf"] if cfg.model.vol_bounds() is None else ["concentration", "cdf"]
    for kind in kinds:
        dom = verify_dominance(report, kind)
        detail = "all rows" if dom.ok else "failed rows T=" + ", ".join(f"{t:g}" for t in dom.failed_rows)
        check(f"dominance.{kind}", dom.ok, f"{detail} (c1={density.c1:.4g}, c2={density.c2:.4g})")

    out.mkdir(parents=True, exist_ok=True)
    text = "\n".join(lines) + "\n"
    (out / "validate.txt").write_text(text, encoding="utf-8")
    _write_manifest(out, cfg, dict(report.constants), {}, started)
    print(text, end="")
    return EXIT_OK if ok_all else EXIT_SUITE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roughbarrier", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("price", "price one contract"), ("scan", "maturity scan with charts"),
                        ("validate", "run the oracle and dominance suite")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="INI config file or manifest.json of a previous run")
        p.add_argument("--seed", type=int)
        p.add_argument("--paths", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = {("run", "seed"): args.seed, ("run", "paths"): args.paths,
                 ("run", "steps"): args.steps, ("run", "workers"): args.workers}
    commands = {"price": cmd_price, "scan": cmd_scan, "validate": cmd_validate}
    try:
        cfg = load_config(args.config, overrides)
        return commands[args.command](cfg, Path(args.out))
    except (ConfigError, InvalidArgument, InsufficientData) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"numerical failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
