import csv
import json
import math
import re

import pytest

from roughbarrier.cli import main
from roughbarrier.config import ConfigError, config_digest, load_config, read_raw
from roughbarrier.pricing import BarrierContract, bs_oracles

BS_CONFIG = """
[model]
kind = rbergomi
nu = 0
rho = 0
sigma0 = 0.2
[contract]
S0 = 10
K = 9.5
B = 11
T = 0.5
[run]
seed = 7
paths = 50000
steps = 100
"""

SMALL_SCAN = """
[contract]
T = 0.5
[scan]
maturities = 0.5, 0.25, 0.1
[run]
seed = 3
paths = 8000
steps = 32
[bounds]
train_paths = 4000
"""


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _read_csv(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _points(svg_text, series):
    pat = rf'data-series="{re.escape(series)}" data-x="([^"]+)" data-y="([^"]+)"'
    return [(float(a), float(b)) for a, b in re.findall(pat, svg_text)]


# -- config -----------------------------------------------------------------------

def test_defaults_parse():
    cfg = load_config()
    assert cfg.model.truncation_n == 5 and cfg.contract.B == 11 and cfg.maturities[-1] == 0.01


def test_flags_override_file(tmp_path):
    cfg = load_config(_write(tmp_path, BS_CONFIG), {("run", "seed"): 99, ("run", "paths"): None})
    assert cfg.seed == 99 and cfg.paths == 50000


def test_digest_ignores_worker_count():
    a, b = read_raw(None), read_raw(None)
    b["run"]["workers"] = "4"
    assert config_digest(a) == config_digest(b)
    b["run"]["seed"] = "1"
    assert config_digest(a) != config_digest(b)


@pytest.mark.parametrize("section,key,value,field", [
    ("contract", "B", "9", "contract.B"),
    ("model", "rho", "1", "model.rho"),
    ("scan", "maturities", "", "scan.maturities"),
    ("scan", "maturities", "0.1, 0.5", "scan.maturities"),
    ("run", "paths", "ten", "run.paths"),
    ("model", "kind", "heston", "model.kind"),
    ("bounds", "c1", "-1", "bounds.c1"),
])
def test_field_level_errors(section, key, value, field):
    with pytest.raises(ConfigError, match=re.escape(field)):
        load_config(None, {(section, key): value})


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match="model.volvol"):
        load_config(_write(tmp_path, "[model]\nvolvol = 1\n"))
    with pytest.raises(ConfigError, match="extra"):
        load_config(_write(tmp_path, "[extra]\na = 1\n"))


def test_raw_model_needs_c2():
    with pytest.raises(ConfigError, match="bounds.c2"):
        load_config(None, {("model", "truncation_n"): "none"})
    cfg = load_config(None, {("model", "truncation_n"): "none", ("bounds", "c2"): "0.5"})
    assert cfg.model.truncation_n is None and cfg.c2 == 0.5


# -- price ------------------------------------------------------------------------

def test_price_matches_closed_forms(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["price", "--config", _write(tmp_path, BS_CONFIG), "--out", str(out)]) == 0
    row = _read_csv(out / "price.csv")[0]
    o = bs_oracles(BarrierContract(10, 9.5, 11, 0.5), 0.2)
    assert abs(float(row["european"]) - o.european) < 3 * float(row["european_se"])
    assert abs(float(row["barrier"]) - o.up_and_in) < 3 * float(row["barrier_se"])
    assert float(row["oracle_barrier"]) == o.up_and_in
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_digest"] in (out / "price.csv").read_text()
    assert "Up-and-in" in capsys.readouterr().out


def test_price_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, BS_CONFIG)
    assert main(["price", "--config", cfg, "--out", str(tmp_path / "a"), "--paths", "5000"]) == 0
    assert main(["price", "--config", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b"),
                 "--workers", "3"]) == 0
    assert (tmp_path / "a" / "price.csv").read_bytes() == (tmp_path / "b" / "price.csv").read_bytes()


def test_price_barrier_below_spot(tmp_path, capsys):
    cfg = _write(tmp_path, BS_CONFIG.replace("B = 11", "B = 10"))
    assert main(["price", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "B > S0" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["price", "--config", str(tmp_path / "nope.ini")]) == 1
    assert "not found" in capsys.readouterr().err


# -- scan -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def scan_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("scan")
    cfg = d / "scan.ini"
    cfg.write_text(SMALL_SCAN)
    assert main(["scan", "--config", str(cfg), "--out", str(d / "a")]) == 0
    return d


def test_scan_outputs(scan_dir):
    out = scan_dir / "a"
    for name in ("report.csv", "manifest.json", "prices.svg", "rate.svg"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    digest = manifest["config_digest"]
    for name in ("report.csv", "prices.svg", "rate.svg"):
        assert digest in (out / name).read_text()
    assert manifest["constants"]["c1"] > 0 and "fits" in manifest["constants"]
    rows = _read_csv(out / "report.csv")
    assert [float(r["T"]) for r in rows] == [0.5, 0.25, 0.1]
    assert len(manifest["row_digests"]["report.csv"]) == 3


def test_scan_chart_barrier_below_european(scan_dir):
    svg = (scan_dir / "a" / "prices.svg").read_text()
    eu = dict(_points(svg, "European call"))
    bar = dict(_points(svg, "Up-and-in call"))
    assert set(eu) == set(bar) == {0.5, 0.25, 0.1}
    assert all(bar[t] < eu[t] for t in eu)
    assert "<script" not in svg and "href" not in svg


def test_scan_rerun_from_manifest_other_workers(scan_dir):
    out_b = scan_dir / "b"
    assert main(["scan", "--config", str(scan_dir / "a" / "manifest.json"), "--workers", "2",
                 "--out", str(out_b)]) == 0
    for name in ("report.csv", "prices.svg", "rate.svg"):
        assert (scan_dir / "a" / name).read_bytes() == (out_b / name).read_bytes()


def test_scan_empty_grid(tmp_path, capsys):
    cfg = _write(tmp_path, "[scan]\nmaturities =\n")
    assert main(["scan", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "maturity grid is empty" in capsys.readouterr().err


def test_synthetic_charts_render_exact_values(tmp_path):
    Ts = [0.5, 0.25, 0.1, 0.05]
    P = [math.exp(-0.02 / t) for t in Ts]
    eu = [0.61, 0.57, 0.53, 0.51]
    bar = [0.4, 0.2, 0.05, 0.001]
    text = "[scan]\nmaturities = {}\n[synthetic]\nprobabilities = {}\neuropean = {}\nbarrier = {}\n".format(
        *(", ".join(repr(v) for v in seq) for seq in (Ts, P, eu, bar)))
    out = tmp_path / "o"
    assert main(["scan", "--config", _write(tmp_path, text), "--out", str(out)]) == 0
    rate = (out / "rate.svg").read_text()
    assert _points(rate, "P(hit)") == [(1 / t, p) for t, p in zip(Ts, P)]
    assert "-0.02/T" in rate and "R2=1.000" in rate
    prices = (out / "prices.svg").read_text()
    assert _points(prices, "European call") == list(zip(Ts, eu))
    assert _points(prices, "Up-and-in call") == list(zip(Ts, bar))


def test_synthetic_length_mismatch():
    with pytest.raises(ConfigError, match="synthetic.probabilities"):
        load_config(None, {("synthetic", "probabilities"): "0.1, 0.2"})


# -- validate ---------------------------------------------------------------------

VALIDATE_CONST = """
[model]
kind = const
sigma0 = 0.2
rho = 0
[scan]
maturities = 0.5, 0.25, 0.1
[run]
seed = 4
paths = 20000
steps = 64
[bounds]
train_paths = 10000
"""


def test_validate_constant_vol_passes(tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["validate", "--config", _write(tmp_path, VALIDATE_CONST), "--out", str(out)]) == 0
    report = (out / "validate.txt").read_text()
    assert "FAIL" not in report
    for name in ("oracle.european", "oracle.up_and_in", "oracle.hit_probability", "degeneration.nu0",
                 "ordering.barrier_le_european", "dominance.concentration", "dominance.cdf"):
        assert f"PASS {name}" in report


def test_validate_broken_amplitude_names_row(tmp_path, capsys):
    cfg = _write(tmp_path, VALIDATE_CONST + "c1 = 0\n")
    assert main(["validate", "--config", cfg, "--out", str(tmp_path / "v")]) == 3
    text = capsys.readouterr().out
    assert "FAIL dominance.cdf: failed rows T=0.5, 0.25, 0.1" in text


def test_validate_rejects_unit_correlation(tmp_path, capsys):
    cfg = _write(tmp_path, VALIDATE_CONST.replace("rho = 0", "rho = 1"))
    assert main(["validate", "--config", cfg, "--out", str(tmp_path / "v")]) == 1
    assert "model.rho" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "roughbarrier", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "price" in res.stdout
