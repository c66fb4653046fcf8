import csv
import io
import subprocess
import sys

import pytest

from seqsel.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_STARVATION, run
from seqsel.config import load_config, parse_config
from seqsel.core import ConfigurationError
from seqsel.nlistats import rank_correlation
from seqsel.store import read_store

SHORT = """
[experiment]
scenario = single_channel_1pol
[link]
length = 100
[ssfm]
step_size = 1000
[dbp]
step_size = 1000
[selection]
step_size = 1000
burst_length = 2048
n = 32
eta_target = 0.1
target_accepted = 100
power_dbm = -3
[nli]
burst_length = 4096
n = 32
power_dbm = -3
[source]
n_symbols = 2048
edge = 32
[sweep]
powers_dbm = -12, -9
variants = benchmark selection dbp selection+dbp
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    lines = [l for l in open(path).read().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


# -- configuration -------------------------------------------------------------------

def test_defaults_and_overrides():
    cfg = parse_config("[link]\nlength = 80\n")
    assert cfg["link"]["length"] == 80.0 and cfg.link().length == 80.0
    assert cfg["sweep"]["powers_dbm"] == (-10.0, -9.0, -8.0)
    assert cfg.with_seed(5).seed == 5 and cfg.seed == 0


@pytest.mark.parametrize("text", ["[bogus]\nx=1\n", "[link]\nlenght=3\n", "[link]\nlength=abc\n",
                                  "[experiment]\nscenario=mystery\n", "[sweep]\npowers_dbm=\n",
                                  "[selection]\ngamma_lambda=1e-3\n", "[wdm]\nnum_channels=2\n", "no section\n"])
def test_config_errors(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_config_hash_ignores_layout_and_seed():
    a = parse_config("[link]\nlength = 80\n")
    b = parse_config("# comment\n[link]\n  length=80.0\n[experiment]\nseed = 9\n")
    assert a.config_hash == b.config_hash
    assert a.config_hash != parse_config("[link]\nlength = 81\n").config_hash


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "absent.ini")


# -- analytic ---------------------------------------------------------------------------

def test_analytic_default_regimes(tmp_path):
    assert run(["analytic", "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "analytic.csv")
    top = [r for r in rows if float(r["P_dB"]) >= 30]
    n10 = [float(r["air_selected[n'=10]"]) for r in top]
    n20 = [float(r["air_selected[n'=20]"]) for r in top]
    n30 = [float(r["air_selected[n'=30]"]) for r in rows]
    assert n10 == sorted(n10)
    assert max(n20) - min(n20) < 0.05
    assert n30[-1] < max(n30)


def test_analytic_empty_primes_and_single_point(tmp_path):
    cfg = write(tmp_path, "[analytic]\nn_primes =\npoints = 1\np_min_db = 0\n")
    assert run(["analytic", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "analytic.csv")
    assert len(rows) == 1 and list(rows[0]) == ["P_dB", "air_gaussian", "linear_capacity"]


def test_analytic_header_and_byte_identity(tmp_path):
    for d in ("a", "b"):
        assert run(["analytic", "--seed", "7", "--out", str(tmp_path / d)]) == EXIT_OK
    a = (tmp_path / "a" / "analytic.csv").read_text()
    assert a == (tmp_path / "b" / "analytic.csv").read_text()
    head = a.splitlines()[:3]
    assert head[0].startswith("# config_sha256=") and head[1] == "# seed=7" and head[2].startswith("# seqsel_version=")


def test_numeric_failure_exit_code(tmp_path):
    cfg = write(tmp_path, "[analytic]\nn_primes = 60\n")
    assert run(["analytic", "--config", cfg, "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_config_error_exit_codes(tmp_path):
    assert run(["analytic", "--config", str(tmp_path / "none.ini")]) == EXIT_CONFIG
    assert run(["analytic", "--config", write(tmp_path, "[link]\nfoo = 1\n")]) == EXIT_CONFIG
    assert run(["analytic", "--workers", "0"]) == EXIT_CONFIG
    assert run(["frobnicate"]) == EXIT_CONFIG


# -- selection, stores and sweeps -----------------------------------------------------------

def test_select_is_byte_reproducible(tmp_path):
    cfg = write(tmp_path, SHORT)
    for d in ("a", "b"):
        assert run(["select", "--config", cfg, "--seed", "3", "--out", str(tmp_path / d)]) == EXIT_OK
    a = (tmp_path / "a" / "selected.seqs").read_bytes()
    assert a == (tmp_path / "b" / "selected.seqs").read_bytes()
    assert (tmp_path / "a" / "select.csv").read_text() == (tmp_path / "b" / "select.csv").read_text()
    store = read_store(tmp_path / "a" / "selected.seqs")
    assert store.n == 32 and store.eta == pytest.approx(0.1, abs=0.002)


def test_select_passthrough(tmp_path):
    cfg = write(tmp_path, SHORT.replace("eta_target = 0.1", "eta_target = 1"))
    assert run(["select", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    store = read_store(tmp_path / "selected.seqs")
    assert store.n_accepted == store.n_proposed == len(store.blocks)


def test_select_starvation(tmp_path):
    text = SHORT.replace("eta_target = 0.1", "eta_target = none\ngamma_lambda = 1e-30\nmax_bursts = 1")
    assert run(["select", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_STARVATION


def test_averaged_selection_changes_ranking(tmp_path):
    costs = {}
    for n_it in (1, 20):
        text = SHORT.replace("[selection]", f"[selection]\nprocedure = averaged\nn_guard = 16\nn_it = {n_it}")
        text = text.replace("burst_length = 2048", "burst_length = 1536")
        cfg = parse_config(text)
        from seqsel.selection import averaged_select
        r = averaged_select(1536, 32, 16, n_it, cfg.selection_power(), cfg.cost_channel(), eta_target=0.5,
                            seed=1)
        costs[n_it] = r.cost_samples
        out = tmp_path / f"it{n_it}"
        assert run(["select", "--config", write(tmp_path, text), "--seed", "1", "--out", str(out)]) == EXIT_OK
    a = (tmp_path / "it1" / "selected.seqs").read_bytes()
    b = (tmp_path / "it20" / "selected.seqs").read_bytes()
    assert a != b
    assert rank_correlation(costs[1], costs[20]) < 1.0


def test_store_info(tmp_path, capsys):
    cfg = write(tmp_path, SHORT)
    assert run(["select", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    capsys.readouterr()
    assert run(["store-info", str(tmp_path / "selected.seqs")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "n=32" in out and "pol_count=1" in out and "sha256=" in out
    assert run(["store-info", str(tmp_path / "select.csv")]) == EXIT_CONFIG


def test_air_sweep_with_store(tmp_path):
    cfg = write(tmp_path, SHORT)
    assert run(["select", "--config", cfg, "--out", str(tmp_path / "s")]) == EXIT_OK
    store = str(tmp_path / "s" / "selected.seqs")
    assert run(["air", "--config", cfg, "--store", store, "--out", str(tmp_path / "a")]) == EXIT_OK
    text = (tmp_path / "a" / "air.csv").read_text()
    assert "# store_sha256=" in text
    rows = read_csv(tmp_path / "a" / "air.csv")
    assert [r["variant"] for r in rows] == ["benchmark"] * 2 + ["selection"] * 2 + ["dbp"] * 2 + ["selection+dbp"] * 2
    for col in ("power_dBm", "se_bits_s_hz_pol", "gross_air", "rate_loss", "sigma2_opt", "eta", "n", "seed"):
        assert col in rows[0]
    sel = [r for r in rows if r["variant"] == "selection"]
    assert float(sel[0]["rate_loss"]) > 0 and sel[0]["n"] == "32"


def test_air_linear_benchmark(tmp_path):
    text = SHORT.replace("[link]\nlength = 100", "[link]\ngamma = 0").replace("[ssfm]\nstep_size = 1000",
                                                                          "[ssfm]\nstep_size = 100000")
    text = text.replace("variants = benchmark selection dbp selection+dbp", "variants = benchmark")
    text = text.replace("n_symbols = 2048", "n_symbols = 16384")
    assert run(["air", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_OK
    for r in read_csv(tmp_path / "air.csv"):
        assert float(r["se_bits_s_hz_pol"]) == pytest.approx(float(r["linear_capacity"]), abs=0.05)


def test_air_store_polarization_mismatch(tmp_path):
    cfg = write(tmp_path, SHORT)
    assert run(["select", "--config", cfg, "--out", str(tmp_path / "s")]) == EXIT_OK
    wdm = SHORT.replace("scenario = single_channel_1pol", "scenario = wdm_2pol")
    rc = run(["air", "--config", write(tmp_path, wdm, "w.ini"), "--store", str(tmp_path / "s" / "selected.seqs"),
              "--out", str(tmp_path)])
    assert rc == EXIT_CONFIG


def test_air_rejects_analytic_scenario(tmp_path):
    cfg = write(tmp_path, "[experiment]\nscenario = analytic\n")
    assert run(["air", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_nli_stats_outputs(tmp_path):
    cfg = write(tmp_path, SHORT)
    assert run(["nli-stats", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    summary = {r["quantity"]: r["value"] for r in read_csv(tmp_path / "nli_summary.csv")}
    assert summary["cubic_pass"] == "1"
    assert float(summary["gamma_shape"]) < 32
    assert len(read_csv(tmp_path / "nli_hist.csv")) == 100


def test_nli_stats_without_nonlinearity(tmp_path):
    cfg = write(tmp_path, SHORT.replace("[link]\nlength = 100", "[link]\nlength = 100\ngamma = 0"))
    assert run(["nli-stats", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    summary = {r["quantity"]: r["value"] for r in read_csv(tmp_path / "nli_summary.csv")}
    assert summary["gamma_shape"] == "degenerate" and summary["cubic_pass"] == "degenerate"
    assert float(summary["mean_cost"]) == 0.0


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "seqsel.cli", "analytic", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and (tmp_path / "analytic.csv").exists()
