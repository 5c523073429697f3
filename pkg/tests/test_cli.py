import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from rmtfof import cli
from rmtfof.errors import NumericalError
from rmtfof.panel import load_returns, write_returns
from rmtfof.synthetic import factor_panel, iid_panel, taxonomy_spec


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def factor_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("factor")
    assert cli.main(["simulate", "--kind", "taxonomy", "--seed", "4", "--out", str(d)]) == 0
    return d / "returns.csv", d / "strategies.csv"


@pytest.fixture(scope="module")
def iid_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("iid") / "returns.csv"
    write_returns(iid_panel(49, 105, seed=11), str(path))
    return path


def test_simulate_writes_panel_and_map(factor_files):
    returns, strategies = factor_files
    panel = load_returns(str(returns))
    assert (panel.n_funds, panel.n_periods) == (49, 105)
    expected, _ = factor_panel(taxonomy_spec(seed=4))
    # 17 significant digits make the CSV round trip exact
    np.testing.assert_array_equal(panel.returns, expected.returns)
    assert read_csv(strategies)[0] == ["fund_id", "strategy"]


def test_simulate_iid(tmp_path):
    assert run("simulate", "--kind", "iid", "--n-funds", 5, "--n-periods", 9, "--out", tmp_path) == 0
    assert load_returns(str(tmp_path / "returns.csv")).returns.shape == (5, 9)
    assert not (tmp_path / "strategies.csv").exists()


def test_spectrum_null_panel(iid_file, tmp_path):
    assert run("spectrum", "--input", iid_file, "--out", tmp_path) == 0
    js = json.loads((tmp_path / "spectrum.json").read_text())
    assert js["lambda_plus"] == pytest.approx(2.83, abs=0.01)
    assert len(js["deviating_above"]) <= 1
    assert len(js["eigenvalues"]) == 49
    rows = read_csv(tmp_path / "spectrum_density.csv")
    assert rows[0] == ["lambda", "empirical_density", "mp_density"]


def test_bootstrap(factor_files, tmp_path):
    returns, _ = factor_files
    assert run("bootstrap", "--input", returns, "--out", tmp_path) == 0
    js = json.loads((tmp_path / "bootstrap.json").read_text())
    assert js["first"]["n_periods"] == 53 and js["second"]["n_periods"] == 52
    assert (tmp_path / "bootstrap_density_second.csv").exists()


def test_analyze(factor_files, tmp_path):
    returns, strategies = factor_files
    assert run("analyze", "--input", returns, "--strategies", strategies, "--out", tmp_path) == 0
    js = json.loads((tmp_path / "market.json").read_text())
    assert js["lambda_plus_adjusted"] < js["lambda_plus_raw"]
    ipr_rows = read_csv(tmp_path / "ipr.csv")
    assert ipr_rows[0] == ["rank", "lambda", "ipr"] and len(ipr_rows) == 50
    assert all(1 / 49 - 1e-12 <= float(r[2]) <= 1 for r in ipr_rows[1:])
    comps = read_csv(tmp_path / "components.csv")
    assert comps[0][:2] == ["fund_id", "strategy"]
    for k in comps[0][2:]:
        rows = read_csv(tmp_path / f"contributions_rank{int(k[1:])}.csv")
        assert rows[0] == ["strategy", "n_l", "X", "share"]


def test_analyze_without_strategies(factor_files, tmp_path):
    returns, _ = factor_files
    assert run("analyze", "--input", returns, "--keep-market", "--out", tmp_path) == 0
    assert not list(tmp_path.glob("contributions_rank*.csv"))


def test_clean(factor_files, tmp_path):
    returns, _ = factor_files
    assert run("clean", "--input", returns, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "cleaned_correlation.csv")
    m = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    assert m.shape == (49, 49)
    np.testing.assert_allclose(np.diag(m), 1.0)
    assert json.loads((tmp_path / "cleaned.json").read_text())["renormalized"] is True


def test_frontier(factor_files, tmp_path):
    returns, _ = factor_files
    assert run("frontier", "--input", returns, "--grid-size", 7, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "frontier.csv")
    assert rows[0] == ["target_return", "predicted_risk", "realized_risk", "weights_json"]
    assert len(rows) == 8
    for r in rows[1:]:
        w = np.array(json.loads(r[3]))
        assert w.sum() == pytest.approx(1.0, abs=1e-8) and w.min() >= 0
        assert r[2] == ""


def test_frontier_allow_short(factor_files, tmp_path):
    returns, _ = factor_files
    assert run("frontier", "--input", returns, "--grid-size", 5, "--no-clean",
               "--allow-short", "--out", tmp_path) == 0
    w = np.array([json.loads(r[3]) for r in read_csv(tmp_path / "frontier.csv")[1:]])
    assert w.min() < 0


def test_experiment_on_file(factor_files, tmp_path):
    returns, _ = factor_files
    assert run("experiment", "--input", returns, "--grid-size", 10, "--out", tmp_path) == 0
    js = json.loads((tmp_path / "experiment.json").read_text())
    assert js["rp_raw_mean"] > js["rp_cleaned_mean"]
    assert len(js["points"]) == 10
    for name in ("frontier_raw.csv", "frontier_cleaned.csv", "frontier_realized.csv"):
        assert len(read_csv(tmp_path / name)) == 11


def test_experiment_sweep(tmp_path):
    assert run("experiment", "--num-seeds", 2, "--grid-size", 5, "--out", tmp_path) == 0
    js = json.loads((tmp_path / "experiment_sweep.json").read_text())
    assert js["num_seeds"] == 2
    assert len(read_csv(tmp_path / "experiment_seeds.csv")) == 3


def test_outputs_byte_identical_across_runs_and_threads(factor_files, tmp_path):
    returns, strategies = factor_files
    outputs = []
    for k, threads in enumerate((1, 1, 4)):
        out = tmp_path / f"run{k}"
        assert run("experiment", "--input", returns, "--grid-size", 12,
                   "--threads", threads, "--out", out) == 0
        assert run("analyze", "--input", returns, "--strategies", strategies, "--out", out) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outputs[0] == outputs[1] == outputs[2]


def test_missing_input_file(tmp_path, capsys):
    assert run("spectrum", "--input", tmp_path / "nope.csv", "--out", tmp_path) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: input:") and err.count("\n") == 1


def test_malformed_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("period,A,B\n2000-01,0.1,oops\n2000-02,0.2,0.3\n")
    assert run("spectrum", "--input", bad, "--out", tmp_path) == 2
    assert "error: input:" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, capsys):
    # two identical funds make the two-multiplier system singular
    path = tmp_path / "dup.csv"
    path.write_text("period,A,B,C\n" + "".join(
        f"2000-{k + 1:02d},{a},{a},{c}\n" for k, (a, c) in enumerate(
            [(0.1, 0.3), (-0.2, 0.1), (0.05, -0.4), (0.3, 0.2), (-0.1, 0.0), (0.2, -0.1)])))
    assert run("frontier", "--input", path, "--no-clean", "--allow-short", "--out", tmp_path) == 3
    assert capsys.readouterr().err.startswith("error: numerical:")


def test_numerical_failure_from_any_module(monkeypatch, iid_file, tmp_path, capsys):
    def boom(panel):
        raise NumericalError("eigensolver\nfailed")

    monkeypatch.setattr(cli, "spectrum_report", boom)
    assert run("spectrum", "--input", iid_file, "--out", tmp_path) == 3
    assert capsys.readouterr().err == "error: numerical: eigensolver failed\n"


@pytest.mark.parametrize("argv", [["frobnicate"], [], ["spectrum"], ["frontier", "--input", "x", "--grid-size", "1"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code != 0


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "rmtfof", "frobnicate"], capture_output=True, text=True)
    assert res.returncode == 2
    assert "usage:" in res.stderr
    res = subprocess.run([sys.executable, "-m", "rmtfof", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("rmtfof ")
