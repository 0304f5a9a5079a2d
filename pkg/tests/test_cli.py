import csv
import json

import numpy as np
import pytest

from shrinktg import cli
from shrinktg.cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_NUMERICAL,
    EXIT_OK,
    main,
    read_data_csv,
    read_summary_csv,
)
from shrinktg.drawstore import BIN_NAME, DrawStore
from shrinktg.errors import DataError, SamplerError


@pytest.fixture
def tvp_csv(tmp_path):
    g = np.random.default_rng(0)
    T = 40
    x = g.standard_normal(T)
    y = 0.5 + (1.0 + np.linspace(0, 1, T)) * x + 0.3 * g.standard_normal(T)
    path = tmp_path / "tvp.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "x"])
        w.writerows(zip(y, x))
    return path


@pytest.fixture
def var_csv(tmp_path):
    assert main(["simulate", "--preset", "sparse", "--T", "40", "--m", "2", "--seed", "1",
                 "-o", str(tmp_path / "sim")]) == EXIT_OK
    return tmp_path / "sim" / "data.csv"


def fit_tvp(tvp_csv, out, *extra):
    return main(["fit", "tvp", str(tvp_csv), "-o", str(out), "--iters", "60", "--burnin", "20",
                 "--thin", "2", "--intercept", *extra])


def test_simulate_creates_missing_directories(tmp_path):
    out = tmp_path / "a" / "b"
    assert main(["simulate", "--preset", "dense", "--T", "30", "--m", "3", "-o", str(out)]) == EXIT_OK
    for name in ("data.csv", "truth.csv", "truth_paths.csv", "simulate.json"):
        assert (out / name).exists()
    names, arr = read_data_csv(out / "data.csv")
    assert names == ["y1", "y2", "y3"] and arr.shape == (30, 3)


def test_fit_outputs_and_summary_round_trip(tvp_csv, tmp_path):
    out = tmp_path / "fit"
    assert fit_tvp(tvp_csv, out) == EXIT_OK
    store = DrawStore.load(out)
    assert store.n_draws == 20
    summ = read_summary_csv(out / "summary.csv")
    x = store["beta_path"]
    # written values parse back to the exact floats of the column-wise summary
    assert summ[("beta_path", "7:1")]["mean"] == x.mean(axis=0)[7, 1]
    assert summ[("beta_path", "7:1")]["q0.975"] == np.quantile(x, [0.975], axis=0)[0, 7, 1]
    assert summ[("a_xi", "")]["q0.5"] == np.quantile(store["a_xi"], [0.5], axis=0)[0]
    with open(out / "inclusion.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["parameter"] for r in rows} == {"xi2", "tau2"} and len(rows) == 4
    with open(out / "diagnostics.csv") as fh:
        metrics = {r["metric"] for r in csv.DictReader(fh)}
    assert metrics == {"ess", "acceptance"}


def test_fit_is_bit_reproducible(tvp_csv, tmp_path):
    assert fit_tvp(tvp_csv, tmp_path / "r1") == EXIT_OK
    assert fit_tvp(tvp_csv, tmp_path / "r2") == EXIT_OK
    assert (tmp_path / "r1" / BIN_NAME).read_bytes() == (tmp_path / "r2" / BIN_NAME).read_bytes()
    assert fit_tvp(tvp_csv, tmp_path / "r3", "--seed", "1") == EXIT_OK
    assert (tmp_path / "r1" / BIN_NAME).read_bytes() != (tmp_path / "r3" / BIN_NAME).read_bytes()


def test_config_file_precedence(tvp_csv, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"iters": 50, "burnin": 10, "thin": 2, "prior": "horseshoe"}))
    out = tmp_path / "fit"
    assert main(["fit", "tvp", str(tvp_csv), "-o", str(out), "--config", str(cfg),
                 "--thin", "4", "--intercept"]) == EXIT_OK
    store = DrawStore.load(out)
    assert store.n_draws == 10
    assert np.all(store["a_xi"] == 0.5) and np.all(store["c_tau"] == 0.5)
    assert store.meta["settings"]["thin"] == 4 and store.meta["settings"]["iters"] == 50


def test_fit_var_run_length(var_csv, tmp_path):
    out = tmp_path / "var"
    assert main(["fit", "var", str(var_csv), "-o", str(out), "--lags", "2",
                 "--iters", "2000", "--burnin", "1000", "--thin", "10"]) == EXIT_OK
    store = DrawStore.load(out)
    assert store.n_draws == 100
    assert store["eq2.a.beta"].shape == (100, 1)
    assert store["eq1.beta.beta"].shape == (100, 5)
    assert "eq1.h" in store


def test_multiple_chains(tvp_csv, tmp_path):
    out = tmp_path / "multi"
    assert fit_tvp(tvp_csv, out, "--chains", "2") == EXIT_OK
    c1 = DrawStore.load(out / "chain1")
    c2 = DrawStore.load(out / "chain2")
    assert not np.array_equal(c1["beta"], c2["beta"])
    assert (out / "summary.csv").exists() and not (out / BIN_NAME).exists()


@pytest.mark.parametrize("argv_extra, content", [
    (["--iters", "10", "--burnin", "20"], None),
    (["--config", "{cfg}"], "not json"),
    (["--config", "{cfg}"], json.dumps({"itters": 5})),
    (["--config", "{cfg}"], json.dumps({"iters": "many"})),
])
def test_config_errors_exit_2(tvp_csv, tmp_path, argv_extra, content, capsys):
    cfg = tmp_path / "cfg.json"
    if content is not None:
        cfg.write_text(content)
    argv = ["fit", "tvp", str(tvp_csv), "-o", str(tmp_path / "o")] + [a.format(cfg=cfg) for a in argv_extra]
    assert main(argv) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_data_errors_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,x\n1.0,2.0\n3.0,abc\n4.0,5.0\n")
    assert main(["fit", "tvp", str(bad), "-o", str(tmp_path / "o")]) == EXIT_DATA
    err = capsys.readouterr().err
    assert "row 3" in err and "'x'" in err
    assert main(["fit", "tvp", str(tmp_path / "missing.csv")]) == EXIT_DATA
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("y,x\n1,2\n3\n")
    with pytest.raises(DataError, match="row 3"):
        read_data_csv(ragged)
    nan = tmp_path / "nan.csv"
    nan.write_text("y,x\n1,2\n3,nan\n4,5\n")
    with pytest.raises(DataError, match="non-finite"):
        read_data_csv(nan)


def test_tvp_without_regressors_is_a_data_error(tmp_path):
    one = tmp_path / "one.csv"
    one.write_text("y\n1\n2\n3\n4\n")
    assert main(["fit", "tvp", str(one), "-o", str(tmp_path / "o")]) == EXIT_DATA


def test_sampler_failure_exit_4(tvp_csv, tmp_path, monkeypatch, capsys):
    def fail(*args, **kw):
        raise SamplerError("non-finite draw", sweep=3, step="c")

    monkeypatch.setattr(cli, "run_chain", fail)
    assert fit_tvp(tvp_csv, tmp_path / "o") == EXIT_NUMERICAL
    assert "step=c" in capsys.readouterr().err


def test_prior_command(tmp_path):
    out = tmp_path / "prior"
    assert main(["prior", "--a", "0.2", "--c", "0.3", "--preset", "horseshoe", "--bands",
                 "--draws", "200", "--biv", "50", "--grid", "0.01:2:20",
                 "--profile-grid", "0.01:0.99:15", "-o", str(out)]) == EXIT_OK
    with open(out / "density.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "log_density", "log_density_horseshoe"] and len(rows) == 21
    with open(out / "profile_bands.csv") as fh:
        bands = list(csv.DictReader(fh))
    assert len(bands) == 15
    assert all(float(b["q0.025"]) <= float(b["median"]) <= float(b["q0.975"]) for b in bands)
    with open(out / "profile_biv.csv") as fh:
        biv = np.array(list(csv.reader(fh))[1:], dtype=float)
    assert biv.shape == (50, 2) and np.all((biv > 0) & (biv < 1))


def test_prior_command_rejects_bad_input(tmp_path):
    assert main(["prior", "--a", "-1", "-o", str(tmp_path / "p")]) == EXIT_CONFIG
    assert main(["prior", "--grid", "2:1:10", "-o", str(tmp_path / "p")]) == EXIT_CONFIG


def test_check_quick(tmp_path, capsys):
    out = tmp_path / "check"
    code = main(["check", "--quick", "-o", str(out)])
    report = json.loads((out / "check_report.json").read_text())
    assert code == (EXIT_OK if report["passed"] else 1)
    assert code == EXIT_OK
    assert [c["check"] for c in report["checks"][:2]] == ["getting_it_right_tvp", "getting_it_right_var"]
    assert "getting-it-right tvp" in capsys.readouterr().out
