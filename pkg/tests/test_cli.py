import re
import subprocess
import sys

import pytest

from hybridcd import cli
from hybridcd.harness import read_csv
from hybridcd.model import load_dataset

SMALL = ["--n", "5", "--p", "8", "--m", "6", "--epochs", "3"]


def run(argv, capsys=None):
    code = cli.main([str(a) for a in argv])
    return code


def test_gen_data(tmp_path):
    out = tmp_path / "d.txt"
    assert run(["gen-data", "--n", 4, "--p", 3, "--seed", 1, "--out", out]) == 0
    data = load_dataset(out)
    assert (data.n, data.p) == (4, 3)


def test_train_outputs(tmp_path):
    assert run(["train", "--optimizer", "hybrid", *SMALL, "--out-dir", tmp_path]) == 0
    rows = read_csv(tmp_path / "hybrid_m6_dw0.5_seed42.csv")
    assert len(rows) == 3
    assert (tmp_path / "train_epoch.svg").exists()


def test_train_with_saved_data(tmp_path):
    run(["gen-data", "--n", 4, "--p", 8, "--seed", 3, "--out", tmp_path / "d.txt"])
    assert run(["train", "--optimizer", "gd", "--m", 5, "--epochs", 2,
                "--data", tmp_path / "d.txt", "--out-dir", tmp_path / "o"]) == 0
    assert len(read_csv(tmp_path / "o" / "gd_m5_dw0.5_seed42.csv")) == 2


def test_train_zero_epochs_is_usage_error(tmp_path, capsys):
    assert run(["train", "--optimizer", "gd", "--epochs", 0, "--out-dir", tmp_path]) == 2
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1 and "epochs" in err


@pytest.mark.parametrize("argv", [
    ["train", "--n", "ten"],
    ["train", "--bogus", "1"],
    ["train", "--optimizer", "adam"],
    ["plot", "--x", "epoch", "--out", "x.svg"],
    ["frobnicate"],
    ["train", "--data", "/no/such/file"],
    ["train", "--config", "/no/such/file"],
])
def test_usage_errors(argv, tmp_path, capsys):
    assert run(argv + ["--out-dir", str(tmp_path)] if argv[0] == "train" else argv) == 2
    assert len(capsys.readouterr().err.strip().splitlines()) == 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_exit_code(tmp_path, capsys):
    code = run(["train", "--optimizer", "gd", "--lr", "1e300", *SMALL, "--out-dir", tmp_path])
    assert code == 1
    assert re.search(r"epoch \d+", capsys.readouterr().err)


def test_compare_and_sweep(tmp_path):
    assert run(["compare", "--m-list", 4, 6, *SMALL[:4], "--epochs", 2, "--out-dir", tmp_path]) == 0
    assert len(list(tmp_path.glob("*.csv"))) == 4
    assert (tmp_path / "compare_epoch.svg").exists() and (tmp_path / "compare_time.svg").exists()
    sweep = tmp_path / "sweep"
    assert run(["sweep-dw", "--dw-list", 0.1, 1.0, *SMALL, "--out-dir", sweep]) == 0
    assert sorted(p.name for p in sweep.iterdir()) == [
        "hybrid_m6_dw0.1_seed42.csv", "hybrid_m6_dw1_seed42.csv",
        "sweep_dw_epoch.svg", "sweep_dw_time.svg"]


def test_plot_identical_runs_overlap(tmp_path):
    for d in ("a", "b"):
        run(["train", "--optimizer", "gd", *SMALL, "--out-dir", tmp_path / d])
    a = tmp_path / "a" / "gd_m6_dw0.5_seed42.csv"
    b = tmp_path / "b" / "gd_m6_dw0.5_seed42.csv"
    out = tmp_path / "cmp.svg"
    assert run(["plot", "--inputs", a, b, "--x", "epoch", "--out", out]) == 0
    lines = re.findall(r'points="([^"]*)"', out.read_text())
    assert len(lines) == 2 and lines[0] == lines[1]


def test_config_file_only_dw(tmp_path):
    cfg = tmp_path / "c.conf"
    cfg.write_text("# comment\ndw = 0.25   # trailing\n")
    loaded = cli.load_config(cfg)
    assert loaded.dw == 0.25
    assert loaded.n == 10 and loaded.p == 1000 and loaded.m == 100 and loaded.seed == 42


def test_config_file_empty(tmp_path):
    cfg = tmp_path / "c.conf"
    cfg.write_text("")
    assert cli.load_config(cfg) == cli.ExperimentConfig()


def test_config_file_errors(tmp_path):
    cfg = tmp_path / "c.conf"
    cfg.write_text("dw = -1\n")
    with pytest.raises(cli.UsageError, match="dw"):
        cli.load_config(cfg)
    cfg.write_text("n = 10\nwidth = 3\n")
    with pytest.raises(cli.UsageError, match=r"c.conf:2: unknown key 'width'"):
        cli.load_config(cfg)
    cfg.write_text("n = 10\n\nthis line is wrong\n")
    with pytest.raises(cli.UsageError, match=r":3: syntax error"):
        cli.load_config(cfg)
    cfg.write_text("epochs = many\n")
    with pytest.raises(cli.UsageError, match="epochs"):
        cli.load_config(cfg)


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.conf"
    cfg.write_text("m = 3\nepochs = 5\noptimizer = gd\n")
    assert run(["train", "--config", cfg, "--epochs", 2, "--n", 4, "--p", 3,
                "--out-dir", tmp_path]) == 0
    assert len(read_csv(tmp_path / "gd_m3_dw0.5_seed42.csv")) == 2


def _help_flags(sub):
    text = cli.build_parser()._subparsers._group_actions[0].choices[sub].format_help()
    return set(re.findall(r"(--[a-z][a-z-]*)", text)) - {"--help"}


@pytest.mark.parametrize("sub", ["gen-data", "train", "compare", "sweep-dw", "plot"])
def test_help_lists_every_flag(sub):
    parser = cli.build_parser()._subparsers._group_actions[0].choices[sub]
    accepted = {s for a in parser._actions for s in a.option_strings if s.startswith("--")}
    assert _help_flags(sub) == accepted - {"--help"}


def test_help_exits_zero():
    out = subprocess.run([sys.executable, "-m", "hybridcd", "train", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "--dw" in out.stdout


def test_cli_deterministic_outputs(tmp_path):
    for d in ("a", "b"):
        run(["train", "--optimizer", "gd", *SMALL, "--out-dir", tmp_path / d])
    assert (tmp_path / "a" / "train_epoch.svg").read_bytes() == (tmp_path / "b" / "train_epoch.svg").read_bytes()
