"""Command line interface smoke tests via click's CliRunner."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from swme_lab.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _text(result) -> str:
    out = result.output
    try:
        out += result.stderr
    except (ValueError, AttributeError):
        pass
    return out


def test_help_lists_commands(runner):
    res = runner.invoke(main, ["--help"])
    assert res.exit_code == 0
    for cmd in ("run", "tables", "compare", "scan-hyperbolicity"):
        assert cmd in res.output


def test_run_reports_steady_errors(runner):
    res = runner.invoke(main, ["run", "--scenario", "test1", "--cells", "40",
                               "--tend", "0.01", "--no-plot"])
    assert res.exit_code == 0, _text(res)
    assert "model=swlme N=8 order=1 wb" in res.output
    assert "L1 errors vs initial steady state" in res.output


def test_run_writes_outputs(runner, tmp_path):
    out = tmp_path / "res"
    res = runner.invoke(main, ["run", "--scenario", "test5", "--n", "2",
                               "--cells", "30", "--tend", "0.01", "--order", "2",
                               "--out", str(out), "--no-plot"])
    assert res.exit_code == 0, _text(res)
    assert "wrote" in res.output
    assert (out / "final.csv").is_file()
    assert (out / "manifest.json").is_file()
    assert not (out / "profile.png").exists()


def test_run_rejects_unsolvable_steady_state(runner):
    # raising gravity pushes the crest energy above the prescribed constant
    res = runner.invoke(main, ["run", "--scenario", "test2", "--cells", "50",
                               "--g", "30.0", "--no-plot"])
    assert res.exit_code == 1
    assert "no steady depth" in _text(res)


def test_tables_prints_and_writes_rows(runner, tmp_path):
    out = tmp_path / "rows.csv"
    res = runner.invoke(main, ["tables", "--scenarios", "test1", "--orders", "1",
                               "--schemes", "wb", "--cells", "30",
                               "--tend", "0.005", "--out", str(out)])
    assert res.exit_code == 0, _text(res)
    assert "l1_h" in res.output
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert set(lines[0].split(",")[:3]) == {"scenario", "order", "wb"}


def test_tables_rejects_unknown_scenario(runner):
    res = runner.invoke(main, ["tables", "--scenarios", "test9"])
    assert res.exit_code == 1
    assert "unknown scenario" in _text(res)


def test_tables_rejects_unknown_scheme(runner):
    res = runner.invoke(main, ["tables", "--scenarios", "test1",
                               "--schemes", "magic"])
    assert res.exit_code == 1
    assert "unknown scheme" in _text(res)


def test_compare_prints_metrics(runner):
    res = runner.invoke(main, ["compare", "--scenario", "test5",
                               "--models", "swlme,hswme", "--cells", "30",
                               "--no-plot"])
    assert res.exit_code == 0, _text(res)
    assert "tv_alpha_last" in res.output
    assert "front_position" in res.output
    assert "hswme" in res.output


def test_compare_rejects_unknown_model(runner):
    res = runner.invoke(main, ["compare", "--models", "swlme,magic"])
    assert res.exit_code == 1
    assert "unknown model" in _text(res)


def test_scan_hyperbolicity_writes_csv(runner, tmp_path):
    out = tmp_path / "scan.csv"
    res = runner.invoke(main, ["scan-hyperbolicity", "--samples", "15",
                               "--out", str(out)])
    assert res.exit_code == 0, _text(res)
    assert "swme2 N=2" in res.output
    assert "hyperbolic on" in res.output
    lines = out.read_text().splitlines()
    assert lines[0] == "alpha1,alpha2,is_hyperbolic"
    assert len(lines) == 1 + 15 * 15
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert set(np.unique(data[:, 2])) <= {0.0, 1.0}


def test_scan_hyperbolicity_swlme_is_everywhere_hyperbolic(runner, tmp_path):
    out = tmp_path / "scan.csv"
    res = runner.invoke(main, ["scan-hyperbolicity", "--model", "swlme",
                               "--n", "2", "--samples", "9", "--out", str(out)])
    assert res.exit_code == 0, _text(res)
    assert "100.0%" in res.output


def test_scan_hyperbolicity_needs_two_moments(runner):
    res = runner.invoke(main, ["scan-hyperbolicity", "--model", "swme1"])
    assert res.exit_code == 1
    assert "N >= 2" in _text(res)
