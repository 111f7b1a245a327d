import csv

import pytest
from click.testing import CliRunner

import oracles

from outliernoise.cli import main
from outliernoise.signal import load_signal


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)


def test_generate_and_filter(runner, tmp_path):
    sig = tmp_path / "x.csv"
    r = invoke(runner, "generate", "thermal", "--duration", 0.25, "--rate", 64000, "--seed", 3, "-o", sig)
    assert r.exit_code == 0
    assert len(load_signal(sig)) == 16000
    for kind, extra in [
        ("iir", ["--cutoff", 1000]),
        ("fir", ["--cutoff", 1000, "--transition", 500]),
        ("rrc", ["--bandwidth", 1000]),
        ("caf", ["--bandwidth", 1000, "--corner", 4000]),
        ("adic", ["--corner", 4000]),
        ("basic-adic", []),
    ]:
        out = tmp_path / f"{kind}.bin"
        r = invoke(runner, "filter", kind, sig, "-o", out, "--format", "bin", *extra)
        assert r.exit_code == 0, r.output
        assert len(load_signal(out)) == 16000


def test_filter_trace(runner, tmp_path):
    sig = tmp_path / "x.csv"
    invoke(runner, "generate", "poisson", "--duration", 0.1, "--rate", 64000, "--lam", 100, "-o", sig)
    tr = tmp_path / "trace.csv"
    r = invoke(runner, "filter", "adic", sig, "-o", tmp_path / "y.csv", "--corner", 4000, "--trace", tr)
    assert r.exit_code == 0
    header = tr.read_text().splitlines()[0].split(",")
    assert header[0] == "t" and "clipped" in header
    r = invoke(runner, "filter", "iir", sig, "-o", tmp_path / "z.csv", "--cutoff", 1000, "--trace", tr)
    assert r.exit_code == 1
    assert r.output.startswith("error:")


@pytest.mark.parametrize(
    "args",
    [
        ["generate", "bursts", "--duration", "1", "--rate", "1000", "--period", "0.1", "--duty", "1.5", "-o", "b.csv"],
        ["generate", "poisson", "--duration", "1", "--rate", "1000", "-o", "p.csv"],
        ["generate", "thermal", "--duration", "-1", "--rate", "1000", "-o", "t.csv"],
        ["run", "no-such-scenario"],
        ["sweep", "toy1", "--axis", "colour=1,2"],
    ],
)
def test_errors_exit_1(runner, tmp_path, args):
    with runner.isolated_filesystem(temp_dir=tmp_path):
        r = runner.invoke(main, args)
    assert r.exit_code == 1
    assert "error:" in r.output


def test_list_and_describe(runner):
    r = invoke(runner, "list")
    assert r.exit_code == 0
    assert "poisson-sweep" in r.output and "toy1" in r.output
    r = invoke(runner, "describe", "poisson-sweep")
    assert r.exit_code == 0
    line = next(x for x in r.output.splitlines() if "lambda_c" in x)
    assert float(line.split(":")[1].split()[0]) == pytest.approx(10000 * oracles.BESSEL2_LAMBDA_C_OVER_CUTOFF, abs=0.5)
    assert "# grid points:" in r.output


def test_validate(runner, tmp_path):
    assert invoke(runner, "validate", "toy1", "toy2").exit_code == 0
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\nname: bad\nduration: 1\nrate: 1000\nsignal: {kind: none}\n"
                   "noise:\n  - {kind: bursts, period: 0.1, duty_cycle: 1.5, power: 1.0}\n")
    r = runner.invoke(main, ["validate", str(bad)])
    assert r.exit_code == 1
    assert "noise.0" in r.output


def test_run_and_sweep(runner, tmp_path):
    r = invoke(runner, "run", "toy1", "--out-dir", tmp_path / "a")
    assert r.exit_code == 0
    rows = list(csv.DictReader(open(tmp_path / "a" / "results.csv")))
    assert len(rows) == 2
    r = invoke(runner, "sweep", "toy1", "--axis", "phase=0.25", "--out-dir", tmp_path / "b")
    assert r.exit_code == 0
    rows = list(csv.DictReader(open(tmp_path / "b" / "results.csv")))
    assert [r_["phase"] for r_ in rows] == ["0.25"]


def test_plots(runner, tmp_path):
    pytest.importorskip("matplotlib")
    r = invoke(runner, "run", "toy1", "--out-dir", tmp_path, "--plots")
    assert r.exit_code == 0
    assert (tmp_path / "gain.svg").exists()
