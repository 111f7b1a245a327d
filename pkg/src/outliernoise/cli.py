"""Command-line entry point: ``outliernoise <command> ...``."""

from __future__ import annotations

import math
import sys

import click
import yaml

from . import generators as gen
from .adic import AdicParams, basic_adic, feedback_adic
from .caf import caf_process, default_caf_config
from .filters import DesignFailureError, apply, apply_fast, design_fir_lowpass, design_iir, design_rrc
from .harness import lambda_c, run_scenario
from .robust import UndefinedStatisticError, write_trace_csv
from .scenario import SWEEP_AXES, ScenarioError, bundled_names, load_bundled, load_scenario, scenario_from_dict
from .signal import InvalidArgumentError, load_signal, save_signal

_EXPECTED = (InvalidArgumentError, ScenarioError, DesignFailureError, UndefinedStatisticError, OSError, ValueError)


class _Group(click.Group):
    """Turns library errors into a one-line diagnostic and exit status 1."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except _EXPECTED as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)


_format = click.option("--format", "fmt", type=click.Choice(["csv", "bin"]), default="csv", show_default=True,
                       help="Output file format.")


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def main():
    """Outlier-noise mitigation toolkit: generators, filters and scenario runs."""


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

GENERATORS = ("thermal", "poisson", "bursts", "tone", "square", "triangle", "impulse-train", "rrc")


@main.command()
@click.argument("kind", type=click.Choice(GENERATORS))
@click.option("--duration", type=float, required=True, help="Seconds.")
@click.option("--rate", type=float, required=True, help="Sample rate, Hz.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--power", type=float, default=1.0, show_default=True,
              help="Mean square (thermal, in-burst power for bursts).")
@click.option("--lam", type=float, help="Poisson event rate, Hz.")
@click.option("--amp-std", type=float, default=1.0, show_default=True, help="Poisson impulse area std.")
@click.option("--period", type=float, help="Period, s (periodic waveforms and bursts).")
@click.option("--duty", type=float, help="Burst duty cycle in (0, 1].")
@click.option("--amplitude", type=float, default=1.0, show_default=True,
              help="Peak amplitude (impulse area for impulse-train).")
@click.option("--phase", type=float, default=0.0, show_default=True,
              help="Phase in cycles (seconds for bursts).")
@click.option("--bandwidth", type=float, help="RRC bandwidth B0, Hz.")
@click.option("--rolloff", type=float, default=gen.DEFAULT_RRC_ROLLOFF, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
@_format
def generate(kind, duration, rate, seed, power, lam, amp_std, period, duty, amplitude, phase, bandwidth, rolloff,
             output, fmt):
    """Write a generated signal to OUTPUT."""

    def need(name, value):
        if value is None:
            raise InvalidArgumentError(f"{kind} needs --{name}")
        return value

    if kind == "thermal":
        sig = gen.generate_thermal(duration, power, rate, seed)
    elif kind == "poisson":
        sig = gen.generate_poisson_impulses(duration, need("lam", lam), amp_std, rate, seed)
    elif kind == "bursts":
        sig = gen.generate_bursts(duration, need("period", period), need("duty", duty), power, rate, seed, phase)
    elif kind == "rrc":
        sig = gen.generate_rrc_signal(need("bandwidth", bandwidth), duration, rate, seed, rolloff)
    else:
        fn = {
            "tone": gen.generate_tone,
            "square": gen.generate_square,
            "triangle": gen.generate_triangle,
            "impulse-train": gen.generate_impulse_train,
        }[kind]
        sig = fn(need("period", period), amplitude, rate, duration, phase)
    save_signal(sig, output, fmt)
    click.echo(f"wrote {len(sig)} samples to {output}")


# ---------------------------------------------------------------------------
# filter
# ---------------------------------------------------------------------------

FILTERS = ("iir", "fir", "rrc", "caf", "adic", "basic-adic")


@main.command(name="filter")
@click.argument("kind", type=click.Choice(FILTERS))
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
@click.option("--family", type=click.Choice(["butterworth", "bessel"]), default="butterworth", show_default=True)
@click.option("--response", type=click.Choice(["lowpass", "highpass", "bandpass", "bandstop"]), default="lowpass",
              show_default=True, help="IIR response type.")
@click.option("--order", type=int, default=2, show_default=True)
@click.option("--cutoff", type=float, multiple=True, help="Cutoff(s), Hz; repeat for band filters.")
@click.option("--transition", type=float, help="FIR transition width, Hz.")
@click.option("--bandwidth", type=float, help="Signal bandwidth B0, Hz (rrc, caf).")
@click.option("--rolloff", type=float, default=gen.DEFAULT_RRC_ROLLOFF, show_default=True)
@click.option("--span", type=int, default=gen.DEFAULT_RRC_SPAN, show_default=True)
@click.option("--beta", type=float, help="Fence scaling (ADiC/CAF).")
@click.option("--corner", type=float, help="ADiC lowpass corner 1/(2 pi tau), Hz.")
@click.option("--warmup", type=int, help="ADiC warm-up samples.")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False),
              help="Write per-sample diagnostics (nonlinear filters) as CSV.")
@_format
def filter_cmd(kind, input_path, output, family, response, order, cutoff, transition, bandwidth, rolloff, span, beta,
               corner, warmup, trace_path, fmt):
    """Filter the signal in INPUT_PATH and write the result to OUTPUT."""
    x = load_signal(input_path)
    rate = x.sample_rate
    trace = None
    extra = {k: v for k, v in (("beta", beta), ("warmup", warmup)) if v is not None}
    if kind == "iir":
        if not cutoff:
            raise InvalidArgumentError("iir needs --cutoff")
        y = apply(design_iir(family, response, order, cutoff if len(cutoff) > 1 else cutoff[0], rate), x)
    elif kind == "fir":
        if len(cutoff) != 1:
            raise InvalidArgumentError("fir needs exactly one --cutoff")
        y = apply_fast(design_fir_lowpass(cutoff[0], rate, transition), x)
    elif kind == "rrc":
        if bandwidth is None:
            raise InvalidArgumentError("rrc needs --bandwidth")
        y = apply_fast(design_rrc(bandwidth, rolloff, span, rate), x)
    elif kind == "caf":
        if bandwidth is None:
            raise InvalidArgumentError("caf needs --bandwidth")
        if corner is not None:
            extra["corner"] = corner / bandwidth
        cfg = default_caf_config(bandwidth, rate, **extra)
        y, taps = caf_process(cfg, x, taps=True)
        trace = taps.as_columns()
    elif kind == "adic":
        if corner is None:
            raise InvalidArgumentError("adic needs --corner")
        params = AdicParams(tau=1.0 / (2 * math.pi * corner), **extra)
        y, tr = feedback_adic(x, params, trace=True)
        trace = {"x": tr.x, "u": tr.u, "alpha_minus": tr.alpha_minus, "alpha_plus": tr.alpha_plus,
                 "chi": tr.chi, "clipped": tr.clipped.astype(int)}
    else:
        y, tr = basic_adic(x, trace=True, **extra)
        trace = {k: (v.astype(int) if v.dtype == bool else v) for k, v in tr.items()}
    if trace_path:
        if trace is None:
            raise InvalidArgumentError("--trace is only available for caf, adic and basic-adic")
        write_trace_csv(trace_path, trace, rate)
    save_signal(y, output, fmt)
    click.echo(f"wrote {len(y)} samples to {output}")


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


def _summary(result) -> None:
    for row in result.rows():
        gains = {k: v for k, v in row.items() if k.endswith("gain_db")}
        params = {k: row[k] for k in result.points[0].params}
        text = " ".join(f"{k}={v}" for k, v in params.items())
        text += " " + " ".join(f"{k}={v:.2f}" for k, v in gains.items())
        click.echo(f"  [{row['point']:3d}] {text.strip()}")


_run_options = [
    click.option("--seed", type=int, help="Override the scenario seed."),
    click.option("--out-dir", type=click.Path(file_okay=False), help="Directory for result files."),
    _format,
    click.option("--jobs", type=int, default=1, show_default=True, help="Parallel grid points."),
    click.option("--plots/--no-plots", default=False, help="Also render SVG figures."),
]


def _with_run_options(fn):
    for opt in reversed(_run_options):
        fn = opt(fn)
    return fn


@main.command()
@click.argument("scenario")
@_with_run_options
def run(scenario, seed, out_dir, fmt, jobs, plots):
    """Run SCENARIO (a file path or a bundled name)."""
    scn = load_scenario(scenario)
    result = run_scenario(scn, out_dir, seed=seed, jobs=jobs, fmt=fmt, plots=plots)
    click.echo(f"{scn.name}: {len(result.points)} point(s)")
    _summary(result)
    if out_dir:
        click.echo(f"results in {out_dir}")


def _parse_axis(text: str) -> tuple[str, list]:
    name, sep, values = text.partition("=")
    name = name.strip().replace("-", "_")
    if not sep or name not in SWEEP_AXES:
        raise InvalidArgumentError(f"--axis expects NAME=v1,v2,... with NAME in {', '.join(SWEEP_AXES)}")
    items = [v.strip() for v in values.split(",") if v.strip()]
    if name == "outliers":
        return name, [yaml.safe_load(v) for v in items]
    return name, [float(v) for v in items]


@main.command()
@click.argument("scenario")
@click.option("--axis", "axes", multiple=True, metavar="NAME=V1,V2,...",
              help="Replace or add a sweep axis; repeatable.")
@click.option("--only", is_flag=True, help="Drop the scenario's own axes that are not given with --axis.")
@_with_run_options
def sweep(scenario, axes, only, seed, out_dir, fmt, jobs, plots):
    """Run SCENARIO with sweep axes overridden from the command line."""
    scn = load_scenario(scenario)
    doc = scn.model_dump()
    grid = {} if only else {k: v for k, v in doc["sweep"].items() if v is not None}
    for text in axes:
        name, values = _parse_axis(text)
        grid[name] = values
    doc["sweep"] = grid
    scn = scenario_from_dict(doc, scenario)
    result = run_scenario(scn, out_dir, seed=seed, jobs=jobs, fmt=fmt, plots=plots)
    click.echo(f"{scn.name}: {len(result.points)} point(s)")
    _summary(result)


@main.command()
@click.argument("scenarios", nargs=-1, required=True)
def validate(scenarios):
    """Check scenario files (or bundled names) without running them."""
    failed = 0
    for item in scenarios:
        try:
            scn = load_scenario(item)
            scn.grid()
        except ScenarioError as exc:
            failed += 1
            click.echo(f"{item}: invalid", err=True)
            click.echo(str(exc), err=True)
        else:
            click.echo(f"{item}: ok ({len(scn.grid())} point(s))")
    if failed:
        sys.exit(1)


@main.command(name="list")
def list_cmd():
    """List bundled scenarios."""
    for name in bundled_names():
        scn = load_bundled(name)
        first = scn.description.strip().split(". ")[0].rstrip(".")
        click.echo(f"{name:20s} {first}")


@main.command()
@click.argument("scenario")
def describe(scenario):
    """Print a scenario with its derived quantities."""
    scn = load_scenario(scenario)
    click.echo(scn.to_yaml().rstrip())
    click.echo("# derived")
    click.echo(f"# grid points: {len(scn.grid())}")
    lc = lambda_c(scn)
    if lc is not None:
        click.echo(f"# pileup threshold lambda_c: {lc:.1f} Hz")
    n = int(round(scn.duration * scn.rate))
    click.echo(f"# samples per point: {n}")


if __name__ == "__main__":  # pragma: no cover
    main()
