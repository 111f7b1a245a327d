"""Scenario runner: realizes signals and noise, runs paired chains, writes tables.

Every grid point is run as a paired comparison: the chain under test and its
linear counterpart see the same realization, and both are scored against the
linear chain's output for the clean signal alone.
"""

from __future__ import annotations

import functools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adic import AdicParams, feedback_adic
from .caf import (
    DEFAULT_BAND_EDGE,
    DEFAULT_BAND_TRANSITION,
    DEFAULT_CAF_BETA,
    DEFAULT_CORNER,
    CafConfig,
    caf_process,
    default_caf_config,
    derivative_chain_process,
    leak_coefficient,
)
from .deltasigma import PipelineConfig, pipeline_stages
from .filters import (
    apply,
    apply_fast,
    design_fir_bandpass,
    design_fir_lowpass,
    design_iir,
    design_rrc,
    make_complement,
    warmup_length,
)
from .generators import (
    derive_seed,
    generate_bursts,
    generate_impulse_train,
    generate_poisson_impulses,
    generate_rrc_signal,
    generate_square,
    generate_thermal,
    generate_tone,
)
from .metrics import MetricsReport, pileup_threshold, psd, snr_db
from .robust import UndefinedStatisticError, peakedness_dbg, write_trace_csv
from .scenario import ChainSpec, FilterSpec, NoiseItem, Scenario, with_point
from .signal import InvalidArgumentError, Signal, save_signal

# the pipeline CAF sees shaped quantization noise as well; at beta = 5 it
# occasionally clips a clean bitstream, so the pipeline default is wider
DEFAULT_PIPELINE_CAF_BETA = 6.0
# pairs of (linear variant, nonlinear variant, gain column) per chain kind
CHAIN_PAIRS = {
    "linear": [],
    "caf": [("linear", "caf", "gain_db")],
    "bandstop-caf": [
        ("linear", "caf", "gain_db"),
        ("bandstop_linear", "bandstop_caf", "bandstop_gain_db"),
    ],
    "derivative-caf": [("linear", "derivative", "gain_db")],
    "shared-band-adic": [
        ("linear", "shared_adic", "gain_db"),
        ("wideband_linear", "wideband_caf", "wideband_gain_db"),
    ],
    "deltasigma": [("linear", "caf", "gain_db")],
}


def _design(spec: FilterSpec, rate: float):
    return design_iir(spec.family, spec.kind, spec.order, spec.cutoff, rate)


@functools.lru_cache(maxsize=32)
def _lambda_c(spec_json: str, rate: float) -> float:
    return pileup_threshold(_design(FilterSpec.model_validate_json(spec_json), rate)).lambda_c


def lambda_c(scenario: Scenario) -> float | None:
    """Pileup threshold of the scenario's front end (None without one)."""
    if scenario.frontend is None or scenario.frontend.kind != "lowpass":
        return None
    return _lambda_c(scenario.frontend.model_dump_json(), scenario.rate)


def signal_bandwidth(scenario: Scenario) -> float | None:
    return scenario.chain.bandwidth or scenario.signal.bandwidth


def build_caf(chain: ChainSpec, rate: float, b0: float | None, default_beta: float = DEFAULT_CAF_BETA) -> CafConfig:
    """CAF from a chain spec; unset values come from the defaults relative to ``b0``."""
    if b0 is None and None in (chain.band_edge, chain.transition, chain.corner):
        raise InvalidArgumentError("CAF needs band_edge, transition and corner, or a signal bandwidth for defaults")
    band_edge = chain.band_edge or DEFAULT_BAND_EDGE * b0
    transition = chain.transition or DEFAULT_BAND_TRANSITION * b0
    corner = chain.corner or DEFAULT_CORNER * b0
    beta = default_beta if chain.beta is None else chain.beta
    # express the absolute values relative to a unit bandwidth
    return default_caf_config(
        1.0,
        rate,
        band_edge=band_edge,
        transition=transition,
        corner=corner,
        beta=beta,
        warmup=chain.warmup,
        track_during_clip=chain.track_during_clip,
    )


class _Context:
    """Filters and measurement window shared by the chains of one grid point."""

    def __init__(self, scn: Scenario):
        self.scn = scn
        self.rate = scn.rate
        self.frontend = _design(scn.frontend, scn.rate) if scn.frontend else None
        bb = scn.baseband
        if bb.kind == "rrc":
            self.baseband = [design_rrc(scn.signal.bandwidth, scn.signal.rolloff, bb.span, scn.rate)]
        elif bb.kind == "iir":
            self.baseband = [_design(s, scn.rate) for s in bb.sections]
        else:
            self.baseband = []
        self.lambda_c = lambda_c(scn)

    def fe(self, x: Signal) -> Signal:
        return apply(self.frontend, x) if self.frontend is not None else x

    def bb(self, x: Signal) -> Signal:
        for d in self.baseband:
            x = apply_fast(d, x) if hasattr(d, "taps") else apply(d, x)
        return x

    def start(self, extra: int = 0) -> int:
        if self.scn.settle is not None:
            return int(round(self.scn.settle * self.rate))
        return warmup_length(self.frontend, *self.baseband) + extra

    def baseband_power(self, x: Signal, start: int) -> float:
        y = self.bb(self.fe(x)).samples[start:]
        return float(np.mean(y**2))


# ---------------------------------------------------------------------------
# realization
# ---------------------------------------------------------------------------


def make_clean(scn: Scenario) -> Signal:
    s = scn.signal
    n = int(round(scn.duration * scn.rate))
    if s.kind == "rrc":
        return generate_rrc_signal(s.bandwidth, scn.duration, scn.rate, derive_seed(scn.seed, 0), s.rolloff)
    out = Signal(np.zeros(n), scn.rate)
    for tone in s.tones:
        out = out + generate_tone(tone.period, tone.amplitude, scn.rate, scn.duration, tone.phase)
    return out


def _event_rate(item: NoiseItem, lc: float | None) -> float | None:
    if item.rate_over_lc is not None:
        return item.rate_over_lc * lc
    return item.rate


def _narrowband(scn: Scenario) -> object:
    b0 = signal_bandwidth(scn)
    if b0 is None:
        raise InvalidArgumentError("narrowband shaping needs a signal bandwidth")
    return design_fir_lowpass(b0, scn.rate, 0.5 * b0)


def raw_component(scn: Scenario, item: NoiseItem, seed: int, lc: float | None, unit: bool) -> Signal:
    """Unscaled realization of one component (unit level when ``unit``)."""
    d, fs = scn.duration, scn.rate
    kind = item.kind
    if kind == "thermal-gaussian":
        return generate_thermal(d, 1.0 if unit else item.power, fs, seed)
    if kind == "poisson-impulses":
        amp = 1.0 if unit else item.amp_std
        x = generate_poisson_impulses(d, _event_rate(item, lc), amp, fs, seed)
        if item.pulse_width > 1:
            x = Signal(np.convolve(x.samples, np.ones(item.pulse_width))[: len(x)], fs)
        if item.shaping == "narrowband":
            x = apply_fast(_narrowband(scn), x)
        return x
    if kind == "periodic-gaussian-bursts":
        rate = _event_rate(item, lc)
        period = item.period if rate is None else 1.0 / rate
        x = generate_bursts(d, period, item.duty_cycle, 1.0 if unit else item.power, fs, seed, item.phase)
        if item.shaping == "narrowband":
            x = apply_fast(_narrowband(scn), x)
        return x
    if kind == "adjacent-channel":
        # quadrature-modulated RRC: a Gaussian channel of the signal's shape at ``center``
        b0 = item.bandwidth or signal_bandwidth(scn)
        rolloff = scn.signal.rolloff
        i_part = generate_rrc_signal(b0, d, fs, derive_seed(seed, 0), rolloff).samples
        q_part = generate_rrc_signal(b0, d, fs, derive_seed(seed, 1), rolloff).samples
        ph = 2 * np.pi * item.center * np.arange(i_part.size) / fs
        return Signal(i_part * np.cos(ph) - q_part * np.sin(ph), fs)
    if kind == "impulse-train":
        return generate_impulse_train(item.period, item.area, fs, d, item.phase)
    if kind == "square-wave":
        return generate_square(item.period, item.amplitude, fs, d, item.phase)
    raise InvalidArgumentError(f"unknown noise kind {kind!r}")


def realize_noise(scn: Scenario, ctx: _Context, clean: Signal, point_index: int, start: int):
    """Scaled noise components; baseband-relative levels are measured after fe + baseband."""
    ps = ctx.baseband_power(clean, start) if scn.noise else 0.0
    parts: list[Signal] = []
    thermal_power = None
    deferred = []
    for k, item in enumerate(scn.noise):
        seed = derive_seed(scn.seed, 1, point_index, k)
        relative = item.snr_db is not None or item.isr_db is not None or item.outlier_to_thermal_db is not None
        raw = raw_component(scn, item, seed, ctx.lambda_c, unit=relative or item.psd_db is not None)
        if item.psd_db is not None:
            b0 = item.bandwidth or signal_bandwidth(scn)
            # one-sided signal PSD spans B0, the modulated channel spans 2 B0
            target = 10 ** (item.psd_db / 10) * clean.mean_square() * 2 * b0 / signal_bandwidth(scn)
            parts.append(raw.scaled(math.sqrt(target / raw.mean_square())))
            continue
        if not relative:
            parts.append(raw)
            continue
        if item.snr_db is not None:
            target = ps / 10 ** (item.snr_db / 10)
            thermal_power = target
        elif item.isr_db is not None:
            target = ps * 10 ** (item.isr_db / 10)
        else:
            deferred.append((len(parts), item, raw))
            parts.append(raw)
            continue
        parts.append(_scale_to(ctx, raw, target, start))
    for slot, item, raw in deferred:
        parts[slot] = _scale_to(ctx, raw, thermal_power * 10 ** (item.outlier_to_thermal_db / 10), start)
    return parts


def _scale_to(ctx: _Context, raw: Signal, target: float, start: int) -> Signal:
    p = ctx.baseband_power(raw, start)
    if p <= 0:
        return raw.scaled(0.0)
    return raw.scaled(math.sqrt(target / p))


def _sum(clean: Signal, parts: list[Signal]) -> Signal:
    out = clean
    for p in parts:
        out = out + p
    return out


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------


@dataclass
class VariantOutput:
    output: Signal
    reference: Signal
    stage_input: Signal | None = None
    stage_output: Signal | None = None
    clip_fraction: float | None = None


def _caf_run(cfg: CafConfig, x: Signal):
    y, taps = caf_process(cfg, x, taps=True)
    return y, float(np.mean(taps.clipped))


def run_chains(scn: Scenario, ctx: _Context, clean: Signal, noisy: Signal, wide_noisy: Signal | None = None):
    chain = scn.chain
    kind = chain.kind
    b0 = signal_bandwidth(scn)
    out: dict[str, VariantOutput] = {}
    xc, xn = ctx.fe(clean), ctx.fe(noisy)
    if kind == "linear":
        out["linear"] = VariantOutput(ctx.bb(xn), ctx.bb(xc))
        return out
    if kind in ("caf", "bandstop-caf"):
        cfg = build_caf(chain, scn.rate, b0)
        D = cfg.delay
        out["linear"] = VariantOutput(ctx.bb(xn.delayed(D)), ctx.bb(xc.delayed(D)))
        y, clip = _caf_run(cfg, xn)
        out["caf"] = VariantOutput(ctx.bb(y), out["linear"].reference, xn, y, clip)
        if kind == "bandstop-caf":
            lo, hi = chain.bandstop
            tr = chain.bandstop_transition or 0.5 * (hi - lo) / 2
            bs = make_complement(design_fir_bandpass(lo, hi, scn.rate, tr, chain.bandstop_db)).complement
            bn, bc = apply_fast(bs, xn), apply_fast(bs, xc)
            ref = ctx.bb(bc.delayed(D))
            out["bandstop_linear"] = VariantOutput(ctx.bb(bn.delayed(D)), ref)
            y, clip = _caf_run(cfg, bn)
            out["bandstop_caf"] = VariantOutput(ctx.bb(y), ref, bn, y, clip)
        return out
    if kind == "derivative-caf":
        if chain.stage == "caf":
            stage = build_caf(chain, scn.rate, b0)
            D = stage.delay
        else:
            if chain.corner is None:
                raise InvalidArgumentError("derivative chain with a bare ADiC needs a corner")
            beta = DEFAULT_CAF_BETA if chain.beta is None else chain.beta
            stage = AdicParams(tau=1 / (2 * math.pi * chain.corner), beta=beta,
                               warmup=chain.warmup or 1024, track_during_clip=chain.track_during_clip)
            D = 0
        f_leak = chain.leak or 0.01 * chain.reference_freq
        rho = leak_coefficient(f_leak, scn.rate)
        designs = ctx.baseband or None

        def run(stage_, x):
            return derivative_chain_process(stage_, x, rho, chain.reference_freq, designs)

        ref = run(None, xc.delayed(D))
        out["linear"] = VariantOutput(run(None, xn.delayed(D)), ref)
        out["derivative"] = VariantOutput(run(stage, xn), ref)
        return out
    if kind == "shared-band-adic":
        beta = DEFAULT_CAF_BETA if chain.beta is None else chain.beta
        params = AdicParams(tau=1 / (2 * math.pi * chain.corner), beta=beta,
                            warmup=chain.warmup or 4096, track_during_clip=chain.track_during_clip)
        ref = ctx.bb(xc)
        out["linear"] = VariantOutput(ctx.bb(xn), ref)
        y, tr = feedback_adic(xn, params, trace=True)
        out["shared_adic"] = VariantOutput(ctx.bb(y), ref, xn, y, float(np.mean(tr.clipped)))
        if wide_noisy is not None:
            cfg = default_caf_config(b0, scn.rate)
            D = cfg.delay
            xw = ctx.fe(wide_noisy)
            wref = ctx.bb(xc.delayed(D))
            out["wideband_linear"] = VariantOutput(ctx.bb(xw.delayed(D)), wref)
            y, clip = _caf_run(cfg, xw)
            out["wideband_caf"] = VariantOutput(ctx.bb(y), wref, xw, y, clip)
        return out
    raise InvalidArgumentError(f"chain kind {kind!r} is not handled by the baseband runner")


# ---------------------------------------------------------------------------
# grid points
# ---------------------------------------------------------------------------


@dataclass
class PointResult:
    index: int
    seed: int
    params: dict
    reports: dict[str, MetricsReport]
    gains: dict[str, float]
    extra: dict = field(default_factory=dict)
    traces: dict[str, np.ndarray] | None = None
    trace_rate: float | None = None
    psd: dict[str, np.ndarray] | None = None

    def row(self) -> dict:
        row = {"point": self.index, "seed": self.seed}
        row.update(self.params)
        for name, rep in self.reports.items():
            row[f"{name}_snr_db"] = rep.baseband_snr_db
            row[f"{name}_snr_capped"] = rep.snr_capped
            row[f"{name}_capacity"] = rep.capacity_bits_per_s_per_hz
            row[f"{name}_peakedness_dbg"] = rep.peakedness_dbg
            row[f"{name}_clip_fraction"] = rep.clip_fraction
        row.update(self.gains)
        row.update(self.extra)
        return row


def _report(v: VariantOutput, start: int) -> MetricsReport:
    ref = v.reference.samples[start:]
    out = v.output.samples[start:]
    value, capped = snr_db(ref, out)
    try:
        k = peakedness_dbg(out - ref)
    except UndefinedStatisticError:
        k = None
    return MetricsReport.from_snr(value, capped, peakedness_dbg=k, clip_fraction=v.clip_fraction)


def _gains(kind: str, reports: dict[str, MetricsReport]) -> dict[str, float]:
    gains = {}
    for lin, nonlin, col in CHAIN_PAIRS[kind]:
        if lin in reports and nonlin in reports:
            gains[col] = reports[nonlin].baseband_snr_db - reports[lin].baseband_snr_db
    return gains


def run_point(scenario: Scenario, index: int, point: dict) -> PointResult:
    scn = with_point(scenario, point)
    if scn.chain.kind == "deltasigma":
        return _run_deltasigma_point(scn, index, point)
    ctx = _Context(scn)
    clean = make_clean(scn)
    # the measurement window must clear the warm-up of every chain
    start = ctx.start(_chain_warmup(scn))
    parts = realize_noise(scn, ctx, clean, index, start)
    noisy = _sum(clean, parts)
    wide_noisy = None
    if scn.chain.kind == "shared-band-adic":
        wide_items = [n.model_copy(update={"shaping": "wideband"}) for n in scn.noise]
        wide_scn = scn.model_copy(update={"noise": wide_items})
        wide_noisy = _sum(clean, realize_noise(wide_scn, ctx, clean, index, start))
    outputs = run_chains(scn, ctx, clean, noisy, wide_noisy)
    reports = {name: _report(v, start) for name, v in outputs.items()}
    res = PointResult(index, derive_seed(scn.seed, 1, index), dict(point), reports, _gains(scn.chain.kind, reports))
    if ctx.lambda_c is not None:
        res.extra["lambda_c"] = ctx.lambda_c
    if scn.outputs.traces:
        res.traces, res.trace_rate = _traces(scn, clean, noisy, outputs, start), scn.rate
    if scn.outputs.psd:
        res.psd = _psds(scn, outputs, start)
    return res


def _chain_warmup(scn: Scenario) -> int:
    """Samples of chain warm-up (delay plus ADiC learning) beyond the linear filters."""
    chain = scn.chain
    b0 = signal_bandwidth(scn)
    if chain.kind == "linear":
        return 0
    if chain.kind == "shared-band-adic":
        warm = chain.warmup or 4096
        if b0 is not None:
            cfg = default_caf_config(b0, scn.rate)
            warm = max(warm, cfg.delay + cfg.adic.warmup)
        return warm
    if chain.kind == "derivative-caf" and chain.stage == "adic":
        return chain.warmup or 1024
    cfg = build_caf(chain, scn.rate, b0)
    extra = 2 * cfg.delay + cfg.adic.warmup
    if chain.kind == "bandstop-caf":
        lo, hi = chain.bandstop
        tr = chain.bandstop_transition or 0.5 * (hi - lo) / 2
        extra += 2 * design_fir_bandpass(lo, hi, scn.rate, tr, chain.bandstop_db).group_delay
    return extra


def _traces(scn: Scenario, clean: Signal, noisy: Signal, outputs: dict[str, VariantOutput], start: int):
    n = len(clean)
    stop = n if scn.outputs.trace_seconds is None else min(n, start + int(round(scn.outputs.trace_seconds * scn.rate)))
    sl = slice(start, stop)
    cols = {"clean": clean.samples[sl], "input": noisy.samples[sl]}
    first = next(iter(outputs.values()))
    cols["reference"] = first.reference.samples[sl]
    for name, v in outputs.items():
        cols[name] = v.output.samples[sl]
    return cols


def _psds(scn: Scenario, outputs: dict[str, VariantOutput], start: int):
    seg = scn.outputs.psd_segment
    cols = {}
    for name, v in outputs.items():
        if v.stage_input is None:
            continue
        f, p_in = psd(Signal(v.stage_input.samples[start:], scn.rate), seg)
        _, p_out = psd(Signal(v.stage_output.samples[start:], scn.rate), seg)
        cols["f"] = f
        cols[f"{name}_stage_input"] = p_in
        cols[f"{name}_stage_output"] = p_out
    return cols or None


# ---------------------------------------------------------------------------
# delta-sigma pipeline
# ---------------------------------------------------------------------------


def pipeline_config(scn: Scenario) -> PipelineConfig:
    chain = scn.chain
    caf = None
    if chain.caf:
        caf = build_caf(chain, scn.rate, signal_bandwidth(scn), default_beta=DEFAULT_PIPELINE_CAF_BETA)
    return PipelineConfig(
        scn.rate,
        chain.output_rate,
        chain.wideband_cutoff,
        caf=caf,
        clip_level=chain.clip_level,
        wideband_family=chain.wideband_family,
    )


def _run_deltasigma_point(scn: Scenario, index: int, point: dict) -> PointResult:
    cfg = pipeline_config(scn)
    clean = make_clean(scn)
    parts = []
    for k, item in enumerate(scn.noise):
        if item.power is None and item.amp_std is None and item.amplitude is None and item.area is None:
            raise InvalidArgumentError("delta-sigma scenarios take absolute noise levels only")
        parts.append(raw_component(scn, item, derive_seed(scn.seed, 1, index, k), None, unit=False))
    noisy = _sum(clean, parts)
    ref_stages = pipeline_stages(cfg, clean, caf_enabled=False)
    ref = ref_stages["output"]
    if scn.settle is not None:
        start = int(round(scn.settle * cfg.output_rate))
    else:
        start = int(math.ceil(4 * cfg.delay / cfg.factor)) + 1
        if cfg.caf is not None:
            start += int(math.ceil((cfg.caf.adic.warmup + cfg.caf.delay) / cfg.factor))
    lin_stages = pipeline_stages(cfg, noisy, caf_enabled=False)
    outputs = {"linear": VariantOutput(lin_stages["output"], ref)}
    extra = {"decimation_factor": cfg.factor}
    if cfg.caf is not None:
        on = pipeline_stages(cfg, noisy, caf_enabled=True)
        clipped_on = caf_process(cfg.caf, on["wideband"], taps=True)[1].clipped
        outputs["caf"] = VariantOutput(on["output"], ref, clip_fraction=float(np.mean(clipped_on)))
    skip = start * cfg.factor
    for stage in ("wideband", "output"):
        s = lin_stages[stage].samples
        s = s[start:] if stage == "output" else s[skip:]
        try:
            extra[f"{stage}_peakedness_dbg"] = peakedness_dbg(s)
        except UndefinedStatisticError:
            extra[f"{stage}_peakedness_dbg"] = None
    try:
        extra["input_peakedness_dbg"] = peakedness_dbg(noisy.samples[skip:])
    except UndefinedStatisticError:
        extra["input_peakedness_dbg"] = None
    reports = {name: _report(v, start) for name, v in outputs.items()}
    res = PointResult(index, derive_seed(scn.seed, 1, index), dict(point), reports, _gains("deltasigma", reports), extra)
    if scn.outputs.traces:
        n = len(ref)
        stop = n if scn.outputs.trace_seconds is None else min(n, start + int(round(scn.outputs.trace_seconds * cfg.output_rate)))
        sl = slice(start, stop)
        res.traces = {"reference": ref.samples[sl]}
        for name, v in outputs.items():
            res.traces[name] = v.output.samples[sl]
        res.trace_rate = cfg.output_rate
    return res


# ---------------------------------------------------------------------------
# sweeps and files
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    scenario: Scenario
    points: list[PointResult]

    def rows(self) -> list[dict]:
        rows = [p.row() for p in self.points]
        names: list[str] = []
        for r in rows:
            for k in r:
                if k not in names:
                    names.append(k)
        return [{k: r.get(k) for k in names} for r in rows]

    def to_json(self) -> str:
        doc = {
            "scenario": self.scenario.name,
            "schema_version": self.scenario.schema_version,
            "seed": self.scenario.seed,
            "points": [
                {
                    "point": p.index,
                    "seed": p.seed,
                    "params": p.params,
                    "reports": {k: r.to_dict() for k, r in p.reports.items()},
                    "gains": p.gains,
                    "extra": p.extra,
                }
                for p in self.points
            ],
        }
        return json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n"


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table(path: Path, rows: list[dict]) -> None:
    names = list(rows[0])
    lines = [",".join(names)]
    lines += [",".join(_cell(r[k]) for k in names) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def _point_job(args):
    scenario, index, point = args
    return run_point(scenario, index, point)


def run_scenario(
    scenario: Scenario,
    out_dir=None,
    seed: int | None = None,
    jobs: int = 1,
    fmt: str = "csv",
    plots: bool = False,
) -> SweepResult:
    """Run every grid point and (optionally) write the artifact files.

    Files under ``out_dir``: ``results.csv`` (one row per grid point),
    ``results.json``, ``scenario.yaml`` (the resolved scenario) and, when
    enabled, per-point ``traces-NNN`` and ``psd-NNN.csv`` files and SVG plots.
    """
    if seed is not None:
        scenario = scenario.model_copy(update={"seed": seed})
    grid = scenario.grid()
    jobs_in = [(scenario, i, p) for i, p in enumerate(grid)]
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_point_job, jobs_in))
    else:
        points = [_point_job(j) for j in jobs_in]
    result = SweepResult(scenario, points)
    if out_dir is not None:
        write_outputs(result, Path(out_dir), fmt, plots)
    return result


def write_outputs(result: SweepResult, out_dir: Path, fmt: str = "csv", plots: bool = False) -> None:
    if fmt not in ("csv", "bin"):
        raise InvalidArgumentError(f"unknown output format {fmt!r}")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_table(out_dir / "results.csv", result.rows())
    (out_dir / "results.json").write_text(result.to_json())
    (out_dir / "scenario.yaml").write_text(result.scenario.to_yaml())
    for p in result.points:
        if p.traces is not None:
            if fmt == "csv":
                write_trace_csv(out_dir / f"traces-{p.index:03d}.csv", p.traces, p.trace_rate)
            else:
                for name, col in p.traces.items():
                    save_signal(Signal(col, p.trace_rate), out_dir / f"traces-{p.index:03d}-{name}.bin", "bin")
        if p.psd is not None:
            write_trace_csv(out_dir / f"psd-{p.index:03d}.csv", p.psd)
    if plots:
        from .plots import plot_result

        plot_result(result, out_dir)
