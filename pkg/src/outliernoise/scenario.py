"""Scenario files: a versioned, YAML-serializable description of one experiment.

A scenario names a clean signal, a list of additive noise components, an
optional analog-style front end, a baseband (matched) filter, the processing
chain under test and the sweep axes. Every numeric level that refers to
"baseband power" is measured on the realization after the front end and the
baseband filter, over the measurement window.
"""

from __future__ import annotations

import itertools
from importlib import resources
from pathlib import Path
from typing import Annotated, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

SCHEMA_VERSION = 1

PositiveFloat = Annotated[float, Field(gt=0)]
NonNegativeFloat = Annotated[float, Field(ge=0)]
DutyCycle = Annotated[float, Field(gt=0, le=1)]


class ScenarioError(ValueError):
    """Invalid scenario; ``errors`` lists ``(field path, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]], source: str | None = None):
        self.errors = errors
        self.source = source
        where = f"{source}: " if source else ""
        super().__init__(where + "; ".join(f"{loc}: {msg}" for loc, msg in errors))


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ToneSpec(_Model):
    period: PositiveFloat
    amplitude: float = 1.0
    phase: float = 0.0  # in cycles


class SignalSpec(_Model):
    kind: Literal["rrc", "tones", "none"]
    bandwidth: PositiveFloat | None = None
    rolloff: float = Field(0.25, gt=0, le=1)
    tones: list[ToneSpec] = []

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "rrc" and self.bandwidth is None:
            raise ValueError("rrc signal needs a bandwidth")
        if self.kind == "tones" and not self.tones:
            raise ValueError("tones signal needs at least one tone")
        return self


NoiseKind = Literal[
    "thermal-gaussian",
    "poisson-impulses",
    "periodic-gaussian-bursts",
    "adjacent-channel",
    "impulse-train",
    "square-wave",
]
OUTLIER_KINDS = ("poisson-impulses", "periodic-gaussian-bursts")
LEVEL_FIELDS = ("power", "amp_std", "amplitude", "area", "snr_db", "isr_db", "outlier_to_thermal_db", "psd_db")
_ALLOWED_LEVELS = {
    "thermal-gaussian": {"power", "snr_db"},
    "poisson-impulses": {"amp_std", "isr_db", "outlier_to_thermal_db"},
    "periodic-gaussian-bursts": {"power", "isr_db", "outlier_to_thermal_db"},
    "adjacent-channel": {"psd_db"},
    "impulse-train": {"area"},
    "square-wave": {"amplitude"},
}


class NoiseItem(_Model):
    """One additive component. Exactly one level field must be set.

    Levels: ``power`` (raw mean-square), ``amp_std`` (impulse area std),
    ``amplitude``/``area`` (deterministic shapes), ``snr_db`` (signal over
    this component, baseband), ``isr_db`` (this over signal, baseband),
    ``outlier_to_thermal_db`` (this over the thermal component, baseband),
    ``psd_db`` (adjacent channel PSD over signal PSD).
    """

    kind: NoiseKind
    power: NonNegativeFloat | None = None
    amp_std: NonNegativeFloat | None = None
    amplitude: float | None = None
    area: float | None = None
    snr_db: float | None = None
    isr_db: float | None = None
    outlier_to_thermal_db: float | None = None
    psd_db: float | None = None
    rate: PositiveFloat | None = None  # Poisson lambda or burst repetition rate, Hz
    rate_over_lc: PositiveFloat | None = None  # the same, in units of the pileup threshold
    period: PositiveFloat | None = None
    duty_cycle: DutyCycle | None = None
    phase: float = 0.0
    center: PositiveFloat | None = None
    bandwidth: PositiveFloat | None = None
    shaping: Literal["wideband", "narrowband"] = "wideband"
    pulse_width: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check(self):
        levels = [f for f in LEVEL_FIELDS if getattr(self, f) is not None]
        if len(levels) != 1:
            raise ValueError(f"exactly one level field must be set, got {levels or 'none'}")
        if levels[0] not in _ALLOWED_LEVELS[self.kind]:
            raise ValueError(f"{self.kind} does not accept level {levels[0]!r}")
        if self.kind in OUTLIER_KINDS:
            has_rate = self.rate is not None or self.rate_over_lc is not None
            if self.kind == "poisson-impulses" and not has_rate:
                raise ValueError("poisson impulses need rate or rate_over_lc")
            if self.kind == "periodic-gaussian-bursts":
                if not has_rate and self.period is None:
                    raise ValueError("bursts need a period, rate or rate_over_lc")
                if self.duty_cycle is None:
                    raise ValueError("bursts need a duty_cycle")
        if self.kind in ("impulse-train", "square-wave") and self.period is None:
            raise ValueError(f"{self.kind} needs a period")
        if self.kind == "adjacent-channel" and self.center is None:
            raise ValueError("adjacent channel needs a center frequency")
        if self.rate is not None and self.rate_over_lc is not None:
            raise ValueError("set at most one of rate and rate_over_lc")
        return self


class FilterSpec(_Model):
    family: Literal["butterworth", "bessel"]
    kind: Literal["lowpass", "highpass", "bandpass", "bandstop"] = "lowpass"
    order: int = Field(ge=1, le=8)
    cutoff: PositiveFloat | list[PositiveFloat]


class BasebandSpec(_Model):
    kind: Literal["rrc", "iir", "none"]
    span: int = Field(32, ge=8)
    sections: list[FilterSpec] = []

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "iir" and not self.sections:
            raise ValueError("iir baseband needs at least one section")
        return self


ChainKind = Literal["linear", "caf", "derivative-caf", "bandstop-caf", "shared-band-adic", "deltasigma"]


class ChainSpec(_Model):
    """Chain under test. Frequencies are in Hz; unset CAF parameters fall back
    to the frozen defaults relative to ``bandwidth`` (or the signal's)."""

    kind: ChainKind
    bandwidth: PositiveFloat | None = None
    band_edge: PositiveFloat | None = None
    transition: PositiveFloat | None = None
    corner: PositiveFloat | None = None
    beta: NonNegativeFloat | None = None
    warmup: int | None = Field(None, ge=1)
    track_during_clip: bool = True
    stage: Literal["caf", "adic"] = "caf"
    leak: PositiveFloat | None = None
    reference_freq: PositiveFloat | None = None
    bandstop: tuple[PositiveFloat, PositiveFloat] | None = None
    bandstop_transition: PositiveFloat | None = None
    bandstop_db: PositiveFloat = 80.0
    output_rate: PositiveFloat | None = None
    wideband_cutoff: PositiveFloat | None = None
    wideband_family: Literal["bessel-codesign", "butterworth"] = "bessel-codesign"
    clip_level: float = Field(0.8, gt=0, le=1)
    caf: bool = True

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "bandstop-caf":
            if self.bandstop is None:
                raise ValueError("bandstop-caf needs bandstop = [f_lo, f_hi]")
            if not self.bandstop[0] < self.bandstop[1]:
                raise ValueError("bandstop edges must be increasing")
        if self.kind == "derivative-caf" and self.reference_freq is None:
            raise ValueError("derivative-caf needs reference_freq (the in-band tone it calibrates to)")
        if self.kind == "deltasigma" and (self.output_rate is None or self.wideband_cutoff is None):
            raise ValueError("deltasigma needs output_rate and wideband_cutoff")
        if self.kind == "shared-band-adic" and self.corner is None:
            raise ValueError("shared-band-adic needs the ADiC corner frequency")
        return self


SWEEP_AXES = (
    "thermal_snr_db",
    "outlier_to_thermal_db",
    "isr_db",
    "lambda_over_lc",
    "rate",
    "duty_cycle",
    "beta",
    "corner",
    "phase",
    "outliers",
)


class SweepSpec(_Model):
    """Grid axes; the grid is their Cartesian product in the declared field order."""

    thermal_snr_db: list[float] | None = None
    outlier_to_thermal_db: list[float] | None = None
    isr_db: list[float] | None = None
    lambda_over_lc: list[PositiveFloat] | None = None
    rate: list[PositiveFloat] | None = None
    duty_cycle: list[DutyCycle] | None = None
    beta: list[NonNegativeFloat] | None = None
    corner: list[PositiveFloat] | None = None
    phase: list[float] | None = None
    outliers: list[bool] | None = None

    def axes(self) -> dict[str, list]:
        out = {}
        for name in SWEEP_AXES:
            values = getattr(self, name)
            if values is not None:
                if not values:
                    raise ScenarioError([(f"sweep.{name}", "axis must not be empty")])
                out[name] = list(values)
        return out

    def grid(self) -> list[dict]:
        axes = self.axes()
        names = list(axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*(axes[n] for n in names))]


class OutputSpec(_Model):
    traces: bool = False
    trace_seconds: PositiveFloat | None = None
    psd: bool = False
    psd_segment: int = Field(4096, ge=8)


class Scenario(_Model):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = Field(pattern=r"^[a-z0-9][a-z0-9-]*$")
    description: str = ""
    seed: int = Field(0, ge=0, lt=2**64)
    duration: PositiveFloat
    rate: PositiveFloat
    settle: NonNegativeFloat | None = None
    signal: SignalSpec
    frontend: FilterSpec | None = None
    baseband: BasebandSpec = BasebandSpec(kind="none")
    noise: list[NoiseItem] = []
    chain: ChainSpec
    sweep: SweepSpec = SweepSpec()
    outputs: OutputSpec = OutputSpec()

    @model_validator(mode="after")
    def _check(self):
        if self.baseband.kind == "rrc" and self.signal.kind != "rrc":
            raise ValueError("rrc baseband filter needs an rrc signal (it uses its bandwidth)")
        if self.settle is not None and self.settle >= self.duration:
            raise ValueError("settle time must be shorter than the duration")
        needs_lc = any(n.rate_over_lc is not None for n in self.noise) or self.sweep.lambda_over_lc
        if needs_lc and (self.frontend is None or self.frontend.kind != "lowpass"):
            raise ValueError("rate_over_lc needs a lowpass front end to define the pileup threshold")
        thermal = [n for n in self.noise if n.kind == "thermal-gaussian"]
        relative = [n for n in self.noise if n.outlier_to_thermal_db is not None] or self.sweep.outlier_to_thermal_db
        if relative and len(thermal) != 1:
            raise ValueError("outlier_to_thermal_db needs exactly one thermal-gaussian component")
        if self.sweep.thermal_snr_db and not thermal:
            raise ValueError("sweep.thermal_snr_db needs a thermal-gaussian component")
        if self.chain.kind == "deltasigma" and self.baseband.kind != "none":
            raise ValueError("the delta-sigma chain has its own decimation filter; set baseband kind none")
        return self

    def to_yaml(self) -> str:
        doc = self.model_dump(mode="json", exclude_defaults=False)
        return yaml.safe_dump(doc, sort_keys=False)

    def grid(self) -> list[dict]:
        return self.sweep.grid() or [{}]


def _format_errors(exc: ValidationError) -> list[tuple[str, str]]:
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        msg = err["msg"]
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        out.append((loc, msg))
    return out


def scenario_from_dict(doc, source: str | None = None) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError([("<root>", "scenario must be a mapping")], source)
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError([("schema_version", f"unsupported version {version!r} (expected {SCHEMA_VERSION})")], source)
    try:
        return Scenario.model_validate(doc)
    except ValidationError as exc:
        raise ScenarioError(_format_errors(exc), source) from None


def load_scenario(path_or_name) -> Scenario:
    """Load a scenario file, or a bundled scenario by name."""
    path = Path(path_or_name)
    if not path.exists():
        if str(path_or_name) in bundled_names():
            return load_bundled(str(path_or_name))
        raise ScenarioError([("<file>", f"no such scenario file or bundled scenario: {path_or_name}")])
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError([("<yaml>", str(exc))], str(path)) from None
    return scenario_from_dict(doc, str(path))


def _bundle_dir():
    return resources.files("outliernoise") / "scenarios"


def bundled_names() -> list[str]:
    return sorted(p.name[:-5] for p in _bundle_dir().iterdir() if p.name.endswith(".yaml"))


def load_bundled(name: str) -> Scenario:
    res = _bundle_dir() / f"{name}.yaml"
    if not res.is_file():
        raise ScenarioError([("<name>", f"unknown bundled scenario {name!r}")])
    return scenario_from_dict(yaml.safe_load(res.read_text()), f"bundled:{name}")


def with_point(scenario: Scenario, point: dict) -> Scenario:
    """The scenario with one grid point's axis values applied."""
    noise = [n.model_dump() for n in scenario.noise]
    chain = scenario.chain.model_dump()
    for axis, value in point.items():
        if axis == "outliers":
            if not value:
                noise = [n for n in noise if n["kind"] not in OUTLIER_KINDS]
        elif axis in ("beta", "corner"):
            chain[axis] = value
        else:
            for n in noise:
                _apply_axis(n, axis, value)
    doc = scenario.model_dump()
    doc.update(noise=noise, chain=chain, sweep={})
    return Scenario.model_validate(doc)


def _set_level(n: dict, field: str, value) -> None:
    for f in LEVEL_FIELDS:
        n[f] = None
    n[field] = value


def _apply_axis(n: dict, axis: str, value) -> None:
    kind = n["kind"]
    if axis == "thermal_snr_db" and kind == "thermal-gaussian":
        _set_level(n, "snr_db", value)
    elif axis in ("outlier_to_thermal_db", "isr_db") and kind in OUTLIER_KINDS:
        _set_level(n, axis, value)
    elif axis == "lambda_over_lc" and kind in OUTLIER_KINDS:
        n.update(rate_over_lc=value, rate=None, period=None)
    elif axis == "rate" and kind in OUTLIER_KINDS:
        n.update(rate=value, rate_over_lc=None, period=None)
    elif axis == "duty_cycle" and kind == "periodic-gaussian-bursts":
        n["duty_cycle"] = value
    elif axis == "phase" and kind in ("impulse-train", "square-wave"):
        n["phase"] = value
