"""Run configuration: a flat-sectioned key-value text format.

Keys carry explicit units in their names (``theta_mrad``, ``wavelength_nm``,
``modes_kb_percm``); values are stored verbatim in those units and converted
only by the accessor methods, so a parse/serialize round trip is exact.
Unknown sections or keys are rejected.  All defaults mirror the reference
experiment: 795 nm light, 2 mrad beam tilt, transmissions 0.12/0.76/0.76,
counting efficiency 0.20 and a +/-45.8 1/cm conjugate mode pair.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .geometry import BeamGeometry, SensorMap, SpinWaveMode
from .model import CouplingPair, ReadoutComponents, couplings_from_detuning, DetuningSpec, integrated_components
from .simulate import DetectionModel, EfficiencyModel, GateConfig, SimulationSpec


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    return tuple(float(p) for p in parts)


def _parse_modes(text: str) -> tuple[tuple[float, float], ...]:
    modes = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split()
        if len(parts) != 2:
            raise ValueError(f"mode entry {chunk!r} must be 'kx ky'")
        modes.append((float(parts[0]), float(parts[1])))
    return tuple(modes)


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(f"{repr(kx)} {repr(ky)}" for kx, ky in value)
        return ", ".join(repr(v) for v in value)
    if value is None:
        return ""
    return str(value)


@dataclass(frozen=True)
class ModelBlock:
    scale: float = 1.0
    delta_r: float | None = 0.3
    chi: float | None = None
    xi: float | None = None
    horizon: float = 1.0
    gamma_b: float = 0.0
    time_points: int = 200
    sweep_deltas: tuple[float, ...] | None = None


@dataclass(frozen=True)
class GeometryBlock:
    wavelength_nm: float = 795.0
    theta_mrad: float = 2.0
    pixels_x: int = 128
    pixels_y: int = 128
    pitch_mrad: float = 0.04
    read_center_x: int = 64
    read_center_y: int = 88
    region_radius_mrad: float = 0.62
    spot_sigma_px: float = 0.0


@dataclass(frozen=True)
class WriteBlock:
    mean_nb: float = 10.0
    eta_w: float = 0.95
    eta_r: float = 0.85
    modes_kb_percm: tuple[tuple[float, float], ...] = ((45.8, 0.0), (-45.8, 0.0))
    crosstalk: bool = True


@dataclass(frozen=True)
class DetectionBlock:
    t_ws: float = 0.12
    t_ra: float = 0.76
    t_rs: float = 0.76
    qe: float = 0.20
    kappa: float = 0.1
    mode: str = "linear"


@dataclass(frozen=True)
class RunBlock:
    shots: int = 10_000
    seed: int = 12345
    chunk_shots: int = 4096
    threads: int = 1
    stack_name: str = "stack.fwmstack"


@dataclass(frozen=True)
class GateBlock:
    gate_start: float = 0.0
    gate_width: float = 0.025
    n_gates: int = 40
    spacing: float = 0.1


@dataclass(frozen=True)
class AnalyzeBlock:
    ref_mode: int = 0
    peak_window: int = 5
    bootstrap: int = 200
    fit_points: int = 10


# (section name, dataclass, RunConfig attribute)
_SECTIONS = (
    ("model", ModelBlock),
    ("geometry", GeometryBlock),
    ("write", WriteBlock),
    ("detection", DetectionBlock),
    ("run", RunBlock),
    ("gate", GateBlock),
    ("analyze", AnalyzeBlock),
)

_PARSERS = {
    float: float,
    int: int,
    str: lambda s: s.strip(),
    bool: _parse_bool,
}


def _field_parser(f):
    t = f.type
    if t in ("float", "int", "str", "bool"):
        return _PARSERS[{"float": float, "int": int, "str": str, "bool": bool}[t]]
    if t == "float | None":
        return float
    if t.startswith("tuple[tuple"):
        return _parse_modes
    if t.startswith("tuple[float") or t == "tuple[float, ...] | None":
        return _parse_floats
    raise TypeError(f"no parser for config field type {t!r}")


@dataclass(frozen=True)
class RunConfig:
    """Parsed and validated run configuration."""

    model: ModelBlock = field(default_factory=ModelBlock)
    geometry: GeometryBlock = field(default_factory=GeometryBlock)
    write: WriteBlock = field(default_factory=WriteBlock)
    detection: DetectionBlock = field(default_factory=DetectionBlock)
    run: RunBlock = field(default_factory=RunBlock)
    gate: GateBlock = field(default_factory=GateBlock)
    analyze: AnalyzeBlock = field(default_factory=AnalyzeBlock)

    # -- parsing and serialization ------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        known = {name: block for name, block in _SECTIONS}
        blocks = {}
        for section in parser.sections():
            if section not in known:
                raise ConfigError(f"unknown config section [{section}]")
            block_cls = known[section]
            by_name = {f.name: f for f in fields(block_cls)}
            values = {}
            for key, raw in parser.items(section):
                if key not in by_name:
                    raise ConfigError(f"unknown key '{key}' in section [{section}]")
                try:
                    values[key] = _field_parser(by_name[key])(raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
            if section == "model" and ("chi" in values or "xi" in values):
                # explicit couplings replace the default detuning
                values.setdefault("delta_r", None)
            try:
                blocks[section] = block_cls(**values)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid section [{section}]: {exc}") from exc
        cfg = cls(**blocks)
        cfg._validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def to_text(self) -> str:
        out = io.StringIO()
        for section, _ in _SECTIONS:
            block = getattr(self, section)
            out.write(f"[{section}]\n")
            for f in fields(block):
                value = getattr(block, f.name)
                if value is None:
                    continue
                out.write(f"{f.name} = {_fmt_value(value)}\n")
            out.write("\n")
        return out.getvalue()

    def _validate(self):
        m = self.model
        if m.delta_r is not None and (m.chi is not None or m.xi is not None):
            raise ConfigError("[model] specify either delta_r or chi/xi, not both")
        if (m.chi is None) != (m.xi is None):
            raise ConfigError("[model] chi and xi must be given together")
        if self.detection.mode not in ("linear", "counting"):
            raise ConfigError(f"[detection] mode must be linear or counting, got {self.detection.mode!r}")
        if not self.write.modes_kb_percm:
            raise ConfigError("[write] modes_kb_percm must list at least one mode")
        if self.run.shots < 0 or self.run.chunk_shots < 1 or self.run.threads < 1:
            raise ConfigError("[run] shots must be >= 0, chunk_shots and threads >= 1")

    # -- derived objects ------------------------------------------------------

    def coupling_pair(self) -> CouplingPair:
        m = self.model
        if m.chi is not None and m.xi is not None:
            return CouplingPair(chi=m.chi, xi=m.xi)
        if m.delta_r is not None:
            return couplings_from_detuning(DetuningSpec(delta_r=m.delta_r, scale=m.scale))
        raise ConfigError("[model] needs delta_r or chi/xi to fix the couplings")

    def components(self) -> ReadoutComponents:
        return integrated_components(self.coupling_pair(), self.model.horizon)

    def beam_geometry(self) -> BeamGeometry:
        g = self.geometry
        return BeamGeometry(wavelength=g.wavelength_nm * 1e-9, theta=g.theta_mrad * 1e-3)

    def sensor(self) -> SensorMap:
        g = self.geometry
        return SensorMap.for_geometry(
            self.beam_geometry(),
            pixels_x=g.pixels_x,
            pixels_y=g.pixels_y,
            pitch=g.pitch_mrad * 1e-3,
            read_center=(g.read_center_x, g.read_center_y),
            region_radius=g.region_radius_mrad * 1e-3,
        )

    def detection_model(self) -> DetectionModel:
        d = self.detection
        return DetectionModel(t_ws=d.t_ws, t_ra=d.t_ra, t_rs=d.t_rs, qe=d.qe, kappa=d.kappa, mode=d.mode)

    def efficiency(self) -> EfficiencyModel:
        return EfficiencyModel(eta_w=self.write.eta_w, eta_r=self.write.eta_r)

    def modes(self) -> tuple[SpinWaveMode, ...]:
        return tuple(SpinWaveMode(kx * 100.0, ky * 100.0) for kx, ky in self.write.modes_kb_percm)

    def gates(self) -> GateConfig:
        g = self.gate
        return GateConfig(
            gate_start=g.gate_start, gate_width=g.gate_width, n_gates=g.n_gates, spacing=g.spacing
        )

    def sim_spec(self, components: ReadoutComponents | None = None) -> SimulationSpec:
        return SimulationSpec(
            seed=self.run.seed,
            shots=self.run.shots,
            mean_nb=self.write.mean_nb,
            efficiency=self.efficiency(),
            components=components if components is not None else self.components(),
            modes=self.modes(),
            geometry=self.beam_geometry(),
            sensor=self.sensor(),
            detection=self.detection_model(),
            crosstalk=self.write.crosstalk,
            spot_sigma_px=self.geometry.spot_sigma_px,
        )

    def with_overrides(self, seed: int | None = None, threads: int | None = None) -> "RunConfig":
        run = self.run
        if seed is not None:
            run = RunBlock(
                shots=run.shots,
                seed=seed,
                chunk_shots=run.chunk_shots,
                threads=run.threads,
                stack_name=run.stack_name,
            )
        if threads is not None:
            run = RunBlock(
                shots=run.shots,
                seed=run.seed,
                chunk_shots=run.chunk_shots,
                threads=threads,
                stack_name=run.stack_name,
            )
        return RunConfig(
            model=self.model,
            geometry=self.geometry,
            write=self.write,
            detection=self.detection,
            run=run,
            gate=self.gate,
            analyze=self.analyze,
        )
