"""Run configuration: INI-style file with sections, strict key validation.

Resolution order: built-in defaults (paper.defaults shipped with the
package) < user config file < HYPERBEAT_<SECTION>_<KEY> environment
variables < command-line flags.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields
from importlib import resources

import numpy as np

from .detection import DetectionConfig
from .optics import PolarizerState, SourceParams
from .temporal import BiphotonEnvelope

ENV_PREFIX = "HYPERBEAT_"


class ConfigError(ValueError):
    """Invalid configuration file, key, or value."""


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_polarizer(spec: str) -> PolarizerState:
    """Analyzer spec: one of H,V,D,A,R,L or 'linear:<degrees>'."""
    spec = spec.strip()
    if spec.lower().startswith("linear:"):
        return PolarizerState.linear(np.deg2rad(float(spec.split(":", 1)[1])))
    return PolarizerState.from_name(spec)


@dataclass
class SourceSection:
    delta_mhz: float = 100.0
    p1: str = "H"
    p2: str = "V"


@dataclass
class EnvelopeSection:
    shape: str = "exponential"
    decay_time_ns: float = 50.0
    rise_time_ns: float = 1.0
    osc_freq_rad_ns: float = 0.0
    amplitude_scale: float = 306.7
    mirrored: bool = True


@dataclass
class DetectionSection:
    eta: float = 0.01
    bin_width_ns: float = 1.0
    duration_s: float = 3900.0
    background_rate: float = 0.0
    seed: int = 20150923


@dataclass
class GridSection:
    tau_min_ns: float = -200.0
    tau_max_ns: float = 200.0


@dataclass
class BeatingSection:
    mode: str = "direct"
    theta_rad: float = 0.0
    tau_max_ns: float = 200.0
    fit_window_ns: float = 90.0
    direct_background_frac: float = 0.075
    phase_background_frac: float = 0.085
    phase_duration_s: float = 39000.0


@dataclass
class PolarizationSection:
    p3_angles_deg: str = "0,45"
    p4_step_deg: float = 20.0
    exposure_s: float = 25.0
    window_ns: float = 90.0
    background_frac: float = 0.10


@dataclass
class TomographySection:
    pair_rate_hz: float = 25641.0
    target: str = "singlet"
    bootstrap_resamples: int = 0


@dataclass
class ChshSection:
    bootstrap_resamples: int = 0


@dataclass
class OutputSection:
    out_dir: str = "."
    formats: str = "csv,json"


_SECTIONS = {
    "source": SourceSection,
    "envelope": EnvelopeSection,
    "detection": DetectionSection,
    "grid": GridSection,
    "beating": BeatingSection,
    "polarization": PolarizationSection,
    "tomography": TomographySection,
    "chsh": ChshSection,
    "output": OutputSection,
}


@dataclass
class RunConfig:
    source: SourceSection
    envelope: EnvelopeSection
    detection: DetectionSection
    grid: GridSection
    beating: BeatingSection
    polarization: PolarizationSection
    tomography: TomographySection
    chsh: ChshSection
    output: OutputSection

    @property
    def delta_rad_ns(self) -> float:
        """AOM shift as angular frequency in rad/ns."""
        return 2.0 * np.pi * self.source.delta_mhz * 1e-3

    def source_params(self) -> SourceParams:
        return SourceParams(delta=self.delta_rad_ns,
                            p1=parse_polarizer(self.source.p1),
                            p2=parse_polarizer(self.source.p2))

    def envelope_model(self) -> BiphotonEnvelope:
        return BiphotonEnvelope(
            shape=self.envelope.shape,
            decay_time=self.envelope.decay_time_ns,
            rise_time=self.envelope.rise_time_ns,
            osc_freq=self.envelope.osc_freq_rad_ns,
            amplitude_scale=self.envelope.amplitude_scale,
        )

    def detection_config(self, background_rate: float | None = None,
                         duration: float | None = None) -> DetectionConfig:
        return DetectionConfig(
            eta=self.detection.eta,
            bin_width=self.detection.bin_width_ns,
            duration=self.detection.duration_s if duration is None else duration,
            background_rate=(self.detection.background_rate
                             if background_rate is None else background_rate),
            seed=self.detection.seed,
        )

    def formats(self) -> list[str]:
        fmts = [f.strip().lower() for f in self.output.formats.split(",") if f.strip()]
        for f in fmts:
            if f not in ("csv", "json", "svg"):
                raise ConfigError(f"[output] formats: unknown format {f!r}")
        return fmts

    def p3_angles(self) -> list[float]:
        try:
            return [float(a) for a in self.polarization.p3_angles_deg.split(",")]
        except ValueError as exc:
            raise ConfigError(f"[polarization] p3_angles_deg: {exc}") from exc

    def to_ini(self) -> str:
        lines = []
        for section_name in _SECTIONS:
            section = getattr(self, section_name)
            lines.append(f"[{section_name}]")
            for f in fields(section):
                lines.append(f"{f.name} = {getattr(section, f.name)}")
            lines.append("")
        return "\n".join(lines)


def _coerce(section: str, key: str, raw: str, target_type: type):
    try:
        if target_type is bool:
            return _parse_bool(raw)
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} "
                          f"as {target_type.__name__}") from exc


def _apply(cfg_dict: dict[str, dict[str, str]], run: RunConfig) -> None:
    for section_name, entries in cfg_dict.items():
        if section_name not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section_name}]; "
                              f"expected one of {sorted(_SECTIONS)}")
        section = getattr(run, section_name)
        known = {f.name: f.type for f in fields(section)}
        types = {f.name: type(getattr(section, f.name)) for f in fields(section)}
        for key, raw in entries.items():
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section "
                                  f"[{section_name}]; expected one of "
                                  f"{sorted(known)}")
            setattr(section, key, _coerce(section_name, key, raw, types[key]))


def _read_ini(text: str, origin: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {origin}: {exc}") from exc
    return {s: dict(parser.items(s)) for s in parser.sections()}


def _env_overrides() -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    for name, value in sorted(os.environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        for section_name in _SECTIONS:
            prefix = section_name + "_"
            if rest.startswith(prefix):
                out.setdefault(section_name, {})[rest[len(prefix):]] = value
                break
        else:
            raise ConfigError(f"environment variable {name} does not match "
                              f"any config section")
    return out


def default_config_text() -> str:
    """The packaged defaults file (the published experiment's parameters)."""
    return resources.files("hyperbeat").joinpath("paper.defaults").read_text()


def load_config(path: str | None = None, use_env: bool = True) -> RunConfig:
    """Build a RunConfig from defaults, an optional file, and environment."""
    run = RunConfig(**{name: cls() for name, cls in _SECTIONS.items()})
    _apply(_read_ini(default_config_text(), "paper.defaults"), run)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        _apply(_read_ini(text, path), run)
    if use_env:
        _apply(_env_overrides(), run)
    validate(run)
    return run


def validate(run: RunConfig) -> None:
    """Cross-field checks beyond per-key parsing."""
    try:
        run.source_params()
        run.envelope_model()
        run.detection_config()
        run.formats()
        run.p3_angles()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if run.beating.mode not in ("direct", "phase_shifted"):
        raise ConfigError("[beating] mode must be 'direct' or 'phase_shifted'")
    if run.grid.tau_min_ns >= run.grid.tau_max_ns:
        raise ConfigError("[grid] tau_min_ns must be below tau_max_ns")
    if run.beating.fit_window_ns <= 0 or run.beating.tau_max_ns <= 0:
        raise ConfigError("[beating] windows must be positive")
    if run.polarization.p4_step_deg <= 0 or run.polarization.exposure_s <= 0:
        raise ConfigError("[polarization] step and exposure must be positive")
    if run.tomography.target not in ("singlet", "measured"):
        raise ConfigError("[tomography] target must be 'singlet' or 'measured'")
    for name in ("tomography", "chsh"):
        if getattr(run, name).bootstrap_resamples < 0:
            raise ConfigError(f"[{name}] bootstrap_resamples must be >= 0")
