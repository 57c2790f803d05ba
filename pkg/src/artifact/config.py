"""Run-configuration file parsing and validation.

The run configuration is a single INI-style file.  Every key is validated
against a schema; unknown sections or keys are hard errors so that typos in
physics parameters cannot pass silently.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources

from .daq import DaqConfig
from .montecarlo import (
    DET_REF,
    DET_TRANS,
    DET_TRIG,
    DetectorSpec,
    SourceConfig,
    StraySpectrum,
)
from .spdc import GridSpec, SpdcConfig
from .splitter import SplitterSpec
from .xoptics import LatticeSpec


class ConfigError(Exception):
    """Invalid, unknown, or missing configuration content."""


_SCHEMA: dict[str, dict[str, type]] = {
    "spdc": {
        "pump_energy_kev": float,
        "crystal_d_angstrom": float,
        "crystal_name": str,
        "thickness_mm": float,
        "detune_deg": float,
        "theta_heralded_deg": float,
        "theta_trigger_deg": float,
        "kappa_l": float,
    },
    "grid": {
        "energy_lo_kev": float,
        "energy_hi_kev": float,
        "n_energy": int,
        "angle_span_mrad": float,
        "n_x": int,
        "n_y": int,
    },
    "splitter": {
        "d_angstrom": float,
        "name": str,
        "peak_reflectivity": float,
        "width_deg": float,
        "thickness_mm": float,
        "nominal_energy_kev": float,
        "mount_offset_deg": float,
    },
    "source": {
        "pair_rate_hz": float,
        "stray_rate_trig_hz": float,
        "stray_rate_trans_hz": float,
        "stray_rate_ref_hz": float,
        "stray_flat_lo_kev": float,
        "stray_flat_hi_kev": float,
        "stray_line_kev": float,
        "stray_line_fraction": float,
        "duration_s": float,
        "air_path_cm": float,
        "helium_path_cm": float,
    },
    "detector": {
        "quantum_efficiency": float,
        "resolution_fwhm_ev": float,
        "reference_energy_kev": float,
        "analog_width_ns": float,
        "logic_width_ns": float,
        "sca_lo_kev": float,
        "sca_hi_kev": float,
    },
    "daq": {
        "half_window_ns": float,
        "max_event_rate_hz": float,
        "acceptance_lo_kev": float,
        "acceptance_hi_kev": float,
        "sum_halfwidth_kev": float,
    },
    "analysis": {
        "bin_width_kev": float,
        "baseline_rate_hz": float,
        "baseline_rate_err_hz": float,
    },
    "run": {
        "seed": int,
    },
}

_DETECTOR_SECTIONS = {
    "detector.trig": DET_TRIG,
    "detector.trans": DET_TRANS,
    "detector.ref": DET_REF,
}


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to run the model and the event-stream simulation."""

    spdc: SpdcConfig
    grid: GridSpec
    splitter: SplitterSpec
    source: SourceConfig
    detectors: dict[int, DetectorSpec]
    daq: DaqConfig
    bin_width_kev: float
    baseline_rate_hz: float
    baseline_rate_err_hz: float
    seed: int


def _validate(parser: configparser.ConfigParser):
    for section in parser.sections():
        base = "detector" if section in _DETECTOR_SECTIONS else section
        if base not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        allowed = _SCHEMA[base]
        for key in parser[section]:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")


def _get(parser, section, key, base=None):
    base = base or section
    kind = _SCHEMA[base][key]
    try:
        raw = parser.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError) as exc:
        raise ConfigError(f"missing config value [{section}] {key}") from exc
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc


def _detector_from(parser, section: str) -> DetectorSpec:
    def get(key):
        # Per-detector sections override individual keys; anything not set
        # there falls back to the shared [detector] section.
        use = section if parser.has_option(section, key) else "detector"
        return _get(parser, use, key, "detector")

    return DetectorSpec(
        quantum_efficiency=get("quantum_efficiency"),
        resolution_fwhm_ev=get("resolution_fwhm_ev"),
        reference_energy_kev=get("reference_energy_kev"),
        analog_width_ns=get("analog_width_ns"),
        logic_width_ns=get("logic_width_ns"),
        sca_window_kev=(get("sca_lo_kev"), get("sca_hi_kev")),
    )


def build_config(parser: configparser.ConfigParser) -> RunConfig:
    """Validate a parsed INI file and construct the typed configuration."""
    _validate(parser)
    try:
        spdc = SpdcConfig(
            pump_energy_kev=_get(parser, "spdc", "pump_energy_kev"),
            crystal=LatticeSpec(
                _get(parser, "spdc", "crystal_d_angstrom"),
                _get(parser, "spdc", "crystal_name"),
            ),
            thickness_mm=_get(parser, "spdc", "thickness_mm"),
            detune_deg=_get(parser, "spdc", "detune_deg"),
            theta_heralded_deg=_get(parser, "spdc", "theta_heralded_deg"),
            theta_trigger_deg=_get(parser, "spdc", "theta_trigger_deg"),
            kappa_l=_get(parser, "spdc", "kappa_l"),
        )
        grid = GridSpec(
            energy_lo_kev=_get(parser, "grid", "energy_lo_kev"),
            energy_hi_kev=_get(parser, "grid", "energy_hi_kev"),
            n_energy=_get(parser, "grid", "n_energy"),
            angle_span_rad=_get(parser, "grid", "angle_span_mrad") * 1e-3,
            n_x=_get(parser, "grid", "n_x"),
            n_y=_get(parser, "grid", "n_y"),
        )
        splitter = SplitterSpec(
            lattice=LatticeSpec(
                _get(parser, "splitter", "d_angstrom"),
                _get(parser, "splitter", "name"),
            ),
            peak_reflectivity=_get(parser, "splitter", "peak_reflectivity"),
            width_deg=_get(parser, "splitter", "width_deg"),
            thickness_mm=_get(parser, "splitter", "thickness_mm"),
            nominal_energy_kev=_get(parser, "splitter", "nominal_energy_kev"),
            mount_offset_deg=_get(parser, "splitter", "mount_offset_deg"),
        )
        seed = _get(parser, "run", "seed")
        source = SourceConfig(
            pair_rate=_get(parser, "source", "pair_rate_hz"),
            stray_rates=(
                _get(parser, "source", "stray_rate_trig_hz"),
                _get(parser, "source", "stray_rate_trans_hz"),
                _get(parser, "source", "stray_rate_ref_hz"),
            ),
            spectrum=StraySpectrum(
                flat_lo_kev=_get(parser, "source", "stray_flat_lo_kev"),
                flat_hi_kev=_get(parser, "source", "stray_flat_hi_kev"),
                line_energy_kev=_get(parser, "source", "stray_line_kev"),
                line_fraction=_get(parser, "source", "stray_line_fraction"),
            ),
            duration_s=_get(parser, "source", "duration_s"),
            rng_seed=seed,
            air_path_cm=_get(parser, "source", "air_path_cm"),
            helium_path_cm=_get(parser, "source", "helium_path_cm"),
        )
        detectors = {}
        for section, det in _DETECTOR_SECTIONS.items():
            use = section if parser.has_section(section) else "detector"
            detectors[det] = _detector_from(parser, use)
        daq = DaqConfig(
            half_window_ns=_get(parser, "daq", "half_window_ns"),
            logic_width_ns=detectors[DET_TRIG].logic_width_ns,
            analog_width_ns=detectors[DET_TRIG].analog_width_ns,
            max_event_rate_hz=_get(parser, "daq", "max_event_rate_hz"),
            acceptance_kev=(
                _get(parser, "daq", "acceptance_lo_kev"),
                _get(parser, "daq", "acceptance_hi_kev"),
            ),
            sum_halfwidth_kev=_get(parser, "daq", "sum_halfwidth_kev"),
            pump_energy_kev=_get(parser, "spdc", "pump_energy_kev"),
        )
        return RunConfig(
            spdc=spdc,
            grid=grid,
            splitter=splitter,
            source=source,
            detectors=detectors,
            daq=daq,
            bin_width_kev=_get(parser, "analysis", "bin_width_kev"),
            baseline_rate_hz=_get(parser, "analysis", "baseline_rate_hz"),
            baseline_rate_err_hz=_get(parser, "analysis", "baseline_rate_err_hz"),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(interpolation=None)


def load_config(path, overrides: list[str] | None = None) -> RunConfig:
    """Load and validate a config file, applying ``section.key=value`` overrides."""
    parser = _parser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    _apply_overrides(parser, overrides or [])
    return build_config(parser)


def load_default_config(overrides: list[str] | None = None) -> RunConfig:
    """Load the bundled reference-configuration profile."""
    ref = resources.files("artifact.data").joinpath("defaults.ini")
    parser = _parser()
    parser.read_string(ref.read_text(encoding="utf-8"))
    _apply_overrides(parser, overrides or [])
    return build_config(parser)


def default_config_path() -> str:
    """Filesystem path of the bundled defaults profile (for copying/editing)."""
    with resources.as_file(
        resources.files("artifact.data").joinpath("defaults.ini")
    ) as path:
        return str(path)


def _apply_overrides(parser: configparser.ConfigParser, overrides: list[str]):
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value: {item!r}")
        target, value = item.split("=", 1)
        section, key = target.rsplit(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section.strip(), key.strip(), value.strip())
