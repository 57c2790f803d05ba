"""Unit tests for configuration parsing, validation, and overrides."""

import pytest

from artifact.config import (
    ConfigError,
    default_config_path,
    load_config,
    load_default_config,
)
from artifact.montecarlo import DET_REF, DET_TRANS, DET_TRIG


def test_default_profile_loads():
    cfg = load_default_config()
    assert cfg.spdc.pump_energy_kev == 21.0
    assert cfg.splitter.nominal_energy_kev == 10.5
    assert cfg.daq.acceptance_kev == (7.0, 17.0)
    assert set(cfg.detectors) == {DET_TRIG, DET_TRANS, DET_REF}
    assert cfg.source.rng_seed == cfg.seed


def test_default_path_matches_bundled_profile():
    cfg = load_config(default_config_path())
    assert cfg == load_default_config()


def test_overrides_apply():
    cfg = load_default_config(["source.duration_s=12.5", "run.seed=99"])
    assert cfg.source.duration_s == 12.5
    assert cfg.seed == 99
    assert cfg.source.rng_seed == 99


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        load_default_config(["source.typo_rate=1.0"])


def test_unknown_section_rejected():
    with pytest.raises(ConfigError):
        load_default_config(["nonsense.value=1.0"])


def test_bad_value_rejected():
    with pytest.raises(ConfigError):
        load_default_config(["source.duration_s=fast"])


def test_invalid_physics_value_rejected():
    with pytest.raises(ConfigError):
        load_default_config(["spdc.kappa_l=0.5"])


def test_malformed_override_rejected():
    with pytest.raises(ConfigError):
        load_default_config(["duration_s=1.0"])


def test_per_detector_override_sections():
    cfg = load_default_config(["detector.ref.quantum_efficiency=0.5"])
    assert cfg.detectors[DET_REF].quantum_efficiency == 0.5
    assert cfg.detectors[DET_TRIG].quantum_efficiency == 1.0


def test_missing_value_rejected(tmp_path):
    path = tmp_path / "partial.ini"
    path.write_text("[spdc]\npump_energy_kev = 21.0\n")
    with pytest.raises(ConfigError):
        load_config(path)
