"""Unit tests for the Gaussian mosaic beam-splitter model."""

import math
from dataclasses import replace

import numpy as np
import pytest

from artifact.splitter import (
    SplitterSpec,
    reflectance,
    reflectivity,
    rocking_argument,
    transmission,
)
from artifact.xoptics import LatticeSpec, bragg_angle, load_table

HOPG = LatticeSpec(3.354, "HOPG(002)")


@pytest.fixture(scope="module")
def spec():
    return SplitterSpec(lattice=HOPG)


@pytest.fixture(scope="module")
def graphite():
    return load_table("graphite")


def test_peak_reflectivity_at_matched_condition(spec):
    assert reflectance(spec, 10.5, 0.0) == pytest.approx(math.sqrt(0.5))
    assert reflectivity(spec, 10.5, 0.0) == pytest.approx(0.5)


def test_one_sigma_point_of_rocking_curve(spec):
    # An argument offset equal to the width parameter b drops the amplitude
    # by exactly exp(-1/2).
    r = reflectance(spec, 10.5, spec.width_deg)
    assert r == pytest.approx(math.sqrt(0.5) * math.exp(-0.5))


def test_energy_angle_compensation(spec):
    # Rotating by the Bragg-angle difference restores the peak for a
    # detuned energy.
    dtheta = bragg_angle(11.5, spec.lattice) - spec.nominal_bragg_deg()
    assert rocking_argument(spec, 11.5, dtheta) == pytest.approx(0.0, abs=1e-12)
    assert reflectivity(spec, 11.5, dtheta) == pytest.approx(0.5)


def test_reflectivity_decays_off_peak(spec):
    d = np.array([0.0, 0.5, 1.0, 2.0, 5.0])
    r = reflectivity(spec, 10.5, d)
    assert np.all(np.diff(r) < 0)
    assert r[-1] < 1e-9


def test_transmission_complements_reflection(spec, graphite):
    # On the rocking peak the transmitted fraction is (1 - A) times the
    # slant-path absorption factor.
    t = transmission(spec, 10.5, 0.0, graphite)
    mu = graphite.linear_attenuation(10.5)
    slant = (spec.thickness_mm / 10.0) / math.sin(math.radians(spec.nominal_bragg_deg()))
    assert t == pytest.approx(0.5 * math.exp(-mu * slant))
    # Far from the peak nothing reflects and only absorption remains.
    t_far = transmission(spec, 10.5, 5.0, graphite)
    slant_far = (spec.thickness_mm / 10.0) / math.sin(
        math.radians(spec.nominal_bragg_deg() + 5.0)
    )
    assert t_far == pytest.approx(math.exp(-mu * slant_far))


def test_transmission_bounded(spec, graphite):
    d = np.linspace(-2.0, 5.0, 101)
    t = transmission(spec, 10.5, d, graphite)
    r = reflectivity(spec, 10.5, d)
    assert np.all(t >= 0)
    assert np.all(t <= 1.0 - r + 1e-12)


def test_transmission_rejects_grazing_exit(spec, graphite):
    with pytest.raises(ValueError):
        transmission(spec, 10.5, -15.0, graphite)


def test_spec_validation():
    with pytest.raises(ValueError):
        SplitterSpec(lattice=HOPG, peak_reflectivity=1.5)
    with pytest.raises(ValueError):
        SplitterSpec(lattice=HOPG, width_deg=0.0)
    with pytest.raises(ValueError):
        SplitterSpec(lattice=HOPG, thickness_mm=-1.0)


def test_thicker_plate_transmits_less(spec, graphite):
    thick = replace(spec, thickness_mm=2.0)
    assert transmission(thick, 10.5, 1.0, graphite) < transmission(
        spec, 10.5, 1.0, graphite
    )
