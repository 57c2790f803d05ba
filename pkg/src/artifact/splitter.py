"""Mosaic-crystal Bragg beam splitter: Gaussian reflectance model.

The mosaic crystal reflects a narrow band around the Bragg condition with a
Gaussian rocking profile and transmits the rest, attenuated by absorption
along the slant path through the plate.  ``reflectance`` is an *amplitude*
(its peak is sqrt(A)); all intensity bookkeeping uses its square, so the
peak intensity reflectivity equals A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .xoptics import AttenuationTable, LatticeSpec, bragg_angle


@dataclass(frozen=True)
class SplitterSpec:
    """Geometry and rocking-curve parameters of the mosaic beam splitter."""

    lattice: LatticeSpec
    peak_reflectivity: float = 0.5  # A, peak intensity reflectivity
    width_deg: float = 0.48  # b, Gaussian rocking width parameter
    thickness_mm: float = 0.7
    nominal_energy_kev: float = 10.5  # energy whose Bragg angle sets the mount
    mount_offset_deg: float = 0.0  # extra rotation of the plate from nominal

    def __post_init__(self):
        if not (0.0 < self.peak_reflectivity <= 1.0):
            raise ValueError("peak_reflectivity must lie in (0, 1]")
        if not self.width_deg > 0:
            raise ValueError("width parameter must be positive")
        if not self.thickness_mm > 0:
            raise ValueError("thickness must be positive")

    def nominal_bragg_deg(self) -> float:
        return float(bragg_angle(self.nominal_energy_kev, self.lattice))


def rocking_argument(spec: SplitterSpec, energy_kev, dtheta_deg):
    """Gaussian argument (degrees): dtheta + theta_B(nominal) - theta_B(energy)."""
    return (
        np.asarray(dtheta_deg, dtype=float)
        + spec.nominal_bragg_deg()
        - bragg_angle(energy_kev, spec.lattice)
    )


def reflectance(spec: SplitterSpec, energy_kev, dtheta_deg):
    """Amplitude reflectance sqrt(A) * exp(-arg^2 / (2 b^2)), peak sqrt(A).

    ``dtheta_deg`` is the deviation of the incidence angle from the nominal
    mount angle; the reflectance peaks on the locus where the incidence
    angle equals the Bragg angle for ``energy_kev``.
    """
    arg = rocking_argument(spec, energy_kev, dtheta_deg)
    return math.sqrt(spec.peak_reflectivity) * np.exp(
        -0.5 * (arg / spec.width_deg) ** 2
    )


def reflectivity(spec: SplitterSpec, energy_kev, dtheta_deg):
    """Intensity reflectivity R^2, peaking at A."""
    return reflectance(spec, energy_kev, dtheta_deg) ** 2


def transmission(
    spec: SplitterSpec, energy_kev, dtheta_deg, material: AttenuationTable
):
    """Intensity transmission through the plate.

    T = (1 - R^2) * exp(-mu * t / sin(incidence)), where the incidence angle
    to the atomic planes is theta_B(nominal) + dtheta + mount offset.  The
    reflective (Bragg) channel removes R^2; the remainder is absorbed along
    the slant path through the plate thickness.
    """
    incidence_deg = (
        spec.nominal_bragg_deg()
        + np.asarray(dtheta_deg, dtype=float)
        + spec.mount_offset_deg
    )
    if np.any(incidence_deg <= 0):
        raise ValueError("incidence angle to the planes must be positive")
    slant_cm = (spec.thickness_mm / 10.0) / np.sin(np.radians(incidence_deg))
    absorption = np.exp(-material.linear_attenuation(energy_kev) * slant_cm)
    return (1.0 - reflectivity(spec, energy_kev, dtheta_deg)) * absorption
