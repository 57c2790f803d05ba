"""Biphoton joint spectral-angular amplitude and coincidence-rate quadrature.

The parametric source is described by coupled mode equations whose
first-order (low-gain) solution gives a two-photon amplitude proportional to

    kappa_L * sinc(dk_z * L / 2) * exp(i * dk_z * L / 2)

per (energy, transverse-angle) cell, where dk_z is the longitudinal
wave-vector mismatch.  Energy conservation fixes the partner energy
(E_partner = E_pump - E) and transverse momentum conservation fixes the
partner angles, so a single (E, theta_x, theta_y) grid describes the pair.

The mismatch varies by orders of magnitude within a grid cell along the
energy axis (the phase-matching ridge is micro-eV thin), so cell weights
are computed by *exact* integration of sinc^2 across each energy cell
(antiderivative of sinc^2 via the sine integral) with cell edges shared
between neighbours.  This makes integrated rates stable against grid
refinement even though the integrand is unresolved pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import sici

from .splitter import SplitterSpec, reflectance, transmission
from .xoptics import (
    AttenuationTable,
    LatticeSpec,
    bragg_angle,
    transmittance,
    wavelength,
    wavenumber,
)

MAX_KAPPA_L = 0.01  # validity bound of the first-order solution


@dataclass(frozen=True)
class SpdcConfig:
    """Source crystal, geometry, and coupling of the parametric process."""

    pump_energy_kev: float = 21.0
    crystal: LatticeSpec = LatticeSpec(3.56712 / math.sqrt(72.0), "C(660)")
    thickness_mm: float = 0.8
    detune_deg: float = 0.008  # pump rotation away from the crystal Bragg angle
    theta_heralded_deg: float = 45.59  # central heralded-beam angle to the planes
    theta_trigger_deg: float = 43.63  # central trigger-beam angle to the planes
    kappa_l: float = 0.01  # dimensionless gain kappa * L

    def __post_init__(self):
        if not (0.0 < self.kappa_l <= MAX_KAPPA_L):
            raise ValueError(
                f"kappa_l must lie in (0, {MAX_KAPPA_L}] for the first-order solution"
            )
        if not self.thickness_mm > 0:
            raise ValueError("crystal thickness must be positive")

    def pump_angle_deg(self) -> float:
        """Pump incidence angle to the planes: Bragg angle plus detune."""
        return float(bragg_angle(self.pump_energy_kev, self.crystal)) + self.detune_deg


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the (energy, theta_x, theta_y) window."""

    energy_lo_kev: float = 8.5
    energy_hi_kev: float = 12.5
    n_energy: int = 2400
    angle_span_rad: float = 5.0e-3  # full span, centred on the beam axis
    n_x: int = 160
    n_y: int = 40

    def __post_init__(self):
        if not (self.energy_hi_kev > self.energy_lo_kev > 0):
            raise ValueError("energy window must satisfy 0 < lo < hi")
        if min(self.n_energy, self.n_x, self.n_y) < 1:
            raise ValueError("grid must have at least one cell per axis")
        if not self.angle_span_rad > 0:
            raise ValueError("angle span must be positive")

    def energy_edges(self):
        return np.linspace(self.energy_lo_kev, self.energy_hi_kev, self.n_energy + 1)

    def energy_centers(self):
        e = self.energy_edges()
        return 0.5 * (e[:-1] + e[1:])

    def theta_x_centers(self):
        half = 0.5 * self.angle_span_rad
        edges = np.linspace(-half, half, self.n_x + 1)
        return 0.5 * (edges[:-1] + edges[1:])

    def theta_y_centers(self):
        half = 0.5 * self.angle_span_rad
        edges = np.linspace(-half, half, self.n_y + 1)
        return 0.5 * (edges[:-1] + edges[1:])

    @property
    def d_energy(self):
        return (self.energy_hi_kev - self.energy_lo_kev) / self.n_energy

    @property
    def d_theta_x(self):
        return self.angle_span_rad / self.n_x

    @property
    def d_theta_y(self):
        return self.angle_span_rad / self.n_y

    def refined(self, factor: int = 2) -> "GridSpec":
        """Same window with every axis resolution multiplied by ``factor``."""
        return GridSpec(
            self.energy_lo_kev,
            self.energy_hi_kev,
            self.n_energy * factor,
            self.angle_span_rad,
            self.n_x * factor,
            self.n_y * factor,
        )


def sinc(x):
    """sin(x)/x with the removable singularity handled by series."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)


def _sinc2_antiderivative(x):
    """Antiderivative of sinc^2: Si(2x) - sin^2(x)/x."""
    si, _ = sici(2.0 * x)
    small = np.abs(x) < 1e-9
    safe = np.where(small, 1.0, x)
    return si - np.where(small, x, np.sin(safe) ** 2 / safe)


def _sinc2_cell_average(x1, x2):
    """Mean of sinc^2 over [x1, x2]; falls back to the midpoint when degenerate."""
    dx = x2 - x1
    mid = 0.5 * (x1 + x2)
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = (_sinc2_antiderivative(x2) - _sinc2_antiderivative(x1)) / dx
    return np.where(np.abs(dx) < 1e-6, sinc(mid) ** 2, avg)


class _Kinematics:
    """Precomputed central-geometry quantities for mismatch evaluation."""

    def __init__(self, config: SpdcConfig):
        self.pump_kev = config.pump_energy_kev
        theta_p = math.radians(config.pump_angle_deg())
        k_p = float(wavenumber(self.pump_kev))
        g = 2.0 * math.pi / config.crystal.d_spacing  # reciprocal-lattice vector
        self.k_pz = k_p * math.cos(theta_p)
        # Transverse momentum available to the pair: pump transverse component
        # minus the lattice vector (the planes are normal to the transverse axis).
        self.s_total = g - k_p * math.sin(theta_p)
        self.theta_h0 = math.radians(config.theta_heralded_deg)
        self.half_length = 0.5 * config.thickness_mm * 1.0e8  # L/2 in Angstrom

    def half_phase(self, energy_kev, theta_x, theta_y):
        """dk_z * L / 2 on broadcastable arrays; NaN where the partner is evanescent."""
        k_h = wavenumber(energy_kev)
        k_t = wavenumber(self.pump_kev - energy_kev)
        s_h = k_h * np.sin(self.theta_h0 + theta_x)
        q_y = k_h * np.sin(theta_y)
        s_t = self.s_total - s_h
        kz_h_sq = k_h**2 - s_h**2 - q_y**2
        kz_t_sq = k_t**2 - s_t**2 - q_y**2
        bad = (kz_h_sq <= 0) | (kz_t_sq <= 0)
        kz_h = np.sqrt(np.where(bad, 1.0, kz_h_sq))
        kz_t = np.sqrt(np.where(bad, 1.0, kz_t_sq))
        dkz = self.k_pz - kz_h - kz_t
        return np.where(bad, np.nan, dkz * self.half_length)


@dataclass(frozen=True)
class JointAmplitude:
    """Discretized biphoton amplitude on a (energy, theta_x, theta_y) grid."""

    config: SpdcConfig
    grid: GridSpec
    energies: np.ndarray  # cell centers, keV
    theta_x: np.ndarray  # cell centers, rad
    theta_y: np.ndarray  # cell centers, rad
    amplitude: np.ndarray  # complex, shape (n_energy, n_x, n_y)

    @property
    def cell_volume(self) -> float:
        return self.grid.d_energy * self.grid.d_theta_x * self.grid.d_theta_y

    def weights(self):
        """|amplitude|^2 per cell."""
        return np.abs(self.amplitude) ** 2

    def total(self) -> float:
        """Integral of |amplitude|^2 over the window (1.0 when normalized)."""
        return float(np.sum(self.weights()) * self.cell_volume)

    def energy_marginal(self):
        """(energies, density) with the angular axes integrated out."""
        dens = self.weights().sum(axis=(1, 2)) * self.grid.d_theta_x * self.grid.d_theta_y
        return self.energies, dens

    def to_csv(self, path):
        """Dump one row per cell: energy, theta_x, theta_y, |amplitude|^2."""
        w = self.weights()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("energy_kev,theta_x_rad,theta_y_rad,weight\n")
            for i, e in enumerate(self.energies):
                for j, tx in enumerate(self.theta_x):
                    for k, ty in enumerate(self.theta_y):
                        fh.write(f"{e:.9g},{tx:.9g},{ty:.9g},{w[i, j, k]:.9g}\n")


def biphoton_amplitude(
    config: SpdcConfig,
    grid: GridSpec | None = None,
    *,
    cell_average: bool = True,
    normalize: bool = True,
    chunk_cells: int = 4_000_000,
) -> JointAmplitude:
    """Evaluate the first-order two-photon amplitude on the grid.

    With ``cell_average`` (default) the magnitude of each cell is the root
    mean square of sinc(dk_z L/2) across the cell's energy extent, computed
    exactly from the sinc^2 antiderivative with shared cell edges; the phase
    is taken at the cell center.  With ``cell_average=False`` both magnitude
    and phase are evaluated pointwise at cell centers (useful for comparing
    against direct integration of the coupled equations).
    """
    if grid is None:
        grid = GridSpec()
    if not (0.0 < config.kappa_l <= MAX_KAPPA_L):
        raise ValueError("kappa_l outside the low-gain validity range")
    kin = _Kinematics(config)
    e_edges = grid.energy_edges()
    e_cent = grid.energy_centers()
    tx = grid.theta_x_centers()
    ty = grid.theta_y_centers()
    amp = np.empty((grid.n_energy, grid.n_x, grid.n_y), dtype=np.complex128)

    ty_b = ty[None, None, :]
    n_chunk = max(1, chunk_cells // ((grid.n_energy + 1) * grid.n_y))
    for j0 in range(0, grid.n_x, n_chunk):
        tx_b = tx[j0 : j0 + n_chunk][None, :, None]
        x_mid = kin.half_phase(e_cent[:, None, None], tx_b, ty_b)
        phase = np.exp(1j * np.where(np.isnan(x_mid), 0.0, x_mid))
        if cell_average:
            x_edge = kin.half_phase(e_edges[:, None, None], tx_b, ty_b)
            mag2 = _sinc2_cell_average(x_edge[:-1], x_edge[1:])
            bad = np.isnan(x_edge[:-1]) | np.isnan(x_edge[1:]) | np.isnan(mag2)
            mag = np.sqrt(np.where(bad, 0.0, mag2))
        else:
            mag = np.where(np.isnan(x_mid), 0.0, sinc(np.where(np.isnan(x_mid), 0.0, x_mid)))
        amp[:, j0 : j0 + n_chunk, :] = config.kappa_l * mag * phase

    if normalize:
        volume = grid.d_energy * grid.d_theta_x * grid.d_theta_y
        norm = math.sqrt(float(np.sum(np.abs(amp) ** 2)) * volume)
        if norm == 0.0:
            raise ValueError("amplitude vanishes identically on this grid")
        amp /= norm
    return JointAmplitude(config, grid, e_cent, tx, ty, amp)


def reflection_filter(spec: SplitterSpec):
    """Amplitude filter for the reflected port of the splitter.

    The heralded beam's transverse angle theta_x maps one-to-one onto the
    rocking offset of the splitter (dispersion-matched mounting), so the
    filter is the amplitude reflectance at (energy, dtheta = theta_x).
    """

    def apply(energy_kev, theta_x, theta_y):
        return reflectance(spec, energy_kev, np.degrees(theta_x))

    return apply


def transmission_filter(spec: SplitterSpec, material: AttenuationTable):
    """Amplitude-equivalent filter for the transmitted port (sqrt of intensity T)."""

    def apply(energy_kev, theta_x, theta_y):
        return np.sqrt(transmission(spec, energy_kev, np.degrees(theta_x), material))

    return apply


def coincidence_rate(amp: JointAmplitude, spectral_filter=None, loss=None) -> float:
    """Quadrature of |amplitude|^2 * |filter|^2 * loss over the grid.

    ``spectral_filter`` is a callable (energy, theta_x, theta_y) -> amplitude
    response (broadcastable), or None for unit response.  ``loss`` is a
    callable energy -> intensity fraction in [0, 1], or None.  With both
    absent the result is the amplitude normalization (1.0 for a normalized
    grid).
    """
    w = amp.weights()
    e = amp.energies[:, None, None]
    tx = amp.theta_x[None, :, None]
    ty = amp.theta_y[None, None, :]
    if spectral_filter is not None:
        response = np.abs(np.broadcast_to(spectral_filter(e, tx, ty), w.shape)) ** 2
        w = w * response
    if loss is not None:
        w = w * np.broadcast_to(loss(e), w.shape)
    return float(np.sum(w) * amp.cell_volume)


def port_energy_spectra(
    amp: JointAmplitude, spec: SplitterSpec, material: AttenuationTable
):
    """Model energy spectra behind the splitter.

    Returns (energies, reflected_density, transmitted_density): the energy
    marginal of the pair intensity weighted by the intensity reflectivity and
    transmission of each output port.
    """
    w = amp.weights()
    e = amp.energies[:, None, None]
    tx = amp.theta_x[None, :, None]
    refl = np.abs(reflection_filter(spec)(e, tx, None)) ** 2
    trans = np.abs(transmission_filter(spec, material)(e, tx, None)) ** 2
    d_angle = amp.grid.d_theta_x * amp.grid.d_theta_y
    refl_dens = (w * refl).sum(axis=(1, 2)) * d_angle
    trans_dens = (w * trans).sum(axis=(1, 2)) * d_angle
    return amp.energies, refl_dens, trans_dens


def default_splitter_family(base: SplitterSpec):
    """Family theta_B -> SplitterSpec with the mount retuned to each Bragg angle.

    Each member keeps the base peak reflectivity, rocking width, and
    thickness but uses a lattice spacing chosen so the nominal energy's
    Bragg angle equals the requested theta_B.
    """

    def family(theta_b_deg: float) -> SplitterSpec:
        d = float(wavelength(base.nominal_energy_kev)) / (
            2.0 * math.sin(math.radians(theta_b_deg))
        )
        return SplitterSpec(
            lattice=LatticeSpec(d, f"family({theta_b_deg:g} deg)"),
            peak_reflectivity=base.peak_reflectivity,
            width_deg=base.width_deg,
            thickness_mm=base.thickness_mm,
            nominal_energy_kev=base.nominal_energy_kev,
            mount_offset_deg=base.mount_offset_deg,
        )

    return family


# Finer-than-default internal grid for the Bragg-angle sweep: narrow rocking
# widths demand high transverse-angle resolution, and the sweep never
# materializes the amplitude, so the extra resolution is cheap.
SWEEP_GRID = GridSpec(8.5, 12.5, 2400, 5.0e-3, 500, 20)


def bragg_angle_sweep(
    config: SpdcConfig,
    splitter_family,
    sweep_deg,
    *,
    grid: GridSpec | None = None,
    air: AttenuationTable | None = None,
    air_path_cm: float = 10.0,
    chunk_cells: int = 4_000_000,
):
    """Normalized reflected-port rate versus splitter Bragg angle.

    For each angle the reflected-port rate (intensity reflectivity folded
    with the pair intensity and, optionally, air absorption along
    ``air_path_cm``) is normalized by the total pair intensity at the source.
    Streams over the grid in chunks; returns a list of (theta_B_deg, rate).
    """
    sweep_deg = list(sweep_deg)
    if not sweep_deg:
        return []
    if grid is None:
        grid = SWEEP_GRID
    kin = _Kinematics(config)
    e_edges = grid.energy_edges()
    e_cent = grid.energy_centers()
    tx = grid.theta_x_centers()
    ty = grid.theta_y_centers()
    specs = [splitter_family(t) for t in sweep_deg]
    for t in sweep_deg:
        if not (0.0 < t < 90.0):
            raise ValueError("sweep angles must lie in (0, 90) degrees")
    air_t = transmittance(e_cent, air, air_path_cm) if air is not None else None

    numer = np.zeros(len(specs))
    denom = 0.0
    ty_b = ty[None, None, :]
    n_chunk = max(1, chunk_cells // ((grid.n_energy + 1) * grid.n_y))
    for j0 in range(0, grid.n_x, n_chunk):
        tx_b = tx[j0 : j0 + n_chunk][None, :, None]
        x_edge = kin.half_phase(e_edges[:, None, None], tx_b, ty_b)
        w = _sinc2_cell_average(x_edge[:-1], x_edge[1:])
        bad = np.isnan(x_edge[:-1]) | np.isnan(x_edge[1:]) | np.isnan(w)
        w = np.where(bad, 0.0, w)
        denom += float(w.sum())
        w_y = w.sum(axis=2)  # reflectivity depends only on (energy, theta_x)
        if air_t is not None:
            w_y = w_y * air_t[:, None]
        dtheta_deg = np.degrees(tx_b[:, :, 0])
        for i, spec in enumerate(specs):
            refl = reflectance(spec, e_cent[:, None], dtheta_deg) ** 2
            numer[i] += float((w_y * refl).sum())
    if denom == 0.0:
        raise ValueError("pair intensity vanishes on the sweep grid")
    return [(t, float(n / denom)) for t, n in zip(sweep_deg, numer)]
