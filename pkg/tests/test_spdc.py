"""Unit tests for the biphoton amplitude, grid handling, and rate quadrature."""

import math

import numpy as np
import pytest

from artifact.spdc import (
    GridSpec,
    JointAmplitude,
    SpdcConfig,
    biphoton_amplitude,
    coincidence_rate,
    sinc,
    _sinc2_cell_average,
)

SMALL_GRID = GridSpec(9.5, 11.5, 200, 5.0e-3, 40, 10)


@pytest.fixture(scope="module")
def amp_small():
    return biphoton_amplitude(SpdcConfig(), SMALL_GRID)


def test_sinc_limits():
    assert sinc(0.0) == pytest.approx(1.0)
    assert sinc(math.pi) == pytest.approx(0.0, abs=1e-15)
    x = np.array([-3.0, -1e-10, 1e-10, 2.5])
    np.testing.assert_allclose(sinc(x), np.sinc(x / math.pi), atol=1e-12)


def test_sinc2_cell_average_matches_fine_quadrature():
    x1, x2 = 0.3, 7.9
    fine = np.linspace(x1, x2, 200001)
    expected = np.trapezoid(sinc(fine) ** 2, fine) / (x2 - x1)
    assert _sinc2_cell_average(np.array(x1), np.array(x2)) == pytest.approx(
        expected, rel=1e-9
    )


def test_sinc2_cell_average_degenerate_cell():
    assert _sinc2_cell_average(np.array(1.0), np.array(1.0 + 1e-9)) == pytest.approx(
        sinc(1.0) ** 2, rel=1e-6
    )


def test_grid_validation_and_spacings():
    with pytest.raises(ValueError):
        GridSpec(energy_lo_kev=11.0, energy_hi_kev=9.0)
    with pytest.raises(ValueError):
        GridSpec(n_x=0)
    g = SMALL_GRID
    assert g.d_energy == pytest.approx(2.0 / 200)
    assert len(g.energy_edges()) == g.n_energy + 1
    assert len(g.theta_x_centers()) == g.n_x
    refined = g.refined(2)
    assert refined.n_energy == 2 * g.n_energy
    assert refined.d_theta_y == pytest.approx(g.d_theta_y / 2)


def test_config_rejects_high_gain():
    with pytest.raises(ValueError):
        SpdcConfig(kappa_l=0.02)
    with pytest.raises(ValueError):
        SpdcConfig(kappa_l=0.0)


def test_amplitude_normalization(amp_small):
    assert amp_small.total() == pytest.approx(1.0, rel=1e-12)
    assert coincidence_rate(amp_small) == pytest.approx(1.0, rel=1e-12)


def test_unnormalized_amplitude_scale():
    amp = biphoton_amplitude(SpdcConfig(), SMALL_GRID, normalize=False)
    assert np.max(np.abs(amp.amplitude)) <= SpdcConfig().kappa_l + 1e-15


def test_energy_marginal_integrates_to_total(amp_small):
    energies, density = amp_small.energy_marginal()
    assert np.sum(density) * amp_small.grid.d_energy == pytest.approx(1.0, rel=1e-12)
    assert np.all(density >= 0)


def test_coincidence_rate_symmetric_half_filter():
    # A synthetic amplitude symmetric about the window center: an indicator
    # filter on the upper half-energy range passes exactly half the rate.
    grid = GridSpec(9.5, 11.5, 100, 5.0e-3, 8, 4)
    e = grid.energy_centers()
    w = np.exp(-((e[:, None, None] - 10.5) ** 2)) * np.ones((1, grid.n_x, grid.n_y))
    amp = JointAmplitude(
        SpdcConfig(), grid, e, grid.theta_x_centers(), grid.theta_y_centers(),
        np.sqrt(w).astype(complex),
    )
    upper = lambda energy, tx, ty: (energy >= 10.5).astype(float)
    ratio = coincidence_rate(amp, upper) / coincidence_rate(amp)
    assert ratio == pytest.approx(0.5, abs=1e-6)


def test_coincidence_rate_with_loss():
    grid = GridSpec(9.5, 11.5, 50, 5.0e-3, 4, 2)
    amp = biphoton_amplitude(SpdcConfig(), grid)
    half = coincidence_rate(amp, None, lambda e: 0.5 * np.ones_like(e))
    assert half == pytest.approx(0.5 * coincidence_rate(amp), rel=1e-12)


def test_cell_average_preserves_total_under_refinement():
    # The shared-edge quadrature makes the integrated intensity stable even
    # though the ridge is far narrower than an energy cell.
    cfg = SpdcConfig()
    coarse = biphoton_amplitude(cfg, GridSpec(9.5, 11.5, 300, 5.0e-3, 60, 10),
                                normalize=False)
    fine = biphoton_amplitude(cfg, GridSpec(9.5, 11.5, 900, 5.0e-3, 60, 10),
                              normalize=False)
    assert coarse.total() == pytest.approx(fine.total(), rel=2e-2)
