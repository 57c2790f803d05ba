"""Shared fixtures: reference configuration, amplitude grids, and a reusable
Monte Carlo run sized so that pair statistics dominate the event stream."""

from dataclasses import replace

import numpy as np
import pytest

from artifact import daq, montecarlo as mc, spdc
from artifact.config import load_default_config
from artifact.xoptics import load_table


@pytest.fixture(scope="session")
def default_config():
    return load_default_config()


@pytest.fixture(scope="session")
def tables():
    return {name: load_table(name) for name in ("air", "helium", "graphite", "diamond")}


@pytest.fixture(scope="session")
def amp_default(default_config):
    """Biphoton amplitude on the reference grid (expensive; built once)."""
    return spdc.biphoton_amplitude(default_config.spdc, default_config.grid)


def run_chain(cfg, amp, tables, seed):
    """Pairs + stray -> detectors -> coincidence electronics -> energy flags."""
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]
    pairs = mc.generate_pairs(
        amp,
        cfg.splitter,
        cfg.source,
        tables["graphite"],
        air=tables["air"],
        helium=tables["helium"],
        rng=rngs[0],
    )
    stray = mc.generate_stray(cfg.source, rng=rngs[1])
    pulses = mc.detect(mc.merge_streams(pairs, stray), cfg.detectors, rngs[2])
    events, rate_dropped, empty_dropped = daq.build_events(pulses, cfg.daq)
    events, heralded = daq.energy_select(events, cfg.daq)
    return events, heralded, rate_dropped, empty_dropped


@pytest.fixture(scope="session")
def pair_dominated_run(default_config, amp_default, tables):
    """Long run with the pair rate raised so heralded statistics are ample."""
    cfg = default_config
    source = replace(
        cfg.source,
        pair_rate=5.0,
        stray_rates=(2000.0, 1400.0, 1000.0),
        duration_s=1500.0,
    )
    cfg = replace(cfg, source=source)
    events, heralded, rate_dropped, empty_dropped = run_chain(cfg, amp_default, tables, 11)
    return {
        "config": cfg,
        "events": events,
        "heralded": heralded,
        "rate_dropped": rate_dropped,
        "empty_dropped": empty_dropped,
    }
