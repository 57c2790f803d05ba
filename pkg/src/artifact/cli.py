"""Batch command-line front end.

Verbs:

* ``model``    – deterministic model curves: Bragg-angle sweep, port spectra,
  and the reflected/transmitted rate fractions.
* ``simulate`` – Monte Carlo event-stream generation through the detector and
  coincidence-electronics emulation.
* ``analyze``  – estimator suite over a persisted event file.
* ``sweep``    – standalone Bragg-angle sweep with optional rocking-width scaling.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 event-file
schema error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import daq as daq_mod
from . import montecarlo as mc
from . import spdc as spdc_mod
from . import stats as stats_mod
from .config import ConfigError, RunConfig, load_config, load_default_config
from .montecarlo import DET_REF, DET_TRANS, DET_TRIG
from .xoptics import load_table, transmittance

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SCHEMA = 4


class SchemaError(Exception):
    """Persisted-file format mismatch."""


def _load(args) -> RunConfig:
    overrides = args.set or []
    if args.seed is not None:
        overrides = overrides + [f"run.seed={args.seed}"]
    if args.config:
        return load_config(args.config, overrides)
    return load_default_config(overrides)


def _outdir(args) -> str:
    os.makedirs(args.outdir, exist_ok=True)
    return args.outdir


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def cmd_model(cfg: RunConfig, outdir: str) -> None:
    """Write the sweep curve, model port spectra, and rate-fraction summary."""
    air = load_table("air")
    graphite = load_table("graphite")
    amp = spdc_mod.biphoton_amplitude(cfg.spdc, cfg.grid)

    r_ref = spdc_mod.coincidence_rate(amp, spdc_mod.reflection_filter(cfg.splitter))
    r_trans = spdc_mod.coincidence_rate(
        amp, spdc_mod.transmission_filter(cfg.splitter, graphite)
    )

    energies, refl_dens, trans_dens = spdc_mod.port_energy_spectra(
        amp, cfg.splitter, graphite
    )
    _write_rows(
        os.path.join(outdir, "model_spectra.csv"),
        "energy_kev,reflected_density,transmitted_density",
        zip(energies.tolist(), refl_dens.tolist(), trans_dens.tolist()),
    )

    sweep_angles = np.linspace(5.0, 45.0, 81).tolist()
    family = spdc_mod.default_splitter_family(cfg.splitter)
    sweep = spdc_mod.bragg_angle_sweep(cfg.spdc, family, sweep_angles, air=air)
    _write_rows(
        os.path.join(outdir, "bragg_sweep.csv"),
        "bragg_angle_deg,normalized_rate",
        sweep,
    )

    with open(os.path.join(outdir, "model_summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"r_reflected = {r_ref:.6f}\n")
        fh.write(f"r_transmitted = {r_trans:.6f}\n")


def simulate_events(cfg: RunConfig, *, amp=None):
    """Run the Monte Carlo chain; returns (events, rate_dropped, empty_dropped, pulses)."""
    graphite = load_table("graphite")
    air = load_table("air")
    helium = load_table("helium")
    if amp is None:
        amp = spdc_mod.biphoton_amplitude(cfg.spdc, cfg.grid)
    seeds = np.random.SeedSequence(cfg.source.rng_seed).spawn(3)
    rng_pairs, rng_stray, rng_detect = (np.random.default_rng(s) for s in seeds)
    pairs = mc.generate_pairs(
        amp, cfg.splitter, cfg.source, graphite, air=air, helium=helium, rng=rng_pairs
    )
    stray = mc.generate_stray(cfg.source, rng=rng_stray)
    photons = mc.merge_streams(pairs, stray)
    pulses = mc.detect(photons, cfg.detectors, rng_detect)
    events, rate_dropped, empty_dropped = daq_mod.build_events(pulses, cfg.daq)
    daq_mod.energy_select(events, cfg.daq)
    return events, rate_dropped, empty_dropped, pulses


def cmd_simulate(cfg: RunConfig, outdir: str) -> None:
    """Generate an event file plus pulse-stream and run summaries."""
    events, rate_dropped, empty_dropped, pulses = simulate_events(cfg)
    daq_mod.save_events(
        os.path.join(outdir, "events.csv"),
        events,
        live_time_s=cfg.source.duration_s,
        rate_dropped=rate_dropped,
        empty_dropped=empty_dropped,
    )
    with open(os.path.join(outdir, "pulse_summary.txt"), "w", encoding="utf-8") as fh:
        for det, name in mc.DETECTOR_NAMES.items():
            mask = pulses["detector"] == det
            fh.write(
                f"{name}: analog={int(mask.sum())} "
                f"logic={int((mask & pulses['logic']).sum())}\n"
            )
    with open(os.path.join(outdir, "run_meta.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"seed = {cfg.source.rng_seed}\n")
        fh.write(f"live_time_s = {cfg.source.duration_s:.6f}\n")
        fh.write(f"events = {len(events)}\n")
        fh.write(f"rate_dropped = {rate_dropped}\n")
        fh.write(f"empty_dropped = {empty_dropped}\n")


SIGMA_WINDOWS_NS = (100.0, 200.0, 400.0, 600.0, 800.0)


def cmd_analyze(cfg: RunConfig, events_path: str, outdir: str) -> None:
    """Spectra, correlation-degree curves, coincidence tallies, and rates."""
    try:
        events, meta = daq_mod.load_events(events_path)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    events, heralded = daq_mod.energy_select(events, cfg.daq)

    for det, stem in ((DET_TRANS, "trans"), (DET_REF, "ref")):
        hist = stats_mod.spectra(
            heralded,
            det,
            cfg.bin_width_kev,
            lo_kev=cfg.daq.acceptance_kev[0],
            hi_kev=cfg.daq.acceptance_kev[1],
        )
        _write_rows(
            os.path.join(outdir, f"spectrum_{stem}.csv"),
            "bin_lo_kev,bin_hi_kev,count",
            zip(
                hist.edges[:-1].tolist(),
                hist.edges[1:].tolist(),
                hist.counts.tolist(),
            ),
        )

    sigma_rows = []
    for window in SIGMA_WINDOWS_NS:
        for det, name in ((DET_TRANS, "trans"), (DET_REF, "ref")):
            for mode in ("sum", "open"):
                try:
                    value = stats_mod.sigma(
                        events,
                        window,
                        output=det,
                        energy_mode=mode,
                        pump_energy_kev=cfg.daq.pump_energy_kev,
                        sum_halfwidth_kev=cfg.daq.sum_halfwidth_kev,
                    )
                except ValueError:
                    value = float("nan")
                sigma_rows.append((window, name, mode, value))
    _write_rows(
        os.path.join(outdir, "sigma_curves.csv"),
        "window_ns,output,energy_mode,sigma",
        sigma_rows,
    )

    report_lines = []
    for label, subset in (("heralded", heralded), ("all", events)):
        counts = stats_mod.counts_from_events(subset)
        result = stats_mod.alpha(counts)
        _write_rows(
            os.path.join(outdir, f"counts_{label}.csv"),
            "n_trig,n_trig_t,n_trig_r,n_trig_t_r",
            [(counts.n_trig, counts.n_trig_t, counts.n_trig_r, counts.n_trig_t_r)],
        )
        if result.defined:
            report_lines.append(
                f"{label}: alpha = {result.alpha:.6f} +- {result.sigma:.6f} "
                f"(N={counts.n_trig}, N_T={counts.n_trig_t}, "
                f"N_R={counts.n_trig_r}, N_TR={counts.n_trig_t_r})"
            )
        else:
            report_lines.append(
                f"{label}: alpha undefined "
                f"(N={counts.n_trig}, N_T={counts.n_trig_t}, "
                f"N_R={counts.n_trig_r}, N_TR={counts.n_trig_t_r})"
            )
    with open(os.path.join(outdir, "alpha_report.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(report_lines) + "\n")

    live_time = meta.get("live_time_s")
    if live_time:
        n_ref = sum(
            1 for rec in heralded if any(p == DET_REF for p, _t, _o in rec.heralded_pairs)
        )
        n_trans = sum(
            1
            for rec in heralded
            if any(p == DET_TRANS for p, _t, _o in rec.heralded_pairs)
        )
        rates = stats_mod.rates_and_ratios(
            n_ref,
            n_trans,
            live_time,
            cfg.baseline_rate_hz,
            cfg.baseline_rate_err_hz,
        )
        with open(os.path.join(outdir, "rates.txt"), "w", encoding="utf-8") as fh:
            fh.write(f"n_ref = {rates.n_ref:.6g} +- {rates.n_ref_err:.6g}\n")
            fh.write(f"n_trans = {rates.n_trans:.6g} +- {rates.n_trans_err:.6g}\n")
            fh.write(f"r_ref = {rates.r_ref:.6g} +- {rates.r_ref_err:.6g}\n")
            fh.write(f"r_trans = {rates.r_trans:.6g} +- {rates.r_trans_err:.6g}\n")


def cmd_sweep(cfg: RunConfig, outdir: str, start: float, stop: float, num: int, width_scale: float) -> None:
    """Standalone Bragg-angle sweep, optionally scaling the rocking width."""
    air = load_table("air")
    base = cfg.splitter
    if width_scale != 1.0:
        from dataclasses import replace

        base = replace(base, width_deg=base.width_deg * width_scale)
    family = spdc_mod.default_splitter_family(base)
    angles = np.linspace(start, stop, num).tolist()
    sweep = spdc_mod.bragg_angle_sweep(cfg.spdc, family, angles, air=air)
    _write_rows(
        os.path.join(outdir, "bragg_sweep.csv"),
        "bragg_angle_deg,normalized_rate",
        sweep,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xbsim",
        description="Heralded x-ray pair source and Bragg beam-splitter simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="run-configuration file (default: bundled profile)")
        p.add_argument("--outdir", default=".", help="output directory")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument(
            "--set",
            action="append",
            metavar="SECTION.KEY=VALUE",
            help="override a single config value (repeatable)",
        )

    common(sub.add_parser("model", help="deterministic model curves and ratios"))
    common(sub.add_parser("simulate", help="Monte Carlo event-stream generation"))
    p_an = sub.add_parser("analyze", help="estimators over an event file")
    common(p_an)
    p_an.add_argument("--events", required=True, help="event CSV produced by simulate")
    p_sw = sub.add_parser("sweep", help="Bragg-angle sweep of the splitter")
    common(p_sw)
    p_sw.add_argument("--start", type=float, default=5.0)
    p_sw.add_argument("--stop", type=float, default=45.0)
    p_sw.add_argument("--num", type=int, default=81)
    p_sw.add_argument("--width-scale", type=float, default=1.0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        outdir = _outdir(args)
        if args.command == "model":
            cmd_model(cfg, outdir)
        elif args.command == "simulate":
            cmd_simulate(cfg, outdir)
        elif args.command == "analyze":
            cmd_analyze(cfg, args.events, outdir)
        elif args.command == "sweep":
            cmd_sweep(cfg, outdir, args.start, args.stop, args.num, args.width_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
