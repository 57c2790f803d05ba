"""Estimators for coincidence runs: anticorrelation ratio, correlation
degree, spectra, and rates with Poisson errors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .daq import DaqConfig, EventRecord
from .montecarlo import DET_REF, DET_TRANS, DET_TRIG


@dataclass(frozen=True)
class CoincCounts:
    """Event tallies entering the anticorrelation ratio.

    ``n_trig`` counts events where the trigger detector and at least one
    output detector fired; it can therefore be smaller than
    n_trig_t + n_trig_r (events with photons at both outputs are counted
    once in n_trig but appear in both per-port tallies).
    """

    n_trig: int
    n_trig_t: int
    n_trig_r: int
    n_trig_t_r: int

    def __post_init__(self):
        if min(self.n_trig, self.n_trig_t, self.n_trig_r, self.n_trig_t_r) < 0:
            raise ValueError("counts must be non-negative")
        if self.n_trig_t_r > min(self.n_trig_t, self.n_trig_r):
            raise ValueError("triple coincidences cannot exceed either pair count")


@dataclass(frozen=True)
class AlphaResult:
    alpha: float
    sigma: float
    defined: bool = True


def alpha(counts: CoincCounts) -> AlphaResult:
    """Anticorrelation ratio N * N_tr / (N_t * N_r) with Poisson error.

    The error treats the four counts as independent Poisson variables
    (first-order propagation).  A zero triple count yields alpha = 0 with a
    one-sided error computed at one triple count; a zero denominator yields
    an undefined result.
    """
    n, nt, nr, ntr = (
        counts.n_trig,
        counts.n_trig_t,
        counts.n_trig_r,
        counts.n_trig_t_r,
    )
    if nt == 0 or nr == 0 or n == 0:
        return AlphaResult(math.nan, math.nan, defined=False)
    value = n * ntr / (nt * nr)
    if ntr == 0:
        upper = n * 1.0 / (nt * nr)  # one-sided bound at a single triple count
        return AlphaResult(0.0, upper)
    rel = math.sqrt(1.0 / n + 1.0 / ntr + 1.0 / nt + 1.0 / nr)
    return AlphaResult(value, value * rel)


def counts_from_events(events) -> CoincCounts:
    """Tally coincidence categories over event records (any selection applied
    by the caller beforehand)."""
    n = nt = nr = ntr = 0
    for rec in events:
        has_t = rec.count(DET_TRANS) > 0
        has_r = rec.count(DET_REF) > 0
        if rec.count(DET_TRIG) == 0 or not (has_t or has_r):
            continue
        n += 1
        nt += has_t
        nr += has_r
        ntr += has_t and has_r
    return CoincCounts(n, nt, nr, ntr)


def _windowed(rec: EventRecord, det: int, window_ns: float):
    mask = np.abs(rec.offsets[det]) <= window_ns
    return rec.energies[det][mask]


def sigma(
    events,
    window_ns: float,
    *,
    output: int = DET_TRANS,
    energy_mode: str = "open",
    pump_energy_kev: float = 21.0,
    sum_halfwidth_kev: float = 0.5,
) -> float:
    """Degree of correlation Var(N_t - N_h) / Mean(N_t + N_h).

    Per event, N_t is the number of trigger-detector photons and N_h the
    number of photons at ``output``, both restricted to |offset| <=
    ``window_ns``.  With energy_mode="sum" an event qualifies on its full
    registered record: either some (trigger, output) photon pairing
    satisfies the pair-energy window, or the output detector registered
    nothing and a trigger photon carries the full pump energy (a pair
    partner that fell outside the registration window leaves such a
    single-photon record).  Events with no windowed photon at either
    detector are excluded.  Returns 0 for perfectly correlated unit pairs
    and 1 in the independent-Poisson limit.
    """
    if energy_mode not in ("open", "sum"):
        raise ValueError("energy_mode must be 'open' or 'sum'")
    diffs = []
    sums = []
    for rec in events:
        if energy_mode == "sum":
            all_t = rec.energies[DET_TRIG]
            all_h = rec.energies[output]
            paired = np.any(
                np.abs(all_t[:, None] + all_h[None, :] - pump_energy_kev)
                <= sum_halfwidth_kev
            )
            lone_elastic = len(all_h) == 0 and bool(
                np.any(np.abs(all_t - pump_energy_kev) <= sum_halfwidth_kev)
            )
            if not (paired or lone_elastic):
                continue
        n_t = len(_windowed(rec, DET_TRIG, window_ns))
        n_h = len(_windowed(rec, output, window_ns))
        if n_t + n_h == 0:
            continue
        diffs.append(n_t - n_h)
        sums.append(n_t + n_h)
    if len(diffs) < 2:
        raise ValueError("need at least two qualifying events for sigma")
    diffs = np.asarray(diffs, dtype=float)
    sums = np.asarray(sums, dtype=float)
    return float(diffs.var() / sums.mean())


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow


def spectra(
    events,
    detector: int,
    bin_width_kev: float = 0.5,
    *,
    lo_kev: float = 7.0,
    hi_kev: float = 17.0,
) -> Histogram:
    """Energy histogram of the heralded photon at ``detector``.

    Expects events already flagged by energy selection; for each event the
    photon entering the qualifying pairing at the requested port is binned
    (one entry per qualifying event at that port).  Left-closed bins;
    entries outside [lo, hi) are tallied as under/overflow.
    """
    if bin_width_kev <= 0:
        raise ValueError("bin width must be positive")
    values = []
    for rec in events:
        for port, _e_t, e_o in rec.heralded_pairs:
            if port == detector:
                values.append(e_o)
                break
    n_bins = int(round((hi_kev - lo_kev) / bin_width_kev))
    edges = lo_kev + bin_width_kev * np.arange(n_bins + 1)
    values = np.asarray(values, dtype=float)
    counts, _ = np.histogram(values, bins=edges)
    underflow = int((values < edges[0]).sum())
    overflow = int((values >= edges[-1]).sum())
    return Histogram(edges, counts, underflow, overflow)


@dataclass(frozen=True)
class RateRatios:
    n_ref: float
    n_ref_err: float
    n_trans: float
    n_trans_err: float
    r_ref: float
    r_ref_err: float
    r_trans: float
    r_trans_err: float


def rates_and_ratios(
    ref_count: int,
    trans_count: int,
    live_time_s: float,
    baseline_rate: float,
    baseline_err: float = 0.0,
) -> RateRatios:
    """Per-port heralded rates and their ratio to a baseline rate.

    Rates are count/time with sqrt(count) Poisson errors (a zero count gets
    the one-sided error 1/time); ratio errors combine the count and baseline
    relative errors in quadrature.
    """
    if live_time_s <= 0:
        raise ValueError("live time must be positive")
    if baseline_rate <= 0:
        raise ValueError("baseline rate must be positive")

    def rate(count):
        n = count / live_time_s
        err = math.sqrt(count) / live_time_s if count > 0 else 1.0 / live_time_s
        return n, err

    n_r, e_r = rate(ref_count)
    n_t, e_t = rate(trans_count)
    b_rel = baseline_err / baseline_rate

    def ratio(n, e):
        r = n / baseline_rate
        rel = math.sqrt((e / n) ** 2 + b_rel**2) if n > 0 else 0.0
        return r, (r * rel if n > 0 else e / baseline_rate)

    r_r, er_r = ratio(n_r, e_r)
    r_t, er_t = ratio(n_t, e_t)
    return RateRatios(n_r, e_r, n_t, e_t, r_r, er_r, r_t, er_t)
