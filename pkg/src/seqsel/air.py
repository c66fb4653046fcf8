"""Mismatched-decoding AIR estimation with an AWGN metric and selection rate loss.

For an unbiased i.i.d. Gaussian source of power ``P`` and an AWGN metric of
variance ``sigma2`` the auxiliary output law is Gaussian with variance
``P + sigma2``, so the estimate is

    (1/N) [log2 q(y|x) - log2 q_u(y)] - (1/n) log2(N_p / N_a)

in bits per 2D symbol (one polarization) or per 4D symbol (two).
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (ConfigurationError, ShapeError, SymbolSequence, _unit_gaussian, dbm_to_mw, mw_to_dbm,
                   stream)
from .analytic import AnalyticChannelParams, post_selection_nli_variance, synthetic_nli
from .ssfm import (LinkSpec, SsfmSpec, ase_snr, digital_backpropagation, dispersion_compensate,
                   propagate)
from .store import SequenceStore
from .txrx import (EDGE_NONLINEAR, WdmConfig, demodulate_channel, discard_edges, modulate_channel,
                   remove_mean_phase, resample, wdm_demux, wdm_mux)

__all__ = [
    "DecodingMetricParams",
    "AirEstimate",
    "Scenario",
    "SweepPoint",
    "VARIANTS",
    "awgn_log_metric",
    "unbiased_output_log",
    "rate_loss",
    "estimate_air",
    "optimize_metric_variance",
    "run_experiment",
    "transmit_sequence",
    "synthetic_closure",
]

log = logging.getLogger(__name__)

LOG2E = 1.0 / math.log(2.0)
VARIANTS = ("benchmark", "selection", "dbp", "selection+dbp")
SIGMA2_FLOOR = 1e-30


@dataclass(frozen=True)
class DecodingMetricParams:
    sigma2: float
    source_power: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("metric variance must be positive")
        if not self.source_power > 0:
            raise ValueError("source power must be positive")


@dataclass(frozen=True)
class AirEstimate:
    """AIR per symbol of the sequence's dimensionality (2D for one polarization, 4D for two)."""

    air: float
    gross_air: float
    rate_loss: float
    mismatched_entropy_term: float
    n_used: int
    eta_used: float
    pol_count: int = 1
    std_error: float = float("nan")

    @property
    def air_per_2d(self) -> float:
        """Bits per 2D symbol, i.e. spectral efficiency in bit/s/Hz/pol at Nyquist signalling."""
        return self.air / self.pol_count

    @property
    def air_per_4d(self) -> float:
        if self.pol_count != 2:
            raise ValueError("4D rate is defined for dual-polarization sequences only")
        return self.air


def _check_pair(y: SymbolSequence, x: SymbolSequence):
    if y.symbols.shape != x.symbols.shape:
        raise ShapeError(f"input {x.symbols.shape} and output {y.symbols.shape} shapes differ")


def _sq(a: np.ndarray) -> float:
    return float(np.sum(a.real**2 + a.imag**2))


def awgn_log_metric(y: SymbolSequence, x: SymbolSequence, sigma2: float) -> float:
    """``log2 q(y|x)`` of the circular AWGN law, summed over every complex dimension."""
    if not sigma2 > 0:
        raise ValueError("metric variance must be positive")
    _check_pair(y, x)
    dims = y.symbols.size
    return -dims * math.log2(math.pi * sigma2) - _sq(y.symbols - x.symbols) / sigma2 * LOG2E


def unbiased_output_log(y: SymbolSequence, P: float, sigma2: float) -> float:
    """``log2 q_u(y)``: i.i.d. circular Gaussian with variance ``P + sigma2`` per complex dimension."""
    if not (P > 0 and sigma2 > 0):
        raise ValueError("power and metric variance must be positive")
    v = P + sigma2
    return -y.symbols.size * math.log2(math.pi * v) - _sq(y.symbols) / v * LOG2E


def rate_loss(n: int, n_proposed: int, n_accepted: int) -> float:
    if n_accepted < 1 or n_accepted > n_proposed:
        raise ValueError("need 1 <= N_a <= N_p")
    return math.log2(n_proposed / n_accepted) / n


def estimate_air(x: SymbolSequence, y: SymbolSequence, metric: DecodingMetricParams, n: int,
                 n_proposed: int, n_accepted: int) -> AirEstimate:
    _check_pair(y, x)
    if n_accepted == 0:
        raise ValueError("no accepted sequences: rate loss is infinite")
    N = x.n
    cond = awgn_log_metric(y, x, metric.sigma2)
    gross = (cond - unbiased_output_log(y, metric.source_power, metric.sigma2)) / N
    # per-time-index information density, for the Monte Carlo standard error
    s2, v = metric.sigma2, metric.source_power + metric.sigma2
    d = y.symbols - x.symbols
    dens = (LOG2E * (np.abs(y.symbols) ** 2 / v - np.abs(d) ** 2 / s2)).sum(axis=0)
    std_error = float(np.std(dens) / math.sqrt(N)) if N > 1 else float("nan")
    loss = rate_loss(n, n_proposed, n_accepted)
    return AirEstimate(
        air=gross - loss,
        gross_air=gross,
        rate_loss=loss,
        mismatched_entropy_term=-cond / N,
        n_used=N,
        eta_used=n_accepted / n_proposed,
        pol_count=x.pol_count,
        std_error=std_error,
    )


def optimize_metric_variance(x: SymbolSequence, y: SymbolSequence, power: float | None = None, *,
                             floor: float = SIGMA2_FLOOR, tol: float = 1e-10) -> float:
    """Metric variance maximizing the gross AIR estimate.

    Seeded with the mean squared error ``||y - x||^2 / dims`` and refined by a
    golden-section search on ``log(sigma2)`` over a factor-of-four bracket.
    ``power`` is the unbiased source power; by default the mean power of ``x``.
    """
    _check_pair(y, x)
    dims = x.symbols.size
    d2 = _sq(y.symbols - x.symbols) / dims
    y2 = _sq(y.symbols) / dims
    P = _sq(x.symbols) / dims if power is None else power
    if d2 <= floor:
        return floor

    def objective(log_s):
        s = math.exp(log_s)
        return math.log((P + s) / s) + y2 / (P + s) - d2 / s

    lo, hi = math.log(d2 / 4.0), math.log(d2 * 4.0)
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = objective(c), objective(d)
    while hi - lo > tol:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = objective(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = objective(d)
    return max(math.exp(0.5 * (lo + hi)), floor)


# -- experiment orchestration ------------------------------------------------------

SCENARIOS = ("single_channel_1pol", "wdm_2pol", "wdm_2pol_subcarrier")


@dataclass(frozen=True)
class Scenario:
    """Transmission experiment: one AIR estimate per (variant, launch power).

    Launch power is per WDM channel, summed over polarizations; with a store
    the same accepted blocks are rescaled to every power of the sweep.
    """

    kind: str = "single_channel_1pol"
    link: LinkSpec = LinkSpec()
    ssfm: SsfmSpec = SsfmSpec(step_size=500.0, sampling_rate=100.0, noise=True)
    dbp_ssfm: SsfmSpec = SsfmSpec(step_size=500.0, sampling_rate=100.0)
    wdm: WdmConfig = WdmConfig(num_channels=1)
    n_symbols: int = 2**16
    powers_dbm: tuple[float, ...] = (-9.0,)
    variants: tuple[str, ...] = ("benchmark",)
    seed: int = 0
    edge: int = EDGE_NONLINEAR

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.kind!r}")
        if not self.powers_dbm:
            raise ConfigurationError("empty power sweep")
        bad = set(self.variants) - set(VARIANTS)
        if bad or not self.variants:
            raise ConfigurationError(f"unknown variants {sorted(bad)}")
        if self.kind == "single_channel_1pol" and self.wdm.num_channels != 1:
            raise ConfigurationError("single-channel scenario needs num_channels = 1")
        if (self.kind == "wdm_2pol_subcarrier") != (self.wdm.subcarriers_per_channel == 4):
            raise ConfigurationError("subcarrier scenario needs 4 subcarriers per channel (and only it)")
        if self.n_symbols % self.lanes:
            raise ConfigurationError("n_symbols must be divisible by the number of subcarriers")

    @property
    def pol_count(self) -> int:
        return 1 if self.kind == "single_channel_1pol" else 2

    @property
    def lanes(self) -> int:
        return self.wdm.subcarriers_per_channel

    def lane_power(self, p_dbm: float) -> float:
        """Symbol power (mW) of one lane and polarization at launch power ``p_dbm``."""
        return float(dbm_to_mw(p_dbm)) / self.pol_count / self.lanes

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class SweepPoint:
    variant: str
    power_dbm: float
    se: float
    gross_air: float
    rate_loss: float
    sigma2: float
    eta: float
    n: int
    seed: int
    tx_power_dbm: float
    linear_capacity: float
    std_error: float


def transmit_sequence(store: SequenceStore | None, lanes: int, pol: int, n_symbols: int, power: float,
                      rng: np.random.Generator) -> list[SymbolSequence]:
    """Symbol lanes of one channel: unbiased Gaussian, or store blocks in random order.

    Store blocks are rescaled from the selection power to ``power`` and
    concatenated following fresh random permutations until ``n_symbols`` are
    filled (each block supplies ``n / lanes`` symbols to every lane).
    """
    per_lane = n_symbols // lanes
    if store is None:
        unit = _unit_gaussian(rng, (lanes, pol, per_lane))
        return [SymbolSequence(u * math.sqrt(power)) for u in unit]
    if store.pol_count != pol:
        raise ConfigurationError(f"store has {store.pol_count} polarizations, scenario needs {pol}")
    if store.n % lanes or n_symbols % store.n:
        raise ConfigurationError(f"store block length {store.n} does not tile {n_symbols} symbols on {lanes} lanes")
    blocks = store.as_array()
    needed = n_symbols // store.n
    order = np.concatenate([rng.permutation(len(blocks)) for _ in range(-(-needed // len(blocks)))])[:needed]
    scale = math.sqrt(power / store.selection_power)
    chosen = blocks[order] * scale                      # (needed, pol, n)
    nl = store.n // lanes
    lane_arr = chosen.reshape(needed, pol, lanes, nl).transpose(2, 1, 0, 3).reshape(lanes, pol, per_lane)
    return [SymbolSequence(a) for a in lane_arr]


def _derived_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, dtype=np.uint64)[0])


def _receive(rx, scenario: Scenario, dbp: bool) -> list[SymbolSequence]:
    center = wdm_demux(rx, 0.0, scenario.wdm.channel_spacing)
    if dbp:
        r = resample(center, scenario.dbp_ssfm.sampling_rate)
        r = digital_backpropagation(r, scenario.link, scenario.dbp_ssfm)
    else:
        r = dispersion_compensate(center, scenario.link)
    return demodulate_channel(r, scenario.wdm, 0.0)


def _join(lanes: Sequence[SymbolSequence], edge: int) -> SymbolSequence:
    return SymbolSequence(np.concatenate([discard_edges(s, edge).symbols for s in lanes], axis=1))


def _power_point(scenario: Scenario, store: SequenceStore | None, index: int) -> list[SweepPoint]:
    p_dbm = scenario.powers_dbm[index]
    p_lane = scenario.lane_power(p_dbm)
    pol, lanes = scenario.pol_count, scenario.lanes
    fs = scenario.ssfm.sampling_rate
    offsets = scenario.wdm.channel_offsets()
    center = offsets.index(0.0)
    edge = -(-scenario.edge // lanes)
    snr = ase_snr(p_lane * lanes, scenario.link, scenario.wdm.symbol_rate)
    c_lin = math.log2(1.0 + snr)
    noise_seed = _derived_seed(scenario.seed, 3)
    points = []
    sources = []
    if {"benchmark", "dbp"} & set(scenario.variants):
        sources.append(("unbiased", None))
    if {"selection", "selection+dbp"} & set(scenario.variants):
        if store is None:
            raise ConfigurationError("selection variants need a sequence store")
        sources.append(("selected", store))
    for label, src in sources:
        # the same symbol realizations are used at every power of the sweep
        key = 1 if src is None else 2
        chans = [transmit_sequence(src, lanes, pol, scenario.n_symbols, p_lane, stream(scenario.seed, key, c))
                 for c in range(len(offsets))]
        tx = wdm_mux([modulate_channel(ch, fs, scenario.wdm, off) for ch, off in zip(chans, offsets)])
        rx = propagate(tx, scenario.link, scenario.ssfm.replace(noise=scenario.ssfm.noise, seed=noise_seed))
        x = _join(chans[center], edge)
        if src is None:
            n, n_p, n_a = 1, 1, 1
        else:
            n, n_p, n_a = src.n, src.n_proposed, src.n_accepted
        for dbp in (False, True):
            variant = ("benchmark" if src is None else "selection") + ("+dbp" if dbp else "")
            variant = "dbp" if variant == "benchmark+dbp" else variant
            if variant not in scenario.variants:
                continue
            y, _ = remove_mean_phase(_join(_receive(rx, scenario, dbp), edge), x)
            sigma2 = optimize_metric_variance(x, y, p_lane)
            est = estimate_air(x, y, DecodingMetricParams(sigma2, p_lane), n, n_p, n_a)
            points.append(SweepPoint(
                variant=variant, power_dbm=float(p_dbm), se=est.air_per_2d,
                gross_air=est.gross_air / pol, rate_loss=est.rate_loss / pol, sigma2=sigma2,
                eta=est.eta_used, n=n, seed=scenario.seed,
                tx_power_dbm=float(mw_to_dbm(np.mean(np.abs(x.symbols) ** 2) * pol * lanes)), linear_capacity=c_lin,
                std_error=est.std_error / pol))
            log.info("%s at %.2f dBm: SE %.4f", variant, p_dbm, est.air_per_2d)
    return points


def run_experiment(scenario: Scenario, store: SequenceStore | None = None, *, workers: int = 1) -> list[SweepPoint]:
    """Transmit, propagate, receive and estimate for every power and variant.

    Results are ordered by variant (in ``VARIANTS`` order) then by power and
    do not depend on ``workers``.
    """
    indices = range(len(scenario.powers_dbm))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_power_point, [scenario] * len(indices), [store] * len(indices), indices))
    else:
        chunks = [_power_point(scenario, store, i) for i in indices]
    points = [p for chunk in chunks for p in chunk]
    rank = {v: i for i, v in enumerate(VARIANTS)}
    return sorted(points, key=lambda p: (rank[p.variant], scenario.powers_dbm.index(p.power_dbm)))


def synthetic_closure(P: float, gamma_lambda: float, params: AnalyticChannelParams, n_symbols: int, seed: int, *,
                      batch: int = 20000, optimize: bool = True) -> AirEstimate:
    """Selection followed by AIR estimation over the synthetic block-memoryless channel.

    Unbiased blocks at power ``P`` are proposed in order; each gets its NLI
    from :func:`synthetic_nli` (at the nominal power ``P``) and is accepted when
    the NLI energy per symbol is below ``gamma_lambda``. Proposals stop at the
    block that completes ``n_symbols`` accepted symbols; ``N_p`` counts them
    all. Accepted blocks keep the NLI they were scored with and receive fresh
    noise of variance ``sigma_w2``.
    """
    n = params.n
    need = -(-n_symbols // n)
    kept_x, kept_y = [], []
    n_p = n_a = 0
    b = 0
    while n_a < need:
        x = _unit_gaussian(stream(seed, 0, b), (batch, 1, n)) * math.sqrt(P)
        xi = synthetic_nli(x, params, _derived_seed(seed, 1, b), power=P)
        cost = (xi.real**2 + xi.imag**2).sum(axis=(1, 2)) / n
        idx = np.flatnonzero(cost < gamma_lambda)[: need - n_a]
        if n_a + idx.size == need:
            n_p += int(idx[-1]) + 1
        else:
            n_p += batch
        n_a += idx.size
        kept_x.append(x[idx])
        kept_y.append(x[idx] + xi[idx])
        b += 1
    x = np.concatenate(kept_x).transpose(1, 0, 2).reshape(1, need * n)
    w = _unit_gaussian(stream(seed, 2), x.shape) * math.sqrt(params.sigma_w2)
    y = np.concatenate(kept_y).transpose(1, 0, 2).reshape(1, need * n) + w
    xs, ys = SymbolSequence(x), SymbolSequence(y)
    if optimize:
        sigma2 = optimize_metric_variance(xs, ys, P)
    else:
        sigma2 = params.sigma_w2 + post_selection_nli_variance(gamma_lambda, P, params)
    return estimate_air(xs, ys, DecodingMetricParams(sigma2, P), n, n_p, n_a)
