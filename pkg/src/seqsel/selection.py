"""Sequence selection: cost functions, thresholds and the rejection-sampling source.

Two burst-based procedures are provided on top of the generic sampler:

* :func:`fast_select` propagates one long unbiased burst and scores every
  sliding window of ``n`` symbols with the NLI energy it received;
* :func:`averaged_select` scores disjoint blocks separated by guard symbols
  and averages the score over ``n_it`` redraws of the guards.

Costs are always evaluated on a single, noiseless, dispersion-compensated
channel after removing the mean nonlinear phase rotation of the burst.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import kernels
from .core import (ConfigurationError, ShapeError, SourceConfig, SymbolSequence, _unit_gaussian,
                   energy_per_symbol, stream)
from .ssfm import LinkSpec, SsfmSpec, dispersion_compensate, propagate
from .store import SequenceStore
from .txrx import WdmConfig, demodulate_channel, modulate_channel, remove_mean_phase

__all__ = [
    "StarvationError",
    "CostKind",
    "CostChannel",
    "CostFunctionSpec",
    "SelectionResult",
    "cost_energy",
    "cost_memoryless",
    "threshold_from_quantile",
    "RejectionSampler",
    "fast_select",
    "averaged_select",
    "averaged_block_costs",
    "window_costs",
]

log = logging.getLogger(__name__)


class StarvationError(RuntimeError):
    """The sampler hit its proposal cap without accepting anything."""


class CostKind(enum.Enum):
    EnergyPerSymbol = "energy"
    MemorylessNoiseless = "memoryless"
    AveragedConditional = "averaged"


@dataclass(frozen=True)
class CostChannel:
    """Single-channel noiseless link used to score candidate sequences."""

    link: LinkSpec = LinkSpec()
    ssfm: SsfmSpec = SsfmSpec(step_size=500.0, sampling_rate=100.0)
    symbol_rate: float = 50.0
    pol_count: int = 1
    subcarriers: int = 1

    def __post_init__(self):
        if self.pol_count not in (1, 2):
            raise ConfigurationError("pol_count must be 1 or 2")
        if self.subcarriers not in (1, 4):
            raise ConfigurationError("subcarriers must be 1 or 4")

    @property
    def wdm(self) -> WdmConfig:
        return WdmConfig(num_channels=1, symbol_rate=self.symbol_rate, channel_spacing=self.symbol_rate,
                         subcarriers_per_channel=self.subcarriers, subcarrier_rate=self.symbol_rate / 4,
                         subcarrier_spacing=self.symbol_rate / 4)

    def noiseless_output(self, lanes: Sequence[SymbolSequence]) -> list[SymbolSequence]:
        """Transmit ``lanes`` (one per subcarrier), propagate without noise, compensate dispersion.

        The common phase rotation is estimated jointly over all lanes and removed.
        """
        cfg = self.wdm
        w = modulate_channel(lanes, self.ssfm.sampling_rate, cfg, 0.0)
        w = dispersion_compensate(propagate(w, self.link, self.ssfm.replace(noise=False)), self.link)
        out = demodulate_channel(w, cfg, 0.0)
        joint_y = SymbolSequence(np.concatenate([y.symbols for y in out], axis=1))
        joint_x = SymbolSequence(np.concatenate([x.symbols for x in lanes], axis=1))
        _, theta = remove_mean_phase(joint_y, joint_x)
        if theta is None:
            return out
        rot = np.exp(-1j * theta)
        return [SymbolSequence(y.symbols * rot) for y in out]


@dataclass(frozen=True)
class CostFunctionSpec:
    kind: CostKind = CostKind.MemorylessNoiseless
    n_guard: int = 0
    n_it: int = 1
    channel: CostChannel = CostChannel()

    def __post_init__(self):
        if self.n_guard < 0 or self.n_it < 1:
            raise ConfigurationError("need n_guard >= 0 and n_it >= 1")


@dataclass
class SelectionResult:
    accepted: list[SymbolSequence]
    gamma_lambda: float
    n_proposed: int
    n_accepted: int
    selection_power: float
    cost_samples: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    accepted_costs: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if self.n_accepted > self.n_proposed:
            raise ValueError("more acceptances than proposals")
        if self.n_accepted != len(self.accepted):
            raise ValueError("acceptance count does not match the accepted list")

    @property
    def eta(self) -> float:
        return self.n_accepted / self.n_proposed

    @property
    def rate_loss(self) -> float:
        """Rate loss ``log2(N_p / N_a) / n`` in bits per (2D or 4D) symbol."""
        return math.log2(self.n_proposed / self.n_accepted) / self.accepted[0].n

    def to_store(self) -> SequenceStore:
        return SequenceStore(list(self.accepted), self.selection_power, self.gamma_lambda,
                             self.n_proposed, self.n_accepted)


# -- cost functions ------------------------------------------------------------

def cost_energy(x: SymbolSequence) -> float:
    """Energy per symbol of the sequence."""
    return energy_per_symbol(x)


def cost_memoryless(x: SymbolSequence, y_hat: SymbolSequence) -> float:
    """``||y_hat - x||^2 / n``: NLI energy per symbol received by ``x`` on the noiseless channel."""
    if x.symbols.shape != y_hat.symbols.shape:
        raise ShapeError("noiseless output must match the input shape")
    d = y_hat.symbols - x.symbols
    return float(np.sum(d.real**2 + d.imag**2) / x.n)


def window_costs(x: SymbolSequence, y_hat: SymbolSequence, n: int) -> np.ndarray:
    """:func:`cost_memoryless` of every sliding window of length ``n`` (``len - n + 1`` values)."""
    if x.symbols.shape != y_hat.symbols.shape:
        raise ShapeError("noiseless output must match the input shape")
    d = np.ascontiguousarray(y_hat.symbols - x.symbols)
    return kernels.window_energy(d, n) / n


def threshold_from_quantile(costs, eta_target: float) -> float:
    """Threshold accepting (with strict ``<``) the ``ceil(eta * N_p)`` cheapest proposals.

    Returns the ``ceil(eta * N_p) + 1``-th smallest cost, so the realized
    acceptance is the target rounded up to a whole proposal; ties at the
    threshold are rejected.
    When every proposal must pass the threshold is infinite.
    """
    c = np.sort(np.asarray(costs, dtype=float))
    if c.size == 0:
        raise ValueError("no costs to threshold")
    if not 0 < eta_target <= 1:
        raise ValueError("target acceptance rate must lie in (0, 1]")
    k = math.ceil(round(eta_target * c.size, 9))
    if k >= c.size:
        return math.inf
    gamma = float(c[k])
    if np.count_nonzero(c < gamma) == 0:
        log.warning("degenerate costs: threshold %g accepts nothing", gamma)
    return gamma


# -- generic rejection sampler -------------------------------------------------------

class RejectionSampler:
    """Optimized source: unbiased Gaussian proposals filtered by ``cost < gamma_lambda``.

    ``cost(blocks, batch_index)`` scores a ``(batch, pol, n)`` array of
    proposals; ``batch_index`` identifies the batch so stochastic cost models
    can be made deterministic. Iterating yields accepted blocks in proposal
    order; ``n_proposed`` counts every proposal up to the last one yielded.
    """

    def __init__(self, source: SourceConfig, cost: Callable[[np.ndarray, int], np.ndarray],
                 gamma_lambda: float, *, batch: int = 4096, max_proposals: int = 10**9):
        if not gamma_lambda > 0:
            raise ValueError("threshold must be positive")
        self.source = source
        self.cost = cost
        self.gamma_lambda = gamma_lambda
        self.batch = batch
        self.max_proposals = max_proposals
        self.n_proposed = 0
        self.n_accepted = 0

    @property
    def eta(self) -> float:
        return self.n_accepted / self.n_proposed if self.n_proposed else float("nan")

    def proposals(self, index: int) -> np.ndarray:
        """Batch ``index`` of unbiased proposals, ``(batch, pol, n)``."""
        src = self.source
        unit = _unit_gaussian(stream(src.seed, index), (self.batch, src.pol_count, src.n))
        return unit * math.sqrt(src.power)

    def __iter__(self) -> Iterator[SymbolSequence]:
        index = 0
        while True:
            blocks = self.proposals(index)
            costs = np.asarray(self.cost(blocks, index), dtype=float)
            if costs.shape != (len(blocks),):
                raise ShapeError("cost callback must return one value per proposal")
            for b, c in zip(blocks, costs):
                self.n_proposed += 1
                if c < self.gamma_lambda:
                    self.n_accepted += 1
                    yield SymbolSequence(b)
                elif self.n_accepted == 0 and self.n_proposed >= self.max_proposals:
                    raise StarvationError(
                        f"no acceptance after {self.n_proposed} proposals at threshold {self.gamma_lambda:g}")
            index += 1

    def take(self, count: int) -> list[SymbolSequence]:
        out = []
        for blk in self:
            out.append(blk)
            if len(out) == count:
                break
        return out


# -- burst-based procedures --------------------------------------------------------

def _draw(seed: int, key: tuple, pol: int, n: int, power: float) -> SymbolSequence:
    return SymbolSequence(_unit_gaussian(stream(seed, *key), (pol, n)) * math.sqrt(power))


def _bursts_needed(target_accepted: int, eta_target: float, per_burst: int) -> int:
    return max(1, math.ceil(target_accepted / (eta_target * per_burst)))


def _finish(blocks: list[SymbolSequence], costs: np.ndarray, eta_target, gamma_lambda,
            selection_power: float) -> SelectionResult:
    if gamma_lambda is None:
        gamma_lambda = threshold_from_quantile(costs, eta_target)
    keep = np.flatnonzero(costs < gamma_lambda)
    return SelectionResult(
        accepted=[blocks[i] for i in keep],
        gamma_lambda=float(gamma_lambda),
        n_proposed=int(costs.size),
        n_accepted=int(keep.size),
        selection_power=selection_power,
        cost_samples=costs,
        accepted_costs=costs[keep],
    )


def _check_target(eta_target, gamma_lambda):
    if (eta_target is None) == (gamma_lambda is None):
        raise ConfigurationError("give exactly one of eta_target and gamma_lambda")


def fast_select(burst_length: int, n: int, selection_power: float, channel: CostChannel, *,
                eta_target: float | None = None, gamma_lambda: float | None = None,
                target_accepted: int = 1, seed: int = 0, max_bursts: int = 1000) -> SelectionResult:
    """Sliding-window selection on noiselessly propagated unbiased bursts.

    Each burst of ``burst_length`` symbols gives ``burst_length - n + 1``
    overlapping proposals. With ``eta_target`` the number of bursts is fixed
    up front so that about ``target_accepted`` windows pass, and the threshold
    is the quantile of the complete cost list. With ``gamma_lambda`` bursts
    are added until ``target_accepted`` windows pass.
    """
    _check_target(eta_target, gamma_lambda)
    if burst_length < n:
        raise ConfigurationError("burst shorter than the block length")
    if channel.subcarriers != 1:
        raise ConfigurationError("sliding-window selection runs on a single carrier")
    per_burst = burst_length - n + 1
    bursts: list[SymbolSequence] = []
    costs: list[np.ndarray] = []

    def run(b):
        x = _draw(seed, (b,), channel.pol_count, burst_length, selection_power)
        (y,) = channel.noiseless_output([x])
        bursts.append(x)
        costs.append(window_costs(x, y, n))
        log.info("burst %d: %d proposals", b, per_burst)

    if eta_target is not None:
        for b in range(_bursts_needed(target_accepted, eta_target, per_burst)):
            run(b)
    else:
        accepted = 0
        for b in range(max_bursts):
            run(b)
            accepted += int(np.count_nonzero(costs[-1] < gamma_lambda))
            if accepted >= target_accepted:
                break
        else:
            if accepted == 0:
                raise StarvationError(f"no window below {gamma_lambda:g} in {max_bursts} bursts")
    all_costs = np.concatenate(costs)
    windows = _LazyWindows(bursts, n, per_burst)
    return _finish(windows, all_costs, eta_target, gamma_lambda, selection_power)


class _LazyWindows:
    """Index proposals across bursts without materializing every window."""

    def __init__(self, bursts, n, per_burst):
        self.bursts, self.n, self.per_burst = bursts, n, per_burst

    def __getitem__(self, i):
        b, start = divmod(int(i), self.per_burst)
        return self.bursts[b].window(start, start + self.n)


def _layout(n: int, n_guard: int, lanes: int) -> tuple[int, int]:
    if n % lanes or n_guard % lanes:
        raise ConfigurationError(f"block and guard lengths must be divisible by {lanes} subcarriers")
    return n // lanes, n_guard // lanes


def averaged_block_costs(blocks: np.ndarray, n_guard: int, n_it: int, selection_power: float,
                         channel: CostChannel, seed: int, burst_index: int = 0) -> np.ndarray:
    """Guard-averaged cost of each block in one burst.

    ``blocks`` is ``(N_p, pol, n)``; on each of the ``n_it`` iterations the
    blocks stay fixed and fresh guard symbols (unbiased, at the selection
    power) are drawn between them. Subcarrier blocks are stored lane-major
    (``n / 4`` symbols per lane) and use ``n_guard / 4`` guards per lane.
    """
    n_p, pol, n = blocks.shape
    lanes = channel.subcarriers
    nl, gl = _layout(n, n_guard, lanes)
    period = nl + gl
    # (lane, pol, block, position-in-block)
    lane_blocks = blocks.reshape(n_p, pol, lanes, nl).transpose(2, 1, 0, 3)
    total = np.zeros(n_p)
    for it in range(n_it):
        burst = np.empty((lanes, pol, n_p, period), dtype=np.complex128)
        burst[..., :nl] = lane_blocks
        if gl:
            g = _unit_gaussian(stream(seed, burst_index, 1 + it), (lanes, pol, n_p, gl))
            burst[..., nl:] = g * math.sqrt(selection_power)
        xs = [SymbolSequence(burst[k].reshape(pol, n_p * period)) for k in range(lanes)]
        ys = channel.noiseless_output(xs)
        for k in range(lanes):
            d = (ys[k].symbols - xs[k].symbols).reshape(pol, n_p, period)[..., :nl]
            total += (d.real**2 + d.imag**2).sum(axis=(0, 2))
    return total / (n_it * n)


def averaged_select(burst_length: int, n: int, n_guard: int, n_it: int, selection_power: float,
                    channel: CostChannel, *, eta_target: float | None = None,
                    gamma_lambda: float | None = None, target_accepted: int = 1, seed: int = 0,
                    max_bursts: int = 1000) -> SelectionResult:
    """Disjoint-block selection with costs averaged over redrawn guard symbols."""
    _check_target(eta_target, gamma_lambda)
    if n_it < 1 or n_guard < 0:
        raise ConfigurationError("need n_it >= 1 and n_guard >= 0")
    if burst_length % (n + n_guard):
        raise ConfigurationError("burst length must be a multiple of n + n_guard")
    per_burst = burst_length // (n + n_guard)
    pol = channel.pol_count
    blocks: list[SymbolSequence] = []
    costs: list[np.ndarray] = []

    def run(b):
        unit = _unit_gaussian(stream(seed, b, 0), (per_burst, pol, n))
        x = unit * math.sqrt(selection_power)
        costs.append(averaged_block_costs(x, n_guard, n_it, selection_power, channel, seed, b))
        blocks.extend(SymbolSequence(blk) for blk in x)

    if eta_target is not None:
        for b in range(_bursts_needed(target_accepted, eta_target, per_burst)):
            run(b)
    else:
        accepted = 0
        for b in range(max_bursts):
            run(b)
            accepted += int(np.count_nonzero(costs[-1] < gamma_lambda))
            if accepted >= target_accepted:
                break
        else:
            if accepted == 0:
                raise StarvationError(f"no block below {gamma_lambda:g} in {max_bursts} bursts")
    return _finish(blocks, np.concatenate(costs), eta_target, gamma_lambda, selection_power)
