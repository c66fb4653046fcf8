"""Complex symbol/waveform containers, seeded random streams and power units.

Unit conventions used throughout the package:

* symbol and sample amplitudes are in sqrt(mW), so ``|x|**2`` is a power in mW;
* power arguments ``P`` are mean energy per symbol *per polarization* (mW);
* frequencies in GHz, times in ps, distances in km unless a name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ConfigurationError",
    "ShapeError",
    "SymbolSequence",
    "SourceConfig",
    "Waveform",
    "stream",
    "gaussian_sequence",
    "energy_per_symbol",
    "concat",
    "dbm_to_mw",
    "mw_to_dbm",
]


class ConfigurationError(ValueError):
    """Invalid parameter set or inconsistent configuration."""


class ShapeError(ValueError):
    """Arrays or sequences with incompatible shapes."""


def _frozen_array(values, *, dtype=np.complex128) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SymbolSequence:
    """A block of complex symbols, stored as a ``(pol_count, n)`` array.

    One column is one 2D symbol per polarization (a 4D symbol when
    ``pol_count == 2``). The array is copied and made read-only.
    """

    symbols: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.symbols)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2 or arr.shape[0] not in (1, 2):
            raise ShapeError(f"symbols must have shape (n,) or (pol, n) with pol in {{1,2}}, got {arr.shape}")
        if arr.shape[1] < 1:
            raise ShapeError("a sequence needs at least one symbol")
        if not np.all(np.isfinite(arr)):
            raise ValueError("symbols must be finite")
        object.__setattr__(self, "symbols", _frozen_array(arr))

    @property
    def pol_count(self) -> int:
        return self.symbols.shape[0]

    @property
    def n(self) -> int:
        return self.symbols.shape[1]

    def __len__(self) -> int:
        return self.n

    def scaled(self, factor: complex) -> "SymbolSequence":
        return SymbolSequence(self.symbols * factor)

    def window(self, start: int, stop: int) -> "SymbolSequence":
        return SymbolSequence(self.symbols[:, start:stop])


@dataclass(frozen=True)
class SourceConfig:
    """Unbiased i.i.d. circular Gaussian source."""

    power: float
    n: int
    pol_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (self.power > 0 and math.isfinite(self.power)):
            raise ConfigurationError(f"source power must be positive, got {self.power}")
        if self.n < 1:
            raise ConfigurationError(f"source length must be >= 1, got {self.n}")
        if self.pol_count not in (1, 2):
            raise ConfigurationError(f"pol_count must be 1 or 2, got {self.pol_count}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class Waveform:
    """Sampled optical field, ``(pol_count, samples)`` at rate ``sampling_rate`` GHz."""

    samples: np.ndarray
    sampling_rate: float
    center_offset: float = 0.0
    pol_count: int = field(init=False)

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2 or arr.shape[0] not in (1, 2) or arr.shape[1] < 1:
            raise ShapeError(f"bad waveform shape {arr.shape}")
        if not self.sampling_rate > 0:
            raise ConfigurationError("sampling rate must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("waveform samples must be finite")
        object.__setattr__(self, "samples", _frozen_array(arr))
        object.__setattr__(self, "pol_count", arr.shape[0])

    @property
    def size(self) -> int:
        return self.samples.shape[1]

    def power(self) -> float:
        """Mean power per polarization (mW)."""
        return float(np.mean(np.abs(self.samples) ** 2))


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, *key)``.

    Workers derive their streams from the master seed and a task index, so the
    result never depends on scheduling order.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _unit_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def gaussian_sequence(cfg: SourceConfig, *key: int) -> SymbolSequence:
    """Draw ``cfg.n`` i.i.d. circular Gaussian symbols per polarization with power ``cfg.power``."""
    unit = _unit_gaussian(stream(cfg.seed, *key), (cfg.pol_count, cfg.n))
    return SymbolSequence(unit * math.sqrt(cfg.power))


def energy_per_symbol(x: SymbolSequence) -> float:
    """``(1/n) * sum |x_i|**2`` over all polarizations (energy per 2D or 4D symbol)."""
    s = x.symbols
    return float(np.sum(s.real**2 + s.imag**2) / x.n)


def concat(blocks: Sequence[SymbolSequence]) -> SymbolSequence:
    if not blocks:
        raise ShapeError("nothing to concatenate")
    pols = {b.pol_count for b in blocks}
    if len(pols) != 1:
        raise ShapeError(f"mixed polarization counts {sorted(pols)}")
    return SymbolSequence(np.concatenate([b.symbols for b in blocks], axis=1))


def dbm_to_mw(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def mw_to_dbm(p_mw):
    return 10.0 * np.log10(np.asarray(p_mw, dtype=float))
