"""Ideal Nyquist transmitter/receiver: brick-wall D/A and A/D, WDM (de)multiplexing.

Every filter is a rectangular mask applied to the FFT of the whole burst, so
all operations are circular, consistent with the periodic SSFM boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .core import ConfigurationError, ShapeError, SymbolSequence, Waveform

__all__ = [
    "EDGE_LINEAR",
    "EDGE_NONLINEAR",
    "AliasingError",
    "WdmConfig",
    "modulate",
    "demodulate",
    "wdm_mux",
    "wdm_demux",
    "remove_mean_phase",
    "resample",
    "modulate_channel",
    "demodulate_channel",
    "discard_edges",
]

log = logging.getLogger(__name__)

EDGE_LINEAR = 32
EDGE_NONLINEAR = 256


class AliasingError(ValueError):
    """Signal content outside the target Nyquist zone."""


@dataclass(frozen=True)
class WdmConfig:
    num_channels: int = 5
    symbol_rate: float = 50.0        # GBd
    channel_spacing: float = 50.0    # GHz
    subcarriers_per_channel: int = 1
    subcarrier_rate: float = 12.5    # GBd
    subcarrier_spacing: float = 12.5  # GHz

    def __post_init__(self):
        if self.num_channels < 1 or self.num_channels % 2 == 0:
            raise ConfigurationError("number of WDM channels must be odd (the center one is under test)")
        if self.channel_spacing < self.symbol_rate:
            raise ConfigurationError("channel spacing below the symbol rate")
        if self.subcarriers_per_channel not in (1, 4):
            raise ConfigurationError("subcarriers per channel must be 1 or 4")
        if self.subcarriers_per_channel == 4:
            if not math.isclose(4 * self.subcarrier_spacing, self.channel_spacing):
                raise ConfigurationError("four subcarriers must tile the channel spacing")
            if self.subcarrier_spacing < self.subcarrier_rate:
                raise ConfigurationError("subcarrier spacing below the subcarrier rate")

    def channel_offsets(self) -> list[float]:
        half = self.num_channels // 2
        return [k * self.channel_spacing for k in range(-half, half + 1)]

    def subcarrier_offsets(self) -> list[float]:
        if self.subcarriers_per_channel == 1:
            return [0.0]
        return [(k - 1.5) * self.subcarrier_spacing for k in range(4)]

    @property
    def lane_rate(self) -> float:
        """Symbol rate of one modulated lane (channel or subcarrier)."""
        return self.symbol_rate if self.subcarriers_per_channel == 1 else self.subcarrier_rate


def _oversampling(fs: float, rate: float) -> int:
    ratio = fs / rate
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-9 * ratio:
        raise ConfigurationError(f"sampling rate {fs} GHz is not an integer multiple of {rate} GBd")
    return k


def _band_bins(size: int, width_bins: int) -> np.ndarray:
    """Indices (FFT order) of the centered band of ``width_bins`` bins."""
    lo = -(width_bins // 2)
    return np.arange(lo, lo + width_bins) % size


def _shift(x: np.ndarray, freq: float, fs: float) -> np.ndarray:
    if freq == 0.0:
        return x
    t = np.arange(x.shape[-1])
    return x * np.exp(2j * np.pi * freq / fs * t)


def _upsample(spec_small: np.ndarray, big: int) -> np.ndarray:
    """Zero-pad a spectrum: the bins of the half-open band [-n/2, n/2) keep their frequencies."""
    npol, small = spec_small.shape
    out = np.zeros((npol, big), dtype=np.complex128)
    idx = _band_bins(small, small)
    out[:, _band_bins(big, small)] = spec_small[:, idx]
    return out


def _downsample(spec_big: np.ndarray, small: int) -> np.ndarray:
    """Keep the half-open band [-small/2, small/2) of a larger spectrum."""
    npol, big = spec_big.shape
    out = np.empty((npol, small), dtype=np.complex128)
    out[:, _band_bins(small, small)] = spec_big[:, _band_bins(big, small)]
    return out


def modulate(x: SymbolSequence, fs: float, symbol_rate: float, center_offset: float = 0.0) -> Waveform:
    """Ideal sinc (brick-wall) interpolation of ``x`` to ``fs`` GHz, shifted by ``center_offset`` GHz.

    Samples at the symbol instants equal the symbols, so the waveform power per
    polarization equals the symbol power.
    """
    k = _oversampling(fs, symbol_rate)
    spec = sfft.fft(x.symbols, axis=-1)
    wave = sfft.ifft(_upsample(spec, x.n * k), axis=-1) * k
    return Waveform(_shift(wave, center_offset, fs), fs, center_offset)


def demodulate(w: Waveform, symbol_rate: float, center_offset: float = 0.0) -> SymbolSequence:
    """Shift ``center_offset`` to baseband, keep a ``symbol_rate`` wide band, sample at the symbol rate."""
    k = _oversampling(w.sampling_rate, symbol_rate)
    if w.size % k:
        raise ShapeError(f"{w.size} samples do not hold an integer number of symbols at {k} samples/symbol")
    base = _shift(np.asarray(w.samples), -center_offset, w.sampling_rate)
    spec = sfft.fft(base, axis=-1)
    return SymbolSequence(sfft.ifft(_downsample(spec, w.size // k), axis=-1) / k)


def wdm_mux(channels: Sequence[Waveform]) -> Waveform:
    if not channels:
        raise ShapeError("no channels to multiplex")
    first = channels[0]
    for w in channels[1:]:
        if w.samples.shape != first.samples.shape or not math.isclose(w.sampling_rate, first.sampling_rate):
            raise ShapeError("channels must share shape and sampling rate")
    offsets = [w.center_offset for w in channels]
    if len(set(offsets)) != len(offsets):
        raise ShapeError("channels must have distinct center offsets")
    total = np.sum([w.samples for w in channels], axis=0)
    return Waveform(total, first.sampling_rate, 0.0)


def wdm_demux(w: Waveform, center_offset: float, bandwidth: float) -> Waveform:
    """Rectangular band-pass of ``bandwidth`` GHz around ``center_offset``; stays at rate ``w.sampling_rate``.

    The pass band is the half-open interval [offset - B/2, offset + B/2), so
    Nyquist-packed channels tile the spectrum without shared bins.
    """
    size = w.size
    df = w.sampling_rate / size
    width = round(bandwidth / df)
    center = round(center_offset / df)
    mask = np.zeros(size)
    mask[(center + np.arange(-(width // 2), width - width // 2)) % size] = 1.0
    out = sfft.ifft(sfft.fft(w.samples, axis=-1) * mask, axis=-1)
    return Waveform(out, w.sampling_rate, center_offset)


def remove_mean_phase(y: SymbolSequence, x: SymbolSequence) -> tuple[SymbolSequence, float | None]:
    """Remove the constant phase ``arg(sum y conj(x))`` (joint over polarizations).

    Returns the rotated sequence and the estimated phase; the phase is ``None``
    (and ``y`` is returned unchanged) when the cross-correlation vanishes.
    """
    if y.symbols.shape != x.symbols.shape:
        raise ShapeError("phase reference must match the received sequence")
    corr = np.vdot(x.symbols, y.symbols)
    if corr == 0:
        log.warning("zero cross-correlation: mean phase left uncorrected")
        return y, None
    theta = float(np.angle(corr))
    return SymbolSequence(y.symbols * np.exp(-1j * theta)), theta


def resample(w: Waveform, new_fs: float, *, tol: float = 1e-9) -> Waveform:
    """Band-limited rate change by spectral zero padding or truncation.

    Downsampling refuses to drop spectral content above ``tol`` times the signal energy.
    """
    size = w.size
    new_size_f = size * new_fs / w.sampling_rate
    new_size = round(new_size_f)
    if abs(new_size - new_size_f) > 1e-9 * new_size_f:
        raise ConfigurationError("rate ratio does not give an integer sample count")
    spec = sfft.fft(w.samples, axis=-1)
    if new_size < size:
        keep = np.zeros(size, dtype=bool)
        keep[_band_bins(size, new_size)] = True
        lost = float(np.sum(np.abs(spec[:, ~keep]) ** 2))
        total = float(np.sum(np.abs(spec) ** 2))
        if total > 0 and lost > tol * total:
            raise AliasingError(f"downsampling to {new_fs} GHz would drop {lost / total:.3g} of the energy")
        out = _downsample(spec, new_size)
    else:
        out = _upsample(spec, new_size)
    samples = sfft.ifft(out, axis=-1) * (new_size / size)
    return Waveform(samples, new_fs, w.center_offset)


def modulate_channel(lanes: Sequence[SymbolSequence], fs: float, cfg: WdmConfig, channel_offset: float) -> Waveform:
    """Modulate one WDM channel from one lane (single carrier) or four lanes (subcarriers)."""
    offsets = cfg.subcarrier_offsets()
    if len(lanes) != len(offsets):
        raise ShapeError(f"expected {len(offsets)} symbol lanes, got {len(lanes)}")
    waves = [modulate(x, fs, cfg.lane_rate, channel_offset + off) for x, off in zip(lanes, offsets)]
    if len(waves) == 1:
        return waves[0]
    total = np.sum([wv.samples for wv in waves], axis=0)
    return Waveform(total, fs, channel_offset)


def demodulate_channel(w: Waveform, cfg: WdmConfig, channel_offset: float) -> list[SymbolSequence]:
    return [demodulate(w, cfg.lane_rate, channel_offset + off) for off in cfg.subcarrier_offsets()]


def discard_edges(x: SymbolSequence, edge: int) -> SymbolSequence:
    if 2 * edge >= x.n:
        raise ShapeError(f"cannot discard {edge} symbols from each end of {x.n}")
    return x.window(edge, x.n - edge) if edge else x
