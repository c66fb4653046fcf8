"""Binary sequence store.

Layout (all little endian)::

    magic      4 bytes   b"SEQS" (or b"WAVE" for waveform dumps)
    version    uint16    1
    pol_count  uint8
    n          uint32    symbols per block and polarization
    blocks     uint32
    power      float64   selection power (mW per polarization)
    gamma      float64   selection threshold
    n_p        uint64    proposals tested
    n_a        uint64    proposals accepted
    [rate      float64   sampling rate in GHz, WAVE only]
    payload    float64   (re, im) pairs, block by block, polarization-major
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

from .core import SymbolSequence, Waveform

__all__ = ["StoreFormatError", "SequenceStore", "write_store", "read_store", "write_waveform", "read_waveform"]

SEQS_MAGIC = b"SEQS"
WAVE_MAGIC = b"WAVE"
VERSION = 1
_HEADER = struct.Struct("<4sHBIIddQQ")
_RATE = struct.Struct("<d")


class StoreFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SequenceStore:
    blocks: List[SymbolSequence]
    selection_power: float
    gamma_lambda: float
    n_proposed: int
    n_accepted: int

    @property
    def pol_count(self) -> int:
        return self.blocks[0].pol_count

    @property
    def n(self) -> int:
        return self.blocks[0].n

    @property
    def eta(self) -> float:
        return self.n_accepted / self.n_proposed

    def as_array(self) -> np.ndarray:
        """``(blocks, pol, n)`` complex array."""
        return np.stack([b.symbols for b in self.blocks])


def _pack(magic, arr, power, gamma, n_p, n_a, extra=b""):
    blocks, pol, n = arr.shape
    head = _HEADER.pack(magic, VERSION, pol, n, blocks, float(power), float(gamma), int(n_p), int(n_a))
    payload = np.ascontiguousarray(arr, dtype="<c16").tobytes()
    return head + extra + payload


def _unpack(data: bytes, magic: bytes):
    if len(data) < _HEADER.size:
        raise StoreFormatError("truncated header")
    got, version, pol, n, blocks, power, gamma, n_p, n_a = _HEADER.unpack_from(data)
    if got != magic:
        raise StoreFormatError(f"bad magic {got!r}, expected {magic!r}")
    if version != VERSION:
        raise StoreFormatError(f"unsupported store version {version}")
    offset = _HEADER.size
    rate = None
    if magic == WAVE_MAGIC:
        (rate,) = _RATE.unpack_from(data, offset)
        offset += _RATE.size
    expected = blocks * pol * n * 16
    if len(data) - offset != expected:
        raise StoreFormatError(f"payload has {len(data) - offset} bytes, header implies {expected}")
    arr = np.frombuffer(data, dtype="<c16", offset=offset).reshape(blocks, pol, n)
    return arr.astype(np.complex128), power, gamma, n_p, n_a, rate


def store_bytes(store: SequenceStore) -> bytes:
    return _pack(SEQS_MAGIC, store.as_array(), store.selection_power, store.gamma_lambda,
                 store.n_proposed, store.n_accepted)


def write_store(path, store: SequenceStore) -> str:
    """Write ``store`` and return the SHA-256 of the file contents."""
    data = store_bytes(store)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_store(path) -> SequenceStore:
    arr, power, gamma, n_p, n_a, _ = _unpack(Path(path).read_bytes(), SEQS_MAGIC)
    if arr.shape[0] == 0:
        raise StoreFormatError("store holds no blocks")
    return SequenceStore([SymbolSequence(b) for b in arr], power, gamma, n_p, n_a)


def write_waveform(path, w: Waveform) -> None:
    arr = np.asarray(w.samples)[np.newaxis]
    Path(path).write_bytes(_pack(WAVE_MAGIC, arr, w.power(), float("nan"), 0, 0,
                                 _RATE.pack(w.sampling_rate)))


def read_waveform(path) -> Waveform:
    arr, _, _, _, _, rate = _unpack(Path(path).read_bytes(), WAVE_MAGIC)
    return Waveform(arr[0], rate)


def file_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
