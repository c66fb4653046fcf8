"""Split-step Fourier propagation over a transparent (ideally amplified) fiber.

The field obeys the NLSE (one polarization) or the Manakov equation (two)

    dA/dz = -j (beta2 / 2) d^2A/dt^2 + j g |A|^2 A + n(z, t),

with ``g = gamma`` or ``g = 8/9 gamma`` and attenuation exactly balanced by
distributed gain, which leaves only the amplified spontaneous emission term
``n``. In the frequency domain the linear part is ``exp(j beta2/2 w^2 z)``.

Internal units: ps, km, mW; ``beta2`` in ps^2/km, ``gamma`` in 1/(W km).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from . import kernels
from .core import ConfigurationError, Waveform, stream

__all__ = [
    "PLANCK",
    "LinkSpec",
    "SsfmSpec",
    "ase_psd",
    "ase_snr",
    "dispersion_filter",
    "propagate",
    "dispersion_compensate",
    "digital_backpropagation",
]

PLANCK = 6.62607015e-34
MANAKOV = 8.0 / 9.0


@dataclass(frozen=True)
class LinkSpec:
    """Fiber link; defaults are the standard single-mode link of the reference scenario."""

    alpha: float = 0.2          # dB/km
    beta2: float = -21.7        # ps^2/km
    gamma_nl: float = 1.27      # 1/(W km)
    length: float = 1000.0      # km
    nsp: float = 1.0
    carrier_freq: float = 193.41  # THz

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigurationError("link length must be positive")
        if self.alpha < 0 or self.nsp < 0:
            raise ConfigurationError("attenuation and nsp must be non-negative")
        if not self.carrier_freq > 0:
            raise ConfigurationError("carrier frequency must be positive")

    @property
    def alpha_lin(self) -> float:
        """Power attenuation in 1/m."""
        return self.alpha * math.log(10.0) / 10.0 / 1000.0


@dataclass(frozen=True)
class SsfmSpec:
    step_size: float = 500.0        # m
    sampling_rate: float = 100.0    # GHz
    scheme: str = "symmetrized"
    noise: bool = False
    seed: int = 0

    def __post_init__(self):
        if not self.step_size > 0 or not self.sampling_rate > 0:
            raise ConfigurationError("step size and sampling rate must be positive")
        if self.scheme not in ("symmetrized", "asymmetric"):
            raise ConfigurationError(f"unknown split-step scheme {self.scheme!r}")

    def replace(self, **changes) -> "SsfmSpec":
        return dataclasses.replace(self, **changes)

    def steps(self, link: LinkSpec) -> int:
        count = link.length * 1000.0 / self.step_size
        steps = round(count)
        if steps < 1 or abs(count - steps) > 1e-6 * max(1.0, count):
            raise ConfigurationError(f"link length {link.length} km is not a multiple of the step {self.step_size} m")
        return steps


def ase_psd(link: LinkSpec) -> float:
    """One-sided ASE power spectral density per polarization at the link end, mW/GHz."""
    nu = link.carrier_freq * 1e12
    return link.nsp * PLANCK * nu * link.alpha_lin * link.length * 1000.0 * 1e3 * 1e9


def ase_snr(power: float, link: LinkSpec, bandwidth: float) -> float:
    """Linear-regime SNR ``P / (nsp h nu alpha L W)`` for power per polarization ``power`` (mW)."""
    return power / (ase_psd(link) * bandwidth)


def _omega(size: int, sampling_rate: float) -> np.ndarray:
    # rad/ps; sampling_rate in GHz -> sample spacing 1000/Fs ps
    return 2.0 * np.pi * sfft.fftfreq(size, d=1000.0 / sampling_rate)


def dispersion_filter(size: int, sampling_rate: float, beta2: float, length: float) -> np.ndarray:
    """Frequency response ``exp(j beta2/2 w^2 length)`` of ``length`` km of fiber."""
    w = _omega(size, sampling_rate)
    return np.exp(0.5j * beta2 * w**2 * length)


def _check_rate(w: Waveform, ssfm: SsfmSpec) -> None:
    if not math.isclose(w.sampling_rate, ssfm.sampling_rate, rel_tol=1e-12):
        raise ConfigurationError(
            f"waveform sampled at {w.sampling_rate} GHz but SSFM configured for {ssfm.sampling_rate} GHz")


def _split_step(field: np.ndarray, sampling_rate: float, beta2: float, gamma_nl: float,
                step_km: float, steps: int, scheme: str, noise_var: float, rng) -> np.ndarray:
    npol, size = field.shape
    coeff = gamma_nl * 1e-3 * step_km * (MANAKOV if npol == 2 else 1.0)
    spec = sfft.fft(field, axis=-1)
    if scheme == "symmetrized":
        half = dispersion_filter(size, sampling_rate, beta2, step_km / 2.0)
        full = half * half
        spec *= half
    else:
        full = dispersion_filter(size, sampling_rate, beta2, step_km)
    # Noise is white and circular, so it is drawn directly in the frequency domain
    # (numpy FFT scales its variance by the size). Adjacent half steps are merged;
    # an all-pass half step before or after the noise leaves its law unchanged.
    noise_scale = math.sqrt(noise_var * size / 2.0)
    for k in range(steps):
        t = sfft.ifft(spec, axis=-1)
        kernels.nonlinear_phase(t, coeff)
        spec = sfft.fft(t, axis=-1)
        if scheme == "symmetrized":
            spec *= half if k == steps - 1 else full
        else:
            spec *= full
        if noise_var:
            z = rng.standard_normal((npol, size, 2))
            spec += (z[..., 0] + 1j * z[..., 1]) * noise_scale
    return sfft.ifft(spec, axis=-1)


def propagate(w: Waveform, link: LinkSpec, ssfm: SsfmSpec) -> Waveform:
    """Propagate ``w`` over ``link`` with loss exactly balanced by distributed gain."""
    _check_rate(w, ssfm)
    steps = ssfm.steps(link)
    step_km = ssfm.step_size / 1000.0
    noise_var = 0.0
    if ssfm.noise:
        noise_var = link.nsp * PLANCK * link.carrier_freq * 1e12 * link.alpha_lin * ssfm.step_size \
            * ssfm.sampling_rate * 1e9 * 1e3
    field = np.array(w.samples, dtype=np.complex128, order="C")
    out = _split_step(field, w.sampling_rate, link.beta2, link.gamma_nl, step_km, steps, ssfm.scheme,
                      noise_var, stream(ssfm.seed, 0x55F))
    return Waveform(out, w.sampling_rate, w.center_offset)


def dispersion_compensate(w: Waveform, link: LinkSpec) -> Waveform:
    """Exact inverse of the accumulated dispersion of the whole link."""
    h = dispersion_filter(w.size, w.sampling_rate, -link.beta2, link.length)
    out = sfft.ifft(sfft.fft(w.samples, axis=-1) * h, axis=-1)
    return Waveform(out, w.sampling_rate, w.center_offset)


def digital_backpropagation(w: Waveform, link: LinkSpec, ssfm: SsfmSpec) -> Waveform:
    """Noiseless propagation through the inverse fiber (negated dispersion and nonlinearity)."""
    inverse = dataclasses.replace(link, beta2=-link.beta2, gamma_nl=-link.gamma_nl)
    return propagate(w, inverse, ssfm.replace(noise=False))
