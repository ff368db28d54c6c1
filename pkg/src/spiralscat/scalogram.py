"""Constant-Q scalogram, its time average, and pitch-spiral coordinates."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .convolution import filter_along, reflect_pad
from .filterbank import InvalidParameterError, LowpassWindow, WaveletFilterbank


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise InvalidParameterError("signal must be a nonempty 1-D sequence")
        if not np.isfinite(x).all():
            raise InvalidParameterError("signal contains non-finite samples")
        if not self.sample_rate > 0:
            raise InvalidParameterError("sample rate must be positive")
        object.__setattr__(self, "samples", x)

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate


@dataclass
class Scalogram:
    """Modulus of the first-order wavelet transform, ``(frames, bins)``.

    Bins run from low to high frequency. ``octave`` and ``chroma`` hold the
    integer and fractional (times ``Q``) parts of ``log2(freqs)``.
    """

    values: np.ndarray
    hop: int
    sample_rate: float
    freqs: np.ndarray
    Q: int
    J: int
    warnings: list = field(default_factory=list)

    @property
    def frame_rate(self):
        return self.sample_rate / self.hop

    @property
    def times(self):
        return np.arange(self.values.shape[0]) * self.hop / self.sample_rate

    @property
    def log_freqs(self):
        return np.log2(self.freqs)

    @property
    def exponents(self):
        return np.round(self.log_freqs * self.Q).astype(int)

    @property
    def octave(self):
        return self.exponents // self.Q

    @property
    def chroma(self):
        return self.exponents % self.Q

    def nearest_bin(self, freq):
        return int(np.argmin(np.abs(self.log_freqs - math.log2(freq))))

    def nearest_frame(self, t):
        return int(np.clip(round(t * self.frame_rate), 0, self.values.shape[0] - 1))


@dataclass
class AveragedScalogram(Scalogram):
    T: float = 0.0


def split_logfreq(log_lambda1, Q):
    """Split a grid log-frequency into ``(octave, chroma)``.

    ``chroma`` lies in ``0 .. Q-1``; the input must be a multiple of ``1/Q``.

    >>> split_logfreq(3.25, 12)
    (3, 3)
    >>> split_logfreq(-1.75, 12)
    (-2, 3)
    """
    m = round(log_lambda1 * Q)
    if abs(log_lambda1 - m / Q) > 1e-9:
        raise InvalidParameterError(f"{log_lambda1} is not on the 1/{Q}-octave grid")
    return m // Q, m % Q


def _pad_length(bank, n):
    # half the support of the slowest wavelet, in samples
    sr = bank.grid["sample_rate"]
    half = bank.mother.time_support / 2 / min(bank.centers) * sr
    return int(math.ceil(half)), half * 2 > n


def compute_scalogram(x: Signal, bank: WaveletFilterbank, hop: int = 1) -> Scalogram:
    """Modulus of the wavelet transform of ``x``, sampled every ``hop`` samples.

    The signal is reflect-padded by half the longest wavelet support and
    transformed once; each row is one inverse FFT.
    """
    if bank.kind != "first_order_time":
        raise InvalidParameterError(f"scalogram needs a first_order_time bank, got {bank.kind}")
    if hop < 1 or int(hop) != hop:
        raise InvalidParameterError(f"hop must be a positive integer, got {hop}")
    if x.sample_rate != bank.grid["sample_rate"]:
        raise InvalidParameterError(
            f"signal rate {x.sample_rate} differs from bank rate {bank.grid['sample_rate']}")
    hop = int(hop)
    samples = x.samples
    n = len(samples)
    pad, short = _pad_length(bank, n)
    notes = []
    if short:
        msg = ("signal is shorter than the longest wavelet support; "
               "the scalogram is boundary-dominated")
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    nfft = sfft.next_fast_len(n + 2 * pad)
    frames = np.arange(0, n, hop)
    values = np.empty((len(frames), len(bank)))
    X = sfft.fft(reflect_pad(samples, pad, after=nfft - n - pad))
    f = np.fft.fftfreq(nfft, 1.0 / x.sample_rate)
    for i, c in enumerate(bank.centers):
        y = sfft.ifft(X * bank.mother(f / c))
        values[:, i] = np.abs(y[pad + frames])
    return Scalogram(values, hop, x.sample_rate, np.asarray(bank.centers), int(bank.Q),
                     int(bank.grid["J"]), notes)


def lowpass_along_time(values, lowpass: LowpassWindow, frame_rate):
    """Convolve every column of ``values`` with ``phi_T`` along axis 0."""
    values = np.asarray(values)
    n = values.shape[0]
    pad = min(int(math.ceil(4 * lowpass.sigma * frame_rate)), 8 * n)
    nfft = sfft.next_fast_len(n + 2 * pad)
    tf = lowpass.transfer(nfft, 1.0 / frame_rate)[None, :]
    out = filter_along(values, tf, axis=0, pad=pad)[0]
    return out.real if np.isrealobj(values) else out


def average_time(x1: Scalogram, lowpass: LowpassWindow) -> AveragedScalogram:
    """Lowpass the scalogram along time with ``phi_T`` (unit DC gain)."""
    if lowpass.T < x1.hop / x1.sample_rate:
        raise InvalidParameterError(
            f"T={lowpass.T} s is shorter than one hop ({x1.hop / x1.sample_rate:.4g} s)")
    s1 = lowpass_along_time(x1.values, lowpass, x1.frame_rate)
    # the lowpass of a nonnegative signal is nonnegative up to rounding
    s1 = np.maximum(s1, 0.0)
    return AveragedScalogram(s1, x1.hop, x1.sample_rate, x1.freqs, x1.Q, x1.J,
                             list(x1.warnings), T=lowpass.T)
