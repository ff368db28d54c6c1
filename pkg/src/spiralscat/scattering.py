"""Second-order scattering: time, joint time-frequency, and spiral.

All three share one engine. The time stage convolves every scalogram row
with ``psi_alpha`` through the FFT (reflect padding); the log-frequency and
octave stages are zero-padded linear convolutions along the bin axis,
written as small matrices. Modulus is taken once, after the last stage.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .convolution import axis_matrix, reflect_pad
from .filterbank import InvalidParameterError, LowpassWindow, WaveletFilterbank
from .scalogram import Scalogram, lowpass_along_time


@dataclass(frozen=True)
class SpiralIndex:
    """Second-order index: ``alpha`` in Hz, signed ``beta``/``gamma`` in cycles/octave.

    ``beta``/``gamma`` are ``None`` when the transform has no such stage
    and ``0.0`` for the lowpass member.
    """

    alpha: float
    beta: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidParameterError(f"alpha must be positive, got {self.alpha}")

    def encode(self):
        """``(log2 alpha, log2|beta|, sign beta, log2|gamma|, sign gamma)``."""
        def part(q):
            if q is None:
                return None, None
            if q == 0:
                return -math.inf, 0
            return math.log2(abs(q)), int(math.copysign(1, q))

        lb, sb = part(self.beta)
        lg, sg = part(self.gamma)
        return (math.log2(self.alpha), lb, sb, lg, sg)

    @classmethod
    def decode(cls, code):
        la, lb, sb, lg, sg = code

        def value(lq, sq):
            if sq is None:
                return None
            if sq == 0:
                return 0.0
            return sq * 2.0 ** lq

        return cls(2.0 ** la, value(lb, sb), value(lg, sg))

    def sort_key(self):
        la, lb, sb, lg, sg = self.encode()
        return (la, sb or 0, -math.inf if lb is None else lb,
                sg or 0, -math.inf if lg is None else lg)

    def to_dict(self):
        def num(q):
            return None if q is None else float(q)

        return {"alpha_hz": float(self.alpha), "beta_cpo": num(self.beta),
                "gamma_cpo": num(self.gamma),
                "signs": [None if self.beta is None else int(np.sign(self.beta)),
                          None if self.gamma is None else int(np.sign(self.gamma))]}


@dataclass
class ScatteringTensor:
    """Nonnegative coefficients ``values[frame, lambda1_bin, lambda2]``."""

    values: np.ndarray
    lambda2: list
    mode: str
    frame_rate: float
    freqs: np.ndarray
    Q: int
    averaging: float | None = None
    warnings: list = field(default_factory=list)

    @property
    def times(self):
        return np.arange(self.values.shape[0]) / self.frame_rate

    def index_of(self, idx: SpiralIndex):
        return self.lambda2.index(idx)

    def slice_lambda2(self, frame, bin_):
        return self.values[frame, bin_, :]

    def alphas(self):
        return np.array([k.alpha for k in self.lambda2])

    def betas(self):
        return np.array([np.nan if k.beta is None else k.beta for k in self.lambda2])

    def gammas(self):
        return np.array([np.nan if k.gamma is None else k.gamma for k in self.lambda2])


def _usable_alphas(alpha_bank, frame_rate):
    kept, notes = [], []
    for c in alpha_bank.centers:
        if c < frame_rate / 2 / (1 + 1.0 / alpha_bank.Q):
            kept.append(c)
        else:
            notes.append(f"alpha={c:g} Hz skipped: above the frame-rate Nyquist {frame_rate / 2:g} Hz")
    for msg in notes:
        warnings.warn(msg, stacklevel=3)
    return kept, notes


def time_stage(values, alpha_bank: WaveletFilterbank, frame_rate, alphas=None):
    """Yield ``(alpha, complex array)`` for each alpha: rows convolved with ``psi_alpha``."""
    values = np.asarray(values)
    n = values.shape[0]
    alphas = list(alpha_bank.centers) if alphas is None else alphas
    half = alpha_bank.mother.time_support / 2 / min(alphas) * frame_rate
    pad = min(int(math.ceil(half)), 8 * n)
    nfft = sfft.next_fast_len(n + 2 * pad)
    X = sfft.fft(reflect_pad(values, pad, axis=0, after=nfft - n - pad), axis=0)
    f = np.fft.fftfreq(nfft, 1.0 / frame_rate)
    tail = (1,) * (values.ndim - 1)
    for a in alphas:
        tf = alpha_bank.mother(f / a).reshape((nfft,) + tail)
        yield a, sfft.ifft(X * tf, axis=0)[pad:pad + n]


def _bin_stage_matrices(bank, step, n_bins, stride=1):
    max_half = (n_bins - 1) // stride
    out = []
    for i, q in bank.members():
        k = bank.kernel(i, step, max_half=max(max_half, 1))
        out.append((q, axis_matrix(k, n_bins, stride)))
    return out


def _check_scalogram(x1):
    if not isinstance(x1, Scalogram):
        raise TypeError("expected a Scalogram")


def _assemble(blocks, index, n_frames, n_bins):
    order = sorted(range(len(index)), key=lambda i: index[i].sort_key())
    values = np.empty((n_frames, n_bins, len(index)))
    for dst, src in enumerate(order):
        values[:, :, dst] = blocks[src]
    return values, [index[i] for i in order]


def time_scattering(x1: Scalogram, alpha_bank: WaveletFilterbank,
                    lowpass: LowpassWindow | None = None) -> ScatteringTensor:
    """``|x1 * psi_alpha|`` along time for every row, optionally averaged by ``phi_T``."""
    _check_scalogram(x1)
    alphas, notes = _usable_alphas(alpha_bank, x1.frame_rate)
    blocks, index = [], []
    for a, y in time_stage(x1.values, alpha_bank, x1.frame_rate, alphas):
        blocks.append(np.abs(y))
        index.append(SpiralIndex(a))
    values, index = _assemble(blocks, index, *x1.values.shape)
    out = ScatteringTensor(values, index, "time", x1.frame_rate, x1.freqs, x1.Q,
                           warnings=list(x1.warnings) + notes)
    return average_tensor(out, lowpass) if lowpass is not None else out


def _second_order(x1, alpha_bank, beta_bank, gamma_bank, decimate, mode):
    _check_scalogram(x1)
    if decimate < 1 or int(decimate) != decimate:
        raise InvalidParameterError(f"decimation factor must be a positive integer, got {decimate}")
    n_bins = x1.values.shape[1]
    alphas, notes = _usable_alphas(alpha_bank, x1.frame_rate)
    beta_ms = _bin_stage_matrices(beta_bank, 1.0 / x1.Q, n_bins)
    gamma_ms = (_bin_stage_matrices(gamma_bank, 1.0, n_bins, stride=x1.Q)
                if gamma_bank is not None else None)
    blocks, index = [], []
    n_frames = None
    for a, y in time_stage(x1.values, alpha_bank, x1.frame_rate, alphas):
        y = y[::decimate]
        n_frames = y.shape[0]
        for b, Mb in beta_ms:
            zb = y @ Mb.T
            if gamma_ms is None:
                blocks.append(np.abs(zb))
                index.append(SpiralIndex(a, b))
                continue
            for g, Mg in gamma_ms:
                blocks.append(np.abs(zb @ Mg.T))
                index.append(SpiralIndex(a, b, None if gamma_bank.identity else g))
    values, index = _assemble(blocks, index, n_frames, n_bins)
    return ScatteringTensor(values, index, mode, x1.frame_rate / decimate, x1.freqs, x1.Q,
                            warnings=list(x1.warnings) + notes)


def joint_scattering(x1: Scalogram, alpha_bank, beta_bank, decimate=1) -> ScatteringTensor:
    """``|x1 *_t psi_alpha *_l psi_beta|`` over the rectilinear log-frequency axis."""
    return _second_order(x1, alpha_bank, beta_bank, None, decimate, "joint")


def spiral_scattering(x1: Scalogram, alpha_bank, beta_bank, gamma_bank,
                      decimate=1) -> ScatteringTensor:
    """Time, log-frequency, then octave convolutions, one modulus at the end.

    The octave stage convolves, at fixed chroma, across bins ``Q`` apart
    with zero padding beyond the analyzed octaves.
    """
    n_octaves = x1.values.shape[1] / x1.Q
    if n_octaves < 2:
        raise InvalidParameterError(
            f"spiral scattering needs at least 2 octaves, scalogram spans {n_octaves:g}")
    return _second_order(x1, alpha_bank, beta_bank, gamma_bank, decimate, "spiral")


def average_tensor(tensor: ScatteringTensor, lowpass: LowpassWindow) -> ScatteringTensor:
    """``S2 = x2 * phi_T`` along time."""
    n_f, n_b, n_l = tensor.values.shape
    flat = tensor.values.reshape(n_f, n_b * n_l)
    s2 = np.maximum(lowpass_along_time(flat, lowpass, tensor.frame_rate), 0.0)
    return ScatteringTensor(s2.reshape(n_f, n_b, n_l), list(tensor.lambda2), tensor.mode,
                            tensor.frame_rate, tensor.freqs, tensor.Q, lowpass.T,
                            list(tensor.warnings))
