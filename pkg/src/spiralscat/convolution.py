"""FFT convolution shared by every stage, plus the direct-sum oracle."""
from __future__ import annotations

import numpy as np
from scipy import fft as sfft


def fft_convolve(x, h):
    """Full linear convolution of two 1-D sequences through the FFT."""
    x = np.asarray(x)
    h = np.asarray(h)
    n = len(x) + len(h) - 1
    nfft = sfft.next_fast_len(n)
    out = sfft.ifft(sfft.fft(x, nfft) * sfft.fft(h, nfft))[:n]
    if np.isrealobj(x) and np.isrealobj(h):
        out = out.real
    return out


def direct_convolve(x, h):
    """Full linear convolution by explicit shifted sums (O(N*M))."""
    x = np.asarray(x)
    h = np.asarray(h)
    dtype = np.result_type(x, h)
    out = np.zeros(len(x) + len(h) - 1, dtype=dtype)
    for k, hk in enumerate(h):
        out[k:k + len(x)] += hk * x
    return out


def reflect_pad(x, pad, axis=0, after=None):
    """Reflect-pad ``x`` by ``pad`` samples before and ``after`` (default ``pad``) after."""
    after = pad if after is None else after
    if pad <= 0 and after <= 0:
        return np.asarray(x)
    widths = [(0, 0)] * np.ndim(x)
    widths[axis] = (max(pad, 0), max(after, 0))
    return np.pad(x, widths, mode="reflect")


def filter_along(x, transfers, axis=0, pad=0):
    """Apply frequency-domain filters along ``axis`` of a reflect-padded array.

    ``transfers`` is ``(n_filters, nfft)`` sampled on ``fftfreq(nfft)`` where
    ``nfft >= x.shape[axis] + 2 * pad``. The padding before the signal is
    ``pad``; the padding after fills the rest of the FFT frame, so no zeros
    wrap around. Returns complex results of shape ``(n_filters,) + x.shape``,
    cropped back to the unpadded extent.
    """
    x = np.moveaxis(np.asarray(x), axis, 0)
    n = x.shape[0]
    nfft = transfers.shape[-1]
    if nfft < n + 2 * pad:
        raise ValueError(f"FFT size {nfft} shorter than padded length {n + 2 * pad}")
    X = sfft.fft(reflect_pad(x, pad, axis=0, after=nfft - n - pad), axis=0)
    shape = (1,) * (x.ndim - 1)
    out = []
    for tf in transfers:
        y = sfft.ifft(X * tf.reshape((nfft,) + shape), axis=0)[pad:pad + n]
        out.append(np.moveaxis(y, 0, axis))
    return np.stack(out)


def axis_matrix(kernel, n, stride=1):
    """Matrix ``M`` such that ``y @ M.T`` convolves ``y``'s last axis with ``kernel``.

    The kernel has odd length with its origin in the middle; taps are spaced
    ``stride`` samples apart (``stride = Q`` convolves across octaves at
    fixed chroma). Samples outside ``[0, n)`` count as zero.
    """
    kernel = np.asarray(kernel, dtype=complex)
    half = (len(kernel) - 1) // 2
    M = np.zeros((n, n), dtype=complex)
    rows = np.arange(n)
    for j, tap in enumerate(kernel):
        offset = (j - half) * stride
        cols = rows - offset
        ok = (cols >= 0) & (cols < n)
        M[rows[ok], cols[ok]] = tap
    return M
