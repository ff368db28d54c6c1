import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spiralscat.convolution import direct_convolve
from spiralscat.filterbank import (InvalidParameterError, build_first_order_bank,
                                   design_mother_wavelet, lowpass_window)
from spiralscat.scalogram import Scalogram, Signal, average_time, compute_scalogram, split_logfreq

from conftest import SR, grid_frequency, tone


def small_bank(Q=8, J=4, sr=8000.0):
    return build_first_order_bank(design_mother_wavelet(Q), Q, J, sr)


def band_limited(bank):
    """Members whose spectrum has decayed below 1e-6 at Nyquist.

    The top members are cut by Nyquist; their impulse responses ring with
    a ``1/t`` tail, so no finite direct sum or edge-free interior exists.
    """
    nyq = bank.grid["sample_rate"] / 2
    return [i for i, c in enumerate(bank.centers) if bank.mother(nyq / c) <= 1e-6]


def test_signal_validation():
    with pytest.raises(InvalidParameterError):
        Signal(np.array([]), 100.0)
    with pytest.raises(InvalidParameterError):
        Signal(np.array([0.0, np.nan]), 100.0)
    with pytest.raises(InvalidParameterError):
        Signal(np.zeros(3), 0.0)


def test_sine_argmax_at_nearest_bin(bank12):
    x1 = compute_scalogram(Signal(tone(440.0, 1.0), SR), bank12, hop=64)
    interior = x1.values[20:-20]
    target = int(np.argmin(np.abs(np.log2(x1.freqs / 440.0))))
    assert np.all(np.argmax(interior, axis=1) == target)
    ridge = interior[:, target]
    assert ridge.std() <= 1e-3 * ridge.mean()


def test_impulse_width_scales_with_inverse_center():
    bank = small_bank(Q=8, J=4)
    x = np.zeros(8000)
    x[4000] = 1.0
    x1 = compute_scalogram(Signal(x, 8000.0), bank)

    def width(i):
        col = x1.values[:, i]
        return (col >= col.max() / 2).sum()

    # one octave up halves the duration 2Q/lambda
    for i in (4, 8, 12):
        assert width(i) / width(i + 8) == pytest.approx(2.0, rel=0.1)
    lam = bank.centers[8]
    fwhm = 2 * math.sqrt(2 * math.log(2)) * bank.mother.time_sigma / lam
    assert width(8) / 8000.0 == pytest.approx(fwhm, rel=0.02)


def test_octave_apart_sines_are_q_bins_apart(bank12):
    f = grid_frequency(300.0, 12)
    x = tone(f, 1.0) + tone(2 * f, 1.0)
    x1 = compute_scalogram(Signal(x, SR), bank12, hop=64)
    row = x1.values[len(x1.values) // 2]
    lo, hi = x1.nearest_bin(f), x1.nearest_bin(2 * f)
    assert hi - lo == 12
    assert row[lo] == pytest.approx(row.max(), rel=1e-2)
    assert row[hi] == pytest.approx(row.max(), rel=1e-2)


def test_matches_direct_convolution():
    bank = small_bank(Q=4, J=3, sr=4000.0)
    rng = np.random.default_rng(3)
    x = rng.standard_normal(3000)
    x1 = compute_scalogram(Signal(x, 4000.0), bank)
    n_ir = 2 ** 12
    members = band_limited(bank)
    assert len(members) >= len(bank) - 3
    for i in members:
        h = bank.impulse_response(i, n_ir)
        full = direct_convolve(x, h)
        ref = np.abs(full[n_ir // 2: n_ir // 2 + len(x)])
        support = int(bank.mother.time_support / bank.centers[i] * 4000.0)
        sl = slice(support, len(x) - support)
        err = np.abs(x1.values[sl, i] - ref[sl]).max()
        assert err <= 1e-6 * np.abs(ref[sl]).max()


@pytest.mark.filterwarnings("ignore:signal is shorter")
def test_nonnegative_and_labels(bank12):
    rng = np.random.default_rng(4)
    x1 = compute_scalogram(Signal(rng.standard_normal(4096), SR), bank12, hop=16)
    assert (x1.values >= 0).all()
    assert np.all(np.diff(x1.freqs) > 0)
    assert np.allclose(x1.freqs[1:] / x1.freqs[:-1], 2 ** (1 / 12))
    assert np.allclose(2.0 ** (x1.octave + x1.chroma / 12), x1.freqs, rtol=1e-12)
    assert set(x1.chroma) == set(range(12))


def test_shift_equivariance():
    bank = small_bank(Q=8, J=4)
    rng = np.random.default_rng(5)
    hop, k = 16, 5
    x = rng.standard_normal(16000)
    shifted = np.concatenate([rng.standard_normal(k * hop), x[:-k * hop]])
    a = compute_scalogram(Signal(x, 8000.0), bank, hop=hop).values
    b = compute_scalogram(Signal(shifted, 8000.0), bank, hop=hop).values
    margin = 200
    inner = slice(margin, a.shape[0] - margin - k)
    cols = band_limited(bank)
    diff = b[margin + k: a.shape[0] - margin][:, cols] - a[inner][:, cols]
    assert np.abs(diff).max() / a[inner][:, cols].max() <= 1e-4


@pytest.mark.filterwarnings("ignore:signal is shorter")
def test_pitch_shift_moves_ridge_by_q_bins(bank12):
    f = grid_frequency(500.0, 12)
    a = compute_scalogram(Signal(tone(f, 0.5), SR), bank12, hop=64).values
    b = compute_scalogram(Signal(tone(2 * f, 0.5), SR), bank12, hop=64).values
    mid = a.shape[0] // 2
    assert np.argmax(b[mid]) - np.argmax(a[mid]) == 12


def test_short_signal_warns(bank12):
    with pytest.warns(UserWarning, match="boundary-dominated"):
        x1 = compute_scalogram(Signal(tone(440.0, 0.01), SR), bank12)
    assert x1.warnings


def test_rejects_bad_arguments(bank12):
    x = Signal(tone(440.0, 0.1), SR)
    with pytest.raises(InvalidParameterError):
        compute_scalogram(x, bank12, hop=0)
    with pytest.raises(InvalidParameterError):
        compute_scalogram(Signal(x.samples, 8000.0), bank12)


@pytest.mark.parametrize("value, expected", [((3.25, 12), (3, 3)), ((-2.0, 12), (-2, 0)),
                                             ((-1.75, 12), (-2, 3))])
def test_split_logfreq_examples(value, expected):
    assert split_logfreq(*value) == expected


@given(st.integers(-400, 400), st.integers(1, 48))
def test_split_logfreq_round_trip(m, Q):
    j, chi = split_logfreq(m / Q, Q)
    assert 0 <= chi < Q
    assert j + chi / Q == pytest.approx(m / Q, abs=1e-12)


def test_split_logfreq_rejects_off_grid():
    with pytest.raises(InvalidParameterError):
        split_logfreq(0.3, 12)


def _constant_scalogram(c, frames=400, bins=6, hop=32):
    freqs = 2.0 ** (np.arange(bins) / 3 + 6)
    return Scalogram(np.full((frames, bins), c), hop, 8000.0, freqs, 3, 2)


@given(st.floats(min_value=0.0, max_value=1e6, allow_nan=False))
@settings(max_examples=25, deadline=None)
def test_average_preserves_constants(c):
    s1 = average_time(_constant_scalogram(c), lowpass_window(0.5, 8000.0 / 32))
    assert np.allclose(s1.values, c, rtol=1e-9, atol=1e-9 * max(c, 1.0))


def test_average_suppresses_am_ripple(bank12):
    t = np.arange(int(3 * SR)) / SR
    x = (1 + 0.5 * np.cos(2 * np.pi * 8 * t)) * np.cos(2 * np.pi * 440 * t)
    x1 = compute_scalogram(Signal(x, SR), bank12, hop=128)
    s1 = average_time(x1, lowpass_window(0.5, x1.frame_rate))
    b = x1.nearest_bin(440.0)
    inner = slice(int(0.75 * x1.frame_rate), int(2.25 * x1.frame_rate))

    def depth(v):
        return (v.max() - v.min()) / (v.max() + v.min())

    assert depth(x1.values[inner, b]) > 0.1
    assert depth(s1.values[inner, b]) <= 0.05 * depth(x1.values[inner, b])


def test_average_rejects_t_below_hop():
    with pytest.raises(InvalidParameterError):
        average_time(_constant_scalogram(1.0), lowpass_window(1e-4, 8000.0 / 32))
