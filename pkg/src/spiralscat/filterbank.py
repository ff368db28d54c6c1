"""Analytic Morlet wavelets and the filterbanks built from them.

Time-domain banks (first order, alpha) are sampled directly on an FFT grid.
The log-frequency (beta) and octave (gamma) banks are short complex kernels
applied by linear, zero-padded convolution along the bin axis.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

KINDS = ("first_order_time", "alpha_time", "beta_logfreq", "gamma_octave")
# axis kernels are truncated at this many envelope standard deviations
_KERNEL_SIGMAS = 4.0


class InvalidParameterError(ValueError):
    """A parameter violates a documented precondition."""


def _gauss(x, sigma):
    return np.exp(-0.5 * (np.asarray(x, dtype=float) / sigma) ** 2)


@dataclass(frozen=True)
class MotherWavelet:
    """Corrected Morlet wavelet on a dimensionless frequency axis.

    ``psi_hat(w) = G(w - xi) - kappa * G(w)`` for ``w > 0`` and zero
    elsewhere, where ``G`` is a Gaussian of width ``sigma``. ``kappa`` makes
    the spectrum vanish at ``w = 0`` and ``xi`` is tuned so the corrected
    spectrum peaks exactly at ``w = 1``.
    """

    quality_factor: float
    sigma: float
    xi: float
    kappa: float
    norm: float
    omega: np.ndarray = field(repr=False)
    spectrum: np.ndarray = field(repr=False)
    time_support: float = 0.0

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        out = _gauss(w - self.xi, self.sigma) - self.kappa * _gauss(w, self.sigma)
        return np.where(w > 0, out / self.norm, 0.0)

    def time_domain(self, t):
        """Closed-form inverse transform (ordinary frequency convention).

        The analytic truncation at negative frequencies is not represented;
        it only matters for Q close to 1 and is handled by the callers.
        """
        t = np.asarray(t, dtype=float)
        s = self.sigma
        env = s * math.sqrt(2 * math.pi) * np.exp(-2 * (math.pi * s * t) ** 2)
        return env * (np.exp(2j * math.pi * self.xi * t) - self.kappa) / self.norm

    @property
    def time_sigma(self):
        """Standard deviation of the Gaussian envelope in dimensionless time."""
        return 1.0 / (2 * math.pi * self.sigma)


def _solve_center(sigma):
    # peak of G(w - xi) - kappa G(w) sits at w=1 iff (1 - xi) exp(xi / sigma^2) = 1
    if 1.0 / sigma**2 > 35:  # 1 - xi below double precision
        return 1.0
    h = lambda xi: math.log1p(-xi) + xi / sigma**2
    return brentq(h, 0.5, 1 - 1e-15, xtol=1e-15)


@lru_cache(maxsize=64)
def design_mother_wavelet(Q: float) -> MotherWavelet:
    """Morlet-type analytic mother wavelet with -3 dB bandwidth close to ``1/Q``.

    Parameters
    ----------
    Q : float
        Quality factor, must be at least 1.
    """
    if not np.isfinite(Q) or Q < 1:
        raise InvalidParameterError(f"quality factor must be >= 1, got {Q}")
    Q = float(Q)
    # power half-width sigma*sqrt(ln 2) on each side -> full width 1/Q
    sigma = 1.0 / (2 * Q * math.sqrt(math.log(2)))
    xi = _solve_center(sigma)
    kappa = math.exp(-0.5 * (xi / sigma) ** 2)
    norm = float(_gauss(1 - xi, sigma) - kappa * _gauss(1.0, sigma))
    # an integer number of bins per unit puts w = 1 exactly on the grid
    per_unit = math.ceil(64 * Q)
    omega = np.arange(-per_unit // 2, 3 * per_unit + 1) / per_unit
    w = MotherWavelet(Q, sigma, xi, kappa, norm, omega, np.zeros(0))
    spectrum = w(omega)
    # full width of the envelope above 1e-3 of its peak
    support = 2 * w.time_sigma * math.sqrt(2 * math.log(1e3))
    return MotherWavelet(Q, sigma, xi, kappa, norm, omega, spectrum, support)


def half_power_bandwidth(omega, spectrum):
    """Width of the region where ``|spectrum|^2 >= max / 2`` (linear interpolation)."""
    mag = np.abs(np.asarray(spectrum))
    level = mag.max() / math.sqrt(2)
    above = np.flatnonzero(mag >= level)
    lo, hi = above[0], above[-1]

    def cross(i0, i1):
        y0, y1 = mag[i0], mag[i1]
        return omega[i0] + (level - y0) * (omega[i1] - omega[i0]) / (y1 - y0)

    left = cross(lo - 1, lo) if lo > 0 else omega[0]
    right = cross(hi, hi + 1) if hi + 1 < len(mag) else omega[-1]
    return right - left


@dataclass(frozen=True)
class LowpassWindow:
    """Gaussian averaging window whose full width at half maximum is ``T``."""

    T: float
    sample_rate: float

    @property
    def sigma(self):
        return self.T / (2 * math.sqrt(2 * math.log(2)))

    def transfer(self, n, d=None):
        """Frequency response on ``np.fft.fftfreq(n, d)``; exactly 1 at DC."""
        d = 1.0 / self.sample_rate if d is None else d
        f = np.fft.fftfreq(n, d)
        return np.exp(-2 * (math.pi * self.sigma * f) ** 2)

    def impulse_response(self, half_width=None):
        """Sampled window normalised to unit sum."""
        if half_width is None:
            half_width = int(math.ceil(4 * self.sigma * self.sample_rate))
        t = np.arange(-half_width, half_width + 1) / self.sample_rate
        h = np.exp(-0.5 * (t / self.sigma) ** 2)
        return h / h.sum()


@dataclass(frozen=True)
class FrameLowpass:
    """Lowpass completing a constant-Q bank below its lowest wavelet.

    ``|phi_hat|^2 = 1 - S(f) / S(f_min)`` under the lowest center ``f_min``
    and 0 above, where ``S`` is the bank's squared-magnitude sum. DC gain
    is exactly 1. Used by the frame audit, not for time averaging.
    """

    bank: "WaveletFilterbank"

    @property
    def sample_rate(self):
        return self.bank.grid["sample_rate"]

    def transfer(self, n, d=None):
        d = 1.0 / self.sample_rate if d is None else d
        f = np.fft.fftfreq(n, d)
        f_min = min(self.bank.centers)
        below = (f >= 0) & (f < f_min)
        s = np.zeros(n)
        for c in self.bank.centers:
            s[below] += self.bank.mother(f[below] / c) ** 2
        s_ref = sum(float(self.bank.mother(f_min / c)) ** 2 for c in self.bank.centers)
        out = np.zeros(n)
        out[below] = np.sqrt(np.clip(1.0 - s[below] / s_ref, 0.0, 1.0))
        # real window: mirror onto negative frequencies
        neg = (f < 0) & (-f < f_min)
        out[neg] = np.interp(-f[neg], f[below], out[below])
        return out


def frame_lowpass(bank) -> FrameLowpass:
    return FrameLowpass(bank)


def lowpass_window(T: float, sample_rate: float) -> LowpassWindow:
    if not T > 0:
        raise InvalidParameterError(f"averaging scale T must be positive, got {T}")
    return LowpassWindow(float(T), float(sample_rate))


@dataclass(frozen=True)
class WaveletFilterbank:
    """A geometric family of wavelets plus, for beta/gamma banks, one lowpass.

    ``centers`` are unsigned magnitudes and ``signs`` carries -1, 0 or +1
    per member (0 marks the lowpass member of beta/gamma banks). Time banks
    keep every sign at +1.

    Members are sampled on demand: :meth:`transfer` for the time banks
    and :meth:`kernel` for the log-frequency and octave banks.
    """

    kind: str
    centers: tuple
    signs: tuple
    Q: float
    grid: dict
    mother: MotherWavelet = field(repr=False, compare=False)
    identity: bool = False

    def __len__(self):
        return len(self.centers)

    @property
    def signed_centers(self):
        return np.asarray(self.signs, dtype=float) * np.asarray(self.centers, dtype=float)

    @property
    def is_time_bank(self):
        return self.kind in ("first_order_time", "alpha_time")

    # time-domain banks -------------------------------------------------
    def transfer(self, n, d=None, members=None):
        """Sampled transfer functions on ``np.fft.fftfreq(n, d)``.

        Returns an array ``(len(members), n)``; negative frequencies are 0.
        """
        if not self.is_time_bank:
            raise TypeError(f"{self.kind} bank has no time-domain transfer function")
        if d is None:
            d = 1.0 / self.grid["sample_rate"]
        f = np.fft.fftfreq(n, d)
        idx = range(len(self)) if members is None else members
        out = np.empty((len(idx), n))
        for row, i in enumerate(idx):
            out[row] = self.mother(f / self.centers[i])
        return out

    def impulse_response(self, i, n, d=None):
        """Centered complex impulse response of member ``i`` (length ``n``)."""
        h = np.fft.ifft(self.transfer(n, d, members=[i])[0])
        return np.fft.fftshift(h)

    # axis banks ---------------------------------------------------------
    def kernel(self, i, step, max_half=None):
        """Complex convolution kernel of member ``i`` sampled every ``step``.

        ``step`` is in octaves (1/Q1 for beta, 1 for gamma). The returned
        array has odd length with the origin in the middle. Bandpass kernels
        sum to zero and their DTFT peaks at 1; lowpass kernels sum to one.
        ``max_half`` caps the half-length of bandpass kernels (an axis of
        ``n`` samples never needs more than ``n - 1``).
        """
        if self.is_time_bank:
            raise TypeError("time banks have no axis kernel")
        if self.identity:
            return np.ones(1, dtype=complex)
        return _axis_kernel(self.kind, self.centers[i], self.signs[i], self.Q,
                            float(step), self.grid.get("lowpass_octaves"), max_half)

    def members(self):
        """Iterate over ``(index, signed_center)``."""
        return list(enumerate(self.signed_centers))

    def to_dict(self, sample_rate=None, J=None, T=None):
        return {
            "kind": self.kind,
            "Q": self.Q,
            "J": J if J is not None else self.grid.get("J"),
            "sample_rate": sample_rate if sample_rate is not None else self.grid.get("sample_rate"),
            "centers": [float(c) for c in self.centers],
            "signs": [int(s) for s in self.signs],
            "T": T,
        }


@lru_cache(maxsize=512)
def _axis_kernel_cached(kind, center, sign, Q, step, lowpass_octaves, max_half):
    if sign == 0:
        half = int(round(lowpass_octaves / (2 * step)))
        n = np.arange(-half, half + 1)
        w = np.cos(np.pi * n / (2 * (half + 1))) ** 2
        return (w / w.sum()).astype(complex)
    mother = design_mother_wavelet(Q)
    scale = center * step
    half = int(math.ceil(_KERNEL_SIGMAS * mother.time_sigma / scale))
    if max_half is not None:
        half = max(1, min(half, int(max_half)))
    n = np.arange(-half, half + 1)
    # inverse DTFT of the analytic spectrum restricted to [0, nyquist)
    nyq = 0.5 / step
    q = np.linspace(0.0, nyq, 8193)[:-1]
    psi = (np.exp(2j * np.pi * np.outer(n * step, q)) @ mother(q / center)) * (q[1] * step)
    # Morlet-style zero-mean correction with the matching Gaussian envelope
    env = np.exp(-2 * (math.pi * mother.sigma * scale * n) ** 2)
    psi = psi - psi.sum() / env.sum() * env
    peak = np.abs(axis_response(psi, np.linspace(0.0, nyq, 2049), step)).max()
    psi = psi / peak
    if sign < 0:
        psi = np.conj(psi)
    return psi


def _axis_kernel(kind, center, sign, Q, step, lowpass_octaves, max_half=None):
    out = _axis_kernel_cached(kind, float(center), int(sign), float(Q), float(step),
                              None if lowpass_octaves is None else float(lowpass_octaves),
                              None if max_half is None else int(max_half))
    return out.copy()


def axis_response(kernel, quefrency, step):
    """DTFT of a centered kernel at ``quefrency`` cycles/octave."""
    kernel = np.asarray(kernel)
    half = (len(kernel) - 1) // 2
    n = np.arange(-half, half + 1)
    q = np.atleast_1d(np.asarray(quefrency, dtype=float))
    return np.exp(-2j * np.pi * np.outer(q * step, n)) @ kernel


def first_order_grid(Q, J, sample_rate):
    """Centers ``2**(m/Q)`` Hz below Nyquist, lowest first, and their exponents ``m``."""
    nyquist = sample_rate / 2
    m_top = math.ceil(Q * math.log2(nyquist)) - 1
    while 2 ** (m_top / Q) >= nyquist:
        m_top -= 1
    m = np.arange(m_top - J * Q + 1, m_top + 1)
    return 2.0 ** (m / Q), m


def build_first_order_bank(mother: MotherWavelet, Q: int, J: int, sample_rate: float,
                           fft_size: int | None = None) -> WaveletFilterbank:
    """Constant-Q bank of ``J*Q`` wavelets at ``2**(j + chi/Q)`` Hz below Nyquist.

    The highest center is the largest grid point strictly below Nyquist. If
    ``fft_size`` is given, the lowest center must be resolvable on that
    grid (above ``sample_rate / fft_size``).
    """
    if J * Q < 1:
        raise InvalidParameterError(f"J*Q must be >= 1, got J={J}, Q={Q}")
    if Q < 1 or int(Q) != Q:
        raise InvalidParameterError(f"Q must be a positive integer, got {Q}")
    centers, m = first_order_grid(int(Q), int(J), float(sample_rate))
    if fft_size is not None and centers[0] < sample_rate / fft_size:
        raise InvalidParameterError(
            f"lowest center {centers[0]:.3g} Hz is below the frequency resolution "
            f"{sample_rate / fft_size:.3g} Hz of a {fft_size}-sample grid")
    if centers[0] <= 0 or not np.isfinite(centers).all():
        raise InvalidParameterError("degenerate frequency grid")
    grid = {"axis": "time", "sample_rate": float(sample_rate), "J": int(J),
            "exponents": tuple(int(v) for v in m), "fft_size": fft_size}
    return WaveletFilterbank("first_order_time", tuple(float(c) for c in centers),
                             (1,) * len(centers), int(Q), grid, mother)


def _geometric(top, bottom, Q):
    out = []
    c = float(top)
    ratio = 2.0 ** (1.0 / Q)
    while c >= bottom * (1 - 1e-12):
        out.append(c)
        c /= ratio
    return out[::-1]


def build_alpha_bank(alpha_range, Q2, frame_rate=None):
    lo, hi = map(float, alpha_range)
    if not (0 < lo <= hi):
        raise InvalidParameterError(f"alpha range must satisfy 0 < lo <= hi, got {alpha_range}")
    ratio = 2.0 ** (1.0 / Q2)
    centers = [lo]
    while centers[-1] * ratio <= hi * (1 + 1e-12):
        centers.append(lo * ratio ** len(centers))
    grid = {"axis": "time", "sample_rate": frame_rate}
    return WaveletFilterbank("alpha_time", tuple(centers), (1,) * len(centers), Q2, grid,
                             design_mother_wavelet(Q2))


def _signed_bank(kind, top, n, Q2, grid):
    mags = _geometric(top, top / 2.0 ** ((n - 1) / Q2), Q2)[-n:]
    # lexicographic (sign, log|c|): negative branch, zero, positive branch
    centers = tuple(mags) + (0.0,) + tuple(mags)
    signs = (-1,) * n + (0,) + (1,) * n
    return WaveletFilterbank(kind, centers, signs, Q2, grid, design_mother_wavelet(Q2))


def build_spiral_banks(alpha_range, beta_max, gamma_max, Q2, *, n_beta=4, n_gamma=2,
                       n_octaves=None, bins_per_octave=None, frame_rate=None):
    """Second-order banks for spiral scattering.

    Returns ``(alpha, beta, gamma)``. Beta and gamma carry both sign branches
    of ``n_beta``/``n_gamma`` geometric members plus one lowpass member.
    The beta lowpass spans one octave; the gamma lowpass spans six octaves,
    truncated to the analyzed range when ``n_octaves`` is smaller.
    """
    if Q2 not in (1, 2):
        raise InvalidParameterError(f"second-order quality factor must be 1 or 2, got {Q2}")
    if not beta_max > 0 or not gamma_max > 0:
        raise InvalidParameterError("beta_max and gamma_max must be positive")
    if n_beta < 1 or n_gamma < 1:
        raise InvalidParameterError("each sign branch needs at least one member")
    if gamma_max > 0.5:
        raise InvalidParameterError(
            f"gamma_max={gamma_max} exceeds 0.5 cycles/octave, the limit of an integer octave grid")
    if bins_per_octave is not None and beta_max >= bins_per_octave / 2:
        raise InvalidParameterError(
            f"beta_max={beta_max} must stay below {bins_per_octave / 2} cycles/octave")
    if n_octaves is not None and n_octaves < 2:
        raise InvalidParameterError("gamma bank needs at least 2 octaves")
    alpha = build_alpha_bank(alpha_range, Q2, frame_rate)
    beta = _signed_bank("beta_logfreq", beta_max, n_beta, Q2,
                        {"axis": "log_frequency", "lowpass_octaves": 1.0,
                         "bins_per_octave": bins_per_octave})
    span = 6.0 if n_octaves is None else float(min(6, 2 * (n_octaves - 1)))
    gamma = _signed_bank("gamma_octave", gamma_max, n_gamma, Q2,
                         {"axis": "octave", "lowpass_octaves": span, "J": n_octaves})
    return alpha, beta, gamma


def identity_bank(kind):
    """Single pass-through member; used to check reduction identities."""
    return WaveletFilterbank(kind, (0.0,), (0,), 1, {"axis": kind}, design_mother_wavelet(1),
                             identity=True)


def littlewood_paley(bank: WaveletFilterbank, lowpass: LowpassWindow | None = None,
                     n: int | None = None):
    """Littlewood-Paley sum of a time bank on a length-``n`` FFT grid.

    Returns ``(freqs, profile, passband_min)`` where ``profile`` is
    ``|phi_hat|^2 + sum |psi_hat|^2`` scaled to unit maximum over
    non-negative frequencies, and ``passband_min`` is its minimum over
    ``[lowest / 2**(1/Q), nyquist * (1 - 1/(2Q))]``.
    """
    if not bank.is_time_bank:
        raise TypeError("Littlewood-Paley audit applies to time banks")
    if len(bank) == 0:
        raise InvalidParameterError("empty bank has no passband")
    sr = bank.grid["sample_rate"]
    if n is None:
        n = bank.grid.get("fft_size") or 2 ** 16
    freqs = np.fft.fftfreq(n, 1.0 / sr)
    profile = (bank.transfer(n) ** 2).sum(axis=0)
    if lowpass is not None:
        profile = profile + lowpass.transfer(n, 1.0 / sr) ** 2
    pos = freqs >= 0
    freqs, profile = freqs[pos], profile[pos]
    profile = profile / profile.max()
    lo = min(bank.centers) / 2 ** (1.0 / bank.Q)
    hi = sr / 2 * (1 - 1 / (2 * bank.Q))
    band = (freqs >= lo) & (freqs <= hi)
    if not band.any():
        raise InvalidParameterError("passband contains no grid frequency")
    return freqs, profile, float(profile[band].min())


def spiral_wavelet(alpha, beta, gamma, t, log_freq, Q2=1):
    """Separable spiral wavelet ``psi_alpha(t) psi_beta(l) psi_gamma(floor(l))``.

    ``alpha`` in Hz, ``beta`` and ``gamma`` in signed cycles per octave
    (zero selects the lowpass). Returns a complex array ``(len(log_freq), len(t))``.
    """
    mother = design_mother_wavelet(Q2)
    psi_t = alpha * mother.time_domain(alpha * np.asarray(t))

    def along(q, x, support):
        if q == 0:
            w = np.cos(np.pi * np.clip(x / support, -0.5, 0.5)) ** 2
            return w.astype(complex)
        out = abs(q) * mother.time_domain(abs(q) * x)
        return np.conj(out) if q < 0 else out

    l = np.asarray(log_freq, dtype=float)
    psi_b = along(beta, l - l.mean(), 1.0)
    octave = np.floor(l)
    psi_g = along(gamma, octave - np.floor(l.mean()), 6.0)
    return (psi_b * psi_g)[:, None] * psi_t[None, :]


def save_bank(path, bank, *, J=None, T=None, sample_rate=None):
    with open(path, "w") as fh:
        json.dump(bank.to_dict(sample_rate=sample_rate, J=J, T=T), fh, indent=2)


def bank_from_dict(doc):
    """Rebuild a bank from its JSON document."""
    kind = doc["kind"]
    if kind not in KINDS:
        raise InvalidParameterError(f"unknown bank kind {kind!r}")
    Q = doc["Q"]
    if kind == "first_order_time":
        return build_first_order_bank(design_mother_wavelet(Q), Q, doc["J"], doc["sample_rate"])
    mother = design_mother_wavelet(Q)
    centers = tuple(float(c) for c in doc["centers"])
    signs = tuple(int(s) for s in doc["signs"])
    if kind == "alpha_time":
        grid = {"axis": "time", "sample_rate": doc.get("sample_rate")}
    elif kind == "beta_logfreq":
        grid = {"axis": "log_frequency", "lowpass_octaves": 1.0}
    else:
        J = doc.get("J")
        grid = {"axis": "octave", "J": J,
                "lowpass_octaves": 6.0 if J is None else float(min(6, 2 * (J - 1)))}
    return WaveletFilterbank(kind, centers, signs, Q, grid, mother)
