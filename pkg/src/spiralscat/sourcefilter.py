"""Warped source-filter signals and their predicted spiral-scattering ridges.

Velocities are in octaves per second, ``v = (w'' / w') / ln 2``, so that a
pattern translating along ``log2`` frequency at ``v`` responds at
``alpha = -(v_theta * beta + v_eta * gamma)`` Hz for quefrencies in
cycles per octave.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .convolution import axis_matrix
from .filterbank import InvalidParameterError, WaveletFilterbank
from .scalogram import Signal
from .scattering import ScatteringTensor, SpiralIndex

LN2 = math.log(2)
# operational reading of "much smaller than"
MUCH_SMALLER = 0.1


class ClippedPartialWarning(UserWarning):
    pass


class DegenerateFitError(ValueError):
    pass


@dataclass(frozen=True)
class WarpSpec:
    """Time warp ``w(t)`` with closed-form derivatives.

    ``identity``: ``w = t``; ``linear_scale``: ``w = rate * t``;
    ``exponential``: ``w'(t) = rate * 2**(velocity * t)``, ``w(0) = 0``.
    """

    family: str = "identity"
    rate: float = 1.0
    velocity: float = 0.0

    def __post_init__(self):
        if self.family not in ("identity", "linear_scale", "exponential"):
            raise InvalidParameterError(f"unknown warp family {self.family!r}")
        if not self.rate > 0:
            raise InvalidParameterError("warp rate must be positive (orientation preserving)")
        if self.family == "identity" and (self.rate != 1.0 or self.velocity != 0.0):
            raise InvalidParameterError("identity warp takes no parameters")
        if self.family == "linear_scale" and self.velocity != 0.0:
            raise InvalidParameterError("linear_scale warp has no velocity")

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def linear_scale(cls, rate):
        return cls("linear_scale", float(rate))

    @classmethod
    def exponential(cls, base_rate, velocity):
        return cls("exponential", float(base_rate), float(velocity))

    @property
    def _k(self):
        return self.velocity * LN2

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.family != "exponential" or self.velocity == 0:
            return self.rate * t
        return self.rate * np.expm1(self._k * t) / self._k

    def first(self, t):
        t = np.asarray(t, dtype=float)
        return self.rate * np.exp(self._k * t)

    def second(self, t):
        return self._k * self.first(t)

    def third(self, t):
        return self._k ** 2 * self.first(t)

    def log_rate(self, t):
        """``w'' / w'`` in 1/s."""
        return self.second(t) / self.first(t)

    def velocity_octaves(self, t):
        return self.log_rate(t) / LN2

    def to_dict(self):
        return {"family": self.family, "rate": self.rate, "velocity": self.velocity}


@dataclass(frozen=True)
class Envelope:
    """Spectral magnitude ``|h_hat(f)|``.

    ``gaussian`` is a lowpass ``exp(-f^2 / (2 cutoff^2))``; ``formant`` is a
    bump on the log-frequency axis centered at ``cutoff`` with standard
    deviation ``width`` octaves; ``flat`` is 1.
    """

    kind: str = "gaussian"
    cutoff: float = 1000.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "formant", "flat"):
            raise InvalidParameterError(f"unknown envelope {self.kind!r}")
        if not self.cutoff > 0:
            raise InvalidParameterError("envelope cutoff must be positive")
        if not self.width > 0:
            raise InvalidParameterError("formant width must be positive")

    def magnitude(self, f):
        f = np.asarray(f, dtype=float)
        if self.kind == "flat":
            return np.ones_like(f)
        if self.kind == "formant":
            return np.exp(-0.5 * (np.log2(f / self.cutoff) / self.width) ** 2)
        return np.exp(-0.5 * (f / self.cutoff) ** 2)

    def dlog(self, f):
        """``d log|h_hat| / df`` in 1/Hz."""
        f = np.asarray(f, dtype=float)
        if self.kind == "flat":
            return np.zeros_like(f)
        if self.kind == "formant":
            return -np.log2(f / self.cutoff) / (self.width ** 2 * LN2 * f)
        return -f / self.cutoff ** 2

    def to_dict(self):
        return {"kind": self.kind, "cutoff": self.cutoff, "width": self.width}


@dataclass(frozen=True)
class SourceFilterSpec:
    source_warp: WarpSpec
    filter_warp: WarpSpec = field(default_factory=WarpSpec.identity)
    envelope: Envelope = field(default_factory=Envelope)
    partial_count: int = 16
    phase_seed: int | None = None

    def __post_init__(self):
        if self.partial_count < 1:
            raise InvalidParameterError("partial_count must be >= 1")

    def f0(self, t):
        return self.source_warp.first(t)

    def cutoff(self, t):
        return self.envelope.cutoff * self.filter_warp.first(t)

    def amplitude(self, p, t):
        """Amplitude of partial ``p``: ``|h_hat(p theta'(t) / eta'(t))|``."""
        return self.envelope.magnitude(p * self.source_warp.first(t) / self.filter_warp.first(t))

    def to_dict(self):
        return {"source_warp": self.source_warp.to_dict(),
                "filter_warp": self.filter_warp.to_dict(),
                "envelope": self.envelope.to_dict(),
                "partial_count": self.partial_count,
                "phase_seed": self.phase_seed}

    @classmethod
    def from_dict(cls, doc):
        return cls(WarpSpec(**doc["source_warp"]),
                   WarpSpec(**doc.get("filter_warp", {"family": "identity"})),
                   Envelope(**doc.get("envelope", {})),
                   int(doc.get("partial_count", 16)), doc.get("phase_seed"))


def synthesize(spec: SourceFilterSpec, duration: float, sample_rate: float) -> Signal:
    """Additive rendering ``sum_p |h_hat(p theta'/eta')| cos(2 pi p theta + phi_p)``.

    Partials whose instantaneous frequency reaches Nyquist anywhere in the
    signal are dropped with a :class:`ClippedPartialWarning`.
    """
    n = int(round(duration * sample_rate))
    if n < 1:
        raise InvalidParameterError("duration too short")
    t = np.arange(n) / sample_rate
    theta = spec.source_warp.value(t)
    f0 = spec.source_warp.first(t)
    eta_rate = spec.filter_warp.first(t)
    if spec.phase_seed is None:
        phases = np.zeros(spec.partial_count)
    else:
        phases = np.random.default_rng(spec.phase_seed).uniform(0, 2 * np.pi, spec.partial_count)
    x = np.zeros(n)
    clipped = []
    for p in range(1, spec.partial_count + 1):
        if p * f0.max() >= sample_rate / 2:
            clipped.append(p)
            continue
        amp = spec.envelope.magnitude(p * f0 / eta_rate)
        x += amp * np.cos(2 * np.pi * p * theta + phases[p - 1])
    if clipped:
        warnings.warn(f"partials {clipped[0]}..{clipped[-1]} exceed Nyquist and were dropped",
                      ClippedPartialWarning, stacklevel=2)
    return Signal(x, float(sample_rate))


@dataclass
class AssumptionReport:
    p: int
    t: float
    lambda1: float
    ratios: dict
    satisfied: dict

    @property
    def ok(self):
        return all(self.satisfied.values())

    def to_dict(self):
        return {"p": self.p, "t": self.t, "lambda1_hz": self.lambda1,
                "ratios": dict(self.ratios), "satisfied": dict(self.satisfied), "ok": self.ok}


def check_assumptions(spec: SourceFilterSpec, bank: WaveletFilterbank, p: int, t: float,
                      T: float | None = None) -> AssumptionReport:
    """Evaluate the validity conditions of the closed-form approximation.

    Ratios are left side over right side. ``discrimination`` (``2p / Q``)
    must be below 1; every other ratio must be at most 0.1. Suprema are
    taken over the support of the first-order wavelet at ``t``.
    """
    if not 1 <= p <= spec.partial_count:
        raise InvalidParameterError(f"partial index must be in 1..{spec.partial_count}")
    Q = bank.Q
    centers = np.asarray(bank.centers)
    lam = float(centers[np.argmin(np.abs(np.log2(centers) - math.log2(p * spec.f0(t))))])
    half = bank.mother.time_support / (2 * lam)
    tt = np.linspace(t - half, t + half, 65)
    src = spec.source_warp
    flt = spec.filter_warp
    ratios = {"discrimination": 2 * p / Q,
              "source_rate": float(np.abs(src.log_rate(tt)).max() / (lam / Q)),
              "filter_rate": float(np.abs(flt.log_rate(tt)).max() / (lam / Q))}
    band = lam * np.linspace(1 - 1 / (2 * Q), 1 + 1 / (2 * Q), 17)
    inv_rate = 1.0 / flt.first(tt)
    slope = np.abs(spec.envelope.dlog(np.outer(inv_rate, band))).max()
    ratios["smoothness"] = float(slope * inv_rate.max() / (Q / lam))
    if T is not None:
        for name, w in (("source_averaging", src), ("filter_averaging", flt)):
            second = w.second(tt)
            if np.all(second == 0):
                ratios[name] = 0.0
            else:
                ratios[name] = float(np.abs(w.third(tt) / second - w.log_rate(tt)).max() * T)
    satisfied = {k: bool(v < 1 if k == "discrimination" else v <= MUCH_SMALLER)
                 for k, v in ratios.items()}
    return AssumptionReport(p, float(t), lam, ratios, satisfied)


@dataclass(frozen=True)
class RidgePlane:
    """Plane ``alpha + v_theta * beta + v_eta * gamma = 0`` (Hz, cycles/octave)."""

    v_theta: float
    v_eta: float
    t: float = 0.0

    def alpha(self, beta, gamma=0.0):
        return -(self.v_theta * np.asarray(beta) + self.v_eta * np.asarray(gamma))

    def to_dict(self):
        return {"v_theta": self.v_theta, "v_eta": self.v_eta, "t": self.t}


def predicted_plane(spec: SourceFilterSpec, t: float) -> RidgePlane:
    return RidgePlane(float(spec.source_warp.velocity_octaves(t)),
                      float(spec.filter_warp.velocity_octaves(t)), float(t))


@dataclass
class ClosedForm:
    value: float
    factors: tuple
    degraded: bool
    averaging_ok: bool | None = None


def source_scalogram(spec, bank, t):
    """``1/2 sum_p |psi_hat_lambda(p theta'(t))|`` on every bin (unit-amplitude partials)."""
    centers = np.asarray(bank.centers)
    f = np.arange(1, spec.partial_count + 1) * spec.f0(t)
    return 0.5 * bank.mother(f[None, :] / centers[:, None]).sum(axis=1)


def filter_scalogram(spec, bank, t):
    """``|h_hat(lambda / eta'(t))|`` on every bin."""
    return spec.envelope.magnitude(np.asarray(bank.centers) / spec.filter_warp.first(t))


def closed_form_x2(spec: SourceFilterSpec, banks, lambda1_bin: int, lambda2: SpiralIndex,
                   t: float, p: int | None = None, T: float | None = None) -> ClosedForm:
    """Product approximation of a spiral coefficient.

    ``banks`` is ``(first_order, alpha, beta, gamma)``. The source term is
    the chroma-convolved source scalogram, the filter term the
    octave-convolved envelope, and the last factor ``|psi_hat_alpha|`` at
    the temporal frequency imposed by the two velocities.
    """
    first, alpha_bank, beta_bank, gamma_bank = banks
    Q = first.Q
    n = len(first)
    src = source_scalogram(spec, first, t)
    flt = filter_scalogram(spec, first, t)

    def stage(bank, q, values, step, stride):
        i = [k for k, c in bank.members() if c == q]
        if not i:
            raise InvalidParameterError(f"{q} is not a member of the {bank.kind} bank")
        max_half = max((n - 1) // stride, 1)
        kernel = bank.kernel(i[0], step, max_half=max_half)
        return (axis_matrix(kernel, n, stride) @ values)[lambda1_bin]

    f_source = abs(stage(beta_bank, lambda2.beta, src, 1.0 / Q, 1))
    f_filter = abs(stage(gamma_bank, lambda2.gamma, flt, 1.0, Q))
    plane = predicted_plane(spec, t)
    nu = float(plane.alpha(lambda2.beta, lambda2.gamma))
    f_alpha = float(alpha_bank.mother(nu / lambda2.alpha))
    if p is None:
        p = max(1, int(round(first.centers[lambda1_bin] / spec.f0(t))))
    p = min(p, spec.partial_count)
    report = check_assumptions(spec, first, p, t, T)
    averaging_ok = None
    if T is not None:
        averaging_ok = all(report.satisfied[k] for k in ("source_averaging", "filter_averaging"))
    return ClosedForm(f_source * f_filter * f_alpha, (f_source, f_filter, f_alpha),
                      not report.ok, averaging_ok)


@dataclass
class RidgeFit:
    v_theta: float
    v_eta: float
    residual: float
    n_selected: int
    selected: np.ndarray = field(repr=False)

    def plane(self, t=0.0):
        return RidgePlane(self.v_theta, self.v_eta, t)

    def to_dict(self):
        return {"v_theta": self.v_theta, "v_eta": self.v_eta, "residual": self.residual,
                "n_selected": self.n_selected}


def fit_plane(alpha, beta, gamma, weight):
    """Weighted least squares for ``alpha + a beta + b gamma = 0``."""
    alpha, beta, gamma, weight = map(np.asarray, (alpha, beta, gamma, weight))
    if len(alpha) < 3:
        raise DegenerateFitError(f"need at least 3 tuples, got {len(alpha)}")
    A = np.stack([beta, gamma], axis=1)
    W = weight / weight.sum()
    G = A.T @ (W[:, None] * A)
    scale = np.trace(G)
    if scale <= 0 or np.linalg.det(G) <= 1e-10 * scale ** 2:
        raise DegenerateFitError("selected tuples are collinear in (beta, gamma)")
    coef = np.linalg.solve(G, -A.T @ (W * alpha))
    r = alpha + A @ coef
    residual = math.sqrt((W * r ** 2).sum() / (W * alpha ** 2).sum())
    return float(coef[0]), float(coef[1]), residual


def fit_ridge_plane(tensor: ScatteringTensor, t_frame, lambda1_bin,
                    threshold_ratio: float = 0.5) -> RidgeFit:
    """Fit the ridge plane through the dominant spiral coefficients.

    ``t_frame`` and ``lambda1_bin`` may be integers or sequences of equal
    length (the coefficients of several points are pooled). Tuples with
    value at least ``threshold_ratio`` times the maximum enter a
    magnitude-weighted least-squares fit.
    """
    if tensor.mode != "spiral":
        raise InvalidParameterError(f"ridge fitting needs a spiral tensor, got {tensor.mode}")
    if not 0 < threshold_ratio < 1:
        raise InvalidParameterError("threshold_ratio must lie in (0, 1)")
    frames = np.atleast_1d(t_frame)
    bins = np.atleast_1d(lambda1_bin)
    if frames.shape != bins.shape:
        raise InvalidParameterError("t_frame and lambda1_bin must have the same length")
    vals = tensor.values[frames, bins, :]
    alpha, beta, gamma = tensor.alphas(), tensor.betas(), tensor.gammas()
    peak = vals.max()
    if not peak > 0:
        raise DegenerateFitError("tensor slice is identically zero")
    sel = np.argwhere(vals >= threshold_ratio * peak)
    k = sel[:, 1]
    a, b, g = fit_plane(alpha[k], beta[k], gamma[k], vals[sel[:, 0], k])
    return RidgeFit(a, b, g, len(k), sel)
