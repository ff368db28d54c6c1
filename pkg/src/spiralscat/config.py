"""Pipeline configuration: one JSON document, command-line flags on top."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

from .filterbank import InvalidParameterError

MODES = ("time", "joint", "spiral")


class ConfigError(InvalidParameterError):
    """A configuration value violates an invariant of the module that owns it."""


@dataclass
class PipelineConfig:
    """Analysis settings.

    ``hop`` is in samples; ``None`` means ``T / 16``. ``T2`` averages the
    second-order tensor and defaults to ``T``. ``decimate`` subsamples the
    second order after the time stage.
    """

    Q1: int = 12
    Q2: int = 1
    J: int = 8
    T: float = 0.5
    T2: float | None = None
    hop: int | None = None
    mode: str = "spiral"
    alpha_range: tuple = (0.5, 8.0)
    beta_max: float = 4.0
    n_beta: int = 4
    gamma_max: float = 0.5
    n_gamma: int = 2
    decimate: int = 1
    output_dir: str = "out"

    def __post_init__(self):
        self.alpha_range = tuple(self.alpha_range)

    def validate(self):
        """Raise :class:`ConfigError` naming the first violated invariant."""
        _int_at_least("Q1", self.Q1, 1)
        _int_at_least("J", self.J, 1)
        _int_at_least("n_beta", self.n_beta, 1)
        _int_at_least("n_gamma", self.n_gamma, 1)
        _int_at_least("decimate", self.decimate, 1)
        if self.Q2 not in (1, 2):
            raise ConfigError(f"Q2 must be 1 or 2, got {self.Q2}")
        if not (isinstance(self.T, (int, float)) and self.T > 0 and math.isfinite(self.T)):
            raise ConfigError(f"T must be a positive number of seconds, got {self.T}")
        if self.T2 is not None and not self.T2 > 0:
            raise ConfigError(f"T2 must be positive, got {self.T2}")
        if self.hop is not None:
            _int_at_least("hop", self.hop, 1)
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(self.alpha_range) != 2 or not 0 < self.alpha_range[0] <= self.alpha_range[1]:
            raise ConfigError(f"alpha_range must be [lo, hi] with 0 < lo <= hi, got "
                              f"{list(self.alpha_range)}")
        if not self.beta_max > 0 or self.beta_max >= self.Q1 / 2:
            raise ConfigError(f"beta_max must lie in (0, Q1/2) = (0, {self.Q1 / 2}), "
                              f"got {self.beta_max}")
        if not 0 < self.gamma_max <= 0.5:
            raise ConfigError(f"gamma_max must lie in (0, 0.5] cycles/octave, got {self.gamma_max}")
        if self.mode == "spiral" and self.J < 2:
            raise ConfigError(f"spiral mode needs an octave span of at least 2 (J >= 2), "
                              f"got J={self.J}")
        return self

    def hop_samples(self, sample_rate):
        if self.hop is not None:
            return int(self.hop)
        return max(1, int(round(self.T * sample_rate / 16)))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, doc, overrides=None):
        """Build from a JSON object; non-``None`` entries of ``overrides`` win."""
        names = {f.name for f in fields(cls)}
        merged = dict(doc)
        merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
        unknown = sorted(set(merged) - names)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        try:
            return cls(**merged).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path=None, overrides=None):
        doc = {}
        if path is not None:
            with open(path) as fh:
                try:
                    doc = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
            if not isinstance(doc, dict):
                raise ConfigError(f"{path}: top level must be a JSON object")
        return cls.from_dict(doc, overrides)


def _int_at_least(name, value, lo):
    if isinstance(value, bool) or not isinstance(value, int) or value < lo:
        raise ConfigError(f"{name} must be an integer >= {lo}, got {value!r}")
