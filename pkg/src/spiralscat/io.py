"""Tensor, WAV and CSV input/output.

Tensors are written as raw little-endian float32 in row-major order, with
a ``.meta.json`` sidecar holding axes and grid labels. JSON is written
with sorted keys so identical inputs give identical bytes.
"""
from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .scalogram import Scalogram, Signal
from .scattering import ScatteringTensor

TENSOR_SUFFIX = ".f32"
META_SUFFIX = ".meta.json"


class AudioFormatError(OSError):
    """Unreadable or unsupported audio file."""


class TensorFormatError(OSError):
    """Tensor file and sidecar are missing fields or disagree."""


def _base(path):
    path = Path(path)
    name = path.name
    for suffix in (META_SUFFIX, TENSOR_SUFFIX):
        if name.endswith(suffix):
            return path.with_name(name[: -len(suffix)])
    return path


def tensor_paths(path):
    """``(raw, sidecar)`` paths for a tensor base name or either file."""
    base = _base(path)
    return base.with_name(base.name + TENSOR_SUFFIX), base.with_name(base.name + META_SUFFIX)


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_tensor(path, values, meta):
    """Write ``values`` as ``<path>.f32`` plus ``<path>.meta.json``; returns both paths."""
    raw, side = tensor_paths(path)
    values = np.ascontiguousarray(values, dtype="<f4")
    meta = dict(meta, shape=list(values.shape), dtype="float32", byte_order="little",
                layout="row-major")
    raw.parent.mkdir(parents=True, exist_ok=True)
    values.tofile(raw)
    write_json(side, meta)
    return raw, side


def read_tensor(path):
    """Inverse of :func:`write_tensor`: ``(values, meta)``."""
    raw, side = tensor_paths(path)
    with open(side) as fh:
        try:
            meta = json.load(fh)
            shape = tuple(int(n) for n in meta["shape"])
        except (ValueError, KeyError, TypeError) as exc:
            raise TensorFormatError(f"{side}: malformed sidecar ({exc})") from exc
    values = np.fromfile(raw, dtype="<f4")
    if values.size != int(np.prod(shape)):
        raise TensorFormatError(f"{raw} holds {values.size} values, sidecar expects {shape}")
    return values.reshape(shape), meta


def scalogram_meta(x1: Scalogram, name, T=None):
    return {"name": name, "axes": ["time", "log_lambda1"], "hop": x1.hop,
            "sample_rate": x1.sample_rate, "frame_rate": x1.frame_rate, "Q": x1.Q, "J": x1.J,
            "T": T, "lambda1_hz": [float(f) for f in x1.freqs],
            "octave": [int(j) for j in x1.octave], "chroma": [int(c) for c in x1.chroma],
            "warnings": list(x1.warnings)}


def tensor_meta(tensor: ScatteringTensor, x1: Scalogram, name):
    hop = int(round(x1.sample_rate / tensor.frame_rate))
    meta = scalogram_meta(x1, name, tensor.averaging)
    meta.update({"axes": ["time", "log_lambda1", "lambda2"], "hop": hop,
                 "frame_rate": tensor.frame_rate, "mode": tensor.mode,
                 "lambda2_axis": [k.to_dict() for k in tensor.lambda2],
                 "warnings": list(tensor.warnings)})
    return meta


def read_wav(path):
    """Read PCM16, PCM24, PCM32 or float WAV as a :class:`Signal` in ``[-1, 1]``.

    Multichannel files are reduced to their first channel with a warning.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except (ValueError, EOFError, OSError) as exc:
        raise AudioFormatError(f"cannot read {path}: {exc}") from exc
    if data.ndim == 2:
        if data.shape[1] > 1:
            warnings.warn(f"{path}: {data.shape[1]} channels, keeping the first", stacklevel=2)
        data = data[:, 0]
    if data.dtype == np.int16:
        x = data / 32768.0
    elif data.dtype == np.int32:
        # scipy left-justifies 24-bit samples into int32
        x = data / 2.0 ** 31
    elif data.dtype == np.uint8:
        x = (data.astype(float) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(float)
    else:
        raise AudioFormatError(f"{path}: unsupported sample type {data.dtype}")
    if x.size == 0:
        raise AudioFormatError(f"{path}: no samples")
    return Signal(x, float(rate))


def write_wav(path, signal: Signal):
    """32-bit float WAV."""
    rate = int(round(signal.sample_rate))
    if rate != signal.sample_rate:
        raise ValueError(f"WAV needs an integer sample rate, got {signal.sample_rate}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, rate, np.asarray(signal.samples, dtype=np.float32))


def write_csv(target, header, rows):
    """CSV with one header row to a path or open file; floats use ``repr``."""
    if hasattr(target, "write"):
        _write_rows(target, header, rows)
        return
    with open(target, "w", newline="") as fh:
        _write_rows(fh, header, rows)


def _write_rows(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
