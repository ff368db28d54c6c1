"""Command-line front end: ``analyze``, ``synth``, ``validate``, ``plot-data``.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration
error, 3 I/O error. Warnings are printed on standard error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import io as sio
from .config import ConfigError, PipelineConfig
from .filterbank import (InvalidParameterError, build_first_order_bank, build_spiral_banks,
                         design_mother_wavelet, lowpass_window)
from .scalogram import average_time, compute_scalogram
from .scattering import average_tensor, joint_scattering, spiral_scattering, time_scattering
from .sourcefilter import Envelope, SourceFilterSpec, WarpSpec, synthesize
from .validation import Scenario, attack_scenario, release_scenario, ridge_scenario, validate

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
SCENARIOS = {"ridge": ridge_scenario, "attack": attack_scenario, "release": release_scenario}


class SliceError(ValueError):
    """Requested slice lies outside the tensor."""


@contextmanager
def _warnings_to_stderr():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            yield
        finally:
            seen = set()
            for w in caught:
                msg = str(w.message)
                if msg not in seen:
                    seen.add(msg)
                    print(f"warning: {msg}", file=sys.stderr)


# analyze -------------------------------------------------------------------

def run_analysis(signal, cfg: PipelineConfig):
    """First and second order outputs of ``signal``: ``{name: (values, meta)}``."""
    sr = signal.sample_rate
    hop = cfg.hop_samples(sr)
    first = build_first_order_bank(design_mother_wavelet(cfg.Q1), cfg.Q1, cfg.J, sr)
    x1 = compute_scalogram(signal, first, hop=hop)
    lp = lowpass_window(cfg.T, x1.frame_rate)
    s1 = average_time(x1, lp)
    out = {"x1": (x1.values, sio.scalogram_meta(x1, "x1")),
           "S1": (s1.values, sio.scalogram_meta(x1, "S1", cfg.T))}
    alpha, beta, gamma = build_spiral_banks(
        cfg.alpha_range, cfg.beta_max, cfg.gamma_max, cfg.Q2, n_beta=cfg.n_beta,
        n_gamma=cfg.n_gamma, n_octaves=cfg.J if cfg.mode == "spiral" else None,
        bins_per_octave=cfg.Q1, frame_rate=x1.frame_rate)
    if cfg.mode == "time":
        x2 = time_scattering(x1, alpha)
        banks = [first, alpha]
    elif cfg.mode == "joint":
        x2 = joint_scattering(x1, alpha, beta, decimate=cfg.decimate)
        banks = [first, alpha, beta]
    else:
        x2 = spiral_scattering(x1, alpha, beta, gamma, decimate=cfg.decimate)
        banks = [first, alpha, beta, gamma]
    T2 = cfg.T if cfg.T2 is None else cfg.T2
    s2 = average_tensor(x2, lowpass_window(T2, x2.frame_rate))
    out["x2"] = (x2.values, sio.tensor_meta(x2, x1, "x2"))
    out["S2"] = (s2.values, sio.tensor_meta(s2, x1, "S2"))
    bank_docs = [b.to_dict(sample_rate=b.grid.get("sample_rate"), J=cfg.J,
                           T=cfg.T if b.kind == "first_order_time" else None) for b in banks]
    return out, bank_docs


def cmd_analyze(args):
    overrides = {"Q1": args.Q1, "Q2": args.Q2, "J": args.J, "T": args.T, "T2": args.T2,
                 "hop": args.hop, "mode": args.mode, "decimate": args.decimate,
                 "alpha_range": args.alpha_range, "beta_max": args.beta_max,
                 "gamma_max": args.gamma_max, "output_dir": args.out}
    cfg = PipelineConfig.load(args.config, overrides)
    signal = sio.read_wav(args.input)
    outputs, bank_docs = run_analysis(signal, cfg)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, (values, meta) in outputs.items():
        meta = dict(meta, source=Path(args.input).name, config=cfg.to_dict())
        sio.write_tensor(out_dir / name, values, meta)
    sio.write_json(out_dir / "filterbanks.json", bank_docs)
    print(f"wrote {', '.join(outputs)} to {out_dir}", file=sys.stderr)
    return EXIT_OK


# synth ---------------------------------------------------------------------

def _spec_from_flags(args):
    f0 = 440.0 if args.f0 is None else args.f0
    v_theta = args.v_theta or 0.0
    v_eta = args.v_eta or 0.0
    source = WarpSpec.exponential(f0, v_theta) if v_theta else WarpSpec.linear_scale(f0)
    filt = WarpSpec.exponential(1.0, v_eta) if v_eta else WarpSpec.identity()
    kind = args.envelope or "gaussian"
    envelope = Envelope(kind, args.cutoff or 4.0 * f0, args.formant_width or 1.0)
    return SourceFilterSpec(source, filt, envelope, args.partials or 16, args.seed)


def _load_json(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return doc


def cmd_synth(args):
    duration, sample_rate = args.duration, args.sample_rate
    if args.spec is not None:
        doc = _load_json(args.spec)
        file_duration = doc.pop("duration", None)
        file_rate = doc.pop("sample_rate", None)
        duration = file_duration if duration is None else duration
        sample_rate = file_rate if sample_rate is None else sample_rate
        try:
            spec = SourceFilterSpec.from_dict(doc)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{args.spec}: bad source-filter description ({exc})") from exc
    else:
        spec = _spec_from_flags(args)
    duration = 1.0 if duration is None else float(duration)
    sample_rate = 22050 if sample_rate is None else sample_rate
    if int(sample_rate) != sample_rate or sample_rate <= 0:
        raise ConfigError(f"sample rate must be a positive integer, got {sample_rate}")
    x = synthesize(spec, duration, int(sample_rate))
    sio.write_wav(args.output, x)
    if args.spec_out:
        sio.write_json(args.spec_out, dict(spec.to_dict(), duration=duration,
                                           sample_rate=int(sample_rate)))
    return EXIT_OK


# validate ------------------------------------------------------------------

def cmd_validate(args):
    if args.config is not None:
        doc = _load_json(args.config)
        preset = doc.pop("preset", args.scenario)
        if preset not in SCENARIOS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(SCENARIOS)}")
        try:
            scenario = SCENARIOS[preset](**doc)
        except TypeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from exc
    else:
        scenario = SCENARIOS[args.scenario]()
    report = validate(scenario)
    sio.write_json(args.report, report)
    for name, ok in report["checks"].items():
        tag = "gating" if name in scenario.checks else "info"
        print(f"{'PASS' if ok else 'FAIL'} {name} ({tag})", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAILED


# plot-data -----------------------------------------------------------------

AXES = {"time": "time_s", "lambda1": "lambda1_hz", "alpha": "alpha_hz",
        "beta": "beta_cpo", "gamma": "gamma_cpo"}


def _parse_pairs(items, what):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"{what} {item!r} must look like axis=value")
        name, value = item.split("=", 1)
        if name not in AXES:
            raise ConfigError(f"unknown axis {name!r}; choose from {list(AXES)}")
        out[name] = value
    return out


def _snap(name, value, grid, log=False):
    """Index of the grid point nearest ``value``; warns when off-grid."""
    grid = np.asarray(grid, dtype=float)
    if log:
        if value <= 0:
            raise SliceError(f"{name}={value} must be positive")
        g, v = np.log2(grid), math.log2(value)
    else:
        g, v = grid, value
    order = np.sort(g)
    if len(order) > 1:
        lo = order[0] - (order[1] - order[0]) / 2
        hi = order[-1] + (order[-1] - order[-2]) / 2
    else:
        lo = hi = order[0]
    if not lo - 1e-9 <= v <= hi + 1e-9:
        raise SliceError(f"{name}={value} lies outside the tensor axis "
                         f"[{grid.min():.6g}, {grid.max():.6g}]")
    i = int(np.argmin(np.abs(g - v)))
    if abs(g[i] - v) > 1e-9 * max(1.0, abs(v)):
        print(f"warning: {name}={value} is off-grid, snapped to {grid[i]:.6g}", file=sys.stderr)
    return i


def _range(spec):
    lo, _, hi = spec.partition(":")
    lo = -math.inf if lo.strip() == "" else float(lo)
    hi = math.inf if hi.strip() == "" else float(hi)
    return lo, hi


def slice_rows(values, meta, fixed, ranges):
    """``(header, rows)`` for a tensor slice; fixed axes are snapped to the grid."""
    n_frames = values.shape[0]
    times = np.arange(n_frames) / meta["frame_rate"]
    freqs = np.asarray(meta["lambda1_hz"])
    three = values.ndim == 3
    if not three and {"alpha", "beta", "gamma"} & set(fixed):
        raise SliceError("this tensor has no lambda2 axis")
    axes = {"time": times, "lambda1": freqs}
    fix_idx = {}
    if "time" in fixed:
        fix_idx["time"] = _snap("time", float(fixed["time"]), times)
    if "lambda1" in fixed:
        fix_idx["lambda1"] = _snap("lambda1", float(fixed["lambda1"]), freqs, log=True)
    lam2 = meta.get("lambda2_axis", []) if three else []
    keep = list(range(len(lam2)))
    sub_present = []
    for name, key, log in (("alpha", "alpha_hz", True), ("beta", "beta_cpo", False),
                           ("gamma", "gamma_cpo", False)):
        col = [e[key] for e in lam2]
        if not three or all(c is None for c in col):
            if name in fixed:
                raise SliceError(f"this tensor has no {name} axis")
            continue
        grid = sorted({c for c in col})
        if name in fixed:
            target = grid[_snap(name, float(fixed[name]), grid, log=log)]
            keep = [k for k in keep if col[k] == target]
        else:
            sub_present.append((name, key))
    free_plain = [a for a in ("time", "lambda1") if a not in fix_idx]
    header = [AXES[a] for a in free_plain] + [AXES[n] for n, _ in sub_present] + ["value"]
    bounds = {name: _range(r) for name, r in ranges.items()}

    def ok(name, v):
        lo, hi = bounds.get(name, (-math.inf, math.inf))
        return lo - 1e-12 <= v <= hi + 1e-12

    t_idx = [fix_idx["time"]] if "time" in fix_idx else [
        i for i in range(n_frames) if ok("time", times[i])]
    f_idx = [fix_idx["lambda1"]] if "lambda1" in fix_idx else [
        i for i in range(len(freqs)) if ok("lambda1", freqs[i])]
    keep = [k for k in keep if all(ok(n, lam2[k][key]) for n, key in sub_present)]
    rows = []
    for ti in t_idx:
        for fi in f_idx:
            lead = [axes[a][i] for a, i in (("time", ti), ("lambda1", fi)) if a in free_plain]
            if three:
                for k in keep:
                    rows.append(lead + [lam2[k][key] for _, key in sub_present]
                                + [float(values[ti, fi, k])])
            else:
                rows.append(lead + [float(values[ti, fi])])
    return header, rows


def cmd_plot_data(args):
    fixed = _parse_pairs(args.fix, "--fix")
    ranges = _parse_pairs(args.range, "--range")
    for name, value in fixed.items():
        try:
            float(value)
        except ValueError:
            raise ConfigError(f"--fix {name}={value!r} is not a number") from None
    values, meta = sio.read_tensor(args.tensor)
    header, rows = slice_rows(values, meta, fixed, ranges)
    sio.write_csv(sys.stdout if args.out is None else args.out, header, rows)
    return EXIT_OK


# entry point ---------------------------------------------------------------

def _pair(text):
    lo, _, hi = text.partition(":")
    try:
        return [float(lo), float(hi)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="spiralscat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="scalogram and second-order scattering of a WAV file")
    a.add_argument("input", help="WAV file (PCM 16/24/32-bit or float)")
    a.add_argument("--config", help="JSON pipeline configuration")
    a.add_argument("--out", help="output directory (default from config, else ./out)")
    a.add_argument("--mode", choices=("time", "joint", "spiral"))
    a.add_argument("--Q1", type=int, help="first-order bins per octave")
    a.add_argument("--Q2", type=int, help="second-order quality factor (1 or 2)")
    a.add_argument("--J", type=int, help="octaves below Nyquist")
    a.add_argument("--T", type=float, help="averaging scale in seconds")
    a.add_argument("--T2", type=float, help="second-order averaging scale (default T)")
    a.add_argument("--hop", type=int, help="first-order hop in samples (default T/16)")
    a.add_argument("--decimate", type=int, help="second-order subsampling after the time stage")
    a.add_argument("--alpha-range", type=_pair, help="temporal modulation range lo:hi in Hz")
    a.add_argument("--beta-max", type=float, help="largest |beta| in cycles/octave")
    a.add_argument("--gamma-max", type=float, help="largest |gamma| in cycles/octave (<= 0.5)")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synth", help="render a warped source-filter signal to float WAV")
    s.add_argument("output", help="WAV path to write")
    s.add_argument("--spec", help="JSON source-filter description (flags below are ignored)")
    s.add_argument("--spec-out", help="also write the effective description as JSON")
    s.add_argument("--duration", type=float, help="seconds (default 1)")
    s.add_argument("--sample-rate", type=int, help="Hz (default 22050)")
    s.add_argument("--f0", type=float, help="fundamental at t=0 in Hz (default 440)")
    s.add_argument("--v-theta", type=float, help="pitch velocity in octaves/s")
    s.add_argument("--v-eta", type=float, help="spectral-envelope velocity in octaves/s")
    s.add_argument("--envelope", choices=("gaussian", "formant", "flat"))
    s.add_argument("--cutoff", type=float, help="envelope cutoff or formant center in Hz")
    s.add_argument("--formant-width", type=float, help="formant width in octaves")
    s.add_argument("--partials", type=int, help="number of partials P (default 16)")
    s.add_argument("--seed", type=int, help="seed for random partial phases")
    s.set_defaults(func=cmd_synth)

    v = sub.add_parser("validate", help="synthesize, analyze and check the ridge predictions")
    v.add_argument("--scenario", choices=sorted(SCENARIOS), default="ridge")
    v.add_argument("--config", help="JSON scenario overrides; key 'preset' picks the base")
    v.add_argument("--report", default="validation_report.json", help="JSON report path")
    v.set_defaults(func=cmd_validate)

    d = sub.add_parser("plot-data", help="export a tensor slice as CSV")
    d.add_argument("tensor", help="tensor base path, .f32 or .meta.json")
    d.add_argument("--fix", action="append", metavar="AXIS=VALUE",
                   help="fix an axis (time s, lambda1 Hz, alpha Hz, beta/gamma cycles/octave)")
    d.add_argument("--range", action="append", metavar="AXIS=LO:HI",
                   help="restrict a free axis to [LO, HI]")
    d.add_argument("--out", help="CSV path (default standard output)")
    d.set_defaults(func=cmd_plot_data)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _warnings_to_stderr():
            return args.func(args)
    except (SliceError, ConfigError, InvalidParameterError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
