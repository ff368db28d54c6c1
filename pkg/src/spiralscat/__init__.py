"""Wavelet scattering over time, log-frequency and octaves for audio.

The pipeline computes a constant-Q scalogram, then a second order that
filters it along time (``time``), time and log-frequency (``joint``), or
time, log-frequency and octave at fixed chroma (``spiral``). A warped
source-filter synthesizer and ridge-plane fit check the second order on
signals with known pitch and spectral-envelope velocities.
"""
from .filterbank import (InvalidParameterError, MotherWavelet, WaveletFilterbank,
                         build_alpha_bank, build_first_order_bank, build_spiral_banks,
                         design_mother_wavelet, littlewood_paley, lowpass_window,
                         spiral_wavelet)
from .scalogram import Scalogram, Signal, average_time, compute_scalogram, split_logfreq
from .scattering import (ScatteringTensor, SpiralIndex, average_tensor, joint_scattering,
                         spiral_scattering, time_scattering)
from .sourcefilter import (DegenerateFitError, Envelope, SourceFilterSpec, WarpSpec,
                           check_assumptions, closed_form_x2, fit_ridge_plane,
                           predicted_plane, synthesize)

__version__ = "0.1.0"

__all__ = [
    "DegenerateFitError", "Envelope", "InvalidParameterError", "MotherWavelet",
    "Scalogram", "ScatteringTensor", "Signal", "SourceFilterSpec", "SpiralIndex", "WarpSpec",
    "WaveletFilterbank", "average_tensor", "average_time", "build_alpha_bank",
    "build_first_order_bank", "build_spiral_banks", "check_assumptions", "closed_form_x2",
    "compute_scalogram", "design_mother_wavelet", "fit_ridge_plane", "joint_scattering",
    "littlewood_paley", "lowpass_window", "predicted_plane", "spiral_scattering",
    "spiral_wavelet", "split_logfreq", "synthesize", "time_scattering",
]
