"""Intrusive desk-scale metrics: SI-SDR, log-spectral distance,
mel-cepstral distortion."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.fft import dct

from .dsp import StftConfig, analyze_signal, decompress_magnitudes
from .errors import InputError
from .mel import MelConfig, build_mel_operator

SI_SDR_CAP_DB = 60.0
_LSD_EPS = 1e-8
_MCD_N_COEFFS = 13


@dataclass(frozen=True)
class MetricReport:
    si_sdr: float
    lsd: float
    mcd: float
    frames_compared: int
    # Slots for externally computed perceptual metrics (not produced here).
    external: dict | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["external"] is None:
            del d["external"]
        d["version"] = 1
        return d


def _check_pair(reference: np.ndarray, estimate: np.ndarray):
    reference = np.asarray(reference, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if reference.shape != estimate.shape or reference.ndim != 1:
        raise InputError("reference and estimate must be equal-length 1-D signals")
    if not np.any(reference):
        raise InputError("reference signal is silent; metric undefined")
    return reference, estimate


def si_sdr(reference: np.ndarray, estimate: np.ndarray) -> float:
    """Scale-invariant SDR in dB, capped at +60 for near-identical pairs."""
    reference, estimate = _check_pair(reference, estimate)
    scale = np.dot(estimate, reference) / np.dot(reference, reference)
    projection = scale * reference
    residual = estimate - projection
    num = np.dot(projection, projection)
    den = np.dot(residual, residual)
    if den <= 0 or num / den > 10 ** (SI_SDR_CAP_DB / 10):
        return SI_SDR_CAP_DB
    return float(10.0 * np.log10(num / den))


def _magnitude_spectrogram(signal: np.ndarray, cfg: StftConfig) -> np.ndarray:
    frames = analyze_signal(signal, cfg)
    return np.abs(decompress_magnitudes(frames.astype(np.complex128), cfg.compress_alpha))


def lsd(reference: np.ndarray, estimate: np.ndarray, stft_cfg: StftConfig) -> float:
    """RMS over frames of the per-frame RMS 20*log10 magnitude difference."""
    reference, estimate = _check_pair(reference, estimate)
    ref_mag = _magnitude_spectrogram(reference, stft_cfg)
    est_mag = _magnitude_spectrogram(estimate, stft_cfg)
    diff = 20.0 * (
        np.log10(ref_mag + _LSD_EPS) - np.log10(est_mag + _LSD_EPS)
    )
    per_frame = np.sqrt(np.mean(diff**2, axis=1))
    return float(np.sqrt(np.mean(per_frame**2)))


def _mel_cepstra(
    signal: np.ndarray, op, cfg: StftConfig
) -> np.ndarray:
    mags = _magnitude_spectrogram(signal, cfg)
    mel_energies = mags @ op.forward.T
    log_mel = np.log10(mel_energies + _LSD_EPS)
    return dct(log_mel, type=2, axis=1, norm="ortho")


def mcd(
    reference: np.ndarray,
    estimate: np.ndarray,
    mel_cfg: MelConfig,
    stft_cfg: StftConfig,
) -> float:
    """Mean over frames of (10/ln10)*sqrt(2)*||c_ref - c_est||, cepstral
    coefficients 1..13 (coefficient 0, the gain, excluded)."""
    reference, estimate = _check_pair(reference, estimate)
    op = build_mel_operator(mel_cfg, stft_cfg)
    c_ref = _mel_cepstra(reference, op, stft_cfg)[:, 1 : _MCD_N_COEFFS + 1]
    c_est = _mel_cepstra(estimate, op, stft_cfg)[:, 1 : _MCD_N_COEFFS + 1]
    dist = np.linalg.norm(c_ref - c_est, axis=1)
    return float((10.0 / math.log(10.0)) * math.sqrt(2.0) * np.mean(dist))


def metric_report(
    reference: np.ndarray,
    estimate: np.ndarray,
    stft_cfg: StftConfig,
    mel_cfg: MelConfig,
) -> MetricReport:
    reference = np.asarray(reference, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    n_frames = 1 + (len(reference) - stft_cfg.window_len) // stft_cfg.hop_len
    return MetricReport(
        si_sdr=si_sdr(reference, estimate),
        lsd=lsd(reference, estimate, stft_cfg),
        mcd=mcd(reference, estimate, mel_cfg, stft_cfg),
        frames_compared=n_frames,
    )
