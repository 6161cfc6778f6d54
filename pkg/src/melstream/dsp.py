"""Streaming STFT analysis/synthesis with magnitude compression.

Frames are one-sided complex spectra in the *compressed* domain:
magnitudes raised to ``compress_alpha``, phases untouched. Synthesis uses
the dual (WOLA) window ``w / sum_k w[n + k*hop]^2`` so that
analysis -> synthesis is exact in steady state for the periodic Hann
window at 50% overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, InputError


def periodic_hann(n: int) -> np.ndarray:
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


@dataclass(frozen=True, eq=False)
class StftConfig:
    sample_rate: int = 16000
    window_len: int = 512
    hop_len: int = 256
    fft_norm_ortho: bool = True
    compress_alpha: float = 0.5
    window: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.window_len % 2 != 0:
            raise ConfigError("window_len must be even")
        if self.hop_len * 2 != self.window_len:
            raise ConfigError("hop_len must be window_len / 2 (50% overlap)")
        if not (0.0 < self.compress_alpha <= 1.0):
            raise ConfigError("compress_alpha must be in (0, 1]")
        if self.window is None:
            object.__setattr__(self, "window", periodic_hann(self.window_len))
        w = np.asarray(self.window, dtype=np.float64)
        if w.shape != (self.window_len,):
            raise ConfigError("window length must equal window_len")
        if np.any(w < 0) or w.sum() <= 0:
            raise ConfigError("window must be nonnegative with positive sum")
        object.__setattr__(self, "window", w)

    @property
    def n_bins(self) -> int:
        return self.window_len // 2 + 1

    @property
    def hop_ms(self) -> float:
        return 1000.0 * self.hop_len / self.sample_rate

    def cola_denominator(self) -> np.ndarray:
        """Sum of squared window over all hop shifts, periodically."""
        w2 = self.window**2
        denom = np.zeros(self.window_len)
        for k in range(self.window_len // self.hop_len):
            denom += np.roll(w2, k * self.hop_len)
        return denom

    def synthesis_window(self) -> np.ndarray:
        return self.window / self.cola_denominator()


@dataclass(frozen=True)
class LatencyReport:
    algorithmic_latency_ms: float
    total_latency_ms: float
    hop_ms: float
    per_frame_budget_ms: float

    def __str__(self):
        return (
            f"algorithmic latency: {self.algorithmic_latency_ms:.1f} ms, "
            f"total latency: {self.total_latency_ms:.1f} ms, "
            f"per-frame budget: {self.per_frame_budget_ms:.1f} ms"
        )


def latency_report(cfg: StftConfig) -> LatencyReport:
    algo = 1000.0 * cfg.window_len / cfg.sample_rate
    return LatencyReport(
        algorithmic_latency_ms=algo,
        total_latency_ms=algo + cfg.hop_ms,
        hop_ms=cfg.hop_ms,
        per_frame_budget_ms=cfg.hop_ms,
    )


def compress_magnitudes(spectrum: np.ndarray, alpha: float) -> np.ndarray:
    """Raise magnitudes to ``alpha`` keeping phases; 0 stays exactly 0."""
    mag = np.abs(spectrum)
    out = np.zeros_like(spectrum)
    nz = mag > 0
    out[nz] = spectrum[nz] * (mag[nz] ** (alpha - 1.0))
    return out


def decompress_magnitudes(spectrum: np.ndarray, alpha: float) -> np.ndarray:
    return compress_magnitudes(spectrum, 1.0 / alpha)


def analyze_frame(samples: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """One STFT analysis frame: window, orthonormal rFFT, compress."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape != (cfg.window_len,):
        raise InputError(
            f"expected exactly {cfg.window_len} samples, got shape {samples.shape}"
        )
    if not np.all(np.isfinite(samples)):
        raise DataError("non-finite samples in analysis frame")
    norm = "ortho" if cfg.fft_norm_ortho else "backward"
    spec = np.fft.rfft(cfg.window * samples, norm=norm)
    return compress_magnitudes(spec, cfg.compress_alpha).astype(np.complex64)


def analyze_signal(signal: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """Sliding-window analysis of a whole signal; returns (T, n_bins)."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or len(signal) < cfg.window_len:
        raise InputError("signal must be 1-D and at least one window long")
    n_frames = 1 + (len(signal) - cfg.window_len) // cfg.hop_len
    frames = np.empty((n_frames, cfg.n_bins), dtype=np.complex64)
    for t in range(n_frames):
        start = t * cfg.hop_len
        frames[t] = analyze_frame(signal[start : start + cfg.window_len], cfg)
    return frames


class StreamSynthesizer:
    """Overlap-add synthesis state for one stream.

    Each ``push`` consumes one compressed-domain frame and emits exactly
    ``hop_len`` samples. The first ``window_len - hop_len`` emitted
    samples are only partially overlapped (stream warm-up).
    """

    def __init__(self, cfg: StftConfig):
        self.cfg = cfg
        self._synth_win = cfg.synthesis_window()
        self._acc = np.zeros(cfg.window_len, dtype=np.float64)
        self.frames_pushed = 0

    def push(self, frame: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        frame = np.asarray(frame)
        if frame.shape != (cfg.n_bins,):
            raise InputError(f"expected {cfg.n_bins} bins, got {frame.shape}")
        spec = decompress_magnitudes(frame.astype(np.complex128), cfg.compress_alpha)
        norm = "ortho" if cfg.fft_norm_ortho else "backward"
        u = np.fft.irfft(spec, n=cfg.window_len, norm=norm)
        self._acc += self._synth_win * u
        out = self._acc[: cfg.hop_len].astype(np.float32)
        self._acc[:-cfg.hop_len] = self._acc[cfg.hop_len:]
        self._acc[-cfg.hop_len:] = 0.0
        self.frames_pushed += 1
        return out

    def tail(self) -> np.ndarray:
        """Remaining (window_len - hop_len) partially-overlapped samples."""
        return self._acc[: self.cfg.window_len - self.cfg.hop_len].astype(np.float32)


def synthesize_frames(frames: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """Offline convenience wrapper: OLA-synthesize a whole frame sequence.

    Returns hop_len * T samples (the streaming emission, no tail).
    """
    synth = StreamSynthesizer(cfg)
    return np.concatenate([synth.push(f) for f in np.asarray(frames)])
