"""Mel filterbank, its Moore-Penrose pseudoinverse, and the per-frame
lossy corruption operator (mel-compress then pseudoinverse-decode with a
magnitude re-take).

The filterbank acts on compressed-domain magnitudes, keeping a single
frame representation end-to-end through the flow process.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import StftConfig
from .errors import ConfigError, InputError

_PINV_RCOND = 1e-7


def hz_to_mel(f: np.ndarray, scale: str) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if scale == "htk":
        return 2595.0 * np.log10(1.0 + f / 700.0)
    if scale == "slaney":
        # Linear below 1 kHz, logarithmic above.
        f_sp = 200.0 / 3.0
        min_log_hz = 1000.0
        logstep = np.log(6.4) / 27.0
        mel = f / f_sp
        log_region = f >= min_log_hz
        mel = np.where(
            log_region,
            min_log_hz / f_sp + np.log(np.maximum(f, min_log_hz) / min_log_hz) / logstep,
            mel,
        )
        return mel
    raise ConfigError(f"unknown mel scale {scale!r}")


def mel_to_hz(m: np.ndarray, scale: str) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if scale == "htk":
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    if scale == "slaney":
        f_sp = 200.0 / 3.0
        min_log_hz = 1000.0
        min_log_mel = min_log_hz / f_sp
        logstep = np.log(6.4) / 27.0
        log_region = m >= min_log_mel
        return np.where(
            log_region,
            min_log_hz * np.exp(logstep * (np.maximum(m, min_log_mel) - min_log_mel)),
            f_sp * m,
        )
    raise ConfigError(f"unknown mel scale {scale!r}")


@dataclass(frozen=True)
class MelConfig:
    n_mels: int = 80
    f_min: float = 0.0
    f_max: float = 8000.0
    n_stft: int = 257
    mel_scale: str = "slaney"

    def validate(self, stft_cfg: StftConfig) -> None:
        if self.n_stft != stft_cfg.n_bins:
            raise ConfigError(
                f"n_stft {self.n_stft} does not match STFT bins {stft_cfg.n_bins}"
            )
        nyquist = stft_cfg.sample_rate / 2
        if not (0 <= self.f_min < self.f_max <= nyquist):
            raise ConfigError("need 0 <= f_min < f_max <= sample_rate/2")
        if self.n_mels >= self.n_stft:
            raise ConfigError("n_mels must be < n_stft (rank-deficient map)")


class MelOperator:
    """Dense mel matrix and its cached Moore-Penrose pseudoinverse."""

    def __init__(self, forward: np.ndarray, pinv: np.ndarray | None = None):
        forward = np.asarray(forward, dtype=np.float64)
        if forward.ndim != 2:
            raise ConfigError("mel matrix must be 2-D")
        if np.any(np.all(forward == 0, axis=1)):
            bad = int(np.flatnonzero(np.all(forward == 0, axis=1))[0])
            raise ConfigError(f"mel filter row {bad} is all zero (rank collapse)")
        self.forward = forward
        if pinv is None:
            pinv = np.linalg.pinv(forward, rcond=_PINV_RCOND)
        self.pinv = np.asarray(pinv, dtype=np.float64)
        if self.pinv.shape != (forward.shape[1], forward.shape[0]):
            raise ConfigError("pinv shape inconsistent with forward matrix")

    @property
    def n_mels(self) -> int:
        return self.forward.shape[0]

    @property
    def n_stft(self) -> int:
        return self.forward.shape[1]

    def _check_frame(self, frame: np.ndarray) -> np.ndarray:
        frame = np.asarray(frame)
        if frame.shape != (self.n_stft,):
            raise InputError(
                f"frame has {frame.shape} bins, operator expects {self.n_stft}"
            )
        return frame

    def mel_frame(self, frame: np.ndarray) -> np.ndarray:
        """Mel magnitude vector M |x| of one compressed-domain frame."""
        frame = self._check_frame(frame)
        return (self.forward @ np.abs(frame).astype(np.float64)).astype(np.float32)

    def pinv_decode(self, mel: np.ndarray) -> np.ndarray:
        """|M+ mel| + 0j as a compressed-domain frame."""
        mel = np.asarray(mel)
        if mel.shape != (self.n_mels,):
            raise InputError(f"mel vector has {mel.shape}, expected ({self.n_mels},)")
        if np.any(mel < 0):
            raise InputError("mel magnitudes must be nonnegative")
        mag = np.abs(self.pinv @ mel.astype(np.float64))
        return mag.astype(np.complex64)

    def corrupt(self, frame: np.ndarray) -> np.ndarray:
        """|M+ (M |x|)| + 0j. Same code path as mel_frame -> pinv_decode."""
        return self.pinv_decode(self.mel_frame(frame))


def build_mel_operator(mel_cfg: MelConfig, stft_cfg: StftConfig) -> MelOperator:
    """Triangular filters with slaney-style area normalization by default."""
    mel_cfg.validate(stft_cfg)
    n_fft = stft_cfg.window_len
    fft_freqs = np.arange(mel_cfg.n_stft) * stft_cfg.sample_rate / n_fft

    mel_pts = np.linspace(
        hz_to_mel(mel_cfg.f_min, mel_cfg.mel_scale),
        hz_to_mel(mel_cfg.f_max, mel_cfg.mel_scale),
        mel_cfg.n_mels + 2,
    )
    hz_pts = mel_to_hz(mel_pts, mel_cfg.mel_scale)

    weights = np.zeros((mel_cfg.n_mels, mel_cfg.n_stft))
    for i in range(mel_cfg.n_mels):
        lo, ctr, hi = hz_pts[i], hz_pts[i + 1], hz_pts[i + 2]
        rising = (fft_freqs - lo) / max(ctr - lo, 1e-12)
        falling = (hi - fft_freqs) / max(hi - ctr, 1e-12)
        tri = np.maximum(0.0, np.minimum(rising, falling))
        if mel_cfg.mel_scale == "slaney":
            tri *= 2.0 / (hi - lo)  # area normalization
        weights[i] = tri
    return MelOperator(weights)
