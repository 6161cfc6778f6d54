"""Streaming phase retrieval: per-frame Difference Map iterations with
committed overlap-add context and no look-ahead.

Two constraint projections act on one complex STFT frame:

* ``P_A`` replaces magnitudes with the target magnitudes, keeping phases
  (zero-magnitude bins get phase 0).
* ``P_B`` synthesizes the frame into the committed context, re-analyzes
  the resulting window and returns that spectrum. The re-analysis is
  normalized by the partial window coverage so that a frame taken from a
  real consistent STFT is an exact fixed point.

All magnitudes here live in the uncompressed (physical) domain;
conversion from the engine's compressed domain happens at the module
boundary (see cli.cmd_baseline).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import StftConfig
from .errors import ConfigError, InputError


@dataclass(frozen=True)
class DmConfig:
    beta: float = 1.75
    iters_per_frame: int = 50
    lookahead: int = 0  # fixed; strict streaming
    swap_projections: bool = False

    def __post_init__(self):
        if self.beta == 0:
            raise ConfigError("beta must be nonzero")
        if self.iters_per_frame < 0:
            raise ConfigError("iters_per_frame must be >= 0")
        if self.lookahead != 0:
            raise ConfigError("look-ahead is not supported")


def _analysis(segment: np.ndarray, cfg: StftConfig) -> np.ndarray:
    norm = "ortho" if cfg.fft_norm_ortho else "backward"
    return np.fft.rfft(cfg.window * segment, norm=norm)


def _synthesis_contribution(spectrum: np.ndarray, cfg: StftConfig) -> np.ndarray:
    norm = "ortho" if cfg.fft_norm_ortho else "backward"
    u = np.fft.irfft(spectrum, n=cfg.window_len, norm=norm)
    return cfg.synthesis_window() * u


def _coverage(cfg: StftConfig, has_context: bool) -> np.ndarray:
    """Fraction of the full OLA weight present in a partial window.

    With committed past context the first hop of the window is fully
    covered; the remainder only carries the current frame's synthesis
    weight (future frames are unknown under strict streaming).
    """
    w2 = cfg.window**2 / cfg.cola_denominator()
    cov = w2.copy()
    if has_context:
        overlap = cfg.window_len - cfg.hop_len
        cov[:overlap] = 1.0
    # window[0] == 0 for the periodic Hann; avoid division by zero there.
    return np.maximum(cov, 1e-12)


def project_magnitude(spectrum: np.ndarray, target_mag: np.ndarray) -> np.ndarray:
    mag = np.abs(spectrum)
    phase = np.where(mag > 0, spectrum / np.where(mag > 0, mag, 1.0), 1.0)
    return target_mag * phase


def project_consistency(
    spectrum: np.ndarray,
    context: np.ndarray,
    cfg: StftConfig,
    has_context: bool,
) -> np.ndarray:
    """Re-analyze the coverage-normalized OLA of context + this frame."""
    seg = np.zeros(cfg.window_len)
    overlap = cfg.window_len - cfg.hop_len
    seg[:overlap] = context
    seg += _synthesis_contribution(spectrum, cfg)
    seg /= _coverage(cfg, has_context)
    return _analysis(seg, cfg)


def dm_iterate(
    spectrum: np.ndarray,
    target_mag: np.ndarray,
    context: np.ndarray,
    cfg: DmConfig,
    stft_cfg: StftConfig,
    has_context: bool = True,
) -> np.ndarray:
    """One Difference Map update x <- x + beta (P_A(f_B(x)) - P_B(f_A(x)))
    with the Elser estimators f_A = P_A - (P_A - x)/beta and
    f_B = P_B + (P_B - x)/beta."""
    x = np.asarray(spectrum, dtype=np.complex128)
    target_mag = np.asarray(target_mag, dtype=np.float64)
    if x.shape != target_mag.shape:
        raise InputError("spectrum and target magnitudes must have equal shape")
    beta = cfg.beta

    def p_a(y):
        return project_magnitude(y, target_mag)

    def p_b(y):
        return project_consistency(y, context, stft_cfg, has_context)

    if cfg.swap_projections:
        p_a, p_b = p_b, p_a

    f_a = p_a(x) - (p_a(x) - x) / beta
    f_b = p_b(x) + (p_b(x) - x) / beta
    return x + beta * (p_a(f_b) - p_b(f_a))


def dm_readout(
    spectrum: np.ndarray,
    target_mag: np.ndarray,
    context: np.ndarray,
    cfg: DmConfig,
    stft_cfg: StftConfig,
    has_context: bool = True,
) -> np.ndarray:
    """Solution estimate P_A(f_B(x)) from the current DM iterate."""
    p_b = project_consistency(spectrum, context, stft_cfg, has_context)
    f_b = p_b + (p_b - spectrum) / cfg.beta
    return project_magnitude(f_b, np.asarray(target_mag, dtype=np.float64))


class RtisiState:
    """Committed overlap-add tail plus frame counter for one stream."""

    def __init__(self, stft_cfg: StftConfig, cfg: DmConfig | None = None):
        self.stft_cfg = stft_cfg
        self.cfg = cfg if cfg is not None else DmConfig()
        self._acc = np.zeros(stft_cfg.window_len, dtype=np.float64)
        self.frame_count = 0
        self.last_residuals: np.ndarray | None = None

    @property
    def committed_tail(self) -> np.ndarray:
        return self._acc[: self.stft_cfg.window_len - self.stft_cfg.hop_len].copy()

    def process_frame(self, target_mag: np.ndarray) -> np.ndarray:
        """Run the per-frame DM iterations, commit, emit hop_len samples."""
        cfg, stft_cfg = self.cfg, self.stft_cfg
        target_mag = np.asarray(target_mag, dtype=np.float64)
        if target_mag.shape != (stft_cfg.n_bins,):
            raise InputError(
                f"expected {stft_cfg.n_bins} magnitudes, got {target_mag.shape}"
            )
        if np.any(target_mag < 0):
            raise InputError("target magnitudes must be nonnegative")

        has_context = self.frame_count > 0
        context = self.committed_tail

        if cfg.iters_per_frame == 0:
            # Degenerate anchor: commit the zero-phase spectrum untouched.
            final = target_mag.astype(np.complex128)
            self.last_residuals = np.zeros(0)
        else:
            # Seed phases from re-analysis of the committed context with
            # the new frame region zero-filled (zero phase on frame 0).
            if has_context:
                seed_spec = project_consistency(
                    np.zeros(stft_cfg.n_bins, dtype=np.complex128),
                    context,
                    stft_cfg,
                    has_context,
                )
                x = project_magnitude(seed_spec, target_mag)
            else:
                x = target_mag.astype(np.complex128)
            residuals = np.empty(cfg.iters_per_frame)
            for i in range(cfg.iters_per_frame):
                residuals[i] = np.linalg.norm(
                    project_consistency(x, context, stft_cfg, has_context) - x
                )
                x = dm_iterate(x, target_mag, context, cfg, stft_cfg, has_context)
            self.last_residuals = residuals
            final = dm_readout(x, target_mag, context, cfg, stft_cfg, has_context)

        self._acc += _synthesis_contribution(final, stft_cfg)
        out = self._acc[: stft_cfg.hop_len].astype(np.float32)
        hop = stft_cfg.hop_len
        self._acc[:-hop] = self._acc[hop:]
        self._acc[-hop:] = 0.0
        self.frame_count += 1
        return out


def rtisi_dm_frame(
    state: RtisiState, target_mag: np.ndarray, cfg: DmConfig, stft_cfg: StftConfig
) -> np.ndarray:
    if state.stft_cfg.window_len != stft_cfg.window_len:
        raise InputError("state was created with a different STFT config")
    state.cfg = cfg
    return state.process_frame(target_mag)
