"""Flow-matching inference: equidistant Euler sampler, offline and
streaming. The streaming mode holds N independent cache banks, one per
solver call, so each new frame is pushed through all N network calls
within one hop budget.

Noise is drawn from a counter-based generator keyed by (seed, frame
index) so that offline and streaming modes see bit-identical noise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dsp import StftConfig, StreamSynthesizer
from .errors import ConfigError, DataError, InputError
from .mel import MelOperator


@dataclass(frozen=True)
class FlowConfig:
    n_steps: int = 5
    sigma_y: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")
        if self.sigma_y < 0:
            raise ConfigError("sigma_y must be >= 0")

    @property
    def delta_tau(self) -> float:
        return 1.0 / self.n_steps

    @property
    def tau_schedule(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.delta_tau


def frame_noise(seed: int, frame_idx: int, n_bins: int) -> np.ndarray:
    """Standard complex-component Gaussian for one frame, reproducible
    independently of draw order (Philox keyed by seed and frame index)."""
    bits = np.random.Philox(key=np.array([seed, frame_idx], dtype=np.uint64))
    eps = np.random.Generator(bits).standard_normal((2, n_bins), dtype=np.float32)
    return (eps[0] + 1j * eps[1]).astype(np.complex64)


def sample_offline(net, corrupted: np.ndarray, cfg: FlowConfig) -> np.ndarray:
    """Euler-integrate the learned velocity field over a whole sequence.

    corrupted: (T, F) complex frames (mel-corrupted, zero imaginary).
    Returns the denoised estimate after N steps.
    """
    corrupted = np.asarray(corrupted)
    if corrupted.ndim != 2:
        raise InputError("expected a (T, F) frame sequence")
    if not np.all(np.isfinite(corrupted)):
        raise DataError("non-finite values in corrupted input")
    n_frames, n_bins = corrupted.shape
    y = corrupted.astype(np.complex64)
    if cfg.sigma_y > 0:
        eps = np.stack([frame_noise(cfg.seed, t, n_bins) for t in range(n_frames)])
        y = (y + np.complex64(cfg.sigma_y) * eps).astype(np.complex64)
    dt = np.float32(cfg.delta_tau)
    for n in range(cfg.n_steps):
        v = net.forward_offline(y, tau=n * cfg.delta_tau)
        y = (y + dt * v).astype(np.complex64)
    return y


def effective_receptive_field(net, cfg: FlowConfig) -> int:
    """N sequential calls compound the per-call receptive field to N*R."""
    return cfg.n_steps * net.receptive_field


@dataclass
class FrameTiming:
    frame_idx: int
    per_call_ms: list
    total_ms: float

    def line(self) -> str:
        calls = " ".join(f"{c:.3f}" for c in self.per_call_ms)
        return f"{self.frame_idx} {calls} {self.total_ms:.3f}"


class StreamSession:
    """One audio stream: N cache banks, overlap-add state, RNG stream."""

    def __init__(
        self,
        net,
        flow_cfg: FlowConfig,
        stft_cfg: StftConfig,
        mel_op: MelOperator,
        seed: int | None = None,
    ):
        if mel_op.n_stft != stft_cfg.n_bins:
            raise ConfigError(
                f"mel operator has {mel_op.n_stft} STFT bins, config has {stft_cfg.n_bins}"
            )
        self.net = net
        self.flow_cfg = flow_cfg
        self.stft_cfg = stft_cfg
        self.mel_op = mel_op
        self.seed = flow_cfg.seed if seed is None else seed
        self.states = [net.new_state() for _ in range(flow_cfg.n_steps)]
        self.synth = StreamSynthesizer(stft_cfg)
        self.frame_idx = 0
        self.timings: list[FrameTiming] = []

    def cache_bank_shapes(self) -> list[dict]:
        return [s.cache_shapes() for s in self.states]

    def step(self, mel: np.ndarray) -> np.ndarray:
        """Process one incoming mel frame, return hop_len audio samples."""
        t_start = time.perf_counter()
        cfg = self.flow_cfg
        y = self.mel_op.pinv_decode(mel)
        if cfg.sigma_y > 0:
            eps = frame_noise(self.seed, self.frame_idx, len(y))
            y = (y + np.complex64(cfg.sigma_y) * eps).astype(np.complex64)
        dt = np.float32(cfg.delta_tau)
        per_call = []
        for n in range(cfg.n_steps):
            t_call = time.perf_counter()
            v = self.net.forward_step(self.states[n], y, tau=n * cfg.delta_tau)
            # Euler update folded into the pointwise stage between calls.
            y = (y + dt * v).astype(np.complex64)
            per_call.append(1000.0 * (time.perf_counter() - t_call))
        samples = self.synth.push(y)
        total_ms = 1000.0 * (time.perf_counter() - t_start)
        self.timings.append(FrameTiming(self.frame_idx, per_call, total_ms))
        self.frame_idx += 1
        return samples

    def timing_report(self) -> str:
        """One line per frame: frame index, per-call ms, total ms."""
        header = "# frame per_call_ms... total_ms"
        return "\n".join([header] + [t.line() for t in self.timings]) + "\n"

    def rtf(self) -> float:
        if not self.timings:
            return float("nan")
        mean_ms = float(np.mean([t.total_ms for t in self.timings]))
        return mean_ms / self.stft_cfg.hop_ms


def new_session(
    net,
    flow_cfg: FlowConfig,
    stft_cfg: StftConfig,
    mel_op: MelOperator,
    seed: int | None = None,
) -> StreamSession:
    return StreamSession(net, flow_cfg, stft_cfg, mel_op, seed)
