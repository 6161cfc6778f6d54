"""Streaming/offline equivalence and causality probes, shared by the
`verify` CLI subcommand and the test suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import StftConfig, synthesize_frames
from .flow import FlowConfig, StreamSession, sample_offline
from .mel import MelOperator
from .net import CausalNet

NET_TOLERANCE = 1e-5
FLOW_TOLERANCE = 1e-4


def random_frames(n_frames: int, n_bins: int, seed: int = 0, scale: float = 1.0):
    rng = np.random.default_rng(seed)
    re, im = rng.standard_normal((2, n_frames, n_bins))
    return (scale * (re + 1j * im)).astype(np.complex64)


def stream_net(net: CausalNet, frames: np.ndarray, tau: float) -> np.ndarray:
    state = net.new_state()
    return np.stack([net.forward_step(state, f, tau) for f in frames])


def net_equivalence_dev(net: CausalNet, frames: np.ndarray, tau: float = 0.3) -> float:
    """Max abs deviation between offline and frame-by-frame execution."""
    offline = net.forward_offline(frames, tau)
    streamed = stream_net(net, frames, tau)
    return float(np.max(np.abs(offline - streamed)))


def causality_violations(net: CausalNet, frames: np.ndarray, t0: int, tau: float = 0.3):
    """Frames with index < t0 that change when input frame t0 is perturbed."""
    base = net.forward_offline(frames, tau)
    perturbed = frames.copy()
    perturbed[t0] += 1.0 + 1.0j
    out = net.forward_offline(perturbed, tau)
    changed = np.flatnonzero(np.any(out != base, axis=1))
    return [int(t) for t in changed if t < t0]


def receptive_field_probe(
    net: CausalNet, frames: np.ndarray, t_out: int, lag: int, tau: float = 0.3
) -> bool:
    """True iff perturbing input frame (t_out - lag) changes output t_out."""
    base = net.forward_offline(frames, tau)
    perturbed = frames.copy()
    perturbed[t_out - lag] += 1.0 + 1.0j
    out = net.forward_offline(perturbed, tau)
    return bool(np.any(out[t_out] != base[t_out]))


def flow_field_probe(
    net: CausalNet, frames: np.ndarray, cfg: FlowConfig, t_out: int, lag: int
) -> bool:
    """Perturbation probe through the whole N-step sampler (sigma_y=0)."""
    cfg0 = FlowConfig(n_steps=cfg.n_steps, sigma_y=0.0, seed=cfg.seed)
    base = sample_offline(net, frames, cfg0)
    perturbed = frames.copy()
    perturbed[t_out - lag] += 1.0 + 1.0j
    out = sample_offline(net, perturbed, cfg0)
    return bool(np.any(out[t_out] != base[t_out]))


def flow_equivalence_dev(
    net: CausalNet,
    mel_frames: np.ndarray,
    flow_cfg: FlowConfig,
    stft_cfg: StftConfig,
    mel_op: MelOperator,
) -> float:
    """Max abs waveform deviation between stream_step and sample_offline."""
    corrupted = np.stack([mel_op.pinv_decode(m) for m in mel_frames])
    offline_frames = sample_offline(net, corrupted, flow_cfg)
    offline_wav = synthesize_frames(offline_frames, stft_cfg)

    session = StreamSession(net, flow_cfg, stft_cfg, mel_op)
    stream_wav = np.concatenate([session.step(m) for m in mel_frames])
    return float(np.max(np.abs(offline_wav - stream_wav)))


@dataclass
class VerifyResult:
    net_dev: float
    flow_dev: float
    causality_ok: bool
    tightness_ok: bool
    details: list

    @property
    def passed(self) -> bool:
        return (
            self.net_dev < NET_TOLERANCE
            and self.flow_dev < FLOW_TOLERANCE
            and self.causality_ok
            and self.tightness_ok
        )


def run_verification(
    net: CausalNet,
    stft_cfg: StftConfig,
    mel_op: MelOperator,
    flow_cfg: FlowConfig,
    n_frames: int = 200,
    seed: int = 0,
) -> VerifyResult:
    details = []
    frames = random_frames(n_frames, net.n_freq_bins, seed=seed, scale=0.5)
    net_dev = net_equivalence_dev(net, frames)
    details.append(f"net streaming/offline max abs dev: {net_dev:.3e}")

    rng = np.random.default_rng(seed + 1)
    # Scaled to the magnitude range of compressed-domain speech frames.
    mel_frames = rng.uniform(0.0, 0.05, size=(n_frames, mel_op.n_mels)).astype(
        np.float32
    )
    flow_dev = flow_equivalence_dev(net, mel_frames, flow_cfg, stft_cfg, mel_op)
    details.append(f"flow streaming/offline max abs waveform dev: {flow_dev:.3e}")

    causality_ok = True
    if n_frames >= 2:
        t0 = max(1, n_frames // 2)
        violations = causality_violations(net, frames, t0)
        causality_ok = not violations
        details.append(
            "causality probe: "
            + ("ok" if causality_ok else f"violated at frames {violations}")
        )

    r = net.receptive_field
    tightness_ok = True
    if n_frames > r + 2:
        t_out = n_frames - 1
        beyond = receptive_field_probe(net, frames, t_out, r + 1)
        tightness_ok = not beyond
        details.append(
            f"receptive field R={r}: frame t-R-1 influence: "
            + ("none (ok)" if tightness_ok else "DETECTED (violation)")
        )
    return VerifyResult(net_dev, flow_dev, causality_ok, tightness_ok, details)
