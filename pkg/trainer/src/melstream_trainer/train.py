"""Toy-scale flow-matching training.

The target is the straight-line velocity X1 - X0 of the interpolation
x_tau = (1 - tau) * X0 + tau * X1, where X1 is a clean compressed STFT
frame sequence and X0 is its mel-corrupted version plus sigma_y noise.
The trained network is exported as an MFWB1 bundle the engine loads
directly (spec hash recorded; export refuses on any spec mismatch).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from melstream import (
    WeightBundle,
    analyze_signal,
    build_mel_operator,
    bundle_from_weights,
    random_weights,
)
from melstream import config as engine_config
from melstream.errors import ConfigError
from melstream.net import NetSpec

from .dataset import DatasetSpec, make_toy_dataset
from .torchnet import BlockNet, build_torch_net


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 2000
    batch_size: int = 8
    crop_seconds: float = 2.0
    lr_max: float = 5e-4
    lr_min: float = 1e-6
    warmup_steps: int = 100
    sigma_y: float = 0.25
    seed: int = 0
    eval_every: int = 50
    engine_config: str | None = None  # shared key-value config file
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    loss_csv: str | None = None

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1:
            raise ConfigError("steps and batch_size must be >= 1")
        if self.warmup_steps < 0:
            raise ConfigError("warmup_steps must be >= 0")


def load_engine_configs(cfg: TrainConfig):
    """STFT/mel/flow configs from the shared config source; the trainer's
    sigma_y must agree with it bit-for-bit."""
    kv = (
        engine_config.load_config_file(cfg.engine_config)
        if cfg.engine_config
        else {}
    )
    stft_cfg = engine_config.stft_config_from_dict(kv)
    mel_cfg = engine_config.mel_config_from_dict(kv, stft_cfg)
    flow_cfg = engine_config.flow_config_from_dict(kv)
    if flow_cfg.sigma_y != cfg.sigma_y:
        raise ConfigError(
            f"sigma_y mismatch: trainer {cfg.sigma_y}, engine config "
            f"{flow_cfg.sigma_y} (they must come from one source)"
        )
    return stft_cfg, mel_cfg, flow_cfg


def lr_at(step: int, cfg: TrainConfig) -> float:
    """Linear warmup to lr_max, then cosine decay to lr_min."""
    if step < cfg.warmup_steps:
        return cfg.lr_max * (step + 1) / cfg.warmup_steps
    span = max(1, cfg.steps - cfg.warmup_steps)
    t = min(1.0, (step - cfg.warmup_steps) / span)
    return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (1 + math.cos(math.pi * t))


def prepare_frames(corpus: np.ndarray, stft_cfg, mel_cfg):
    """Per-clip clean frames X1 and mel-corrupted frames Y (both complex64)."""
    mel_op = build_mel_operator(mel_cfg, stft_cfg)
    clean, corrupted = [], []
    for clip in corpus:
        frames = analyze_signal(clip.astype(np.float64), stft_cfg)
        clean.append(frames)
        corrupted.append(np.stack([mel_op.corrupt(f) for f in frames]))
    return np.stack(clean), np.stack(corrupted)


class _Batcher:
    """Random (clip, frame-crop) batches with per-sample tau and noise."""

    def __init__(self, clean, corrupted, crop_frames, sigma_y, rng):
        self.clean = clean
        self.corrupted = corrupted
        self.crop = min(crop_frames, clean.shape[1])
        self.sigma_y = sigma_y
        self.rng = rng

    def sample(self, batch_size):
        n_clips, n_frames, n_bins = self.clean.shape
        idx = self.rng.integers(0, n_clips, batch_size)
        starts = self.rng.integers(0, n_frames - self.crop + 1, batch_size)
        x1 = np.stack([self.clean[i, s : s + self.crop] for i, s in zip(idx, starts)])
        y = np.stack(
            [self.corrupted[i, s : s + self.crop] for i, s in zip(idx, starts)]
        )
        eps = self.rng.standard_normal((2, *y.shape)).astype(np.float32)
        x0 = y + self.sigma_y * (eps[0] + 1j * eps[1])
        tau = self.rng.uniform(0.0, 1.0, batch_size).astype(np.float32)
        x_tau = (1.0 - tau[:, None, None]) * x0 + tau[:, None, None] * x1
        return (
            x_tau.astype(np.complex64),
            (x1 - x0).astype(np.complex64),
            tau,
        )


def _loss_on(model: BlockNet, x_tau, velocity, tau) -> torch.Tensor:
    xin = model.encode_frames(x_tau)
    target = model.encode_frames(velocity)
    out = model(xin, torch.from_numpy(np.asarray(tau, np.float32)))
    nb = model.n_freq_bins
    return torch.mean((out[:, :, :nb] - target[:, :, :nb]) ** 2)


def export_bundle(model: BlockNet, spec: NetSpec, metadata: dict) -> WeightBundle:
    """Engine-format bundle; refuses to export on any spec mismatch."""
    bundle = bundle_from_weights(model.export_weights(), spec, metadata)
    bundle.validate_against(spec)
    return bundle


def train(cfg: TrainConfig, spec: NetSpec) -> tuple[WeightBundle, dict]:
    stft_cfg, mel_cfg, _ = load_engine_configs(cfg)
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)

    corpus = make_toy_dataset(cfg.dataset)
    clean, corrupted = prepare_frames(corpus, stft_cfg, mel_cfg)
    crop_frames = max(
        4,
        int(
            (cfg.crop_seconds * stft_cfg.sample_rate - stft_cfg.window_len)
            // stft_cfg.hop_len
        )
        + 1,
    )
    batcher = _Batcher(clean, corrupted, crop_frames, cfg.sigma_y, rng)
    frozen = batcher.sample(cfg.batch_size)

    model = build_torch_net(spec, n_freq_bins=stft_cfg.n_bins)
    model.import_weights(random_weights(spec, seed=cfg.seed))
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr_max)

    history = {"step": [], "train_loss": [], "frozen_loss": [], "lr": []}

    def frozen_loss():
        model.eval()
        with torch.no_grad():
            value = float(_loss_on(model, *frozen))
        model.train()
        return value

    model.train()
    for step in range(cfg.steps):
        lr = lr_at(step, cfg)
        for group in opt.param_groups:
            group["lr"] = lr
        loss = _loss_on(model, *batcher.sample(cfg.batch_size))
        opt.zero_grad()
        loss.backward()
        opt.step()
        if step % cfg.eval_every == 0 or step == cfg.steps - 1:
            history["step"].append(step)
            history["train_loss"].append(float(loss.detach()))
            history["frozen_loss"].append(frozen_loss())
            history["lr"].append(lr)

    model.eval()
    if cfg.loss_csv:
        with open(cfg.loss_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "train_loss", "frozen_loss", "lr"])
            writer.writerows(zip(*history.values()))

    bundle = export_bundle(
        model,
        spec,
        {
            "sigma_y": cfg.sigma_y,
            "compress_alpha": stft_cfg.compress_alpha,
            "train_steps": cfg.steps,
            "train_seed": cfg.seed,
            "final_frozen_loss": f"{history['frozen_loss'][-1]:.6e}",
        },
    )
    return bundle, history
