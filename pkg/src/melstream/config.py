"""Key-value text configs pinning STFT, mel, and flow parameters so the
engine, baseline, and trainer construct identical pipelines from one
source. Default config directory comes from $MELSTREAM_CONFIG_DIR."""

from __future__ import annotations

import os
from pathlib import Path

from .dsp import StftConfig
from .errors import ConfigError
from .flow import FlowConfig
from .mel import MelConfig

ENV_CONFIG_DIR = "MELSTREAM_CONFIG_DIR"


def parse_kv_text(text: str) -> dict[str, str]:
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line: {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def format_kv_text(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def stft_config_from_dict(kv: dict) -> StftConfig:
    return StftConfig(
        sample_rate=int(kv.get("sample_rate", 16000)),
        window_len=int(kv.get("window_len", 512)),
        hop_len=int(kv.get("hop_len", 256)),
        fft_norm_ortho=kv.get("fft_norm_ortho", "1") not in ("0", "false"),
        compress_alpha=float(kv.get("compress_alpha", 0.5)),
    )


def mel_config_from_dict(kv: dict, stft_cfg: StftConfig) -> MelConfig:
    return MelConfig(
        n_mels=int(kv.get("n_mels", 80)),
        f_min=float(kv.get("f_min", 0.0)),
        f_max=float(kv.get("f_max", 8000.0)),
        n_stft=int(kv.get("n_stft", stft_cfg.n_bins)),
        mel_scale=kv.get("mel_scale", "slaney"),
    )


def flow_config_from_dict(kv: dict) -> FlowConfig:
    return FlowConfig(
        n_steps=int(kv.get("n_steps", 5)),
        sigma_y=float(kv.get("sigma_y", 0.25)),
        seed=int(kv.get("seed", 0)),
    )


def configs_to_text(stft_cfg: StftConfig, mel_cfg: MelConfig, flow_cfg: FlowConfig) -> str:
    return format_kv_text(
        {
            "sample_rate": stft_cfg.sample_rate,
            "window_len": stft_cfg.window_len,
            "hop_len": stft_cfg.hop_len,
            "fft_norm_ortho": int(stft_cfg.fft_norm_ortho),
            "compress_alpha": stft_cfg.compress_alpha,
            "n_mels": mel_cfg.n_mels,
            "f_min": mel_cfg.f_min,
            "f_max": mel_cfg.f_max,
            "n_stft": mel_cfg.n_stft,
            "mel_scale": mel_cfg.mel_scale,
            "n_steps": flow_cfg.n_steps,
            "sigma_y": flow_cfg.sigma_y,
            "seed": flow_cfg.seed,
        }
    )


def load_config_file(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_absolute() and not path.exists():
        cfg_dir = os.environ.get(ENV_CONFIG_DIR)
        if cfg_dir and (Path(cfg_dir) / path).exists():
            path = Path(cfg_dir) / path
    try:
        return parse_kv_text(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
