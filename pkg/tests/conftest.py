import numpy as np
import pytest

from melstream import (
    FlowConfig,
    MelConfig,
    StftConfig,
    build_mel_operator,
    build_net,
    random_weights,
    toy_unet_spec,
)


@pytest.fixture(scope="session")
def stft_cfg():
    return StftConfig()


@pytest.fixture(scope="session")
def mel_cfg():
    return MelConfig()


@pytest.fixture(scope="session")
def mel_op(mel_cfg, stft_cfg):
    return build_mel_operator(mel_cfg, stft_cfg)


@pytest.fixture(scope="session")
def toy_spec():
    return toy_unet_spec(widths=(8, 16, 24))


@pytest.fixture(scope="session")
def toy_net(toy_spec):
    return build_net(toy_spec, random_weights(toy_spec, seed=7), n_freq_bins=257)


@pytest.fixture(scope="session")
def flow_cfg():
    return FlowConfig()


def sine(freq_hz, seconds=1.0, sr=16000, amp=0.8):
    t = np.arange(int(seconds * sr)) / sr
    return (amp * np.sin(2 * np.pi * freq_hz * t)).astype(np.float64)


def harmonic_tone(f0, seconds=2.0, sr=16000, n_harm=8, seed=0):
    """Speech-shaped harmonic tone with mild vibrato."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * sr)) / sr
    vibrato = 1.0 + 0.005 * np.sin(2 * np.pi * 5.0 * t)
    x = np.zeros_like(t)
    for h in range(1, n_harm + 1):
        amp = 1.0 / h
        phase = rng.uniform(0, 2 * np.pi)
        x += amp * np.sin(2 * np.pi * f0 * h * np.cumsum(vibrato) / sr + phase)
    return (0.5 * x / np.max(np.abs(x))).astype(np.float64)
