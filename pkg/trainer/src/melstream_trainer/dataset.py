"""Deterministic synthetic toy corpus: harmonic tones with vibrato,
band-filtered noise, and linear chirps, 16 kHz mono. An optional folder
of user WAVs can be appended. Fixed seed => identical corpus bytes."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import butter, lfilter

from melstream import read_wav
from melstream.errors import DataError


@dataclass(frozen=True)
class DatasetSpec:
    n_clips: int = 100
    clip_seconds: float = 2.0
    sample_rate: int = 16000
    seed: int = 0
    wav_dir: str | None = None  # optional extra clips, 16 kHz mono
    kinds: tuple = ("harmonic", "noise", "chirp")  # cycled per clip


def _harmonic(rng, n, sr):
    f0 = rng.uniform(100.0, 320.0)
    n_harm = int(rng.integers(4, 10))
    t = np.arange(n) / sr
    vibrato = 1.0 + 0.005 * np.sin(2 * np.pi * rng.uniform(4.0, 7.0) * t)
    x = np.zeros(n)
    for h in range(1, n_harm + 1):
        x += (1.0 / h) * np.sin(
            2 * np.pi * f0 * h * np.cumsum(vibrato) / sr + rng.uniform(0, 2 * np.pi)
        )
    return x


def _filtered_noise(rng, n, sr):
    lo = rng.uniform(80.0, 400.0)
    hi = rng.uniform(1000.0, 6000.0)
    b, a = butter(2, [lo / (sr / 2), hi / (sr / 2)], btype="band")
    return lfilter(b, a, rng.standard_normal(n))


def _chirp(rng, n, sr):
    f_start = rng.uniform(100.0, 500.0)
    f_end = rng.uniform(800.0, 4000.0)
    t = np.arange(n) / sr
    freq = f_start + (f_end - f_start) * t / t[-1]
    return np.sin(2 * np.pi * np.cumsum(freq) / sr)


_GENERATORS = {"harmonic": _harmonic, "noise": _filtered_noise, "chirp": _chirp}


def make_toy_dataset(spec: DatasetSpec) -> np.ndarray:
    """(n_clips, clip_samples) float32 in [-0.6, 0.6]."""
    n = int(spec.clip_seconds * spec.sample_rate)
    rng = np.random.default_rng(spec.seed)
    clips = []
    for i in range(spec.n_clips):
        gen = _GENERATORS[spec.kinds[i % len(spec.kinds)]]
        x = gen(rng, n, spec.sample_rate)
        peak = np.max(np.abs(x))
        if peak == 0 or not np.all(np.isfinite(x)):
            raise DataError(f"degenerate synthetic clip {i}")
        clips.append((0.5 * x / peak).astype(np.float32))
    corpus = np.stack(clips)
    if spec.wav_dir:
        for p in sorted(Path(spec.wav_dir).glob("*.wav")):
            _, samples = read_wav(p, expect_sample_rate=spec.sample_rate)
            if len(samples) < n:
                raise DataError(f"{p}: shorter than one clip ({n} samples)")
            corpus = np.concatenate([corpus, samples[None, :n]], axis=0)
    return corpus


def corpus_hash(corpus: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(corpus, np.float32).tobytes()).hexdigest()
