import math

import numpy as np
import pytest
from scipy.fft import dct

from melstream import MelConfig, StftConfig
from melstream.errors import InputError
from melstream.metrics import (
    SI_SDR_CAP_DB,
    MetricReport,
    lsd,
    mcd,
    metric_report,
    si_sdr,
)

from conftest import harmonic_tone, sine


class TestSiSdr:
    def test_identical_signals_hit_cap(self):
        x = sine(440.0, seconds=0.5)
        assert si_sdr(x, x) == SI_SDR_CAP_DB

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        ref = rng.standard_normal(8000)
        est = ref + 0.1 * rng.standard_normal(8000)
        base = si_sdr(ref, est)
        assert abs(si_sdr(ref, 3.7 * est) - base) < 1e-9
        assert abs(si_sdr(ref, -0.2 * est) - base) < 1e-9

    def test_orthogonal_equal_energy_noise_gives_zero_db(self):
        """est = ref + n with n orthogonal to ref and ||n|| = ||ref||."""
        rng = np.random.default_rng(1)
        ref = rng.standard_normal(16000)
        n = rng.standard_normal(16000)
        n -= (np.dot(n, ref) / np.dot(ref, ref)) * ref
        n *= np.linalg.norm(ref) / np.linalg.norm(n)
        assert abs(si_sdr(ref, ref + n)) < 1e-9

    def test_known_snr_oracle(self):
        """Orthogonal noise at 1/10 the reference energy gives exactly 10 dB."""
        rng = np.random.default_rng(2)
        ref = rng.standard_normal(16000)
        n = rng.standard_normal(16000)
        n -= (np.dot(n, ref) / np.dot(ref, ref)) * ref
        n *= np.linalg.norm(ref) / np.linalg.norm(n) / math.sqrt(10.0)
        assert abs(si_sdr(ref, ref + n) - 10.0) < 1e-9

    def test_silent_reference_rejected(self):
        with pytest.raises(InputError):
            si_sdr(np.zeros(100), np.ones(100))

    def test_length_mismatch_rejected(self):
        with pytest.raises(InputError):
            si_sdr(np.ones(100), np.ones(99))


class TestLsd:
    def test_identical_signals_zero(self, stft_cfg):
        x = harmonic_tone(200.0, seconds=0.5)
        assert lsd(x, x, stft_cfg) < 1e-9

    def test_global_doubling_gives_six_db(self, stft_cfg):
        """2x amplitude shifts every magnitude bin by 20*log10(2) dB."""
        rng = np.random.default_rng(3)
        x = 0.5 * rng.standard_normal(16000)
        got = lsd(x, 2.0 * x, stft_cfg)
        assert abs(got - 20.0 * math.log10(2.0)) < 1e-3

    def test_direct_dft_oracle(self, stft_cfg):
        """Recompute from scratch with plain FFT calls, no shared code."""
        rng = np.random.default_rng(4)
        a = 0.3 * rng.standard_normal(4096)
        b = 0.3 * rng.standard_normal(4096)

        def mags(x):
            n_frames = (len(x) - 512) // 256 + 1
            w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(512) / 512)
            return np.stack(
                [
                    np.abs(np.fft.rfft(w * x[t * 256 : t * 256 + 512])) / np.sqrt(512)
                    for t in range(n_frames)
                ]
            )

        diff = 20.0 * (np.log10(mags(a) + 1e-8) - np.log10(mags(b) + 1e-8))
        oracle = float(np.sqrt(np.mean(np.mean(diff**2, axis=1))))
        got = lsd(a, b, stft_cfg)
        assert abs(got - oracle) / oracle < 1e-6


class TestMcd:
    def test_identical_signals_zero(self, stft_cfg, mel_cfg):
        x = harmonic_tone(150.0, seconds=0.5)
        assert mcd(x, x, mel_cfg, stft_cfg) < 1e-9

    def test_gain_invariance(self, stft_cfg, mel_cfg):
        """Coefficient 0 carries the gain; dropping it makes the distance
        insensitive to a global amplitude change, up to the log epsilon.
        Requires broadband energy so every mel band is far above the
        epsilon floor."""
        rng = np.random.default_rng(5)
        x = 0.3 * rng.standard_normal(8000)
        assert mcd(x, 2.0 * x, mel_cfg, stft_cfg) < 1e-3

    def test_brute_force_oracle(self, stft_cfg, mel_cfg):
        from melstream import analyze_signal, build_mel_operator, decompress_magnitudes

        x = harmonic_tone(200.0, seconds=0.4, seed=6)
        y = harmonic_tone(210.0, seconds=0.4, seed=7)
        op = build_mel_operator(mel_cfg, stft_cfg)

        def cepstra(sig):
            frames = analyze_signal(sig, stft_cfg).astype(np.complex128)
            m = np.abs(decompress_magnitudes(frames, stft_cfg.compress_alpha))
            log_mel = np.log10(m @ op.forward.T + 1e-8)
            return dct(log_mel, type=2, axis=1, norm="ortho")[:, 1:14]

        ca, cb = cepstra(x), cepstra(y)
        oracle = (10.0 / math.log(10.0)) * math.sqrt(2.0) * float(
            np.mean(np.linalg.norm(ca - cb, axis=1))
        )
        got = mcd(x, y, mel_cfg, stft_cfg)
        assert abs(got - oracle) < 1e-6


class TestReport:
    def test_report_fields_and_json_dict(self, stft_cfg, mel_cfg):
        x = harmonic_tone(220.0, seconds=0.5, seed=8)
        rng = np.random.default_rng(9)
        y = x + 0.01 * rng.standard_normal(len(x))
        rep = metric_report(x, y, stft_cfg, mel_cfg)
        assert rep.frames_compared == (len(x) - 512) // 256 + 1
        d = rep.to_dict()
        assert d["version"] == 1
        assert set(d) == {"si_sdr", "lsd", "mcd", "frames_compared", "version"}
        assert d["si_sdr"] == rep.si_sdr

    def test_external_slot_survives(self):
        rep = MetricReport(10.0, 1.0, 2.0, 5, external={"mos": 4.1})
        assert rep.to_dict()["external"] == {"mos": 4.1}
