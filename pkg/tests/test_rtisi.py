import numpy as np
import pytest

from melstream import StftConfig
from melstream.errors import ConfigError, InputError
from melstream.metrics import si_sdr
from melstream.rtisi import (
    DmConfig,
    RtisiState,
    dm_iterate,
    dm_readout,
    project_consistency,
    project_magnitude,
    rtisi_dm_frame,
)

from conftest import harmonic_tone, sine


def physical_frame(x, t, cfg):
    """Consistent complex STFT frame t of signal x (physical domain)."""
    seg = x[t * cfg.hop_len : t * cfg.hop_len + cfg.window_len]
    return np.fft.rfft(cfg.window * seg, norm="ortho")


def committed_context(x_prev_frame, cfg):
    """Overlap-region OLA contribution of the previous consistent frame."""
    u = np.fft.irfft(x_prev_frame, n=cfg.window_len, norm="ortho")
    contrib = cfg.synthesis_window() * u
    return contrib[cfg.hop_len :]


def zero_phase_stream(mags, stft_cfg):
    state = RtisiState(stft_cfg, DmConfig(iters_per_frame=0))
    return np.concatenate([state.process_frame(m) for m in mags])


def dm_stream(mags, stft_cfg, cfg=None):
    state = RtisiState(stft_cfg, cfg if cfg is not None else DmConfig())
    out = np.concatenate([state.process_frame(m) for m in mags])
    return out, state


def target_mags(x, stft_cfg):
    n = (len(x) - stft_cfg.window_len) // stft_cfg.hop_len + 1
    return [np.abs(physical_frame(x, t, stft_cfg)) for t in range(n)]


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            DmConfig(beta=0.0)
        with pytest.raises(ConfigError):
            DmConfig(iters_per_frame=-1)
        with pytest.raises(ConfigError):
            DmConfig(lookahead=1)


class TestProjections:
    def test_magnitude_projection_keeps_phase(self):
        rng = np.random.default_rng(0)
        spec = rng.standard_normal(257) + 1j * rng.standard_normal(257)
        target = np.abs(rng.standard_normal(257))
        out = project_magnitude(spec, target)
        np.testing.assert_allclose(np.abs(out), target, atol=1e-12)
        nz = target > 0
        np.testing.assert_allclose(
            np.angle(out[nz]), np.angle(spec[nz]), atol=1e-12
        )

    def test_magnitude_projection_zero_input_gets_zero_phase(self):
        target = np.full(257, 2.0)
        out = project_magnitude(np.zeros(257, dtype=np.complex128), target)
        np.testing.assert_allclose(out, target + 0j, atol=1e-12)

    def test_consistency_projection_fixes_consistent_frame(self, stft_cfg):
        x = sine(440.0, seconds=0.5)
        frame = physical_frame(x, 5, stft_cfg)
        context = committed_context(physical_frame(x, 4, stft_cfg), stft_cfg)
        proj = project_consistency(frame, context, stft_cfg, has_context=True)
        scale = np.max(np.abs(frame))
        assert np.max(np.abs(proj - frame)) < 1e-5 * scale


class TestDifferenceMap:
    def test_consistent_frame_is_fixed_point(self, stft_cfg):
        """A frame from a real STFT, with matching magnitudes and context,
        is left unchanged by the update and the readout."""
        x = harmonic_tone(220.0, seconds=0.5, seed=1)
        cfg = DmConfig()
        frame = physical_frame(x, 6, stft_cfg)
        context = committed_context(physical_frame(x, 5, stft_cfg), stft_cfg)
        scale = np.max(np.abs(frame))
        stepped = dm_iterate(frame, np.abs(frame), context, cfg, stft_cfg)
        assert np.max(np.abs(stepped - frame)) < 1e-5 * scale
        readout = dm_readout(frame, np.abs(frame), context, cfg, stft_cfg)
        assert np.max(np.abs(readout - frame)) < 1e-5 * scale

    def test_shape_mismatch(self, stft_cfg):
        with pytest.raises(InputError):
            dm_iterate(
                np.zeros(100, dtype=np.complex128),
                np.zeros(257),
                np.zeros(256),
                DmConfig(),
                stft_cfg,
            )


class TestStreamReconstruction:
    def test_zero_targets_give_silence(self, stft_cfg):
        state = RtisiState(stft_cfg)
        for _ in range(5):
            out = state.process_frame(np.zeros(257))
            assert np.all(out == 0)

    def test_residuals_fall_by_half(self, stft_cfg):
        x = sine(330.0, seconds=0.5)
        mags = target_mags(x, stft_cfg)
        state = RtisiState(stft_cfg, DmConfig(iters_per_frame=50))
        drops = []
        for m in mags:
            state.process_frame(m)
            r = state.last_residuals
            if r[0] > 1e-9:
                drops.append(r[-1] / r[0])
        # Median per-frame residual reduction of at least 50%.
        assert np.median(drops) < 0.5

    def test_beats_zero_phase_anchor_by_3db(self, stft_cfg):
        x = harmonic_tone(180.0, seconds=1.0, seed=2)
        mags = target_mags(x, stft_cfg)
        recon, _ = dm_stream(mags, stft_cfg, DmConfig(iters_per_frame=50))
        anchor = zero_phase_stream(mags, stft_cfg)
        w = stft_cfg.window_len
        ref = x[: len(recon)]
        s_dm = si_sdr(recon[w:-w], ref[w:-w])
        s_zp = si_sdr(anchor[w:-w], ref[w:-w])
        assert s_dm >= s_zp + 3.0

    def test_zero_iters_is_zero_phase_overlap_add(self, stft_cfg):
        """iters_per_frame=0 commits the magnitudes with zero phase."""
        rng = np.random.default_rng(3)
        mags = [rng.uniform(0.0, 1.0, 257) for _ in range(4)]
        out = zero_phase_stream(mags, stft_cfg)
        synth = stft_cfg.synthesis_window()
        acc = np.zeros(4 * 256 + 512)
        for t, m in enumerate(mags):
            u = np.fft.irfft(m.astype(np.complex128), n=512, norm="ortho")
            acc[t * 256 : t * 256 + 512] += synth * u
        np.testing.assert_allclose(out, acc[: len(out)].astype(np.float32), atol=1e-6)

    def test_emitted_samples_are_causal_and_immutable(self, stft_cfg):
        x = sine(500.0, seconds=0.3)
        mags = target_mags(x, stft_cfg)
        base, _ = dm_stream(mags, stft_cfg, DmConfig(iters_per_frame=10))
        perturbed = [m.copy() for m in mags]
        perturbed[5] *= 2.0
        other, _ = dm_stream(perturbed, stft_cfg, DmConfig(iters_per_frame=10))
        hop = stft_cfg.hop_len
        # Output for frames before the perturbation is bitwise unchanged.
        assert np.array_equal(base[: 5 * hop], other[: 5 * hop])
        assert not np.array_equal(base[5 * hop :], other[5 * hop :])

    def test_deterministic(self, stft_cfg):
        x = sine(700.0, seconds=0.25)
        mags = target_mags(x, stft_cfg)
        a, _ = dm_stream(mags, stft_cfg, DmConfig(iters_per_frame=15))
        b, _ = dm_stream(mags, stft_cfg, DmConfig(iters_per_frame=15))
        assert np.array_equal(a, b)

    def test_input_validation(self, stft_cfg):
        state = RtisiState(stft_cfg)
        with pytest.raises(InputError):
            state.process_frame(np.zeros(100))
        bad = np.zeros(257)
        bad[0] = -1.0
        with pytest.raises(InputError):
            state.process_frame(bad)

    def test_wrapper_rejects_mismatched_state(self, stft_cfg):
        other = StftConfig(window_len=1024, hop_len=512)
        state = RtisiState(other)
        with pytest.raises(InputError):
            rtisi_dm_frame(state, np.zeros(257), DmConfig(), stft_cfg)
