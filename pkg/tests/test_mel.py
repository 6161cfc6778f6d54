import numpy as np
import pytest

from melstream import MelConfig, MelOperator, StftConfig, analyze_frame, build_mel_operator
from melstream.errors import ConfigError, InputError

from conftest import sine


def test_identity_operator_pinv_is_identity():
    op = MelOperator(np.eye(8))
    np.testing.assert_allclose(op.pinv, np.eye(8), atol=1e-12)


def test_row_orthonormal_pinv_is_transpose():
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.standard_normal((10, 4)))
    m = q.T  # 4x10 with orthonormal rows
    op = MelOperator(m)
    np.testing.assert_allclose(op.pinv, m.T, atol=1e-10)


def test_default_filterbank_moore_penrose_conditions(mel_op):
    m = mel_op.forward
    p = mel_op.pinv
    assert np.max(np.abs(m @ p @ m - m)) < 1e-4
    assert np.max(np.abs(p @ m @ p - p)) < 1e-4
    assert np.max(np.abs((m @ p).T - m @ p)) < 1e-4
    assert np.max(np.abs((p @ m).T - p @ m)) < 1e-4


def test_filterbank_shape_and_nonnegativity(mel_op):
    assert mel_op.forward.shape == (80, 257)
    assert np.all(mel_op.forward >= 0)
    assert not np.any(np.all(mel_op.forward == 0, axis=1))


def test_interior_bins_covered(mel_op, stft_cfg, mel_cfg):
    freqs = np.arange(257) * stft_cfg.sample_rate / 512
    interior = (freqs > mel_cfg.f_min) & (freqs < mel_cfg.f_max)
    coverage = mel_op.forward.sum(axis=0)
    assert np.all(coverage[interior] > 0)


def test_inconsistent_dims_rejected(stft_cfg):
    with pytest.raises(ConfigError):
        build_mel_operator(MelConfig(n_stft=129), stft_cfg)


def test_square_rank_rejected(stft_cfg):
    with pytest.raises(ConfigError):
        build_mel_operator(MelConfig(n_mels=257), stft_cfg)


class TestCorrupt:
    def test_identity_operator_is_phase_removal(self):
        op = MelOperator(np.eye(16))
        rng = np.random.default_rng(1)
        frame = (rng.standard_normal(16) + 1j * rng.standard_normal(16)).astype(
            np.complex64
        )
        out = op.corrupt(frame)
        np.testing.assert_allclose(out, np.abs(frame).astype(np.complex64), atol=1e-6)
        assert np.all(out.imag == 0)

    def test_zero_frame(self, mel_op):
        out = mel_op.corrupt(np.zeros(257, dtype=np.complex64))
        assert np.all(out == 0)

    def test_mel_domain_consistency(self, mel_op):
        """M|out| ~ M|in|: the measurable content of M M+ M = M."""
        rng = np.random.default_rng(2)
        frame = rng.uniform(0.1, 1.0, 257).astype(np.complex64)
        out = mel_op.corrupt(frame)
        mel_in = mel_op.forward @ np.abs(frame)
        mel_out = mel_op.forward @ np.abs(out)
        # The magnitude re-take breaks exact equality only where M+ output
        # went negative; require close mel-domain agreement.
        assert np.max(np.abs(mel_out - mel_in) / np.abs(mel_in)) < 1e-4

    def test_shape_mismatch(self, mel_op):
        with pytest.raises(InputError):
            mel_op.corrupt(np.zeros(100, dtype=np.complex64))

    def test_idempotent_up_to_rectification(self, mel_op):
        rng = np.random.default_rng(3)
        frame = rng.uniform(0.1, 1.0, 257).astype(np.complex64)
        once = mel_op.corrupt(frame)
        twice = mel_op.corrupt(once)
        rel = np.abs(twice - once) / np.maximum(np.abs(once), 1e-6)
        assert np.max(rel) < 1e-4


class TestMelFrame:
    def test_zero(self, mel_op):
        assert np.all(mel_op.mel_frame(np.zeros(257, dtype=np.complex64)) == 0)

    def test_single_bin_gives_matrix_column(self, mel_op):
        frame = np.zeros(257, dtype=np.complex64)
        frame[100] = 0.7j  # magnitude 0.7
        np.testing.assert_allclose(
            mel_op.mel_frame(frame), 0.7 * mel_op.forward[:, 100], rtol=1e-5
        )

    def test_sine_energy_concentration(self, mel_op):
        # Uncompressed magnitudes: compression lifts the leakage floor.
        stft_cfg = StftConfig(compress_alpha=1.0)
        x = sine(440.0, seconds=0.5)
        frame = analyze_frame(x[1000:1512], stft_cfg)
        mel = mel_op.mel_frame(frame)
        # Dense matrix-vector oracle.
        oracle = mel_op.forward @ np.abs(frame)
        np.testing.assert_allclose(mel, oracle, rtol=1e-5)
        peak_idx = int(np.argmax(mel))
        peak = mel[peak_idx]
        # All filters more than 2 filter-widths away are tiny.
        far = np.abs(np.arange(len(mel)) - peak_idx) > 4
        assert np.all(mel[far] < 1e-3 * peak)


class TestPinvDecode:
    def test_zero(self, mel_op):
        assert np.all(mel_op.pinv_decode(np.zeros(80, dtype=np.float32)) == 0)

    def test_negative_rejected(self, mel_op):
        bad = np.zeros(80, dtype=np.float32)
        bad[3] = -0.1
        with pytest.raises(InputError):
            mel_op.pinv_decode(bad)

    def test_composition_bit_identical_to_corrupt(self, mel_op):
        rng = np.random.default_rng(4)
        frame = (rng.standard_normal(257) + 1j * rng.standard_normal(257)).astype(
            np.complex64
        )
        via_mel = mel_op.pinv_decode(mel_op.mel_frame(frame))
        assert np.array_equal(via_mel, mel_op.corrupt(frame))

    def test_uniform_ones_equals_pinv_row_sums(self, mel_op):
        out = mel_op.pinv_decode(np.ones(80, dtype=np.float32))
        oracle = np.abs(mel_op.pinv.sum(axis=1))
        np.testing.assert_allclose(out.real, oracle, rtol=1e-5, atol=1e-7)
