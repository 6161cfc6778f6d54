"""File formats: mono WAV in/out and the MFSPEC1 spectrogram dump.

MFSPEC1 layout (little-endian): magic ``MFSPEC1``, u32 frame count,
u32 bins, u8 domain tag (0 = compressed complex, 1 = mel magnitude),
then row-major float32 data; complex frames store interleaved re/im.
"""

from __future__ import annotations

import struct

import numpy as np
from scipy.io import wavfile

from .errors import DataError, FormatError, TruncatedFileError

_MFSPEC_MAGIC = b"MFSPEC1"
DOMAIN_COMPLEX = 0
DOMAIN_MEL = 1


def read_wav(path, expect_sample_rate: int | None = None) -> tuple[int, np.ndarray]:
    """Read a mono 16-bit or float32 WAV as float32 in [-1, 1]."""
    try:
        rate, data = wavfile.read(path)
    except (ValueError, OSError) as exc:
        raise DataError(f"cannot read WAV file {path}: {exc}") from exc
    if data.ndim != 1:
        raise DataError(f"{path}: only mono WAV files are supported")
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif data.dtype == np.float32:
        samples = data
    else:
        raise DataError(
            f"{path}: unsupported sample format {data.dtype}; "
            "use 16-bit PCM or 32-bit float"
        )
    if expect_sample_rate is not None and rate != expect_sample_rate:
        raise DataError(
            f"{path}: sample rate {rate} != required {expect_sample_rate} "
            "(no resampler in scope)"
        )
    if not np.all(np.isfinite(samples)):
        raise DataError(f"{path}: non-finite samples")
    return rate, samples


def write_wav(path, sample_rate: int, samples: np.ndarray, pcm16: bool = False):
    samples = np.asarray(samples, dtype=np.float32)
    if pcm16:
        clipped = np.clip(samples, -1.0, 1.0)
        wavfile.write(path, sample_rate, (clipped * 32767.0).astype(np.int16))
    else:
        wavfile.write(path, sample_rate, samples)


def write_spectrogram(path, frames: np.ndarray, domain: int):
    frames = np.asarray(frames)
    if frames.ndim != 2:
        raise DataError("spectrogram must be a (frames, bins) array")
    if domain == DOMAIN_COMPLEX:
        data = np.empty((frames.shape[0], frames.shape[1] * 2), dtype=np.float32)
        data[:, 0::2] = frames.real
        data[:, 1::2] = frames.imag
    elif domain == DOMAIN_MEL:
        data = frames.astype(np.float32)
    else:
        raise DataError(f"unknown domain tag {domain}")
    with open(path, "wb") as fh:
        fh.write(_MFSPEC_MAGIC)
        fh.write(struct.pack("<IIB", frames.shape[0], frames.shape[1], domain))
        fh.write(data.astype("<f4").tobytes())


def read_spectrogram(path) -> tuple[np.ndarray, int]:
    """Returns (frames, domain_tag); complex64 or float32 rows."""
    with open(path, "rb") as fh:
        blob = fh.read()
    header_len = len(_MFSPEC_MAGIC) + 9
    if len(blob) < header_len:
        raise TruncatedFileError(f"{path}: shorter than the MFSPEC1 header")
    if blob[: len(_MFSPEC_MAGIC)] != _MFSPEC_MAGIC:
        raise FormatError(f"{path}: bad magic, not an MFSPEC1 file")
    n_frames, n_bins, domain = struct.unpack_from("<IIB", blob, len(_MFSPEC_MAGIC))
    if domain not in (DOMAIN_COMPLEX, DOMAIN_MEL):
        raise FormatError(f"{path}: unknown domain tag {domain}")
    per_row = n_bins * (2 if domain == DOMAIN_COMPLEX else 1)
    expected = header_len + 4 * n_frames * per_row
    if len(blob) < expected:
        raise TruncatedFileError(
            f"{path}: expected {expected} bytes, file has {len(blob)}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=header_len, count=n_frames * per_row)
    data = data.reshape(n_frames, per_row)
    if domain == DOMAIN_COMPLEX:
        frames = (data[:, 0::2] + 1j * data[:, 1::2]).astype(np.complex64)
    else:
        frames = data.astype(np.float32)
    return frames, domain
