"""Thin WAV helpers over scipy.io.wavfile.

Float32 WAVs round-trip bit-exactly, which the audio-write path relies on.
"""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

from ..errors import ConfigError


def read_wav_mono(path: str) -> tuple[int, np.ndarray]:
    """Read a PCM WAV as (rate, float32 mono in [-1, 1]).

    Accepts 16-bit int or 32-bit float; stereo input keeps the first channel.
    """
    try:
        rate, data = wavfile.read(path)
    except (ValueError, FileNotFoundError) as exc:
        raise ConfigError(f"cannot read WAV {path}: {exc}") from exc
    if data.ndim == 2:
        data = data[:, 0]
    if data.dtype == np.int16:
        out = data.astype(np.float32) / 32768.0
    elif data.dtype == np.float32:
        out = np.clip(data, -1.0, 1.0)
    elif data.dtype == np.int32:
        out = data.astype(np.float32) / 2147483648.0
    else:
        raise ConfigError(
            f"unsupported WAV sample format {data.dtype} in {path}")
    return int(rate), out


def write_wav_float32(path: str, rate: int, samples: np.ndarray) -> None:
    wavfile.write(path, rate, np.asarray(samples, dtype=np.float32))
