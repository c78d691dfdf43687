"""Log-mel spectrogram frontend.

Pure functions over immutable inputs; every operation here is deterministic
and safe to call concurrently.  Classifier pipelines that consume a 2-D
time-frequency representation go through :func:`log_mel`; everything else in
the package treats this module as a black box.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.signal import get_window

from .errors import ConfigError

__all__ = [
    "MelConfig",
    "MelFrame",
    "MEL_PRESETS",
    "mel_filterbank",
    "log_mel",
    "write_golden_mel",
    "read_golden_mel",
]


@dataclass(frozen=True)
class MelConfig:
    """STFT + mel filterbank parameters.

    ``log_floor`` clamps power before the log so silence maps to a finite
    constant instead of -inf.
    """

    n_fft: int
    win_length: int
    hop_length: int
    n_mels: int
    fmin_hz: float
    fmax_hz: float
    power: float = 2.0
    log_floor: float = 1e-10
    center_padding: bool = True

    def __post_init__(self) -> None:
        if not (0 < self.win_length <= self.n_fft):
            raise ConfigError(
                f"win_length must satisfy 0 < win_length <= n_fft, got "
                f"win_length={self.win_length} n_fft={self.n_fft}")
        if self.hop_length <= 0:
            raise ConfigError(f"hop_length must be positive, got {self.hop_length}")
        if self.n_mels <= 0:
            raise ConfigError(f"n_mels must be positive, got {self.n_mels}")
        if not (0 <= self.fmin_hz < self.fmax_hz):
            raise ConfigError(
                f"need 0 <= fmin_hz < fmax_hz, got fmin={self.fmin_hz} "
                f"fmax={self.fmax_hz}")
        if self.power <= 0:
            raise ConfigError(f"power must be positive, got {self.power}")
        if self.log_floor <= 0:
            raise ConfigError(f"log_floor must be positive, got {self.log_floor}")

    @property
    def floor_db(self) -> float:
        return 10.0 * math.log10(self.log_floor)


@dataclass(frozen=True)
class MelFrame:
    """One window's log-mel matrix, shape (n_mels, n_frames), float32."""

    values: np.ndarray
    config: MelConfig


# The 64-band preset mirrors the PANNs-style external frontend; the 256-band
# variant widens the FFT so every mel band still covers at least one bin.
MEL_PRESETS: dict[str, MelConfig] = {
    "mel64": MelConfig(n_fft=1024, win_length=1024, hop_length=320,
                       n_mels=64, fmin_hz=50.0, fmax_hz=14000.0),
    "mel256": MelConfig(n_fft=2048, win_length=2048, hop_length=320,
                        n_mels=256, fmin_hz=50.0, fmax_hz=14000.0),
}


# Slaney mel scale: linear below 1 kHz, logarithmic above.
_MEL_HZ_STEP = 200.0 / 3.0
_MEL_LOG_HZ = 1000.0
_MEL_LOG_MEL = _MEL_LOG_HZ / _MEL_HZ_STEP
_MEL_LOG_STEP = math.log(6.4) / 27.0


def _hz_to_mel(hz: np.ndarray | float) -> np.ndarray:
    hz = np.asarray(hz, dtype=np.float64)
    mel = hz / _MEL_HZ_STEP
    above = hz >= _MEL_LOG_HZ
    mel = np.where(
        above,
        _MEL_LOG_MEL + np.log(np.maximum(hz, _MEL_LOG_HZ) / _MEL_LOG_HZ) / _MEL_LOG_STEP,
        mel)
    return mel


def _mel_to_hz(mel: np.ndarray | float) -> np.ndarray:
    mel = np.asarray(mel, dtype=np.float64)
    hz = mel * _MEL_HZ_STEP
    above = mel >= _MEL_LOG_MEL
    hz = np.where(above, _MEL_LOG_HZ * np.exp(_MEL_LOG_STEP * (mel - _MEL_LOG_MEL)), hz)
    return hz


def band_edges_hz(cfg: MelConfig) -> np.ndarray:
    """n_mels + 2 triangle vertices in Hz, equally spaced on the mel scale."""
    mels = np.linspace(_hz_to_mel(cfg.fmin_hz), _hz_to_mel(cfg.fmax_hz),
                       cfg.n_mels + 2)
    return _mel_to_hz(mels)


@lru_cache(maxsize=8)
def _mel_filterbank_cached(cfg: MelConfig, sample_rate_hz: int) -> np.ndarray:
    if cfg.fmax_hz > sample_rate_hz / 2:
        raise ConfigError(
            f"fmax_hz {cfg.fmax_hz} exceeds Nyquist for rate {sample_rate_hz}")
    edges = band_edges_hz(cfg)
    bins = np.linspace(0.0, sample_rate_hz / 2.0, cfg.n_fft // 2 + 1)
    lo, center, hi = edges[:-2], edges[1:-1], edges[2:]
    up = (bins[None, :] - lo[:, None]) / (center - lo)[:, None]
    down = (hi[:, None] - bins[None, :]) / (hi - center)[:, None]
    weights = np.maximum(0.0, np.minimum(up, down))
    # Slaney normalization: each triangle integrates to 1 over frequency.
    weights *= (2.0 / (hi - lo))[:, None]
    empty = ~weights.any(axis=1)
    if empty.any():
        raise ConfigError(
            f"{int(empty.sum())} mel bands cover no FFT bin; reduce n_mels or "
            f"widen the fmin/fmax span (first empty band {int(empty.argmax())})")
    return weights


def mel_filterbank(cfg: MelConfig, sample_rate_hz: int) -> np.ndarray:
    """Triangular filterbank, shape (n_mels, n_fft // 2 + 1), float64.

    Rows are ordered by ascending center frequency and each row covers at
    least one FFT bin; a config too dense for the span raises ConfigError.
    """
    return _mel_filterbank_cached(cfg, int(sample_rate_hz)).copy()


@lru_cache(maxsize=8)
def _stft_window(n_fft: int, win_length: int) -> np.ndarray:
    win = get_window("hann", win_length, fftbins=True).astype(np.float64)
    if win_length < n_fft:
        pad = n_fft - win_length
        win = np.pad(win, (pad // 2, pad - pad // 2))
    return win


def log_mel(window, cfg: MelConfig) -> MelFrame:
    """Log-mel spectrogram of one analysis window.

    With center padding the output has 1 + floor(len / hop_length) frames.
    Scaling is 10*log10(max(power, log_floor)); no per-clip referencing, so
    identical inputs always produce byte-identical outputs.
    """
    samples = np.asarray(window.samples, dtype=np.float64)
    rate = int(window.sample_rate_hz)
    if samples.ndim != 1:
        raise ConfigError("log_mel expects a mono sample vector")
    if len(samples) < cfg.n_fft:
        raise ConfigError(
            f"window of {len(samples)} samples is shorter than n_fft={cfg.n_fft}")
    fb = _mel_filterbank_cached(cfg, rate)  # also validates fmax vs Nyquist

    if cfg.center_padding:
        samples = np.pad(samples, cfg.n_fft // 2, mode="reflect")
    starts_end = len(samples) - cfg.n_fft + 1
    frames = np.lib.stride_tricks.sliding_window_view(samples, cfg.n_fft)
    frames = frames[0:starts_end:cfg.hop_length]
    spectrum = np.fft.rfft(frames * _stft_window(cfg.n_fft, cfg.win_length), axis=1)
    if cfg.power == 2.0:
        power = spectrum.real**2 + spectrum.imag**2
    else:
        power = np.abs(spectrum) ** cfg.power
    mel_power = fb @ power.T
    values = 10.0 * np.log10(np.maximum(mel_power, cfg.log_floor))
    return MelFrame(values=values.astype(np.float32), config=cfg)


def write_golden_mel(sidecar_path: Path, frame: MelFrame, *,
                     input_name: str = "") -> None:
    """Persist a log-mel matrix as raw little-endian float32 plus a JSON sidecar."""
    sidecar_path = Path(sidecar_path)
    data_file = sidecar_path.with_suffix(".f32").name
    raw = np.ascontiguousarray(frame.values, dtype="<f4")
    (sidecar_path.parent / data_file).write_bytes(raw.tobytes())
    sidecar = {
        "shape": list(frame.values.shape),
        "dtype": "float32-le",
        "data_file": data_file,
        "input_name": input_name,
        "mel": asdict(frame.config),
    }
    sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n")


def read_golden_mel(sidecar_path: Path) -> MelFrame:
    """Load a golden-vector matrix written by :func:`write_golden_mel`."""
    sidecar_path = Path(sidecar_path)
    try:
        meta = json.loads(sidecar_path.read_text())
        shape = tuple(int(d) for d in meta["shape"])
        cfg = MelConfig(**meta["mel"])
        raw = (sidecar_path.parent / meta["data_file"]).read_bytes()
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"unreadable golden-vector sidecar {sidecar_path}: {exc}")
    values = np.frombuffer(raw, dtype="<f4").reshape(shape)
    return MelFrame(values=values, config=cfg)
