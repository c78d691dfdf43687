"""Audio sources and the capture stream.

Three source kinds: a live input device (requires the ``sounddevice``
package and real hardware), deterministic file playback, and deterministic
synthetic generators for desk-scale testing. All sources emit mono float32
chunks normalized to [-1, 1] at their device rate.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from ..errors import ConfigError, DeviceUnavailableError
from .wavio import read_wav_mono

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PcmChunk:
    """One block of mono samples at a known rate.

    samples are float32 in [-1, 1]; start_time_ns is stream time (derived
    from the sample counter for file/synthetic sources, capture time for a
    live device) and strictly increases chunk to chunk.
    """

    samples: np.ndarray
    sample_rate_hz: int
    start_time_ns: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if len(self.samples) == 0:
            raise ValueError("chunk must not be empty")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class StreamGap:
    """Marker for a capture discontinuity (device overrun).

    Downstream windowing restarts at the next contiguous region rather than
    zero-filling the hole.
    """

    time_ns: int
    dropped_approx_samples: int = 0


class AudioSource:
    """Base source. Subclasses fill ``rate`` and implement ``read(n)``.

    ``read`` returns up to n float32 samples, or None when the stream is
    exhausted (live and synthetic sources never exhaust on their own).
    """

    kind = "abstract"
    rate: int = 0

    def open(self) -> None:
        pass

    def close(self) -> None:
        pass

    def read(self, n: int) -> Optional[np.ndarray]:
        raise NotImplementedError

    def gaps_since_last_read(self) -> int:
        """Overruns detected since the previous read; live sources only."""
        return 0


class SyntheticSource(AudioSource):
    """Deterministic generator: sine, silence, seeded white noise, or a
    5 s-periodic multitone used by windowing tests."""

    kind = "synthetic"

    def __init__(self, rate: int = 44100, signal: str = "sine",
                 freq_hz: float = 440.0, amplitude: float = 0.5,
                 seed: int = 0):
        if rate <= 0:
            raise ConfigError("synthetic source rate must be positive")
        if not 0.0 <= amplitude <= 1.0:
            raise ConfigError("amplitude must be in [0, 1]")
        if signal not in ("sine", "silence", "noise", "multitone"):
            raise ConfigError(f"unknown synthetic signal {signal!r}")
        self.rate = rate
        self.signal = signal
        self.freq_hz = freq_hz
        self.amplitude = amplitude
        self.seed = seed
        self._pos = 0
        self._rng = np.random.default_rng(seed)

    def open(self) -> None:
        self._pos = 0
        self._rng = np.random.default_rng(self.seed)

    def read(self, n: int) -> Optional[np.ndarray]:
        t = (np.arange(self._pos, self._pos + n, dtype=np.float64)
             / self.rate)
        self._pos += n
        if self.signal == "silence":
            out = np.zeros(n, dtype=np.float32)
        elif self.signal == "sine":
            out = (self.amplitude
                   * np.sin(2 * np.pi * self.freq_hz * t)).astype(np.float32)
        elif self.signal == "multitone":
            # Harmonics of 0.2 Hz keep the waveform exactly 5 s-periodic.
            acc = np.zeros(n, dtype=np.float64)
            for k, f in enumerate((200.0, 440.0, 1000.0, 3200.0)):
                acc += np.sin(2 * np.pi * f * t + 0.7 * k) / (k + 2)
            out = (self.amplitude * acc / 2.0).astype(np.float32)
        else:  # noise
            out = (self.amplitude
                   * self._rng.standard_normal(n) / 4.0).astype(np.float32)
        return np.clip(out, -1.0, 1.0)


class FileSource(AudioSource):
    """Plays a PCM WAV back once: 16-bit int or 32-bit float, mono or the
    first channel of stereo."""

    kind = "file"

    def __init__(self, path: str):
        self.path = path
        self._data: Optional[np.ndarray] = None
        self._pos = 0

    def open(self) -> None:
        rate, data = read_wav_mono(self.path)
        self.rate = rate
        self._data = data
        self._pos = 0

    def read(self, n: int) -> Optional[np.ndarray]:
        assert self._data is not None, "open() first"
        if self._pos >= len(self._data):
            return None
        out = self._data[self._pos:self._pos + n]
        self._pos += len(out)
        return out


class LiveSource(AudioSource):
    """Microphone capture through the sounddevice callback API.

    The callback pushes blocks into a plain list guarded by the GIL; read()
    drains it. Overruns reported by PortAudio surface as stream gaps.
    """

    kind = "live"

    def __init__(self, rate: int = 44100, device: Optional[str] = None):
        self.rate = rate
        self.device = device
        self._stream = None
        self._blocks: list[np.ndarray] = []
        self._overruns = 0

    def open(self) -> None:
        try:
            import sounddevice as sd
        except ImportError as exc:
            raise DeviceUnavailableError(
                "live capture requires the sounddevice package") from exc

        def _cb(indata, frames, time_info, status):
            if status and status.input_overflow:
                self._overruns += 1
            self._blocks.append(indata[:, 0].astype(np.float32))

        try:
            self._stream = sd.InputStream(
                samplerate=self.rate, channels=1, dtype="float32",
                device=self.device, callback=_cb)
            self._stream.start()
        except Exception as exc:
            raise DeviceUnavailableError(str(exc)) from exc

    def close(self) -> None:
        if self._stream is not None:
            self._stream.stop()
            self._stream.close()
            self._stream = None

    def read(self, n: int) -> Optional[np.ndarray]:
        # Collect whatever arrived; pacing happens upstream of the windower.
        while not self._blocks:
            time.sleep(0.005)
        taken = self._blocks[:]
        del self._blocks[:len(taken)]
        return np.clip(np.concatenate(taken), -1.0, 1.0)

    def gaps_since_last_read(self) -> int:
        n, self._overruns = self._overruns, 0
        return n


def capture_stream(source: AudioSource, chunk_ms: int,
                   start_ns: Optional[int] = None,
                   ) -> Iterator[PcmChunk | StreamGap]:
    """Yield fixed-size PcmChunks (or StreamGap markers) from a source.

    File and synthetic sources get sample-counter timestamps, so coverage is
    gap-free and start_time_ns strictly increases. The stream ends when the
    source is exhausted. The caller is responsible for pacing.
    """
    if chunk_ms <= 0:
        raise ConfigError("chunk_ms must be positive")
    source.open()
    chunk_samples = max(1, round(source.rate * chunk_ms / 1000))
    t0 = time.monotonic_ns() if start_ns is None else start_ns
    emitted = 0
    pending = np.zeros(0, dtype=np.float32)
    try:
        while True:
            gaps = source.gaps_since_last_read()
            if gaps:
                if len(pending):
                    ts = t0 + emitted * 1_000_000_000 // source.rate
                    yield PcmChunk(samples=pending,
                                   sample_rate_hz=source.rate,
                                   start_time_ns=ts)
                    emitted += len(pending)
                    pending = pending[:0]
                ts = t0 + emitted * 1_000_000_000 // source.rate
                yield StreamGap(time_ns=ts, dropped_approx_samples=gaps)
            data = source.read(chunk_samples - len(pending))
            if data is None:
                break
            pending = np.concatenate([pending, data]) if len(pending) else data
            while len(pending) >= chunk_samples:
                ts = t0 + emitted * 1_000_000_000 // source.rate
                yield PcmChunk(samples=pending[:chunk_samples],
                               sample_rate_hz=source.rate, start_time_ns=ts)
                emitted += chunk_samples
                pending = pending[chunk_samples:]
        if len(pending):
            ts = t0 + emitted * 1_000_000_000 // source.rate
            yield PcmChunk(samples=pending, sample_rate_hz=source.rate,
                           start_time_ns=ts)
    finally:
        source.close()


def paced(chunks: Iterator[PcmChunk | StreamGap], clock_rate: float = 1.0,
          ) -> Iterator[PcmChunk | StreamGap]:
    """Throttle a pull-driven stream to wall-clock cadence.

    clock_rate > 1 plays stream seconds faster than wall seconds (compressed
    soak runs on synthetic sources); live sources are self-paced and should
    not be wrapped.
    """
    t_wall0 = time.monotonic()
    t_stream = 0.0
    for item in chunks:
        yield item
        if isinstance(item, PcmChunk):
            t_stream += item.duration_s
            deadline = t_wall0 + t_stream / clock_rate
            delay = deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)
