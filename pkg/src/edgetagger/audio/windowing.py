"""Fixed-length overlapping analysis windows over a contiguous sample stream.

Window k covers stream time [k*hop, k*hop + window). With the 10 s / 5 s
defaults consecutive windows share exactly half their samples; the shared
region is sliced from one underlying buffer, so the overlap equality is
exact, not approximate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WindowSpec:
    window_s: float = 10.0
    hop_s: float = 5.0
    target_rate_hz: int = 32000

    def __post_init__(self):
        if not 0 < self.hop_s <= self.window_s:
            raise ValueError("require 0 < hop_s <= window_s")
        if self.target_rate_hz <= 0:
            raise ValueError("target_rate_hz must be positive")
        for name in ("window_s", "hop_s"):
            samples = getattr(self, name) * self.target_rate_hz
            if abs(samples - round(samples)) > 1e-9:
                raise ValueError(
                    f"{name} must map to a whole sample count at "
                    f"{self.target_rate_hz} Hz")

    @property
    def window_samples(self) -> int:
        return round(self.window_s * self.target_rate_hz)

    @property
    def hop_samples(self) -> int:
        return round(self.hop_s * self.target_rate_hz)

    @property
    def overlap_samples(self) -> int:
        return self.window_samples - self.hop_samples


@dataclass(frozen=True)
class AnalysisWindow:
    """One model-input buffer: exactly window_samples at the target rate."""

    samples: np.ndarray
    sample_rate_hz: int
    start_time_ns: int
    index: int


class Windower:
    """Accumulates target-rate samples and emits complete windows.

    After a stream gap the buffer restarts at the next contiguous region;
    window indices keep increasing monotonically across the restart.
    """

    def __init__(self, spec: WindowSpec):
        self.spec = spec
        self._buf = np.zeros(0, dtype=np.float32)
        self._origin_ns: int | None = None
        self._origin_pos = 0      # stream sample index of _buf[0] since origin
        self._next_index = 0
        self._windows_emitted = 0

    def push(self, samples: np.ndarray,
             start_time_ns: int | None = None) -> list[AnalysisWindow]:
        """Append contiguous samples, return every window that completed."""
        if len(samples) == 0:
            return []
        if self._origin_ns is None:
            self._origin_ns = start_time_ns if start_time_ns is not None else 0
        self._buf = np.concatenate([self._buf, np.asarray(samples,
                                                          dtype=np.float32)])
        w, h = self.spec.window_samples, self.spec.hop_samples
        out: list[AnalysisWindow] = []
        offset = 0
        while len(self._buf) - offset >= w:
            start_pos = self._origin_pos + offset
            t = self._origin_ns + round(
                start_pos * 1e9 / self.spec.target_rate_hz)
            out.append(AnalysisWindow(
                samples=self._buf[offset:offset + w].copy(),
                sample_rate_hz=self.spec.target_rate_hz,
                start_time_ns=t,
                index=self._next_index))
            self._next_index += 1
            offset += h
        if offset:
            self._buf = self._buf[offset:]
            self._origin_pos += offset
        self._windows_emitted += len(out)
        return out

    def notify_gap(self) -> None:
        """Drop buffered audio; windowing restarts at the next push."""
        self._buf = np.zeros(0, dtype=np.float32)
        self._origin_ns = None
        self._origin_pos = 0

    @property
    def windows_emitted(self) -> int:
        return self._windows_emitted
