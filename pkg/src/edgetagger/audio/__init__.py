from .resample import StreamResampler, resample
from .sources import (AudioSource, FileSource, LiveSource, PcmChunk,
                      StreamGap, SyntheticSource, capture_stream, paced)
from .wavio import read_wav_mono, write_wav_float32
from .windowing import AnalysisWindow, Windower, WindowSpec

__all__ = [
    "AnalysisWindow", "AudioSource", "FileSource", "LiveSource", "PcmChunk",
    "StreamGap", "StreamResampler", "SyntheticSource", "Windower",
    "WindowSpec", "capture_stream", "paced", "read_wav_mono", "resample",
    "write_wav_float32",
]
