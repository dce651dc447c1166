"""Mono PCM16 WAV reading/writing and the in-memory clip type."""

from __future__ import annotations

import io
import struct
import wave
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError

ALLOWED_SAMPLE_RATES = (16000, 22050, 24000, 44100)


@dataclass(frozen=True)
class AudioClip:
    sample_rate_hz: int
    samples: tuple[int, ...]

    def __post_init__(self):
        if self.sample_rate_hz not in ALLOWED_SAMPLE_RATES:
            raise ParseError(f"unsupported sample rate: {self.sample_rate_hz}")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def clip_to_wav_bytes(clip: AudioClip) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate_hz)
        w.writeframes(struct.pack(f"<{len(clip.samples)}h", *clip.samples))
    return buf.getvalue()


def clip_from_wav_bytes(data: bytes) -> AudioClip:
    try:
        with wave.open(io.BytesIO(data), "rb") as w:
            if w.getnchannels() != 1 or w.getsampwidth() != 2:
                raise ParseError("expected mono PCM16 WAV")
            rate = w.getframerate()
            frames = w.readframes(w.getnframes())
    except wave.Error as e:
        raise ParseError(f"bad WAV data: {e}") from e
    samples = struct.unpack(f"<{len(frames) // 2}h", frames)
    return AudioClip(sample_rate_hz=rate, samples=samples)


def write_wav(clip: AudioClip, path: str | Path) -> None:
    Path(path).write_bytes(clip_to_wav_bytes(clip))


def read_wav(path: str | Path) -> AudioClip:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ParseError(f"cannot read WAV {path}: {e}") from e
    return clip_from_wav_bytes(data)
