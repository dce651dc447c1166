"""Echo-mock endpoint implementations.

These replicate the pipeline client's in-process mock contracts bit for bit
so the cross-process path can be exercised without any model weights:

- embed: FNV-1a bag of lowercase ASCII alphanumeric tokens, dim 64,
  L2-normalized; no tokens -> unit basis vector at index 0.
- reason: echoes "<ROLE> responds with <TONE>" from the "#ROLE:" and
  "#LAST_TONE:" marker lines, else "neutral delivery".
- synthesize: 16 kHz PCM16 sine; duration max(200 ms, 60 ms per character);
  frequency 150 + (FNV-1a of the prompt's first 64 samples, packed as
  little-endian int16) mod 200.
- emotion caption: fixed "neutral, steady tone" (no sidecar files exist for
  audio that arrives over the wire).
- transcribe: always MissingSidecar, mirroring the mock contract for audio
  without a transcript sidecar.
"""

from __future__ import annotations

import math
import re
import struct

EMBED_DIM = 64
SYNTH_RATE_HZ = 16000
DEFAULT_CAPTION = "neutral, steady tone"
DEFAULT_REASONING = "neutral delivery"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 1 << 64


class EndpointError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) % _U64
    return h


def embed_text(text: str) -> list[float]:
    values = [0.0] * EMBED_DIM
    tokens = re.findall(r"[a-z0-9]+", text.lower())
    if not tokens:
        values[0] = 1.0
        return values
    for token in tokens:
        values[fnv1a64(token.encode("utf-8")) % EMBED_DIM] += 1.0
    norm = math.sqrt(sum(v * v for v in values))
    return [v / norm for v in values]


def embed(texts: list[str]) -> list[list[float]]:
    if not texts:
        raise EndpointError("EmptyInput", "embed called with no texts")
    return [embed_text(t) for t in texts]


def reason(prompt: str) -> str:
    if not prompt:
        raise EndpointError("EmptyPrompt", "reason called with empty prompt")
    role = tone = None
    for line in prompt.splitlines():
        if line.startswith("#ROLE:") and role is None:
            role = line[len("#ROLE:"):].strip()
        elif line.startswith("#LAST_TONE:") and tone is None:
            tone = line[len("#LAST_TONE:"):].strip()
    if role is None or tone is None:
        return DEFAULT_REASONING
    return f"{role} responds with {tone}"


def transcribe(_wav_bytes: bytes) -> str:
    raise EndpointError("MissingSidecar", "echo-mock transcription has no transcript sidecar for wire audio")


def caption_emotion(_wav_bytes: bytes) -> str:
    return DEFAULT_CAPTION


def synthesize(text: str, prompt_samples: list[int]) -> tuple[int, list[int]]:
    if not text:
        raise EndpointError("EmptyText", "synthesize called with empty text")
    duration_ms = max(200, 60 * len(text))
    n_samples = SYNTH_RATE_HZ * duration_ms // 1000
    head = prompt_samples[:64]
    digest = fnv1a64(struct.pack(f"<{len(head)}h", *head))
    freq = 150 + digest % 200
    step = 2.0 * math.pi * freq / SYNTH_RATE_HZ
    return SYNTH_RATE_HZ, [int(round(16000 * math.sin(step * n))) for n in range(n_samples)]
