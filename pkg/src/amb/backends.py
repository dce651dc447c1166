"""Model-inference backends: deterministic in-process mocks and a remote client.

All five operations (transcribe, emotion caption, reason, embed, synthesize)
sit behind one interface so any subset can be served out-of-process.  Mocks
are pure functions of their inputs, which makes every pipeline above them
byte-reproducible without model weights.

Wire protocol (HTTP, JSON, UTF-8), served by any conforming remote:
    POST /v1/transcribe       {"audio_b64"}                -> {"text"}
    POST /v1/emotion_caption  {"audio_b64"}                -> {"caption"}
    POST /v1/reason           {"prompt"}                   -> {"text"}
    POST /v1/embed            {"texts": [...]}             -> {"vectors": [[...]], "dim"}
    POST /v1/synthesize       {"text", "prompt_audio_b64"} -> {"audio_b64", "sample_rate_hz"}
    GET  /v1/health                                        -> {"status": "ok"}
Errors are non-2xx with {"error": {"code", "message"}}.
"""

from __future__ import annotations

import base64
import json
import math
import re
import struct
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from . import errors
from .audio import AudioClip, clip_from_wav_bytes, clip_to_wav_bytes, read_wav

MOCK_EMBED_DIM = 64
MOCK_SYNTH_RATE_HZ = 16000
MOCK_DEFAULT_CAPTION = "neutral, steady tone"
MOCK_DEFAULT_REASONING = "neutral delivery"

ROLE_MARKER = "#ROLE:"
LAST_TONE_MARKER = "#LAST_TONE:"

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_U64 = 1 << 64


def fnv1a64(data: bytes) -> int:
    h = FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV64_PRIME) % _U64
    return h


@dataclass(frozen=True)
class BackendConfig:
    mode: str = "mock"
    base_url: str | None = None
    timeout_ms: int = 30000
    max_parallel: int = 4
    seed: int = 42

    def __post_init__(self):
        if self.mode not in ("mock", "remote"):
            raise ValueError(f"unknown backend mode: {self.mode!r}")
        if self.mode == "remote" and not self.base_url:
            raise ValueError("remote mode requires base_url")
        if self.timeout_ms <= 0 or self.max_parallel < 1:
            raise ValueError("timeout_ms and max_parallel must be positive")


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    dim: int

    def __post_init__(self):
        if len(self.values) != self.dim:
            raise errors.DimMismatch(f"vector has {len(self.values)} values, dim says {self.dim}")


def _embed_tokens(text: str) -> list[str]:
    # ASCII alphanumeric runs only, so the rule is portable across languages.
    return re.findall(r"[a-z0-9]+", text.lower())


def mock_embed_one(text: str) -> EmbeddingVector:
    values = [0.0] * MOCK_EMBED_DIM
    tokens = _embed_tokens(text)
    if not tokens:
        values[0] = 1.0
        return EmbeddingVector(values=tuple(values), dim=MOCK_EMBED_DIM)
    for token in tokens:
        values[fnv1a64(token.encode("utf-8")) % MOCK_EMBED_DIM] += 1.0
    norm = math.sqrt(sum(v * v for v in values))
    return EmbeddingVector(values=tuple(v / norm for v in values), dim=MOCK_EMBED_DIM)


def extract_markers(prompt: str) -> tuple[str, str] | None:
    role = tone = None
    for line in prompt.splitlines():
        if line.startswith(ROLE_MARKER) and role is None:
            role = line[len(ROLE_MARKER):].strip()
        elif line.startswith(LAST_TONE_MARKER) and tone is None:
            tone = line[len(LAST_TONE_MARKER):].strip()
    if role is None or tone is None:
        return None
    return role, tone


def mock_reason(prompt: str) -> str:
    markers = extract_markers(prompt)
    if markers is None:
        return MOCK_DEFAULT_REASONING
    role, tone = markers
    return f"{role} responds with {tone}"


def mock_synthesize(text: str, prompt_clip: AudioClip) -> AudioClip:
    duration_ms = max(200, 60 * len(text))
    n_samples = MOCK_SYNTH_RATE_HZ * duration_ms // 1000
    head = prompt_clip.samples[:64]
    digest = fnv1a64(struct.pack(f"<{len(head)}h", *head))
    freq = 150 + digest % 200
    step = 2.0 * math.pi * freq / MOCK_SYNTH_RATE_HZ
    samples = tuple(int(round(16000 * math.sin(step * n))) for n in range(n_samples))
    return AudioClip(sample_rate_hz=MOCK_SYNTH_RATE_HZ, samples=samples)


def _as_path(clip_or_ref) -> Path | None:
    if isinstance(clip_or_ref, (str, Path)):
        return Path(clip_or_ref)
    return None


class MockBackend:
    """Deterministic stand-ins for the five model operations.

    Transcripts and captions come from sidecar files next to the audio asset
    ("<audio>.txt" / "<audio>.emotion.txt"); everything else is computed.
    """

    def __init__(self, config: BackendConfig | None = None):
        self.config = config or BackendConfig(mode="mock")

    def transcribe(self, clip_or_ref) -> str:
        path = _as_path(clip_or_ref)
        if path is None:
            raise errors.MissingSidecar("transcribe mock needs an asset reference with a .txt sidecar")
        sidecar = Path(str(path) + ".txt")
        if not sidecar.exists():
            raise errors.MissingSidecar(f"no transcript sidecar: {sidecar}")
        return sidecar.read_text(encoding="utf-8")

    def caption_emotion(self, clip_or_ref) -> str:
        path = _as_path(clip_or_ref)
        if path is not None:
            sidecar = Path(str(path) + ".emotion.txt")
            if sidecar.exists():
                return sidecar.read_text(encoding="utf-8")
        return MOCK_DEFAULT_CAPTION

    def reason(self, prompt: str) -> str:
        if not prompt:
            raise errors.EmptyPrompt("reason called with empty prompt")
        return mock_reason(prompt)

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        if not texts:
            raise errors.EmptyInput("embed called with no texts")
        return [mock_embed_one(t) for t in texts]

    def synthesize(self, text: str, prompt_clip: AudioClip) -> AudioClip:
        if not text:
            raise errors.EmptyText("synthesize called with empty text")
        return mock_synthesize(text, prompt_clip)


_ERROR_CLASSES = {
    cls.__name__: cls
    for cls in vars(errors).values()
    if isinstance(cls, type) and issubclass(cls, errors.AmbError) and cls is not errors.AmbError
}


class RemoteBackend:
    """HTTP client for the wire protocol; bounded to max_parallel in-flight calls."""

    def __init__(self, config: BackendConfig):
        if config.mode != "remote":
            raise ValueError("RemoteBackend requires a remote-mode config")
        self.config = config
        self._limiter = threading.BoundedSemaphore(config.max_parallel)

    def _post(self, endpoint: str, payload: dict) -> dict:
        url = self.config.base_url.rstrip("/") + endpoint
        body = json.dumps(payload).encode("utf-8")
        request = urllib.request.Request(
            url, data=body, headers={"Content-Type": "application/json"}, method="POST"
        )
        with self._limiter:
            try:
                with urllib.request.urlopen(request, timeout=self.config.timeout_ms / 1000.0) as resp:
                    return json.loads(resp.read().decode("utf-8"))
            except urllib.error.HTTPError as e:
                raise self._domain_error(e) from e
            except (urllib.error.URLError, TimeoutError, OSError) as e:
                raise errors.BackendUnavailable(f"backend unreachable: {e}") from e
            except json.JSONDecodeError as e:
                raise errors.BackendUnavailable(f"malformed backend response: {e}") from e

    @staticmethod
    def _domain_error(http_error: urllib.error.HTTPError) -> errors.AmbError:
        try:
            detail = json.loads(http_error.read().decode("utf-8"))["error"]
            cls = _ERROR_CLASSES.get(detail["code"], errors.BackendUnavailable)
            return cls(detail.get("message", ""))
        except Exception:
            return errors.BackendUnavailable(f"backend returned HTTP {http_error.code}")

    def _audio_b64(self, clip_or_ref) -> str:
        path = _as_path(clip_or_ref)
        if path is not None:
            clip = read_wav(path)
        else:
            clip = clip_or_ref
        return base64.b64encode(clip_to_wav_bytes(clip)).decode("ascii")

    def health(self) -> bool:
        url = self.config.base_url.rstrip("/") + "/v1/health"
        try:
            with urllib.request.urlopen(url, timeout=self.config.timeout_ms / 1000.0) as resp:
                return json.loads(resp.read().decode("utf-8")).get("status") == "ok"
        except (urllib.error.URLError, TimeoutError, OSError, json.JSONDecodeError):
            return False

    def transcribe(self, clip_or_ref) -> str:
        return self._post("/v1/transcribe", {"audio_b64": self._audio_b64(clip_or_ref)})["text"]

    def caption_emotion(self, clip_or_ref) -> str:
        return self._post("/v1/emotion_caption", {"audio_b64": self._audio_b64(clip_or_ref)})["caption"]

    def reason(self, prompt: str) -> str:
        if not prompt:
            raise errors.EmptyPrompt("reason called with empty prompt")
        return self._post("/v1/reason", {"prompt": prompt})["text"]

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        if not texts:
            raise errors.EmptyInput("embed called with no texts")
        reply = self._post("/v1/embed", {"texts": list(texts)})
        dim = reply["dim"]
        return [EmbeddingVector(values=tuple(float(x) for x in vec), dim=dim) for vec in reply["vectors"]]

    def synthesize(self, text: str, prompt_clip: AudioClip) -> AudioClip:
        if not text:
            raise errors.EmptyText("synthesize called with empty text")
        reply = self._post(
            "/v1/synthesize",
            {"text": text, "prompt_audio_b64": base64.b64encode(clip_to_wav_bytes(prompt_clip)).decode("ascii")},
        )
        return clip_from_wav_bytes(base64.b64decode(reply["audio_b64"]))


def make_backend(config: BackendConfig):
    if config.mode == "mock":
        return MockBackend(config)
    return RemoteBackend(config)
