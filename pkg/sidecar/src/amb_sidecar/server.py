"""HTTP server exposing the five model endpoints plus health.

Each endpoint runs in one of two modes: "echo-mock" (deterministic,
weight-free, matching the pipeline client's in-process mocks) or a
real-model identifier resolved through MODEL_ADAPTERS.  Real adapters are
deliberately thin; none ship in this repository, so selecting one without
registering it first fails at startup.
"""

from __future__ import annotations

import argparse
import base64
import io
import json
import os
import struct
import sys
import wave
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import mocks
from .mocks import EndpointError

ENDPOINTS = ("transcribe", "emotion_caption", "reason", "embed", "synthesize")

ECHO_MOCK = "echo-mock"

# endpoint -> {model identifier -> adapter factory}; real deployments
# register adapters here before calling serve().
MODEL_ADAPTERS: dict[str, dict[str, object]] = {name: {} for name in ENDPOINTS}


@dataclass
class SidecarConfig:
    port: int = 8750
    models: dict[str, str] = field(default_factory=lambda: {name: ECHO_MOCK for name in ENDPOINTS})
    device: str = "cpu"

    def __post_init__(self):
        for name in ENDPOINTS:
            self.models.setdefault(name, ECHO_MOCK)
        unknown = set(self.models) - set(ENDPOINTS)
        if unknown:
            raise ValueError(f"unknown endpoints in model selection: {sorted(unknown)}")


def parse_model_spec(spec: str) -> dict[str, str]:
    """Parse "endpoint=model,endpoint=model" (the AMB_SIDECAR_MODELS format)."""
    models = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, model = part.partition("=")
        if not sep or not model:
            raise ValueError(f"bad model spec item: {part!r}")
        models[name.strip()] = model.strip()
    return models


def _wav_to_samples(data: bytes) -> list[int]:
    try:
        with wave.open(io.BytesIO(data), "rb") as w:
            if w.getnchannels() != 1 or w.getsampwidth() != 2:
                raise EndpointError("ParseError", "expected mono PCM16 WAV")
            return list(struct.unpack(f"<{w.getnframes()}h", w.readframes(w.getnframes())))
    except (wave.Error, EOFError) as e:
        raise EndpointError("ParseError", f"bad WAV payload: {e}") from e


def _samples_to_wav(sample_rate_hz: int, samples: list[int]) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate_hz)
        w.writeframes(struct.pack(f"<{len(samples)}h", *samples))
    return buf.getvalue()


def _decode_b64(payload: dict, key: str) -> bytes:
    if key not in payload:
        raise EndpointError("MissingField", f"request body lacks {key!r}")
    try:
        return base64.b64decode(payload[key])
    except (ValueError, TypeError) as e:
        raise EndpointError("ParseError", f"bad base64 in {key!r}: {e}") from e


class EchoMockHandlers:
    """Request handlers for echo-mock mode, one per endpoint."""

    @staticmethod
    def transcribe(payload: dict) -> dict:
        return {"text": mocks.transcribe(_decode_b64(payload, "audio_b64"))}

    @staticmethod
    def emotion_caption(payload: dict) -> dict:
        return {"caption": mocks.caption_emotion(_decode_b64(payload, "audio_b64"))}

    @staticmethod
    def reason(payload: dict) -> dict:
        if "prompt" not in payload:
            raise EndpointError("MissingField", "request body lacks 'prompt'")
        return {"text": mocks.reason(payload["prompt"])}

    @staticmethod
    def embed(payload: dict) -> dict:
        if "texts" not in payload:
            raise EndpointError("MissingField", "request body lacks 'texts'")
        vectors = mocks.embed(payload["texts"])
        return {"vectors": vectors, "dim": mocks.EMBED_DIM}

    @staticmethod
    def synthesize(payload: dict) -> dict:
        if "text" not in payload:
            raise EndpointError("MissingField", "request body lacks 'text'")
        samples = _wav_to_samples(_decode_b64(payload, "prompt_audio_b64"))
        rate, out = mocks.synthesize(payload["text"], samples)
        return {"audio_b64": base64.b64encode(_samples_to_wav(rate, out)).decode("ascii"), "sample_rate_hz": rate}


def build_dispatch(cfg: SidecarConfig) -> dict[str, object]:
    dispatch = {}
    for name in ENDPOINTS:
        model = cfg.models[name]
        if model == ECHO_MOCK:
            dispatch[name] = getattr(EchoMockHandlers, name)
            continue
        adapters = MODEL_ADAPTERS.get(name, {})
        if model not in adapters:
            raise ValueError(f"no adapter registered for {name}={model!r}")
        dispatch[name] = adapters[model](cfg.device)
    return dispatch


class SidecarHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, handler_cls, dispatch):
        super().__init__(address, handler_cls)
        self.dispatch = dispatch


class SidecarRequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def _send(self, status: int, doc: dict) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, status: int, code: str, message: str) -> None:
        self._send(status, {"error": {"code": code, "message": message}})

    def do_GET(self):
        if self.path == "/v1/health":
            self._send(200, {"status": "ok"})
        else:
            self._send_error(404, "NotFound", f"no such endpoint: {self.path}")

    def do_POST(self):
        name = self.path.removeprefix("/v1/")
        handler = self.server.dispatch.get(name) if self.path.startswith("/v1/") else None
        if handler is None:
            self._send_error(404, "NotFound", f"no such endpoint: {self.path}")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length)) if length else {}
            if not isinstance(payload, dict):
                raise EndpointError("ParseError", "request body must be a JSON object")
        except (json.JSONDecodeError, ValueError) as e:
            self._send_error(400, "ParseError", f"bad request body: {e}")
            return
        try:
            self._send(200, handler(payload))
        except EndpointError as e:
            self._send_error(400, e.code, str(e))
        except Exception as e:  # per-request model failures must not kill the server
            self._send_error(500, "ModelError", f"{type(e).__name__}: {e}")

    def log_message(self, *args):
        pass


def serve(cfg: SidecarConfig) -> SidecarHTTPServer:
    """Bind and return the server; caller drives serve_forever/shutdown."""
    dispatch = build_dispatch(cfg)
    return SidecarHTTPServer(("127.0.0.1", cfg.port), SidecarRequestHandler, dispatch)


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(prog="amb-sidecar", description="Model-serving sidecar")
    parser.add_argument("--port", type=int, default=8750, help="0 picks a free port")
    parser.add_argument("--device", default="cpu")
    parser.add_argument(
        "--models",
        default=os.environ.get("AMB_SIDECAR_MODELS", ""),
        help="endpoint=model[,endpoint=model...]; default: everything echo-mock",
    )
    args = parser.parse_args(argv)
    try:
        cfg = SidecarConfig(port=args.port, device=args.device)
        cfg.models.update(parse_model_spec(args.models))
        cfg.__post_init__()
        server = serve(cfg)
    except (ValueError, OSError) as e:
        sys.stderr.write(f"sidecar startup failed: {e}\n")
        sys.exit(1)
    sys.stdout.write(json.dumps({"status": "listening", "port": server.server_address[1]}) + "\n")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
