"""Shared fixtures: synthetic corpora on disk and a protocol stub server."""

from __future__ import annotations

import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from amb import synth
from amb.audio import clip_from_wav_bytes, clip_to_wav_bytes
from amb.backends import BackendConfig, MockBackend
from amb.corpus import Corpus, load_manifest
from amb.errors import AmbError

# Per-episode scene counts used by the 24-episode statistics fixture; the
# first episode gets 242 utterances over its 14 scenes, the rest stay small.
SCENE_COUNTS_24 = (14, 8, 13, 16, 16, 9, 21, 10, 12, 8, 12, 15, 13, 17, 14, 14, 14, 8, 8, 12, 15, 12, 21, 11)


def scene_sizes_for(episode_index: int, n_scenes: int) -> tuple[int, ...]:
    if episode_index == 0:
        sizes = [17] * n_scenes
        for k in range(242 - sum(sizes)):
            sizes[k] += 1
        return tuple(sizes)
    return tuple(2 + (episode_index + k) % 3 for k in range(n_scenes))


def build_stats_corpus() -> Corpus:
    specs = [
        synth.EpisodeSpec(id=f"SE01_{i + 1:02d}", scene_sizes=scene_sizes_for(i, n))
        for i, n in enumerate(SCENE_COUNTS_24)
    ]
    return synth.synth_corpus(specs, seed=13)


@pytest.fixture(scope="session")
def stats_corpus() -> Corpus:
    return build_stats_corpus()


@pytest.fixture(scope="session")
def demo_corpus_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("demo_corpus")
    corpus = synth.synth_corpus(synth.demo_specs(3, 2, 6), seed=7)
    synth.write_corpus_assets(corpus, root)
    return root


@pytest.fixture()
def demo_corpus(demo_corpus_dir) -> Corpus:
    return load_manifest(demo_corpus_dir / "manifest.json")


@pytest.fixture()
def mock_backends() -> MockBackend:
    return MockBackend(BackendConfig(mode="mock"))


def find_target(corpus: Corpus, role: str, min_position: int = 1) -> tuple[str, int]:
    """(scene_id, position) of a line of `role` with enough preceding turns."""
    for ep in corpus.episodes:
        for sc in ep.scenes:
            for pos, u in enumerate(ep.utterances[sc.start_index : sc.end_index + 1]):
                if u.role == role and pos >= min_position:
                    return sc.id, pos
    raise AssertionError(f"fixture has no {role} line at position >= {min_position}")


class ProtocolStubHandler(BaseHTTPRequestHandler):
    """Serves the wire protocol by delegating to the in-process mock."""

    backend = MockBackend(BackendConfig(mode="mock"))
    canned: dict[str, dict] = {}

    def _reply(self, status: int, doc: dict) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/v1/health":
            self._reply(200, {"status": "ok"})
        else:
            self._reply(404, {"error": {"code": "NotFound", "message": self.path}})

    def do_POST(self):
        payload = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if self.path in self.canned:
            self._reply(200, self.canned[self.path])
            return
        try:
            if self.path == "/v1/transcribe":
                clip = clip_from_wav_bytes(base64.b64decode(payload["audio_b64"]))
                self._reply(200, {"text": self.backend.transcribe(clip)})
            elif self.path == "/v1/emotion_caption":
                clip = clip_from_wav_bytes(base64.b64decode(payload["audio_b64"]))
                self._reply(200, {"caption": self.backend.caption_emotion(clip)})
            elif self.path == "/v1/reason":
                self._reply(200, {"text": self.backend.reason(payload["prompt"])})
            elif self.path == "/v1/embed":
                vectors = self.backend.embed(payload["texts"])
                self._reply(200, {"vectors": [list(v.values) for v in vectors], "dim": vectors[0].dim})
            elif self.path == "/v1/synthesize":
                prompt = clip_from_wav_bytes(base64.b64decode(payload["prompt_audio_b64"]))
                clip = self.backend.synthesize(payload["text"], prompt)
                self._reply(
                    200,
                    {
                        "audio_b64": base64.b64encode(clip_to_wav_bytes(clip)).decode("ascii"),
                        "sample_rate_hz": clip.sample_rate_hz,
                    },
                )
            else:
                self._reply(404, {"error": {"code": "NotFound", "message": self.path}})
        except AmbError as e:
            self._reply(400, {"error": {"code": e.code, "message": str(e)}})

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), ProtocolStubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        ProtocolStubHandler.canned = {}
        server.shutdown()
