"""Per-role emotion-indexed speech database with cosine top-1 retrieval.

Each entry maps an emotion caption (and its embedding) to the speech segment
it describes.  Retrieval is a linear scan; that is the reference behavior any
faster index would have to reproduce exactly, including the tie-break.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .backends import EmbeddingVector
from .corpus import Utterance
from .errors import DimMismatch, EmptyDatabase, EmptyInput, ParseError, RoleMismatch, VersionMismatch, ZeroVector

DB_VERSION = 1


@dataclass(frozen=True)
class EmotionEntry:
    utterance_id: str
    role: str
    caption: str
    embedding: EmbeddingVector
    audio: str


@dataclass
class EmotionDatabase:
    role: str
    dim: int
    entries: list[EmotionEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)


def build_database(role: str, utterances: list[Utterance], backends, audio_root: Path | None = None) -> EmotionDatabase:
    """Caption and embed every utterance of one role.

    Aborts on the first backend failure; captions are embedded one call per
    entry so a rebuild with identical inputs is byte-identical on disk.
    """
    if not utterances:
        raise EmptyInput(f"no utterances to index for role {role!r}")
    for u in utterances:
        if u.role != role:
            raise RoleMismatch(f"utterance {u.id} belongs to {u.role!r}, not {role!r}")

    entries = []
    dim = None
    for u in utterances:
        ref = (audio_root / u.audio) if audio_root is not None else Path(u.audio)
        caption = backends.caption_emotion(ref)
        embedding = backends.embed([caption])[0]
        if dim is None:
            dim = embedding.dim
        elif embedding.dim != dim:
            raise DimMismatch(f"embedder returned dim {embedding.dim}, expected {dim}")
        entries.append(
            EmotionEntry(utterance_id=u.id, role=role, caption=caption, embedding=embedding, audio=u.audio)
        )
    return EmotionDatabase(role=role, dim=dim, entries=entries)


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    if u.dim != v.dim:
        raise DimMismatch(f"cosine over dims {u.dim} and {v.dim}")
    dot = 0.0
    nu = 0.0
    nv = 0.0
    for a, b in zip(u.values, v.values):
        dot += a * b
        nu += a * a
        nv += b * b
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine of a zero vector")
    return dot / (math.sqrt(nu) * math.sqrt(nv))


def query_top1(db: EmotionDatabase, state: str, backends) -> tuple[EmotionEntry, float]:
    """Entry whose caption embedding is most similar to the emotion state.

    Ties break toward the lexicographically smallest utterance_id so results
    are stable across platforms and entry orderings.
    """
    if not db.entries:
        raise EmptyDatabase(f"emotion database for {db.role!r} is empty")
    query = backends.embed([state])[0]
    best: EmotionEntry | None = None
    best_sim = -2.0
    for entry in db.entries:
        sim = cosine(query, entry.embedding)
        if sim > best_sim or (sim == best_sim and entry.utterance_id < best.utterance_id):
            best = entry
            best_sim = sim
    return best, best_sim


def _fmt17(x: float) -> str:
    return format(x, ".17g")


def persist_database(db: EmotionDatabase, path: str | Path) -> None:
    """JSON-lines: header line, then one canonical line per entry.

    Embedding components are written as decimals with 17 significant digits,
    which round-trip float64 exactly.
    """
    lines = [
        json.dumps(
            {"version": DB_VERSION, "role": db.role, "dim": db.dim, "count": len(db.entries)},
            ensure_ascii=False,
        )
    ]
    for e in db.entries:
        embedding = "[" + ", ".join(_fmt17(v) for v in e.embedding.values) + "]"
        lines.append(
            '{"utterance_id": %s, "caption": %s, "embedding": %s, "audio": %s}'
            % (json.dumps(e.utterance_id, ensure_ascii=False), json.dumps(e.caption, ensure_ascii=False),
               embedding, json.dumps(e.audio, ensure_ascii=False))
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_database(path: str | Path) -> EmotionDatabase:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ParseError(f"cannot read database {path}: {e}") from e
    if not lines:
        raise ParseError(f"empty database file: {path}")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ParseError(f"line 1: bad header: {e}") from e
    if header.get("version") != DB_VERSION:
        raise VersionMismatch(f"unsupported database version: {header.get('version')!r}")
    for key in ("role", "dim", "count"):
        if key not in header:
            raise ParseError(f"line 1: header missing {key!r}")

    entries = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParseError(f"line {lineno}: bad entry: {e}") from e
        try:
            values = tuple(float(x) for x in obj["embedding"])
            entry = EmotionEntry(
                utterance_id=obj["utterance_id"],
                role=header["role"],
                caption=obj["caption"],
                embedding=EmbeddingVector(values=values, dim=len(values)),
                audio=obj["audio"],
            )
        except KeyError as e:
            raise ParseError(f"line {lineno}: entry missing {e.args[0]!r}") from e
        if entry.embedding.dim != header["dim"]:
            raise ParseError(f"line {lineno}: entry dim {entry.embedding.dim} != header dim {header['dim']}")
        entries.append(entry)

    if len(entries) != header["count"]:
        raise ParseError(f"header count {header['count']} != {len(entries)} entries")
    return EmotionDatabase(role=header["role"], dim=header["dim"], entries=entries)
