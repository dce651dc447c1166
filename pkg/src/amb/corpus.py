"""Hierarchical dialogue corpus: utterances, scenes, role profiles.

A corpus is loaded from a single JSON manifest (see ``load_manifest``) and is
treated as immutable afterwards.  Loading is deliberately permissive: it only
checks structure, so that ``validate_corpus`` can report every semantic
violation in one pass instead of dying on the first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingField, ParseError, UnknownEpisode, UnknownScene

OTHERS_ROLE = "OTHERS"

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class Utterance:
    id: str
    episode_id: str
    role: str
    text: str
    audio: str
    start_s: float
    end_s: float

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Scene:
    id: str
    episode_id: str
    start_index: int
    end_index: int
    description: str

    def span(self) -> range:
        return range(self.start_index, self.end_index + 1)


@dataclass(frozen=True)
class RoleProfile:
    name: str
    profile: str


@dataclass
class Episode:
    id: str
    utterances: list[Utterance]
    scenes: list[Scene]


@dataclass
class Corpus:
    episodes: list[Episode]
    roles: list[RoleProfile]
    # Directory audio asset refs are relative to; set by load_manifest, not
    # part of corpus identity and never serialized.
    base_dir: Path | None = field(default=None, compare=False)

    def role_names(self) -> set[str]:
        return {r.name for r in self.roles}

    def episode(self, episode_id: str) -> Episode:
        for ep in self.episodes:
            if ep.id == episode_id:
                return ep
        raise UnknownEpisode(f"unknown episode: {episode_id}")

    def find_scene(self, scene_id: str) -> tuple[Episode, Scene]:
        for ep in self.episodes:
            for sc in ep.scenes:
                if sc.id == scene_id:
                    return ep, sc
        raise UnknownScene(f"unknown scene: {scene_id}")

    def resolve_audio(self, utterance: Utterance) -> Path:
        if self.base_dir is None:
            return Path(utterance.audio)
        return self.base_dir / utterance.audio


@dataclass(frozen=True)
class Violation:
    kind: str
    item_id: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, item_id: str, message: str) -> None:
        self.violations.append(Violation(kind, item_id, message))

    def __iter__(self):
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise MissingField(f"{path}.{key}" if path else key)
    return obj[key]


def _require_str(obj: dict, key: str, path: str) -> str:
    v = _require(obj, key, path)
    if not isinstance(v, str):
        raise ParseError(f"expected string at {path}.{key}" if path else f"expected string at {key}")
    return v


def _require_num(obj: dict, key: str, path: str):
    v = _require(obj, key, path)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"expected number at {path}.{key}")
    return v


def _require_int(obj: dict, key: str, path: str) -> int:
    v = _require(obj, key, path)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"expected integer at {path}.{key}")
    return v


def _require_list(obj: dict, key: str, path: str) -> list:
    v = _require(obj, key, path)
    if not isinstance(v, list):
        raise ParseError(f"expected list at {path}.{key}" if path else f"expected list at {key}")
    return v


def load_manifest(path: str | Path) -> Corpus:
    """Parse a corpus manifest.  Structure only; run validate_corpus after."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read manifest {path}: {e}") from e
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed manifest {path}: {e}") from e
    if not isinstance(doc, dict):
        raise ParseError("manifest root must be an object")

    version = _require(doc, "version", "")
    if version != MANIFEST_VERSION:
        raise ParseError(f"unsupported manifest version: {version!r}")

    roles = []
    for i, r in enumerate(_require_list(doc, "roles", "")):
        rp = f"roles[{i}]"
        if not isinstance(r, dict):
            raise ParseError(f"expected object at {rp}")
        roles.append(RoleProfile(name=_require_str(r, "name", rp), profile=_require_str(r, "profile", rp)))

    episodes = []
    for i, e in enumerate(_require_list(doc, "episodes", "")):
        ep_path = f"episodes[{i}]"
        if not isinstance(e, dict):
            raise ParseError(f"expected object at {ep_path}")
        episode_id = _require_str(e, "id", ep_path)
        utterances = []
        for j, u in enumerate(_require_list(e, "utterances", ep_path)):
            up = f"{ep_path}.utterances[{j}]"
            if not isinstance(u, dict):
                raise ParseError(f"expected object at {up}")
            utterances.append(
                Utterance(
                    id=_require_str(u, "id", up),
                    episode_id=episode_id,
                    role=_require_str(u, "role", up),
                    text=_require_str(u, "text", up),
                    audio=_require_str(u, "audio", up),
                    start_s=_require_num(u, "start_s", up),
                    end_s=_require_num(u, "end_s", up),
                )
            )
        scenes = []
        for j, s in enumerate(_require_list(e, "scenes", ep_path)):
            sp = f"{ep_path}.scenes[{j}]"
            if not isinstance(s, dict):
                raise ParseError(f"expected object at {sp}")
            scenes.append(
                Scene(
                    id=_require_str(s, "id", sp),
                    episode_id=episode_id,
                    start_index=_require_int(s, "start_index", sp),
                    end_index=_require_int(s, "end_index", sp),
                    description=_require_str(s, "description", sp),
                )
            )
        episodes.append(Episode(id=episode_id, utterances=utterances, scenes=scenes))

    return Corpus(episodes=episodes, roles=roles, base_dir=path.parent)


def corpus_to_manifest(corpus: Corpus) -> dict:
    """Plain-dict form of the manifest, keys in canonical order."""
    return {
        "version": MANIFEST_VERSION,
        "roles": [{"name": r.name, "profile": r.profile} for r in corpus.roles],
        "episodes": [
            {
                "id": ep.id,
                "utterances": [
                    {
                        "id": u.id,
                        "role": u.role,
                        "text": u.text,
                        "audio": u.audio,
                        "start_s": u.start_s,
                        "end_s": u.end_s,
                    }
                    for u in ep.utterances
                ],
                "scenes": [
                    {
                        "id": s.id,
                        "start_index": s.start_index,
                        "end_index": s.end_index,
                        "description": s.description,
                    }
                    for s in ep.scenes
                ],
            }
            for ep in corpus.episodes
        ],
    }


def dumps_manifest(corpus: Corpus) -> str:
    """Canonical serialization: fixed key order, UTF-8 text, LF, trailing newline."""
    return json.dumps(corpus_to_manifest(corpus), ensure_ascii=False, indent=2) + "\n"


def save_manifest(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(dumps_manifest(corpus), encoding="utf-8", newline="\n")


def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Check every corpus invariant; violations are data, not exceptions."""
    report = ValidationReport()
    role_names = corpus.role_names()

    seen_names: set[str] = set()
    for r in corpus.roles:
        if not r.name:
            report.add("empty_role_name", r.name, "role profile with empty name")
        if r.name in seen_names:
            report.add("duplicate_role", r.name, f"duplicate role profile: {r.name}")
        seen_names.add(r.name)

    seen_utt_ids: set[str] = set()
    for ep in corpus.episodes:
        n = len(ep.utterances)
        for u in ep.utterances:
            if u.id in seen_utt_ids:
                report.add("duplicate_id", u.id, f"duplicate utterance id: {u.id}")
            seen_utt_ids.add(u.id)
            if u.episode_id != ep.id:
                report.add("episode_mismatch", u.id, f"utterance {u.id} tagged with episode {u.episode_id}, found in {ep.id}")
            if not u.end_s > u.start_s:
                report.add("bad_timing", u.id, f"utterance {u.id}: end_s {u.end_s} not after start_s {u.start_s}")
            if u.role != OTHERS_ROLE and u.role not in role_names:
                report.add("unknown_role", u.id, f"utterance {u.id}: role {u.role!r} has no profile and is not {OTHERS_ROLE}")

        in_range = []
        for s in ep.scenes:
            if s.episode_id != ep.id:
                report.add("episode_mismatch", s.id, f"scene {s.id} tagged with episode {s.episode_id}, found in {ep.id}")
            if s.start_index < 0 or s.start_index > s.end_index or s.end_index >= n:
                report.add("scene_range", s.id, f"scene {s.id}: scene span out of range ({s.start_index}..{s.end_index} of {n})")
            else:
                in_range.append(s)

        # Span structure over the in-range scenes only, one finding per defect.
        for prev, nxt in zip(in_range, in_range[1:]):
            if nxt.start_index <= prev.end_index:
                report.add("scene_overlap", nxt.id, f"overlapping scenes: {prev.id} and {nxt.id}")
            elif nxt.start_index > prev.end_index + 1:
                report.add("scene_gap", nxt.id, f"gap between scenes {prev.id} and {nxt.id}")
        if in_range and len(in_range) == len(ep.scenes):
            if in_range[0].start_index != 0:
                report.add("scene_coverage", in_range[0].id, f"episode {ep.id}: first scene starts at {in_range[0].start_index}, not 0")
            if in_range[-1].end_index != n - 1:
                report.add("scene_coverage", in_range[-1].id, f"episode {ep.id}: last scene ends at {in_range[-1].end_index}, not {n - 1}")
        elif not ep.scenes and n > 0:
            report.add("scene_coverage", ep.id, f"episode {ep.id}: {n} utterances but no scenes")

    return report


def split_episodes(corpus: Corpus, test_ids: set[str]) -> tuple[Corpus, Corpus]:
    """Exact, order-preserving partition by episode id; roles go to both halves."""
    known = {ep.id for ep in corpus.episodes}
    for tid in sorted(test_ids):
        if tid not in known:
            raise UnknownEpisode(f"unknown episode: {tid}")
    train = Corpus(
        episodes=[ep for ep in corpus.episodes if ep.id not in test_ids],
        roles=list(corpus.roles),
        base_dir=corpus.base_dir,
    )
    test = Corpus(
        episodes=[ep for ep in corpus.episodes if ep.id in test_ids],
        roles=list(corpus.roles),
        base_dir=corpus.base_dir,
    )
    return train, test


def scene_dialogue(corpus: Corpus, scene_id: str) -> list[Utterance]:
    """Utterances at positions [start_index, end_index] of the scene's episode."""
    ep, scene = corpus.find_scene(scene_id)
    return ep.utterances[scene.start_index : scene.end_index + 1]
