"""The four-stage performance pipeline.

A performance of one scripted line runs: context assembly (profile, scene,
preceding turns), per-turn emotion captioning, emotion-state reasoning over a
templated prompt, then retrieval-conditioned synthesis.  Every stage can be
ablated independently; with mock backends the whole pipeline is a pure
function of (corpus bytes, config, seed).
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .audio import AudioClip, read_wav, write_wav
from .backends import fnv1a64
from .corpus import Corpus, RoleProfile, Utterance
from .emodb import EmotionDatabase, query_top1
from .errors import AmbError, EmptyCompletion, EmptyDatabase, InvalidPosition, NoProfile, RoleMismatch, TemplateError

# Classic MMIX linear congruential stream, used for the reasoning-free
# fallback draw so it stays reproducible everywhere.
LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
_U64 = 1 << 64

PLACEHOLDERS = ("role_profile", "scene_description", "dialogue_block", "target_line", "role_name", "last_caption")

EMOTION_STATE_MAX_CHARS = 256


@dataclass(frozen=True)
class Turn:
    utterance: Utterance
    caption: str | None = None


@dataclass(frozen=True)
class SceneContext:
    role_profile: RoleProfile
    scene_description: str
    turns: tuple[Turn, ...]
    target: Utterance
    audio_root: Path | None = None


@dataclass(frozen=True)
class EmotionState:
    text: str

    def __post_init__(self):
        if not self.text or self.text != self.text.strip():
            raise ValueError("emotion state must be non-empty with no surrounding whitespace")
        if len(self.text) > EMOTION_STATE_MAX_CHARS:
            raise ValueError(f"emotion state longer than {EMOTION_STATE_MAX_CHARS} chars")


@dataclass(frozen=True)
class PromptTemplate:
    text: str

    def validate(self) -> None:
        for name in PLACEHOLDERS:
            count = self.text.count("{" + name + "}")
            if count != 1:
                raise TemplateError(f"placeholder {{{name}}} appears {count} times, expected exactly once")
        lines = [ln.strip() for ln in self.text.splitlines()]
        if "#ROLE: {role_name}" not in lines:
            raise TemplateError("template lacks the '#ROLE: {role_name}' marker line")
        if "#LAST_TONE: {last_caption}" not in lines:
            raise TemplateError("template lacks the '#LAST_TONE: {last_caption}' marker line")

    @classmethod
    def load(cls, path: str | Path) -> "PromptTemplate":
        tpl = cls(text=Path(path).read_text(encoding="utf-8"))
        tpl.validate()
        return tpl

    @classmethod
    def default(cls) -> "PromptTemplate":
        text = resources.files("amb").joinpath("templates/brain_default.txt").read_text(encoding="utf-8")
        tpl = cls(text=text)
        tpl.validate()
        return tpl


@dataclass(frozen=True)
class AblationConfig:
    use_role_profile: bool = True
    use_scene: bool = True
    use_context: bool = True
    use_ear: bool = True
    use_brain: bool = True
    seed: int = 42

    def __post_init__(self):
        if not self.use_context and self.use_ear:
            raise ValueError("ear captions require dialogue context")

    def flags(self) -> dict[str, bool]:
        return {
            "use_role_profile": self.use_role_profile,
            "use_scene": self.use_scene,
            "use_context": self.use_context,
            "use_ear": self.use_ear,
            "use_brain": self.use_brain,
        }


# The five structural deletions studied by the ablation harness, plus the
# untouched pipeline.  Removing the reasoning stage disables everything that
# exists only to feed it.
ABLATIONS: dict[str, AblationConfig] = {
    "full": AblationConfig(),
    "no_role_profile": AblationConfig(use_role_profile=False),
    "no_scene": AblationConfig(use_scene=False),
    "no_context": AblationConfig(use_context=False, use_ear=False),
    "no_ear": AblationConfig(use_ear=False),
    "no_brain": AblationConfig(
        use_role_profile=False, use_scene=False, use_context=False, use_ear=False, use_brain=False
    ),
}


def ablation_config(name: str, seed: int = 42) -> AblationConfig:
    if name not in ABLATIONS:
        raise ValueError(f"unknown ablation {name!r}; choose from {sorted(ABLATIONS)}")
    return replace(ABLATIONS[name], seed=seed)


@dataclass(frozen=True)
class Trace:
    captions: tuple[str | None, ...]
    prompt_text: str | None
    config: AblationConfig


@dataclass(frozen=True)
class PerformanceBundle:
    target_utterance_id: str
    role: str
    emotion_state: EmotionState | None
    retrieved_id: str | None
    similarity: float | None
    retrieval_bypassed: bool
    audio: AudioClip
    trace: Trace


def eye_prepare(
    corpus: Corpus,
    role_name: str,
    scene_id: str,
    target_position: int,
    window: int | None = None,
) -> SceneContext:
    """Assemble profile, scene description, and the turns preceding the target.

    ``target_position`` is 0-based within the scene; ``window`` caps how many
    preceding turns are kept (default: the whole scene prefix).
    """
    episode, scene = corpus.find_scene(scene_id)
    dialogue = episode.utterances[scene.start_index : scene.end_index + 1]
    if not 0 <= target_position < len(dialogue):
        raise InvalidPosition(f"position {target_position} outside scene {scene_id} ({len(dialogue)} utterances)")
    target = dialogue[target_position]
    if target.role != role_name:
        raise RoleMismatch(f"target line {target.id} belongs to {target.role!r}, not {role_name!r}")
    profile = next((r for r in corpus.roles if r.name == role_name), None)
    if profile is None:
        raise NoProfile(f"no profile for role {role_name!r}")
    preceding = dialogue[:target_position]
    if window is not None:
        if window < 1:
            raise InvalidPosition(f"window must be positive, got {window}")
        preceding = preceding[-window:]
    return SceneContext(
        role_profile=profile,
        scene_description=scene.description,
        turns=tuple(Turn(utterance=u) for u in preceding),
        target=target,
        audio_root=corpus.base_dir,
    )


def ear_annotate(ctx: SceneContext, backends) -> SceneContext:
    """Fill each turn's emotion caption; already-captioned turns are kept."""
    todo = [t for t in ctx.turns if t.caption is None]
    if not todo:
        return ctx

    def _caption(turn: Turn) -> str:
        ref = ctx.audio_root / turn.utterance.audio if ctx.audio_root is not None else Path(turn.utterance.audio)
        return backends.caption_emotion(ref)

    max_parallel = getattr(getattr(backends, "config", None), "max_parallel", 1)
    if max_parallel > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=max_parallel) as pool:
            captions = dict(zip([t.utterance.id for t in todo], pool.map(_caption, todo)))
    else:
        captions = {t.utterance.id: _caption(t) for t in todo}

    turns = tuple(
        t if t.caption is not None else Turn(utterance=t.utterance, caption=captions[t.utterance.id])
        for t in ctx.turns
    )
    return replace(ctx, turns=turns)


def render_prompt(ctx: SceneContext, tpl: PromptTemplate, cfg: AblationConfig) -> str:
    tpl.validate()
    visible_turns = ctx.turns if cfg.use_context else ()

    dialogue_lines = []
    for t in visible_turns:
        line = f'{t.utterance.role}: "{t.utterance.text}"'
        if cfg.use_ear and t.caption is not None:
            line += f" [tone: {t.caption}]"
        dialogue_lines.append(line)

    last_caption = "none"
    if cfg.use_ear and visible_turns and visible_turns[-1].caption is not None:
        last_caption = visible_turns[-1].caption

    mapping = {
        "role_profile": ctx.role_profile.profile if cfg.use_role_profile else "",
        "scene_description": ctx.scene_description if cfg.use_scene else "",
        "dialogue_block": "\n".join(dialogue_lines),
        "target_line": ctx.target.text,
        "role_name": ctx.role_profile.name,
        "last_caption": last_caption,
    }
    return re.sub(r"\{(" + "|".join(PLACEHOLDERS) + r")\}", lambda m: mapping[m.group(1)], tpl.text)


def _clean_completion(raw: str) -> EmotionState:
    text = raw.strip()
    while len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1].strip()
    text = re.sub(r"\s*\n+\s*", "; ", text)
    text = text[:EMOTION_STATE_MAX_CHARS].strip()
    if not text:
        raise EmptyCompletion("reasoner returned an empty emotion state")
    return EmotionState(text=text)


def brain_infer(prompt: str, backends) -> EmotionState:
    return _clean_completion(backends.reason(prompt))


@dataclass(frozen=True)
class MouthResult:
    entry_id: str
    similarity: float | None
    retrieval_bypassed: bool
    audio: AudioClip


def fallback_index(seed: int, target_utterance_id: str, n_entries: int) -> int:
    state = (seed ^ fnv1a64(target_utterance_id.encode("utf-8"))) % _U64
    state = (LCG_MULTIPLIER * state + LCG_INCREMENT) % _U64
    return state % n_entries


def mouth_deliver(
    state: EmotionState | None,
    db: EmotionDatabase,
    target_text: str,
    cfg: AblationConfig,
    backends,
    target_utterance_id: str,
    audio_root: Path | None = None,
) -> MouthResult:
    """Pick a prompt segment (retrieval, or a seeded draw when reasoning is
    off) and synthesize the target line conditioned on it."""
    if not db.entries:
        raise EmptyDatabase(f"emotion database for {db.role!r} is empty")
    if cfg.use_brain:
        entry, sim = query_top1(db, state.text, backends)
        bypassed = False
    else:
        entry = db.entries[fallback_index(cfg.seed, target_utterance_id, len(db.entries))]
        sim = None
        bypassed = True
    prompt_path = (audio_root / entry.audio) if audio_root is not None else Path(entry.audio)
    prompt_clip = read_wav(prompt_path)
    audio = backends.synthesize(target_text, prompt_clip)
    return MouthResult(entry_id=entry.utterance_id, similarity=sim, retrieval_bypassed=bypassed, audio=audio)


@contextmanager
def _stage(name: str):
    try:
        yield
    except AmbError as e:
        if e.stage is None:
            e.stage = name
        raise


def perform_line(
    corpus: Corpus,
    role_name: str,
    scene_id: str,
    target_position: int,
    db: EmotionDatabase,
    tpl: PromptTemplate,
    cfg: AblationConfig,
    backends,
    window: int | None = None,
) -> PerformanceBundle:
    with _stage("eye"):
        ctx = eye_prepare(corpus, role_name, scene_id, target_position, window=window)
    if cfg.use_ear:
        with _stage("ear"):
            ctx = ear_annotate(ctx, backends)
    prompt = None
    state = None
    if cfg.use_brain:
        with _stage("brain"):
            prompt = render_prompt(ctx, tpl, cfg)
            state = brain_infer(prompt, backends)
    with _stage("mouth"):
        result = mouth_deliver(state, db, ctx.target.text, cfg, backends, ctx.target.id, audio_root=ctx.audio_root)
    return PerformanceBundle(
        target_utterance_id=ctx.target.id,
        role=role_name,
        emotion_state=state,
        retrieved_id=result.entry_id,
        similarity=result.similarity,
        retrieval_bypassed=result.retrieval_bypassed,
        audio=result.audio,
        trace=Trace(captions=tuple(t.caption for t in ctx.turns), prompt_text=prompt, config=cfg),
    )


def _safe_stem(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", name)


def bundle_to_json(bundle: PerformanceBundle, wav_name: str) -> str:
    doc = {
        "target_utterance_id": bundle.target_utterance_id,
        "role": bundle.role,
        "emotion_state": bundle.emotion_state.text if bundle.emotion_state else None,
        "retrieved_id": bundle.retrieved_id,
        "similarity": bundle.similarity,
        "retrieval_bypassed": bundle.retrieval_bypassed,
        "audio": wav_name,
        "trace": {
            "captions": list(bundle.trace.captions),
            "prompt_text": bundle.trace.prompt_text,
            "config": {**bundle.trace.config.flags(), "seed": bundle.trace.config.seed},
        },
    }
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def write_bundle(bundle: PerformanceBundle, out_dir: str | Path) -> tuple[Path, Path]:
    """Write <id>.json plus <id>.wav beside it; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = _safe_stem(bundle.target_utterance_id)
    wav_path = out_dir / f"{stem}.wav"
    json_path = out_dir / f"{stem}.json"
    write_wav(bundle.audio, wav_path)
    json_path.write_text(bundle_to_json(bundle, wav_path.name), encoding="utf-8", newline="\n")
    return json_path, wav_path
