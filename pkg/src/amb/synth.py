"""Deterministic synthetic corpora, scripts, and audio assets.

Everything here is seeded so tests and demos get byte-identical inputs on
every run.  Audio is tiny generated PCM; transcript and emotion sidecar
files are written next to each clip so mock backends can serve them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .audio import AudioClip, write_wav
from .backends import fnv1a64
from .corpus import Corpus, Episode, RoleProfile, Scene, Utterance, save_manifest

DEFAULT_ROLES = ("Rachel", "Monica", "Phoebe", "Joey", "Chandler", "Ross")

_LEXICON = (
    "coffee sofa kitchen rain window umbrella ticket monkey sandwich guitar "
    "apartment elevator museum dinosaur laundry wedding audition paycheck "
    "balcony turkey pizza letter secret surprise birthday hallway neighbor "
    "chair lamp city train island story phone photo puzzle jacket ladder"
).split()

_CAPTIONS = (
    "anxious concern",
    "wistful flirtation, playful vulnerability",
    "dry sarcasm, deadpan delivery",
    "bubbly excitement",
    "weary exasperation",
    "warm reassurance",
    "nervous rambling energy",
    "smug satisfaction",
)

_SCENE_SETTINGS = (
    "the coffee house",
    "the apartment kitchen",
    "the office",
    "a crowded hallway",
    "the balcony at night",
    "a rainy street corner",
)

_LCG_A = 6364136223846793005
_LCG_C = 1442695040888963407
_U64 = 1 << 64


@dataclass(frozen=True)
class EpisodeSpec:
    id: str
    scene_sizes: tuple[int, ...]


def _sentence(rng: random.Random, n_words: int | None = None) -> str:
    n = n_words or rng.randint(4, 8)
    words = [rng.choice(_LEXICON) for _ in range(n)]
    return " ".join(words).capitalize() + rng.choice([".", "!", "?"])


def default_caption(utterance_id: str) -> str:
    return _CAPTIONS[fnv1a64(utterance_id.encode("utf-8")) % len(_CAPTIONS)]


def tone_clip(utterance_id: str, n_samples: int = 96, sample_rate_hz: int = 16000) -> AudioClip:
    """Short deterministic clip derived from the utterance id."""
    state = fnv1a64(utterance_id.encode("utf-8"))
    samples = []
    for _ in range(n_samples):
        state = (_LCG_A * state + _LCG_C) % _U64
        samples.append(int((state >> 16) % 12000) - 6000)
    return AudioClip(sample_rate_hz=sample_rate_hz, samples=tuple(samples))


def synth_corpus(
    specs: list[EpisodeSpec],
    roles: tuple[str, ...] = DEFAULT_ROLES,
    seed: int = 7,
    include_others: bool = True,
) -> Corpus:
    rng = random.Random(seed)
    speaker_pool = list(roles) + (["OTHERS"] if include_others else [])

    episodes = []
    for spec in specs:
        utterances = []
        scenes = []
        cursor = 0
        for j, size in enumerate(spec.scene_sizes):
            for k in range(size):
                idx = cursor + k
                uid = f"{spec.id}_u{idx:04d}"
                start = round(idx * 2.0 + rng.random(), 3)
                duration = round(0.6 + 0.25 * rng.randint(2, 8), 3)
                utterances.append(
                    Utterance(
                        id=uid,
                        episode_id=spec.id,
                        role=rng.choice(speaker_pool),
                        text=_sentence(rng),
                        audio=f"audio/{uid}.wav",
                        start_s=start,
                        end_s=round(start + duration, 3),
                    )
                )
            scenes.append(
                Scene(
                    id=f"{spec.id}_s{j:02d}",
                    episode_id=spec.id,
                    start_index=cursor,
                    end_index=cursor + size - 1,
                    description=f"Late afternoon at {rng.choice(_SCENE_SETTINGS)}; "
                    f"the group trades stories and someone overreacts.",
                )
            )
            cursor += size
        episodes.append(Episode(id=spec.id, utterances=utterances, scenes=scenes))

    profiles = [
        RoleProfile(
            name=name,
            profile=f"{name} is a regular at the coffee house; "
            f"quick-witted, loyal to the group, and prone to {rng.choice(_CAPTIONS)}.",
        )
        for name in roles
    ]
    return Corpus(episodes=episodes, roles=profiles)


def write_corpus_assets(corpus: Corpus, root: str | Path, manifest_name: str = "manifest.json") -> Path:
    """Write manifest, audio clips, and mock sidecar files under root."""
    root = Path(root)
    (root / "audio").mkdir(parents=True, exist_ok=True)
    for ep in corpus.episodes:
        for u in ep.utterances:
            wav_path = root / u.audio
            write_wav(tone_clip(u.id), wav_path)
            Path(str(wav_path) + ".txt").write_text(u.text, encoding="utf-8")
            Path(str(wav_path) + ".emotion.txt").write_text(default_caption(u.id), encoding="utf-8")
    manifest_path = root / manifest_name
    save_manifest(corpus, manifest_path)
    corpus.base_dir = root
    return manifest_path


def demo_specs(n_episodes: int = 3, scenes_per_episode: int = 2, scene_size: int = 5) -> list[EpisodeSpec]:
    return [
        EpisodeSpec(id=f"SE01_{i + 1:02d}", scene_sizes=tuple([scene_size] * scenes_per_episode))
        for i in range(n_episodes)
    ]


@dataclass
class ScriptFixture:
    script_text: str
    utterances: list[Utterance]
    true_spans: list[tuple[int, int]]
    dropped_lines: list[int]


def synth_script_fixture(
    n_lines: int = 30,
    n_scenes: int = 4,
    noise_rate: float = 0.1,
    n_dropped_lines: int = 2,
    seed: int = 11,
    roles: tuple[str, ...] = DEFAULT_ROLES,
) -> ScriptFixture:
    """Script + recognized-utterance pair with known scene boundaries.

    Utterance texts carry word-level noise relative to the script; a few
    non-scene-initial script lines are dropped to simulate crawl gaps.  The
    generator keeps the true spans so alignment output can be checked
    against them exactly.
    """
    rng = random.Random(seed)
    sizes = [n_lines // n_scenes] * n_scenes
    for k in range(n_lines - sum(sizes)):
        sizes[k % n_scenes] += 1

    base_lines = []
    scene_starts = []
    cursor = 0
    for size in sizes:
        scene_starts.append(cursor)
        for _ in range(size):
            base_lines.append((rng.choice(roles), _sentence(rng, rng.randint(5, 8))))
        cursor += size

    droppable = [i for i in range(n_lines) if i not in scene_starts]
    dropped = sorted(rng.sample(droppable, n_dropped_lines))

    utterances = []
    for i, (speaker, text) in enumerate(base_lines):
        words = text.split()
        noisy = [rng.choice(_LEXICON) if rng.random() < noise_rate else w for w in words]
        uid = f"REC_u{i:04d}"
        utterances.append(
            Utterance(
                id=uid,
                episode_id="REC",
                role=speaker,
                text=" ".join(noisy),
                audio=f"audio/{uid}.wav",
                start_s=float(i),
                end_s=float(i) + 0.9,
            )
        )

    lines = []
    boundary = set(scene_starts)
    scene_no = 0
    for i, (speaker, text) in enumerate(base_lines):
        if i in boundary:
            scene_no += 1
            lines.append(f"[SCENE] Scene {scene_no}")
        if i in dropped:
            continue
        lines.append(f"{speaker}: {text}")

    true_spans = [
        (start, (scene_starts[k + 1] - 1) if k + 1 < n_scenes else n_lines - 1)
        for k, start in enumerate(scene_starts)
    ]
    return ScriptFixture(
        script_text="\n".join(lines) + "\n",
        utterances=utterances,
        true_spans=true_spans,
        dropped_lines=dropped,
    )
