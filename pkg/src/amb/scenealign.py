"""Align crawled scripts to recognized utterances and compute corpus statistics.

The aligner is a monotone dynamic program over (script line, utterance)
pairs: matched pairs earn their token-F1 similarity, every skipped item pays
a flat gap penalty.  Scores are kept as exact fractions so that optimality
ties are recognized exactly and the declared tie-break (lexicographically
smallest pair sequence) is reproducible against a brute-force oracle.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass, field
from fractions import Fraction

from .corpus import OTHERS_ROLE, Corpus, Utterance
from .errors import EmptyInput, ParseError

GAP_PENALTY = Fraction(2, 5)

SCENE_HEADER_PREFIX = "[SCENE]"


@dataclass(frozen=True)
class SceneHeader:
    label: str


@dataclass(frozen=True)
class ScriptLine:
    speaker: str | None
    text: str


@dataclass
class ScriptDocument:
    items: list

    def __post_init__(self):
        if not self.items or not isinstance(self.items[0], SceneHeader):
            raise ParseError("script must start with a scene header")
        # Scene ordinal for each ScriptLine, in line order.
        ordinals = []
        scene = -1
        for it in self.items:
            if isinstance(it, SceneHeader):
                scene += 1
            else:
                ordinals.append(scene)
        self._line_scenes = ordinals
        self._n_scenes = scene + 1

    def lines(self) -> list[ScriptLine]:
        return [it for it in self.items if isinstance(it, ScriptLine)]

    def headers(self) -> list[SceneHeader]:
        return [it for it in self.items if isinstance(it, SceneHeader)]

    @property
    def n_scenes(self) -> int:
        return self._n_scenes

    def scene_of_line(self, line_index: int) -> int:
        return self._line_scenes[line_index]


def parse_script(text: str) -> ScriptDocument:
    """Plain-text script: "[SCENE] label" headers, "SPEAKER: text" or bare lines."""
    items = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith(SCENE_HEADER_PREFIX):
            items.append(SceneHeader(label=line[len(SCENE_HEADER_PREFIX):].strip()))
            continue
        head, sep, rest = line.partition(":")
        if sep and head.strip():
            items.append(ScriptLine(speaker=head.strip(), text=rest.strip()))
        else:
            items.append(ScriptLine(speaker=None, text=line))
    return ScriptDocument(items=items)


def normalize_text(s: str) -> list[str]:
    """Lowercase, compatibility-decompose, split into alphanumeric runs."""
    s = unicodedata.normalize("NFKD", s.lower())
    tokens = []
    current = []
    for ch in s:
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def _multiset_overlap(a: list[str], b: list[str]) -> int:
    counts: dict[str, int] = {}
    for t in a:
        counts[t] = counts.get(t, 0) + 1
    overlap = 0
    for t in b:
        c = counts.get(t, 0)
        if c:
            counts[t] = c - 1
            overlap += 1
    return overlap


def _similarity_exact(a: list[str], b: list[str]) -> Fraction:
    if not a and not b:
        return Fraction(1)
    if not a or not b:
        return Fraction(0)
    return Fraction(2 * _multiset_overlap(a, b), len(a) + len(b))


def line_similarity(a: list[str], b: list[str]) -> float:
    """Token-multiset F1 between two token lists."""
    return float(_similarity_exact(a, b))


@dataclass
class AlignmentMap:
    pairs: list[tuple[int, int]]
    skipped_lines: list[int]
    skipped_utterances: list[int]
    total_score: float

    @property
    def n_lines(self) -> int:
        return len(self.skipped_lines) + len(self.pairs)

    @property
    def n_utterances(self) -> int:
        return len(self.skipped_utterances) + len(self.pairs)


def align_script(
    script: ScriptDocument,
    utterances: list[Utterance],
    gap_penalty: Fraction = GAP_PENALTY,
) -> AlignmentMap:
    """Globally optimal monotone alignment of script lines to utterances.

    Among score-optimal alignments, returns the one whose pair sequence is
    lexicographically smallest (earliest script line, then earliest
    utterance).  Distinct optimal alignments can never be prefix-related
    because adding a match always beats two skips, so the order is total.
    """
    lines = script.lines()
    if not lines or not utterances:
        raise EmptyInput("align_script needs at least one script line and one utterance")

    a_tokens = [normalize_text(ln.text) for ln in lines]
    b_tokens = [normalize_text(u.text) for u in utterances]
    n, m = len(a_tokens), len(b_tokens)
    sim = [[_similarity_exact(a_tokens[i], b_tokens[j]) for j in range(m)] for i in range(n)]

    # F[i][j]: best score for lines[i:] vs utterances[j:].
    F = [[Fraction(0)] * (m + 1) for _ in range(n + 1)]
    for j in range(m - 1, -1, -1):
        F[n][j] = F[n][j + 1] - gap_penalty
    for i in range(n - 1, -1, -1):
        F[i][m] = F[i + 1][m] - gap_penalty
        for j in range(m - 1, -1, -1):
            F[i][j] = max(
                sim[i][j] + F[i + 1][j + 1],
                F[i + 1][j] - gap_penalty,
                F[i][j + 1] - gap_penalty,
            )

    # FP[i][j]: first pair of the lexicographically smallest optimal
    # continuation from (i, j); None when no pair is ever matched.
    FP: list[list[tuple[int, int] | None]] = [[None] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            best = F[i][j]
            if sim[i][j] + F[i + 1][j + 1] == best:
                FP[i][j] = (i, j)
                continue
            cands = []
            if F[i + 1][j] - gap_penalty == best and FP[i + 1][j] is not None:
                cands.append(FP[i + 1][j])
            if F[i][j + 1] - gap_penalty == best and FP[i][j + 1] is not None:
                cands.append(FP[i][j + 1])
            FP[i][j] = min(cands) if cands else None

    pairs: list[tuple[int, int]] = []
    i = j = 0
    while i < n and j < m:
        if FP[i][j] == (i, j):
            pairs.append((i, j))
            i += 1
            j += 1
            continue
        best = F[i][j]
        line_ok = F[i + 1][j] - gap_penalty == best
        utt_ok = F[i][j + 1] - gap_penalty == best
        if line_ok and utt_ok:
            fp_line, fp_utt = FP[i + 1][j], FP[i][j + 1]
            if fp_utt is not None and (fp_line is None or fp_utt < fp_line):
                j += 1
            else:
                i += 1
        elif line_ok:
            i += 1
        else:
            j += 1

    matched_lines = {p[0] for p in pairs}
    matched_utts = {p[1] for p in pairs}
    return AlignmentMap(
        pairs=pairs,
        skipped_lines=[k for k in range(n) if k not in matched_lines],
        skipped_utterances=[k for k in range(m) if k not in matched_utts],
        total_score=float(F[0][0]),
    )


@dataclass
class ProjectedBoundaries:
    spans: list[tuple[int, int]]
    scene_ordinals: list[int]
    warnings: list[str] = field(default_factory=list)


def project_boundaries(alignment: AlignmentMap, script: ScriptDocument) -> ProjectedBoundaries:
    """Project scene headers onto utterance index spans.

    Each scene starts at the utterance matched to its first matched line;
    scenes with no matched line are merged into their predecessor and
    reported.  Spans are forced to a contiguous partition of all utterances.
    """
    if not alignment.pairs:
        raise EmptyInput("alignment has no matched pairs")
    n_utts = alignment.n_utterances

    anchors: list[int | None] = [None] * script.n_scenes
    for line_idx, utt_idx in alignment.pairs:
        ordinal = script.scene_of_line(line_idx)
        if anchors[ordinal] is None:
            anchors[ordinal] = utt_idx

    warnings: list[str] = []
    starts: list[tuple[int, int]] = []
    for ordinal in range(script.n_scenes):
        anchor = anchors[ordinal]
        if anchor is None:
            target = "next scene" if not starts else "previous scene"
            warnings.append(f"UnanchoredScene: scene {ordinal} has no matched line; merged into {target}")
            continue
        if not starts:
            starts.append((ordinal, 0))
            continue
        if anchor <= starts[-1][1]:
            warnings.append(f"UnanchoredScene: scene {ordinal} anchors at {anchor}, not after previous start; merged into previous scene")
            continue
        starts.append((ordinal, anchor))

    spans = []
    ordinals = []
    for k, (ordinal, start) in enumerate(starts):
        end = starts[k + 1][1] - 1 if k + 1 < len(starts) else n_utts - 1
        spans.append((start, end))
        ordinals.append(ordinal)
    return ProjectedBoundaries(spans=spans, scene_ordinals=ordinals, warnings=warnings)


@dataclass(frozen=True)
class RoleCell:
    count: int
    duration_s: float


@dataclass
class EpisodeUtteranceRow:
    episode_id: str
    cells: dict[str, RoleCell]
    total: RoleCell


@dataclass
class EpisodeSceneRow:
    episode_id: str
    scene_count: int
    avg_utterances: float
    avg_roles: float


@dataclass
class StatsTables:
    role_order: list[str]
    utterance_rows: list[EpisodeUtteranceRow]
    utterance_all: EpisodeUtteranceRow
    scene_rows: list[EpisodeSceneRow]
    scene_all: EpisodeSceneRow


def compute_stats(corpus: Corpus) -> StatsTables:
    """Per-episode/per-role utterance counts and durations, scene metrics, grand totals."""
    role_order = [r.name for r in corpus.roles]
    if OTHERS_ROLE not in role_order:
        role_order = role_order + [OTHERS_ROLE]

    utterance_rows = []
    totals = {role: [0, 0.0] for role in role_order}
    grand_total = [0, 0.0]

    scene_rows = []
    all_scene_count = 0
    all_covered = 0
    all_role_counts: list[int] = []

    for ep in corpus.episodes:
        cells = {}
        ep_total = [0, 0.0]
        for role in role_order:
            utts = [u for u in ep.utterances if u.role == role]
            dur = sum(u.duration_s for u in utts)
            cells[role] = RoleCell(count=len(utts), duration_s=dur)
            totals[role][0] += len(utts)
            totals[role][1] += dur
            ep_total[0] += len(utts)
            ep_total[1] += dur
        grand_total[0] += ep_total[0]
        grand_total[1] += ep_total[1]
        utterance_rows.append(
            EpisodeUtteranceRow(episode_id=ep.id, cells=cells, total=RoleCell(ep_total[0], ep_total[1]))
        )

        covered = sum(s.end_index - s.start_index + 1 for s in ep.scenes)
        role_counts = [len({u.role for u in ep.utterances[s.start_index : s.end_index + 1]}) for s in ep.scenes]
        n_scenes = len(ep.scenes)
        scene_rows.append(
            EpisodeSceneRow(
                episode_id=ep.id,
                scene_count=n_scenes,
                avg_utterances=covered / n_scenes if n_scenes else 0.0,
                avg_roles=sum(role_counts) / n_scenes if n_scenes else 0.0,
            )
        )
        all_scene_count += n_scenes
        all_covered += covered
        all_role_counts.extend(role_counts)

    utterance_all = EpisodeUtteranceRow(
        episode_id="ALL",
        cells={role: RoleCell(totals[role][0], totals[role][1]) for role in role_order},
        total=RoleCell(grand_total[0], grand_total[1]),
    )
    scene_all = EpisodeSceneRow(
        episode_id="ALL",
        scene_count=all_scene_count,
        avg_utterances=all_covered / all_scene_count if all_scene_count else 0.0,
        avg_roles=sum(all_role_counts) / all_scene_count if all_scene_count else 0.0,
    )
    return StatsTables(
        role_order=role_order,
        utterance_rows=utterance_rows,
        utterance_all=utterance_all,
        scene_rows=scene_rows,
        scene_all=scene_all,
    )


def format_duration(seconds: float) -> str:
    """H:MM:SS with seconds rounded half-up, hours unpadded."""
    total = int(math.floor(seconds + 0.5))
    hours, rem = divmod(total, 3600)
    minutes, secs = divmod(rem, 60)
    return f"{hours}:{minutes:02d}:{secs:02d}"


def parse_duration(text: str) -> int:
    parts = text.split(":")
    if len(parts) != 3:
        raise ParseError(f"bad duration: {text!r}")
    hours, minutes, secs = (int(p) for p in parts)
    return hours * 3600 + minutes * 60 + secs


def _utterance_row_values(row: EpisodeUtteranceRow, role_order: list[str]) -> list[str]:
    values = [row.episode_id]
    for role in role_order:
        cell = row.cells[role]
        values.extend([str(cell.count), format_duration(cell.duration_s)])
    values.extend([str(row.total.count), format_duration(row.total.duration_s)])
    return values


def _scene_row_values(row: EpisodeSceneRow) -> list[str]:
    return [row.episode_id, str(row.scene_count), f"{row.avg_utterances:.2f}", f"{row.avg_roles:.2f}"]


def stats_to_csv(tables: StatsTables) -> tuple[str, str]:
    """(utterance-level CSV, scene-level CSV), columns in report order."""
    utt_header = ["episode"]
    for role in tables.role_order:
        utt_header.extend([f"{role}_num", f"{role}_duration"])
    utt_header.extend(["TOTAL_num", "TOTAL_duration"])
    utt_lines = [",".join(utt_header)]
    for row in tables.utterance_rows + [tables.utterance_all]:
        utt_lines.append(",".join(_utterance_row_values(row, tables.role_order)))

    scene_lines = [",".join(["episode", "scene_num", "avg_utterances_per_scene", "avg_roles_per_scene"])]
    for row in tables.scene_rows + [tables.scene_all]:
        scene_lines.append(",".join(_scene_row_values(row)))
    return "\n".join(utt_lines) + "\n", "\n".join(scene_lines) + "\n"


def _aligned(rows: list[list[str]]) -> str:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def stats_to_text(tables: StatsTables) -> tuple[str, str]:
    """(utterance-level table, scene-level table) as aligned-column text."""
    utt_header = ["Episode"]
    for role in tables.role_order:
        utt_header.extend([f"{role} num", f"{role} duration"])
    utt_header.extend(["TOTAL num", "TOTAL duration"])
    utt_rows = [utt_header] + [
        _utterance_row_values(row, tables.role_order) for row in tables.utterance_rows + [tables.utterance_all]
    ]
    scene_rows = [["Episode", "Scene Num", "Avg Utterances per Scene", "Avg Roles per Scene"]] + [
        _scene_row_values(row) for row in tables.scene_rows + [tables.scene_all]
    ]
    return _aligned(utt_rows), _aligned(scene_rows)
