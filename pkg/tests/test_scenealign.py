from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amb import synth
from amb.corpus import Corpus, Episode, RoleProfile, Scene, Utterance
from amb.errors import EmptyInput, ParseError
from amb.scenealign import (
    AlignmentMap,
    SceneHeader,
    ScriptDocument,
    ScriptLine,
    align_script,
    compute_stats,
    format_duration,
    line_similarity,
    normalize_text,
    parse_duration,
    parse_script,
    project_boundaries,
    stats_to_csv,
)

GAP = Fraction(2, 5)


# ---------------------------------------------------------------- oracle ---
# Independent scoring and exhaustive search over all monotone alignments,
# used to pin down align_script's optimum and tie-break.


def oracle_similarity(a: list[str], b: list[str]) -> Fraction:
    if not a and not b:
        return Fraction(1)
    if not a or not b:
        return Fraction(0)
    remaining = list(b)
    overlap = 0
    for token in a:
        if token in remaining:
            remaining.remove(token)
            overlap += 1
    return Fraction(2 * overlap, len(a) + len(b))


def oracle_best_alignment(a_texts: list[str], b_texts: list[str]):
    a_tokens = [normalize_text(t) for t in a_texts]
    b_tokens = [normalize_text(t) for t in b_texts]
    n, m = len(a_tokens), len(b_tokens)
    best_score = None
    best_pairs = None
    for k in range(min(n, m) + 1):
        for lines in combinations(range(n), k):
            for utts in combinations(range(m), k):
                pairs = list(zip(lines, utts))
                score = sum((oracle_similarity(a_tokens[i], b_tokens[j]) for i, j in pairs), Fraction(0))
                score -= GAP * ((n - k) + (m - k))
                if best_score is None or score > best_score or (score == best_score and pairs < best_pairs):
                    best_score = score
                    best_pairs = pairs
    return best_score, best_pairs


def make_utterances(texts: list[str]) -> list[Utterance]:
    return [
        Utterance(id=f"u{i:03d}", episode_id="E", role="Phoebe", text=t, audio=f"{i}.wav", start_s=i, end_s=i + 0.5)
        for i, t in enumerate(texts)
    ]


def make_script(texts: list[str], headers_at: dict[int, str] | None = None) -> ScriptDocument:
    headers_at = headers_at or {0: "one"}
    items = []
    for i, t in enumerate(texts):
        if i in headers_at:
            items.append(SceneHeader(label=headers_at[i]))
        items.append(ScriptLine(speaker=None, text=t))
    return ScriptDocument(items=items)


# ------------------------------------------------------------- normalize ---


def test_normalize_punctuation():
    assert normalize_text("Hey!! How-you doin'?") == ["hey", "how", "you", "doin"]


def test_normalize_empty():
    assert normalize_text("") == []


def test_normalize_contractions():
    assert normalize_text("So, um, do you think he's doing any better") == [
        "so", "um", "do", "you", "think", "he", "s", "doing", "any", "better",
    ]


def test_normalize_unicode_compatibility():
    assert normalize_text("Café Nº3") == ["cafe", "no3"]


# ------------------------------------------------------------ similarity ---


def test_similarity_identical():
    toks = ["a", "b", "c", "d", "e"]
    assert line_similarity(toks, toks) == 1.0


def test_similarity_disjoint():
    assert line_similarity(["a", "b"], ["c", "d"]) == 0.0


def test_similarity_partial():
    assert line_similarity(["hey", "how", "you"], ["hey", "you"]) == pytest.approx(0.8)


def test_similarity_empties():
    assert line_similarity([], []) == 1.0
    assert line_similarity(["a"], []) == 0.0


@given(
    a=st.lists(st.sampled_from("abcdef"), max_size=8),
    b=st.lists(st.sampled_from("abcdef"), max_size=8),
)
def test_similarity_bounds_and_symmetry(a, b):
    s = line_similarity(a, b)
    assert 0.0 <= s <= 1.0
    assert s == line_similarity(b, a)


# ----------------------------------------------------------------- align ---


def test_align_identity_mapping():
    texts = ["coffee on the sofa", "where is my umbrella", "the monkey took it", "that is not funny"]
    alignment = align_script(make_script(texts), make_utterances(texts))
    assert alignment.pairs == [(0, 0), (1, 1), (2, 2), (3, 3)]
    assert alignment.skipped_lines == [] and alignment.skipped_utterances == []
    assert alignment.total_score == pytest.approx(4.0)


def test_align_word_dropped_matches_oracle():
    script_texts = ["coffee on the sofa", "where is my umbrella", "the monkey took it", "that is not funny"]
    utt_texts = ["coffee on the sofa", "where is umbrella", "the monkey took it", "that is not funny"]
    alignment = align_script(make_script(script_texts), make_utterances(utt_texts))
    score, pairs = oracle_best_alignment(script_texts, utt_texts)
    assert alignment.pairs == pairs == [(0, 0), (1, 1), (2, 2), (3, 3)]
    assert alignment.total_score == pytest.approx(float(score))


def test_align_extra_inserted_line_is_skipped():
    utt_texts = ["coffee on the sofa", "where is my umbrella", "that is not funny"]
    script_texts = utt_texts[:1] + ["a totally unrelated remark about dinosaurs"] + utt_texts[1:]
    alignment = align_script(make_script(script_texts), make_utterances(utt_texts))
    score, pairs = oracle_best_alignment(script_texts, utt_texts)
    assert alignment.pairs == pairs == [(0, 0), (2, 1), (3, 2)]
    assert alignment.skipped_lines == [1]
    assert alignment.total_score == pytest.approx(float(score))


def test_align_empty_inputs():
    with pytest.raises(EmptyInput):
        align_script(make_script(["a"]), [])
    with pytest.raises(EmptyInput):
        align_script(ScriptDocument(items=[SceneHeader(label="x")]), make_utterances(["a"]))


@settings(max_examples=60, deadline=None)
@given(
    a=st.lists(st.lists(st.sampled_from("abcd"), max_size=3).map(" ".join), min_size=1, max_size=6),
    b=st.lists(st.lists(st.sampled_from("abcd"), max_size=3).map(" ".join), min_size=1, max_size=6),
)
def test_align_equals_brute_force(a, b):
    alignment = align_script(make_script(a), make_utterances(b))
    score, pairs = oracle_best_alignment(a, b)
    assert alignment.pairs == pairs
    assert alignment.total_score == pytest.approx(float(score))


# ------------------------------------------------------------ boundaries ---


def test_project_two_even_scenes():
    texts = [f"line number {i} about {w}" for i, w in enumerate("sofa rain lamp train piano letter".split())]
    script = make_script(texts, headers_at={0: "one", 3: "two"})
    alignment = align_script(script, make_utterances(texts))
    projected = project_boundaries(alignment, script)
    assert projected.spans == [(0, 2), (3, 5)]
    assert projected.warnings == []


def test_project_unanchored_scene_merges_backward():
    alignment = AlignmentMap(pairs=[(0, 0), (2, 3)], skipped_lines=[1], skipped_utterances=[1, 2], total_score=0.0)
    script = ScriptDocument(
        items=[
            SceneHeader(label="one"),
            ScriptLine(None, "matched"),
            SceneHeader(label="two"),
            ScriptLine(None, "dropped"),
            SceneHeader(label="three"),
            ScriptLine(None, "matched again"),
        ]
    )
    projected = project_boundaries(alignment, script)
    assert projected.spans == [(0, 2), (3, 3)]
    assert projected.scene_ordinals == [0, 2]
    assert len(projected.warnings) == 1 and "UnanchoredScene" in projected.warnings[0]


def test_project_noisy_fixture_recovers_truth():
    fixture = synth.synth_script_fixture(n_lines=30, n_scenes=4, noise_rate=0.1, n_dropped_lines=2, seed=11)
    script = parse_script(fixture.script_text)
    alignment = align_script(script, fixture.utterances)
    projected = project_boundaries(alignment, script)
    assert projected.spans == fixture.true_spans
    assert projected.warnings == []


def test_project_spans_partition_all_utterances():
    for seed in (1, 2, 3, 4, 5):
        fixture = synth.synth_script_fixture(n_lines=24, n_scenes=3, noise_rate=0.2, n_dropped_lines=3, seed=seed)
        script = parse_script(fixture.script_text)
        projected = project_boundaries(align_script(script, fixture.utterances), script)
        covered = [i for s, e in projected.spans for i in range(s, e + 1)]
        assert covered == list(range(len(fixture.utterances)))


def test_parse_script_requires_leading_header():
    with pytest.raises(ParseError):
        parse_script("PHOEBE: hi there\n[SCENE] late\n")


def test_parse_script_speakers_and_bare_lines():
    doc = parse_script("[SCENE] opening\nPHOEBE: hello there\njust narration\n")
    lines = doc.lines()
    assert lines[0] == ScriptLine(speaker="PHOEBE", text="hello there")
    assert lines[1] == ScriptLine(speaker=None, text="just narration")
    assert doc.n_scenes == 1


# ----------------------------------------------------------------- stats ---


def _two_scene_corpus() -> Corpus:
    texts = ["t" + str(i) for i in range(8)]
    roles = ["A", "B", "A", "A", "A", "A", "A", "A"]
    utts = [
        Utterance(id=f"u{i}", episode_id="E", role=roles[i], text=texts[i], audio=f"{i}.wav", start_s=2.0 * i, end_s=2.0 * i + 1.0)
        for i in range(8)
    ]
    scenes = [
        Scene(id="s0", episode_id="E", start_index=0, end_index=2, description="x"),
        Scene(id="s1", episode_id="E", start_index=3, end_index=7, description="y"),
    ]
    return Corpus(
        episodes=[Episode(id="E", utterances=utts, scenes=scenes)],
        roles=[RoleProfile("A", "a"), RoleProfile("B", "b")],
    )


def test_stats_hand_example():
    tables = compute_stats(_two_scene_corpus())
    row = tables.scene_rows[0]
    assert row.scene_count == 2
    assert f"{row.avg_utterances:.2f}" == "4.00"
    assert f"{row.avg_roles:.2f}" == "1.50"
    assert tables.utterance_rows[0].cells["A"].count == 7
    assert tables.utterance_rows[0].cells["B"].count == 1
    assert tables.utterance_all.total.count == 8


def test_stats_table5_shaped_fixture(stats_corpus):
    tables = compute_stats(stats_corpus)
    first = tables.scene_rows[0]
    assert first.episode_id == "SE01_01"
    assert first.scene_count == 14
    assert f"{first.avg_utterances:.2f}" == "17.29"
    assert tables.scene_all.scene_count == 313


def test_stats_all_row_equals_column_sums(stats_corpus):
    tables = compute_stats(stats_corpus)
    for role in tables.role_order:
        assert tables.utterance_all.cells[role].count == sum(r.cells[role].count for r in tables.utterance_rows)
        assert tables.utterance_all.cells[role].duration_s == pytest.approx(
            sum(r.cells[role].duration_s for r in tables.utterance_rows), abs=1e-9
        )
    assert tables.utterance_all.total.count == sum(r.total.count for r in tables.utterance_rows)
    assert tables.scene_all.scene_count == sum(r.scene_count for r in tables.scene_rows)


def test_stats_csv_layout(stats_corpus):
    utt_csv, scene_csv = stats_to_csv(compute_stats(stats_corpus))
    header = utt_csv.splitlines()[0].split(",")
    assert header[0] == "episode"
    assert header[1:3] == ["Rachel_num", "Rachel_duration"]
    assert header[-2:] == ["TOTAL_num", "TOTAL_duration"]
    scene_lines = scene_csv.splitlines()
    assert scene_lines[0] == "episode,scene_num,avg_utterances_per_scene,avg_roles_per_scene"
    assert scene_lines[1].startswith("SE01_01,14,17.29,")
    assert scene_lines[-1].startswith("ALL,313,")


# -------------------------------------------------------------- duration ---


def test_format_duration_cells():
    assert format_duration(853) == "0:14:13"
    assert format_duration(0) == "0:00:00"
    assert format_duration(18912) == "5:15:12"


def test_format_duration_rounds_half_up():
    assert format_duration(59.5) == "0:01:00"
    assert format_duration(59.49) == "0:00:59"


@given(st.floats(min_value=0, max_value=360000))
def test_format_duration_round_trips(seconds):
    assert abs(parse_duration(format_duration(seconds)) - seconds) <= 0.5
