from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amb.errors import EmptyInput, IncompleteGrid, ParseError, RoleSetMismatch
from amb.evaluate import (
    AggCell,
    ImprovementRecord,
    MosRecord,
    ReportRow,
    ablation_delta,
    aggregate_improvement,
    aggregate_mos,
    format_cell,
    gate_score,
    read_improvement_csv,
    read_mos_csv,
    render_report,
    summarize_means,
)

SIX_ROLES = ("Phoebe", "Joey", "Chandler", "Rachel", "Ross", "Monica")


def mos(role, score, evaluator="e1", voice=False, content=False):
    return MosRecord(
        item_id=f"{role}-{score}-{evaluator}",
        role=role,
        evaluator_id=evaluator,
        raw_score=score,
        voice_mismatch=voice,
        content_mismatch=content,
    )


# ------------------------------------------------------------------ gate ---


def test_gate_voice_mismatch_forces_floor():
    assert gate_score(mos("Phoebe", 4, voice=True)) == 1


def test_gate_clean_record_passes_through():
    assert gate_score(mos("Phoebe", 5)) == 5


def test_gate_content_mismatch_on_floor_score():
    assert gate_score(mos("Phoebe", 1, content=True)) == 1


# ------------------------------------------------------------- aggregate ---


def test_aggregate_all_gated_to_one():
    records = [mos(role, s, voice=True) for role in SIX_ROLES for s in (2, 3, 4)]
    cells, average = aggregate_mos(records)
    for role in SIX_ROLES:
        assert format_cell(cells[role]) == "1.00 ± 0.00"
    assert format_cell(average) == "1.00 ± 0.00"


def test_average_path_from_per_role_means():
    means = {"Phoebe": 4.00, "Joey": 3.47, "Chandler": 3.20, "Rachel": 3.40, "Ross": 3.70, "Monica": 3.60}
    cell = summarize_means(means)
    assert cell.mean == pytest.approx(3.56, abs=0.005)
    assert cell.std == pytest.approx(0.27, abs=0.005)


def test_single_role_sample_std():
    cells, average = aggregate_mos([mos("Ross", 3), mos("Ross", 4), mos("Ross", 5)])
    assert cells["Ross"].mean == pytest.approx(4.0)
    assert cells["Ross"].std == pytest.approx(1.0)
    assert average.mean == pytest.approx(4.0)
    assert average.std == 0.0  # single role: no spread across role means


def test_single_record_std_is_zero():
    cells, _ = aggregate_mos([mos("Ross", 4)])
    assert cells["Ross"].n == 1
    assert cells["Ross"].std == 0.0


def test_aggregate_empty():
    with pytest.raises(EmptyInput):
        aggregate_mos([])


def improvement(role, ratings):
    return [
        ImprovementRecord(role=role, system_label="sys", evaluator_id=f"e{k}", rating=r)
        for k, r in enumerate(ratings)
    ]


def test_improvement_cells_reconstruct():
    cells, _ = aggregate_improvement(improvement("Ross", [1, 1, 1, 0.5]))
    assert format_cell(cells["Ross"]) == "0.88 ± 0.25"
    cells, _ = aggregate_improvement(improvement("Joey", [1, 1, 0.5, 0.5]))
    assert format_cell(cells["Joey"]) == "0.75 ± 0.29"
    cells, _ = aggregate_improvement(improvement("Chandler", [1, 1, 1, 0]))
    assert format_cell(cells["Chandler"]) == "0.75 ± 0.50"


def test_improvement_all_mean():
    means = {"Phoebe": 0.50, "Joey": 0.88, "Chandler": 1.00, "Rachel": 1.00, "Ross": 1.00, "Monica": 1.00}
    assert summarize_means(means).mean == pytest.approx(0.90, abs=0.005)


# ----------------------------------------------------------------- delta ---


def test_delta_identical_means():
    means = {r: 3.5 for r in SIX_ROLES}
    assert format_cell(ablation_delta(means, dict(means))) == "0.00 ± 0.00"


def test_delta_uniform_drop():
    full = {r: 3.5 for r in SIX_ROLES}
    ablated = {r: 3.0 for r in SIX_ROLES}
    assert format_cell(ablation_delta(full, ablated)) == "-0.50 ± 0.00"


def test_delta_hand_computed_spread():
    full = {r: 3.0 for r in SIX_ROLES}
    drops = dict(zip(SIX_ROLES, (-0.2, -0.4, -0.3, -0.5, -0.1, -0.7)))
    ablated = {r: 3.0 + drops[r] for r in SIX_ROLES}
    assert format_cell(ablation_delta(full, ablated)) == "-0.37 ± 0.22"


def test_delta_role_set_mismatch():
    with pytest.raises(RoleSetMismatch):
        ablation_delta({"Ross": 1.0}, {"Joey": 1.0})


# ---------------------------------------------------------------- render ---


def test_format_cell_rounding():
    # Authentic summary over the six printed means lands just under the
    # 0.275 tie, so half-even display gives 0.27.
    means = {"Phoebe": 4.00, "Joey": 3.47, "Chandler": 3.20, "Rachel": 3.40, "Ross": 3.70, "Monica": 3.60}
    assert format_cell(summarize_means(means)) == "3.56 ± 0.27"
    assert format_cell(AggCell(mean=1, std=0, n=6)) == "1.00 ± 0.00"
    assert format_cell(AggCell(mean=0.875, std=0.25, n=4)) == "0.88 ± 0.25"


def _grid_row(label="sys"):
    cells = {role: AggCell(mean=3.0, std=0.5, n=10) for role in SIX_ROLES}
    return ReportRow(label=label, cells=cells, summary=AggCell(mean=3.0, std=0.0, n=6))


def test_render_mos_header_order():
    text, csv_text = render_report([_grid_row()], layout="mos")
    assert csv_text.splitlines()[0] == "System,Phoebe,Joey,Chandler,Rachel,Ross,Monica,Average"
    assert text.splitlines()[0].split() == ["System", *SIX_ROLES, "Average"]


def test_render_improvement_header():
    _, csv_text = render_report([_grid_row()], layout="improvement")
    assert csv_text.splitlines()[0].endswith(",ALL")


def test_render_ablation_layout():
    row = ReportRow(label="no_ear", cells={}, summary=AggCell(mean=-0.32, std=0.23, n=6))
    text, csv_text = render_report([row], layout="ablation")
    assert "no_ear" in text and "-0.32 ± 0.23" in text
    assert csv_text.splitlines()[0] == "Config,Delta"


def test_render_bold_best_marker():
    low = _grid_row("low")
    high = ReportRow(
        label="high",
        cells={role: AggCell(mean=4.0, std=0.1, n=10) for role in SIX_ROLES},
        summary=AggCell(mean=4.0, std=0.0, n=6),
    )
    text, _ = render_report([low, high], layout="mos", bold_best=True)
    assert "**4.00 ± 0.10**" in text
    assert "**3.00" not in text


def test_render_incomplete_grid():
    partial = ReportRow(label="x", cells={"Ross": AggCell(1, 0, 1)}, summary=AggCell(1, 0, 1))
    with pytest.raises(IncompleteGrid):
        render_report([_grid_row(), partial], layout="mos")


# ------------------------------------------------------------ properties ---


@settings(max_examples=60)
@given(
    data=st.lists(
        st.tuples(st.sampled_from(SIX_ROLES), st.integers(1, 5), st.booleans(), st.booleans()),
        min_size=1,
        max_size=40,
    ),
    flip=st.integers(min_value=0, max_value=39),
)
def test_gating_dominance(data, flip):
    records = [mos(role, s, voice=v, content=c) for role, s, v, c in data]
    cells, average = aggregate_mos(records)
    k = flip % len(records)
    flipped = list(records)
    flipped[k] = mos(data[k][0], data[k][1], voice=True, content=data[k][3])
    cells2, average2 = aggregate_mos(flipped)
    for role in cells:
        assert cells2[role].mean <= cells[role].mean + 1e-12
    assert average2.mean <= average.mean + 1e-12


@settings(max_examples=60)
@given(
    data=st.lists(
        st.tuples(st.sampled_from(SIX_ROLES), st.integers(1, 5)),
        min_size=1,
        max_size=40,
    )
)
def test_average_is_exact_mean_of_role_means(data):
    records = [mos(role, s) for role, s in data]
    _, average = aggregate_mos(records)
    by_role: dict[str, list[int]] = {}
    for role, s in data:
        by_role.setdefault(role, []).append(s)
    exact_means = [Fraction(sum(v), len(v)) for v in by_role.values()]
    exact = sum(exact_means, Fraction(0)) / len(exact_means)
    assert abs(average.mean - float(exact)) <= 1e-12


# ------------------------------------------------------------------- csv ---


MOS_CSV = """item_id,role,evaluator_id,raw_score,voice_mismatch,content_mismatch
i1,Phoebe,e1,4,false,false
i2,Phoebe,e2,5,true,false
i3,Joey,e1,3,false,true
"""

IMPROVEMENT_CSV = """role,system,evaluator_id,rating
Phoebe,sysA,e1,1
Phoebe,sysA,e2,0.5
Joey,sysB,e1,0
"""


def test_read_mos_csv():
    records = read_mos_csv(MOS_CSV)
    assert len(records) == 3
    assert records[1].voice_mismatch is True
    assert gate_score(records[1]) == 1


def test_read_improvement_csv():
    records = read_improvement_csv(IMPROVEMENT_CSV)
    assert [r.system_label for r in records] == ["sysA", "sysA", "sysB"]
    assert records[1].rating == 0.5


def test_read_mos_csv_bad_header():
    with pytest.raises(ParseError):
        read_mos_csv("a,b\n1,2\n")


def test_read_mos_csv_bad_bool():
    bad = MOS_CSV.replace("true", "maybe")
    with pytest.raises(ParseError):
        read_mos_csv(bad)


def test_record_validation():
    with pytest.raises(ValueError):
        MosRecord("i", "r", "e", raw_score=6)
    with pytest.raises(ValueError):
        ImprovementRecord("r", "s", "e", rating=0.7)
