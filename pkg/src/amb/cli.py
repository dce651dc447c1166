"""Command-line entry point.

One binary, subcommand style.  Every command takes --seed and --backend so
batch runs are reproducible without model servers; domain failures exit 1
with a single JSON line on stderr, usage problems exit 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import actor, emodb, evaluate, scenealign
from .backends import BackendConfig, make_backend
from .corpus import Corpus, Utterance, load_manifest, save_manifest, split_episodes, validate_corpus
from .errors import AmbError, ParseError


def _backend_config(args) -> BackendConfig:
    spec = args.backend
    if spec == "mock":
        return BackendConfig(mode="mock", max_parallel=args.jobs, seed=args.seed)
    if spec == "remote" or spec.startswith("remote:"):
        url = os.environ.get("AMB_BACKEND_URL") or spec.partition(":")[2]
        if not url:
            raise ParseError("remote backend needs remote:URL or AMB_BACKEND_URL")
        return BackendConfig(mode="remote", base_url=url, max_parallel=args.jobs, seed=args.seed)
    raise ParseError(f"unknown backend spec: {spec!r}")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _template(args) -> actor.PromptTemplate:
    if getattr(args, "template", None):
        return actor.PromptTemplate.load(args.template)
    return actor.PromptTemplate.default()


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def cmd_stats(args) -> int:
    corpus = load_manifest(args.manifest)
    tables = scenealign.compute_stats(corpus)
    out = _out_dir(args)
    utt_csv, scene_csv = scenealign.stats_to_csv(tables)
    utt_txt, scene_txt = scenealign.stats_to_text(tables)
    _write(out / "utterance_stats.csv", utt_csv)
    _write(out / "scene_stats.csv", scene_csv)
    _write(out / "utterance_stats.txt", utt_txt)
    _write(out / "scene_stats.txt", scene_txt)
    return 0


def cmd_split(args) -> int:
    corpus = load_manifest(args.manifest)
    test_ids = {e for e in args.test_episodes.split(",") if e}
    train, test = split_episodes(corpus, test_ids)
    out = _out_dir(args)
    save_manifest(train, out / "train.json")
    save_manifest(test, out / "test.json")
    return 0


def cmd_validate(args) -> int:
    corpus = load_manifest(args.manifest)
    report = validate_corpus(corpus)
    for v in report:
        sys.stdout.write(f"{v.kind}\t{v.item_id}\t{v.message}\n")
    sys.stdout.write(f"{len(report)} violation(s)\n")
    return 0 if report.ok else 1


def _load_utterances(path: Path) -> list[Utterance]:
    doc = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON list of utterances")
    utterances = []
    for i, u in enumerate(doc):
        try:
            utterances.append(
                Utterance(
                    id=u["id"],
                    episode_id=u.get("episode_id", ""),
                    role=u["role"],
                    text=u["text"],
                    audio=u.get("audio", ""),
                    start_s=u.get("start_s", 0.0),
                    end_s=u.get("end_s", 1.0),
                )
            )
        except KeyError as e:
            raise ParseError(f"{path}: utterance[{i}] missing {e.args[0]!r}") from e
    return utterances


def cmd_align(args) -> int:
    script = scenealign.parse_script(Path(args.script).read_text(encoding="utf-8"))
    utterances = _load_utterances(Path(args.utterances))
    alignment = scenealign.align_script(script, utterances)
    projected = scenealign.project_boundaries(alignment, script)
    out = _out_dir(args)
    doc = {
        "scenes": [{"start_index": s, "end_index": e} for s, e in projected.spans],
        "scene_ordinals": projected.scene_ordinals,
        "warnings": projected.warnings,
        "pairs": [list(p) for p in alignment.pairs],
        "skipped_lines": alignment.skipped_lines,
        "skipped_utterances": alignment.skipped_utterances,
        "total_score": alignment.total_score,
    }
    _write(out / "scenes.json", json.dumps(doc, ensure_ascii=False, indent=2) + "\n")
    return 0


def _role_utterances(corpus: Corpus, role: str) -> list[Utterance]:
    return [u for ep in corpus.episodes for u in ep.utterances if u.role == role]


def cmd_build_db(args) -> int:
    corpus = load_manifest(args.manifest)
    backends = make_backend(_backend_config(args))
    db = emodb.build_database(args.role, _role_utterances(corpus, args.role), backends, audio_root=corpus.base_dir)
    out = _out_dir(args)
    emodb.persist_database(db, out / f"{args.role}.emodb.jsonl")
    return 0


def cmd_perform(args) -> int:
    corpus = load_manifest(args.manifest)
    backends = make_backend(_backend_config(args))
    db = emodb.load_database(args.db)
    cfg = actor.ablation_config(args.ablation, seed=args.seed)
    bundle = actor.perform_line(
        corpus,
        args.role,
        args.scene,
        args.position,
        db,
        _template(args),
        cfg,
        backends,
        window=args.window,
    )
    actor.write_bundle(bundle, _out_dir(args))
    return 0


def cmd_ablate(args) -> int:
    corpus = load_manifest(args.manifest)
    backends = make_backend(_backend_config(args))
    db = emodb.load_database(args.db)
    tpl = _template(args)
    targets = json.loads(Path(args.targets).read_text(encoding="utf-8"))
    out = _out_dir(args)
    for name in ("no_role_profile", "no_scene", "no_context", "no_ear", "no_brain"):
        cfg = actor.ablation_config(name, seed=args.seed)
        for t in targets:
            bundle = actor.perform_line(
                corpus, args.role, t["scene"], t["position"], db, tpl, cfg, backends, window=args.window
            )
            actor.write_bundle(bundle, out / name)
    return 0


def cmd_eval_mos(args) -> int:
    records = evaluate.read_mos_csv(Path(args.records).read_text(encoding="utf-8"))
    cells, summary = evaluate.aggregate_mos(records)
    row = evaluate.ReportRow(label=Path(args.records).stem, cells=cells, summary=summary)
    text, csv_text = evaluate.render_report([row], layout="mos")
    out = _out_dir(args)
    _write(out / "report.txt", text)
    _write(out / "report.csv", csv_text)
    return 0


def cmd_eval_improvement(args) -> int:
    records = evaluate.read_improvement_csv(Path(args.records).read_text(encoding="utf-8"))
    labels = []
    for r in records:
        if r.system_label not in labels:
            labels.append(r.system_label)
    rows = []
    for label in labels:
        cells, summary = evaluate.aggregate_improvement([r for r in records if r.system_label == label])
        rows.append(evaluate.ReportRow(label=label, cells=cells, summary=summary))
    text, csv_text = evaluate.render_report(rows, layout="improvement")
    out = _out_dir(args)
    _write(out / "report.txt", text)
    _write(out / "report.csv", csv_text)
    return 0


def cmd_eval_delta(args) -> int:
    full_records = evaluate.read_mos_csv(Path(args.full).read_text(encoding="utf-8"))
    ablated_records = evaluate.read_mos_csv(Path(args.ablated).read_text(encoding="utf-8"))
    full_cells, _ = evaluate.aggregate_mos(full_records)
    ablated_cells, _ = evaluate.aggregate_mos(ablated_records)
    cell = evaluate.ablation_delta(
        {r: c.mean for r, c in full_cells.items()}, {r: c.mean for r, c in ablated_cells.items()}
    )
    row = evaluate.ReportRow(label=Path(args.ablated).stem, cells={}, summary=cell)
    text, csv_text = evaluate.render_report([row], layout="ablation")
    out = _out_dir(args)
    _write(out / "report.txt", text)
    _write(out / "report.csv", csv_text)
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--backend", default="mock", help="mock or remote:URL (AMB_BACKEND_URL overrides the URL)")
    p.add_argument("--jobs", type=int, default=4, help="max parallel backend calls")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amb", description="Speech role-play pipeline tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="manifest -> utterance/scene statistics tables")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="partition episodes into train/test manifests")
    p.add_argument("--manifest", required=True)
    p.add_argument("--test-episodes", required=True, help="comma-separated episode ids")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("validate", help="report corpus invariant violations")
    p.add_argument("--manifest", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("align", help="script + utterance JSON -> scene spans")
    p.add_argument("--script", required=True)
    p.add_argument("--utterances", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("build-db", help="build a role's emotion database")
    p.add_argument("--manifest", required=True)
    p.add_argument("--role", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_build_db)

    p = sub.add_parser("perform", help="deliver one scripted line")
    p.add_argument("--manifest", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--role", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--position", type=int, required=True)
    p.add_argument("--ablation", default="full", choices=sorted(actor.ABLATIONS))
    p.add_argument("--template")
    p.add_argument("--window", type=int)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_perform)

    p = sub.add_parser("ablate", help="run the five ablation configs over a target list")
    p.add_argument("--manifest", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--role", required=True)
    p.add_argument("--targets", required=True, help="JSON list of {scene, position}")
    p.add_argument("--template")
    p.add_argument("--window", type=int)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("eval", help="aggregate subjective ratings")
    esub = p.add_subparsers(dest="eval_command", required=True)

    e = esub.add_parser("mos", help="MOS records CSV -> report")
    e.add_argument("records")
    e.add_argument("--out", required=True)
    _add_common(e)
    e.set_defaults(func=cmd_eval_mos)

    e = esub.add_parser("improvement", help="improvement ratings CSV -> report")
    e.add_argument("records")
    e.add_argument("--out", required=True)
    _add_common(e)
    e.set_defaults(func=cmd_eval_improvement)

    e = esub.add_parser("delta", help="two MOS CSVs -> per-role delta cell")
    e.add_argument("--full", required=True)
    e.add_argument("--ablated", required=True)
    e.add_argument("--out", required=True)
    _add_common(e)
    e.set_defaults(func=cmd_eval_delta)

    return parser


def _error_line(code: str, message: str, stage: str | None) -> str:
    return json.dumps({"error": {"code": code, "message": message, "stage": stage}})


def execute(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.func(args)
    except AmbError as e:
        sys.stderr.write(_error_line(e.code, str(e), e.stage) + "\n")
        return 1
    except Exception as e:  # domain failures must reach callers as exit codes
        sys.stderr.write(_error_line(type(e).__name__, str(e), None) + "\n")
        return 1


def main() -> None:
    sys.exit(execute(sys.argv[1:]))
