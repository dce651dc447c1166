#!/usr/bin/env python3
"""End-to-end demo on synthetic data: corpus -> split -> role database ->
one performed line under the full config and under the reasoning-free
fallback, all with mock backends (no models needed).

Usage:
    python scripts/run_pipeline_demo.py out/demo_run [--role Phoebe] [--seed 42]
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from amb import synth  # noqa: E402
from amb.cli import execute  # noqa: E402
from amb.corpus import load_manifest  # noqa: E402


def find_target(corpus, role):
    for ep in corpus.episodes:
        for sc in ep.scenes:
            for pos, u in enumerate(ep.utterances[sc.start_index : sc.end_index + 1]):
                if u.role == role and pos >= 1:
                    return sc.id, pos
    raise SystemExit(f"no {role} line with preceding context in the demo corpus; try another --seed")


def run(argv) -> None:
    print("$ amb " + " ".join(argv))
    rc = execute(argv)
    if rc != 0:
        raise SystemExit(rc)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", help="working directory")
    parser.add_argument("--role", default="Phoebe")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    out = Path(args.out)
    corpus = synth.synth_corpus(synth.demo_specs(3, 2, 6), seed=7)
    manifest = synth.write_corpus_assets(corpus, out / "corpus")
    scene, position = find_target(load_manifest(manifest), args.role)

    run(["split", "--manifest", str(manifest), "--test-episodes", "SE01_03", "--out", str(out / "split")])
    run(["build-db", "--manifest", str(manifest), "--role", args.role, "--out", str(out / "db")])
    db = out / "db" / f"{args.role}.emodb.jsonl"
    for ablation in ("full", "no_brain"):
        run(
            [
                "perform",
                "--manifest", str(manifest),
                "--db", str(db),
                "--role", args.role,
                "--scene", scene,
                "--position", str(position),
                "--ablation", ablation,
                "--seed", str(args.seed),
                "--out", str(out / "perform" / ablation),
            ]
        )
        bundle_path = next((out / "perform" / ablation).glob("*.json"))
        bundle = json.loads(bundle_path.read_text(encoding="utf-8"))
        print(
            f"  {ablation}: emotion_state={bundle['emotion_state']!r} "
            f"retrieved={bundle['retrieved_id']} bypassed={bundle['retrieval_bypassed']}"
        )
    print(f"done; outputs under {out}")


if __name__ == "__main__":
    main()
