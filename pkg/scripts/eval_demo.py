#!/usr/bin/env python3
"""Generate synthetic rating CSVs and render the three report layouts.

Usage:
    python scripts/eval_demo.py out/eval_demo [--seed 3]
"""

import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from amb.cli import execute  # noqa: E402

ROLES = ("Phoebe", "Joey", "Chandler", "Rachel", "Ross", "Monica")


def mos_csv(rng, quality: float) -> str:
    lines = ["item_id,role,evaluator_id,raw_score,voice_mismatch,content_mismatch"]
    for k in range(120):
        role = ROLES[k % len(ROLES)]
        score = max(1, min(5, round(rng.gauss(quality, 0.8))))
        voice = "true" if rng.random() < 0.05 else "false"
        lines.append(f"i{k},{role},e{k % 6},{score},{voice},false")
    return "\n".join(lines) + "\n"


def improvement_csv(rng) -> str:
    lines = ["role,system,evaluator_id,rating"]
    for system in ("sysA", "sysB"):
        for role in ROLES:
            for e in range(4):
                rating = rng.choice(["1", "1", "0.5", "0"])
                lines.append(f"{role},{system},e{e},{rating}")
    return "\n".join(lines) + "\n"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out")
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    full = out / "ratings_full.csv"
    full.write_text(mos_csv(rng, quality=3.6), encoding="utf-8")
    ablated = out / "ratings_ablated.csv"
    ablated.write_text(mos_csv(rng, quality=3.1), encoding="utf-8")
    improvement = out / "ratings_improvement.csv"
    improvement.write_text(improvement_csv(rng), encoding="utf-8")

    for name, argv in (
        ("mos", ["eval", "mos", str(full), "--out", str(out / "mos")]),
        ("improvement", ["eval", "improvement", str(improvement), "--out", str(out / "improvement")]),
        ("delta", ["eval", "delta", "--full", str(full), "--ablated", str(ablated), "--out", str(out / "delta")]),
    ):
        print("$ amb " + " ".join(argv))
        rc = execute(argv)
        if rc != 0:
            raise SystemExit(rc)
        print((out / name / "report.txt").read_text(encoding="utf-8"))


if __name__ == "__main__":
    main()
