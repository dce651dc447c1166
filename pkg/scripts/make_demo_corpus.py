#!/usr/bin/env python3
"""Generate a small synthetic corpus with audio assets and mock sidecars.

Usage:
    python scripts/make_demo_corpus.py out/demo --episodes 3 --scenes 2 --scene-size 6
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from amb import synth  # noqa: E402


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", help="output directory")
    parser.add_argument("--episodes", type=int, default=3)
    parser.add_argument("--scenes", type=int, default=2, help="scenes per episode")
    parser.add_argument("--scene-size", type=int, default=6, help="utterances per scene")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    corpus = synth.synth_corpus(synth.demo_specs(args.episodes, args.scenes, args.scene_size), seed=args.seed)
    manifest = synth.write_corpus_assets(corpus, args.out)
    n_utts = sum(len(ep.utterances) for ep in corpus.episodes)
    print(f"wrote {manifest} ({len(corpus.episodes)} episodes, {n_utts} utterances)")


if __name__ == "__main__":
    main()
