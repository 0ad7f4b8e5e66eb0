"""End-to-end demo on the synthetic competency-question corpus: ingest
metadata and GNPS bundles offline, link batches, validate, and answer CQ1-4.

    python scripts/run_pipeline.py --work /tmp/demo [--seed 3]
"""
import argparse
import sys
from pathlib import Path

from metabograph.cli import main as cli
from metabograph.synthetic import cq_corpus, random_corpus, write_corpus


def run(work: Path, seed=None) -> int:
    corpus = cq_corpus() if seed is None else random_corpus(seed)
    meta, bundles = write_corpus(corpus, work / "in")
    out = str(work / "out")
    steps = [
        ["ingest-metadata", str(meta)],
        ["ingest-gnps", *map(str, bundles)],
        ["link"],
        ["validate"],
        ["query", "all"],
        ["report"],
    ]
    for step in steps:
        print(f"$ metabograph {' '.join(step[:2])}", flush=True)
        code = cli(step + ["--out", out, "--offline"])
        if code:
            return code
    return 0


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--work", type=Path, default=Path("build/demo"))
    p.add_argument("--seed", type=int, help="use a random corpus instead of the fixed one")
    return p.parse_args(argv)


if __name__ == "__main__":
    args = parse_args()
    sys.exit(run(args.work, args.seed))
