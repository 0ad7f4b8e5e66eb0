"""Scale smoke run: synthesize a >= 1M-triple batch, ingest, emit, load into
the embedded store and answer CQ1, reporting wall time and peak memory.

    python scripts/scale_smoke.py --collections 100 --samples 10 --annotations 250 --work /tmp/scale
"""
import argparse
import contextlib
import io
import resource
import shutil
import sys
import time
from pathlib import Path

from metabograph.cli import load_docs, main as cli
from metabograph.query import EmbeddedEndpoint, load_endpoint, run_cq
from metabograph.synthetic import random_corpus, write_corpus


def peak_rss_mb() -> float:
    # ru_maxrss is KiB on Linux
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024


def run(work: Path, collections: int = 100, samples: int = 10, annotations: int = 250, seed: int = 7) -> dict:
    if work.exists():
        shutil.rmtree(work)
    meta, bundles = write_corpus(random_corpus(seed, collections, samples, annotations), work / "corpus")
    out = work / "out"
    timings = {}
    start = time.perf_counter()
    with contextlib.redirect_stdout(io.StringIO()):
        if cli(["ingest-metadata", str(meta), "--out", str(out), "--offline"]) != 0:
            raise RuntimeError("metadata ingestion failed")
        if cli(["ingest-gnps", *map(str, bundles), "--out", str(out), "--offline"]) != 0:
            raise RuntimeError("gnps ingestion failed")
    timings["ingest_emit_s"] = time.perf_counter() - start
    t = time.perf_counter()
    docs = load_docs(out)
    endpoint = EmbeddedEndpoint()
    report = load_endpoint(docs, endpoint)
    timings["load_s"] = time.perf_counter() - t
    t = time.perf_counter()
    table, _ = run_cq("CQ1", endpoint)
    timings["cq1_s"] = time.perf_counter() - t
    timings["total_s"] = time.perf_counter() - start
    return {
        "triples": sum(report.graphs.values()),
        "graphs": len(report.graphs),
        "cq1_rows": len(table.rows),
        "peak_rss_mb": peak_rss_mb(),
        **timings,
    }


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--work", type=Path, default=Path("scale-run"))
    p.add_argument("--collections", type=int, default=100)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--annotations", type=int, default=250)
    p.add_argument("--seed", type=int, default=7)
    return p.parse_args(argv)


if __name__ == "__main__":
    args = parse_args()
    result = run(args.work, args.collections, args.samples, args.annotations, args.seed)
    for key, value in result.items():
        print(f"{key}\t{value:.2f}" if isinstance(value, float) else f"{key}\t{value}")
    ok = result["triples"] >= 1_000_000 and result["total_s"] < 300 and result["peak_rss_mb"] < 4096
    sys.exit(0 if ok else 1)
