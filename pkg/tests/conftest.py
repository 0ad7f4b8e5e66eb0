import os
from pathlib import Path

import pytest

from metabograph.cli import load_docs, main
from metabograph.query import EmbeddedEndpoint, load_endpoint
from metabograph.synthetic import cq_corpus, write_corpus

FIXTURES = Path(__file__).parent / "fixtures"

os.environ.setdefault("SOURCE_DATE_EPOCH", "1700000000")


def run_cli(*argv):
    code = main([str(a) for a in argv])
    assert code == 0, f"metabograph {' '.join(map(str, argv))} exited {code}"


def build(corpus, root, link=True):
    """Offline ingest of a corpus into root/out; returns (out, metadata path, bundle paths)."""
    meta, bundles = write_corpus(corpus, root / "in")
    out = root / "out"
    run_cli("ingest-metadata", meta, "--out", out, "--offline")
    run_cli("ingest-gnps", *bundles, "--out", out, "--offline")
    if link:
        run_cli("link", "--out", out, "--offline")
    return out, meta, bundles


@pytest.fixture(scope="session")
def corpus():
    return cq_corpus()


@pytest.fixture(scope="session")
def built(corpus, tmp_path_factory):
    out, _, _ = build(corpus, tmp_path_factory.mktemp("cq"))
    return out


@pytest.fixture(scope="session")
def endpoint(built):
    ep = EmbeddedEndpoint()
    load_endpoint(load_docs(built), ep)
    return ep


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    def record(number, passed, detail):
        ACCEPTANCE.append((number, passed, detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
