import csv
import json
import shutil

import pytest

from metabograph import __version__
from metabograph.cli import main, read_index
from metabograph.synthetic import write_corpus

from .conftest import run_cli

DCT_TITLE = "<http://purl.org/dc/terms/title>"


def tsv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh, delimiter="\t"))


def test_ingest_artifacts(built):
    names = {p.name for p in built.iterdir()}
    for suffix in ("missingness.tsv", "organisms.tsv", "mapping.json", "report.tsv", "stats.tsv"):
        assert f"metadata-metadata.{suffix}" in names
    assert json.loads((built / "metadata-metadata.mapping.json").read_text())
    kinds = {kind for kind, _, _ in read_index(built).values()}
    assert kinds == {"metadata", "gnps", "library", "linkage"}
    assert all(r["status"] == "ok" for r in tsv(built / "gnps_summary.tsv"))


def test_bad_bundle_is_reported_and_others_continue(corpus, tmp_path):
    _, bundles = write_corpus(corpus, tmp_path / "in")
    broken = tmp_path / "broken"
    broken.mkdir()
    (broken / "params.xml").write_text("<parameters/>")
    code = main(["ingest-gnps", str(bundles[0]), str(broken), "--out", str(tmp_path / "out"), "--offline"])
    assert code == 1
    rows = tsv(tmp_path / "out" / "gnps_summary.tsv")
    assert [r["status"] for r in rows] == ["ok", "error"] and rows[1]["error"]


def test_strict_rejects_unmapped_columns(corpus, tmp_path):
    meta, _ = write_corpus(corpus, tmp_path / "in")
    lines = meta.read_text().splitlines()
    lines = [lines[0] + "\tMysteryColumn"] + [line + "\tx" for line in lines[1:]]
    meta.write_text("\n".join(lines) + "\n")
    out = tmp_path / "out"
    assert main(["ingest-metadata", str(meta), "--out", str(out), "--offline", "--strict"]) == 1
    error = json.loads((out / "error.json").read_text())
    assert error["error"] == "UnmappedColumn" and "MysteryColumn" in error["message"]
    # lenient mode ingests and reports the column
    assert main(["ingest-metadata", str(meta), "--out", str(out), "--offline"]) == 0
    assert "MysteryColumn" in (out / "metadata-metadata.report.tsv").read_text()


def test_query_all_and_params(built, tmp_path):
    out = tmp_path / "out"
    shutil.copytree(built, out)
    run_cli("query", "all", "--out", out, "--offline")
    for n in range(1, 5):
        assert (out / "results" / f"cq{n}.tsv").exists()
        assert json.loads((out / "results" / f"cq{n}.manifest.json").read_text())["cq"] == f"CQ{n}"
    titles = [r["title"] for r in tsv(out / "results" / "cq1.tsv")]
    run_cli("query", "cq1", "--param", f"title={titles[0]}", "--out", out, "--offline")
    assert [r["title"] for r in tsv(out / "results" / "cq1.tsv")] == [titles[0]]
    with pytest.raises(SystemExit):
        main(["query", "cq1", "--param", "title", "--out", str(out)])


def test_validate_clean_and_corrupted(built, tmp_path):
    out = tmp_path / "out"
    shutil.copytree(built, out)
    run_cli("validate", "--out", out)
    assert len(tsv(out / "violations.tsv")) == 0
    meta_nt = out / next(f for kind, f, _ in read_index(out).values() if kind == "metadata")
    line = next(line for line in meta_nt.read_text().splitlines() if DCT_TITLE in line)
    subject = line.split(" ", 1)[0]
    with open(meta_nt, "a", encoding="utf-8") as fh:
        fh.write(f'{subject} {DCT_TITLE} "A second title" .\n')
    assert main(["validate", "--out", str(out)]) == 1
    assert {r["check"] for r in tsv(out / "violations.tsv")} == {"multiple_titles"}


def test_load_and_report(built, tmp_path):
    out = tmp_path / "out"
    shutil.copytree(built, out)
    run_cli("load", "--out", out, "--endpoint", "embedded")
    loaded = {r["graph"]: int(r["triples"]) for r in tsv(out / "load_report.tsv")}
    assert loaded == {g: n for g, (_, _, n) in read_index(out).items()}
    run_cli("report", "--out", out)
    assert {r["graph"] for r in tsv(out / "report.tsv")} == set(loaded)


def test_config_problems_exit_2(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("curation: nowhere.tsv\n")
    assert main(["report", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0 and __version__ in capsys.readouterr().out
