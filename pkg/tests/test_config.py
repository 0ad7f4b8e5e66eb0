from pathlib import Path

import pytest

from metabograph.config import RunConfig


def test_defaults():
    cfg = RunConfig()
    assert cfg.endpoint == "embedded" and cfg.embedded_store == Path("build/store") and cfg.check() == []


def test_load_resolves_relative_paths_and_env(tmp_path):
    (tmp_path / "cur.tsv").write_text("column_name\traw_value\tchosen_term\tcurator_note\n")
    cfg_path = tmp_path / "run.yaml"
    cfg_path.write_text("out_dir: build\ncuration: cur.tsv\nformat: ttl\nnote: kept aside\n")
    cfg = RunConfig.load(cfg_path, env={"METABOKG_ENDPOINT": "http://h/sparql"})
    assert cfg.out_dir == tmp_path / "build" and cfg.curation == tmp_path / "cur.tsv"
    assert cfg.endpoint == "http://h/sparql" and cfg.format == "ttl" and cfg.extra == {"note": "kept aside"}
    assert cfg.check() == []


def test_overrides_skip_none():
    cfg = RunConfig().with_overrides(out_dir=Path("x"), endpoint=None, offline=True)
    assert cfg.out_dir == Path("x") and cfg.endpoint == "embedded" and cfg.offline


def test_check_reports_problems(tmp_path):
    cfg = RunConfig(curation=tmp_path / "missing.tsv", offline=True, endpoint="http://h/sparql")
    problems = cfg.check()
    assert len(problems) == 2


def test_bad_format():
    with pytest.raises(ValueError):
        RunConfig(format="xml")
