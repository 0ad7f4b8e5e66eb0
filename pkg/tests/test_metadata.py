from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from metabograph.errors import DuplicateColumn, EmptyInput, MissingHeader, UnmappedColumn, UnparseableMixture
from metabograph.metadata import (
    MappingManifest, MetadataMapper, SampleRecord, build_organism_individuals, load_metadata, missingness_report,
    normalize_cell, organism_key, parse_method_phrase, parse_solvent_mixture,
)

from .conftest import FIXTURES


@pytest.fixture(scope="module")
def manifest():
    return MappingManifest.load()


@pytest.mark.parametrize("raw,names,ratio,additives", [
    ("methanol-water (4:1) + 0.1% formic acid", ["methanol", "water"], (4, 1), [("formic acid", "0.1", "%")]),
    ("acetonitrile/water (1:1)", ["acetonitrile", "water"], (1, 1), []),
    ("methanol", ["methanol"], None, []),
    ("propan-2-ol-water (3:1)", ["propan-2-ol", "water"], (3, 1), []),
    ("methanol-water (80:20) + 10 mM ammonium acetate + 0.1% formic acid", ["methanol", "water"], (80, 20),
     [("ammonium acetate", "10", "mM"), ("formic acid", "0.1", "%")]),
    ("water + 5 µM reserpine", ["water"], None, [("reserpine", "5", "uM")]),
])
def test_parse_solvent_mixture(raw, names, ratio, additives):
    m = parse_solvent_mixture(raw)
    assert [c.name for c in m.components] == names
    assert m.ratio == (tuple(Fraction(r) for r in ratio) if ratio else None)
    assert [(a.name, a.concentration, a.unit) for a in m.additives] == [(n, Decimal(c), u) for n, c, u in additives]


@pytest.mark.parametrize("raw", ["", "methanol-water (4:1:2)", "methanol (abc)", "methanol-water (0:1)",
                                 "water + lots of salt", "methanol-water (4:1"])
def test_unparseable_mixtures(raw):
    with pytest.raises(UnparseableMixture):
        parse_solvent_mixture(raw)


@given(st.lists(st.sampled_from(["methanol", "water", "acetonitrile", "ethanol", "chloroform"]), min_size=1,
                max_size=4, unique=True),
       st.lists(st.integers(1, 99), min_size=4, max_size=4), st.booleans())
def test_mixture_render_round_trip(names, parts, with_additive):
    raw = "-".join(names)
    if len(names) > 1:
        raw += " (" + ":".join(map(str, parts[:len(names)])) + ")"
    if with_additive:
        raw += " + 0.1% formic acid"
    m = parse_solvent_mixture(raw)
    assert parse_solvent_mixture(m.render()) == m


def test_mixture_resolution_warnings():
    m = parse_solvent_mixture("methanol-unobtainium (1:1)", lambda n: None if n == "unobtainium" else "T")
    assert m.warnings == ("unresolved chemical 'unobtainium'",)


def test_method_phrase():
    assert parse_method_phrase("swab;  freeze-dried, stored at -80C") == ["swab", "freeze-dried", "stored at -80C"]
    assert parse_method_phrase(" ; ,") == []


def test_normalize_cell():
    markers = ("", "NA", "not specified")
    assert normalize_cell("  NOT   specified ", markers) is None
    assert normalize_cell(" a  b ", markers) == "a b"
    assert normalize_cell(None, markers) is None


def test_load_metadata_errors(tmp_path, manifest):
    p = tmp_path / "m.tsv"
    p.write_text("")
    with pytest.raises(MissingHeader):
        load_metadata(p, manifest)
    p.write_text("filename\tfilename\tATTRIBUTE_DatasetAccession\n")
    with pytest.raises(DuplicateColumn):
        load_metadata(p, manifest)
    p.write_text("filename\tSampleType\nx.mzML\tanimal\n")
    with pytest.raises(MissingHeader):
        load_metadata(p, manifest)


def test_load_metadata_skips_rows_without_identity(tmp_path, manifest):
    p = tmp_path / "m.tsv"
    p.write_text("filename\tATTRIBUTE_DatasetAccession\tOddColumn\na.mzML\tMSV1\tx\n\t\t\n\tMSV1\ty\nb.mzML\tMSV1\n")
    recs = load_metadata(p, manifest)
    assert [r.filename for r in recs] == ["a.mzML", "b.mzML"]
    assert recs[0].unknown_columns == ("OddColumn",)
    assert recs[1].get("OddColumn") is None


def test_missingness_fixture(manifest):
    report = missingness_report(load_metadata(FIXTURES / "missingness.tsv", manifest), threshold=60)
    rows = dict(report.rows)
    assert rows["LifeStage"] == 75.0 and rows["filename"] == 0.0
    assert report.sparse_columns == ["LifeStage"]
    assert report.to_tsv().splitlines()[1] == "LifeStage\t75.0000\tyes"
    with pytest.raises(EmptyInput):
        missingness_report([])


def _rec(i, **cols):
    return SampleRecord(i, f"{i}.mzML", "MSV1", cols)


def test_organism_key_uses_sentinel_for_missing(manifest):
    key = organism_key(_rec(1, NCBITaxonomy="9606|Homo sapiens", Country=None), manifest)
    assert key.ncbi_taxonomy == "9606|Homo sapiens" and key.country == "NA"


@given(st.lists(st.tuples(st.sampled_from(["9606", "10090", None]), st.sampled_from(["France", None]),
                          st.sampled_from(["34", "8", None])), min_size=1, max_size=60))
def test_organism_dedup_ratio_matches_distinct_count(rows):
    manifest = MappingManifest.load()
    recs = [_rec(i, NCBITaxonomy=t, Country=c, AgeInYears=a) for i, (t, c, a) in enumerate(rows)]
    uris, ratio = build_organism_individuals(recs, manifest)
    assert len(uris) == len(set(rows))
    assert ratio == 1 - Fraction(len(set(rows)), len(rows))


def test_mapper_builds_sample_layout(manifest):
    from metabograph.vocab import NodeKind
    mapper = MetadataMapper(manifest)
    rec = _rec(1, filename="1.mzML", ATTRIBUTE_DatasetAccession="MSV1", DatasetTitle="Study",
               SampleType="animal", SampleExtractionMethod="methanol-water (4:1) + 0.1% formic acid",
               NCBITaxonomy="9606|Homo sapiens", YearOfAnalysis="2021")
    sample, coll = mapper.map(rec)
    assert sample.kind is NodeKind.PROV_ENTITY and sample.uai.mzml == "1.mzML"
    assert coll.uai.components() == {"collection_id": "MSV1"}
    mixtures = [t for _, t in sample.edges + [e for p, t in sample.edges if hasattr(t, "edges") for e in t.edges]
                if getattr(t, "label", None) == "methanol-water (4:1) + 0.1% formic acid"]
    assert mixtures
    assert "SampleExtractionMethod" in mapper.dictionary


def test_mapper_strict_mode(manifest):
    rec = _rec(1, filename="1.mzML", ATTRIBUTE_DatasetAccession="MSV1", Mystery="x")
    with pytest.raises(UnmappedColumn):
        MetadataMapper(manifest, strict=True).map(rec)
    lax = MetadataMapper(manifest)
    lax.map(rec)
    lax.map(_rec(2, filename="2.mzML", ATTRIBUTE_DatasetAccession="MSV1", Mystery="y"))
    assert [r.message for r in lax.report] == ["no mapping rule, column ignored"]


def test_unparseable_mixture_falls_back_to_literal(manifest):
    mapper = MetadataMapper(manifest)
    sample, _ = mapper.map(_rec(1, filename="1.mzML", ATTRIBUTE_DatasetAccession="MSV1",
                                SampleExtractionMethod="methanol-water (4:1:1)"))
    assert any(r.level == "fallback" for r in mapper.report)
