import json

import pytest
from hypothesis import given, settings, strategies as st

from metabograph.alignment import (
    CurationFile, MatchKind, RemoteLookup, TermIndex, TermResolver, evaluate_matching, levenshtein, match_term,
)
from metabograph.errors import EmptyQuery, MalformedResponse, NetworkUnavailable, UnknownPrefix
from metabograph.vocab import T

from .conftest import FIXTURES


@pytest.fixture(scope="module")
def index():
    return TermIndex.load(FIXTURES / "term_index.tsv")


def test_index_filters_to_configured_ontologies(index):
    assert len(index) == 50
    only_ms = TermIndex(index.entries, ontologies=["MS"])
    assert {e.ontology for e in only_ms.entries} == {"MS"}


@pytest.mark.parametrize("raw,kind", [("methanol", MatchKind.EXACT), ("METHANOL", MatchKind.CASE_INSENSITIVE),
                                      ("MeOH", MatchKind.SYNONYM_EXACT), ("cold methanol", MatchKind.TOKEN_OVERLAP),
                                      ("methanl", MatchKind.EDIT_DISTANCE)])
def test_match_kinds(index, raw, kind):
    top = match_term(raw, index, 5)[0]
    assert top.term == T("ChEBI:17790") and top.match_kind is kind and top.rank == 1


def test_match_rejects_empty_and_bad_k(index):
    with pytest.raises(EmptyQuery):
        match_term("  ", index)
    with pytest.raises(ValueError):
        match_term("water", index, 0)


@settings(max_examples=60)
@given(st.text(min_size=1, max_size=20).filter(lambda s: s.strip()), st.integers(1, 8))
def test_top_k_is_a_prefix_of_top_k_plus_one(raw, k):
    idx = TermIndex.load(FIXTURES / "term_index.tsv")
    small, large = match_term(raw, idx, k), match_term(raw, idx, k + 1)
    assert [c.term for c in small] == [c.term for c in large[:k]]
    assert [c.rank for c in large] == list(range(1, len(large) + 1))


@given(st.data())
def test_exact_label_ranks_first(data):
    idx = TermIndex.load(FIXTURES / "term_index.tsv")
    entry = data.draw(st.sampled_from(idx.entries))
    assert match_term(entry.label, idx, 5)[0].term == entry.term


@given(st.text(max_size=8), st.text(max_size=8))
def test_levenshtein_is_a_metric(a, b):
    assert levenshtein(a, b) == levenshtein(b, a)
    assert (levenshtein(a, b) == 0) == (a == b)
    assert levenshtein(a, b) <= max(len(a), len(b))


def test_curation_file(index):
    cur = CurationFile.load(FIXTURES / "curation.tsv")
    assert len(cur) == 50
    assert cur.get("SampleExtractionMethod", " MeOH ").chosen_term == T("ChEBI:17790")
    assert cur.get("InternalStandardsUsed", "none").chosen_term is None
    with pytest.raises(UnknownPrefix):
        CurationFile.from_tsv("column_name\traw_value\tchosen_term\tcurator_note\nc\tr\tXX:1\t\n")
    with pytest.raises(ValueError):
        CurationFile.from_tsv("column_name\traw_value\tchosen_term\tcurator_note\nc\tr\tREJECT\t\nc\tr\tREJECT\t\n")


def test_evaluation_excludes_rejects_and_is_monotone(index):
    report = evaluate_matching(CurationFile.load(FIXTURES / "curation.tsv"), index, (1, 3, 5))
    assert report.rejected == 2 and sum(report.counts.values()) == 48
    for k_small, k_large in ((1, 3), (3, 5)):
        assert report.micro[k_large] >= report.micro[k_small]
        assert report.macro[k_large] >= report.macro[k_small]
    assert ("macro", "*", 1, report.macro[1]) in report.rows()


def test_resolver_policy(index):
    cur = CurationFile.from_tsv("column_name\traw_value\tchosen_term\tcurator_note\n"
                                "SampleExtractionMethod\tBligh and Dyer\tREJECT\tno term\n")
    r = TermResolver(index, cur)
    assert r.resolve("SampleExtractionMethod", "Bligh and Dyer").source == "rejected"
    assert r.resolve("SampleExtractionMethod", "methanol").source == "exact"
    # curation-required columns never take a fuzzy match
    assert r.resolve("SampleExtractionMethod", "acetonitril").term is None
    assert r.resolve("Solvent", "acetonitril").source == "fuzzy"
    assert r.resolve("Solvent", "").source == "unresolved"


class FakeResponse:
    def __init__(self, payload, status=200):
        self.payload, self.status_code = payload, status

    def json(self):
        if isinstance(self.payload, Exception):
            raise self.payload
        return self.payload


class FakeSession:
    def __init__(self, response):
        self.response, self.calls = response, []

    def get(self, url, params=None, timeout=None):
        self.calls.append((url, params))
        return self.response


def test_remote_lookup_converts_and_caches(tmp_path):
    payload = json.loads((FIXTURES / "ols_search_methanol.json").read_text())
    session = FakeSession(FakeResponse(payload))
    client = RemoteLookup("https://ols.example/ols4", tmp_path, session=session)
    first = client.fetch("methanol", ["CHEBI"], 5)
    assert [str(c.term) for c in first] == ["ChEBI:17790", "ChEBI:44080", "ChEBI:16236"]
    assert first[0].match_kind is MatchKind.EXACT
    assert session.calls[0][1] == {"q": "methanol", "ontology": "chebi", "rows": 5}
    cached = list(tmp_path.glob("*.json"))
    assert len(cached) == 1
    # second call is served from disk, byte for byte
    before = cached[0].read_bytes()
    again = RemoteLookup("https://ols.example/ols4", tmp_path, enabled=False).fetch("methanol", ["CHEBI"], 5)
    assert again == first and len(session.calls) == 1 and cached[0].read_bytes() == before


def test_remote_lookup_failures(tmp_path, index):
    with pytest.raises(NetworkUnavailable):
        RemoteLookup("x", tmp_path, enabled=False).fetch("water")
    fallback = RemoteLookup("x", tmp_path, enabled=False, fallback_index=index).fetch("water")
    assert fallback[0].term == T("ChEBI:15377")
    with pytest.raises(NetworkUnavailable):
        RemoteLookup("x", tmp_path, session=FakeSession(FakeResponse({}, 503))).fetch("water")
    with pytest.raises(MalformedResponse):
        RemoteLookup("x", tmp_path, session=FakeSession(FakeResponse(ValueError("bad json")))).fetch("water")
    with pytest.raises(MalformedResponse):
        RemoteLookup("x", tmp_path, session=FakeSession(FakeResponse({"response": {"docs": [{}]}}))).fetch("water")
