import string

import pytest
from hypothesis import given, settings, strategies as st

from metabograph.errors import EmptyIdentity, MalformedUai
from metabograph.identifiers import (
    ALPHABET, HASH_LENGTH, Uai, canonical_string, encode_base57, gnps_violations, individual_iri, mint_uri,
    short_hash, uai_parse, uai_serialize, uai_shared_components,
)

from .oracles.hash_oracle import oracle_hash


@pytest.mark.parametrize("canonical", ["", "organism|country=France", "x|a=%25|b=%7C", "é漢|k=v"])
def test_hash_matches_independent_oracle(canonical):
    assert short_hash(canonical) == oracle_hash(canonical)


@given(st.text())
def test_hash_oracle_agreement_property(text):
    assert short_hash(text) == oracle_hash(text)


def test_base57_alphabet_and_padding():
    assert len(ALPHABET) == 57 and not set("01IOl") & set(ALPHABET)
    assert encode_base57(b"\x00" * 16) == "2" * HASH_LENGTH
    assert encode_base57(b"\xff" * 16)[0] != "2"
    with pytest.raises(ValueError):
        encode_base57(b"\xff" * 17)


def test_canonical_string_sorts_and_escapes():
    assert canonical_string("c", {"b": "x|y", "a": "1=2"}) == "c|a=1%3D2|b=x%7Cy"
    assert canonical_string("c", {}, ("f.tsv", "src")) == "c|file=f.tsv|src=src"
    with pytest.raises(EmptyIdentity):
        canonical_string("c", {})


@given(st.dictionaries(st.text(min_size=1, max_size=5), st.text(max_size=8), min_size=1, max_size=4))
def test_mint_is_order_independent(attrs):
    reversed_attrs = dict(reversed(list(attrs.items())))
    assert mint_uri("thing", attrs).uri == mint_uri("thing", reversed_attrs).uri


def test_mint_uri_shape():
    u = mint_uri("organism", {"country": "France"})
    assert u.uri == f"https://ns.inria.fr/metaboKG/resource/organism/{oracle_hash('organism|country=France')}"
    with pytest.raises(ValueError):
        mint_uri("Bad Concept", {"a": "b"})


def test_individual_iri_uses_schema_namespace():
    iri = individual_iri("https://ns.inria.fr/metaboKG/schema/", "sampletype",
                         "https://ns.inria.fr/metaboKG/schema/SampleType", "animal")
    assert iri == "https://ns.inria.fr/metaboKG/schema/sampletype_" + oracle_hash(
        "sampletype|class=https://ns.inria.fr/metaboKG/schema/SampleType|label=animal")


segment = st.text(alphabet=string.ascii_letters + string.digits + ":%/._- é", min_size=1, max_size=10) \
    .filter(lambda s: s.strip())


@st.composite
def uais(draw):
    parts = {k: draw(st.none() | segment) for k in ("collection_id", "mzml", "scan", "feature_id", "feature_table")}
    if draw(st.booleans()):
        parts["collection_id"] = parts["collection_id"] or draw(segment)
        parts["annotation_file"] = draw(segment)
        parts["hit_number"] = draw(st.integers(1, 10 ** 6))
    if not any(parts.values()):
        parts["mzml"] = draw(segment)
    return Uai(**parts)


@settings(max_examples=500)
@given(uais())
def test_uai_round_trip(u):
    assert uai_parse(uai_serialize(u)) == u


def test_uai_grammar_examples():
    u = Uai("MSV000084794", "run1.mzML", "12", "job.tsv", 1, "7", "quant.csv")
    assert uai_serialize(u) == "mzspec:MSV000084794:run1.mzML:scan:12:annot:job.tsv:1:feature:7:ftable:quant.csv"
    assert uai_serialize(Uai("MSV1")) == "mzspec:MSV1:"
    assert uai_serialize(Uai("a:b", "50%")) == "mzspec:a%3Ab:50%25"


@pytest.mark.parametrize("text", [
    "usi:MSV1:x", "mzspec:MSV1", "mzspec:MSV1:a:bogus:1", "mzspec:MSV1:a:annot:f:x",
    "mzspec:MSV1:a:annot:f:0", "mzspec:MSV1:a:feature:1:table:q", "mzspec:MSV1:a:annot:f:1:scan:3",
    "mzspec:MSV1:a:scan:1:scan:2", "mzspec:MSV1:%zz", "mzspec::a:annot:f:1", "mzspec::",
])
def test_malformed_uais(text):
    with pytest.raises(MalformedUai):
        uai_parse(text)


def test_malformed_uai_reports_offset():
    with pytest.raises(MalformedUai) as err:
        uai_parse("mzspec:MSV1:a:bogus:1")
    assert err.value.position == 14


def test_uai_validation():
    with pytest.raises(ValueError):
        Uai()
    with pytest.raises(ValueError):
        Uai(mzml="a", hit_number=0)
    with pytest.raises(ValueError):
        Uai(mzml="a", annotation_file="f")
    assert Uai(" MSV1 ", "") == Uai("MSV1")


def test_gnps_violations():
    assert gnps_violations(Uai("MSV1", "a", annotation_file="f", hit_number=1)) == []
    assert gnps_violations(Uai("MSV1", "a", annotation_file="f", hit_number=2))
    assert gnps_violations(Uai(mzml="a"))


def test_shared_components():
    a, b = Uai("MSV1", "r.mzML", "3"), Uai("MSV1", "r.mzML", feature_id="9", feature_table="q")
    assert uai_shared_components(a, b) == {"collection_id", "mzml"}
    assert uai_shared_components(a, Uai("MSV2", "r.mzML")) == set()
