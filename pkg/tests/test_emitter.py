import rdflib
import rdflib.compare
import pytest
from hypothesis import given, settings, strategies as st

from metabograph.emitter import (
    DedupRegistry, DistributionSpec, Emitter, TripleDoc, attach_distribution, literal_term, parse_ntriples,
    serialize, stats_rows, write,
)
from metabograph.errors import InvalidSpec
from metabograph.identifiers import Uai
from metabograph.vocab import (
    PROV_ACTIVITY, PROV_ENTITY, NodeKind, NodeSpec, T, TypedLiteral, individual, value_node,
)


def _sample(i, value="0.5"):
    s = NodeSpec(NodeKind.PROV_ENTITY, (PROV_ENTITY,), concept="sample", attributes={"i": str(i)},
                 uai=Uai("MSV1", f"{i}.mzML"))
    s.add(T("SIO:000008"), value_node(T("MBS:MQScore"), TypedLiteral.decimal(value)))
    s.add(T("SIO:000008"), individual(T("MBS:SampleType"), "Animal" if i % 2 else "animal "))
    s.add(T("rdfs:comment"), TypedLiteral('quote " and \\ and\nnewline é'))
    return s


def test_value_nodes_and_individuals_merge_prov_nodes_do_not():
    doc = Emitter().emit([_sample(i) for i in range(4)], "urn:g")
    kinds = doc.kind_counts()
    assert kinds["ValueNode"] == 1 and kinds["NamedIndividual"] == 1
    assert sum(1 for iri, k in doc.node_kinds.items() if k is NodeKind.PROV_ENTITY and "/sample/" in iri) == 4


def test_registry_iris_are_independent_of_order():
    a = Emitter(DedupRegistry()).emit([_sample(i, str(i % 3)) for i in range(6)], "urn:g")
    b = Emitter(DedupRegistry()).emit([_sample(i, str(i % 3)) for i in reversed(range(6))], "urn:g")
    assert a.triples == b.triples


def test_registry_merge_detects_conflicts():
    r1, r2 = DedupRegistry(), DedupRegistry()
    r1.value_nodes["k"] = "urn:a"
    r2.value_nodes["k"] = "urn:b"
    with pytest.raises(AssertionError):
        r1.merge(r2)


def test_node_kind_clash_is_rejected():
    pinned = NodeSpec(NodeKind.PROV_ENTITY, (PROV_ENTITY,), iri="urn:x")
    clash = individual(T("MBS:Thing"), "x", iri="urn:x")
    with pytest.raises(InvalidSpec):
        Emitter().emit([pinned, clash], "urn:g")


@pytest.mark.parametrize("fmt,rdflib_fmt", [("nt", "nt"), ("ttl", "turtle"), ("trig", "trig")])
def test_serializations_parse_back_to_the_same_graph(tmp_path, fmt, rdflib_fmt):
    doc = Emitter().emit([_sample(i) for i in range(3)], "urn:graph:test")
    nt, other = tmp_path / "g.nt", tmp_path / f"g.{fmt}"
    write(doc, nt, "nt")
    write(doc, other, fmt)
    ref = rdflib.Graph().parse(nt, format="nt")
    if fmt == "trig":
        ds = rdflib.Dataset()
        ds.parse(other, format="trig")
        got = ds.graph(rdflib.URIRef("urn:graph:test"))
    else:
        got = rdflib.Graph().parse(other, format=rdflib_fmt)
    assert rdflib.compare.isomorphic(ref, got) and len(ref) == len(doc)


def test_ntriples_is_sorted_and_stable():
    doc = Emitter().emit([_sample(i) for i in range(3)], "urn:g")
    data = serialize(doc)
    lines = data.decode().splitlines()
    assert lines == sorted(lines) and serialize(doc) == data
    assert parse_ntriples(data, "urn:g").triples == doc.triples


@settings(max_examples=100)
@given(st.text(min_size=1).filter(lambda s: s.strip()))
def test_literal_escaping_round_trips(text):
    doc = TripleDoc("urn:g", {("<urn:s>", "<urn:p>", literal_term(TypedLiteral(text).lexical))})
    back = parse_ntriples(serialize(doc), "urn:g")
    assert back.triples == doc.triples


def test_uai_node_and_distribution():
    doc = Emitter().emit([_sample(1)], "urn:g")
    strings = [o for _, p, o in doc.triples if p.endswith("uaiString>")]
    assert strings == ['"mzspec:MSV1:1.mzML"']
    local = attach_distribution("urn:coll", DistributionSpec("urn:file", "t.tsv", "/data/t.tsv"))
    assert ("<urn:file>", "<http://www.w3.org/ns/dcat#accessURL>", "<file:///data/t.tsv>") in local
    remote = attach_distribution("urn:coll", DistributionSpec("urn:file", "t.tsv", "https://x.org/t.tsv", "MassIVE"))
    assert any(p.endswith("downloadURL>") for _, p, _ in remote) and len(remote) == 5
    with pytest.raises(ValueError):
        DistributionSpec("urn:file", "t", "")


def test_stats_rows():
    reg = DedupRegistry()
    doc = Emitter(reg).emit([_sample(i) for i in range(4)], "urn:g")
    rows = stats_rows(doc, reg)
    assert rows[0] == ("triples", "total", len(doc))
    assert ("dedup_saved", "ValueNode", 3) in rows


def test_activities_with_same_attributes_in_different_jobs_stay_distinct():
    acts = [NodeSpec(NodeKind.PROV_ACTIVITY, (PROV_ACTIVITY,), concept="step", attributes={"job": j, "n": "1"})
            for j in ("a", "b", "a")]
    doc = Emitter().emit(acts, "urn:g")
    assert doc.kind_counts()["ProvActivity"] == 2
