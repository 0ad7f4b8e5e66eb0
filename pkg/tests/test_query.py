import hashlib
import json
from decimal import Decimal

import pytest
import requests

from metabograph.emitter import TripleDoc, literal_term
from metabograph.errors import EmptyQuery, EndpointUnreachable, LoadMismatch, QueryFailure
from metabograph.query import (
    EXPECTED_SHAPE, CqId, CqSpec, EmbeddedEndpoint, Endpoint, RemoteEndpoint, ResultTable, all_cqs,
    load_endpoint, open_endpoint, prefix_block, run_cq,
)

FROZEN = {
    CqId.CQ1: "fddabbd33521b558b42100ae8bc44eb10a8699cc106c601a286df0d15a96d328",
    CqId.CQ2: "b9003de7383f30a7f19d9d6ef41ef1e1cc662a51959270bb3ac3556af2a9c438",
    CqId.CQ3: "637da8fb1adab0dbc2aa1c8217e0f9a48844a3886bf807b9e753f7aa60a113f3",
    CqId.CQ4: "04ed03a81fa5b19c432ac1d512d2805929b41fba5fdd67d52a9eb8d3b6ab87e0",
}


@pytest.mark.parametrize("cid", list(CqId))
def test_templates_are_frozen(cid):
    spec = CqSpec.load(cid)
    assert hashlib.sha256(spec.template.encode()).hexdigest() == FROZEN[cid]
    assert spec.expected_shape == EXPECTED_SHAPE[cid]


def test_prefix_block_only_declares_used_prefixes():
    block = prefix_block("SELECT * WHERE { ?s a MBS:Thing ; SIO:000008 ?o . FILTER(STRSTARTS(STR(?o), 'http:x')) }")
    assert block.splitlines() == ["PREFIX MBS: <https://ns.inria.fr/metaboKG/schema/>",
                                  "PREFIX SIO: <http://semanticscience.org/resource/>"]


def test_render_appends_one_values_block():
    spec = CqSpec.load("cq4")
    text = spec.render({"ik": ["A", "B"], "sampleType": "https://x.org/t"})
    assert text.endswith('VALUES (?ik ?sampleType) { ("A" <https://x.org/t>) ("B" <https://x.org/t>) }\n')
    assert spec.template in text
    with pytest.raises(ValueError):
        spec.render({"title": "x"})
    with pytest.raises(EmptyQuery):
        CqSpec(CqId.CQ1, "  ", ())


def test_result_table_tsv():
    t = ResultTable(["a", "b", "c"], [("x", Decimal("0.50"), None), ("y", 2, 1.5)])
    assert t.to_tsv() == "a\tb\tc\nx\t0.5\t\ny\t2\t1.5\n"
    assert t.records()[1] == {"a": "y", "b": 2, "c": 1.5}


def _doc(graph, triples):
    return TripleDoc(graph, set(triples))


T1 = ("<urn:s>", "<urn:p>", literal_term("1", "http://www.w3.org/2001/XMLSchema#integer"))


def test_default_graph_is_a_set_union():
    ep = EmbeddedEndpoint()
    report = load_endpoint([_doc("urn:g1", [T1]), _doc("urn:g2", [T1, ("<urn:s>", "<urn:p>", "<urn:o>")])], ep)
    assert report.graphs == {"urn:g1": 1, "urn:g2": 2}
    rows = ep.select("SELECT ?o WHERE { <urn:s> <urn:p> ?o }").rows
    assert sorted(map(str, (r[0] for r in rows))) == ["1", "urn:o"]
    # reloading replaces a graph rather than appending
    load_endpoint([_doc("urn:g2", [T1])], ep)
    assert ep.graphs() == {"urn:g1": 1, "urn:g2": 1}
    assert len(ep.select("SELECT * WHERE { ?s ?p ?o }").rows) == 1


def test_persistent_store_survives_reopen(tmp_path):
    ep = EmbeddedEndpoint(tmp_path / "store")
    load_endpoint([_doc("urn:g1", [T1])], ep)
    del ep
    assert EmbeddedEndpoint(tmp_path / "store").graphs() == {"urn:g1": 1}


def test_query_errors():
    with pytest.raises(QueryFailure):
        EmbeddedEndpoint().select("SELEKT nonsense")


class Lossy(Endpoint):
    name = "lossy"

    def load_doc(self, doc):
        pass

    def graph_count(self, graph):
        return 0


def test_load_mismatch():
    with pytest.raises(LoadMismatch):
        load_endpoint([_doc("urn:g", [T1])], Lossy())


def test_run_cq_writes_table_and_manifest(endpoint, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    table, manifest = run_cq("CQ3", endpoint, out_dir=tmp_path)
    assert (tmp_path / "cq3.tsv").read_text() == table.to_tsv()
    saved = json.loads((tmp_path / "cq3.manifest.json").read_text())
    assert saved["timestamp"] == "1970-01-01T00:00:00Z" and saved["rows"] == len(table.rows)
    assert saved["query_sha256"] == hashlib.sha256(CqSpec.load("CQ3").render().encode()).hexdigest()


def test_all_cqs_run_on_the_fixture(endpoint):
    for spec in all_cqs():
        table, _ = run_cq(spec, endpoint)
        assert tuple(table.variables) == spec.expected_shape and table.rows


class FakeResponse:
    def __init__(self, status=200, payload=None, text=""):
        self.status_code, self.payload, self.text = status, payload, text

    def json(self):
        return self.payload


class FakeSession:
    def __init__(self, response=None, exc=None):
        self.response, self.exc, self.calls = response, exc, []

    def request(self, method, url, **kw):
        self.calls.append((method, url, kw))
        if self.exc:
            raise self.exc
        return self.response


def test_remote_endpoint_protocols():
    payload = {"head": {"vars": ["n", "s"]}, "results": {"bindings": [
        {"n": {"type": "literal", "value": "3", "datatype": "http://www.w3.org/2001/XMLSchema#integer"},
         "s": {"type": "uri", "value": "urn:x"}}, {}]}}
    session = FakeSession(FakeResponse(200, payload))
    ep = RemoteEndpoint("http://localhost:3030/kg/sparql", session=session)
    assert ep.store_url == "http://localhost:3030/kg/data"
    assert ep.select("SELECT ...").rows == [(3, "urn:x"), (None, None)]
    ep.load_doc(_doc("urn:g", [T1]))
    method, url, kw = session.calls[-1]
    assert (method, url, kw["params"]) == ("PUT", "http://localhost:3030/kg/data", {"graph": "urn:g"})
    assert kw["headers"]["Content-Type"] == "application/n-triples"


def test_remote_endpoint_failures():
    down = RemoteEndpoint("http://nowhere/sparql", session=FakeSession(exc=requests.ConnectionError("refused")))
    with pytest.raises(EndpointUnreachable, match="--endpoint embedded"):
        down.select("SELECT * {}")
    with pytest.raises(QueryFailure):
        RemoteEndpoint("http://x/sparql", session=FakeSession(FakeResponse(400, text="bad"))).select("x")
    with pytest.raises(QueryFailure):
        RemoteEndpoint("http://x/sparql", session=FakeSession(FakeResponse(200, {"head": {}}))).select("x")


def test_open_endpoint(tmp_path):
    assert isinstance(open_endpoint("embedded"), EmbeddedEndpoint)
    assert isinstance(open_endpoint("https://x.org/q", store_url="https://x.org/d"), RemoteEndpoint)
    with pytest.raises(ValueError):
        open_endpoint("ftp://x")
