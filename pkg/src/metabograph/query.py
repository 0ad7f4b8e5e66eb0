"""Competency-question suite and SPARQL endpoint access.

The four query bodies ship as ``queries/cq*.rq`` exactly as published; a
PREFIX block built from the namespace registry is prepended at run time.
Queries run against the default graph. The embedded store keeps it equal to
the set union of the named graphs (a union view would repeat a triple once
per graph holding it, inflating non-DISTINCT counts); a remote endpoint must
be configured with a union default graph of its own.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import os
import re
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .emitter import TripleDoc, serialize
from .errors import EmptyQuery, EndpointUnreachable, LoadMismatch, QueryFailure
from .vocab import XSD, NamespaceRegistry, default_registry, plain_decimal


class CqId(enum.Enum):
    CQ1 = "CQ1"
    CQ2 = "CQ2"
    CQ3 = "CQ3"
    CQ4 = "CQ4"


DESCRIPTIONS = {
    CqId.CQ1: "annotations and samples reachable per collection title, with an example source taxon",
    CqId.CQ2: "mean MQScore and shared peaks per collection title",
    CqId.CQ3: "co-occurring ClassyFire class / NPClassifier pathway pairs",
    CqId.CQ4: "sample types in which a compound was annotated in more than three studies",
}
EXPECTED_SHAPE = {
    CqId.CQ1: ("title", "nAnn", "nSamp", "taxonExample"),
    CqId.CQ2: ("title", "avgMQ", "avgSharedPeaks", "n"),
    CqId.CQ3: ("cfClassLabel", "npcPathwayLabel", "n"),
    CqId.CQ4: ("sampleType", "ik", "nSamples", "nStudies"),
}
# variables a caller may pin with a VALUES block
PARAMETERS = {CqId.CQ1: ("title",), CqId.CQ2: ("title",), CqId.CQ3: ("cfClassLabel", "npcPathwayLabel"),
              CqId.CQ4: ("ik", "sampleType")}

_PREFIX_USE = re.compile(r"(?<![\w/<\"])([A-Za-z][\w-]*):(?=[\w(])")


def prefix_block(body: str, namespaces: Optional[NamespaceRegistry] = None) -> str:
    ns = namespaces or default_registry()
    used = sorted({m.group(1) for m in _PREFIX_USE.finditer(body)} & set(ns.entries))
    return "".join(f"PREFIX {p}: <{ns[p]}>\n" for p in used)


@dataclass(frozen=True)
class CqSpec:
    id: CqId
    template: str
    expected_shape: tuple[str, ...]
    description: str = ""

    def __post_init__(self):
        if not self.template.strip():
            raise EmptyQuery(f"{self.id.value} has an empty template")

    @classmethod
    def load(cls, cq: Union[str, CqId]) -> "CqSpec":
        cid = CqId(cq.upper()) if isinstance(cq, str) else cq
        body = resources.files("metabograph.queries").joinpath(f"{cid.value.lower()}.rq").read_text("utf-8")
        return cls(cid, body, EXPECTED_SHAPE[cid], DESCRIPTIONS[cid])

    def render(self, params: Optional[Mapping[str, Union[str, Sequence[str]]]] = None,
               namespaces: Optional[NamespaceRegistry] = None) -> str:
        """Prefix block + template verbatim, plus a trailing VALUES block for params."""
        text = prefix_block(self.template, namespaces) + self.template
        if params:
            allowed = PARAMETERS[self.id]
            names, columns = [], []
            for var, values in sorted(params.items()):
                if var not in allowed:
                    raise ValueError(f"{self.id.value} takes no parameter {var!r} (allowed: {', '.join(allowed)})")
                names.append(f"?{var}")
                columns.append([values] if isinstance(values, str) else list(values))
            # a query allows one trailing VALUES block: pin all variables at once
            rows = " ".join("(" + " ".join(_value_term(v) for v in row) + ")" for row in product(*columns))
            text += f"VALUES ({' '.join(names)}) {{ {rows} }}\n"
        return text


def all_cqs() -> list[CqSpec]:
    return [CqSpec.load(c) for c in CqId]


def _value_term(value: str) -> str:
    if value.startswith("http://") or value.startswith("https://"):
        return f"<{value}>"
    return json.dumps(value, ensure_ascii=False)


# --- result typing --------------------------------------------------------

_NUMERIC = {XSD + "integer": int, XSD + "int": int, XSD + "long": int, XSD + "decimal": Decimal,
            XSD + "double": float, XSD + "float": float}


def _typed(kind: str, value: str, datatype: Optional[str]):
    if kind == "uri":
        return value
    conv = _NUMERIC.get(datatype or "")
    if conv is None:
        return value
    return conv(value)


@dataclass
class ResultTable:
    variables: list[str]
    rows: list[tuple]

    def to_tsv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(self.variables)
        for row in self.rows:
            w.writerow(["" if v is None else _fmt(v) for v in row])
        return buf.getvalue()

    def records(self) -> list[dict]:
        return [dict(zip(self.variables, row)) for row in self.rows]


def _fmt(value) -> str:
    if isinstance(value, Decimal):
        return plain_decimal(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# --- endpoints --------------------------------------------------------------

class Endpoint:
    name = "endpoint"

    def select(self, query: str) -> ResultTable:
        raise NotImplementedError

    def load_doc(self, doc: TripleDoc) -> None:
        raise NotImplementedError

    def after_load(self) -> None:
        """Hook run once after a batch of loads."""

    def graph_count(self, graph: str) -> int:
        table = self.select(f"SELECT (COUNT(*) AS ?n) WHERE {{ GRAPH <{graph}> {{ ?s ?p ?o }} }}")
        return int(table.rows[0][0]) if table.rows else 0

    def graphs(self) -> dict[str, int]:
        table = self.select("SELECT ?g (COUNT(*) AS ?n) WHERE { GRAPH ?g { ?s ?p ?o } } GROUP BY ?g")
        return {g: int(n) for g, n in table.rows}


class EmbeddedEndpoint(Endpoint):
    """In-process store; persistent when given a directory."""

    name = "embedded"

    def __init__(self, path: Union[str, Path, None] = None):
        import pyoxigraph as ox

        self._ox = ox
        self.path = Path(path) if path else None
        if self.path:
            self.path.mkdir(parents=True, exist_ok=True)
        self.store = ox.Store(str(self.path)) if self.path else ox.Store()

    def select(self, query: str) -> ResultTable:
        ox = self._ox
        try:
            result = self.store.query(query)
        except (SyntaxError, ValueError, OSError) as exc:
            raise QueryFailure(f"embedded store rejected the query: {exc}") from exc
        variables = [v.value for v in result.variables]
        rows = []
        for sol in result:
            row = []
            for var in variables:
                term = sol[var]
                if term is None:
                    row.append(None)
                elif isinstance(term, ox.Literal):
                    row.append(_typed("literal", term.value, term.datatype.value))
                else:
                    row.append(term.value)
            rows.append(tuple(row))
        return ResultTable(variables, rows)

    def load_doc(self, doc: TripleDoc) -> None:
        graph = self._ox.NamedNode(doc.graph_name)
        if self.store.contains_named_graph(graph):
            self.store.remove_graph(graph)
        self.store.bulk_load(serialize(doc, "nt"), format=self._ox.RdfFormat.N_TRIPLES, to_graph=graph)
        if self.path:
            self.store.flush()

    def after_load(self) -> None:
        self.store.update("CLEAR SILENT DEFAULT ; INSERT { ?s ?p ?o } WHERE { GRAPH ?g { ?s ?p ?o } }")
        if self.path:
            self.store.flush()

    def graph_count(self, graph: str) -> int:
        return sum(1 for _ in self.store.quads_for_pattern(None, None, None, self._ox.NamedNode(graph)))


class RemoteEndpoint(Endpoint):
    """SPARQL 1.1 protocol for queries, Graph Store protocol for loads."""

    def __init__(self, query_url: str, store_url: Optional[str] = None, timeout: float = 60.0,
                 session=None):
        import requests

        self._requests = requests
        self.name = self.query_url = query_url
        self.store_url = store_url or _guess_store_url(query_url)
        self.timeout = timeout
        self.session = session or requests.Session()

    def _call(self, method: str, url: str, **kw):
        try:
            resp = self.session.request(method, url, timeout=self.timeout, **kw)
        except self._requests.RequestException as exc:
            raise EndpointUnreachable(
                f"{url} unreachable ({exc.__class__.__name__}); check the URL, or retry once the "
                f"endpoint is up, or use --endpoint embedded") from exc
        if resp.status_code >= 400:
            raise QueryFailure(f"{method} {url} -> HTTP {resp.status_code}: {resp.text[:500]}")
        return resp

    def select(self, query: str) -> ResultTable:
        resp = self._call("POST", self.query_url, data={"query": query},
                          headers={"Accept": "application/sparql-results+json"})
        try:
            body = resp.json()
            variables = body["head"]["vars"]
            bindings = body["results"]["bindings"]
        except (ValueError, KeyError) as exc:
            raise QueryFailure(f"unexpected SPARQL results payload: {exc}") from exc
        rows = []
        for b in bindings:
            row = []
            for var in variables:
                cell = b.get(var)
                row.append(None if cell is None else _typed(cell["type"], cell["value"], cell.get("datatype")))
            rows.append(tuple(row))
        return ResultTable(variables, rows)

    def load_doc(self, doc: TripleDoc) -> None:
        params = {"graph": doc.graph_name}
        self._call("PUT", self.store_url, params=params, data=serialize(doc, "nt"),
                   headers={"Content-Type": "application/n-triples"})


def _guess_store_url(query_url: str) -> str:
    # Fuseki layout: /<dataset>/sparql or /<dataset>/query next to /<dataset>/data
    base, _, last = query_url.rstrip("/").rpartition("/")
    if last in ("sparql", "query"):
        return f"{base}/data"
    return query_url


def open_endpoint(spec: str, store_path: Union[str, Path, None] = None,
                  store_url: Optional[str] = None) -> Endpoint:
    """``embedded`` (optionally persisted at store_path) or an http(s) query URL."""
    if spec in ("", "embedded"):
        return EmbeddedEndpoint(store_path)
    if spec.startswith("http://") or spec.startswith("https://"):
        return RemoteEndpoint(spec, store_url)
    raise ValueError(f"endpoint must be 'embedded' or an http(s) URL, got {spec!r}")


# --- load / run -------------------------------------------------------------

@dataclass
class LoadReport:
    graphs: dict[str, int] = field(default_factory=dict)  # graph -> triples after load

    def to_tsv(self) -> str:
        return "graph\ttriples\n" + "".join(f"{g}\t{n}\n" for g, n in sorted(self.graphs.items()))


def load_endpoint(docs: Iterable[TripleDoc], endpoint: Endpoint) -> LoadReport:
    """Replace each named graph by its doc and check the stored count."""
    merged: dict[str, TripleDoc] = {}
    for doc in docs:
        merged[doc.graph_name] = merged[doc.graph_name] | doc if doc.graph_name in merged else doc
    report = LoadReport()
    for name in sorted(merged):
        doc = merged[name]
        endpoint.load_doc(doc)
        stored = endpoint.graph_count(name)
        if stored != len(doc):
            raise LoadMismatch(f"graph {name}: loaded {len(doc)} triples, endpoint holds {stored}")
        report.graphs[name] = stored
    endpoint.after_load()
    return report


@dataclass
class RunManifest:
    cq: str
    endpoint: str
    query_sha256: str
    graphs: dict[str, int]
    rows: int
    elapsed_s: float
    timestamp: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp for reproducible artifacts
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def run_cq(spec: Union[CqSpec, str, CqId], endpoint: Endpoint, params: Optional[Mapping] = None,
           out_dir: Union[str, Path, None] = None,
           namespaces: Optional[NamespaceRegistry] = None) -> tuple[ResultTable, RunManifest]:
    spec = spec if isinstance(spec, CqSpec) else CqSpec.load(spec)
    query = spec.render(params, namespaces)
    start = time.perf_counter()
    table = endpoint.select(query)
    elapsed = time.perf_counter() - start
    if tuple(table.variables) != spec.expected_shape:
        raise QueryFailure(f"{spec.id.value}: got variables {table.variables}, expected {list(spec.expected_shape)}")
    manifest = RunManifest(spec.id.value, endpoint.name, hashlib.sha256(query.encode()).hexdigest(),
                           endpoint.graphs(), len(table.rows), round(elapsed, 6), _timestamp(),
                           {k: v for k, v in sorted((params or {}).items())})
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = spec.id.value.lower()
        (out / f"{stem}.tsv").write_text(table.to_tsv(), encoding="utf-8")
        (out / f"{stem}.manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return table, manifest
