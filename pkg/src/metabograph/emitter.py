"""NodeSpec -> triples.

Value nodes merge on (types, datatype, lexical), named individuals on
(class, normalized label). PROV entities and activities never merge: their
IRIs come from their full attribute set, so two workflows that only differ by
job or collection keep separate trails. No blank nodes, no inverse SIO
relations.
"""
from __future__ import annotations

import re
from collections import Counter
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union
from urllib.parse import urlparse

from .errors import InvalidSpec, IOFailure
from .identifiers import DEFAULT_GLOBAL_PREFIX, Uai, UriSpec, individual_iri, mint_uri, uai_serialize
from .vocab import (
    DCAT_ACCESS_URL, DCAT_DATASET, DCAT_DISTRIBUTION, DCAT_DISTRIBUTION_PROP, DCAT_DOWNLOAD_URL,
    DCT_IDENTIFIER, DCT_PUBLISHER, DCT_TITLE, MBS_UAI, PROV_ENTITY, PROV_VALUE, RDF_TYPE, RDFS_LABEL,
    SIO_HAS_IDENTIFIER, XSD_STRING, Iri, NamespaceRegistry, NodeKind, NodeSpec, OntologyTermRef, T,
    TypedLiteral, default_registry, expand, normalize_label,
)

Triple = tuple[str, str, str]

OWL_NAMED_INDIVIDUAL = T("owl:NamedIndividual")

UAI_PROPERTIES = {
    "collection_id": T("MBS:collectionID"),
    "mzml": T("MBS:mzML"),
    "scan": T("MBS:scan"),
    "annotation_file": T("MBS:annotationFile"),
    "hit_number": T("MBS:hitNumber"),
    "feature_id": T("MBS:featureID"),
    "feature_table": T("MBS:featureTable"),
}
UAI_STRING = T("MBS:uaiString")
# components stored as links to file/collection nodes rather than literals
_FILE_COMPONENTS = {"mzml", "annotation_file", "feature_table"}

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t", "\b": "\\b", "\f": "\\f"}
_NEEDS_ESCAPE = re.compile(r'[\\"\x00-\x1f\x7f]')


def _escape_char(m: re.Match) -> str:
    ch = m.group(0)
    return _ESCAPES.get(ch) or f"\\u{ord(ch):04X}"


def iri_term(iri: str) -> str:
    return f"<{iri}>"


def literal_term(lexical: str, datatype: str = XSD_STRING) -> str:
    body = _NEEDS_ESCAPE.sub(_escape_char, lexical)
    if datatype == XSD_STRING:
        return f'"{body}"'
    return f'"{body}"^^<{datatype}>'


@lru_cache(maxsize=65536)
def collection_iri(collection_id: str, global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> str:
    return mint_uri("collection", {"collection": collection_id}, global_prefix=global_prefix).uri


@lru_cache(maxsize=65536)
def file_iri(collection_id: Optional[str], filename: str, global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> str:
    attrs = {"filename": filename}
    if collection_id:
        attrs["collection"] = collection_id
    return mint_uri("file", attrs, global_prefix=global_prefix).uri


def uai_iri(uai: Uai, global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> str:
    return mint_uri("uai", {k: str(v) for k, v in uai.components().items()}, global_prefix=global_prefix).uri


def graph_iri(kind: str, global_prefix: str = DEFAULT_GLOBAL_PREFIX, **attributes: str) -> str:
    return mint_uri("graph", {"kind": kind, **attributes}, global_prefix=global_prefix).uri


def _slug(term: OntologyTermRef) -> str:
    local = re.sub(r"[^a-z0-9]+", "-", term.local_id.lower()).strip("-")
    if not local or local[0].isdigit():
        local = f"{term.prefix.lower()}-{local}".strip("-")
    return local


def _stem(term: OntologyTermRef) -> str:
    return re.sub(r"[^a-z0-9]+", "", term.local_id.lower()) or term.prefix.lower()


@dataclass
class DedupRegistry:
    """Merge keys -> IRIs for value nodes and named individuals.

    IRIs are derived from the keys, so two registries built independently
    always agree and merging them is a plain union.
    """

    value_nodes: dict[str, str] = field(default_factory=dict)
    named_individuals: dict[str, str] = field(default_factory=dict)
    lookups: Counter = field(default_factory=Counter)

    def merge(self, other: "DedupRegistry") -> "DedupRegistry":
        for mine, theirs in ((self.value_nodes, other.value_nodes),
                             (self.named_individuals, other.named_individuals)):
            for key, iri in theirs.items():
                if mine.setdefault(key, iri) != iri:
                    raise AssertionError(f"registry merge conflict on {key!r}")
        self.lookups.update(other.lookups)
        return self


@dataclass
class TripleDoc:
    graph_name: str
    triples: set[Triple] = field(default_factory=set)
    node_kinds: dict[str, NodeKind] = field(default_factory=dict)
    labels: dict[str, str] = field(default_factory=dict, repr=False)  # subject term -> label term

    def __len__(self) -> int:
        return len(self.triples)

    def add(self, s: str, p: str, o: str) -> None:
        self.triples.add((s, p, o))

    def update(self, triples: Iterable[Triple]) -> None:
        self.triples.update(triples)

    def sorted(self) -> list[Triple]:
        return sorted(self.triples)

    def predicate_counts(self) -> Counter:
        return Counter(p for _, p, _ in self.triples)

    def kind_counts(self) -> Counter:
        return Counter(k.value for k in self.node_kinds.values())

    def __or__(self, other: "TripleDoc") -> "TripleDoc":
        out = TripleDoc(self.graph_name, self.triples | other.triples, {**self.node_kinds, **other.node_kinds})
        return out


class Emitter:
    def __init__(self, registry: Optional[DedupRegistry] = None,
                 namespaces: Optional[NamespaceRegistry] = None,
                 global_prefix: str = DEFAULT_GLOBAL_PREFIX):
        self.registry = registry if registry is not None else DedupRegistry()
        self.ns = namespaces or default_registry()
        self.global_prefix = global_prefix
        self._term_cache: dict[OntologyTermRef, str] = {}
        self._type = self.t(RDF_TYPE)
        self._individual_ns = self.ns["MBS"]

    def t(self, term: OntologyTermRef) -> str:
        """N-Triples form of an ontology term."""
        out = self._term_cache.get(term)
        if out is None:
            out = self._term_cache[term] = iri_term(expand(term, self.ns))
        return out

    def node_iri(self, spec: NodeSpec) -> str:
        if spec.kind.is_prov:
            if spec.iri:
                return spec.iri
            return mint_uri(spec.concept, spec.attributes, global_prefix=self.global_prefix).uri
        key = spec.dedup_key(self.ns)
        if spec.kind is NodeKind.VALUE_NODE:
            table = self.registry.value_nodes
            iri = table.get(key)
            if iri is None:
                first = min(spec.types, key=lambda t: expand(t, self.ns))
                iri = spec.iri or mint_uri(_slug(first), {"key": key}, global_prefix=self.global_prefix).uri
                table[key] = iri
        else:
            table = self.registry.named_individuals
            iri = table.get(key)
            if iri is None:
                cls = spec.types[0]
                iri = spec.iri or individual_iri(self._individual_ns, spec.iri_stem or _stem(cls),
                                                 expand(cls, self.ns), normalize_label(spec.label or spec.iri))
                table[key] = iri
        self.registry.lookups[spec.kind.value] += 1
        return iri

    def emit(self, specs: Iterable[NodeSpec], graph_name: str) -> TripleDoc:
        doc = TripleDoc(graph_name)
        done: dict[int, str] = {}
        for spec in specs:
            self._emit_node(spec, doc, done)
        return doc

    def _target(self, target, doc: TripleDoc, done: dict) -> str:
        if isinstance(target, NodeSpec):
            return iri_term(self._emit_node(target, doc, done))
        if isinstance(target, OntologyTermRef):
            return self.t(target)
        if isinstance(target, TypedLiteral):
            return literal_term(target.lexical, target.datatype)
        if isinstance(target, Iri):
            return iri_term(target)
        raise InvalidSpec(f"unsupported edge target {target!r}")

    def _emit_node(self, spec: NodeSpec, doc: TripleDoc, done: dict) -> str:
        cached = done.get(id(spec))
        if cached is not None:
            return cached
        if not isinstance(spec, NodeSpec):
            raise InvalidSpec(f"expected NodeSpec, got {type(spec).__name__}")
        iri = self.node_iri(spec)
        done[id(spec)] = iri
        previous = doc.node_kinds.get(iri)
        if previous is not None and previous is not spec.kind:
            raise InvalidSpec(f"{iri} emitted as both {previous.value} and {spec.kind.value}")
        if previous is not None and not spec.kind.is_prov:
            # merged node: its triples are a function of the key, except the label
            # spelling, where the smallest variant wins so input order does not matter
            if spec.label:
                self._relabel(doc, iri, spec.label)
            return iri
        doc.node_kinds[iri] = spec.kind
        s = iri_term(iri)
        add = doc.triples.add
        for ty in spec.types:
            add((s, self._type, self.t(ty)))
        if spec.kind is NodeKind.VALUE_NODE:
            add((s, self.t(PROV_VALUE), literal_term(spec.value.lexical, spec.value.datatype)))
        elif spec.kind is NodeKind.NAMED_INDIVIDUAL:
            add((s, self._type, self.t(OWL_NAMED_INDIVIDUAL)))
        if spec.label:
            add((s, self.t(RDFS_LABEL), literal_term(spec.label)))
            doc.labels[s] = literal_term(spec.label)
        for pred, target in spec.edges:
            add((s, self.t(pred), self._target(target, doc, done)))
        if spec.uai is not None:
            add((s, self.t(SIO_HAS_IDENTIFIER), iri_term(self.emit_uai(spec.uai, doc))))
        return iri

    def _relabel(self, doc: TripleDoc, iri: str, label: str) -> None:
        s, new = iri_term(iri), literal_term(label)
        old = doc.labels.get(s)
        if old is not None and new < old:
            p = self.t(RDFS_LABEL)
            doc.triples.discard((s, p, old))
            doc.triples.add((s, p, new))
            doc.labels[s] = new

    def emit_uai(self, uai: Uai, doc: TripleDoc) -> str:
        iri = uai_iri(uai, self.global_prefix)
        s = iri_term(iri)
        doc.node_kinds[iri] = NodeKind.PROV_ENTITY
        add = doc.triples.add
        add((s, self._type, self.t(PROV_ENTITY)))
        add((s, self._type, self.t(MBS_UAI)))
        add((s, self.t(UAI_STRING), literal_term(uai_serialize(uai))))
        for name, value in uai.components().items():
            pred = self.t(UAI_PROPERTIES[name])
            if name == "collection_id":
                add((s, pred, iri_term(self._collection_node(value, doc))))
            elif name in _FILE_COMPONENTS:
                f = file_iri(uai.collection_id, value, self.global_prefix)
                doc.node_kinds[f] = NodeKind.PROV_ENTITY
                add((iri_term(f), self._type, self.t(PROV_ENTITY)))
                add((iri_term(f), self._type, self.t(DCAT_DISTRIBUTION)))
                add((iri_term(f), self.t(DCT_TITLE), literal_term(value)))
                add((s, pred, iri_term(f)))
            elif name == "hit_number":
                add((s, pred, literal_term(str(value), "http://www.w3.org/2001/XMLSchema#integer")))
            else:
                add((s, pred, literal_term(str(value))))
        return iri

    def _collection_node(self, collection_id: str, doc: TripleDoc) -> str:
        iri = collection_iri(collection_id, self.global_prefix)
        s = iri_term(iri)
        doc.node_kinds[iri] = NodeKind.PROV_ENTITY
        doc.triples.add((s, self._type, self.t(PROV_ENTITY)))
        doc.triples.add((s, self._type, self.t(DCAT_DATASET)))
        doc.triples.add((s, self.t(DCT_IDENTIFIER), literal_term(collection_id)))
        return iri


def emit(specs: Iterable[NodeSpec], registry: DedupRegistry, graph_name: str,
         namespaces: Optional[NamespaceRegistry] = None,
         global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> TripleDoc:
    return Emitter(registry, namespaces, global_prefix).emit(specs, graph_name)


@dataclass(frozen=True)
class DistributionSpec:
    file_iri: Union[UriSpec, str]
    title: str
    locator: str
    repository: Optional[str] = None

    def __post_init__(self):
        if not self.locator:
            raise ValueError("distribution locator must be non-empty")


def is_remote(locator: str) -> bool:
    return urlparse(locator).scheme in ("http", "https", "ftp")


def attach_distribution(entity_iri: str, dist: DistributionSpec,
                        namespaces: Optional[NamespaceRegistry] = None) -> list[Triple]:
    ns = namespaces or default_registry()

    def t(term):
        return iri_term(expand(term, ns))

    d = iri_term(str(dist.file_iri))
    if is_remote(dist.locator):
        locator = (t(DCAT_DOWNLOAD_URL), iri_term(dist.locator))
    else:
        path = Path(dist.locator)
        url = path.as_uri() if path.is_absolute() else path.as_posix()
        locator = (t(DCAT_ACCESS_URL), iri_term(url))
    out = [
        (iri_term(entity_iri), t(DCAT_DISTRIBUTION_PROP), d),
        (d, t(RDF_TYPE), t(DCAT_DISTRIBUTION)),
        (d, t(DCT_TITLE), literal_term(dist.title)),
        (d, *locator),
    ]
    if dist.repository:
        out.append((d, t(DCT_PUBLISHER), literal_term(dist.repository)))
    return out


# --- serialization --------------------------------------------------------

_PN_LOCAL = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?$")


def _turtle_term(term: str, prefixes: list[tuple[str, str]]) -> str:
    if term.startswith("<"):
        iri = term[1:-1]
        for prefix, ns in prefixes:
            if iri.startswith(ns) and _PN_LOCAL.match(iri[len(ns):]):
                return f"{prefix}:{iri[len(ns):]}"
        return term
    if term.endswith(">") and '"^^<' in term:
        lex, _, dt = term.rpartition("^^")
        return f"{lex}^^{_turtle_term(dt, prefixes)}"
    return term


def _turtle_body(triples: list[Triple], prefixes: list[tuple[str, str]], indent: str = "") -> list[str]:
    lines = []
    current = None
    for s, p, o in triples:
        p_out = "a" if p == "<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>" else _turtle_term(p, prefixes)
        if s != current:
            if current is not None:
                lines[-1] += " ."
            lines.append(f"{indent}{_turtle_term(s, prefixes)} {p_out} {_turtle_term(o, prefixes)}")
            current = s
        else:
            lines[-1] += " ;"
            lines.append(f"{indent}    {p_out} {_turtle_term(o, prefixes)}")
    if lines:
        lines[-1] += " ."
    return lines


def serialize(doc: TripleDoc, format: str = "nt", namespaces: Optional[NamespaceRegistry] = None) -> bytes:
    triples = doc.sorted()
    fmt = format.lower()
    if fmt in ("nt", "ntriples", "n-triples"):
        return "".join(f"{s} {p} {o} .\n" for s, p, o in triples).encode("utf-8")
    ns = namespaces or default_registry()
    # longest namespace first, so MS_ never shadows a longer match
    prefixes = sorted(ns.entries.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    header = [f"@prefix {p}: <{iri}> ." for p, iri in sorted(ns.entries.items())]
    if fmt in ("ttl", "turtle"):
        body = _turtle_body(triples, prefixes)
        return ("\n".join(header + [""] + body) + "\n").encode("utf-8")
    if fmt == "trig":
        body = _turtle_body(triples, prefixes, indent="    ")
        return ("\n".join(header + ["", f"<{doc.graph_name}> {{"] + body + ["}"]) + "\n").encode("utf-8")
    raise ValueError(f"unknown serialization format {format!r}")


EXTENSIONS = {"nt": ".nt", "ttl": ".ttl", "trig": ".trig"}


def write(doc: TripleDoc, path: Union[str, Path], format: str = "nt",
          namespaces: Optional[NamespaceRegistry] = None) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(serialize(doc, format, namespaces))
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc
    return path


def stats_rows(doc: TripleDoc, registry: Optional[DedupRegistry] = None,
               namespaces: Optional[NamespaceRegistry] = None) -> list[tuple[str, str, int]]:
    ns = namespaces or default_registry()
    rows = [("triples", "total", len(doc))]
    for p, n in sorted(doc.predicate_counts().items()):
        rows.append(("predicate", ns.curie(p[1:-1]), n))
    for k, n in sorted(doc.kind_counts().items()):
        rows.append(("node_kind", k, n))
    if registry is not None:
        for kind, table in (("ValueNode", registry.value_nodes), ("NamedIndividual", registry.named_individuals)):
            looked_up = registry.lookups.get(kind, 0)
            rows.append(("dedup_saved", kind, max(looked_up - len(table), 0)))
    return rows


def parse_ntriples(data: bytes, graph_name: str) -> TripleDoc:
    """Read N-Triples back into a TripleDoc using the embedded store's parser."""
    import pyoxigraph as ox

    doc = TripleDoc(graph_name)
    for q in ox.parse(data, format=ox.RdfFormat.N_TRIPLES):
        doc.add(str(q.subject), str(q.predicate), _ox_term(q.object))
    return doc


def _ox_term(term) -> str:
    import pyoxigraph as ox

    if isinstance(term, ox.Literal):
        return literal_term(term.value, term.datatype.value)
    return str(term)
