"""Post-hoc linkage of UAI nodes that share identifier components.

Two UAIs from different batches are linked at the most specific tier whose
components they share with equal values. Only the components the tiers talk
about are checked for conflicts: two jobs over the same run legitimately
disagree on annotation file and hit rank.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .emitter import UAI_STRING, TripleDoc, graph_iri, iri_term
from .errors import MalformedUai
from .identifiers import DEFAULT_GLOBAL_PREFIX, Uai, uai_parse
from .vocab import NamespaceRegistry, OntologyTermRef, T, default_registry, expand

MBS_SHARES_FEATURE = T("MBS:sharesFeature")
MBS_SHARES_RUN = T("MBS:sharesRun")
MBS_SHARES_COLLECTION = T("MBS:sharesCollection")


@dataclass(frozen=True)
class LinkTier:
    name: str
    components: frozenset
    predicate: OntologyTermRef


@dataclass(frozen=True)
class LinkRule:
    tiers: tuple[LinkTier, ...] = (
        LinkTier("feature", frozenset({"collection_id", "mzml", "feature_id"}), MBS_SHARES_FEATURE),
        LinkTier("run", frozenset({"collection_id", "mzml"}), MBS_SHARES_RUN),
        LinkTier("collection", frozenset({"collection_id"}), MBS_SHARES_COLLECTION),
    )

    def __post_init__(self):
        if not self.tiers:
            raise ValueError("a link rule needs at least one tier")
        for i, a in enumerate(self.tiers):
            for b in self.tiers[i + 1:]:
                if not (b.components < a.components or not (a.components & b.components)):
                    raise ValueError(f"tier {b.name!r} must be nested in or disjoint from {a.name!r}")
        if len({t.predicate for t in self.tiers}) != len(self.tiers):
            raise ValueError("each tier needs its own predicate")

    @property
    def checked(self) -> frozenset:
        return frozenset().union(*(t.components for t in self.tiers))

    def tier_for(self, a: Uai, b: Uai) -> Optional[LinkTier]:
        ca, cb = a.components(), b.components()
        for name in self.checked:
            if name in ca and name in cb and ca[name] != cb[name]:
                return None
        shared = {k for k in self.checked if k in ca and k in cb}
        for tier in self.tiers:
            if tier.components <= shared:
                return tier
        return None


def _plain_literal(term: str) -> str:
    # our emitter writes xsd:string literals plain, with JSON-compatible escapes
    return json.loads(term)


def uai_nodes(doc: TripleDoc, namespaces: Optional[NamespaceRegistry] = None) -> dict[str, Uai]:
    """UAI node IRI -> parsed UAI, read back from the serialized UAI string."""
    pred = iri_term(expand(UAI_STRING, namespaces or default_registry()))
    out = {}
    for s, p, o in doc.triples:
        if p == pred:
            try:
                out[s[1:-1]] = uai_parse(_plain_literal(o))
            except (MalformedUai, ValueError):
                continue
    return out


@dataclass
class LinkIndex:
    """UAI nodes grouped by collection, each remembering which batches it was seen in."""

    uais: dict[str, Uai] = field(default_factory=dict)
    batches: dict[str, set] = field(default_factory=lambda: defaultdict(set))
    by_collection: dict[str, set] = field(default_factory=lambda: defaultdict(set))

    def add(self, doc: TripleDoc, namespaces: Optional[NamespaceRegistry] = None) -> None:
        for iri, uai in uai_nodes(doc, namespaces).items():
            if uai.collection_id is None:
                continue
            self.uais[iri] = uai
            self.batches[iri].add(doc.graph_name)
            self.by_collection[uai.collection_id].add(iri)


def _cross_batch(ba: set, bb: set) -> bool:
    return len(ba | bb) > 1


def _partition_links(iris: Iterable[str], index: LinkIndex, rule: LinkRule) -> list[tuple[str, str, LinkTier]]:
    # within a collection, UAIs with different mzML never link, so bucket by run
    by_run: dict[Optional[str], list[str]] = defaultdict(list)
    for iri in sorted(iris):
        by_run[index.uais[iri].mzml].append(iri)
    no_run = by_run.pop(None, [])
    no_run_set = set(no_run)
    pairs = []
    for bucket in by_run.values():
        pairs.extend((bucket[i], b) for i in range(len(bucket)) for b in bucket[i + 1:])
    everything = sorted(index.by_collection[index.uais[no_run[0]].collection_id]) if no_run else []
    for a in no_run:
        pairs.extend((a, b) for b in everything if b != a and (b not in no_run_set or a < b))
    out = []
    for a, b in pairs:
        if not _cross_batch(index.batches[a], index.batches[b]):
            continue
        tier = rule.tier_for(index.uais[a], index.uais[b])
        if tier is not None:
            lo, hi = sorted((a, b))
            out.append((lo, hi, tier))
    return out


def link_batches(docs: Iterable[TripleDoc], rule: Optional[LinkRule] = None,
                 namespaces: Optional[NamespaceRegistry] = None,
                 global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> TripleDoc:
    """One linkage triple per eligible UAI pair, subject = the smaller IRI."""
    rule = rule or LinkRule()
    ns = namespaces or default_registry()
    index = LinkIndex()
    for doc in docs:
        index.add(doc, ns)
    out = TripleDoc(linkage_graph_iri(global_prefix))
    for collection in sorted(index.by_collection):
        for a, b, tier in _partition_links(index.by_collection[collection], index, rule):
            out.add(iri_term(a), iri_term(expand(tier.predicate, ns)), iri_term(b))
    return out


def linkage_graph_iri(global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> str:
    return graph_iri("linkage", global_prefix)
