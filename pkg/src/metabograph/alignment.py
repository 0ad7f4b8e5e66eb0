"""Mapping free-text metadata values onto ontology terms.

Local ranking is tiered and fully deterministic; a remote ontology lookup
service can supplement it, with every response cached on disk so reruns do
not need the network.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from statistics import mean
from typing import Callable, Iterable, Optional, Sequence, Union

from .errors import EmptyQuery, MalformedResponse, NetworkUnavailable
from .vocab import NamespaceRegistry, OntologyTermRef, default_registry, nfc

log = logging.getLogger(__name__)

DEFAULT_ONTOLOGIES = frozenset({"CHEBI", "MS", "NCIT", "CHMO", "OBI"})
# the four columns whose values were curated by hand
CURATION_REQUIRED = frozenset({
    "InternalStandardsUsed", "IonizationSourceAndPolarity", "SampleCollectionMethod", "SampleExtractionMethod",
})
REJECT = "REJECT"


class MatchKind(enum.IntEnum):
    # lower value ranks first
    EXACT = 0
    CASE_INSENSITIVE = 1
    SYNONYM_EXACT = 2
    TOKEN_OVERLAP = 3
    EDIT_DISTANCE = 4


@dataclass(frozen=True)
class TermEntry:
    term: OntologyTermRef
    iri: str
    label: str
    synonyms: tuple[str, ...]
    ontology: str
    _folded: tuple[str, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "label", nfc(self.label).strip())
        object.__setattr__(self, "synonyms", tuple(nfc(s).strip() for s in self.synonyms if s.strip()))
        object.__setattr__(self, "_folded", tuple(s.casefold() for s in (self.label, *self.synonyms)))


class TermIndex:
    def __init__(self, entries: Iterable[TermEntry], ontologies: Iterable[str] = DEFAULT_ONTOLOGIES):
        self.ontologies = frozenset(o.upper() for o in ontologies)
        self.entries = tuple(e for e in entries if e.ontology.upper() in self.ontologies)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_tsv(cls, text: str, registry: Optional[NamespaceRegistry] = None,
                 ontologies: Iterable[str] = DEFAULT_ONTOLOGIES) -> "TermIndex":
        registry = registry or default_registry()
        entries = []
        for row in csv.reader(io.StringIO(text), delimiter="\t"):
            if not row or row[0].startswith("#") or row[0] == "iri":
                continue
            iri, label, synonyms, ontology = (row + [""] * 4)[:4]
            term = _term_from(iri, registry, label)
            entries.append(TermEntry(term, term.iri(registry), label, tuple(synonyms.split("|")), ontology.strip()))
        return cls(entries, ontologies)

    @classmethod
    def load(cls, path: Union[str, Path], registry: Optional[NamespaceRegistry] = None) -> "TermIndex":
        return cls.from_tsv(Path(path).read_text(encoding="utf-8"), registry)

    @classmethod
    def default(cls) -> "TermIndex":
        return cls.from_tsv(resources.files("metabograph.data").joinpath("term_index.tsv").read_text("utf-8"))


def _term_from(text: str, registry: NamespaceRegistry, label: Optional[str] = None) -> OntologyTermRef:
    text = text.strip()
    if "://" in text:
        hit = registry.compact(text)
        if hit is None:
            raise ValueError(f"IRI outside the namespace registry: {text}")
        return OntologyTermRef(hit[0], hit[1], label or None)
    term = OntologyTermRef.parse(text, label or None)
    if term.prefix not in registry:
        # OBO-style CURIEs use upper-case prefixes (CHEBI:) where the registry may not
        for prefix in registry:
            if prefix.upper() == term.prefix.upper():
                return OntologyTermRef(prefix, term.local_id, label or None)
    return term


@dataclass(frozen=True)
class MatchCandidate:
    term: OntologyTermRef
    score: float
    rank: int
    match_kind: MatchKind
    label: str = ""

    def to_json(self, registry: Optional[NamespaceRegistry] = None) -> dict:
        return {"iri": self.term.iri(registry), "curie": str(self.term), "label": self.label,
                "score": self.score, "rank": self.rank, "match_kind": self.match_kind.name}


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def _tokens(text: str) -> set[str]:
    return set(text.casefold().split())


def score_entry(query: str, entry: TermEntry) -> Optional[tuple[MatchKind, float]]:
    folded = query.casefold()
    if query == entry.label:
        return MatchKind.EXACT, 1.0
    if folded == entry._folded[0]:
        return MatchKind.CASE_INSENSITIVE, 1.0
    if folded in entry._folded[1:]:
        return MatchKind.SYNONYM_EXACT, 1.0
    q_tokens = _tokens(query)
    best = 0.0
    for name in entry._folded:
        t = set(name.split())
        if q_tokens & t:
            best = max(best, len(q_tokens & t) / len(q_tokens | t))
    if best > 0:
        return MatchKind.TOKEN_OVERLAP, best
    best = 0.0
    for name in entry._folded:
        longest = max(len(name), len(folded))
        if longest:
            best = max(best, 1.0 - levenshtein(folded, name) / longest)
    if best > 0:
        return MatchKind.EDIT_DISTANCE, best
    return None


def match_term(raw: str, index: TermIndex, k: int = 5) -> list[MatchCandidate]:
    if k < 1:
        raise ValueError("k must be >= 1")
    query = nfc(raw or "").strip()
    if not query:
        raise EmptyQuery("empty query")
    scored = []
    for entry in index.entries:
        hit = score_entry(query, entry)
        if hit is not None:
            scored.append((hit[0], -hit[1], entry.iri, entry))
    scored.sort(key=lambda r: r[:3])
    return [MatchCandidate(e.term, -neg, rank, kind, e.label)
            for rank, (kind, neg, _, e) in enumerate(scored[:k], 1)]


# --- remote lookup --------------------------------------------------------

class RemoteLookup:
    """Client for an OLS4-style ``/api/search`` endpoint with an on-disk cache.

    Cache entries are keyed by (query, ontology set, k); once written they are
    only ever read, so repeated runs return byte-identical candidates.
    """

    def __init__(self, endpoint: str, cache_dir: Union[str, Path], enabled: bool = True,
                 fallback_index: Optional[TermIndex] = None, registry: Optional[NamespaceRegistry] = None,
                 timeout: float = 10.0, session=None):
        self.endpoint = endpoint.rstrip("/")
        self.cache_dir = Path(cache_dir)
        self.enabled = enabled
        self.fallback_index = fallback_index
        self.registry = registry or default_registry()
        self.timeout = timeout
        self._session = session
        self._lock = threading.Lock()

    @staticmethod
    def cache_key(raw: str, ontologies: Iterable[str], k: int) -> str:
        payload = json.dumps({"q": nfc(raw).strip(), "ontologies": sorted(o.upper() for o in ontologies), "k": k},
                             sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _cache_path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def fetch(self, raw: str, ontologies: Iterable[str] = DEFAULT_ONTOLOGIES, k: int = 5) -> list[MatchCandidate]:
        ontologies = sorted({o.upper() for o in ontologies})
        query = nfc(raw or "").strip()
        if not query:
            raise EmptyQuery("empty query")
        path = self._cache_path(self.cache_key(query, ontologies, k))
        if path.exists():
            return self._decode(json.loads(path.read_text(encoding="utf-8")))
        try:
            if not self.enabled:
                raise NetworkUnavailable("remote lookups disabled (offline mode)")
            docs = self._request(query, ontologies, k)
        except NetworkUnavailable as exc:
            if self.fallback_index is None:
                raise
            log.warning("%s; using the local term index for %r", exc, query)
            return match_term(query, self.fallback_index, k)
        candidates = self._convert(query, docs, k)
        self._store(path, query, ontologies, k, candidates)
        return candidates

    def _request(self, query: str, ontologies: Sequence[str], k: int) -> list[dict]:
        import requests

        session = self._session or requests
        params = {"q": query, "ontology": ",".join(o.lower() for o in ontologies), "rows": k}
        try:
            response = session.get(f"{self.endpoint}/api/search", params=params, timeout=self.timeout)
        except requests.RequestException as exc:
            raise NetworkUnavailable(f"ontology lookup failed: {exc}") from exc
        if response.status_code >= 500:
            raise NetworkUnavailable(f"ontology lookup returned HTTP {response.status_code}")
        try:
            payload = response.json()
            docs = payload["response"]["docs"]
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedResponse(f"unexpected search response: {exc}") from exc
        if not isinstance(docs, list):
            raise MalformedResponse("response.docs is not a list")
        return docs

    def _convert(self, query: str, docs: list[dict], k: int) -> list[MatchCandidate]:
        out = []
        for doc in docs:
            try:
                iri, label = doc["iri"], doc["label"]
            except (KeyError, TypeError):
                raise MalformedResponse(f"search hit without iri/label: {doc!r}") from None
            hit = self.registry.compact(iri)
            if hit is None:
                log.warning("skipping %s: namespace not registered", iri)
                continue
            term = OntologyTermRef(hit[0], hit[1], label, doc.get("ontology_prefix") or doc.get("ontology_name"))
            entry = TermEntry(term, iri, label, tuple(doc.get("synonym") or ()), term.source_ontology or "")
            kind, score = score_entry(query, entry) or (MatchKind.EDIT_DISTANCE, 0.0)
            out.append(MatchCandidate(term, score, len(out) + 1, kind, entry.label))
            if len(out) == k:
                break
        return out

    def _store(self, path: Path, query: str, ontologies, k: int, candidates: list[MatchCandidate]) -> None:
        body = json.dumps({"query": query, "ontologies": list(ontologies), "k": k,
                           "candidates": [c.to_json(self.registry) for c in candidates]},
                          indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(f".tmp{os.getpid()}")
            tmp.write_text(body, encoding="utf-8")
            os.replace(tmp, path)

    def _decode(self, payload: dict) -> list[MatchCandidate]:
        out = []
        for c in payload["candidates"]:
            hit = self.registry.compact(c["iri"])
            term = OntologyTermRef(hit[0], hit[1], c.get("label"))
            out.append(MatchCandidate(term, c["score"], c["rank"], MatchKind[c["match_kind"]], c.get("label", "")))
        return out


def fetch_remote_candidates(raw: str, ontologies: Iterable[str], k: int, endpoint: str, *,
                            cache_dir: Union[str, Path], enabled: bool = True,
                            fallback_index: Optional[TermIndex] = None, session=None) -> list[MatchCandidate]:
    client = RemoteLookup(endpoint, cache_dir, enabled, fallback_index, session=session)
    return client.fetch(raw, ontologies, k)


# --- curation and evaluation ----------------------------------------------

@dataclass(frozen=True)
class CurationRow:
    column_name: str
    raw_value: str
    chosen_term: Optional[OntologyTermRef]  # None means REJECT
    curator_note: str = ""


class CurationFile:
    def __init__(self, rows: Iterable[CurationRow], registry: Optional[NamespaceRegistry] = None):
        registry = registry or default_registry()
        self.rows: list[CurationRow] = []
        self._by_key: dict[tuple[str, str], CurationRow] = {}
        for row in rows:
            key = (row.column_name, nfc(row.raw_value).strip())
            if key in self._by_key:
                raise ValueError(f"duplicate curation entry for {key}")
            if row.chosen_term is not None:
                row.chosen_term.iri(registry)  # raises UnknownPrefix
            self._by_key[key] = row
            self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def get(self, column: str, raw: str) -> Optional[CurationRow]:
        return self._by_key.get((column, nfc(raw).strip()))

    @classmethod
    def from_tsv(cls, text: str, registry: Optional[NamespaceRegistry] = None) -> "CurationFile":
        registry = registry or default_registry()
        rows = []
        for rec in csv.DictReader(io.StringIO(text), delimiter="\t"):
            chosen = rec["chosen_term"].strip()
            term = None if chosen.upper() == REJECT else _term_from(chosen, registry)
            rows.append(CurationRow(rec["column_name"], rec["raw_value"], term, rec.get("curator_note") or ""))
        return cls(rows, registry)

    @classmethod
    def load(cls, path: Union[str, Path], registry: Optional[NamespaceRegistry] = None) -> "CurationFile":
        return cls.from_tsv(Path(path).read_text(encoding="utf-8"), registry)


@dataclass
class AccuracyReport:
    k_values: tuple[int, ...]
    per_column: dict[str, dict[int, float]]
    counts: dict[str, int]
    macro: dict[int, float]
    micro: dict[int, float]
    rejected: int = 0

    def rows(self) -> list[tuple[str, str, int, float]]:
        out = []
        for k in self.k_values:
            for col in sorted(self.per_column):
                out.append(("column", col, k, self.per_column[col][k]))
            out.append(("macro", "*", k, self.macro[k]))
            out.append(("micro", "*", k, self.micro[k]))
        return out


def evaluate_matching(curation: CurationFile, index: TermIndex, k_values: Sequence[int] = (1, 5),
                      matcher: Callable[[str, TermIndex, int], list[MatchCandidate]] = match_term) -> AccuracyReport:
    """Top-k accuracy of ``matcher`` against curated choices.

    Macro averages per-column accuracies; micro pools every curated value.
    REJECT rows (no suitable term exists) are left out of both.
    """
    if not len(curation):
        raise ValueError("curation is empty")
    k_values = tuple(sorted(set(k_values)))
    kmax = k_values[-1]
    hits: dict[str, dict[int, int]] = {}
    counts: dict[str, int] = {}
    rejected = 0
    for row in curation.rows:
        if row.chosen_term is None:
            rejected += 1
            continue
        ranked = [c.term for c in matcher(row.raw_value, index, kmax)]
        counts[row.column_name] = counts.get(row.column_name, 0) + 1
        col_hits = hits.setdefault(row.column_name, {k: 0 for k in k_values})
        for k in k_values:
            if row.chosen_term in ranked[:k]:
                col_hits[k] += 1
    per_column = {col: {k: hits[col][k] / counts[col] for k in k_values} for col in counts}
    total = sum(counts.values())
    macro = {k: mean(per_column[c][k] for c in per_column) if per_column else 0.0 for k in k_values}
    micro = {k: (sum(hits[c][k] for c in hits) / total) if total else 0.0 for k in k_values}
    return AccuracyReport(k_values, per_column, counts, macro, micro, rejected)


@dataclass
class Resolution:
    term: Optional[OntologyTermRef]
    source: str  # "curation", "exact", "fuzzy", "rejected", "unresolved"
    note: str = ""


class TermResolver:
    """Decides which ontology term, if any, a raw value maps to.

    The curation file wins. Without a curated entry, curation-required columns
    only accept a perfect (score 1.0) lexical match; other columns also accept
    a fuzzy top-1 above ``min_score``.
    """

    def __init__(self, index: Optional[TermIndex] = None, curation: Optional[CurationFile] = None,
                 curation_required: Iterable[str] = CURATION_REQUIRED, min_score: float = 0.9,
                 remote: Optional[RemoteLookup] = None):
        self.index = index if index is not None else TermIndex.default()
        self.curation = curation
        self.curation_required = frozenset(curation_required)
        self.min_score = min_score
        self.remote = remote
        self._cache: dict[tuple[str, str], Resolution] = {}

    def resolve(self, column: str, raw: str) -> Resolution:
        key = (column, nfc(raw).strip())
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = self._resolve(*key)
        return hit

    def _resolve(self, column: str, raw: str) -> Resolution:
        if not raw:
            return Resolution(None, "unresolved", "empty value")
        if self.curation is not None:
            row = self.curation.get(column, raw)
            if row is not None:
                if row.chosen_term is None:
                    return Resolution(None, "rejected", row.curator_note)
                return Resolution(row.chosen_term, "curation", row.curator_note)
        candidates = match_term(raw, self.index, 5)
        if not candidates and self.remote is not None:
            candidates = self.remote.fetch(raw, self.index.ontologies, 5)
        if not candidates:
            return Resolution(None, "unresolved", "no candidate")
        top = candidates[0]
        if top.score >= 1.0:
            return Resolution(top.term, "exact", top.match_kind.name)
        if column in self.curation_required:
            return Resolution(None, "unresolved", f"needs curation (best {top.term} {top.score:.2f})")
        if top.score >= self.min_score:
            return Resolution(top.term, "fuzzy", f"{top.match_kind.name} {top.score:.3f}")
        return Resolution(None, "unresolved", f"best candidate {top.term} scored {top.score:.2f}")
