"""Vocabulary layer: namespace registry, ontology term references and the
abstract node model every ingester emits into."""
from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterable, Mapping, Optional, Union

from .errors import InvalidSpec, UnknownPrefix

XSD = "http://www.w3.org/2001/XMLSchema#"
XSD_STRING = XSD + "string"
XSD_DECIMAL = XSD + "decimal"
XSD_INTEGER = XSD + "integer"


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


class Iri(str):
    """A string that is an absolute IRI (as opposed to a literal)."""

    __slots__ = ()


class NamespaceRegistry:
    """Immutable prefix -> namespace IRI table."""

    def __init__(self, entries: Mapping[str, str]):
        seen: dict[str, str] = {}
        for prefix, ns in entries.items():
            if not ns or ns[-1] not in "/#_":
                raise ValueError(f"namespace for {prefix!r} must end with '/', '#' or '_': {ns!r}")
            if ns in seen:
                raise ValueError(f"prefixes {seen[ns]!r} and {prefix!r} share namespace {ns!r}")
            seen[ns] = prefix
        self._entries = MappingProxyType(dict(entries))
        # longest namespace first so compact() picks the most specific match
        self._by_length = sorted(self._entries.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    @property
    def entries(self) -> Mapping[str, str]:
        return self._entries

    def __contains__(self, prefix: str) -> bool:
        return prefix in self._entries

    def __getitem__(self, prefix: str) -> str:
        try:
            return self._entries[prefix]
        except KeyError:
            raise UnknownPrefix(prefix) from None

    def __iter__(self):
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def merged(self, other: "NamespaceRegistry") -> "NamespaceRegistry":
        entries = dict(self._entries)
        for prefix, ns in other.entries.items():
            if prefix in entries and entries[prefix] != ns:
                raise ValueError(f"conflicting namespace for prefix {prefix!r}")
            entries[prefix] = ns
        return NamespaceRegistry(entries)

    @classmethod
    def from_tsv(cls, text: str) -> "NamespaceRegistry":
        entries: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'prefix<TAB>namespace'")
            prefix, ns = parts[0].strip(), parts[1].strip()
            if prefix in entries:
                raise ValueError(f"line {lineno}: duplicate prefix {prefix!r}")
            entries[prefix] = ns
        return cls(entries)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "NamespaceRegistry":
        return cls.from_tsv(Path(path).read_text(encoding="utf-8"))

    def to_tsv(self) -> str:
        return "".join(f"{p}\t{ns}\n" for p, ns in self._entries.items())

    def expand(self, prefix: str, local_id: str) -> str:
        return self[prefix] + local_id

    def compact(self, iri: str) -> Optional[tuple[str, str]]:
        for prefix, ns in self._by_length:
            if iri.startswith(ns):
                return prefix, iri[len(ns):]
        return None

    def curie(self, iri: str) -> str:
        hit = self.compact(iri)
        return f"{hit[0]}:{hit[1]}" if hit else f"<{iri}>"


def _data_text(name: str) -> str:
    return resources.files("metabograph.data").joinpath(name).read_text(encoding="utf-8")


def table1_registry() -> NamespaceRegistry:
    """The nine published prefixes, nothing else."""
    return NamespaceRegistry.from_tsv(_data_text("namespaces.tsv"))


_DEFAULT: Optional[NamespaceRegistry] = None


def default_registry() -> NamespaceRegistry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = table1_registry().merged(NamespaceRegistry.from_tsv(_data_text("extra_namespaces.tsv")))
    return _DEFAULT


@dataclass(frozen=True, order=True)
class OntologyTermRef:
    prefix: str
    local_id: str
    label: Optional[str] = field(default=None, compare=False)
    source_ontology: Optional[str] = field(default=None, compare=False)

    @classmethod
    def parse(cls, curie: str, label: Optional[str] = None) -> "OntologyTermRef":
        prefix, sep, local = curie.partition(":")
        if not sep or not prefix:
            raise ValueError(f"not a CURIE: {curie!r}")
        return cls(prefix, local, label)

    def iri(self, registry: Optional[NamespaceRegistry] = None) -> str:
        return expand(self, registry or default_registry())

    def __str__(self) -> str:
        return f"{self.prefix}:{self.local_id}"


def expand(term: OntologyTermRef, registry: NamespaceRegistry) -> str:
    if term.prefix not in registry:
        raise UnknownPrefix(term.prefix)
    return registry.expand(term.prefix, term.local_id)


def compact(iri: str, registry: NamespaceRegistry) -> Optional[tuple[str, str]]:
    return registry.compact(iri)


def T(curie: str) -> OntologyTermRef:
    return OntologyTermRef.parse(curie)


def canonical_decimal(text: str) -> str:
    """Canonical xsd:decimal lexical form: no exponent, at least one
    fractional digit, no superfluous zeros."""
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise ValueError(f"not a decimal: {text!r}") from None
    if not value.is_finite():
        raise ValueError(f"not a finite decimal: {text!r}")
    if value == 0:
        return "0.0"
    out = plain_decimal(value)
    return out if "." in out else out + ".0"


def plain_decimal(value: Decimal) -> str:
    """Fixed-point text without trailing zeros; unlike normalize(), never
    rounds to the context precision."""
    out = format(value, "f")
    if "." in out:
        out = out.rstrip("0").rstrip(".")
    return "0" if out in ("", "-0") else out


@dataclass(frozen=True)
class TypedLiteral:
    lexical: str
    datatype: str = XSD_STRING

    def __post_init__(self):
        lexical = nfc(self.lexical)
        if not lexical.strip():
            raise ValueError("literal lexical form is empty")
        if self.datatype == XSD_DECIMAL:
            lexical = canonical_decimal(lexical)
        elif self.datatype == XSD_INTEGER:
            try:
                lexical = str(int(lexical.strip()))
            except ValueError:
                raise ValueError(f"not an integer: {self.lexical!r}") from None
        object.__setattr__(self, "lexical", lexical)

    @classmethod
    def decimal(cls, value: Any) -> "TypedLiteral":
        return cls(str(value), XSD_DECIMAL)

    @classmethod
    def integer(cls, value: Any) -> "TypedLiteral":
        return cls(str(value), XSD_INTEGER)


class NodeKind(enum.Enum):
    PROV_ENTITY = "ProvEntity"
    PROV_ACTIVITY = "ProvActivity"
    NAMED_INDIVIDUAL = "NamedIndividual"
    VALUE_NODE = "ValueNode"

    @property
    def is_prov(self) -> bool:
        return self in (NodeKind.PROV_ENTITY, NodeKind.PROV_ACTIVITY)


EdgeTarget = Union["NodeSpec", OntologyTermRef, Iri, TypedLiteral]


@dataclass
class NodeSpec:
    """A node waiting to be turned into triples.

    PROV nodes are identified by ``concept`` + ``attributes``; value nodes and
    named individuals by their dedup key (see :mod:`metabograph.emitter`).
    ``iri`` pins an identifier minted elsewhere (organisms, library spectra).
    """

    kind: NodeKind
    types: tuple[OntologyTermRef, ...] = ()
    value: Optional[TypedLiteral] = None
    label: Optional[str] = None
    edges: list[tuple[OntologyTermRef, EdgeTarget]] = field(default_factory=list)
    concept: Optional[str] = None
    attributes: dict[str, str] = field(default_factory=dict)
    iri: Optional[str] = None
    iri_stem: Optional[str] = None
    uai: Any = None

    def __post_init__(self):
        self.types = tuple(self.types)
        if self.label is not None:
            self.label = nfc(self.label).strip()
        if self.kind in (NodeKind.VALUE_NODE, NodeKind.NAMED_INDIVIDUAL) and not self.types:
            raise InvalidSpec(f"{self.kind.value} requires at least one rdf:type")
        if self.kind is NodeKind.VALUE_NODE and self.value is None:
            raise InvalidSpec("ValueNode requires a value")
        if self.kind is NodeKind.NAMED_INDIVIDUAL:
            if self.value is not None:
                raise InvalidSpec("NamedIndividual carries a label, not a value")
            if not self.label and not self.iri:
                raise InvalidSpec("NamedIndividual requires a label or a pinned IRI")
        if self.kind.is_prov:
            if not any(t.prefix == "prov" for t in self.types):
                raise InvalidSpec(f"{self.kind.value} needs a prov: type")
            if not self.iri and not (self.concept and self.attributes):
                raise InvalidSpec(f"{self.kind.value} needs concept + attributes or a pinned IRI")
            if self.value is not None:
                raise InvalidSpec("PROV nodes do not carry prov:value")

    def add(self, predicate: OntologyTermRef, target: Optional[EdgeTarget]) -> "NodeSpec":
        if target is not None:
            self.edges.append((predicate, target))
        return self

    def dedup_key(self, registry: Optional[NamespaceRegistry] = None) -> Optional[str]:
        """Canonical merge key, or None for PROV nodes (never merged)."""
        registry = registry or default_registry()
        type_iris = "\x1f".join(sorted(expand(t, registry) for t in self.types))
        if self.kind is NodeKind.VALUE_NODE:
            return f"V\x1e{type_iris}\x1e{self.value.datatype}\x1e{self.value.lexical}"
        if self.kind is NodeKind.NAMED_INDIVIDUAL:
            return f"N\x1e{expand(self.types[0], registry)}\x1e{normalize_label(self.label or self.iri)}"
        return None


def normalize_label(label: str) -> str:
    return " ".join(nfc(label).split()).casefold()


def value_node(types: Iterable[OntologyTermRef] | OntologyTermRef, value: TypedLiteral, **kw) -> NodeSpec:
    if isinstance(types, OntologyTermRef):
        types = (types,)
    return NodeSpec(NodeKind.VALUE_NODE, tuple(types), value=value, **kw)


def individual(types: Iterable[OntologyTermRef] | OntologyTermRef, label: str, **kw) -> NodeSpec:
    if isinstance(types, OntologyTermRef):
        types = (types,)
    return NodeSpec(NodeKind.NAMED_INDIVIDUAL, tuple(types), label=label, **kw)


# Terms the layouts and queries depend on.
RDF_TYPE = T("rdf:type")
RDFS_LABEL = T("rdfs:label")
PROV_ENTITY = T("prov:Entity")
PROV_ACTIVITY = T("prov:Activity")
PROV_VALUE = T("prov:value")
PROV_HAD_MEMBER = T("prov:had_member")
PROV_HAS_PRIMARY_SOURCE = T("prov:hasPrimarySource")
PROV_WAS_DERIVED_FROM = T("prov:wasDerivedFrom")
PROV_WAS_GENERATED_BY = T("prov:wasGeneratedBy")
PROV_WAS_ASSOCIATED_WITH = T("prov:wasAssociatedWith")
PROV_USED = T("prov:used")
PROV_SOFTWARE_AGENT = T("prov:SoftwareAgent")
SIO_HAS_ATTRIBUTE = T("SIO:000008")
SIO_HAS_IDENTIFIER = T("SIO:000675")
SIO_HAS_UNIT = T("SIO:000221")
SIO_IS_DESCRIBED_BY = T("SIO:000223")
SIO_SAMPLE = T("SIO:001050")
DCAT_DISTRIBUTION = T("dcat:Distribution")
DCAT_DATASET = T("dcat:Dataset")
DCAT_DISTRIBUTION_PROP = T("dcat:distribution")
DCAT_DOWNLOAD_URL = T("dcat:downloadURL")
DCAT_ACCESS_URL = T("dcat:accessURL")
DCT_TITLE = T("dct:title")
DCT_IDENTIFIER = T("dct:identifier")
DCT_PUBLISHER = T("dct:publisher")
MBS_UAI = T("MBS:UniversalAnnotationIdentifier")
MBS_MOLECULAR_ANNOTATION = T("MBS:MolecularAnnotation")
MBS_MQSCORE = T("MBS:MQScore")
MS_IDENTIFICATION_RESULT = T("MS:1001405")
MS_SHARED_PEAKS = T("MS:1003306")
MS_LIBRARY_SPECTRUM = T("MS:1003172")
MS_INCHIKEY = T("MS:1002894")
