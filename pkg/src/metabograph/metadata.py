"""Sample metadata ingestion (Pan-ReDU-style TSV exports)."""
from __future__ import annotations

import csv
import enum
import hashlib
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Optional, Union

import yaml

from .alignment import TermResolver
from .emitter import Emitter, collection_iri, graph_iri
from .errors import DuplicateColumn, EmptyInput, MissingHeader, UnmappedColumn, UnparseableMixture
from .identifiers import DEFAULT_GLOBAL_PREFIX, Uai, UriSpec, mint_uri
from .vocab import (
    DCAT_DATASET, DCT_IDENTIFIER, DCT_TITLE, PROV_ACTIVITY, PROV_ENTITY, PROV_VALUE, PROV_WAS_DERIVED_FROM,
    PROV_WAS_GENERATED_BY, SIO_HAS_ATTRIBUTE, SIO_SAMPLE, XSD_DECIMAL, XSD_STRING, NamespaceRegistry, NodeKind,
    NodeSpec, OntologyTermRef, T, TypedLiteral, default_registry, individual, nfc, plain_decimal, value_node,
)

log = logging.getLogger(__name__)

DEFAULT_MISSING_MARKERS = ("", "NA", "not specified", "ML import: not available")
MISSING = "NA"  # organism-key sentinel; never a real value since "NA" is itself a missing marker

MBS_ORGANISM = T("MBS:Organism")
MBS_SAMPLING_PROCESS = T("MBS:SamplingProcess")
MBS_SOLVENT_MIXTURE = T("MBS:SolventMixture")
MBS_MIXTURE_COMPONENT = T("MBS:MixtureComponent")
MBS_ADDITIVE = T("MBS:Additive")
MBS_PROPORTION = T("MBS:Proportion")
MBS_CONCENTRATION = T("MBS:Concentration")
UNIT_CLASSES = {"%": T("MBS:PercentConcentration"), "mM": T("MBS:MillimolarConcentration"),
                "uM": T("MBS:MicromolarConcentration"), "M": T("MBS:MolarConcentration"),
                "mg/mL": T("MBS:MassConcentration")}


class Strategy(enum.Enum):
    REUSED = "Reused"
    MAPPED = "Mapped"
    SKIP = "Skip"


class Parser(enum.Enum):
    NONE = "None"
    SOLVENT_MIXTURE = "SolventMixture"
    METHOD_PHRASE = "MethodPhrase"


@dataclass(frozen=True)
class ColumnRule:
    column: str
    strategy: Strategy
    target_class: Optional[OntologyTermRef] = None
    predicate: OntologyTermRef = SIO_HAS_ATTRIBUTE
    datatype: Optional[str] = None
    parser: Parser = Parser.NONE
    attach_to: str = "sample"
    iri_stem: Optional[str] = None
    term_prefix: Optional[str] = None

    def __post_init__(self):
        if self.strategy is Strategy.MAPPED and self.target_class is None:
            raise ValueError(f"Mapped column {self.column!r} needs a target_class")
        if self.attach_to not in ("sample", "organism", "protocol"):
            raise ValueError(f"{self.column!r}: attach_to must be sample, organism or protocol")


ORGANISM_FIELDS = ("ncbi_taxonomy", "country", "envo_biome", "envo_material",
                   "biological_sex", "life_stage", "health_status", "age_in_years")


@dataclass
class MappingManifest:
    rules: dict[str, ColumnRule]
    filename_column: str = "filename"
    collection_column: str = "ATTRIBUTE_DatasetAccession"
    title_column: Optional[str] = None
    missing_markers: tuple[str, ...] = DEFAULT_MISSING_MARKERS
    organism_columns: dict[str, str] = field(default_factory=dict)

    @property
    def special_columns(self) -> set[str]:
        return {c for c in (self.filename_column, self.collection_column, self.title_column) if c}

    @classmethod
    def from_dict(cls, data: dict, registry: Optional[NamespaceRegistry] = None) -> "MappingManifest":
        registry = registry or default_registry()
        rules = {}
        for column, spec in (data.get("columns") or {}).items():
            spec = spec or {}
            datatype = spec.get("datatype")
            if datatype and "://" not in datatype:
                datatype = OntologyTermRef.parse(datatype).iri(registry)
            rules[column] = ColumnRule(
                column=column,
                strategy=Strategy(spec.get("strategy", "Reused")),
                target_class=OntologyTermRef.parse(spec["target_class"]) if spec.get("target_class") else None,
                predicate=OntologyTermRef.parse(spec["predicate"]) if spec.get("predicate") else SIO_HAS_ATTRIBUTE,
                datatype=datatype,
                parser=Parser(spec.get("parser", "None")),
                attach_to=spec.get("attach_to", "sample"),
                iri_stem=spec.get("iri_stem"),
                term_prefix=spec.get("term_prefix"),
            )
        organism = dict(data.get("organism_columns") or {})
        unknown = set(organism) - set(ORGANISM_FIELDS)
        if unknown:
            raise ValueError(f"unknown organism fields {sorted(unknown)}")
        return cls(
            rules=rules,
            filename_column=data.get("filename_column", "filename"),
            collection_column=data.get("collection_column", "ATTRIBUTE_DatasetAccession"),
            title_column=data.get("title_column"),
            missing_markers=tuple(data.get("missing_markers", DEFAULT_MISSING_MARKERS)),
            organism_columns=organism,
        )

    @classmethod
    def load(cls, path: Union[str, Path, None] = None) -> "MappingManifest":
        if path is None:
            text = resources.files("metabograph.data").joinpath("metadata_manifest.yaml").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls.from_dict(yaml.safe_load(text))

    def fingerprint(self) -> str:
        payload = repr(sorted((k, repr(v)) for k, v in self.rules.items())) + repr(
            (self.filename_column, self.collection_column, self.title_column,
             self.missing_markers, sorted(self.organism_columns.items())))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class SampleRecord:
    row_id: int
    filename: str
    collection_id: str
    columns: dict[str, Optional[str]]
    unknown_columns: tuple[str, ...] = ()

    def get(self, column: str) -> Optional[str]:
        return self.columns.get(column)


def normalize_cell(value: Optional[str], markers: Iterable[str]) -> Optional[str]:
    if value is None:
        return None
    value = " ".join(nfc(value).split())
    folded = value.casefold()
    if any(folded == m.casefold() for m in markers):
        return None
    return value


def load_metadata(path: Union[str, Path], manifest: MappingManifest,
                  markers: Optional[Iterable[str]] = None) -> list[SampleRecord]:
    markers = tuple(manifest.missing_markers if markers is None else markers)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if not header or not any(h.strip() for h in header):
            raise MissingHeader(f"{path}: no header row")
        header = [nfc(h).strip() for h in header]
        dupes = sorted(h for h, n in Counter(header).items() if n > 1)
        if dupes:
            raise DuplicateColumn(f"{path}: duplicated column(s) {dupes}")
        for required in (manifest.filename_column, manifest.collection_column):
            if required not in header:
                raise MissingHeader(f"{path}: required column {required!r} missing from header")
        known = set(manifest.rules) | manifest.special_columns | set(manifest.organism_columns.values())
        unknown = tuple(h for h in header if h not in known)
        if unknown:
            log.warning("%s: columns not covered by the manifest: %s", path, ", ".join(unknown))
        records = []
        for row_id, row in enumerate(reader, 1):
            if not any(cell.strip() for cell in row):
                continue
            row = row + [""] * (len(header) - len(row))
            cells = {h: normalize_cell(v, markers) for h, v in zip(header, row)}
            filename, coll = cells[manifest.filename_column], cells[manifest.collection_column]
            if not filename or not coll:
                log.warning("%s row %d: missing filename or collection, skipped", path, row_id)
                continue
            records.append(SampleRecord(row_id, filename, coll, cells, unknown))
    return records


@dataclass
class MissingnessReport:
    rows: list[tuple[str, float]]
    total: int
    threshold: float = 90.0

    @property
    def sparse_columns(self) -> list[str]:
        return [c for c, pct in self.rows if pct > self.threshold]

    def to_tsv(self) -> str:
        lines = ["column\tpct_missing\tover_threshold"]
        lines += [f"{c}\t{pct:.4f}\t{'yes' if pct > self.threshold else 'no'}" for c, pct in self.rows]
        return "\n".join(lines) + "\n"


def missingness_report(records: list[SampleRecord], threshold: float = 90.0) -> MissingnessReport:
    if not records:
        raise EmptyInput("no records")
    columns = sorted({c for r in records for c in r.columns})
    total = len(records)
    rows = []
    for col in columns:
        missing = sum(1 for r in records if r.columns.get(col) is None)
        rows.append((col, 100 * missing / total))
    rows.sort(key=lambda cp: (-cp[1], cp[0]))
    return MissingnessReport(rows, total, threshold)


# --- compositional values -------------------------------------------------

@dataclass(frozen=True)
class MixtureComponent:
    name: str
    term: Optional[OntologyTermRef] = field(default=None, compare=False)
    proportion: Optional[Fraction] = None


@dataclass(frozen=True)
class Additive:
    name: str
    concentration: Decimal
    unit: str
    term: Optional[OntologyTermRef] = field(default=None, compare=False)


@dataclass(frozen=True)
class SolventMixture:
    components: tuple[MixtureComponent, ...]
    additives: tuple[Additive, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.components:
            raise ValueError("a mixture needs at least one component")
        props = [c.proportion for c in self.components]
        if any(p is not None and p <= 0 for p in props):
            raise ValueError("proportions must be positive")

    @property
    def ratio(self) -> Optional[tuple[Fraction, ...]]:
        props = tuple(c.proportion for c in self.components)
        return props if all(p is not None for p in props) else None

    def render(self) -> str:
        names = [c.name for c in self.components]
        sep = "/" if any("-" in n for n in names) else "-"
        out = sep.join(names)
        if self.ratio:
            out += " (" + ":".join(_fmt_fraction(p) for p in self.ratio) + ")"
        for a in self.additives:
            out += f" + {_fmt_decimal(a.concentration)}{a.unit} {a.name}"
        return out


def _fmt_decimal(d: Decimal) -> str:
    return plain_decimal(d)


def _fmt_fraction(f: Fraction) -> str:
    if f.denominator == 1:
        return str(f.numerator)
    return _fmt_decimal(Decimal(f.numerator) / Decimal(f.denominator))


_RATIO_RE = re.compile(r"^(?P<names>.*?)\s*\(\s*(?P<ratio>[0-9.]+(?:\s*:\s*[0-9.]+)+)\s*\)\s*(?:v/v)?\s*$")
_ADDITIVE_RE = re.compile(
    r"^(?P<num>\d+(?:\.\d+)?|\.\d+)\s*(?P<unit>%|mM|uM|µM|M|mg/mL)\s*(?:\((?:v/v|w/v)\)\s*)?(?P<name>\S.*?)\s*$")
# fragments that belong to the next name rather than being a component: locants, n-/tert- prefixes
_NAME_PREFIX_RE = re.compile(r"^(?:\d+(?:,\d+)*|[a-zA-Z]|iso|tert|sec|neo|cis|trans)$")


def _split_names(text: str) -> list[str]:
    if "/" in text:
        parts = [p.strip() for p in text.split("/")]
    else:
        raw = text.split("-")
        parts = []
        for frag in raw:
            frag_s = frag.strip()
            prev = parts[-1] if parts else ""
            if parts and (_NAME_PREFIX_RE.match(prev.split()[-1] if prev.split() else "")
                          or re.search(r"-\d+(?:,\d+)*$", prev) or not frag_s[:1].isalpha()):
                parts[-1] = parts[-1] + "-" + frag_s
            else:
                parts.append(frag_s)
    return parts


def _number(text: str) -> Fraction:
    try:
        return Fraction(Decimal(text))
    except (InvalidOperation, ValueError):
        raise UnparseableMixture(f"bad number {text!r}") from None


Resolver = Callable[[str], Optional[OntologyTermRef]]


def parse_solvent_mixture(raw: str, resolve: Optional[Resolver] = None) -> SolventMixture:
    """Parse strings like ``methanol-water (4:1) + 0.1% formic acid``.

    Component names are separated by ``-`` or ``/``; an optional parenthesised
    ratio aligns positionally with them; each ``+`` introduces an additive
    ``<number><unit> <name>``. Names that do not resolve to a term are kept as
    labels and reported in ``warnings``.
    """
    text = " ".join(nfc(raw or "").split())
    if not text:
        raise UnparseableMixture("empty value")
    head, *tails = [p.strip() for p in text.split(" + ")] if " + " in text else [text]
    if "+" in head:
        head, *more = [p.strip() for p in head.split("+")]
        tails = more + tails
    ratio = None
    m = _RATIO_RE.match(head)
    if m:
        head = m.group("names")
        ratio = [_number(x.strip()) for x in m.group("ratio").split(":")]
    elif "(" in head or ")" in head:
        raise UnparseableMixture(f"unbalanced or non-ratio parenthesis in {raw!r}")
    names = [n for n in _split_names(head)]
    if not names or any(not n for n in names):
        raise UnparseableMixture(f"empty component name in {raw!r}")
    if any(re.search(r"[():;+%]", n) for n in names):
        raise UnparseableMixture(f"unexpected punctuation in component names of {raw!r}")
    if ratio is not None and len(ratio) != len(names):
        raise UnparseableMixture(f"{len(ratio)} ratio parts for {len(names)} components in {raw!r}")
    if ratio is not None and any(r <= 0 for r in ratio):
        raise UnparseableMixture(f"non-positive proportion in {raw!r}")
    warnings = []

    def lookup(name):
        term = resolve(name) if resolve else None
        if resolve and term is None:
            warnings.append(f"unresolved chemical {name!r}")
        return term

    components = tuple(MixtureComponent(n, lookup(n), ratio[i] if ratio else None) for i, n in enumerate(names))
    additives = []
    for tail in tails:
        am = _ADDITIVE_RE.match(tail)
        if not am:
            raise UnparseableMixture(f"cannot read additive {tail!r}")
        unit = "uM" if am.group("unit") == "µM" else am.group("unit")
        name = am.group("name")
        additives.append(Additive(name, Decimal(am.group("num")), unit, lookup(name)))
    return SolventMixture(components, tuple(additives), tuple(warnings))


def parse_method_phrase(raw: str) -> list[str]:
    """Ordered protocol steps: the value split on ';' and ','."""
    return [s for s in (" ".join(p.split()) for p in re.split(r"[;,]", nfc(raw or ""))) if s]


# --- organisms ------------------------------------------------------------

class OrganismKey(NamedTuple):
    ncbi_taxonomy: str = MISSING
    country: str = MISSING
    envo_biome: str = MISSING
    envo_material: str = MISSING
    biological_sex: str = MISSING
    life_stage: str = MISSING
    health_status: str = MISSING
    age_in_years: str = MISSING

    def label(self) -> str:
        return "organism " + " | ".join(f"{k}={v}" for k, v in self._asdict().items())


def organism_key(record: SampleRecord, manifest: MappingManifest) -> OrganismKey:
    values = {}
    for fname in ORGANISM_FIELDS:
        column = manifest.organism_columns.get(fname)
        value = record.columns.get(column) if column else None
        values[fname] = " ".join(nfc(value).split()) if value else MISSING
    return OrganismKey(**values)


def organism_uri(key: OrganismKey, global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> UriSpec:
    return mint_uri("organism", key._asdict(), global_prefix=global_prefix)


def build_organism_individuals(records: list[SampleRecord], manifest: Optional[MappingManifest] = None,
                               global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> tuple[dict[OrganismKey, UriSpec], Fraction]:
    """One organism URI per distinct 8-field key, plus the dedup ratio
    ``1 - distinct/total`` (exact)."""
    if not records:
        raise EmptyInput("no records")
    manifest = manifest or MappingManifest.load()
    uris: dict[OrganismKey, UriSpec] = {}
    for rec in records:
        key = organism_key(rec, manifest)
        if key not in uris:
            uris[key] = organism_uri(key, global_prefix)
    return uris, 1 - Fraction(len(uris), len(records))


# --- mapping --------------------------------------------------------------

def _ontology_term(value: str, prefix: str, registry: NamespaceRegistry) -> Optional[OntologyTermRef]:
    """Read an ontology id such as 'ENVO:01000252', 'ENVO_01000252', '9606|Homo sapiens' or a bare id."""
    text = value.split("|")[0].strip()
    if "://" in text:
        hit = registry.compact(text)
        return OntologyTermRef(*hit) if hit and hit[0] == prefix else None
    m = re.match(rf"^(?:{re.escape(prefix)}[:_])?([A-Za-z0-9]+)$", text, flags=re.IGNORECASE)
    return OntologyTermRef(prefix, m.group(1)) if m else None


@dataclass
class ReportLine:
    level: str
    row_id: int
    column: str
    message: str


class MetadataMapper:
    """Turns SampleRecords into NodeSpecs following a MappingManifest.

    Keeps the (column, raw value) -> IRI dictionary and a report of warnings
    and fallbacks across all records it has seen.
    """

    def __init__(self, manifest: MappingManifest, resolver: Optional[TermResolver] = None,
                 namespaces: Optional[NamespaceRegistry] = None, global_prefix: str = DEFAULT_GLOBAL_PREFIX,
                 strict: bool = False):
        self.manifest = manifest
        self.resolver = resolver or TermResolver()
        self.ns = namespaces or default_registry()
        self.global_prefix = global_prefix
        self.strict = strict
        self._iris = Emitter(namespaces=self.ns, global_prefix=global_prefix)
        self.dictionary: dict[str, dict[str, str]] = {}
        self.report: list[ReportLine] = []
        self.organisms: dict[OrganismKey, UriSpec] = {}
        self._warned_unknown: set[str] = set()
        self._warned_values: set[tuple[str, str]] = set()
        self._mixtures: dict[tuple[str, str], object] = {}

    def warn(self, row_id: int, column: str, message: str, level: str = "warning") -> None:
        self.report.append(ReportLine(level, row_id, column, message))

    def _resolve(self, column: str, raw: str) -> Optional[OntologyTermRef]:
        return self.resolver.resolve(column, raw).term

    def _record(self, column: str, raw: str, spec: NodeSpec) -> None:
        self.dictionary.setdefault(column, {})[raw] = self._iris.node_iri(spec)

    def _mapped_individual(self, rule: ColumnRule, raw: str, row_id: int) -> NodeSpec:
        res = self.resolver.resolve(rule.column, raw)
        types = [rule.target_class]
        if res.term is not None and res.term != rule.target_class:
            types.append(res.term)
        elif (res.source == "unresolved" and rule.column in self.resolver.curation_required
              and (rule.column, raw) not in self._warned_values):
            self._warned_values.add((rule.column, raw))
            self.warn(row_id, rule.column, f"{raw!r}: {res.note} (first seen here)")
        spec = individual(types, raw, iri_stem=rule.iri_stem)
        self._record(rule.column, raw, spec)
        return spec

    def _mixture_nodes(self, rule: ColumnRule, raw: str, row_id: int) -> Optional[NodeSpec]:
        key = (rule.column, raw)
        if key in self._mixtures:
            return self._mixtures[key]
        try:
            mix = parse_solvent_mixture(raw, lambda name: self._resolve(rule.column, name))
        except UnparseableMixture as exc:
            self.warn(row_id, rule.column, f"unparseable mixture, kept as literal: {exc}", "fallback")
            self._mixtures[key] = None
            return None
        for w in mix.warnings:
            self.warn(row_id, rule.column, w)
        total = sum(mix.ratio) if mix.ratio else None
        node = individual([rule.target_class, MBS_SOLVENT_MIXTURE], mix.render(), iri_stem=rule.iri_stem)
        for comp in mix.components:
            label = comp.name if total is None else f"{comp.name} {_fmt_fraction(comp.proportion / total)}"
            types = [MBS_MIXTURE_COMPONENT] + ([comp.term] if comp.term else [])
            c = individual(types, label, iri_stem="mixturecomponent")
            if total is not None:
                share = comp.proportion / total
                c.add(SIO_HAS_ATTRIBUTE, value_node(MBS_PROPORTION, TypedLiteral(f"{share.numerator}/{share.denominator}")))
            node.add(SIO_HAS_ATTRIBUTE, c)
        for add in mix.additives:
            types = [MBS_ADDITIVE] + ([add.term] if add.term else [])
            a = individual(types, f"{_fmt_decimal(add.concentration)}{add.unit} {add.name}", iri_stem="additive")
            unit_cls = UNIT_CLASSES.get(add.unit, MBS_CONCENTRATION)
            a.add(SIO_HAS_ATTRIBUTE, value_node((MBS_CONCENTRATION, unit_cls), TypedLiteral.decimal(add.concentration)))
            node.add(SIO_HAS_ATTRIBUTE, a)
        self._record(rule.column, raw, node)
        self._mixtures[key] = node
        return node

    def _rule_targets(self, rule: ColumnRule, raw: str, row_id: int) -> list:
        if rule.strategy is Strategy.SKIP:
            return []
        if rule.strategy is Strategy.REUSED:
            if rule.term_prefix:
                term = _ontology_term(raw, rule.term_prefix, self.ns)
                if term is not None:
                    return [term]
                self.warn(row_id, rule.column, f"{raw!r} is not a {rule.term_prefix} id, kept as literal")
                return [TypedLiteral(raw)]
            if rule.target_class is not None:
                datatype = rule.datatype or XSD_STRING
                try:
                    lit = TypedLiteral(raw, datatype)
                except ValueError:
                    self.warn(row_id, rule.column, f"{raw!r} is not {datatype.rsplit('#', 1)[-1]}, stored as string")
                    lit = TypedLiteral(raw)
                return [value_node(rule.target_class, lit)]
            return [TypedLiteral(raw, rule.datatype or XSD_STRING)]
        if rule.parser is Parser.SOLVENT_MIXTURE:
            node = self._mixture_nodes(rule, raw, row_id)
            return [node] if node is not None else [TypedLiteral(raw)]
        if rule.parser is Parser.METHOD_PHRASE:
            return [self._mapped_individual(rule, step, row_id) for step in parse_method_phrase(raw)]
        return [self._mapped_individual(rule, raw, row_id)]

    def map(self, record: SampleRecord) -> list[NodeSpec]:
        m = self.manifest
        attrs = {"collection": record.collection_id, "filename": record.filename}
        # the collection-level UAI lets later batches link to this one at the collection tier
        coll = NodeSpec(NodeKind.PROV_ENTITY, (PROV_ENTITY, DCAT_DATASET),
                        iri=collection_iri(record.collection_id, self.global_prefix),
                        uai=Uai(collection_id=record.collection_id))
        coll.add(DCT_IDENTIFIER, TypedLiteral(record.collection_id))
        title = record.columns.get(m.title_column) if m.title_column else None
        coll.add(DCT_TITLE, TypedLiteral(title or record.collection_id))

        sample = NodeSpec(NodeKind.PROV_ENTITY, (PROV_ENTITY, SIO_SAMPLE), concept="sample", attributes=attrs,
                          uai=Uai(collection_id=record.collection_id, mzml=record.filename))
        process = NodeSpec(NodeKind.PROV_ACTIVITY, (PROV_ACTIVITY, MBS_SAMPLING_PROCESS),
                           concept="sampling-process", attributes=attrs)
        sample.add(PROV_WAS_GENERATED_BY, process)

        key = organism_key(record, m)
        uri = self.organisms.get(key)
        if uri is None:
            uri = self.organisms[key] = organism_uri(key, self.global_prefix)
        organism = individual(MBS_ORGANISM, key.label(), iri=uri.uri)
        sample.add(PROV_WAS_DERIVED_FROM, organism)

        subjects = {"sample": sample, "organism": organism, "protocol": process}
        for column, raw in record.columns.items():
            if raw is None or column in m.special_columns:
                continue
            rule = m.rules.get(column)
            if rule is None:
                if self.strict:
                    raise UnmappedColumn(f"column {column!r} (row {record.row_id}) has no mapping rule")
                if column not in self._warned_unknown:
                    self._warned_unknown.add(column)
                    self.warn(record.row_id, column, "no mapping rule, column ignored")
                continue
            for target in self._rule_targets(rule, raw, record.row_id):
                subjects[rule.attach_to].add(rule.predicate, target)
        return [sample, coll]

    def sidecar_json(self) -> str:
        return json.dumps(self.dictionary, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def report_tsv(self) -> str:
        lines = ["level\trow\tcolumn\tmessage"]
        lines += [f"{r.level}\t{r.row_id}\t{r.column}\t{r.message}" for r in self.report]
        return "\n".join(lines) + "\n"


def apply_mapping(record: SampleRecord, manifest: MappingManifest,
                  mapper: Optional[MetadataMapper] = None) -> list[NodeSpec]:
    return (mapper or MetadataMapper(manifest)).map(record)


def metadata_graph_iri(input_bytes: bytes, manifest: MappingManifest,
                       global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> str:
    return graph_iri("metadata", global_prefix, input=hashlib.sha256(input_bytes).hexdigest(),
                     manifest=manifest.fingerprint())
