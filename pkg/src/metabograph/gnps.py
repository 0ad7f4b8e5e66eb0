"""GNPS molecular networking (MN) and feature-based MN (FBMN) job bundles.

A bundle is a directory holding a downloaded job result: one or more library
match tables, and for FBMN a feature quantification table. An optional
``bundle.json`` may declare ``collection_id``, ``title``, ``job_id``,
``workflow``, ``spectrum_file``, ``remote_url`` and ``repository``.
"""
from __future__ import annotations

import csv
import enum
import fnmatch
import json
import logging
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

import yaml

from .alignment import TermResolver
from .emitter import (DedupRegistry, DistributionSpec, Emitter, TripleDoc, attach_distribution, collection_iri,
                      file_iri, graph_iri)
from .errors import MissingMandatoryColumn, UnknownLayout
from .identifiers import DEFAULT_GLOBAL_PREFIX, Uai, gnps_violations
from .vocab import (
    DCAT_DATASET, DCT_IDENTIFIER, DCT_TITLE, MBS_MOLECULAR_ANNOTATION, MBS_MQSCORE, MS_IDENTIFICATION_RESULT,
    MS_INCHIKEY, MS_LIBRARY_SPECTRUM, MS_SHARED_PEAKS, PROV_ACTIVITY, PROV_ENTITY, PROV_HAD_MEMBER,
    PROV_HAS_PRIMARY_SOURCE, PROV_SOFTWARE_AGENT, PROV_USED, PROV_WAS_ASSOCIATED_WITH, PROV_WAS_DERIVED_FROM,
    PROV_WAS_GENERATED_BY, SIO_HAS_ATTRIBUTE, SIO_IS_DESCRIBED_BY, XSD_DECIMAL, XSD_STRING, Iri,
    NamespaceRegistry, NodeKind, NodeSpec, OntologyTermRef, T, TypedLiteral, default_registry, individual, nfc,
    value_node,
)

log = logging.getLogger(__name__)


class Workflow(enum.Enum):
    MN = "MN"
    FBMN = "FBMN"


class ColumnStrategy(enum.Enum):
    DIRECT_MAP = "DirectMap"
    LITERAL = "Literal"
    ONTOLOGY_LOOKUP = "OntologyLookup"
    SKIP = "Skip"


FIELDS = {
    "library_accession", "collection_id", "scan", "mzml", "hit_number", "mq_score", "shared_peaks",
    "mz_error_ppm", "mass_diff", "compound_name", "inchikey", "precursor_mz", "adduct", "instrument",
    "ionization", "quality", "cf_kingdom", "cf_superclass", "cf_class", "cf_subclass", "npc_pathway",
    "npc_superclass", "npc_class",
}

# level -> (value-node class, designator)
CLASSYFIRE_LEVELS = {
    "kingdom": (T("MBS:ClassyFireKingdom"), T("MBS:CF_Kingdom")),
    "superclass": (T("MBS:ClassyFireSuperclass"), T("MBS:CF_Superclass")),
    "class": (T("MBS:ClassyFireClass"), T("MBS:CF_Class")),
    "subclass": (T("MBS:ClassyFireSubclass"), T("MBS:CF_Subclass")),
}
NPCLASSIFIER_LEVELS = {
    "pathway": (T("MBS:NPClassifierPathway"), T("NPC:Pathway")),
    "superclass": (T("MBS:NPClassifierSuperclass"), T("NPC:Superclass")),
    "class": (T("MBS:NPClassifierClass"), T("NPC:Class")),
}

MBS_MZ_ERROR_PPM = T("MBS:MZErrorPPM")
MBS_MASS_DIFF = T("MBS:MassDiff")
MBS_FEATURE = T("MBS:Feature")
MBS_JOB = T("MBS:MolecularNetworkingJob")
MS_MASS_SPECTRUM = T("MS:1000294")


@dataclass(frozen=True)
class GnpsColumnRule:
    column: str
    field: Optional[str] = None
    strategy: Optional[ColumnStrategy] = None
    target_class: Optional[OntologyTermRef] = None
    predicate: OntologyTermRef = SIO_HAS_ATTRIBUTE
    datatype: Optional[str] = None
    attach_to: str = "annotation"
    iri_stem: Optional[str] = None

    def __post_init__(self):
        if self.field is not None and self.field not in FIELDS:
            raise ValueError(f"{self.column!r}: unknown field {self.field!r}")
        if self.strategy in (ColumnStrategy.DIRECT_MAP, ColumnStrategy.ONTOLOGY_LOOKUP) and not self.target_class:
            raise ValueError(f"{self.column!r}: {self.strategy.value} needs a target_class")
        if self.attach_to not in ("annotation", "library"):
            raise ValueError(f"{self.column!r}: attach_to must be annotation or library")


@dataclass
class ColumnManifest:
    rules: dict[str, GnpsColumnRule]
    accession_column: str = "SpectrumID"
    collection_column: Optional[str] = None
    annotation_patterns: tuple[str, ...] = ("*.tsv", "*.csv", "*.txt")
    quant_patterns: tuple[str, ...] = ("*quant*.csv", "*quant*.tsv", "quantification_table/*")
    cluster_patterns: tuple[str, ...] = ("*clusterinfo*", "clusterinfo*/*")

    def field_columns(self) -> dict[str, list[str]]:
        """Field -> columns that may fill it, in manifest order."""
        out: dict[str, list[str]] = {f: [] for f in FIELDS}
        if self.collection_column:
            out["collection_id"].append(self.collection_column)
        for rule in self.rules.values():
            if rule.field and rule.column not in out[rule.field]:
                out[rule.field].append(rule.column)
        return out

    def rule_for_field(self, name: str) -> Optional[GnpsColumnRule]:
        for rule in self.rules.values():
            if rule.field == name:
                return rule
        return None

    @classmethod
    def from_dict(cls, data: dict, registry: Optional[NamespaceRegistry] = None) -> "ColumnManifest":
        registry = registry or default_registry()
        rules = {}
        for column, spec in (data.get("columns") or {}).items():
            spec = spec or {}
            datatype = spec.get("datatype")
            if datatype and "://" not in datatype:
                datatype = OntologyTermRef.parse(datatype).iri(registry)
            rules[column] = GnpsColumnRule(
                column=column,
                field=spec.get("field"),
                strategy=ColumnStrategy(spec["strategy"]) if spec.get("strategy") else None,
                target_class=OntologyTermRef.parse(spec["target_class"]) if spec.get("target_class") else None,
                predicate=OntologyTermRef.parse(spec["predicate"]) if spec.get("predicate") else SIO_HAS_ATTRIBUTE,
                datatype=datatype,
                attach_to=spec.get("attach_to", "annotation"),
                iri_stem=spec.get("iri_stem"),
            )
        kw = {k: tuple(data[k]) for k in ("annotation_patterns", "quant_patterns", "cluster_patterns") if k in data}
        return cls(rules, data.get("accession_column", "SpectrumID"), data.get("collection_column"), **kw)

    @classmethod
    def load(cls, path: Union[str, Path, None] = None) -> "ColumnManifest":
        if path is None:
            text = resources.files("metabograph.data").joinpath("gnps_columns.yaml").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls.from_dict(yaml.safe_load(text))


@dataclass(frozen=True)
class IdentificationScores:
    mq_score: Decimal
    shared_peaks: int
    mz_error_ppm: Optional[Decimal] = None
    mass_diff: Optional[Decimal] = None

    def __post_init__(self):
        if not 0 <= self.mq_score <= 1:
            raise ValueError(f"MQScore {self.mq_score} outside [0, 1]")
        if self.shared_peaks < 0:
            raise ValueError(f"negative shared peak count {self.shared_peaks}")


@dataclass(frozen=True)
class ClassificationSet:
    classyfire: dict = field(default_factory=dict)   # level -> label
    npclassifier: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LibrarySpectrumSpec:
    accession: str
    precursor_mz: Optional[Decimal] = None
    adduct: Optional[str] = None
    inchikey: Optional[str] = None
    instrument: Optional[str] = None
    ionization: Optional[str] = None
    quality: Optional[str] = None


@dataclass
class AnnotationRecord:
    uai: Uai
    workflow: Workflow
    library_spectrum_key: str
    identification: IdentificationScores
    classifications: ClassificationSet = field(default_factory=ClassificationSet)
    compound_name: Optional[str] = None
    inchikey: Optional[str] = None
    raw_columns: dict = field(default_factory=dict)
    library: Optional[LibrarySpectrumSpec] = None

    def __post_init__(self):
        problems = gnps_violations(self.uai)
        if self.uai.hit_number != 1:
            problems.append("hit_number must be set to 1 for GNPS records")
        has_feature = self.uai.feature_id is not None or self.uai.feature_table is not None
        if self.workflow is Workflow.FBMN and not (self.uai.feature_id and self.uai.feature_table):
            problems.append("FBMN records need feature_id and feature_table")
        if self.workflow is Workflow.MN and has_feature:
            problems.append("MN records carry no feature components")
        if problems:
            raise ValueError("; ".join(dict.fromkeys(problems)))


@dataclass
class GnpsBundle:
    path: Path
    workflow: Workflow
    job_id: str
    collection_id: Optional[str]
    title: Optional[str]
    annotation_tables: list[Path]
    quant_table: Optional[Path]
    records: list[AnnotationRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)


def _bundle_info(bundle: Path) -> dict:
    meta = bundle / "bundle.json"
    if meta.exists():
        return json.loads(meta.read_text(encoding="utf-8"))
    return {}


def _files(bundle: Path) -> list[Path]:
    return sorted(p for p in bundle.rglob("*") if p.is_file() and p.name != "bundle.json")


def _matches(path: Path, bundle: Path, patterns: Iterable[str]) -> bool:
    rel = path.relative_to(bundle).as_posix()
    return any(fnmatch.fnmatch(path.name, p) or fnmatch.fnmatch(rel, p) for p in patterns)


def _delimiter(path: Path, first_line: str) -> str:
    if path.suffix.lower() == ".tsv" or "\t" in first_line:
        return "\t"
    try:
        return csv.Sniffer().sniff(first_line, delimiters=",;\t").delimiter
    except csv.Error:
        return ","


def _header(path: Path) -> tuple[list[str], str]:
    with open(path, encoding="utf-8-sig", newline="") as fh:
        first = fh.readline().rstrip("\r\n")
    delim = _delimiter(path, first)
    return [h.strip() for h in next(csv.reader([first], delimiter=delim), [])], delim


def _find_tables(bundle: Path, manifest: ColumnManifest):
    annotations, quant, clusters = [], None, []
    for path in _files(bundle):
        if _matches(path, bundle, manifest.quant_patterns):
            quant = quant or path
            continue
        if _matches(path, bundle, manifest.cluster_patterns):
            clusters.append(path)
            continue
        if _matches(path, bundle, manifest.annotation_patterns):
            header, _ = _header(path)
            if manifest.accession_column in header:
                annotations.append(path)
    return annotations, quant, clusters


def detect_workflow(bundle_path: Union[str, Path], manifest: Optional[ColumnManifest] = None) -> Workflow:
    """FBMN iff a feature quantification table is present or declared."""
    bundle = Path(bundle_path)
    if not bundle.is_dir():
        raise UnknownLayout(f"{bundle} is not a bundle directory")
    declared = _bundle_info(bundle).get("workflow")
    if declared:
        return Workflow(declared)
    annotations, quant, clusters = _find_tables(bundle, manifest or ColumnManifest.load())
    if quant is not None:
        return Workflow.FBMN
    if annotations or clusters:
        return Workflow.MN
    raise UnknownLayout(f"{bundle}: neither a feature table nor cluster/annotation tables found")


def _decimal(text: Optional[str]) -> Optional[Decimal]:
    if text is None:
        return None
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise ValueError(f"not a number: {text!r}") from None
    if not value.is_finite():
        raise ValueError(f"not a finite number: {text!r}")
    return value


def _cell(row: dict, column: Optional[str]) -> Optional[str]:
    value = row.get(column) if column else None
    if value is None:
        return None
    value = " ".join(nfc(value).split())
    return None if value in ("", "N/A", "NA", "nan", "null") else value


def read_bundle(bundle_path: Union[str, Path], manifest: Optional[ColumnManifest] = None) -> GnpsBundle:
    manifest = manifest or ColumnManifest.load()
    bundle = Path(bundle_path)
    workflow = detect_workflow(bundle, manifest)
    info = _bundle_info(bundle)
    annotations, quant, _ = _find_tables(bundle, manifest)
    if not annotations:
        raise UnknownLayout(f"{bundle}: no library match table with a {manifest.accession_column!r} column")
    if workflow is Workflow.FBMN and quant is None and not info.get("feature_table"):
        raise UnknownLayout(f"{bundle}: declared FBMN but no feature table found")
    out = GnpsBundle(bundle, workflow, str(info.get("job_id") or bundle.name), info.get("collection_id"),
                     info.get("title"), annotations, quant, info=info)
    feature_table = info.get("feature_table") or (quant.name if quant else None)
    col = manifest.field_columns()
    for table in annotations:
        header, delim = _header(table)
        unknown = [h for h in header if h and h not in manifest.rules]
        for h in unknown:
            out.warnings.append(f"{table.name}: column {h!r} has no rule, kept as literal")
        if not set(col["collection_id"]) & set(header) and not out.collection_id:
            raise MissingMandatoryColumn(f"{table}: no collection column and no collection_id in bundle.json")
        with open(table, encoding="utf-8-sig", newline="") as fh:
            reader = csv.DictReader(fh, delimiter=delim)
            reader.fieldnames = [h.strip() for h in reader.fieldnames]
            for lineno, row in enumerate(reader, 2):
                try:
                    rec = _record(row, col, manifest, workflow, table.name, feature_table, out.collection_id,
                                  info.get("spectrum_file"))
                except ValueError as exc:
                    out.warnings.append(f"{table.name}:{lineno}: row skipped: {exc}")
                    continue
                out.records.append(rec)
    return out


def _record(row: dict, col: dict, manifest: ColumnManifest, workflow: Workflow, table_name: str,
            feature_table: Optional[str], default_collection: Optional[str],
            default_spectrum_file: Optional[str]) -> AnnotationRecord:
    def get(name: str) -> Optional[str]:
        for column in col.get(name, ()):
            value = _cell(row, column)
            if value is not None:
                return value
        return None

    accession = get("library_accession")
    if not accession:
        raise ValueError("empty library accession")
    collection = get("collection_id") or default_collection
    hit = get("hit_number")
    scan = get("scan")
    mzml = get("mzml") or default_spectrum_file
    uai = Uai(
        collection_id=collection,
        mzml=mzml,
        scan=scan if workflow is Workflow.MN else None,
        annotation_file=table_name,
        hit_number=int(Decimal(hit)) if hit else 1,
        feature_id=scan if workflow is Workflow.FBMN else None,
        feature_table=feature_table if workflow is Workflow.FBMN else None,
    )
    mq, sp = _decimal(get("mq_score")), _decimal(get("shared_peaks"))
    if mq is None or sp is None:
        raise ValueError("MQScore and SharedPeaks are required")
    scores = IdentificationScores(mq, int(sp), _decimal(get("mz_error_ppm")), _decimal(get("mass_diff")))
    classes = ClassificationSet(
        {lvl: v for lvl in CLASSYFIRE_LEVELS for v in [get(f"cf_{lvl}")] if v},
        {lvl: v for lvl in NPCLASSIFIER_LEVELS for v in [get(f"npc_{lvl}")] if v},
    )
    inchikey = get("inchikey")
    library = LibrarySpectrumSpec(accession, _decimal(get("precursor_mz")), get("adduct"), inchikey,
                                  get("instrument"), get("ionization"), get("quality"))
    raw = {k.strip(): v for k, v in row.items() if k}
    return AnnotationRecord(uai, workflow, accession, scores, classes, get("compound_name"), inchikey, raw, library)


def load_gnps_job(bundle_path: Union[str, Path], column_manifest: Optional[ColumnManifest] = None) -> list[AnnotationRecord]:
    return read_bundle(bundle_path, column_manifest).records


# --- emission -------------------------------------------------------------

def _uai_attrs(uai: Uai) -> dict[str, str]:
    return {k: str(v) for k, v in uai.components().items()}


class AnnotationEmitter:
    """Builds the annotation-side and library-side NodeSpecs of GNPS records."""

    def __init__(self, manifest: Optional[ColumnManifest] = None, resolver: Optional[TermResolver] = None,
                 namespaces: Optional[NamespaceRegistry] = None, global_prefix: str = DEFAULT_GLOBAL_PREFIX):
        self.manifest = manifest or ColumnManifest.load()
        self.resolver = resolver
        self.ns = namespaces or default_registry()
        self.global_prefix = global_prefix
        self._iris = Emitter(namespaces=self.ns, global_prefix=global_prefix)
        self._field_columns = {r.column for r in self.manifest.rules.values() if r.field}

    def library_spec(self, lib: LibrarySpectrumSpec, raw_columns: Optional[dict] = None) -> NodeSpec:
        node = individual(MS_LIBRARY_SPECTRUM, lib.accession, iri_stem="libraryspectrum")
        if lib.inchikey:
            node.add(SIO_HAS_ATTRIBUTE, value_node(MS_INCHIKEY, TypedLiteral(lib.inchikey)))
        for fname, value in (("precursor_mz", lib.precursor_mz), ("adduct", lib.adduct),
                             ("instrument", lib.instrument), ("ionization", lib.ionization),
                             ("quality", lib.quality)):
            rule = self.manifest.rule_for_field(fname)
            if value is not None and rule is not None:
                node.add(rule.predicate, self._by_strategy(rule, str(value)))
        self._extra_columns(node, raw_columns or {}, "library")
        return node

    def library_iri(self, accession: str) -> str:
        return self._iris.node_iri(individual(MS_LIBRARY_SPECTRUM, accession, iri_stem="libraryspectrum"))

    def _by_strategy(self, rule: GnpsColumnRule, value: str):
        strategy = rule.strategy or ColumnStrategy.LITERAL
        if strategy is ColumnStrategy.DIRECT_MAP:
            try:
                lit = TypedLiteral(value, rule.datatype or XSD_STRING)
            except ValueError:
                lit = TypedLiteral(value)
            return value_node(rule.target_class, lit)
        if strategy is ColumnStrategy.ONTOLOGY_LOOKUP:
            types = [rule.target_class]
            if self.resolver is not None:
                term = self.resolver.resolve(rule.column, value).term
                if term is not None and term != rule.target_class:
                    types.append(term)
            return individual(types, value, iri_stem=rule.iri_stem)
        return TypedLiteral(value, rule.datatype or XSD_STRING)

    def _extra_columns(self, node: NodeSpec, raw: dict, attach_to: str) -> None:
        """Columns outside the fixed layout, emitted by their declared strategy."""
        for column in sorted(raw):
            value = _cell(raw, column)
            if value is None or column in self._field_columns:
                continue
            rule = self.manifest.rules.get(column)
            if rule is None:
                if attach_to != "annotation":
                    continue
                local = "".join(ch for ch in column if ch.isalnum() or ch == "_") or "column"
                rule = GnpsColumnRule(column, strategy=ColumnStrategy.LITERAL, predicate=T(f"MBS:gnps_{local}"))
            if rule.strategy is ColumnStrategy.SKIP or rule.attach_to != attach_to:
                continue
            node.add(rule.predicate, self._by_strategy(rule, value))

    def annotation_specs(self, rec: AnnotationRecord, job: Optional[NodeSpec] = None) -> list[NodeSpec]:
        uai, attrs = rec.uai, _uai_attrs(rec.uai)
        ann = NodeSpec(NodeKind.PROV_ENTITY, (PROV_ENTITY, MBS_MOLECULAR_ANNOTATION),
                       concept="annotation", attributes=attrs, uai=uai)

        ir = NodeSpec(NodeKind.PROV_ENTITY, (PROV_ENTITY, MS_IDENTIFICATION_RESULT),
                      concept="identification-result", attributes=attrs)
        s = rec.identification
        ir.add(PROV_HAD_MEMBER, value_node(MBS_MQSCORE, TypedLiteral.decimal(s.mq_score)))
        ir.add(PROV_HAD_MEMBER, value_node(MS_SHARED_PEAKS, TypedLiteral.decimal(s.shared_peaks)))
        if s.mz_error_ppm is not None:
            ir.add(PROV_HAD_MEMBER, value_node(MBS_MZ_ERROR_PPM, TypedLiteral.decimal(s.mz_error_ppm)))
        if s.mass_diff is not None:
            ir.add(PROV_HAD_MEMBER, value_node(MBS_MASS_DIFF, TypedLiteral.decimal(s.mass_diff)))
        ann.add(PROV_HAS_PRIMARY_SOURCE, ir)

        for levels, values in ((CLASSYFIRE_LEVELS, rec.classifications.classyfire),
                               (NPCLASSIFIER_LEVELS, rec.classifications.npclassifier)):
            for level, (cls, designator) in levels.items():
                if values.get(level):
                    node = value_node(cls, TypedLiteral(values[level]))
                    node.add(SIO_IS_DESCRIBED_BY, designator)
                    ann.add(SIO_HAS_ATTRIBUTE, node)

        ann.add(SIO_HAS_ATTRIBUTE, Iri(self.library_iri(rec.library_spectrum_key)))

        if rec.workflow is Workflow.FBMN:
            data = NodeSpec(NodeKind.PROV_ENTITY, (PROV_ENTITY, MBS_FEATURE), concept="feature",
                            attributes={"collection": uai.collection_id, "feature_table": uai.feature_table,
                                        "feature_id": uai.feature_id},
                            uai=Uai(collection_id=uai.collection_id, mzml=uai.mzml,
                                    feature_id=uai.feature_id, feature_table=uai.feature_table))
        else:
            data = NodeSpec(NodeKind.PROV_ENTITY, (PROV_ENTITY, MS_MASS_SPECTRUM), concept="spectrum",
                            attributes={k: v for k, v in (("collection", uai.collection_id), ("mzml", uai.mzml),
                                                          ("scan", uai.scan)) if v},
                            uai=Uai(collection_id=uai.collection_id, mzml=uai.mzml, scan=uai.scan))
        ann.add(PROV_WAS_DERIVED_FROM, data)
        if job is not None:
            ann.add(PROV_WAS_GENERATED_BY, job)
        if rec.compound_name:
            rule = self.manifest.rule_for_field("compound_name")
            if rule is not None:
                ann.add(rule.predicate, self._by_strategy(rule, rec.compound_name))
        self._extra_columns(ann, rec.raw_columns, "annotation")
        return [ann]

    def job_spec(self, bundle: GnpsBundle, collection_id: str) -> NodeSpec:
        job = NodeSpec(NodeKind.PROV_ACTIVITY, (PROV_ACTIVITY, MBS_JOB), concept="workflow-run",
                       attributes={"collection": collection_id, "job": bundle.job_id,
                                   "workflow": bundle.workflow.value})
        job.add(PROV_WAS_ASSOCIATED_WITH, individual(PROV_SOFTWARE_AGENT, f"GNPS {bundle.workflow.value}",
                                                     iri_stem="software"))
        for table in bundle.annotation_tables + ([bundle.quant_table] if bundle.quant_table else []):
            job.add(PROV_USED, Iri(file_iri(collection_id, table.name, self.global_prefix)))
        return job

    def collection_spec(self, collection_id: str, title: Optional[str]) -> NodeSpec:
        coll = NodeSpec(NodeKind.PROV_ENTITY, (PROV_ENTITY, DCAT_DATASET),
                        iri=collection_iri(collection_id, self.global_prefix))
        coll.add(DCT_IDENTIFIER, TypedLiteral(collection_id))
        if title:
            # only a declared title: the metadata side owns the fallback, and two
            # different fallbacks would give the collection two titles
            coll.add(DCT_TITLE, TypedLiteral(title))
        return coll

    def distributions(self, bundle: GnpsBundle, collection_id: str) -> list[tuple[str, DistributionSpec]]:
        """Where each bundle file lives: remote when bundle.json gives a base URL."""
        remote = bundle.info.get("remote_url")
        out = []
        for table in bundle.annotation_tables + ([bundle.quant_table] if bundle.quant_table else []):
            rel = table.relative_to(bundle.path).as_posix()
            locator = f"{remote.rstrip('/')}/{rel}" if remote else str(table.resolve())
            out.append((collection_iri(collection_id, self.global_prefix),
                        DistributionSpec(file_iri(collection_id, table.name, self.global_prefix), table.name,
                                         locator, bundle.info.get("repository"))))
        return out


def emit_annotation_nodes(rec: AnnotationRecord, emitter: Optional[AnnotationEmitter] = None) -> list[NodeSpec]:
    return (emitter or AnnotationEmitter()).annotation_specs(rec)


def bundle_graph_iri(bundle: GnpsBundle, global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> str:
    collection = bundle.collection_id or ",".join(sorted({r.uai.collection_id for r in bundle.records}))
    return graph_iri("gnps", global_prefix, job=bundle.job_id, workflow=bundle.workflow.value,
                     collection=collection or "none")


def library_graph_iri(global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> str:
    return graph_iri("library", global_prefix)


def bundle_docs(bundle: GnpsBundle, emitter: AnnotationEmitter, registry: DedupRegistry,
                library: Optional[TripleDoc] = None) -> tuple[TripleDoc, TripleDoc]:
    """Emit one bundle into its own named graph; library spectra go to ``library``."""
    out = Emitter(registry, emitter.ns, emitter.global_prefix)
    library = library if library is not None else TripleDoc(library_graph_iri(emitter.global_prefix))
    collections = sorted({r.uai.collection_id for r in bundle.records})
    jobs = {c: emitter.job_spec(bundle, c) for c in collections}
    specs: list[NodeSpec] = [emitter.collection_spec(c, bundle.title) for c in collections]
    seen_library: set[str] = set()
    lib_specs = []
    for rec in bundle.records:
        specs.extend(emitter.annotation_specs(rec, jobs[rec.uai.collection_id]))
        if rec.library_spectrum_key not in seen_library:
            seen_library.add(rec.library_spectrum_key)
            lib_specs.append(emitter.library_spec(rec.library, rec.raw_columns))
    doc = out.emit(specs, bundle_graph_iri(bundle, emitter.global_prefix))
    for c in collections:
        for entity, dist in emitter.distributions(bundle, c):
            doc.update(attach_distribution(entity, dist, emitter.ns))
    lib_doc = out.emit(lib_specs, library.graph_name)
    library.update(lib_doc.triples)
    for iri, kind in lib_doc.node_kinds.items():
        library.node_kinds.setdefault(iri, kind)
    return doc, library
