"""Command line entry point: ``metabograph <command> [options]``.

Every command reads and writes under ``--out``; ``graphs.tsv`` there indexes
the emitted named graphs (graph IRI, kind, N-Triples file, triple count) and
is what ``link``, ``load``, ``validate`` and ``report`` work from.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import traceback
from collections import Counter, defaultdict
from pathlib import Path
from typing import Optional

from . import __version__
from .alignment import CurationFile, RemoteLookup, TermIndex, TermResolver
from .config import RunConfig
from .emitter import DedupRegistry, Emitter, TripleDoc, iri_term, parse_ntriples, serialize, stats_rows, write
from .errors import MetabographError
from .gnps import AnnotationEmitter, ColumnManifest, bundle_docs, library_graph_iri, read_bundle
from .identifiers import uai_parse
from .linkage import link_batches, linkage_graph_iri
from .metadata import (MappingManifest, MetadataMapper, build_organism_individuals, load_metadata,
                       metadata_graph_iri, missingness_report, organism_key)
from .query import CqId, load_endpoint, open_endpoint, run_cq
from .vocab import (
    DCAT_DATASET, DCT_TITLE, MBS_MOLECULAR_ANNOTATION, MBS_UAI, PROV_ACTIVITY, PROV_ENTITY, PROV_HAS_PRIMARY_SOURCE,
    PROV_VALUE, PROV_WAS_GENERATED_BY, RDF_TYPE, SIO_HAS_IDENTIFIER, NamespaceRegistry, default_registry, expand,
)

log = logging.getLogger("metabograph")

INDEX = "graphs.tsv"
INDEX_HEADER = ("graph", "kind", "file", "triples")


# --- graph index ------------------------------------------------------------

def read_index(out: Path) -> dict[str, tuple[str, str, int]]:
    path = out / INDEX
    if not path.exists():
        return {}
    with open(path, encoding="utf-8", newline="") as fh:
        return {r["graph"]: (r["kind"], r["file"], int(r["triples"]))
                for r in csv.DictReader(fh, delimiter="\t")}


def write_index(out: Path, index: dict[str, tuple[str, str, int]]) -> None:
    lines = ["\t".join(INDEX_HEADER)]
    lines += [f"{g}\t{k}\t{f}\t{n}" for g, (k, f, n) in sorted(index.items(), key=lambda kv: (kv[1][1], kv[0]))]
    (out / INDEX).write_text("\n".join(lines) + "\n", encoding="utf-8")


def store_doc(cfg: RunConfig, doc: TripleDoc, kind: str, name: str, ns: NamespaceRegistry) -> Path:
    """Write canonical N-Triples (plus the configured format) and index the graph."""
    out = cfg.out_dir
    rel = Path("graphs") / f"{name}.nt"
    write(doc, out / rel, "nt")
    if cfg.format != "nt":
        write(doc, out / "graphs" / f"{name}.{cfg.format}", cfg.format, ns)
    index = read_index(out)
    index[doc.graph_name] = (kind, rel.as_posix(), len(doc))
    write_index(out, index)
    return out / rel


def load_docs(out: Path, kinds: Optional[set] = None) -> list[TripleDoc]:
    docs = []
    for graph, (kind, rel, _) in sorted(read_index(out).items()):
        if kinds is None or kind in kinds:
            docs.append(parse_ntriples((out / rel).read_bytes(), graph))
    return docs


# --- shared setup -----------------------------------------------------------

def namespaces(cfg: RunConfig) -> NamespaceRegistry:
    ns = default_registry()
    if cfg.registry_path:
        ns = ns.merged(NamespaceRegistry.load(cfg.registry_path))
    return ns


def resolver(cfg: RunConfig, ns: NamespaceRegistry) -> TermResolver:
    index = TermIndex.load(cfg.term_index, ns) if cfg.term_index else TermIndex.default()
    curation = CurationFile.load(cfg.curation, ns) if cfg.curation else None
    remote = None
    if not cfg.offline:
        cache = cfg.cache_dir or cfg.out_dir / "ols-cache"
        remote = RemoteLookup(cfg.ols_endpoint, cache, enabled=True, fallback_index=index, registry=ns)
    return TermResolver(index, curation, remote=remote)


def write_tsv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# --- commands ---------------------------------------------------------------

def cmd_ingest_metadata(cfg: RunConfig, args) -> int:
    ns = namespaces(cfg)
    manifest = MappingManifest.load(cfg.metadata_manifest)
    path = Path(args.input)
    records = load_metadata(path, manifest)
    mapper = MetadataMapper(manifest, resolver(cfg, ns), ns, cfg.global_prefix, strict=cfg.strict)
    specs = [spec for rec in records for spec in mapper.map(rec)]
    registry = DedupRegistry()
    doc = Emitter(registry, ns, cfg.global_prefix).emit(specs, metadata_graph_iri(path.read_bytes(), manifest,
                                                                                 cfg.global_prefix))
    out = cfg.out_dir
    name = f"metadata-{path.stem}"
    nt = store_doc(cfg, doc, "metadata", name, ns)

    report = missingness_report(records)
    (out / f"{name}.missingness.tsv").write_text(report.to_tsv(), encoding="utf-8")
    uris, ratio = build_organism_individuals(records, manifest, cfg.global_prefix)
    counts = Counter(organism_key(r, manifest) for r in records)
    write_tsv(out / f"{name}.organisms.tsv", ("organism", "rows", "label"),
              sorted((uris[k].uri, n, k.label()) for k, n in counts.items()))
    (out / f"{name}.mapping.json").write_text(mapper.sidecar_json(), encoding="utf-8")
    (out / f"{name}.report.tsv").write_text(mapper.report_tsv(), encoding="utf-8")
    write_tsv(out / f"{name}.stats.tsv", ("kind", "key", "count"), stats_rows(doc, registry, ns))
    print(f"{path.name}: {len(records)} samples, {len(doc)} triples -> {nt}")
    print(f"organisms: {len(uris)} distinct of {len(records)} rows (dedup {float(ratio):.1%})")
    print(f"sparse columns (>{report.threshold:g}% missing): {len(report.sparse_columns)}")
    warnings = sum(1 for r in mapper.report if r.level != "info")
    if warnings:
        print(f"{warnings} mapping warnings, see {name}.report.tsv")
    return 0


def cmd_ingest_gnps(cfg: RunConfig, args) -> int:
    ns = namespaces(cfg)
    manifest = ColumnManifest.load(cfg.gnps_columns)
    emitter = AnnotationEmitter(manifest, resolver(cfg, ns), ns, cfg.global_prefix)
    registry = DedupRegistry()
    out = cfg.out_dir
    lib_graph = library_graph_iri(cfg.global_prefix)
    library = TripleDoc(lib_graph)
    existing = read_index(out).get(lib_graph)
    if existing:
        library = parse_ntriples((out / existing[1]).read_bytes(), lib_graph)
    summary, errors = [], 0
    for bundle_path in args.bundles:
        try:
            bundle = read_bundle(bundle_path, manifest)
            doc, library = bundle_docs(bundle, emitter, registry, library)
            name = f"gnps-{bundle.workflow.value.lower()}-{bundle.job_id}"
            store_doc(cfg, doc, "gnps", name, ns)
            write_tsv(out / f"{name}.warnings.tsv", ("warning",), [(w,) for w in bundle.warnings])
            write_tsv(out / f"{name}.stats.tsv", ("kind", "key", "count"), stats_rows(doc, None, ns))
            summary.append((str(bundle_path), "ok", bundle.workflow.value, len(bundle.records), len(doc),
                            len(bundle.warnings), ""))
        except (MetabographError, OSError, ValueError) as exc:
            errors += 1
            summary.append((str(bundle_path), "error", "", 0, 0, 0, f"{type(exc).__name__}: {exc}"))
            log.error("%s: %s", bundle_path, exc)
    if len(library):
        store_doc(cfg, library, "library", "library", ns)
    write_tsv(out / "gnps_summary.tsv", ("bundle", "status", "workflow", "annotations", "triples", "warnings",
                                         "error"), summary)
    for row in summary:
        print("\t".join(str(x) for x in row[:6]) + (f"\t{row[6]}" if row[6] else ""))
    print(f"{len(summary) - errors} of {len(summary)} bundles ingested; library: {len(library)} triples")
    return 1 if errors else 0


def cmd_link(cfg: RunConfig, args) -> int:
    ns = namespaces(cfg)
    docs = load_docs(cfg.out_dir, {"metadata", "gnps"})
    before = set()
    previous = read_index(cfg.out_dir).get(linkage_graph_iri(cfg.global_prefix))
    if previous:
        before = parse_ntriples((cfg.out_dir / previous[1]).read_bytes(), "").triples
    doc = link_batches(docs, namespaces=ns, global_prefix=cfg.global_prefix)
    store_doc(cfg, doc, "linkage", "linkage", ns)
    counts = Counter(ns.curie(p[1:-1]) for _, p, _ in doc.triples)
    for pred, n in sorted(counts.items()):
        print(f"{pred}\t{n}")
    print(f"{len(doc)} links over {len(docs)} batches ({len(doc.triples - before)} new)")
    return 0


def _endpoint(cfg: RunConfig):
    return open_endpoint(cfg.endpoint, cfg.embedded_store, cfg.store_url)


def cmd_load(cfg: RunConfig, args) -> int:
    docs = load_docs(cfg.out_dir)
    report = load_endpoint(docs, _endpoint(cfg))
    (cfg.out_dir / "load_report.tsv").write_text(report.to_tsv(), encoding="utf-8")
    print(report.to_tsv(), end="")
    return 0


def cmd_query(cfg: RunConfig, args) -> int:
    endpoint = _endpoint(cfg)
    indexed = read_index(cfg.out_dir)
    if cfg.endpoint in ("", "embedded") and indexed:
        loaded = endpoint.graphs()
        if any(loaded.get(g) != n for g, (_, _, n) in indexed.items()):
            load_endpoint(load_docs(cfg.out_dir), endpoint)
    params = {}
    for item in args.param or []:
        var, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"--param expects var=value, got {item!r}")
        params.setdefault(var, []).append(value)
    ids = list(CqId) if args.cq == "all" else [CqId(args.cq.upper())]
    for cid in ids:
        table, manifest = run_cq(cid, endpoint, params if args.cq != "all" else None,
                                 cfg.out_dir / "results", namespaces(cfg))
        print(f"# {cid.value}: {manifest.rows} rows in {manifest.elapsed_s:.3f}s")
        print(table.to_tsv(), end="")
    return 0


# --- validation -------------------------------------------------------------

def validate_docs(docs: list[TripleDoc], ns: Optional[NamespaceRegistry] = None) -> list[tuple[str, str, str]]:
    """Structural checks over emitted graphs; returns (check, subject, detail) rows."""
    ns = ns or default_registry()
    t = lambda term: iri_term(expand(term, ns))  # noqa: E731
    rdf_type, value_p, ident = t(RDF_TYPE), t(PROV_VALUE), t(SIO_HAS_IDENTIFIER)
    prov = {t(PROV_ENTITY), t(PROV_ACTIVITY)}
    uai_cls, ann_cls, title_p = t(MBS_UAI), t(MBS_MOLECULAR_ANNOTATION), t(DCT_TITLE)
    dataset = t(DCAT_DATASET)
    uai_string = iri_term(ns["MBS"] + "uaiString")
    hit_p = iri_term(ns["MBS"] + "hitNumber")
    coll_p = iri_term(ns["MBS"] + "collectionID")
    annot_p = iri_term(ns["MBS"] + "annotationFile")
    functional = {t(PROV_HAS_PRIMARY_SOURCE), t(PROV_WAS_GENERATED_BY), ident}

    props: dict[str, dict[str, set]] = defaultdict(lambda: defaultdict(set))
    for doc in docs:
        for s, p, o in doc.triples:
            props[s][p].add(o)

    out = []
    keys: dict[tuple, list[str]] = defaultdict(list)
    for s, po in props.items():
        types = po.get(rdf_type, set())
        is_prov = bool(types & prov)
        if value_p in po:
            if is_prov:
                out.append(("prov_with_value", s, "PROV node carries prov:value"))
            for v in po[value_p]:
                dt = v.rsplit("^^", 1)[1] if v.endswith(">") and "^^<" in v else "xsd:string"
                keys[(tuple(sorted(types)), dt, v)].append(s)
            if len(po[value_p]) > 1:
                out.append(("value_node_merged", s, f"{len(po[value_p])} values on one value node"))
        if is_prov:
            for p in functional:
                if len(po.get(p, ())) > 1 and uai_cls not in types:
                    out.append(("prov_merged", s, f"{len(po[p])} values for {ns.curie(p[1:-1])}"))
        if ann_cls in types and ident not in po:
            out.append(("annotation_without_uai", s, "MolecularAnnotation has no SIO:000675 identifier"))
        if len(po.get(title_p, ())) > 1 and dataset in types:
            out.append(("multiple_titles", s, " | ".join(sorted(po[title_p]))))
        if uai_cls in types:
            strings = po.get(uai_string, set())
            if len(strings) != 1:
                out.append(("uai_invariant", s, f"{len(strings)} UAI strings"))
                continue
            try:
                uai = uai_parse(json.loads(next(iter(strings))))
            except (MetabographError, ValueError) as exc:
                out.append(("uai_invariant", s, f"unparseable UAI string: {exc}"))
                continue
            if uai.collection_id is not None and len(po.get(coll_p, ())) != 1:
                out.append(("uai_invariant", s, "collection component not linked exactly once"))
            if annot_p in po and coll_p not in po:
                out.append(("uai_invariant", s, "annotation file without collection"))
    for key, subjects in keys.items():
        if len(subjects) > 1:
            out.append(("duplicate_value_node", sorted(subjects)[0], f"{len(subjects)} subjects share one key"))

    # GNPS annotations always carry hit 1
    for s, po in props.items():
        if ann_cls in po.get(rdf_type, set()):
            for u in po.get(ident, ()):
                for hit in props.get(u, {}).get(hit_p, ()):
                    if json.loads(hit.split("^^")[0]) != "1":
                        out.append(("hit_number", s, f"hit number {hit.split('^^')[0]}"))
    return sorted(set(out))


def cmd_validate(cfg: RunConfig, args) -> int:
    docs = load_docs(cfg.out_dir)
    violations = validate_docs(docs, namespaces(cfg))
    write_tsv(cfg.out_dir / "violations.tsv", ("check", "subject", "detail"), violations)
    counts = Counter(v[0] for v in violations)
    for check, n in sorted(counts.items()):
        print(f"{check}\t{n}")
    print(f"{len(violations)} violations in {len(docs)} graphs")
    return 1 if violations else 0


def cmd_report(cfg: RunConfig, args) -> int:
    ns = namespaces(cfg)
    index = read_index(cfg.out_dir)
    rows = []
    for doc in load_docs(cfg.out_dir):
        kind = index[doc.graph_name][0]
        for key, sub, n in stats_rows(doc, None, ns):
            rows.append((doc.graph_name, kind, key, sub, n))
    write_tsv(cfg.out_dir / "report.tsv", ("graph", "graph_kind", "kind", "key", "count"), rows)
    for graph, (kind, rel, n) in sorted(index.items(), key=lambda kv: kv[1][1]):
        print(f"{kind}\t{n}\t{rel}")
    print(f"{sum(n for _, _, n in index.values())} triples in {len(index)} graphs")
    return 0


COMMANDS = {
    "ingest-metadata": cmd_ingest_metadata,
    "ingest-gnps": cmd_ingest_gnps,
    "link": cmd_link,
    "load": cmd_load,
    "query": cmd_query,
    "validate": cmd_validate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--out", type=Path, help="output directory (default: build)")
    common.add_argument("--endpoint", help="'embedded' or a SPARQL query URL (env: METABOKG_ENDPOINT)")
    common.add_argument("--offline", action="store_true", default=None, help="no network lookups")
    common.add_argument("--strict", action="store_true", default=None, help="fail on unmapped columns")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="metabograph", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("ingest-metadata", parents=[common], help="sample metadata TSV -> graph")
    p.add_argument("input", type=Path)
    p = sub.add_parser("ingest-gnps", parents=[common], help="GNPS job bundles -> graphs")
    p.add_argument("bundles", nargs="+", type=Path)
    sub.add_parser("link", parents=[common], help="link UAIs across emitted batches")
    sub.add_parser("load", parents=[common], help="load emitted graphs into the endpoint")
    p = sub.add_parser("query", parents=[common], help="run a competency question")
    p.add_argument("cq", choices=[c.value for c in CqId] + [c.value.lower() for c in CqId] + ["all"])
    p.add_argument("--param", action="append", metavar="VAR=VALUE", help="pin a result variable (repeatable)")
    sub.add_parser("validate", parents=[common], help="structural checks over emitted graphs")
    sub.add_parser("report", parents=[common], help="per-graph statistics")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = RunConfig.load(args.config).with_overrides(out_dir=args.out, endpoint=args.endpoint,
                                                     offline=args.offline, strict=args.strict)
    problems = cfg.check()
    if problems:
        for msg in problems:
            print(f"config: {msg}", file=sys.stderr)
        return 2
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, args)
    except (MetabographError, OSError) as exc:
        error = {"command": args.command, "error": type(exc).__name__, "message": str(exc)}
        (cfg.out_dir / "error.json").write_text(json.dumps(error, indent=2) + "\n", encoding="utf-8")
        print(json.dumps(error), file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
