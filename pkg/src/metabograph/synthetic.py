"""Deterministic synthetic corpora: a sample metadata table plus GNPS bundles.

``cq_corpus`` is the small hand-laid corpus the query tests reason about;
``random_corpus`` scales the same layout up for smoke and determinism runs.
Rows are plain dicts so tests can compute expected answers without going
through the package.
"""
from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

METADATA_COLUMNS = (
    "filename", "ATTRIBUTE_DatasetAccession", "DatasetTitle", "SampleType", "SampleTypeSub1", "NCBITaxonomy",
    "Country", "ENVOEnvironmentBiomeIndex", "ENVOEnvironmentMaterialIndex", "BiologicalSex", "LifeStage",
    "HealthStatus", "AgeInYears", "UBERONBodyPartName", "MassSpectrometer", "SampleCollectionMethod",
    "SampleExtractionMethod", "YearOfAnalysis",
)
GNPS_COLUMNS = (
    "SpectrumID", "#Scan#", "SpectrumFile", "ATTRIBUTE_DatasetAccession", "MQScore", "SharedPeaks",
    "MZErrorPPM", "MassDiff", "Compound_Name", "INCHIKEY", "Precursor_MZ", "Adduct", "Instrument", "Ion_Source",
    "LibraryName", "Smiles", "CF_kingdom", "CF_superclass", "CF_class", "CF_subclass", "npclassifier_pathway",
    "npclassifier_superclass", "npclassifier_class", "RT_Query", "TIC_Query",
)

COMPOUNDS = (
    # name, inchikey, cf (kingdom, superclass, class, subclass), npc (pathway, superclass, class)
    ("Caffeine", "RYYVLZVUVIJVGH-UHFFFAOYSA-N",
     ("Organic compounds", "Organoheterocyclic compounds", "Imidazopyrimidines", "Purines and purine derivatives"),
     ("Alkaloids", "Pseudoalkaloids", "Purine alkaloids")),
    ("Cholic acid", "BHQCQFFYRZLCQQ-OELDTZBJSA-N",
     ("Organic compounds", "Lipids and lipid-like molecules", "Steroids and steroid derivatives", "Bile acids"),
     ("Terpenoids", "Steroids", "Cholane steroids")),
    ("Phenylalanine", "COLNVLDHVKWLRT-QMMMGPOBSA-N",
     ("Organic compounds", "Organic acids and derivatives", "Carboxylic acids and derivatives", "Amino acids"),
     ("Amino acids and Peptides", "Small peptides", "Aminoacids")),
    ("Quercetin", "REFJWTPEDVJJIY-UHFFFAOYSA-N",
     ("Organic compounds", "Phenylpropanoids and polyketides", "Flavonoids", "Flavones"),
     ("Shikimates and Phenylpropanoids", "Flavonoids", "Flavonols")),
    ("Palmitic acid", "IPCSVZSSVZVIGE-UHFFFAOYSA-N",
     ("Organic compounds", "Lipids and lipid-like molecules", "Fatty Acyls", "Fatty acids and conjugates"),
     ("Fatty acids", "Fatty Acids and Conjugates", "")),
    ("Tryptophan", "QIVBCKIJPJAHHM-UHFFFAOYSA-N",
     ("Organic compounds", "Organic acids and derivatives", "Carboxylic acids and derivatives", "Amino acids"),
     ("Amino acids and Peptides", "Small peptides", "Aminoacids")),
)
ADDUCTS = ("[M+H]+", "[M+Na]+", "[M-H]-")
SAMPLE_TYPES = (("animal", "digestive tract"), ("plant", "leaf"), ("environmental", "soil"), ("animal", "blood"))
TAXA = ("9606|Homo sapiens", "10090|Mus musculus", "3702|Arabidopsis thaliana", "")
EXTRACTIONS = ("methanol-water (4:1) + 0.1% formic acid", "acetonitrile-water (1:1)", "methanol", "")


@dataclass
class BundleFixture:
    name: str
    workflow: str  # "MN" or "FBMN"
    rows: list[dict]
    info: dict = field(default_factory=dict)
    quant_rows: Optional[list[dict]] = None


@dataclass
class Corpus:
    metadata: list[dict]
    bundles: list[BundleFixture]

    @property
    def titles(self) -> dict[str, str]:
        return {r["ATTRIBUTE_DatasetAccession"]: r["DatasetTitle"] for r in self.metadata}


def sample_row(coll: str, title: str, i: int, kind: int, taxon: str = "", extraction: str = "",
               year: str = "2021") -> dict:
    stype, sub = SAMPLE_TYPES[kind % len(SAMPLE_TYPES)]
    return {
        "filename": f"{coll}_run{i:03d}.mzML",
        "ATTRIBUTE_DatasetAccession": coll,
        "DatasetTitle": title,
        "SampleType": stype,
        "SampleTypeSub1": sub,
        "NCBITaxonomy": taxon,
        "Country": ("France", "United States of America", "Brazil", "NA")[i % 4],
        "ENVOEnvironmentBiomeIndex": ("ENVO:01000249", "ENVO:00000446", "not specified")[i % 3],
        "ENVOEnvironmentMaterialIndex": ("ENVO:00002003", "")[i % 2],
        "BiologicalSex": ("female", "male", "not specified")[i % 3],
        "LifeStage": ("Adult (>18 yrs)", "Child (2-12 yrs)", "not specified")[i % 3],
        "HealthStatus": ("healthy", "not specified")[i % 2],
        "AgeInYears": ("34", "8.5", "NA")[i % 3],
        "UBERONBodyPartName": ("feces", "blood plasma", "")[kind % 3],
        "MassSpectrometer": ("Q Exactive", "maXis", "Orbitrap Fusion")[i % 3],
        "SampleCollectionMethod": ("swab; freeze-dried", "biopsy, stored at -80C", "")[i % 3],
        "SampleExtractionMethod": extraction,
        "YearOfAnalysis": year,
    }


def annotation_row(coll: Optional[str], mzml: str, scan: int, compound: int, mq: str, peaks: int) -> dict:
    name, ik, cf, npc = COMPOUNDS[compound]
    return {
        "SpectrumID": f"CCMSLIB{compound + 1:011d}",
        "#Scan#": str(scan),
        "SpectrumFile": mzml,
        "ATTRIBUTE_DatasetAccession": coll or "",
        "MQScore": mq,
        "SharedPeaks": str(peaks),
        "MZErrorPPM": f"{(scan % 7) * 0.37:.2f}",
        "MassDiff": f"{(scan % 5) * 0.0011:.4f}",
        "Compound_Name": name,
        "INCHIKEY": ik,
        "Precursor_MZ": f"{150 + compound * 37.25:.4f}",
        "Adduct": ADDUCTS[compound % len(ADDUCTS)],
        "Instrument": ("Orbitrap", "qTof")[compound % 2],
        "Ion_Source": "ESI",
        "LibraryName": "GNPS-LIBRARY",
        "Smiles": "N/A",
        "CF_kingdom": cf[0], "CF_superclass": cf[1], "CF_class": cf[2], "CF_subclass": cf[3],
        "npclassifier_pathway": npc[0], "npclassifier_superclass": npc[1], "npclassifier_class": npc[2],
        "RT_Query": f"{1 + scan % 13 * 0.5:.2f}",
        "TIC_Query": str(1000 * scan),
    }


def quant_table(rows: list[dict]) -> list[dict]:
    files = sorted({r["SpectrumFile"] for r in rows})
    out = []
    for r in sorted(rows, key=lambda r: int(r["#Scan#"])):
        q = {"row ID": r["#Scan#"], "row m/z": r["Precursor_MZ"], "row retention time": r["RT_Query"]}
        q.update({f"{f} Peak area": str(1000 + int(r["#Scan#"])) for f in files})
        out.append(q)
    return out


def cq_corpus() -> Corpus:
    """Six collections, 48 annotations over MN and FBMN jobs.

    Caffeine is annotated in four titled collections and cholic acid in
    three, each with an "animal" sample, straddling the ``> 3`` studies
    threshold of the fourth query.
    MSV000000006 has annotations but no sample metadata.
    """
    titles = {f"MSV00000000{i}": t for i, t in enumerate((
        "Human gut microbiome cohort", "Mouse diet intervention", "Arabidopsis leaf exudates",
        "Agricultural soil survey", "Plasma metabolome of children"), 1)}
    metadata = []
    n = 0
    for c, (coll, title) in enumerate(titles.items()):
        for i in range(3 if c % 2 == 0 else 2):
            n += 1
            taxon = TAXA[(c + i) % len(TAXA)] if c != 3 else ""
            # every study has an "animal" first sample, so per-type study counts hit the threshold
            kind = 0 if i == 0 else c + i
            metadata.append(sample_row(coll, title, i, kind, taxon, EXTRACTIONS[n % len(EXTRACTIONS)]))
    mq_cycle = ("0.91", "0.8735", "0.7", "0.955", "0.62", "0.8")

    def rows_for(coll, n_rows, compounds, mzmls, scan0, workflow):
        rows = []
        for j in range(n_rows):
            rows.append(annotation_row(coll, mzmls[j % len(mzmls)], scan0 + j, compounds[j % len(compounds)],
                                       mq_cycle[(scan0 + j) % len(mq_cycle)], 6 + (scan0 + j) % 9))
        return rows

    def runs(coll, k):
        return [r["filename"] for r in metadata if r["ATTRIBUTE_DatasetAccession"] == coll][:k] or [f"{coll}_x.mzML"]

    caffeine, cholic = 0, 1
    bundles = [
        BundleFixture("job-mn-1", "MN", rows_for("MSV000000001", 6, [caffeine, cholic, 2], runs("MSV000000001", 3), 1, "MN"),
                      {"job_id": "a1b2c3mn01", "workflow": "MN"}),
        BundleFixture("job-fbmn-1", "FBMN", rows_for(None, 6, [caffeine, 3], runs("MSV000000001", 2), 101, "FBMN"),
                      {"job_id": "a1b2c3fb01", "collection_id": "MSV000000001"}),
        BundleFixture("job-mn-2", "MN", rows_for("MSV000000002", 8, [caffeine, cholic, 4], runs("MSV000000002", 2), 201, "MN"),
                      {"job_id": "d4e5f6mn02"}),
        BundleFixture("job-fbmn-3", "FBMN", rows_for(None, 8, [cholic, caffeine, 5, 3], runs("MSV000000003", 3), 301, "FBMN"),
                      {"job_id": "d4e5f6fb03", "collection_id": "MSV000000003"}),
        BundleFixture("job-mn-4", "MN", rows_for("MSV000000004", 8, [caffeine, 2, 4], runs("MSV000000004", 2), 401, "MN"),
                      {"job_id": "g7h8i9mn04"}),
        BundleFixture("job-fbmn-5", "FBMN", rows_for(None, 6, [5, 4], runs("MSV000000005", 3), 501, "FBMN"),
                      {"job_id": "g7h8i9fb05", "collection_id": "MSV000000005"}),
        BundleFixture("job-mn-6", "MN", rows_for("MSV000000006", 6, [caffeine, 3], ["MSV000000006_a.mzML"], 601, "MN"),
                      {"job_id": "j0k1l2mn06"}),
    ]
    for b in bundles:
        if b.workflow == "FBMN":
            b.quant_rows = quant_table(b.rows)
            b.info.setdefault("workflow", "FBMN")
    return Corpus(metadata, bundles)


def random_corpus(seed: int = 0, n_collections: int = 4, samples_per: int = 5, annotations_per: int = 20,
                  fbmn_every: int = 2) -> Corpus:
    """Same layout as ``cq_corpus`` at any size; one bundle per collection."""
    rng = random.Random(seed)
    metadata, bundles = [], []
    for c in range(n_collections):
        coll = f"MSV{900000000 + c:09d}"
        title = f"Synthetic study {c:05d}"
        runs = []
        for i in range(samples_per):
            row = sample_row(coll, title, i, rng.randrange(len(SAMPLE_TYPES)), rng.choice(TAXA),
                             rng.choice(EXTRACTIONS), str(rng.randrange(2015, 2025)))
            metadata.append(row)
            runs.append(row["filename"])
        fbmn = fbmn_every and c % fbmn_every == 1
        rows = [annotation_row(None if fbmn else coll, rng.choice(runs), s + 1, rng.randrange(len(COMPOUNDS)),
                               f"{rng.randrange(500, 1000) / 1000:.3f}", rng.randrange(3, 40))
                for s in range(annotations_per)]
        info = {"job_id": f"synthetic{c:05d}", "workflow": "FBMN" if fbmn else "MN"}
        if fbmn:
            info["collection_id"] = coll
        bundles.append(BundleFixture(f"job-{c:05d}", info["workflow"], rows, info,
                                     quant_table(rows) if fbmn else None))
    return Corpus(metadata, bundles)


def _write_table(path: Path, columns, rows: list[dict], delimiter: str = "\t") -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), delimiter=delimiter, lineterminator="\n",
                           extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)


def write_bundle(bundle: BundleFixture, root: Path) -> Path:
    path = Path(root) / bundle.name
    path.mkdir(parents=True, exist_ok=True)
    (path / "bundle.json").write_text(json.dumps(bundle.info, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    sub = "result_specnets_DB" if bundle.workflow == "MN" else "DB_result"
    _write_table(path / sub / f"{bundle.info.get('job_id', bundle.name)}.tsv", GNPS_COLUMNS, bundle.rows)
    if bundle.quant_rows is not None:
        cols = list(bundle.quant_rows[0]) if bundle.quant_rows else ["row ID"]
        _write_table(path / "quantification_table" / "quant.csv", cols, bundle.quant_rows, ",")
    return path


def write_corpus(corpus: Corpus, root) -> tuple[Path, list[Path]]:
    root = Path(root)
    meta = root / "metadata.tsv"
    _write_table(meta, METADATA_COLUMNS, corpus.metadata)
    return meta, [write_bundle(b, root / "bundles") for b in corpus.bundles]
