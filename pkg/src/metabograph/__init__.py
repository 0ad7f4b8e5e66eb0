"""Metabolomics knowledge-graph construction: sample metadata and GNPS
molecular-networking results to provenance-aware RDF, linked through
Universal Annotation Identifiers and queried with SPARQL."""

__version__ = "0.1.0"
