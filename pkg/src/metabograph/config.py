"""Run configuration: a YAML file, overridden by environment then flags.

Example ``metabograph.yaml``::

    out_dir: build
    endpoint: embedded          # or http://host:3030/ds/sparql
    store_url: null             # Graph Store URL when it can't be guessed
    registry_path: null         # extra prefixes, merged over the built-in table
    metadata_manifest: null     # defaults to the packaged manifests
    gnps_columns: null
    term_index: null
    curation: curation.tsv
    cache_dir: .ols-cache
    ols_endpoint: https://www.ebi.ac.uk/ols4/api/search
    offline: false
    strict: false
    format: nt

Relative paths are resolved against the config file's directory.
``METABOKG_ENDPOINT`` overrides ``endpoint``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

import yaml

ENDPOINT_ENV = "METABOKG_ENDPOINT"
_PATH_FIELDS = ("out_dir", "registry_path", "metadata_manifest", "gnps_columns", "term_index", "curation",
                "cache_dir", "store_dir")


@dataclass
class RunConfig:
    out_dir: Path = Path("build")
    endpoint: str = "embedded"
    store_url: Optional[str] = None
    store_dir: Optional[Path] = None  # embedded store location, default <out_dir>/store
    registry_path: Optional[Path] = None
    metadata_manifest: Optional[Path] = None
    gnps_columns: Optional[Path] = None
    term_index: Optional[Path] = None
    curation: Optional[Path] = None
    cache_dir: Optional[Path] = None
    ols_endpoint: str = "https://www.ebi.ac.uk/ols4/api/search"
    offline: bool = False
    strict: bool = False
    format: str = "nt"
    global_prefix: str = "https://ns.inria.fr/metaboKG/resource/"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in _PATH_FIELDS:
            value = getattr(self, name)
            if value is not None and not isinstance(value, Path):
                setattr(self, name, Path(value))
        if self.format not in ("nt", "ttl", "trig"):
            raise ValueError(f"format must be nt, ttl or trig, got {self.format!r}")

    @property
    def embedded_store(self) -> Path:
        return self.store_dir or self.out_dir / "store"

    @classmethod
    def load(cls, path: Union[str, Path, None] = None, env: Optional[dict] = None) -> "RunConfig":
        data: dict = {}
        base = Path.cwd()
        if path is not None:
            path = Path(path)
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
            base = path.parent
        known = {f.name for f in fields(cls)}
        extra = {k: v for k, v in data.items() if k not in known}
        cfg = cls(**{k: v for k, v in data.items() if k in known}, extra=extra)
        for name in _PATH_FIELDS:
            value = getattr(cfg, name)
            if value is not None and not value.is_absolute() and path is not None:
                setattr(cfg, name, base / value)
        env = os.environ if env is None else env
        if env.get(ENDPOINT_ENV):
            cfg.endpoint = env[ENDPOINT_ENV]
        return cfg

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def check(self) -> list[str]:
        """Problems that make the config unusable; empty when fine."""
        problems = []
        for name in ("registry_path", "metadata_manifest", "gnps_columns", "term_index", "curation"):
            value = getattr(self, name)
            if value is not None and not value.exists():
                problems.append(f"{name}: {value} does not exist")
        if self.offline and self.endpoint not in ("embedded", ""):
            problems.append("offline mode needs the embedded endpoint")
        return problems
