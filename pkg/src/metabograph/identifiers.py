"""Deterministic URI minting and Universal Annotation Identifiers (UAIs).

URIs follow ``<prefix><concept>/<hash>``; the hash is the first 128 bits of
SHA-256 over a canonical attribute string, written in a 57-symbol alphabet
without look-alike characters and padded to 22 symbols.

The UAI string form is a USI-like exchange format::

    uai      = "mzspec:" coll ":" mzml [":scan:" scan]
               [":annot:" file ":" hit] [":feature:" fid ":ftable:" ftable]
    coll     = *segchar          ; may be empty
    mzml     = *segchar          ; may be empty
    hit      = [1*DIGIT]         ; empty when absent
    segchar  = <any char except ":" and "%"> / "%" 2HEXDIG

``:`` and ``%`` inside component values are percent-escaped.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, fields
from typing import Mapping, Optional
from urllib.parse import quote, unquote

from .errors import EmptyIdentity, MalformedUai
from .vocab import nfc

ALPHABET = "23456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"
HASH_LENGTH = 22
DEFAULT_GLOBAL_PREFIX = "https://ns.inria.fr/metaboKG/resource/"

_CONCEPT_RE = re.compile(r"^[a-z0-9-]+$")
_HASH_RE = re.compile(rf"^[{ALPHABET}]{{{HASH_LENGTH}}}$")


def encode_base57(data: bytes, length: int = HASH_LENGTH) -> str:
    number = int.from_bytes(data, "big")
    out = []
    while number:
        number, digit = divmod(number, len(ALPHABET))
        out.append(ALPHABET[digit])
    text = "".join(reversed(out))
    if len(text) > length:
        raise ValueError("value does not fit the requested length")
    return text.rjust(length, ALPHABET[0])


def short_hash(canonical: str) -> str:
    return encode_base57(hashlib.sha256(canonical.encode("utf-8")).digest()[:16])


def _escape(text: str) -> str:
    return nfc(text).replace("%", "%25").replace("|", "%7C").replace("=", "%3D")


def canonical_string(concept: str, attributes: Mapping[str, str] | None,
                     fallback: tuple[str, str] | None = None) -> str:
    pairs = {_escape(k): _escape(str(v)) for k, v in (attributes or {}).items()}
    if pairs:
        return concept + "|" + "|".join(f"{k}={pairs[k]}" for k in sorted(pairs))
    if fallback is None or not all(fallback):
        raise EmptyIdentity(f"no attributes and no filename/source fallback for {concept!r}")
    filename, source_id = fallback
    return f"{concept}|file={_escape(filename)}|src={_escape(source_id)}"


@dataclass(frozen=True)
class UriSpec:
    global_prefix: str
    concept: str
    hash: str

    def __post_init__(self):
        if not _CONCEPT_RE.match(self.concept):
            raise ValueError(f"concept must be lowercase kebab-case: {self.concept!r}")
        if not _HASH_RE.match(self.hash):
            raise ValueError(f"malformed hash {self.hash!r}")

    @property
    def uri(self) -> str:
        return f"{self.global_prefix}{self.concept}/{self.hash}"

    def __str__(self) -> str:
        return self.uri


def mint_uri(concept: str, attributes: Mapping[str, str] | None = None,
             fallback: tuple[str, str] | None = None,
             global_prefix: str = DEFAULT_GLOBAL_PREFIX) -> UriSpec:
    if not concept:
        raise ValueError("concept must be non-empty")
    return UriSpec(global_prefix, concept, short_hash(canonical_string(concept, attributes, fallback)))


def individual_iri(namespace: str, stem: str, class_iri: str, normalized_label: str) -> str:
    """IRI for a reusable named individual, e.g. ``MBS:sampletype_<hash>``.

    Lives in the schema namespace so that the stem stays visible to
    ``STRSTARTS`` filters in queries.
    """
    canonical = canonical_string(stem, {"class": class_iri, "label": normalized_label})
    return f"{namespace}{stem}_{short_hash(canonical)}"


COMPONENTS = ("collection_id", "mzml", "scan", "annotation_file", "hit_number", "feature_id", "feature_table")


@dataclass(frozen=True)
class Uai:
    collection_id: Optional[str] = None
    mzml: Optional[str] = None
    scan: Optional[str] = None
    annotation_file: Optional[str] = None
    hit_number: Optional[int] = None
    feature_id: Optional[str] = None
    feature_table: Optional[str] = None

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "hit_number":
                if value is not None:
                    if isinstance(value, bool) or int(value) != value or int(value) < 1:
                        raise ValueError(f"hit_number must be a positive integer, got {value!r}")
                    object.__setattr__(self, f.name, int(value))
            elif value is not None:
                value = nfc(str(value)).strip()
                object.__setattr__(self, f.name, value or None)
        if not self.components():
            raise ValueError("a UAI needs at least one component")
        if self.annotation_file is not None and self.collection_id is None:
            raise ValueError("an annotation file is always anchored to a collection")

    def components(self) -> dict[str, object]:
        return {k: getattr(self, k) for k in COMPONENTS if getattr(self, k) is not None}


def gnps_violations(uai: Uai) -> list[str]:
    """Problems a GNPS-sourced UAI must not have."""
    problems = []
    if uai.collection_id is None:
        problems.append("missing collection_id")
    if uai.hit_number is not None and uai.hit_number != 1:
        problems.append(f"hit_number is {uai.hit_number}, GNPS returns a single hit (1)")
    return problems


def _seg(value) -> str:
    return "" if value is None else quote(str(value), safe="!$&'()*+,;=@/-._~ ")


def uai_serialize(u: Uai) -> str:
    out = ["mzspec", _seg(u.collection_id), _seg(u.mzml)]
    if u.scan is not None:
        out += ["scan", _seg(u.scan)]
    if u.annotation_file is not None or u.hit_number is not None:
        out += ["annot", _seg(u.annotation_file), _seg(u.hit_number)]
    if u.feature_id is not None or u.feature_table is not None:
        out += ["feature", _seg(u.feature_id), "ftable", _seg(u.feature_table)]
    return ":".join(out)


_GROUPS = {"scan": 1, "annot": 2, "feature": 3}


def uai_parse(s: str) -> Uai:
    if not s.startswith("mzspec:"):
        raise MalformedUai("UAI must start with 'mzspec:'", 0)
    tokens = s.split(":")
    offsets = []
    pos = 0
    for tok in tokens:
        offsets.append(pos)
        pos += len(tok) + 1
    if len(tokens) < 3:
        raise MalformedUai("missing run/file segment", len(s))

    def val(i):
        if "%" in tokens[i] and not re.fullmatch(r"(?:[^%]|%[0-9A-Fa-f]{2})*", tokens[i]):
            raise MalformedUai("bad percent escape", offsets[i])
        return unquote(tokens[i]) or None

    parts: dict[str, object] = {"collection_id": val(1), "mzml": val(2)}
    i = 3
    last_group = 0
    while i < len(tokens):
        tag = tokens[i]
        order = _GROUPS.get(tag)
        if order is None:
            raise MalformedUai(f"unknown extension tag {tag!r}", offsets[i])
        if order <= last_group:
            raise MalformedUai(f"group {tag!r} repeated or out of order", offsets[i])
        last_group = order
        if tag == "scan":
            if i + 1 >= len(tokens):
                raise MalformedUai("scan group needs a value", len(s))
            parts["scan"] = val(i + 1)
            i += 2
        elif tag == "annot":
            if i + 2 >= len(tokens):
                raise MalformedUai("annot group needs file and hit", len(s))
            parts["annotation_file"] = val(i + 1)
            hit = tokens[i + 2]
            if hit and not hit.isdigit():
                raise MalformedUai(f"hit number {hit!r} is not an integer", offsets[i + 2])
            if hit and int(hit) < 1:
                raise MalformedUai("hit number must be positive", offsets[i + 2])
            parts["hit_number"] = int(hit) if hit else None
            i += 3
        else:
            if i + 3 >= len(tokens) or tokens[i + 2] != "ftable":
                pos = offsets[i + 2] if i + 2 < len(tokens) else len(s)
                raise MalformedUai("feature group must be ':feature:<id>:ftable:<table>'", pos)
            parts["feature_id"] = val(i + 1)
            parts["feature_table"] = val(i + 3)
            i += 4
    try:
        return Uai(**parts)
    except ValueError as exc:
        raise MalformedUai(str(exc), 0) from None


def uai_shared_components(a: Uai, b: Uai) -> set[str]:
    ca, cb = a.components(), b.components()
    both = ca.keys() & cb.keys()
    if any(ca[k] != cb[k] for k in both):
        return set()
    return set(both)
