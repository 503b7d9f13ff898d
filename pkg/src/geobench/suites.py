"""Shipped query suites for real-world datasets, as declarative manifests.

The micro suite exercises primitive spatial capabilities (non-topological
constructions, selections, joins, aggregates) over six public datasets that
the user loads into the store under test: Greek administrative areas (gag),
CORINE land cover (clc), LinkedGeoData roads (lgd), GeoNames and DBpedia
points (gn, dbp), and wildfire hotspot polygons (noa). The macro suites chain
queries into application-shaped scenarios: reverse geocoding, map search and
browsing, and rapid mapping for fire monitoring.

Manifests are JSON files under ``suites/``; constants such as probe polygons
and radii are placeholders filled from bindings files (see ``bindings/`` for
non-authoritative defaults covering the Greek extent). Each entry carries one
SPARQL rendering per dialect; entries a dialect cannot express are marked
unsupported with a reason and are skipped, never failed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .calibrator import QueryInstance
from .harness import placeholders_in, render_template

SUITE_NAMES = ("micro-real", "macro-rg", "macro-msb", "macro-rm", "synthetic-default")

DIALECTS = ("geosparql", "stsparql")


class UnknownSuite(ValueError):
    """Suite name not in the shipped set."""


class ManifestError(ValueError):
    """Suite manifest fails validation (e.g. an undeclared placeholder)."""


class MissingBinding(KeyError):
    """A placeholder has no value in the provided bindings."""


@dataclass(frozen=True)
class QueryTemplateEntry:
    id: str
    category: str
    description: str
    placeholders: tuple[str, ...]
    dialect_variants: dict[str, str | None]
    unsupported: dict[str, str]

    @property
    def sparql_template(self) -> str:
        for dialect in DIALECTS:
            text = self.dialect_variants.get(dialect)
            if text:
                return text
        return ""

    def supported(self, dialect: str) -> bool:
        return bool(self.dialect_variants.get(dialect))


@dataclass(frozen=True)
class SuiteManifest:
    name: str
    kind: str  # "micro" or "macro"
    entries: tuple[QueryTemplateEntry, ...]
    sampler_domains: dict


def _validate_entry(raw: dict, suite: str) -> QueryTemplateEntry:
    try:
        entry = QueryTemplateEntry(
            id=raw["id"],
            category=raw["category"],
            description=raw.get("description", ""),
            placeholders=tuple(raw.get("placeholders", [])),
            dialect_variants={d: raw.get("sparql", {}).get(d) for d in DIALECTS},
            unsupported=dict(raw.get("unsupported", {})),
        )
    except KeyError as exc:
        raise ManifestError(f"{suite}: entry missing field {exc}") from exc
    declared = set(entry.placeholders)
    for dialect, text in entry.dialect_variants.items():
        if not text:
            continue
        used = placeholders_in(text)
        undeclared = used - declared
        if undeclared:
            raise ManifestError(
                f"{suite}:{entry.id}: undeclared placeholders {sorted(undeclared)}")
    return entry


def _load_manifest_doc(name: str) -> dict:
    if name not in SUITE_NAMES:
        raise UnknownSuite(f"unknown suite {name!r}; available: {', '.join(SUITE_NAMES)}")
    path = resources.files("geobench").joinpath(f"suites/{name}.json")
    with path.open(encoding="utf-8") as fh:
        return json.load(fh)


def load_suite_manifest(name: str) -> SuiteManifest:
    doc = _load_manifest_doc(name)
    entries = tuple(_validate_entry(raw, name) for raw in doc["queries"])
    ids = [e.id for e in entries]
    if len(set(ids)) != len(ids):
        raise ManifestError(f"{name}: duplicate query ids")
    return SuiteManifest(
        name=name,
        kind=doc.get("kind", "micro"),
        entries=entries,
        sampler_domains=doc.get("sampler_domains", {}),
    )


def load_suite(name: str) -> list[QueryTemplateEntry]:
    """Load and validate a shipped suite, returning its query entries."""
    return list(load_suite_manifest(name).entries)


def bind_suite(entries, bindings: dict[str, str],
               dialect: str = "geosparql") -> list[QueryInstance]:
    """Instantiate suite entries with concrete placeholder values.

    Pure: identical inputs yield identical SPARQL texts. Entries the dialect
    cannot express come back skip-marked. Real-world instances carry no
    expected count; correctness of user-supplied data is out of scope.
    """
    out = []
    for entry in entries:
        text = entry.dialect_variants.get(dialect)
        if not text:
            reason = entry.unsupported.get(dialect, f"not expressible in {dialect}")
            out.append(QueryInstance(id=entry.id, sparql="", dialect=dialect,
                                     skip_reason=reason))
            continue
        missing = placeholders_in(text) - set(bindings)
        if missing:
            raise MissingBinding(f"{entry.id}: missing bindings {sorted(missing)}")
        out.append(QueryInstance(id=entry.id,
                                 sparql=render_template(text, bindings),
                                 dialect=dialect))
    return out


def load_bindings(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return {str(k): str(v) for k, v in doc.get("bindings", doc).items()
            if not str(k).startswith("_")}


def default_bindings() -> dict[str, str]:
    """Shipped Greek-extent placeholder values; illustrative, not authoritative."""
    path = resources.files("geobench").joinpath("bindings/greek-defaults.json")
    with path.open(encoding="utf-8") as fh:
        doc = json.load(fh)
    return {str(k): str(v) for k, v in doc["bindings"].items()}
