"""Deterministic synthetic dataset generator.

Produces four map-like datasets driven by a grid dimension ``n`` and a tag
exponent ``k``:

* land ownership: an ``n x n`` tiling of regular flat-top hexagons,
* states: a ``floor(n/3)`` square tiling of hexagons three times as large,
  centered over the same extent,
* roads: ``n`` jittered polylines, half roughly horizontal and half roughly
  vertical, each with exactly ``n/2 + 1`` segments,
* points of interest: ``n^2`` points spread uniformly over ``n`` sloping
  parallel carrier lines.

Feature ``i`` of a dataset carries the tag key ``2^j`` for every ``j <= k``
with ``i mod 2^j == 0``, which yields thematic selectivities of exactly
``ceil(m / 2^j) / m``. Output is streamed as N-Triples so memory stays flat
in the feature count, and identical parameters always produce byte-identical
output.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from .geometry import Coord, Geometry, LineString, Point, Polygon, Rectangle, envelope, wkt_serialize

SQRT3 = math.sqrt(3.0)

# Construction constants for the "roughly horizontal/vertical" roads and the
# "sloping" POI carrier lines.
ROAD_SLOPE = 1.0 / 16.0
ROAD_JITTER = 0.25
POI_SLOPE = 1.0 / 8.0


class SinkError(OSError):
    """Raised when writing triples to the output sink fails."""


class DatasetKind(Enum):
    LAND_OWNERSHIP = "landOwnership"
    STATE = "state"
    ROAD = "road"
    POI = "pointOfInterest"


_CLASS_NAME = {
    DatasetKind.LAND_OWNERSHIP: "LandOwnership",
    DatasetKind.STATE: "State",
    DatasetKind.ROAD: "Road",
    DatasetKind.POI: "PointOfInterest",
}

NS_ROOT = "http://example.org/geobench/synthetic/"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
WKT_DATATYPE = "http://www.opengis.net/ont/geosparql#wktLiteral"


def dataset_namespace(kind: DatasetKind) -> str:
    return f"{NS_ROOT}{kind.value}/"


@dataclass(frozen=True)
class GeneratorParams:
    n: int
    k: int
    seed: int = 0
    cell: float = 1.0
    origin: Coord = Coord(0.0, 0.0)
    crs_uri: str | None = None

    def __post_init__(self):
        if self.n < 6 or self.n % 2 != 0:
            raise ValueError("n must be an even integer >= 6")
        if not 0 <= self.k <= 62:
            raise ValueError("k must be in [0, 62]")
        if not self.cell > 0:
            raise ValueError("cell must be positive")


@dataclass(frozen=True)
class TagAssignment:
    key: str
    value: str


@dataclass(frozen=True)
class FeatureRecord:
    id: int
    kind: DatasetKind
    geometry: Geometry
    tags: tuple[TagAssignment, ...] = ()


def dataset_cardinality(kind: DatasetKind, n: int) -> int:
    if kind is DatasetKind.LAND_OWNERSHIP or kind is DatasetKind.POI:
        return n * n
    if kind is DatasetKind.STATE:
        return (n // 3) ** 2
    return n


# --------------------------------------------------------------------------
# Hexagon lattices
#
# Flat-top hexagons (vertices at 0, 60, ..., 300 degrees) tile with columns
# spaced (sqrt(3)/2)*d apart and alternate columns shifted d/2 vertically,
# where d is the center spacing; every edge-sharing neighbor then sits at
# distance exactly d, so adjacent cells touch and never overlap.
#
# Every vertex is computed as an integer multiple of the lattice units
# (d*sqrt(3)/6, d/2): the hexagon at column i, row j is centered on lattice
# indices (3i, 2j + i%2) and its vertices sit at fixed integer offsets from
# there. Neighboring hexagons therefore produce bit-identical floats for
# shared vertices, so adjacency is exact even for consumers without an
# epsilon (round-tripping the emitted WKT through an exact geometry engine
# reports touching, never hairline gaps or sliver overlaps).
# --------------------------------------------------------------------------

_HEX_VERTEX_OFFSETS = ((2, 0), (1, 1), (-1, 1), (-2, 0), (-1, -1), (1, -1))


def _hex_units(spacing: float) -> tuple[float, float]:
    return spacing * (SQRT3 / 6.0), spacing * 0.5


def _hexagon_at(i: int, j: int, spacing: float, ox: float, oy: float) -> Polygon:
    xu, yu = _hex_units(spacing)
    bx = 3 * i
    by = 2 * j + (i % 2)
    ring = tuple(Coord(ox + (bx + dx) * xu, oy + (by + dy) * yu)
                 for dx, dy in _HEX_VERTEX_OFFSETS)
    return Polygon(ring + (ring[0],))


def land_envelope(p: GeneratorParams) -> Rectangle:
    """World extent: the exact envelope of the land-ownership hexagon grid."""
    xu, yu = _hex_units(p.cell)
    return Rectangle(
        Coord(p.origin.x + -2 * xu, p.origin.y + -1 * yu),
        Coord(p.origin.x + (3 * (p.n - 1) + 2) * xu, p.origin.y + 2 * p.n * yu),
    )


def _state_origin(p: GeneratorParams) -> tuple[float, float]:
    # Center the coarse lattice over the fine one so both grids cover the
    # same region of the plane.
    m = p.n // 3
    land_w = (p.n - 1) * (SQRT3 / 2.0) * p.cell
    land_h = (p.n - 0.5) * p.cell
    state_w = (m - 1) * (SQRT3 / 2.0) * 3.0 * p.cell
    state_h = (m - 0.5) * 3.0 * p.cell if m > 1 else 0.0
    return (
        p.origin.x + (land_w - state_w) / 2.0,
        p.origin.y + (land_h - state_h) / 2.0,
    )


def generate_land_ownership(p: GeneratorParams) -> Iterator[FeatureRecord]:
    """n*n hexagon parcels; feature (i, j) has dense id i*n + j."""
    for i in range(p.n):
        for j in range(p.n):
            yield FeatureRecord(i * p.n + j, DatasetKind.LAND_OWNERSHIP,
                                _hexagon_at(i, j, p.cell, p.origin.x, p.origin.y))


def generate_states(p: GeneratorParams) -> Iterator[FeatureRecord]:
    """floor(n/3)^2 hexagons with triple spacing over the same extent."""
    m = p.n // 3
    ox, oy = _state_origin(p)
    spacing = 3.0 * p.cell
    for i in range(m):
        for j in range(m):
            yield FeatureRecord(i * m + j, DatasetKind.STATE,
                                _hexagon_at(i, j, spacing, ox, oy))


def _road_vertices(p: GeneratorParams, index: int) -> tuple[Coord, ...]:
    world = land_envelope(p)
    half = p.n // 2
    nverts = half + 2  # n/2 + 1 segments
    horizontal = index < half
    r = index if horizontal else index - half
    rng = random.Random(f"{p.seed}|road|{'h' if horizontal else 'v'}|{r}")
    jitter = ROAD_JITTER * p.cell
    if horizontal:
        span, lo = world.width, world.min.x
        base = world.min.y + (r + 0.5) * world.height / half
    else:
        span, lo = world.height, world.min.y
        base = world.min.x + (r + 0.5) * world.width / half
    mid = lo + span / 2.0
    coords = []
    for t in range(nverts):
        u = lo + t * span / (nverts - 1)
        v = base + ROAD_SLOPE * (u - mid) + rng.uniform(-jitter, jitter)
        coords.append(Coord(u, v) if horizontal else Coord(v, u))
    return tuple(coords)


def generate_roads(p: GeneratorParams) -> Iterator[FeatureRecord]:
    """n jittered polylines: ids [0, n/2) horizontal-ish, the rest vertical-ish."""
    for index in range(p.n):
        yield FeatureRecord(index, DatasetKind.ROAD,
                            LineString(_road_vertices(p, index)))


def _poi_coord(p: GeneratorParams, index: int, world: Rectangle) -> tuple[float, float]:
    line, t = divmod(index, p.n)
    pad = 0.25 * p.cell
    rise = POI_SLOPE * world.width
    x = world.min.x + (t + 0.5) * world.width / p.n
    base = world.min.y + pad + (line + 0.5) * (world.height - rise - 2.0 * pad) / p.n
    y = base + POI_SLOPE * (x - world.min.x)
    return x, y


def generate_pois(p: GeneratorParams) -> Iterator[FeatureRecord]:
    """n^2 points, n per carrier line, all strictly inside the world extent."""
    world = land_envelope(p)
    for index in range(p.n * p.n):
        x, y = _poi_coord(p, index, world)
        yield FeatureRecord(index, DatasetKind.POI, Point(Coord(x, y)))


_GENERATORS = {
    DatasetKind.LAND_OWNERSHIP: generate_land_ownership,
    DatasetKind.STATE: generate_states,
    DatasetKind.ROAD: generate_roads,
    DatasetKind.POI: generate_pois,
}


def generate(kind: DatasetKind, p: GeneratorParams) -> Iterator[FeatureRecord]:
    return _GENERATORS[kind](p)


# --------------------------------------------------------------------------
# Tagging
# --------------------------------------------------------------------------

def tag_keys_for_id(feature_id: int, k: int) -> tuple[int, ...]:
    """Powers of two 2^j, j in [0, k], dividing the feature id (id 0 gets all)."""
    if feature_id == 0:
        jmax = k
    else:
        jmax = min(k, (feature_id & -feature_id).bit_length() - 1)
    return tuple(1 << j for j in range(jmax + 1))


def assign_tags(features: Iterable[FeatureRecord], k: int) -> Iterator[FeatureRecord]:
    """Tag each feature by the modular power-of-two rule; values are "v"+key."""
    for f in features:
        tags = tuple(TagAssignment(str(key), f"v{key}") for key in tag_keys_for_id(f.id, k))
        yield replace(f, tags=tags)


def tagged(kind: DatasetKind, p: GeneratorParams) -> Iterator[FeatureRecord]:
    return assign_tags(generate(kind, p), p.k)


# --------------------------------------------------------------------------
# N-Triples emission
# --------------------------------------------------------------------------

_NT_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _nt_literal(text: str) -> str:
    if '"' in text or "\\" in text or "\n" in text or "\r" in text or "\t" in text:
        for raw, esc in _NT_ESCAPES.items():
            text = text.replace(raw, esc)
    return text


def emit_rdf(features: Iterable[FeatureRecord], p: GeneratorParams, sink: TextIO) -> int:
    """Stream features as N-Triples, returning the exact triple count.

    Per feature: one rdf:type triple, one hasGeometry link, one asWKT literal,
    and per tag a hasTag link plus hasKey/hasValue literals. Each dataset uses
    its own namespace so queries can target datasets independently.
    """
    count = 0
    crs_prefix = f"<{p.crs_uri}> " if p.crs_uri else ""
    try:
        for f in features:
            if not f.tags:
                raise ValueError(f"feature {f.id} has no tags; run assign_tags first")
            ns = dataset_namespace(f.kind)
            subj = f"<{ns}feature/{f.id}>"
            geom = f"<{ns}geometry/{f.id}>"
            wkt = _nt_literal(crs_prefix + wkt_serialize(f.geometry))
            lines = [
                f"{subj} <{RDF_TYPE}> <{ns}{_CLASS_NAME[f.kind]}> .\n",
                f"{subj} <{ns}hasGeometry> {geom} .\n",
                f'{geom} <{ns}asWKT> "{wkt}"^^<{WKT_DATATYPE}> .\n',
            ]
            for tag in f.tags:
                tagnode = f"<{ns}tag/{f.id}/{tag.key}>"
                lines.append(f"{subj} <{ns}hasTag> {tagnode} .\n")
                lines.append(f'{tagnode} <{ns}hasKey> "{_nt_literal(tag.key)}" .\n')
                lines.append(f'{tagnode} <{ns}hasValue> "{_nt_literal(tag.value)}" .\n')
            sink.write("".join(lines))
            count += len(lines)
    except OSError as exc:
        raise SinkError(f"failed writing triples: {exc}") from exc
    return count


def write_workload(p: GeneratorParams, outdir: str | Path) -> dict:
    """Write all four datasets as <kind>-<n>-<k>.nt plus a JSON sidecar.

    Returns the sidecar dictionary (params, cardinalities, triple counts,
    dataset envelopes, and the world envelope).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    world = land_envelope(p)
    sidecar: dict = {
        "schema": "geobench-datasets@1",
        "params": {
            "n": p.n,
            "k": p.k,
            "seed": p.seed,
            "cell": p.cell,
            "origin": [p.origin.x, p.origin.y],
            "crs_uri": p.crs_uri,
        },
        "world_envelope": [world.min.x, world.min.y, world.max.x, world.max.y],
        "datasets": {},
    }
    for kind in DatasetKind:
        path = outdir / f"{kind.value}-{p.n}-{p.k}.nt"
        count = 0
        triples = 0
        env = [math.inf, math.inf, -math.inf, -math.inf]
        with open(path, "w", encoding="utf-8", newline="\n") as sink:
            def _spy(stream):
                nonlocal count
                for f in stream:
                    e = envelope(f.geometry)
                    env[0] = min(env[0], e.min.x)
                    env[1] = min(env[1], e.min.y)
                    env[2] = max(env[2], e.max.x)
                    env[3] = max(env[3], e.max.y)
                    count += 1
                    yield f
            triples = emit_rdf(_spy(tagged(kind, p)), p, sink)
        sidecar["datasets"][kind.value] = {
            "file": path.name,
            "cardinality": count,
            "triples": triples,
            "envelope": env,
        }
    sidecar["total_triples"] = sum(d["triples"] for d in sidecar["datasets"].values())
    sidecar_path = outdir / f"datasets-{p.n}-{p.k}.json"
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    return sidecar


def params_from_sidecar(sidecar: dict) -> GeneratorParams:
    raw = sidecar["params"]
    return GeneratorParams(
        n=raw["n"],
        k=raw["k"],
        seed=raw["seed"],
        cell=raw["cell"],
        origin=Coord(raw["origin"][0], raw["origin"][1]),
        crs_uri=raw.get("crs_uri"),
    )


# --------------------------------------------------------------------------
# Indexable dataset views
# --------------------------------------------------------------------------

class DatasetView:
    """Random-access view of one generated dataset with vectorized envelopes.

    Geometries are rebuilt on demand from the closed-form construction, so a
    view of 262k hexagons costs a few numpy arrays rather than a list of
    polygon objects. Envelope arrays are bit-identical to per-feature
    ``envelope()`` results because they use the same float expressions.
    """

    def __init__(self, kind: DatasetKind, params: GeneratorParams):
        self.kind = kind
        self.params = params
        self.count = dataset_cardinality(kind, params.n)
        self._envelopes: np.ndarray | None = None

    def __len__(self) -> int:
        return self.count

    def geometry(self, i: int) -> Geometry:
        p = self.params
        if self.kind is DatasetKind.LAND_OWNERSHIP:
            return _hexagon_at(i // p.n, i % p.n, p.cell, p.origin.x, p.origin.y)
        if self.kind is DatasetKind.STATE:
            m = p.n // 3
            ox, oy = _state_origin(p)
            return _hexagon_at(i // m, i % m, 3.0 * p.cell, ox, oy)
        if self.kind is DatasetKind.ROAD:
            return LineString(_road_vertices(p, i))
        x, y = _poi_coord(p, i, land_envelope(p))
        return Point(Coord(x, y))

    def record(self, i: int) -> FeatureRecord:
        return FeatureRecord(i, self.kind, self.geometry(i))

    @property
    def envelopes(self) -> np.ndarray:
        """(count, 4) array of (minx, miny, maxx, maxy) per feature."""
        if self._envelopes is None:
            self._envelopes = self._build_envelopes()
        return self._envelopes

    def _build_envelopes(self) -> np.ndarray:
        p = self.params
        if self.kind in (DatasetKind.LAND_OWNERSHIP, DatasetKind.STATE):
            if self.kind is DatasetKind.LAND_OWNERSHIP:
                m, spacing, ox, oy = p.n, p.cell, p.origin.x, p.origin.y
            else:
                m = p.n // 3
                spacing = 3.0 * p.cell
                ox, oy = _state_origin(p)
            xu, yu = _hex_units(spacing)
            idx = np.arange(self.count)
            bx = 3 * (idx // m)
            by = 2 * (idx % m) + (idx // m) % 2
            return np.column_stack([
                ox + (bx - 2) * xu, oy + (by - 1) * yu,
                ox + (bx + 2) * xu, oy + (by + 1) * yu,
            ])
        if self.kind is DatasetKind.POI:
            world = land_envelope(p)
            idx = np.arange(self.count)
            line = idx // p.n
            t = idx % p.n
            pad = 0.25 * p.cell
            rise = POI_SLOPE * world.width
            x = world.min.x + (t + 0.5) * world.width / p.n
            base = world.min.y + pad + (line + 0.5) * (world.height - rise - 2.0 * pad) / p.n
            y = base + POI_SLOPE * (x - world.min.x)
            return np.column_stack([x, y, x, y])
        rows = []
        for i in range(self.count):
            e = envelope(self.geometry(i))
            rows.append([e.min.x, e.min.y, e.max.x, e.max.y])
        return np.asarray(rows)


def views(p: GeneratorParams) -> dict[DatasetKind, DatasetView]:
    return {kind: DatasetView(kind, p) for kind in DatasetKind}
