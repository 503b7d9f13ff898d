"""Selectivity-calibrated SPARQL query instantiation.

Turns the two synthetic query templates (spatial selection against a constant
rectangle, spatial join between two datasets) into concrete SPARQL queries.
Rectangles are anchored at the world origin and grown in cell-aligned steps;
a binary search over the monotone sweep picks the rectangle whose exact
feature count is closest to the requested spatial selectivity. Every emitted
instance carries the exact expected result count so stores can be checked for
correctness, not just speed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    EPS,
    Coord,
    Rectangle,
    TopoFunction,
    envelope,
    eval_predicate,
    wkt_serialize,
)
from .generator import (
    DatasetKind,
    DatasetView,
    FeatureRecord,
    GeneratorParams,
    dataset_namespace,
    land_envelope,
)


class Unachievable(ValueError):
    """Requested selectivity is below what one feature represents."""


class CalibrationError(ValueError):
    """Calibration asked to sweep a non-monotone predicate."""


# Predicates whose truth is monotone in a growing rectangle.
_SWEEPABLE = (TopoFunction.INTERSECTS, TopoFunction.WITHIN)

DEFAULT_TARGETS = (0.001, 0.10, 0.25, 0.50, 0.75, 1.0)

_FILTER_FUNCTIONS = {
    "geosparql": {
        TopoFunction.EQUALS: "geof:sfEquals",
        TopoFunction.INTERSECTS: "geof:sfIntersects",
        TopoFunction.WITHIN: "geof:sfWithin",
        TopoFunction.CONTAINS: "geof:sfContains",
        TopoFunction.TOUCHES: "geof:sfTouches",
        TopoFunction.OVERLAPS: "geof:sfOverlaps",
        TopoFunction.CROSSES: "geof:sfCrosses",
        TopoFunction.DISJOINT: "geof:sfDisjoint",
    },
    "stsparql": {
        TopoFunction.EQUALS: "strdf:equals",
        TopoFunction.INTERSECTS: "strdf:intersects",
        TopoFunction.WITHIN: "strdf:within",
        TopoFunction.CONTAINS: "strdf:contains",
        TopoFunction.TOUCHES: "strdf:touches",
        TopoFunction.OVERLAPS: "strdf:overlaps",
        TopoFunction.CROSSES: "strdf:crosses",
        TopoFunction.DISJOINT: "strdf:disjoint",
    },
}

_FUNCTION_PREFIX = {
    "geosparql": "PREFIX geof: <http://www.opengis.net/def/function/geosparql/>",
    "stsparql": "PREFIX strdf: <http://strdf.di.uoa.gr/ontology#>",
}

_GEO_PREFIX = "PREFIX geo: <http://www.opengis.net/ont/geosparql#>"


def _check_thema(thema: int) -> int:
    if thema < 1 or thema & (thema - 1):
        raise ValueError(f"thema must be a power of two, got {thema}")
    return thema


@dataclass(frozen=True)
class SelectionSpec:
    dataset: DatasetKind
    function: TopoFunction
    thema: int
    target_selectivity: float

    def __post_init__(self):
        _check_thema(self.thema)
        if not 0.0 < self.target_selectivity <= 1.0:
            raise ValueError("target selectivity must be in (0, 1]")


@dataclass(frozen=True)
class JoinSpec:
    left: DatasetKind
    right: DatasetKind
    function: TopoFunction
    thema: int
    thema2: int

    def __post_init__(self):
        _check_thema(self.thema)
        _check_thema(self.thema2)
        if self.left == self.right and self.function is not TopoFunction.TOUCHES:
            raise ValueError("self-joins are only supported for touches")


@dataclass(frozen=True)
class QueryInstance:
    id: str
    sparql: str
    spec: SelectionSpec | JoinSpec | None = None
    geom: Rectangle | None = None
    target_selectivity: float | None = None
    spatial_selectivity: float | None = None
    achieved_selectivity: float | None = None
    expected_count: int | None = None
    dialect: str = "geosparql"
    skip_reason: str | None = None


# --------------------------------------------------------------------------
# Feature access normalization
# --------------------------------------------------------------------------

class _RecordSet:
    """Adapter giving materialized FeatureRecord sequences the view interface."""

    def __init__(self, records: Sequence[FeatureRecord]):
        self._records = list(records)
        if not self._records:
            raise ValueError("empty feature set")
        self.kind = self._records[0].kind
        self.params = None
        self.count = len(self._records)
        rows = []
        for r in self._records:
            e = envelope(r.geometry)
            rows.append([e.min.x, e.min.y, e.max.x, e.max.y])
        self.envelopes = np.asarray(rows)

    def __len__(self):
        return self.count

    def geometry(self, i: int):
        return self._records[i].geometry


def _as_view(features) -> DatasetView | _RecordSet:
    if isinstance(features, (DatasetView, _RecordSet)):
        return features
    return _RecordSet(list(features))


def _world_rectangle(view) -> tuple[Rectangle, float]:
    """World extent and cell size the calibration sweep is aligned to."""
    if getattr(view, "params", None) is not None:
        return land_envelope(view.params), view.params.cell
    env = view.envelopes
    rect = Rectangle(
        Coord(float(env[:, 0].min()), float(env[:, 1].min())),
        Coord(float(env[:, 2].max()), float(env[:, 3].max())),
    )
    return rect, 1.0


# --------------------------------------------------------------------------
# Counting with envelope pruning
# --------------------------------------------------------------------------

def count_matches(features, function: TopoFunction, rect: Rectangle,
                  stride: int = 1) -> int:
    """Exact count of features (ids divisible by stride) matching the rectangle.

    Envelope masks decide the bulk; only features whose envelope sits within
    EPS of the rectangle boundary fall back to the exact predicate.
    """
    view = _as_view(features)
    if function not in _SWEEPABLE:
        raise CalibrationError(f"{function.value} is not supported for rectangle counting")
    env = view.envelopes[::stride] if stride > 1 else view.envelopes
    ids = np.arange(0, view.count, stride)
    x0, y0, x1, y1 = rect.min.x, rect.min.y, rect.max.x, rect.max.y

    strictly_inside = (
        (env[:, 0] > x0 + EPS) & (env[:, 1] > y0 + EPS)
        & (env[:, 2] < x1 - EPS) & (env[:, 3] < y1 - EPS)
    )
    if function is TopoFunction.INTERSECTS:
        definitely_false = (
            (env[:, 2] < x0 - EPS) | (env[:, 0] > x1 + EPS)
            | (env[:, 3] < y0 - EPS) | (env[:, 1] > y1 + EPS)
        )
    else:
        # A tight envelope poking out beyond the closed rectangle proves some
        # geometry point lies outside it.
        definitely_false = (
            (env[:, 0] < x0 - EPS) | (env[:, 1] < y0 - EPS)
            | (env[:, 2] > x1 + EPS) | (env[:, 3] > y1 + EPS)
        )
    band = ~(strictly_inside | definitely_false)
    count = int(strictly_inside.sum())
    if band.any():
        rect_poly = rect.to_polygon()
        for i in ids[band]:
            if eval_predicate(function, view.geometry(int(i)), rect_poly):
                count += 1
    return count


def calibrate_rectangle(features, function: TopoFunction, target: float,
                        ) -> tuple[Rectangle, float]:
    """Grow a cell-aligned rectangle from the world origin to hit a target.

    Binary-searches the monotone square sweep of rectangles anchored one cell
    below the world envelope's min corner, then refines width and height
    independently (still cell-aligned, each a monotone 1-D sweep). Returns the
    non-empty rectangle whose exact match fraction is closest to ``target``,
    with that fraction.
    """
    view = _as_view(features)
    m = view.count
    if function not in _SWEEPABLE:
        raise CalibrationError(f"{function.value} is not monotone under rectangle growth")
    if not 0.0 < target <= 1.0:
        raise ValueError("target must be in (0, 1]")
    if target < 1.0 / m:
        raise Unachievable(f"target {target} is below 1/{m}")

    world, cell = _world_rectangle(view)
    anchor = Coord(world.min.x - cell, world.min.y - cell)
    gx = int(np.ceil((world.max.x + cell - anchor.x) / cell))
    gy = int(np.ceil((world.max.y + cell - anchor.y) / cell))

    def rect_at(w: int, h: int) -> Rectangle:
        return Rectangle(anchor, Coord(anchor.x + w * cell, anchor.y + h * cell))

    counts: dict[tuple[int, int], int] = {}

    def count_at(w: int, h: int) -> int:
        w, h = min(w, gx), min(h, gy)
        if (w, h) not in counts:
            counts[(w, h)] = count_matches(view, function, rect_at(w, h))
        return counts[(w, h)]

    goal = target * m

    def below_then_above(count_fn, hi_limit: int) -> tuple[int, int]:
        """Largest step with count <= goal plus the step after it."""
        lo, hi = 0, hi_limit
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if count_fn(mid) <= goal:
                lo = mid
            else:
                hi = mid - 1
        return lo, min(lo + 1, hi_limit)

    side = max(gx, gy)
    u0, u1 = below_then_above(lambda u: count_at(u, u), side)
    candidates = {(min(u0, gx), min(u0, gy)), (min(u1, gx), min(u1, gy))}
    # Refine each axis with the other held just past the square bracket;
    # single rows/columns of cells give much finer count granularity.
    for h_fix in {min(max(u0, 1), gy), min(u1, gy)}:
        w_lo, w_hi = below_then_above(lambda w: count_at(w, h_fix), gx)
        candidates.update({(max(w_lo, 1), h_fix), (w_hi, h_fix)})
    for w_fix in {min(max(u0, 1), gx), min(u1, gx)}:
        h_lo, h_hi = below_then_above(lambda h: count_at(w_fix, h), gy)
        candidates.update({(w_fix, max(h_lo, 1)), (w_fix, h_hi)})

    scored = []
    for w, h in candidates:
        if w < 1 or h < 1:
            continue
        c = count_at(w, h)
        scored.append((abs(c - goal), c == 0, c, w, h))
    scored.sort()
    # Never hand back an empty selection when a non-empty candidate exists.
    nonzero = [s for s in scored if not s[1]]
    if nonzero:
        _, _, c, w, h = nonzero[0]
    else:
        w, h = gx, gy
        c = count_at(w, h)
    return rect_at(w, h), c / m


def sweep_counts(features, function: TopoFunction, steps: Iterable[int]) -> list[int]:
    """Match counts along the calibration sweep (exposed for monotonicity checks)."""
    view = _as_view(features)
    world, cell = _world_rectangle(view)
    anchor = Coord(world.min.x - cell, world.min.y - cell)
    gx = int(np.ceil((world.max.x + cell - anchor.x) / cell))
    gy = int(np.ceil((world.max.y + cell - anchor.y) / cell))
    out = []
    for u in steps:
        rect = Rectangle(anchor, Coord(anchor.x + min(u, gx) * cell,
                                       anchor.y + min(u, gy) * cell))
        out.append(count_matches(view, function, rect))
    return out


# --------------------------------------------------------------------------
# SPARQL rendering
# --------------------------------------------------------------------------

def _wkt_literal(rect: Rectangle, params: GeneratorParams | None) -> str:
    wkt = wkt_serialize(rect.to_polygon())
    if params is not None and params.crs_uri:
        wkt = f"<{params.crs_uri}> {wkt}"
    return wkt


def render_selection_sparql(spec: SelectionSpec, geom_wkt: str, dialect: str) -> str:
    func = _FILTER_FUNCTIONS[dialect][spec.function]
    ns = dataset_namespace(spec.dataset)
    return (
        f"{_FUNCTION_PREFIX[dialect]}\n"
        f"{_GEO_PREFIX}\n"
        f"PREFIX ns: <{ns}>\n"
        "SELECT ?s\n"
        "WHERE {\n"
        "  ?s ns:hasGeometry/ns:asWKT ?g .\n"
        f'  ?s ns:hasTag/ns:hasKey "{spec.thema}" .\n'
        f'  FILTER({func}(?g, "{geom_wkt}"^^geo:wktLiteral))\n'
        "}\n"
    )


def render_join_sparql(spec: JoinSpec, dialect: str) -> str:
    func = _FILTER_FUNCTIONS[dialect][spec.function]
    ns1 = dataset_namespace(spec.left)
    ns2 = dataset_namespace(spec.right)
    return (
        f"{_FUNCTION_PREFIX[dialect]}\n"
        f"PREFIX ns1: <{ns1}>\n"
        f"PREFIX ns2: <{ns2}>\n"
        "SELECT ?s1 ?s2\n"
        "WHERE {\n"
        "  ?s1 ns1:hasGeometry/ns1:asWKT ?g1 .\n"
        f'  ?s1 ns1:hasTag/ns1:hasKey "{spec.thema}" .\n'
        "  ?s2 ns2:hasGeometry/ns2:asWKT ?g2 .\n"
        f'  ?s2 ns2:hasTag/ns2:hasKey "{spec.thema2}" .\n'
        f"  FILTER({func}(?g1, ?g2))\n"
        "}\n"
    )


# --------------------------------------------------------------------------
# Instantiation
# --------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(x, "g")


def instantiate_selection(spec: SelectionSpec, features, params: GeneratorParams | None,
                          dialect: str = "geosparql",
                          rect: Rectangle | None = None,
                          spatial: float | None = None) -> QueryInstance:
    """Build one spatial-selection query with its exact expected count.

    The rectangle is calibrated against the whole dataset (spatial
    selectivity is defined over all features); the expected count then counts
    the conjunction of the tag filter and the spatial predicate.
    """
    view = _as_view(features)
    if rect is None:
        rect, spatial = calibrate_rectangle(view, spec.function, spec.target_selectivity)
    expected = count_matches(view, spec.function, rect, stride=spec.thema)
    sparql = render_selection_sparql(spec, _wkt_literal(rect, params), dialect)
    return QueryInstance(
        id=(f"synthetic-sel-{spec.dataset.value}-{spec.function.value}"
            f"-thema{spec.thema}-target{_fmt(spec.target_selectivity)}"),
        sparql=sparql,
        spec=spec,
        geom=rect,
        target_selectivity=spec.target_selectivity,
        spatial_selectivity=spatial,
        achieved_selectivity=expected / view.count,
        expected_count=expected,
        dialect=dialect,
    )


class _GridIndex:
    """Uniform bucket grid over feature envelopes for join candidate pruning."""

    def __init__(self, view, stride: int):
        env = view.envelopes
        self.ids = np.arange(0, view.count, stride)
        sub = env[::stride] if stride > 1 else env
        widths = sub[:, 2] - sub[:, 0]
        heights = sub[:, 3] - sub[:, 1]
        self.cell = max(float(widths.max()), float(heights.max()), EPS)
        self.buckets: dict[tuple[int, int], list[int]] = {}
        gx0 = np.floor(sub[:, 0] / self.cell).astype(int)
        gy0 = np.floor(sub[:, 1] / self.cell).astype(int)
        gx1 = np.floor(sub[:, 2] / self.cell).astype(int)
        gy1 = np.floor(sub[:, 3] / self.cell).astype(int)
        for pos, fid in enumerate(self.ids):
            for bx in range(gx0[pos], gx1[pos] + 1):
                for by in range(gy0[pos], gy1[pos] + 1):
                    self.buckets.setdefault((bx, by), []).append(int(fid))

    def candidates(self, minx: float, miny: float, maxx: float, maxy: float) -> set[int]:
        out: set[int] = set()
        for bx in range(int(np.floor(minx / self.cell)), int(np.floor(maxx / self.cell)) + 1):
            for by in range(int(np.floor(miny / self.cell)), int(np.floor(maxy / self.cell)) + 1):
                out.update(self.buckets.get((bx, by), ()))
        return out


def count_join(left_features, right_features, function: TopoFunction,
               stride_left: int = 1, stride_right: int = 1) -> int:
    """Exact ordered-pair count of the spatial join over tagged subsets."""
    left = _as_view(left_features)
    right = _as_view(right_features)
    index = _GridIndex(right, stride_right)
    lenv = left.envelopes
    count = 0
    right_geoms: dict[int, object] = {}
    for i in range(0, left.count, stride_left):
        minx, miny, maxx, maxy = lenv[i]
        cands = index.candidates(minx - EPS, miny - EPS, maxx + EPS, maxy + EPS)
        if not cands:
            continue
        gl = left.geometry(i)
        for j in sorted(cands):
            renv = right.envelopes[j]
            if (renv[2] < minx - EPS or renv[0] > maxx + EPS
                    or renv[3] < miny - EPS or renv[1] > maxy + EPS):
                continue
            gr = right_geoms.get(j)
            if gr is None:
                gr = right.geometry(j)
                right_geoms[j] = gr
            if left.kind == right.kind and i == j:
                # Self-pairs never satisfy touches (a geometry's interior
                # meets its own interior).
                continue
            if eval_predicate(function, gl, gr):
                count += 1
    return count


def instantiate_join(spec: JoinSpec, left_features, right_features,
                     dialect: str = "geosparql") -> QueryInstance:
    """Build one spatial-join query; expected count is the oracle pair count."""
    left = _as_view(left_features)
    right = _as_view(right_features)
    expected = count_join(left, right, spec.function,
                          stride_left=spec.thema, stride_right=spec.thema2)
    pairs = len(range(0, left.count, spec.thema)) * len(range(0, right.count, spec.thema2))
    return QueryInstance(
        id=(f"synthetic-join-{spec.left.value}-{spec.function.value}-{spec.right.value}"
            f"-thema{spec.thema}-thema{spec.thema2}"),
        sparql=render_join_sparql(spec, dialect),
        spec=spec,
        target_selectivity=None,
        spatial_selectivity=None,
        achieved_selectivity=expected / pairs if pairs else 0.0,
        expected_count=expected,
        dialect=dialect,
    )


DEFAULT_SELECTIONS = (
    (DatasetKind.LAND_OWNERSHIP, TopoFunction.INTERSECTS),
    (DatasetKind.POI, TopoFunction.WITHIN),
)

DEFAULT_JOINS = (
    (DatasetKind.LAND_OWNERSHIP, TopoFunction.INTERSECTS, DatasetKind.STATE),
    (DatasetKind.STATE, TopoFunction.TOUCHES, DatasetKind.STATE),
    (DatasetKind.POI, TopoFunction.WITHIN, DatasetKind.STATE),
)


def default_workload(sources: dict[DatasetKind, DatasetView],
                     params: GeneratorParams,
                     targets: Sequence[float] = DEFAULT_TARGETS,
                     dialect: str = "geosparql") -> list[QueryInstance]:
    """The default grid: 2 selection shapes x targets x extreme themas, plus
    the three join shapes over all four extreme thema combinations.

    Targets below the 1/m floor of a dataset are clamped up to 1/m so small
    grids still produce a full workload.
    """
    themas = (1, 1 << params.k)
    instances: list[QueryInstance] = []
    for dataset, function in DEFAULT_SELECTIONS:
        view = sources[dataset]
        for target in targets:
            eff_target = max(target, 1.0 / view.count)
            rect, spatial = calibrate_rectangle(view, function, eff_target)
            for thema in themas:
                spec = SelectionSpec(dataset, function, thema, target)
                instances.append(instantiate_selection(
                    spec, view, params, dialect, rect=rect, spatial=spatial))
    for left, function, right in DEFAULT_JOINS:
        for thema in themas:
            for thema2 in themas:
                spec = JoinSpec(left, right, function, thema, thema2)
                instances.append(instantiate_join(
                    spec, sources[left], sources[right], dialect))
    return instances


# --------------------------------------------------------------------------
# Workload manifest
# --------------------------------------------------------------------------

def _spec_to_dict(spec: SelectionSpec | JoinSpec | None) -> dict | None:
    if spec is None:
        return None
    if isinstance(spec, SelectionSpec):
        return {
            "type": "selection",
            "dataset": spec.dataset.value,
            "function": spec.function.value,
            "thema": spec.thema,
            "target_selectivity": spec.target_selectivity,
        }
    return {
        "type": "join",
        "left": spec.left.value,
        "right": spec.right.value,
        "function": spec.function.value,
        "thema": spec.thema,
        "thema2": spec.thema2,
    }


def _spec_from_dict(raw: dict | None) -> SelectionSpec | JoinSpec | None:
    if raw is None:
        return None
    if raw["type"] == "selection":
        return SelectionSpec(DatasetKind(raw["dataset"]), TopoFunction(raw["function"]),
                             raw["thema"], raw["target_selectivity"])
    return JoinSpec(DatasetKind(raw["left"]), DatasetKind(raw["right"]),
                    TopoFunction(raw["function"]), raw["thema"], raw["thema2"])


def instance_to_dict(inst: QueryInstance) -> dict:
    return {
        "id": inst.id,
        "sparql": inst.sparql,
        "spec": _spec_to_dict(inst.spec),
        "geom": ([inst.geom.min.x, inst.geom.min.y, inst.geom.max.x, inst.geom.max.y]
                 if inst.geom else None),
        "geom_wkt": wkt_serialize(inst.geom.to_polygon()) if inst.geom else None,
        "target_selectivity": inst.target_selectivity,
        "spatial_selectivity": inst.spatial_selectivity,
        "achieved_selectivity": inst.achieved_selectivity,
        "expected_count": inst.expected_count,
        "dialect": inst.dialect,
    }


def instance_from_dict(raw: dict) -> QueryInstance:
    geom = None
    if raw.get("geom"):
        x0, y0, x1, y1 = raw["geom"]
        geom = Rectangle(Coord(x0, y0), Coord(x1, y1))
    return QueryInstance(
        id=raw["id"],
        sparql=raw["sparql"],
        spec=_spec_from_dict(raw.get("spec")),
        geom=geom,
        target_selectivity=raw.get("target_selectivity"),
        spatial_selectivity=raw.get("spatial_selectivity"),
        achieved_selectivity=raw.get("achieved_selectivity"),
        expected_count=raw.get("expected_count"),
        dialect=raw.get("dialect", "geosparql"),
    )


def write_manifest(path: str | Path, instances: Sequence[QueryInstance],
                   params: GeneratorParams | None = None) -> None:
    doc = {
        "schema": "geobench-workload@1",
        "params": None if params is None else {
            "n": params.n,
            "k": params.k,
            "seed": params.seed,
            "cell": params.cell,
            "origin": [params.origin.x, params.origin.y],
            "crs_uri": params.crs_uri,
        },
        "instances": [instance_to_dict(i) for i in instances],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_manifest(path: str | Path) -> tuple[GeneratorParams | None, list[QueryInstance]]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != "geobench-workload@1":
        raise ValueError(f"not a workload manifest: {path}")
    params = None
    if doc.get("params"):
        raw = doc["params"]
        params = GeneratorParams(
            n=raw["n"], k=raw["k"], seed=raw["seed"], cell=raw["cell"],
            origin=Coord(raw["origin"][0], raw["origin"][1]), crs_uri=raw.get("crs_uri"),
        )
    return params, [instance_from_dict(r) for r in doc["instances"]]
