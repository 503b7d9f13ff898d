"""Planar geometry kernel restricted to the shapes the workload generator emits.

Supported shapes are points, polylines, and convex polygons (axis-aligned
rectangles are a thin convenience wrapper). The restriction to convex polygons
keeps every topological predicate exactly decidable with segment arithmetic
and separating-axis tests, so the module doubles as the ground-truth counter
used to certify query selectivities. Non-convex input is rejected, never
silently mishandled.

Coordinates are doubles; on-boundary decisions are guarded by ``EPS`` world
units. All values are immutable and all operations pure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

# Tolerance for on-boundary decisions, in world units.
EPS = 1e-9


class ParseError(ValueError):
    """Malformed WKT input."""


class UnsupportedGeometry(ValueError):
    """Well-formed WKT that falls outside the supported geometry class."""


class UnsupportedPair(TypeError):
    """Predicate undefined for the dimension pair, per DE-9IM rules."""


@dataclass(frozen=True)
class Coord:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("coordinates must be finite")


class Geometry:
    """Base marker for the supported shapes."""

    __slots__ = ()


@dataclass(frozen=True)
class Point(Geometry):
    coord: Coord


@dataclass(frozen=True)
class LineString(Geometry):
    """Open polyline with at least two vertices and no zero-length segment."""

    vertices: tuple[Coord, ...]

    def __post_init__(self):
        verts = tuple(self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise ValueError("polyline needs at least two vertices")
        for a, b in zip(verts, verts[1:]):
            if abs(a.x - b.x) <= EPS and abs(a.y - b.y) <= EPS:
                raise ValueError("zero-length segment")


@dataclass(frozen=True)
class Polygon(Geometry):
    """Convex polygon stored as a closed counter-clockwise ring.

    The first vertex is repeated as the last one. Collinear ring vertices are
    tolerated; reflex corners and degenerate (zero-area) rings are not.
    """

    ring: tuple[Coord, ...]

    def __post_init__(self):
        ring = tuple(self.ring)
        object.__setattr__(self, "ring", ring)
        if len(ring) < 4:
            raise ValueError("polygon ring needs at least three distinct vertices")
        if ring[0] != ring[-1]:
            raise ValueError("polygon ring must be closed")
        verts = ring[:-1]
        for a, b in zip(ring, ring[1:]):
            if abs(a.x - b.x) <= EPS and abs(a.y - b.y) <= EPS:
                raise ValueError("zero-length ring edge")
        area2 = 0.0
        for a, b in zip(ring, ring[1:]):
            area2 += a.x * b.y - b.x * a.y
        if area2 <= EPS:
            raise ValueError("polygon ring must be counter-clockwise with positive area")
        m = len(verts)
        for i in range(m):
            a, b, c = verts[i - 1], verts[i], verts[(i + 1) % m]
            cr = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
            tol = EPS * (abs(b.x - a.x) + abs(b.y - a.y))
            if cr < -tol:
                raise UnsupportedGeometry("polygon ring is not convex")


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle; may be degenerate (envelope of a point or line)."""

    min: Coord
    max: Coord

    def __post_init__(self):
        if self.min.x > self.max.x or self.min.y > self.max.y:
            raise ValueError("rectangle min must not exceed max")

    @property
    def width(self) -> float:
        return self.max.x - self.min.x

    @property
    def height(self) -> float:
        return self.max.y - self.min.y

    def to_polygon(self) -> Polygon:
        if self.width <= EPS or self.height <= EPS:
            raise ValueError("degenerate rectangle has no polygon form")
        c0 = Coord(self.min.x, self.min.y)
        c1 = Coord(self.max.x, self.min.y)
        c2 = Coord(self.max.x, self.max.y)
        c3 = Coord(self.min.x, self.max.y)
        return Polygon((c0, c1, c2, c3, c0))


class TopoFunction(Enum):
    EQUALS = "equals"
    INTERSECTS = "intersects"
    WITHIN = "within"
    CONTAINS = "contains"
    TOUCHES = "touches"
    OVERLAPS = "overlaps"
    CROSSES = "crosses"
    DISJOINT = "disjoint"


# --------------------------------------------------------------------------
# WKT serialization
# --------------------------------------------------------------------------

def _num(v: float) -> str:
    s = repr(float(v))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _coords_text(coords) -> str:
    return ", ".join(f"{_num(c.x)} {_num(c.y)}" for c in coords)


def wkt_serialize(g: Geometry) -> str:
    """Canonical WKT: uppercase tag, shortest round-trip decimals, closed ring."""
    if isinstance(g, Point):
        return f"POINT ({_num(g.coord.x)} {_num(g.coord.y)})"
    if isinstance(g, LineString):
        return f"LINESTRING ({_coords_text(g.vertices)})"
    if isinstance(g, Polygon):
        return f"POLYGON (({_coords_text(g.ring)}))"
    raise TypeError(f"not a supported geometry: {type(g).__name__}")


_WKT_TAG_RE = re.compile(r"^\s*(?:<[^>]*>\s*)?([A-Za-z]+)\s*(.*?)\s*$", re.DOTALL)

_KNOWN_UNSUPPORTED_TAGS = {
    "MULTIPOINT",
    "MULTILINESTRING",
    "MULTIPOLYGON",
    "GEOMETRYCOLLECTION",
    "LINEARRING",
    "CIRCULARSTRING",
    "TRIANGLE",
}


def _parse_coord(token: str) -> Coord:
    parts = token.split()
    if len(parts) != 2:
        if len(parts) > 2:
            raise UnsupportedGeometry("only 2D coordinates are supported")
        raise ParseError(f"bad coordinate {token!r}")
    try:
        x, y = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ParseError(f"bad number in {token!r}") from exc
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ParseError("non-finite coordinate")
    return Coord(x, y)


def _parse_coord_list(body: str) -> list[Coord]:
    return [_parse_coord(tok) for tok in body.split(",")]


def _strip_parens(text: str) -> str:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise ParseError("expected parenthesized coordinates")
    return text[1:-1].strip()


def wkt_parse(s: str) -> Geometry:
    """Parse WKT for POINT, LINESTRING, or POLYGON with one convex ring.

    Whitespace-tolerant; an optional leading ``<crs-uri>`` prefix (GeoSPARQL
    literal convention) is accepted and ignored.
    """
    m = _WKT_TAG_RE.match(s or "")
    if not m:
        raise ParseError("empty WKT")
    tag = m.group(1).upper()
    rest = m.group(2)
    if tag in _KNOWN_UNSUPPORTED_TAGS:
        raise UnsupportedGeometry(f"{tag} is outside the supported geometry class")
    if tag not in ("POINT", "LINESTRING", "POLYGON"):
        raise ParseError(f"unknown WKT tag {tag!r}")
    if rest.upper() == "EMPTY":
        raise UnsupportedGeometry("empty geometries are not supported")

    if tag == "POINT":
        body = _strip_parens(rest)
        if "," in body:
            raise ParseError("POINT takes a single coordinate")
        return Point(_parse_coord(body))

    if tag == "LINESTRING":
        body = _strip_parens(rest)
        coords = _parse_coord_list(body)
        if len(coords) < 2:
            raise ParseError("LINESTRING needs at least two coordinates")
        try:
            return LineString(tuple(coords))
        except UnsupportedGeometry:
            raise
        except ValueError as exc:
            raise UnsupportedGeometry(str(exc)) from exc

    # POLYGON: exactly one ring, convex, closed.
    body = _strip_parens(rest)
    if not (body.startswith("(") and body.endswith(")")):
        raise ParseError("POLYGON ring must be parenthesized")
    inner = body[1:-1]
    if ")" in inner or "(" in inner:
        raise UnsupportedGeometry("interior rings are not supported")
    coords = _parse_coord_list(inner)
    if len(coords) < 4:
        raise ParseError("polygon ring needs at least four coordinates")
    first, last = coords[0], coords[-1]
    if abs(first.x - last.x) > EPS or abs(first.y - last.y) > EPS:
        raise ParseError("polygon ring is not closed")
    coords[-1] = first
    area2 = 0.0
    for a, b in zip(coords, coords[1:]):
        area2 += a.x * b.y - b.x * a.y
    if area2 < 0:
        coords = coords[::-1]
    try:
        return Polygon(tuple(coords))
    except UnsupportedGeometry:
        raise
    except ValueError as exc:
        raise UnsupportedGeometry(str(exc)) from exc


# --------------------------------------------------------------------------
# Low-level primitives (doubles with EPS guards; tolerances scale as distances)
# --------------------------------------------------------------------------

def _dist(a: Coord, b: Coord) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def _same_point(a: Coord, b: Coord) -> bool:
    return _dist(a, b) <= EPS


def _orient(a: Coord, b: Coord, c: Coord) -> int:
    """Sign of the turn a->b->c; 0 when c is within EPS of the line ab."""
    cr = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
    if abs(cr) <= EPS * math.hypot(b.x - a.x, b.y - a.y):
        return 0
    return 1 if cr > 0 else -1


def _point_seg_dist(p: Coord, a: Coord, b: Coord) -> float:
    ax, ay = b.x - a.x, b.y - a.y
    px, py = p.x - a.x, p.y - a.y
    denom = ax * ax + ay * ay
    if denom == 0.0:
        return math.hypot(px, py)
    t = (px * ax + py * ay) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return math.hypot(px - t * ax, py - t * ay)


def _on_segment(p: Coord, a: Coord, b: Coord) -> bool:
    return _point_seg_dist(p, a, b) <= EPS


def _seg_param(p: Coord, a: Coord, b: Coord) -> float:
    """Parameter of the projection of p on segment ab (not clamped)."""
    ax, ay = b.x - a.x, b.y - a.y
    denom = ax * ax + ay * ay
    return ((p.x - a.x) * ax + (p.y - a.y) * ay) / denom


def point_on_polyline(p: Coord, line: LineString) -> int:
    """1 on the polyline interior, 0 on a free endpoint, -1 elsewhere."""
    verts = line.vertices
    hit = any(_on_segment(p, a, b) for a, b in zip(verts, verts[1:]))
    if not hit:
        return -1
    closed = _same_point(verts[0], verts[-1])
    if not closed and (_same_point(p, verts[0]) or _same_point(p, verts[-1])):
        return 0
    return 1


def point_in_convex(p: Coord, poly: Polygon) -> int:
    """1 strictly inside, 0 on the boundary, -1 strictly outside."""
    mind = math.inf
    ring = poly.ring
    for a, b in zip(ring, ring[1:]):
        ex, ey = b.x - a.x, b.y - a.y
        d = (ex * (p.y - a.y) - ey * (p.x - a.x)) / math.hypot(ex, ey)
        if d < mind:
            mind = d
            if mind < -EPS:
                return -1
    return 0 if mind <= EPS else 1


def envelope(g: Geometry) -> Rectangle:
    """Smallest axis-aligned rectangle containing the geometry."""
    if isinstance(g, Point):
        return Rectangle(g.coord, g.coord)
    coords = g.vertices if isinstance(g, LineString) else g.ring
    xs = [c.x for c in coords]
    ys = [c.y for c in coords]
    return Rectangle(Coord(min(xs), min(ys)), Coord(max(xs), max(ys)))


# --------------------------------------------------------------------------
# Pairwise analysis
# --------------------------------------------------------------------------

def _segments(line: LineString):
    return list(zip(line.vertices, line.vertices[1:]))


def _seg_seg_contacts(a0, a1, b0, b1):
    """Contact set of two segments.

    Returns (kind, payload): kind is "none", "point" (payload: contact Coord),
    or "overlap" (payload: the two endpoints of the positive-length shared
    collinear piece).
    """
    o1 = _orient(a0, a1, b0)
    o2 = _orient(a0, a1, b1)
    o3 = _orient(b0, b1, a0)
    o4 = _orient(b0, b1, a1)

    if o1 == 0 and o2 == 0:
        # Collinear: overlap interval along a.
        t0 = _seg_param(b0, a0, a1)
        t1 = _seg_param(b1, a0, a1)
        if t0 > t1:
            t0, t1 = t1, t0
        lo, hi = max(t0, 0.0), min(t1, 1.0)
        seg_len = _dist(a0, a1)
        if (hi - lo) * seg_len > EPS:
            p_lo = Coord(a0.x + lo * (a1.x - a0.x), a0.y + lo * (a1.y - a0.y))
            p_hi = Coord(a0.x + hi * (a1.x - a0.x), a0.y + hi * (a1.y - a0.y))
            return "overlap", (p_lo, p_hi)
        if hi >= lo - EPS / max(seg_len, EPS):
            mid = (lo + hi) / 2.0
            p = Coord(a0.x + mid * (a1.x - a0.x), a0.y + mid * (a1.y - a0.y))
            if _on_segment(p, a0, a1) and _on_segment(p, b0, b1):
                return "point", p
        return "none", None

    if o1 != o2 and o3 != o4 and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        # Proper crossing: solve the 2x2 system.
        dax, day = a1.x - a0.x, a1.y - a0.y
        dbx, dby = b1.x - b0.x, b1.y - b0.y
        denom = dax * dby - day * dbx
        t = ((b0.x - a0.x) * dby - (b0.y - a0.y) * dbx) / denom
        return "point", Coord(a0.x + t * dax, a0.y + t * day)

    # Possible endpoint touch.
    for p, s0, s1 in ((b0, a0, a1), (b1, a0, a1), (a0, b0, b1), (a1, b0, b1)):
        if _on_segment(p, s0, s1):
            other = (b0, b1) if s0 is a0 else (a0, a1)
            if _on_segment(p, *other):
                return "point", p
    return "none", None


def _line_line_facts(a: LineString, b: LineString):
    closure = False
    ii = False
    ii_dim1 = False
    for sa0, sa1 in _segments(a):
        for sb0, sb1 in _segments(b):
            kind, payload = _seg_seg_contacts(sa0, sa1, sb0, sb1)
            if kind == "none":
                continue
            closure = True
            if kind == "overlap":
                p_lo, p_hi = payload
                mid = Coord((p_lo.x + p_hi.x) / 2.0, (p_lo.y + p_hi.y) / 2.0)
                if point_on_polyline(mid, a) == 1 and point_on_polyline(mid, b) == 1:
                    ii = True
                    ii_dim1 = True
                for q in (p_lo, p_hi):
                    if point_on_polyline(q, a) == 1 and point_on_polyline(q, b) == 1:
                        ii = True
            else:
                p = payload
                if point_on_polyline(p, a) == 1 and point_on_polyline(p, b) == 1:
                    ii = True
            if closure and ii and ii_dim1:
                return closure, ii, ii_dim1
    return closure, ii, ii_dim1


def _line_covered_by(a: LineString, b: LineString) -> bool:
    """True when every point of polyline a lies on polyline b."""
    b_segs = _segments(b)
    for a0, a1 in _segments(a):
        seg_len = _dist(a0, a1)
        tol = EPS / seg_len
        intervals = []
        for b0, b1 in b_segs:
            if _orient(a0, a1, b0) != 0 or _orient(a0, a1, b1) != 0:
                continue
            # b's segment must actually lie on the line of a, not merely have
            # endpoints near it at a grazing angle; the orient checks above
            # bound the deviation by EPS which is enough for coverage.
            t0 = _seg_param(b0, a0, a1)
            t1 = _seg_param(b1, a0, a1)
            if t0 > t1:
                t0, t1 = t1, t0
            lo, hi = max(t0, 0.0), min(t1, 1.0)
            if hi - lo > -tol:
                intervals.append((lo, hi))
        if not intervals:
            return False
        intervals.sort()
        covered_to = 0.0
        for lo, hi in intervals:
            if lo > covered_to + tol:
                return False
            covered_to = max(covered_to, hi)
        if covered_to < 1.0 - tol:
            return False
    return True


def _clip_segment_to_convex(p: Coord, q: Coord, poly: Polygon):
    """Parameter interval of [p, q] inside the closed polygon, or None."""
    t0, t1 = 0.0, 1.0
    ring = poly.ring
    for a, b in zip(ring, ring[1:]):
        ex, ey = b.x - a.x, b.y - a.y
        elen = math.hypot(ex, ey)
        tol = EPS * elen
        fp = ex * (p.y - a.y) - ey * (p.x - a.x)
        fq = ex * (q.y - a.y) - ey * (q.x - a.x)
        if fp < -tol and fq < -tol:
            return None
        if fp < -tol:
            t0 = max(t0, fp / (fp - fq))
        elif fq < -tol:
            t1 = min(t1, fp / (fp - fq))
    if t0 > t1:
        return None
    return t0, t1


def _line_poly_facts(line: LineString, poly: Polygon):
    closure = False
    ii = False
    all_in_closure = all(point_in_convex(v, poly) >= 0 for v in line.vertices)
    for p, q in _segments(line):
        r = _clip_segment_to_convex(p, q, poly)
        if r is None:
            continue
        t0, t1 = r
        seg_len = _dist(p, q)
        piece = Coord(p.x + ((t0 + t1) / 2.0) * (q.x - p.x),
                      p.y + ((t0 + t1) / 2.0) * (q.y - p.y))
        if point_in_convex(piece, poly) < 0:
            # Numerical sliver from near-tangent clipping; not a real contact.
            continue
        closure = True
        if (t1 - t0) * seg_len > EPS and point_in_convex(piece, poly) == 1:
            ii = True
    return closure, ii, all_in_closure


def _convex_overlap(a: Polygon, b: Polygon) -> float:
    """Minimum projection overlap over all separating-axis candidates.

    Positive: interiors intersect by at least that width. Near zero: closures
    touch. Below -EPS: disjoint. Complete for convex polygons.
    """
    min_overlap = math.inf
    for poly in (a, b):
        ring = poly.ring
        for p, q in zip(ring, ring[1:]):
            ex, ey = q.x - p.x, q.y - p.y
            elen = math.hypot(ex, ey)
            nx, ny = -ey / elen, ex / elen
            amin = amax = a.ring[0].x * nx + a.ring[0].y * ny
            for v in a.ring[1:-1]:
                d = v.x * nx + v.y * ny
                if d < amin:
                    amin = d
                elif d > amax:
                    amax = d
            bmin = bmax = b.ring[0].x * nx + b.ring[0].y * ny
            for v in b.ring[1:-1]:
                d = v.x * nx + v.y * ny
                if d < bmin:
                    bmin = d
                elif d > bmax:
                    bmax = d
            overlap = min(amax, bmax) - max(amin, bmin)
            if overlap < min_overlap:
                min_overlap = overlap
                if min_overlap < -EPS:
                    return min_overlap
    return min_overlap


def _poly_contains_poly(a: Polygon, b: Polygon) -> bool:
    """All of b inside the closure of a (convexity makes vertices sufficient)."""
    return all(point_in_convex(v, a) >= 0 for v in b.ring[:-1])


# --------------------------------------------------------------------------
# Predicate dispatch
# --------------------------------------------------------------------------

def _dim(g: Geometry) -> int:
    if isinstance(g, Point):
        return 0
    if isinstance(g, LineString):
        return 1
    return 2


_CROSSES_PAIRS = {(0, 1), (1, 0), (1, 1), (1, 2), (2, 1)}


def _pp(f: TopoFunction, a: Point, b: Point) -> bool:
    same = _same_point(a.coord, b.coord)
    if f in (TopoFunction.EQUALS, TopoFunction.INTERSECTS, TopoFunction.WITHIN):
        return same
    if f is TopoFunction.TOUCHES or f is TopoFunction.OVERLAPS:
        return False
    raise AssertionError(f)


def _pl(f: TopoFunction, p: Point, line: LineString, point_first: bool) -> bool:
    pos = point_on_polyline(p.coord, line)
    if f is TopoFunction.EQUALS:
        return False
    if f is TopoFunction.INTERSECTS:
        return pos >= 0
    if f is TopoFunction.TOUCHES:
        return pos == 0
    if f is TopoFunction.WITHIN:
        return pos == 1 if point_first else False
    if f is TopoFunction.CROSSES:
        # A single point cannot meet a line's interior and exterior at once.
        return False
    raise AssertionError(f)


def _pg(f: TopoFunction, p: Point, poly: Polygon, point_first: bool) -> bool:
    pos = point_in_convex(p.coord, poly)
    if f is TopoFunction.EQUALS:
        return False
    if f is TopoFunction.INTERSECTS:
        return pos >= 0
    if f is TopoFunction.TOUCHES:
        return pos == 0
    if f is TopoFunction.WITHIN:
        return pos == 1 if point_first else False
    raise AssertionError(f)


def _ll(f: TopoFunction, a: LineString, b: LineString) -> bool:
    closure, ii, ii_dim1 = _line_line_facts(a, b)
    if f is TopoFunction.INTERSECTS:
        return closure
    if f is TopoFunction.TOUCHES:
        return closure and not ii
    if f is TopoFunction.WITHIN:
        return closure and _line_covered_by(a, b)
    if f is TopoFunction.EQUALS:
        return closure and _line_covered_by(a, b) and _line_covered_by(b, a)
    if f is TopoFunction.OVERLAPS:
        return ii_dim1 and not _line_covered_by(a, b) and not _line_covered_by(b, a)
    if f is TopoFunction.CROSSES:
        return ii and not ii_dim1
    raise AssertionError(f)


def _lg(f: TopoFunction, line: LineString, poly: Polygon, line_first: bool) -> bool:
    closure, ii, all_in = _line_poly_facts(line, poly)
    if f is TopoFunction.EQUALS:
        return False
    if f is TopoFunction.INTERSECTS:
        return closure
    if f is TopoFunction.TOUCHES:
        return closure and not ii
    if f is TopoFunction.WITHIN:
        return (all_in and ii) if line_first else False
    if f is TopoFunction.CROSSES:
        return ii and not all_in
    raise AssertionError(f)


def _gg(f: TopoFunction, a: Polygon, b: Polygon) -> bool:
    overlap = _convex_overlap(a, b)
    intersects = overlap >= -EPS
    ii = overlap > EPS
    if f is TopoFunction.INTERSECTS:
        return intersects
    if f is TopoFunction.TOUCHES:
        return intersects and not ii
    within_ab = ii and _poly_contains_poly(b, a)
    if f is TopoFunction.WITHIN:
        return within_ab
    within_ba = ii and _poly_contains_poly(a, b)
    if f is TopoFunction.EQUALS:
        return within_ab and within_ba
    if f is TopoFunction.OVERLAPS:
        return ii and not within_ab and not within_ba
    raise AssertionError(f)


def eval_predicate(f: TopoFunction, a: Geometry, b: Geometry) -> bool:
    """Evaluate a DE-9IM-consistent topological predicate on two geometries.

    Raises UnsupportedPair for predicate/dimension combinations DE-9IM leaves
    undefined: Overlaps on mixed-dimension pairs, Crosses outside the
    point/line, line/line, and line/polygon pairs.
    """
    if f is TopoFunction.DISJOINT:
        return not eval_predicate(TopoFunction.INTERSECTS, a, b)
    if f is TopoFunction.CONTAINS:
        return eval_predicate(TopoFunction.WITHIN, b, a)

    da, db = _dim(a), _dim(b)
    if f is TopoFunction.OVERLAPS and da != db:
        raise UnsupportedPair(f"overlaps undefined for dimensions {da}/{db}")
    if f is TopoFunction.CROSSES and (da, db) not in _CROSSES_PAIRS:
        raise UnsupportedPair(f"crosses undefined for dimensions {da}/{db}")

    if da == 0 and db == 0:
        return _pp(f, a, b)
    if da == 0 and db == 1:
        return _pl(f, a, b, point_first=True)
    if da == 1 and db == 0:
        if f is TopoFunction.WITHIN:
            return False
        return _pl(f, b, a, point_first=False)
    if da == 0 and db == 2:
        return _pg(f, a, b, point_first=True)
    if da == 2 and db == 0:
        if f is TopoFunction.WITHIN:
            return False
        return _pg(f, b, a, point_first=False)
    if da == 1 and db == 1:
        return _ll(f, a, b)
    if da == 1 and db == 2:
        return _lg(f, a, b, line_first=True)
    if da == 2 and db == 1:
        if f is TopoFunction.WITHIN:
            return False
        return _lg(f, b, a, line_first=False)
    return _gg(f, a, b)
