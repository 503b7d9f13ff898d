"""Shared fixtures: geometry corpora, generated workloads, mock endpoints."""

from __future__ import annotations

import json
import random
import threading
import time
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from geobench.generator import GeneratorParams, views
from geobench.geometry import Coord, LineString, Point, Polygon


# --------------------------------------------------------------------------
# Geometry corpus on a half-unit lattice (all float arithmetic is exact there,
# so the EPS-guarded engine and the rational reference must agree bit for bit)
# --------------------------------------------------------------------------

def _lattice_point(rng) -> tuple[float, float]:
    return rng.randrange(0, 17) * 0.5, rng.randrange(0, 17) * 0.5


def _convex_hull(points):
    pts = sorted(set(points))
    if len(pts) < 3:
        return []
    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                ox, oy = out[-2]
                ax, ay = out[-1]
                if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) > 0:
                    break
                out.pop()
            out.append(p)
        return out[:-1]
    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower + upper
    return hull if len(hull) >= 3 else []


def _random_polygon(rng) -> Polygon | None:
    pts = [_lattice_point(rng) for _ in range(rng.randrange(3, 8))]
    hull = _convex_hull(pts)
    if not hull:
        return None
    ring = tuple(Coord(x, y) for x, y in hull)
    return Polygon(ring + (ring[0],))


def _random_line(rng) -> LineString | None:
    n = rng.randrange(2, 5)
    coords = []
    while len(coords) < n:
        x, y = _lattice_point(rng)
        if coords and (x, y) == (coords[-1].x, coords[-1].y):
            continue
        coords.append(Coord(x, y))
    return LineString(tuple(coords))


def build_corpus(seed: int = 20240801, size: int = 72):
    """Mixed geometry corpus plus handcrafted contact cases, <= 200 shapes."""
    rng = random.Random(seed)
    corpus = []
    while len(corpus) < size - 12:
        roll = rng.random()
        if roll < 0.25:
            x, y = _lattice_point(rng)
            corpus.append(Point(Coord(x, y)))
        elif roll < 0.60:
            line = _random_line(rng)
            if line is not None:
                corpus.append(line)
        else:
            poly = _random_polygon(rng)
            if poly is not None:
                corpus.append(poly)

    def square(x, y, s=2.0):
        ring = (Coord(x, y), Coord(x + s, y), Coord(x + s, y + s), Coord(x, y + s))
        return Polygon(ring + (ring[0],))

    corpus += [
        square(0, 0), square(0, 0),            # identical pair
        square(2, 0),                          # edge-sharing neighbor
        square(2, 2),                          # corner-touching neighbor
        square(1, 1),                          # proper overlap
        square(0.5, 0.5, 1.0),                 # contained
        LineString((Coord(0, 0), Coord(2, 0))),
        LineString((Coord(0, 0), Coord(1, 0), Coord(2, 0))),  # same set, subdivided
        LineString((Coord(1, -1), Coord(1, 1))),              # crosses the above
        LineString((Coord(0, 1), Coord(2, 1), Coord(2, 3))),  # touches square corner path
        Point(Coord(1, 0)),                    # on line interior / square edge
        Point(Coord(0, 0)),                    # on endpoints / square corner
    ]
    assert len(corpus) <= 200
    return corpus


@pytest.fixture(scope="session")
def corpus():
    return build_corpus()


@pytest.fixture(scope="session")
def params12():
    return GeneratorParams(n=12, k=2, seed=7)


@pytest.fixture(scope="session")
def views12(params12):
    return views(params12)


# --------------------------------------------------------------------------
# Scripted mock SPARQL endpoint
# --------------------------------------------------------------------------

_XML_HEAD = (b'<?xml version="1.0"?>\n'
             b'<sparql xmlns="http://www.w3.org/2005/sparql-results#">\n'
             b'<head><variable name="s"/></head>\n')


def sparql_xml(rows: int) -> bytes:
    body = b"<results>\n"
    for i in range(rows):
        body += (b'<result><binding name="s"><uri>urn:row:%d</uri></binding></result>\n'
                 % i)
    return _XML_HEAD + body + b"</results>\n</sparql>\n"


def sparql_ask_xml(value: bool) -> bytes:
    return _XML_HEAD + b"<boolean>%s</boolean>\n</sparql>\n" % (
        b"true" if value else b"false")


class MockSparqlServer:
    """HTTP server acting as a SPARQL endpoint with scripted behavior.

    ``script`` maps a query to a behavior dict: rows (int), delay (s),
    status (HTTP code), or raw (bytes). Default: 0 rows, instantly.
    Tracks every received query and asserts single-flight access.
    """

    def __init__(self):
        self.calls: list[str] = []
        self.script = lambda query: {}
        self._lock = threading.Lock()
        self._inflight = 0
        self.max_inflight = 0
        server = self

        class Handler(BaseHTTPRequestHandler):
            def _query(self) -> str:
                if self.command == "GET":
                    qs = urllib.parse.urlsplit(self.path).query
                    return urllib.parse.parse_qs(qs).get("query", [""])[0]
                length = int(self.headers.get("Content-Length", "0"))
                body = self.rfile.read(length).decode("utf-8")
                ctype = self.headers.get("Content-Type", "")
                if "sparql-query" in ctype:
                    return body
                return urllib.parse.parse_qs(body).get("query", [""])[0]

            def _respond(self):
                query = self._query()
                with server._lock:
                    server._inflight += 1
                    server.max_inflight = max(server.max_inflight, server._inflight)
                    server.calls.append(query)
                try:
                    behavior = dict(server.script(query) or {})
                    delay = behavior.get("delay", 0.0)
                    if delay:
                        time.sleep(delay)
                    status = behavior.get("status", 200)
                    if status != 200:
                        payload = behavior.get("raw", b"simulated failure")
                        self.send_response(status)
                        self.send_header("Content-Type", "text/plain")
                        self.send_header("Content-Length", str(len(payload)))
                        self.end_headers()
                        self.wfile.write(payload)
                        return
                    if query.strip().upper().startswith("ASK"):
                        payload = sparql_ask_xml(behavior.get("ask", True))
                    elif "raw" in behavior:
                        payload = behavior["raw"]
                    else:
                        payload = sparql_xml(behavior.get("rows", 0))
                    self.send_response(200)
                    self.send_header("Content-Type", "application/sparql-results+xml")
                    self.send_header("Content-Length", str(len(payload)))
                    self.end_headers()
                    self.wfile.write(payload)
                except (BrokenPipeError, ConnectionResetError):
                    pass
                finally:
                    with server._lock:
                        server._inflight -= 1

            do_POST = _respond
            do_GET = _respond

            def log_message(self, *args):
                pass

        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        self.url = f"http://127.0.0.1:{self._httpd.server_address[1]}/sparql"

    def queries(self, exclude_ask: bool = True) -> list[str]:
        if exclude_ask:
            return [q for q in self.calls if not q.strip().upper().startswith("ASK")]
        return list(self.calls)

    def reset(self):
        self.calls.clear()
        self.max_inflight = 0
        self.script = lambda query: {}

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def mock_endpoint():
    server = MockSparqlServer()
    yield server
    server.close()


def write_endpoint_config(path, server: MockSparqlServer, **extra) -> None:
    doc = {"label": "mock", "query_url": server.url, "dialect": "geosparql"}
    doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
