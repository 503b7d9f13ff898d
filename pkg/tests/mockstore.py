"""In-process GeoSPARQL-capable endpoint backed by shapely.

Loads the generated N-Triples files and evaluates the synthetic selection and
join queries with GEOS (via shapely 2), i.e. with a geometry engine entirely
independent of the package's own predicate code. Serves SPARQL XML results
over HTTP so the full wire path (WKT literals, query text, row streaming) is
exercised end to end.
"""

from __future__ import annotations

import re
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import shapely

_TRIPLE = re.compile(
    r'^<([^>]*)> <([^>]*)> (?:<([^>]*)>|"([^"]*)"(?:\^\^<[^>]*>)?) \.$')

_NS_RE = re.compile(r"PREFIX (ns\d?): <([^>]*)>")
_KEY_RE = re.compile(r'(ns\d?):hasTag/\1:hasKey "([^"]*)"')
_FUNC_RE = re.compile(r"FILTER\((?:geof|strdf):(\w+)\(")
_GEOM_RE = re.compile(r'"((?:<[^>]*> )?(?:POINT|LINESTRING|POLYGON)[^"]*)"\^\^')

_PREDICATES = {
    "sfequals": lambda a, b: shapely.equals(a, b),
    "sfintersects": lambda a, b: shapely.intersects(a, b),
    "sfwithin": lambda a, b: shapely.within(a, b),
    "sfcontains": lambda a, b: shapely.contains(a, b),
    "sftouches": lambda a, b: shapely.touches(a, b),
    "sfoverlaps": lambda a, b: shapely.overlaps(a, b),
    "sfcrosses": lambda a, b: shapely.crosses(a, b),
    "sfdisjoint": lambda a, b: shapely.disjoint(a, b),
}


class _Dataset:
    def __init__(self):
        self.feature_geom_node: dict[str, str] = {}
        self.geom_wkt: dict[str, str] = {}
        self.feature_tags: dict[str, set[str]] = {}
        self.tag_key: dict[str, str] = {}
        self.tag_owner: dict[str, list[str]] = {}
        self.uris: list[str] = []
        self.geoms = None
        self.keysets: list[set[str]] = []

    def finalize(self):
        self.uris = sorted(self.feature_geom_node)
        wkts = []
        for uri in self.uris:
            raw = self.geom_wkt[self.feature_geom_node[uri]]
            if raw.startswith("<"):
                raw = raw.split("> ", 1)[1]
            wkts.append(raw)
        self.geoms = shapely.from_wkt(np.array(wkts, dtype=object))
        self.keysets = []
        for uri in self.uris:
            keys = set()
            for tag in self.feature_tags.get(uri, ()):
                key = self.tag_key.get(tag)
                if key is not None:
                    keys.add(key)
            self.keysets.append(keys)


class ShapelyStore:
    """Parses <kind>-n-k.nt files; answers the two synthetic query shapes."""

    def __init__(self, nt_files):
        self.datasets: dict[str, _Dataset] = {}
        for path in nt_files:
            self._load(Path(path))
        for ds in self.datasets.values():
            ds.finalize()

    def _dataset_for(self, uri: str) -> _Dataset:
        ns = uri.rsplit("/", 2)[0] + "/"
        return self.datasets.setdefault(ns, _Dataset())

    def _load(self, path: Path):
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                m = _TRIPLE.match(line.rstrip("\n"))
                if not m:
                    continue
                subj, pred, obj_uri, obj_lit = m.groups()
                prop = pred.rsplit("/", 1)[-1]
                if prop == "hasGeometry":
                    self._dataset_for(subj).feature_geom_node[subj] = obj_uri
                elif prop == "asWKT":
                    ns = subj.split("geometry/")[0]
                    self.datasets.setdefault(ns, _Dataset()).geom_wkt[subj] = obj_lit
                elif prop == "hasTag":
                    self._dataset_for(subj).feature_tags.setdefault(subj, set()).add(obj_uri)
                elif prop == "hasKey":
                    ns = subj.split("tag/")[0]
                    self.datasets.setdefault(ns, _Dataset()).tag_key[subj] = obj_lit

    # -- query evaluation --------------------------------------------------

    def answer(self, query: str) -> int:
        namespaces = dict(_NS_RE.findall(query))
        func_m = _FUNC_RE.search(query)
        if not func_m:
            raise ValueError("no filter function in query")
        fname = func_m.group(1).lower()
        if not fname.startswith("sf"):
            fname = "sf" + fname
        predicate = _PREDICATES[fname]
        keys = dict(_KEY_RE.findall(query))

        if "ns1" in namespaces:
            left = self.datasets[namespaces["ns1"]]
            right = self.datasets[namespaces["ns2"]]
            lmask = np.array([keys["ns1"] in ks for ks in left.keysets])
            rmask = np.array([keys["ns2"] in ks for ks in right.keysets])
            lg = left.geoms[lmask]
            rg = right.geoms[rmask]
            # Self-pairs in a self-join need no special casing: the only
            # generated self-join predicate is touches, false on identical
            # geometries.
            count = 0
            for g in lg:
                count += int(predicate(g, rg).sum())
            return count

        geom_m = _GEOM_RE.search(query)
        if not geom_m:
            raise ValueError("no constant geometry in query")
        raw = geom_m.group(1)
        if raw.startswith("<"):
            raw = raw.split("> ", 1)[1]
        probe = shapely.from_wkt(raw)
        ds = self.datasets[namespaces["ns"]]
        tmask = np.array([keys["ns"] in ks for ks in ds.keysets])
        hits = predicate(ds.geoms, probe)
        return int((hits & tmask).sum())


class ShapelyStoreServer:
    """HTTP front end exposing a ShapelyStore as a SPARQL endpoint."""

    def __init__(self, store: ShapelyStore):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", "0"))
                body = self.rfile.read(length).decode("utf-8")
                query = urllib.parse.parse_qs(body).get("query", [""])[0]
                head = (b'<?xml version="1.0"?>\n'
                        b'<sparql xmlns="http://www.w3.org/2005/sparql-results#">\n'
                        b'<head><variable name="s"/></head>\n')
                if query.strip().upper().startswith("ASK"):
                    payload = head + b"<boolean>true</boolean>\n</sparql>\n"
                else:
                    try:
                        rows = store.answer(query)
                    except Exception as exc:  # report as HTTP 400 for debugging
                        msg = str(exc).encode()
                        self.send_response(400)
                        self.send_header("Content-Length", str(len(msg)))
                        self.end_headers()
                        self.wfile.write(msg)
                        return
                    body_xml = b"<results>\n" + b"".join(
                        b'<result><binding name="s"><uri>urn:r%d</uri></binding></result>\n' % i
                        for i in range(rows)) + b"</results>\n</sparql>\n"
                    payload = head + body_xml
                self.send_response(200)
                self.send_header("Content-Type", "application/sparql-results+xml")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        self.url = f"http://127.0.0.1:{self._httpd.server_address[1]}/sparql"

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()
