"""SPARQL endpoint driver with cold/warm cache protocol and strict timing.

Queries are submitted over the SPARQL 1.1 protocol (HTTP POST, form-encoded)
and their results are streamed and fully iterated; the clock stops only after
the last result row has been consumed, so reported times include result
transfer. Exactly one request is in flight per endpoint at any time. A
watchdog enforces the per-query timeout by closing the in-flight connection;
a run never blocks longer than the timeout plus one 100 ms polling interval.

Cold-cache runs invoke an external hook (restart the store, drop OS caches)
before every timed execution and wait for the endpoint to answer a trivial
ASK query again. Warm runs issue untimed warm-up executions first.
"""

from __future__ import annotations

import json
import os
import re
import shlex
import statistics
import subprocess
import threading
import time
import urllib.parse
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from http.client import HTTPConnection, HTTPSConnection
from pathlib import Path
from typing import Sequence

from .calibrator import QueryInstance

POLL_INTERVAL = 0.1
READY_TIMEOUT = 60.0
ASK_PROBE = "ASK { }"

_ACCEPT = ("application/sparql-results+xml, "
           "application/sparql-results+json;q=0.9, text/csv;q=0.5")

_SPARQL_XML_NS = "{http://www.w3.org/2005/sparql-results#}"


class HookFailure(RuntimeError):
    """An external hook exited nonzero or the endpoint never came back."""


class ConfigError(ValueError):
    """Endpoint configuration is missing something a run needs."""


def default_timeout() -> float:
    """Per-query time limit; GEOBENCH_TIMEOUT_SECS overrides the 3600 s default."""
    return float(os.environ.get("GEOBENCH_TIMEOUT_SECS", "3600"))


class CacheMode(Enum):
    COLD = "cold"
    WARM = "warm"


class Status(Enum):
    OK = "ok"
    TIMEOUT = "timeout"
    ERROR = "error"


class VerifyStatus(Enum):
    MATCH = "match"
    MISMATCH = "mismatch"
    NOT_APPLICABLE = "n/a"


@dataclass(frozen=True)
class EndpointConfig:
    query_url: str
    label: str = "endpoint"
    update_url: str | None = None
    dialect: str = "geosparql"
    request_timeout: float = 60.0
    cold_hook: tuple[str, ...] | None = None
    load_hook: tuple[str, ...] | None = None
    named_graphs: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_json(cls, path: str | Path) -> "EndpointConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        def hook(value):
            if value is None:
                return None
            if isinstance(value, str):
                return tuple(shlex.split(value))
            return tuple(value)
        try:
            return cls(
                query_url=raw["query_url"],
                label=raw.get("label", "endpoint"),
                update_url=raw.get("update_url"),
                dialect=raw.get("dialect", "geosparql"),
                request_timeout=float(raw.get("request_timeout", 60.0)),
                cold_hook=hook(raw.get("cold_hook")),
                load_hook=hook(raw.get("load_hook")),
                named_graphs=dict(raw.get("named_graphs", {})),
            )
        except KeyError as exc:
            raise ConfigError(f"endpoint config missing {exc}") from exc

    def __post_init__(self):
        parts = urllib.parse.urlsplit(self.query_url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ConfigError(f"bad query_url: {self.query_url!r}")


@dataclass(frozen=True)
class RunPolicy:
    runs: int = 3
    cache_mode: CacheMode = CacheMode.WARM
    timeout: float = field(default_factory=default_timeout)
    warmup_runs: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.cache_mode is CacheMode.WARM and self.warmup_runs < 1:
            raise ValueError("warm mode needs at least one warm-up run")


@dataclass(frozen=True)
class Measurement:
    query_id: str
    run_index: int
    cache_mode: CacheMode
    elapsed: float
    result_rows: int
    status: Status
    error_detail: str | None = None


@dataclass(frozen=True)
class QueryTemplate:
    id: str
    text: str


_PLACEHOLDER_RE = re.compile(r"\{([a-z_][a-z0-9_]*)\}")


def placeholders_in(text: str) -> set[str]:
    return set(_PLACEHOLDER_RE.findall(text))


def render_template(text: str, bindings: dict[str, str]) -> str:
    return _PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(1)]), text)


class ParameterSampler:
    """Seeded draw of placeholder values from declared lists or numeric ranges."""

    def __init__(self, seed: int, domains: dict):
        import random
        self.domains = dict(domains)
        self._rng = random.Random(f"sampler|{seed}")

    def sample(self) -> dict[str, str]:
        out = {}
        for name in sorted(self.domains):
            domain = self.domains[name]
            if isinstance(domain, dict):
                out[name] = str(self._rng.uniform(float(domain["low"]), float(domain["high"])))
            else:
                out[name] = str(self._rng.choice(list(domain)))
        return out


@dataclass
class MacroScenario:
    name: str
    queries: list[QueryTemplate]
    sampler: ParameterSampler
    duration: float = 3600.0
    query_timeout: float = field(default_factory=default_timeout)

    def __post_init__(self):
        declared = set(self.sampler.domains)
        for q in self.queries:
            missing = placeholders_in(q.text) - declared
            if missing:
                raise ValueError(f"{q.id}: sampler does not cover {sorted(missing)}")


@dataclass(frozen=True)
class MacroResult:
    scenario: str
    iterations: int
    avg_iteration: float | None
    per_query_avgs: dict[str, float]
    incomplete: bool
    measurements: tuple[Measurement, ...]


# --------------------------------------------------------------------------
# HTTP exchange
# --------------------------------------------------------------------------

class _Exchange:
    """One SPARQL-protocol request whose connection can be torn down midway."""

    def __init__(self, url: str, sparql: str, connect_timeout: float):
        self.url = url
        self.sparql = sparql
        self.connect_timeout = connect_timeout
        self.conn: HTTPConnection | None = None
        self.rows: int | None = None
        self.elapsed: float | None = None
        self.error: str | None = None

    def run(self):
        parts = urllib.parse.urlsplit(self.url)
        cls = HTTPSConnection if parts.scheme == "https" else HTTPConnection
        path = parts.path or "/"
        if parts.query:
            path += "?" + parts.query
        body = urllib.parse.urlencode({"query": self.sparql})
        headers = {
            "Content-Type": "application/x-www-form-urlencoded",
            "Accept": _ACCEPT,
        }
        start = time.monotonic()
        try:
            conn = cls(parts.hostname, parts.port, timeout=self.connect_timeout)
            self.conn = conn
            conn.request("POST", path, body=body, headers=headers)
            resp = conn.getresponse()
            if resp.status != 200:
                detail = resp.read(2048).decode("utf-8", "replace").strip()
                self.error = f"HTTP {resp.status}: {detail[:200]}"
                return
            ctype = resp.getheader("Content-Type", "") or ""
            self.rows = _count_rows(resp, ctype)
            self.elapsed = time.monotonic() - start
        except Exception as exc:  # noqa: BLE001 - reported as a Measurement
            self.error = f"{type(exc).__name__}: {exc}"
        finally:
            if self.conn is not None:
                try:
                    self.conn.close()
                except OSError:
                    pass

    def abort(self):
        conn = self.conn
        if conn is not None:
            try:
                conn.close()
            except OSError:
                pass


def _count_rows(resp, ctype: str) -> int:
    """Fully iterate a SPARQL result stream, counting rows without storing them."""
    if "xml" in ctype:
        rows = 0
        boolean: bool | None = None
        for _, elem in ET.iterparse(resp, events=("end",)):
            if elem.tag == f"{_SPARQL_XML_NS}result":
                rows += 1
                elem.clear()
            elif elem.tag == f"{_SPARQL_XML_NS}boolean":
                boolean = (elem.text or "").strip().lower() == "true"
        if boolean is not None:
            return 1 if boolean else 0
        return rows
    if "json" in ctype:
        doc = json.load(resp)
        if "boolean" in doc:
            return 1 if doc["boolean"] else 0
        return len(doc.get("results", {}).get("bindings", []))
    if "csv" in ctype or "tab-separated" in ctype:
        text = resp.read().decode("utf-8", "replace")
        lines = [ln for ln in text.splitlines() if ln.strip()]
        return max(len(lines) - 1, 0)
    raise ValueError(f"unsupported result content type: {ctype!r}")


def execute_query(ep: EndpointConfig, sparql: str, timeout: float, *,
                  query_id: str = "adhoc", run_index: int = 0,
                  cache_mode: CacheMode = CacheMode.WARM) -> Measurement:
    """Submit one query and time the complete iteration over its results.

    Timeouts are enforced by aborting the in-flight request; a timed-out or
    failed query is reported in the Measurement, never raised.
    """
    exchange = _Exchange(ep.query_url, sparql, ep.request_timeout)
    worker = threading.Thread(target=exchange.run, daemon=True)
    start = time.monotonic()
    deadline = start + timeout
    worker.start()
    while worker.is_alive():
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            exchange.abort()
            elapsed = time.monotonic() - start
            return Measurement(query_id, run_index, cache_mode, elapsed, 0,
                               Status.TIMEOUT, f"aborted after {timeout} s")
        worker.join(min(POLL_INTERVAL, remaining))
    if exchange.error is not None:
        return Measurement(query_id, run_index, cache_mode,
                           time.monotonic() - start, 0, Status.ERROR, exchange.error)
    return Measurement(query_id, run_index, cache_mode, exchange.elapsed,
                       exchange.rows, Status.OK)


# --------------------------------------------------------------------------
# Suites
# --------------------------------------------------------------------------

def run_hook(argv: Sequence[str], context: str) -> None:
    try:
        proc = subprocess.run(list(argv), capture_output=True, text=True)
    except OSError as exc:
        raise HookFailure(f"{context} hook failed to start: {exc}") from exc
    if proc.returncode != 0:
        tail = (proc.stderr or proc.stdout or "").strip()[-500:]
        raise HookFailure(f"{context} hook exited {proc.returncode}: {tail}")


def wait_ready(ep: EndpointConfig, limit: float = READY_TIMEOUT) -> None:
    deadline = time.monotonic() + limit
    while time.monotonic() < deadline:
        probe = execute_query(ep, ASK_PROBE, min(5.0, limit), query_id="__ready__")
        if probe.status is Status.OK:
            return
        time.sleep(0.5)
    raise HookFailure(f"endpoint {ep.label} not ready within {limit} s")


def run_micro(ep: EndpointConfig, instances: Sequence[QueryInstance],
              policy: RunPolicy) -> list[Measurement]:
    """Execute a query suite sequentially under the given cache policy.

    Warm: ``warmup_runs`` untimed executions, then ``runs`` timed ones with no
    cache clearing. Cold: the cold hook runs before every timed execution.
    After a query's first timeout or error its remaining runs are skipped; the
    suite continues with the next query.
    """
    if policy.cache_mode is CacheMode.COLD and not ep.cold_hook:
        raise ConfigError("cold runs need a cold_hook in the endpoint config")
    out: list[Measurement] = []
    for inst in instances:
        if inst.skip_reason:
            continue
        if policy.cache_mode is CacheMode.WARM:
            aborted = False
            for w in range(policy.warmup_runs):
                warm = execute_query(ep, inst.sparql, policy.timeout,
                                     query_id=inst.id, run_index=-(w + 1),
                                     cache_mode=policy.cache_mode)
                if warm.status is not Status.OK:
                    out.append(Measurement(inst.id, 0, policy.cache_mode,
                                           warm.elapsed, 0, warm.status,
                                           warm.error_detail))
                    aborted = True
                    break
            if aborted:
                continue
            for r in range(policy.runs):
                m = execute_query(ep, inst.sparql, policy.timeout,
                                  query_id=inst.id, run_index=r,
                                  cache_mode=policy.cache_mode)
                out.append(m)
                if m.status is not Status.OK:
                    break
        else:
            for r in range(policy.runs):
                run_hook(ep.cold_hook, "cold")
                wait_ready(ep)
                m = execute_query(ep, inst.sparql, policy.timeout,
                                  query_id=inst.id, run_index=r,
                                  cache_mode=policy.cache_mode)
                out.append(m)
                if m.status is not Status.OK:
                    break
    return out


def run_macro(ep: EndpointConfig, scenario: MacroScenario) -> MacroResult:
    """Loop the scenario with fresh sampled parameters until the budget ends.

    The in-progress iteration is allowed to finish. Any query exceeding its
    timeout (or erroring) marks the scenario incomplete and stops the loop;
    averages cover completed iterations only.
    """
    measurements: list[Measurement] = []
    per_query_total: dict[str, float] = {q.id: 0.0 for q in scenario.queries}
    iter_total = 0.0
    iterations = 0
    incomplete = False
    t0 = time.monotonic()
    while time.monotonic() - t0 < scenario.duration:
        bindings = scenario.sampler.sample()
        iter_start = time.monotonic()
        ok = True
        for q in scenario.queries:
            m = execute_query(ep, render_template(q.text, bindings),
                              scenario.query_timeout, query_id=q.id,
                              run_index=iterations, cache_mode=CacheMode.WARM)
            measurements.append(m)
            if m.status is not Status.OK:
                ok = False
                break
        if not ok:
            incomplete = True
            break
        iterations += 1
        iter_total += time.monotonic() - iter_start
    per_query_counts: dict[str, int] = {q.id: 0 for q in scenario.queries}
    for m in measurements:
        if m.status is Status.OK and m.query_id in per_query_total:
            per_query_total[m.query_id] += m.elapsed
            per_query_counts[m.query_id] += 1
    per_query_avgs = {
        qid: per_query_total[qid] / per_query_counts[qid]
        for qid in per_query_total if per_query_counts[qid]
    }
    return MacroResult(
        scenario=scenario.name,
        iterations=iterations,
        avg_iteration=(iter_total / iterations) if iterations else None,
        per_query_avgs=per_query_avgs,
        incomplete=incomplete,
        measurements=tuple(measurements),
    )


def measure_load(ep: EndpointConfig, dataset_files: Sequence[str | Path]) -> float:
    """Wall time of the store-specific bulk load hook over the dataset files."""
    if not ep.load_hook:
        raise ConfigError("load measurement needs a load_hook in the endpoint config")
    argv = list(ep.load_hook) + [str(f) for f in dataset_files]
    start = time.monotonic()
    run_hook(argv, "load")
    return time.monotonic() - start


def verify_results(m: Measurement, instance: QueryInstance) -> VerifyStatus:
    """Cross-check a measurement's row count against the instance's oracle count."""
    if instance.expected_count is None or m.status is not Status.OK:
        return VerifyStatus.NOT_APPLICABLE
    return (VerifyStatus.MATCH if m.result_rows == instance.expected_count
            else VerifyStatus.MISMATCH)


def median_elapsed(measurements: Sequence[Measurement]) -> float:
    """Median over Ok runs; even counts average the two central values."""
    values = [m.elapsed for m in measurements if m.status is Status.OK]
    if not values:
        raise ValueError("no successful runs to take a median of")
    return statistics.median(values)
