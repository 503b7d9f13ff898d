"""Results persistence and summarization.

Raw measurements land in an append-friendly CSV (one row per query run); the
report step aggregates medians per query and cache mode, macro iteration
averages, and tidy per-figure plot data that any plotting tool can group by
selectivity target, thematic key, and cache mode. A timed-out query renders
as "-" in summaries. Summaries are deterministic and independent of row
order.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

from .calibrator import QueryInstance, SelectionSpec
from .harness import CacheMode, MacroResult, Measurement, Status, VerifyStatus

SCHEMA_VERSION = "geobench-results@1"

# Synthetic row marking one completed macro iteration (run_index = iteration).
ITERATION_MARKER = "__iteration__"

TIMEOUT_MARKER = "-"


@dataclass(frozen=True)
class ResultRecord:
    suite: str
    endpoint: str
    query_id: str
    cache_mode: str
    run_index: int
    status: str
    elapsed_secs: float
    result_rows: int
    error_detail: str = ""
    target_selectivity: float | None = None
    achieved_selectivity: float | None = None
    expected_count: int | None = None
    verify: str = VerifyStatus.NOT_APPLICABLE.value
    schema_version: str = SCHEMA_VERSION


_FIELDS = [f.name for f in fields(ResultRecord)]


def record_from_measurement(m: Measurement, suite: str, endpoint: str,
                            instance: QueryInstance | None = None,
                            verify: VerifyStatus = VerifyStatus.NOT_APPLICABLE,
                            ) -> ResultRecord:
    target = achieved = expected = None
    if instance is not None:
        achieved = instance.achieved_selectivity
        expected = instance.expected_count
        if isinstance(instance.spec, SelectionSpec):
            target = instance.target_selectivity
    return ResultRecord(
        suite=suite,
        endpoint=endpoint,
        query_id=m.query_id,
        cache_mode=m.cache_mode.value,
        run_index=m.run_index,
        status=m.status.value,
        elapsed_secs=m.elapsed,
        result_rows=m.result_rows,
        error_detail=m.error_detail or "",
        target_selectivity=target,
        achieved_selectivity=achieved,
        expected_count=expected,
        verify=verify.value,
    )


def records_from_macro(result: MacroResult, suite: str, endpoint: str) -> list[ResultRecord]:
    out = [record_from_measurement(m, suite, endpoint) for m in result.measurements]
    if result.iterations:
        # One marker row per scenario carrying the aggregate; per-iteration
        # wall times are recoverable from the per-query rows.
        out.append(ResultRecord(
            suite=suite, endpoint=endpoint, query_id=ITERATION_MARKER,
            cache_mode=CacheMode.WARM.value, run_index=result.iterations,
            status="ok" if not result.incomplete else "timeout",
            elapsed_secs=result.avg_iteration or 0.0,
            result_rows=result.iterations,
        ))
    elif result.incomplete:
        out.append(ResultRecord(
            suite=suite, endpoint=endpoint, query_id=ITERATION_MARKER,
            cache_mode=CacheMode.WARM.value, run_index=0,
            status="timeout", elapsed_secs=0.0, result_rows=0,
        ))
    return out


def write_results(path: str | Path, records: Iterable[ResultRecord],
                  append: bool = False) -> None:
    path = Path(path)
    mode = "a" if append and path.exists() else "w"
    with open(path, mode, encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_FIELDS)
        if mode == "w":
            writer.writeheader()
        for r in records:
            row = {k: getattr(r, k) for k in _FIELDS}
            for key in ("target_selectivity", "achieved_selectivity", "expected_count"):
                if row[key] is None:
                    row[key] = ""
            writer.writerow(row)


def load_results(path: str | Path) -> list[ResultRecord]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"results file missing columns: {sorted(missing)}")
        for row in reader:
            if row["schema_version"] != SCHEMA_VERSION:
                raise ValueError(f"unsupported results schema {row['schema_version']!r}")
            out.append(ResultRecord(
                suite=row["suite"],
                endpoint=row["endpoint"],
                query_id=row["query_id"],
                cache_mode=row["cache_mode"],
                run_index=int(row["run_index"]),
                status=row["status"],
                elapsed_secs=float(row["elapsed_secs"]),
                result_rows=int(row["result_rows"]),
                error_detail=row["error_detail"],
                target_selectivity=float(row["target_selectivity"]) if row["target_selectivity"] else None,
                achieved_selectivity=float(row["achieved_selectivity"]) if row["achieved_selectivity"] else None,
                expected_count=int(row["expected_count"]) if row["expected_count"] else None,
                verify=row["verify"],
            ))
    return out


@dataclass(frozen=True)
class SummaryRow:
    endpoint: str
    suite: str
    query_id: str
    cache_mode: str
    runs: int
    median_secs: float | None
    display: str
    result_rows: int | None
    verify: str


def _group_key(r: ResultRecord):
    return (r.endpoint, r.suite, r.query_id, r.cache_mode)


def summarize(records: Sequence[ResultRecord]) -> list[SummaryRow]:
    """Median per (endpoint, suite, query, cache mode); macro marker rows pass
    through as iteration averages. Any timeout renders as the "-" marker."""
    groups: dict[tuple, list[ResultRecord]] = {}
    for r in records:
        groups.setdefault(_group_key(r), []).append(r)
    out = []
    for key in sorted(groups):
        endpoint, suite, query_id, cache_mode = key
        rows = groups[key]
        if query_id == ITERATION_MARKER:
            marker = rows[-1]
            ok = all(r.status == Status.OK.value for r in rows)
            out.append(SummaryRow(
                endpoint, suite, query_id, cache_mode,
                runs=sum(r.result_rows for r in rows),
                median_secs=marker.elapsed_secs if ok else None,
                display=f"{marker.elapsed_secs:.3f}" if ok else TIMEOUT_MARKER,
                result_rows=None,
                verify=VerifyStatus.NOT_APPLICABLE.value,
            ))
            continue
        ok_rows = [r for r in rows if r.status == Status.OK.value]
        timed_out = any(r.status == Status.TIMEOUT.value for r in rows)
        errored = any(r.status == Status.ERROR.value for r in rows)
        if timed_out or not ok_rows:
            median = None
            display = TIMEOUT_MARKER if timed_out else "error"
        else:
            median = statistics.median(sorted(r.elapsed_secs for r in ok_rows))
            display = f"{median:.3f}"
        if errored and not timed_out and ok_rows:
            display = "error"
            median = None
        verify = VerifyStatus.NOT_APPLICABLE.value
        verdicts = {r.verify for r in ok_rows}
        if VerifyStatus.MISMATCH.value in verdicts:
            verify = VerifyStatus.MISMATCH.value
        elif VerifyStatus.MATCH.value in verdicts:
            verify = VerifyStatus.MATCH.value
        out.append(SummaryRow(
            endpoint, suite, query_id, cache_mode,
            runs=len(rows),
            median_secs=median,
            display=display,
            result_rows=ok_rows[0].result_rows if ok_rows else None,
            verify=verify,
        ))
    return out


def write_summary(path: str | Path, rows: Sequence[SummaryRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["endpoint", "suite", "query_id", "cache_mode", "runs",
                         "median_secs", "result_rows", "verify"])
        for r in rows:
            writer.writerow([r.endpoint, r.suite, r.query_id, r.cache_mode,
                             r.runs, r.display,
                             "" if r.result_rows is None else r.result_rows,
                             r.verify])


def write_plotdata(outdir: str | Path, records: Sequence[ResultRecord],
                   instances: Sequence[QueryInstance] = ()) -> list[Path]:
    """Tidy per-figure CSVs: one observation per row.

    ``selectivity.csv`` (needs the workload manifest for spec fields) carries
    one series per endpoint and cache mode over the selectivity targets;
    ``queries.csv`` carries per-query medians; ``macro.csv`` the iteration
    averages.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    summary = summarize(records)
    by_instance = {i.id: i for i in instances}

    sel_rows = []
    for row in summary:
        inst = by_instance.get(row.query_id)
        if inst is None or not isinstance(inst.spec, SelectionSpec):
            continue
        sel_rows.append([
            row.endpoint, row.cache_mode, inst.spec.dataset.value,
            inst.spec.function.value, inst.spec.thema,
            inst.target_selectivity, inst.spatial_selectivity,
            row.display,
        ])
    if sel_rows:
        path = outdir / "selectivity.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["endpoint", "cache_mode", "dataset", "function",
                             "thema", "target_selectivity", "spatial_selectivity",
                             "median_secs"])
            writer.writerows(sel_rows)
        written.append(path)

    query_rows = [r for r in summary if r.query_id != ITERATION_MARKER]
    if query_rows:
        path = outdir / "queries.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["endpoint", "suite", "query_id", "cache_mode",
                             "median_secs", "result_rows"])
            for r in query_rows:
                writer.writerow([r.endpoint, r.suite, r.query_id, r.cache_mode,
                                 r.display, "" if r.result_rows is None else r.result_rows])
        written.append(path)

    macro_rows = [r for r in summary if r.query_id == ITERATION_MARKER]
    if macro_rows:
        path = outdir / "macro.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["endpoint", "suite", "iterations", "avg_iteration_secs"])
            for r in macro_rows:
                writer.writerow([r.endpoint, r.suite, r.runs, r.display])
        written.append(path)
    return written
