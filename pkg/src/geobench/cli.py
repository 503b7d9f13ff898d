"""Command-line surface: generate, calibrate, run, report, verify.

Exit codes: 0 success, 1 user error (bad arguments, unknown suite, missing
bindings or files), 2 execution failure (endpoint errors, hook failures,
verification mismatches).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import calibrator, generator, harness, report, suites
from .geometry import Coord


class UsageError(Exception):
    pass


class ExecutionError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="geobench",
                     description="Benchmark workbench for geospatial RDF stores")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="produce the synthetic datasets as N-Triples")
    gen.add_argument("-n", type=int, required=True, help="grid dimension (even, >= 6)")
    gen.add_argument("-k", type=int, required=True, help="maximum tag exponent")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--cell", type=float, default=1.0)
    gen.add_argument("--origin", type=str, default="0,0", help="world offset as x,y")
    gen.add_argument("--crs", type=str, default=None, help="CRS URI to prefix WKT literals")
    gen.add_argument("-o", "--outdir", required=True)

    cal = sub.add_parser("calibrate", help="build the selectivity-calibrated workload manifest")
    cal.add_argument("--data", help="directory containing the generated datasets sidecar")
    cal.add_argument("--sidecar", help="explicit path to the datasets sidecar JSON")
    cal.add_argument("--targets", default=None,
                     help="comma-separated spatial selectivity targets")
    cal.add_argument("--dialect", choices=suites.DIALECTS, default="geosparql")
    cal.add_argument("-o", "--output", required=True, help="workload manifest path")

    run = sub.add_parser("run", help="execute a suite against a SPARQL endpoint")
    run.add_argument("--endpoint", required=True, help="endpoint config JSON")
    run.add_argument("--suite", choices=suites.SUITE_NAMES)
    run.add_argument("--workload", help="workload manifest from `calibrate`")
    run.add_argument("--bindings", help="placeholder bindings JSON for real-world suites")
    run.add_argument("--mode", choices=["warm", "cold"], default="warm")
    run.add_argument("--runs", type=int, default=3)
    run.add_argument("--warmup-runs", type=int, default=1)
    run.add_argument("--timeout", type=float, default=None,
                     help="per-query timeout in seconds")
    run.add_argument("--duration", type=float, default=3600.0,
                     help="macro scenario budget in seconds")
    run.add_argument("--sampler-seed", type=int, default=0)
    run.add_argument("--measure-load", action="store_true",
                     help="time the endpoint's load hook over the dataset files first")
    run.add_argument("--data", help="dataset directory (for --measure-load)")
    run.add_argument("-o", "--output", default=None, help="results CSV path")

    rep = sub.add_parser("report", help="summarize a results file")
    rep.add_argument("--results", required=True)
    rep.add_argument("--workload", help="workload manifest to join spec fields from")
    rep.add_argument("--group-by", choices=["query", "selectivity"], default="query")
    rep.add_argument("-o", "--outdir", required=True)

    ver = sub.add_parser("verify", help="cross-check results or a manifest against the geometry engine")
    ver.add_argument("--workload", required=True)
    ver.add_argument("--results", help="results CSV to check row counts of")
    ver.add_argument("--replay", action="store_true",
                     help="recount every instance from regenerated features")
    return parser


def _parse_origin(text: str) -> Coord:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --origin {text!r}; expected x,y") from exc
    return Coord(x, y)


def _cmd_generate(args) -> int:
    try:
        params = generator.GeneratorParams(
            n=args.n, k=args.k, seed=args.seed, cell=args.cell,
            origin=_parse_origin(args.origin), crs_uri=args.crs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    t0 = time.monotonic()
    sidecar = generator.write_workload(params, args.outdir)
    dt = time.monotonic() - t0
    for kind, info in sidecar["datasets"].items():
        print(f"{kind}: {info['cardinality']} features, {info['triples']} triples -> {info['file']}")
    print(f"total: {sidecar['total_triples']} triples in {dt:.1f}s -> {args.outdir}")
    return 0


def _find_sidecar(args) -> Path:
    if args.sidecar:
        return Path(args.sidecar)
    if not args.data:
        raise UsageError("calibrate needs --data or --sidecar")
    matches = sorted(Path(args.data).glob("datasets-*.json"))
    if len(matches) != 1:
        raise UsageError(
            f"expected exactly one datasets sidecar under {args.data}, found {len(matches)}")
    return matches[0]


def _load_params(path: Path) -> generator.GeneratorParams:
    try:
        with open(path, encoding="utf-8") as fh:
            sidecar = json.load(fh)
        return generator.params_from_sidecar(sidecar)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read sidecar {path}: {exc}") from exc


def _cmd_calibrate(args) -> int:
    params = _load_params(_find_sidecar(args))
    targets = calibrator.DEFAULT_TARGETS
    if args.targets:
        try:
            targets = tuple(float(t) for t in args.targets.split(","))
        except ValueError as exc:
            raise UsageError(f"bad --targets: {exc}") from exc
    sources = generator.views(params)
    instances = calibrator.default_workload(sources, params, targets, args.dialect)
    calibrator.write_manifest(args.output, instances, params)
    for inst in instances:
        extra = ""
        if inst.spatial_selectivity is not None:
            extra = f" spatial={inst.spatial_selectivity:.6f}"
        print(f"{inst.id}: expected={inst.expected_count}{extra}")
    print(f"{len(instances)} instances -> {args.output}")
    return 0


def _cmd_run(args) -> int:
    try:
        ep = harness.EndpointConfig.from_json(args.endpoint)
    except (OSError, json.JSONDecodeError, harness.ConfigError) as exc:
        raise UsageError(f"bad endpoint config: {exc}") from exc
    timeout = args.timeout if args.timeout is not None else harness.default_timeout()
    out_path = args.output or f"results-{time.strftime('%Y%m%d-%H%M%S')}.csv"
    records: list[report.ResultRecord] = []

    if args.measure_load:
        if not args.data:
            raise UsageError("--measure-load needs --data with the dataset files")
        files = sorted(Path(args.data).glob("*.nt"))
        if not files:
            raise UsageError(f"no .nt files under {args.data}")
        try:
            elapsed = harness.measure_load(ep, files)
        except (harness.ConfigError,) as exc:
            raise UsageError(str(exc)) from exc
        except harness.HookFailure as exc:
            raise ExecutionError(str(exc)) from exc
        total = sum(f.stat().st_size for f in files)
        print(f"load: {elapsed:.1f}s for {len(files)} files ({total / 1e6:.0f} MB)")

    if args.workload:
        suite_name = "synthetic-default"
        _, instances = calibrator.load_manifest(args.workload)
        policy = harness.RunPolicy(
            runs=args.runs,
            cache_mode=harness.CacheMode(args.mode),
            timeout=timeout,
            warmup_runs=args.warmup_runs,
        )
        try:
            measurements = harness.run_micro(ep, instances, policy)
        except harness.ConfigError as exc:
            raise UsageError(str(exc)) from exc
        except harness.HookFailure as exc:
            raise ExecutionError(str(exc)) from exc
        by_id = {i.id: i for i in instances}
        for m in measurements:
            inst = by_id.get(m.query_id)
            verify = harness.verify_results(m, inst) if inst else harness.VerifyStatus.NOT_APPLICABLE
            records.append(report.record_from_measurement(m, suite_name, ep.label, inst, verify))
    elif args.suite:
        if args.suite == "synthetic-default":
            raise UsageError("the synthetic suite runs from a calibrated manifest; pass --workload")
        manifest = suites.load_suite_manifest(args.suite)
        user_bindings = {}
        if args.bindings:
            try:
                user_bindings = suites.load_bindings(args.bindings)
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"bad bindings file: {exc}") from exc
        bindings = suites.default_bindings()
        bindings.update(user_bindings)
        if manifest.kind == "macro":
            domains = dict(manifest.sampler_domains)
            for name, value in user_bindings.items():
                # An explicit binding pins a placeholder to one value.
                domains[name] = [value]
            for name, value in bindings.items():
                domains.setdefault(name, [value])
            scenario = harness.MacroScenario(
                name=manifest.name,
                queries=[harness.QueryTemplate(e.id, e.dialect_variants[ep.dialect])
                         for e in manifest.entries if e.supported(ep.dialect)],
                sampler=harness.ParameterSampler(args.sampler_seed, domains),
                duration=args.duration,
                query_timeout=timeout,
            )
            for e in manifest.entries:
                if not e.supported(ep.dialect):
                    print(f"skip {e.id}: {e.unsupported.get(ep.dialect, 'unsupported')}")
            result = harness.run_macro(ep, scenario)
            records.extend(report.records_from_macro(result, manifest.name, ep.label))
            status = "incomplete" if result.incomplete else "ok"
            avg = f"{result.avg_iteration:.3f}s" if result.avg_iteration else report.TIMEOUT_MARKER
            print(f"{manifest.name}: {result.iterations} iterations, avg {avg} ({status})")
        else:
            try:
                instances = suites.bind_suite(manifest.entries, bindings, ep.dialect)
            except suites.MissingBinding as exc:
                raise UsageError(str(exc)) from exc
            for inst in instances:
                if inst.skip_reason:
                    print(f"skip {inst.id}: {inst.skip_reason}")
            policy = harness.RunPolicy(
                runs=args.runs,
                cache_mode=harness.CacheMode(args.mode),
                timeout=timeout,
                warmup_runs=args.warmup_runs,
            )
            try:
                measurements = harness.run_micro(ep, instances, policy)
            except harness.ConfigError as exc:
                raise UsageError(str(exc)) from exc
            except harness.HookFailure as exc:
                raise ExecutionError(str(exc)) from exc
            records.extend(report.record_from_measurement(m, manifest.name, ep.label)
                           for m in measurements)
    elif not args.measure_load:
        raise UsageError("run needs --workload, --suite, or --measure-load")

    if records:
        report.write_results(out_path, records)
        print(f"{len(records)} measurements -> {out_path}")
    return 0


def _cmd_report(args) -> int:
    try:
        records = report.load_results(args.results)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load results: {exc}") from exc
    instances = []
    if args.workload:
        try:
            _, instances = calibrator.load_manifest(args.workload)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load workload: {exc}") from exc
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = report.summarize(records)
    summary_path = outdir / "summary.csv"
    report.write_summary(summary_path, rows)
    plot_paths = report.write_plotdata(outdir / "plotdata", records, instances)
    print(f"summary: {summary_path}")
    for p in plot_paths:
        print(f"plotdata: {p}")
    if args.group_by == "selectivity" and not any(p.name == "selectivity.csv" for p in plot_paths):
        print("note: selectivity grouping needs --workload to recover spec fields")
    return 0


def _cmd_verify(args) -> int:
    try:
        params, instances = calibrator.load_manifest(args.workload)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load workload: {exc}") from exc
    failures = 0

    if args.results:
        try:
            records = report.load_results(args.results)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load results: {exc}") from exc
        by_id = {i.id: i for i in instances}
        checked = 0
        for r in records:
            inst = by_id.get(r.query_id)
            if inst is None or inst.expected_count is None or r.status != "ok":
                continue
            checked += 1
            if r.result_rows != inst.expected_count:
                failures += 1
                print(f"MISMATCH {r.query_id}: rows={r.result_rows} expected={inst.expected_count}")
        print(f"checked {checked} measurements, {failures} mismatches")
    else:
        if params is None:
            raise UsageError("manifest carries no generator params; cannot replay")
        sources = generator.views(params)
        for inst in instances:
            spec = inst.spec
            if isinstance(spec, calibrator.SelectionSpec) and inst.geom is not None:
                actual = calibrator.count_matches(
                    sources[spec.dataset], spec.function, inst.geom, stride=spec.thema)
            elif isinstance(spec, calibrator.JoinSpec):
                actual = calibrator.count_join(
                    sources[spec.left], sources[spec.right], spec.function,
                    stride_left=spec.thema, stride_right=spec.thema2)
            else:
                continue
            ok = actual == inst.expected_count
            if not ok:
                failures += 1
            print(f"{'ok' if ok else 'MISMATCH'} {inst.id}: recount={actual} expected={inst.expected_count}")
    return 0 if failures == 0 else 2


_COMMANDS = {
    "generate": _cmd_generate,
    "calibrate": _cmd_calibrate,
    "run": _cmd_run,
    "report": _cmd_report,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExecutionError as exc:
        print(f"execution failed: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
