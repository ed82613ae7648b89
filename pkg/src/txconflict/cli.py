"""Command-line entry point: fetch, analyze, report, sim, synth."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import kernels
from .conflict_graph import ConflictGraph, ConflictMode, build_conflict_graph
from .errors import TxConflictError
from .graph_metrics import DEFAULT_MC_STARTS
from .ingest import DEFAULT_CONCURRENCY, DEFAULT_TIMEOUT, FetchJob, FixtureSource, RpcClient, parse_tracers, run_fetch_job
from .pipeline import analyze_store, block_graphs, load_block
from .report import emit_report
from .rwsets import Method
from .schedule_sim import Workload, speedup_report
from .store import StoreLayout, archived_blocks, read_records, write_records
from . import synth

log = logging.getLogger("txconflict")


class _KVFormatter(logging.Formatter):
    def format(self, record):
        msg = record.getMessage().replace('"', "'")
        return f'ts={self.formatTime(record, "%Y-%m-%dT%H:%M:%S")} level={record.levelname.lower()} logger={record.name} msg="{msg}"'


def _setup_logging(verbose: int) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_KVFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING)


def _methods(value: str) -> list[Method]:
    return [Method.PRESTATE, Method.CALLTRACER] if value == "both" else [Method(value)]


def _modes(value: str) -> list[ConflictMode]:
    return [ConflictMode.RW, ConflictMode.ALL] if value == "both" else [ConflictMode(value)]


def cmd_fetch(args, parser) -> int:
    try:
        tracers = parse_tracers(args.tracers)
    except ValueError as exc:
        parser.error(str(exc))
    if args.fixtures:
        source = FixtureSource(args.fixtures)
    elif args.rpc_url:
        source = RpcClient(args.rpc_url, timeout=args.timeout)
    else:
        parser.error("no RPC endpoint: pass --rpc-url, set ETH_RPC_URL, or use --fixtures")
    to = args.to if args.to is not None else args.from_ + 1
    if to <= args.from_:
        parser.error("--to must be greater than --from")
    job = FetchJob(
        start=args.from_,
        end=to,
        tracers=tracers,
        out=Path(args.out),
        checkpoint_path=Path(args.checkpoint) if args.checkpoint else None,
        endpoint=args.rpc_url,
        concurrency=args.concurrency,
    )
    fetched = sum(1 for _ in run_fetch_job(job, source))
    log.info("fetched %d block(s) into %s", fetched, job.out)
    return 0


def cmd_analyze(args, parser) -> int:
    layout = StoreLayout(args.traces)
    blocks = archived_blocks(layout)
    if args.from_ is not None:
        blocks = {b: k for b, k in blocks.items() if b >= args.from_}
    if args.to is not None:
        blocks = {b: k for b, k in blocks.items() if b < args.to}
    if not blocks:
        log.error("no archived traces under %s", layout.traces_dir)
        return 1
    records, failures = analyze_store(
        layout,
        blocks,
        jobs=args.jobs,
        methods=_methods(args.method),
        modes=_modes(args.mode),
        seed=args.seed,
        mc_starts=args.mc_starts,
    )
    out = StoreLayout(args.out)
    write_records(out.metrics_path, records, append=False)
    errors = [{"block": r.block_number, "error": e} for r in records for e in r.errors]
    errors += [{"block": b, "error": e} for b, e in failures]
    if errors:
        err_path = out.metrics_path.parent / "errors.jsonl"
        err_path.write_text("".join(json.dumps(e, sort_keys=True) + "\n" for e in errors))
    log.info("wrote %d record(s) to %s (kernels: %s)", len(records), out.metrics_path, kernels.BACKEND)
    return 1 if failures and not records else 0


def cmd_report(args, parser) -> int:
    records = list(read_records(args.records))
    paths = emit_report(
        records,
        args.out_dir,
        bucket_width=args.bucket_width,
        groups=args.groups,
        band=args.band,
        graph=args.graph,
        hill_k=args.hill_k,
    )
    for p in paths:
        print(p)
    return 0


SIM_FIELDS = [
    "block_number",
    "tx_count",
    "sequential_time",
    "order_makespan",
    "coloring_makespan",
    "order_speedup",
    "coloring_speedup",
    "coloring_vs_order",
]


def _sim_rows(args):
    if args.edgelist:
        g = ConflictGraph.from_edgelist(Path(args.edgelist).read_text())
        yield {"block_number": "", "tx_count": g.num_nodes, **speedup_report(Workload.unit(g), workers=args.workers)}
        return
    layout = StoreLayout(args.traces)
    method, mode = Method(args.method), ConflictMode(args.mode)
    for number in archived_blocks(layout):
        block = load_block(layout, number)
        g = block_graphs(block, method, [mode])[f"{method.value}_{mode.value}"]
        if args.weights == "gas":
            if block.call_roots is None:
                raise TxConflictError(f"block {number}: gas weights need call traces")
            w = Workload.from_gas(g, [r.gas_used for r in block.call_roots])
        else:
            w = Workload.unit(g)
        yield {"block_number": number, "tx_count": block.tx_count, **speedup_report(w, workers=args.workers)}


def cmd_sim(args, parser) -> int:
    if not args.traces and not args.edgelist:
        parser.error("sim needs --traces or --edgelist")
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=SIM_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in _sim_rows(args):
            w.writerow({k: ("" if row[k] is None else row[k]) for k in SIM_FIELDS})
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_synth(args, parser) -> int:
    if args.n < 1:
        parser.error("--n must be >= 1")
    sets = None
    if args.kind == "star":
        g = synth.star(args.n)
    elif args.kind == "chain":
        g = synth.chain(args.n)
    elif args.kind == "gnp":
        if args.p is None or not 0.0 <= args.p <= 1.0:
            parser.error("--kind gnp needs --p in [0, 1]")
        g = synth.gnp(args.n, args.p, args.seed)
    else:
        hub = args.hub_degree if args.hub_degree is not None else args.n - 1
        if not 0 <= hub <= args.n - 1:
            parser.error(f"--hub-degree must be in [0, {args.n - 1}]")
        sets = synth.hotspot_sets(args.n, hub, args.seed)
        g = build_conflict_graph(sets, ConflictMode.RW)
    text = g.to_edgelist()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.sets_out:
        if sets is None:
            parser.error("--sets-out only applies to --kind hotspot")
        Path(args.sets_out).write_text(
            "".join(json.dumps(d, sort_keys=True) + "\n" for d in synth.sets_to_json(sets))
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="txconflict", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fetch", help="archive block traces from an archive node")
    f.add_argument("--rpc-url", default=os.environ.get("ETH_RPC_URL"))
    f.add_argument("--from", dest="from_", type=int, required=True)
    f.add_argument("--to", type=int, help="exclusive end block (default: --from + 1)")
    f.add_argument("--tracers", default="all")
    f.add_argument("--out", default=".")
    f.add_argument("--concurrency", type=int, default=DEFAULT_CONCURRENCY)
    f.add_argument("--checkpoint")
    f.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    f.add_argument("--fixtures", help="read traces from this store directory instead of a node")
    f.set_defaults(func=cmd_fetch)

    a = sub.add_parser("analyze", help="compute one metrics record per archived block")
    a.add_argument("--traces", required=True, help="store root holding traces/")
    a.add_argument("--method", choices=["prestate", "calltracer", "both"], default="both")
    a.add_argument("--mode", choices=["rw", "all", "both"], default="both")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--mc-starts", type=int, default=DEFAULT_MC_STARTS)
    a.add_argument("--out", default=".")
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--from", dest="from_", type=int)
    a.add_argument("--to", type=int)
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("report", help="tables and charts from metric records")
    r.add_argument("--records", required=True)
    r.add_argument("--out-dir", required=True)
    r.add_argument("--bucket-width", type=int, default=8)
    r.add_argument("--groups", type=int, default=4)
    r.add_argument("--band", type=float, default=5)
    r.add_argument("--graph", default="prestate_rw")
    r.add_argument("--hill-k", type=int, default=100)
    r.set_defaults(func=cmd_report)

    s = sub.add_parser("sim", help="order-DAG vs coloring makespan per block")
    s.add_argument("--traces")
    s.add_argument("--edgelist")
    s.add_argument("--weights", choices=["gas", "unit"], default="gas")
    s.add_argument("--method", choices=["prestate", "calltracer"], default="prestate")
    s.add_argument("--mode", choices=["rw", "all"], default="all")
    s.add_argument("--workers", type=int, help="bounded worker count (default: unbounded)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sim)

    y = sub.add_parser("synth", help="synthetic conflict graphs")
    y.add_argument("--kind", choices=["star", "gnp", "hotspot", "chain"], required=True)
    y.add_argument("--n", type=int, required=True)
    y.add_argument("--p", type=float)
    y.add_argument("--hub-degree", type=int)
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--out")
    y.add_argument("--sets-out")
    y.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        return args.func(args, sub)
    except (TxConflictError, OSError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
