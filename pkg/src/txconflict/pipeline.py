"""Per-block analysis: traces in, one BlockMetricsRecord out."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Sequence

from .call_analysis import block_call_summary
from .conflict_graph import ConflictGraph, ConflictMode, build_conflict_graph
from .errors import TxConflictError
from .graph_metrics import DEFAULT_CLIQUE_BUDGET, DEFAULT_MC_STARTS, compute_metrics
from .rwsets import Method, block_access_sets, cause_totals, project_to_address, ww_attribution
from .store import BlockMetricsRecord, StoreLayout, load_raw
from .trace_model import BlockTrace, assemble_block

log = logging.getLogger(__name__)


def graph_key(method: Method, mode: ConflictMode) -> str:
    return f"{method.value}_{mode.value}"


def block_graphs(block: BlockTrace, method: Method, modes: Sequence[ConflictMode]) -> dict[str, ConflictGraph]:
    """Conflict graphs of a block, built over address-level sets."""
    sets = [project_to_address(s) for s in block_access_sets(block, method)]
    return {graph_key(method, m): build_conflict_graph(sets, m) for m in modes}


def analyze_block(
    block: BlockTrace,
    methods: Sequence[Method] = (Method.PRESTATE, Method.CALLTRACER),
    modes: Sequence[ConflictMode] = (ConflictMode.RW, ConflictMode.ALL),
    seed: int = 0,
    mc_starts: int = DEFAULT_MC_STARTS,
    clique_budget: int = DEFAULT_CLIQUE_BUDGET,
) -> BlockMetricsRecord:
    rec = BlockMetricsRecord(block_number=block.block_number, tx_count=block.tx_count)
    if block.call_roots is not None:
        summary = block_call_summary(block)
        rec.value_transfer_ratio = summary.value_transfer_ratio
        rec.tree_means = summary.mean_tree.to_dict() if summary.mean_tree else None
    for method in methods:
        try:
            sets = block_access_sets(block, method)
        except TxConflictError as exc:
            rec.errors.append(f"{method.value}: {exc}")
            continue
        if method is Method.PRESTATE:
            attribution = ww_attribution(sets)
            rec.ww_cause_counts = cause_totals(attribution)
            sources: dict[str, dict[str, int]] = {}
            for (addr, cause), n in sorted(attribution.items()):
                sources.setdefault(addr, {})[cause.value] = n
            rec.ww_sources = sources
        projected = [project_to_address(s) for s in sets]
        for mode in modes:
            g = build_conflict_graph(projected, mode)
            rec.graphs[graph_key(method, mode)] = compute_metrics(
                g, seed=seed, mc_starts=mc_starts, clique_budget=clique_budget
            ).to_dict()
    return rec


def load_block(layout: StoreLayout, block_number: int, kinds: Iterable[str] | None = None) -> BlockTrace:
    kinds = set(kinds) if kinds is not None else {"call", "prestate", "prestate_diff"}
    raws = {k: load_raw(layout, block_number, k) for k in kinds}
    return assemble_block(block_number, **{k: v for k, v in raws.items() if v is not None})


def _analyze_one(args):
    root, number, kinds, kw = args
    try:
        block = load_block(StoreLayout(root), number, kinds)
    except TxConflictError as exc:
        return number, None, f"{type(exc).__name__}: {exc}"
    return number, analyze_block(block, **kw), None


def analyze_store(
    layout: StoreLayout,
    blocks: dict[int, set[str]],
    jobs: int = 1,
    **kw,
) -> tuple[list[BlockMetricsRecord], list[tuple[int, str]]]:
    """Analyze archived blocks; returns records in block order and parse failures."""
    tasks = [(str(layout.root), b, sorted(k), kw) for b, k in sorted(blocks.items())]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_analyze_one, tasks))
    else:
        results = [_analyze_one(t) for t in tasks]
    records, failures = [], []
    for number, rec, err in results:
        if rec is None:
            log.error("block %d: %s", number, err)
            failures.append((number, err))
        else:
            for e in rec.errors:
                log.warning("block %d: %s", number, e)
            records.append(rec)
    return records, failures
