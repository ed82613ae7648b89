"""Makespan of block-order DAG scheduling versus color-round scheduling.

Both models assume unbounded workers by default. In the order model every
conflict edge points from the earlier transaction to the later one and the
makespan is the critical path. In the coloring model the color classes run
as rounds separated by barriers; a round lasts as long as its heaviest
transaction. ``workers`` switches both to greedy list scheduling on a fixed
number of workers.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

from .conflict_graph import ConflictGraph
from .errors import ImproperColoringError
from .graph_metrics import dsatur_coloring, is_proper_coloring


@dataclass(frozen=True)
class Workload:
    graph: ConflictGraph
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != self.graph.num_nodes:
            raise ValueError(f"{len(self.weights)} weights for {self.graph.num_nodes} transactions")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")

    @classmethod
    def unit(cls, graph: ConflictGraph) -> "Workload":
        return cls(graph, (1.0,) * graph.num_nodes)

    @classmethod
    def from_gas(cls, graph: ConflictGraph, gas_used: Sequence[int]) -> "Workload":
        # zero-gas roots fall back to unit cost
        return cls(graph, tuple(float(g) if g > 0 else 1.0 for g in gas_used))


def _predecessors(g: ConflictGraph) -> list[list[int]]:
    preds: list[list[int]] = [[] for _ in range(g.num_nodes)]
    for i, j in g.edges:
        preds[j].append(i)
    return preds


def order_dag_makespan(w: Workload, workers: int | None = None) -> float:
    n = w.graph.num_nodes
    preds = _predecessors(w.graph)
    if workers is None:
        finish = [0.0] * n
        for j in range(n):
            finish[j] = w.weights[j] + max((finish[i] for i in preds[j]), default=0.0)
        return max(finish, default=0.0)
    return _list_schedule(w.weights, preds, range(n), workers)


def _list_schedule(weights, preds, priority, workers: int) -> float:
    """Greedy list scheduling: a free worker takes the ready task earliest in ``priority``."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    n = len(weights)
    rank = {v: r for r, v in enumerate(priority)}
    succs: list[list[int]] = [[] for _ in range(n)]
    missing = [len(p) for p in preds]
    for j, ps in enumerate(preds):
        for i in ps:
            succs[i].append(j)
    ready = [(rank[v], v) for v in range(n) if missing[v] == 0]
    heapq.heapify(ready)
    running: list[tuple[float, int]] = []
    now, done, free = 0.0, 0, workers
    while done < n:
        while free and ready:
            _, v = heapq.heappop(ready)
            heapq.heappush(running, (now + weights[v], v))
            free -= 1
        now, v = heapq.heappop(running)
        free += 1
        done += 1
        for s in succs[v]:
            missing[s] -= 1
            if missing[s] == 0:
                heapq.heappush(ready, (rank[s], s))
    return now


def coloring_makespan(w: Workload, colors: Sequence[int] | None = None, workers: int | None = None) -> float:
    g = w.graph
    if colors is None:
        _, colors = dsatur_coloring(g)
    if len(colors) != g.num_nodes or not is_proper_coloring(g, colors):
        raise ImproperColoringError("coloring is not proper for this conflict graph")
    rounds: dict[int, list[float]] = {}
    for v, c in enumerate(colors):
        rounds.setdefault(c, []).append(w.weights[v])
    total = 0.0
    for c in sorted(rounds):
        ws = rounds[c]
        if workers is None:
            total += max(ws)
        else:
            total += _list_schedule(ws, [[] for _ in ws], range(len(ws)), workers)
    return total


def speedup_report(w: Workload, colors: Sequence[int] | None = None, workers: int | None = None) -> dict:
    seq = float(sum(w.weights))
    order = order_dag_makespan(w, workers)
    color = coloring_makespan(w, colors, workers)
    return {
        "sequential_time": seq,
        "order_makespan": order,
        "coloring_makespan": color,
        "order_speedup": seq / order if order else None,
        "coloring_speedup": seq / color if color else None,
        "coloring_vs_order": order / color if color else None,
    }
