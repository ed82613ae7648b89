"""Structural metrics of a conflict graph.

Path lengths are counted in edges everywhere except inside
:func:`ratio_bounds`, which converts the Monte Carlo path to a node count so
that both ratios compare node counts against color counts.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .conflict_graph import ConflictGraph
from .errors import CliqueBudgetExceeded

DEFAULT_CLIQUE_BUDGET = 10**8
DEFAULT_MC_STARTS = 1000


def density(g: ConflictGraph) -> float:
    n = g.num_nodes
    if n < 2:
        return 0.0
    return 2.0 * g.num_edges / (n * (n - 1))


def _components(g: ConflictGraph) -> list[list[int]]:
    """Components as ascending node lists, largest first (ties: lowest node)."""
    n = g.num_nodes
    if n == 0:
        return []
    labels = kernels.component_labels(n, *g.csr)
    comps: list[list[int]] = [[] for _ in range(max(labels) + 1)]
    for v, lab in enumerate(labels):
        comps[lab].append(v)
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def connected_components(g: ConflictGraph) -> list[int]:
    return [len(c) for c in _components(g)]


def diameter(g: ConflictGraph) -> int:
    """Diameter of the largest connected component (0 for empty/singleton)."""
    comps = _components(g)
    if not comps or len(comps[0]) < 2:
        return 0
    return kernels.max_eccentricity(g.num_nodes, *g.csr, comps[0])


def degree_stats(g: ConflictGraph) -> tuple[float, int]:
    n = g.num_nodes
    if n == 0:
        return 0.0, 0
    return 2.0 * g.num_edges / n, int(g.degrees.max())


def assortativity(g: ConflictGraph) -> float | None:
    """Degree assortativity, or None when a marginal has zero variance."""
    if g.num_edges == 0:
        return None
    e = np.array(g.sorted_edges(), dtype=np.int64)
    deg = g.degrees.astype(float)
    x = np.concatenate([deg[e[:, 0]], deg[e[:, 1]]])
    y = np.concatenate([deg[e[:, 1]], deg[e[:, 0]]])
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    # degree products are integers, so a regular graph gives exactly zero here
    if sxx <= 1e-12 * len(x) or syy <= 1e-12 * len(y):
        return None
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def dsatur_coloring(g: ConflictGraph) -> tuple[int, list[int]]:
    colors = kernels.dsatur(g.num_nodes, *g.csr)
    return (max(colors) + 1 if colors else 0), colors


def is_proper_coloring(g: ConflictGraph, colors) -> bool:
    return all(colors[i] != colors[j] for i, j in g.edges)


@dataclass(frozen=True)
class CliqueResult:
    size: int
    clique: tuple[int, ...]
    expansions: int
    exact: bool


def max_clique(g: ConflictGraph, budget: int = DEFAULT_CLIQUE_BUDGET) -> CliqueResult:
    """Maximum clique search; ``exact`` is False if the expansion budget ran out."""
    clique, expansions, exact = kernels.max_clique(g.num_nodes, *g.csr, budget)
    return CliqueResult(len(clique), tuple(clique), expansions, exact)


def clique_number(g: ConflictGraph, budget: int = DEFAULT_CLIQUE_BUDGET) -> int:
    res = max_clique(g, budget)
    if not res.exact:
        raise CliqueBudgetExceeded(res)
    return res.size


def longest_path_mc(g: ConflictGraph, starts_per_component: int = DEFAULT_MC_STARTS, seed: int = 0) -> int:
    """Monte Carlo lower bound on the longest simple path, in edges."""
    if starts_per_component < 1:
        raise ValueError("starts_per_component must be >= 1")
    comps = _components(g)
    if not comps:
        return 0
    comp_nodes = [v for c in comps for v in c]
    comp_ptr = np.cumsum([0] + [len(c) for c in comps])
    return kernels.longest_path_mc(g.num_nodes, *g.csr, comp_nodes, comp_ptr, starts_per_component, seed)


def ratio_bounds(longest_path_edges: int, greedy_colors: int, largest_cc: int, clique: int):
    """(lower, upper) estimates of longest-path-to-chromatic ratio, or (None, None)."""
    if greedy_colors < 1 or clique < 1:
        return None, None
    return (longest_path_edges + 1) / greedy_colors, largest_cc / clique


@dataclass(frozen=True)
class GraphMetrics:
    num_nodes: int
    num_edges: int
    density: float
    diameter: int
    mean_degree: float
    max_degree: int
    max_degree_node: int | None
    assortativity: float | None
    largest_cc: int
    component_count: int
    greedy_colors: int
    clique_number: int
    clique_exact: bool
    longest_path_edges: int
    ratio_lower: float | None
    ratio_upper: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def compute_metrics(
    g: ConflictGraph,
    seed: int = 0,
    mc_starts: int = DEFAULT_MC_STARTS,
    clique_budget: int = DEFAULT_CLIQUE_BUDGET,
) -> GraphMetrics:
    sizes = connected_components(g)
    mean_deg, max_deg = degree_stats(g)
    colors, _ = dsatur_coloring(g)
    clique = max_clique(g, clique_budget)
    path = longest_path_mc(g, mc_starts, seed)
    largest = sizes[0] if sizes else 0
    lower, upper = ratio_bounds(path, colors, largest, clique.size)
    return GraphMetrics(
        num_nodes=g.num_nodes,
        num_edges=g.num_edges,
        density=density(g),
        diameter=diameter(g),
        mean_degree=mean_deg,
        max_degree=max_deg,
        max_degree_node=int(np.argmax(g.degrees)) if g.num_nodes else None,
        assortativity=assortativity(g),
        largest_cc=largest,
        component_count=len(sizes),
        greedy_colors=colors,
        clique_number=clique.size,
        clique_exact=clique.exact,
        longest_path_edges=path,
        ratio_lower=lower,
        ratio_upper=upper,
    )
