import math
import random

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from txconflict import synth
from txconflict.conflict_graph import ConflictGraph
from txconflict.errors import CliqueBudgetExceeded
from txconflict.graph_metrics import (
    assortativity,
    clique_number,
    compute_metrics,
    connected_components,
    degree_stats,
    density,
    diameter,
    dsatur_coloring,
    is_proper_coloring,
    longest_path_mc,
    max_clique,
    ratio_bounds,
)

from oracles import brute_clique, exact_chromatic, exact_longest_path, pearson_assortativity, random_gnp_edges


def G(n, edges):
    return ConflictGraph.from_edges(n, edges)


def two_triangles():
    return G(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def star_plus_isolated(leaves, isolated):
    return G(1 + leaves + isolated, [(0, i) for i in range(1, leaves + 1)])


# density / components / diameter / degrees -----------------------------------------


def test_density_examples():
    assert density(synth.complete(4)) == 1.0
    assert density(G(10, [])) == 0.0
    assert density(G(1, [])) == 0.0
    assert density(G(0, [])) == 0.0


def test_components_examples():
    assert connected_components(star_plus_isolated(5, 3)) == [6, 1, 1, 1]
    assert connected_components(G(4, [])) == [1, 1, 1, 1]
    assert connected_components(two_triangles()) == [3, 3]


def test_diameter_examples(backend):
    assert diameter(synth.star(10)) == 2
    assert diameter(synth.path(6)) == 5
    assert diameter(star_plus_isolated(9, 50)) == 2
    assert diameter(G(0, [])) == 0
    assert diameter(G(3, [])) == 0


@pytest.mark.parametrize("n", range(2, 30))
def test_diameter_families(n, backend):
    assert diameter(synth.star(n)) == 2 if n > 2 else 1
    assert diameter(synth.path(n)) == n - 1


def test_degree_examples():
    assert degree_stats(synth.star(10)) == (1.8, 9)
    assert degree_stats(synth.cycle(5)) == (2.0, 2)
    assert degree_stats(G(3, [])) == (0.0, 0)


# assortativity --------------------------------------------------------------------


@pytest.mark.parametrize("n", [3, 4, 10, 50])
def test_star_assortativity(n):
    assert assortativity(synth.star(n)) == pytest.approx(-1.0, abs=1e-12)
    assert pearson_assortativity(n, synth.star(n).sorted_edges()) == pytest.approx(-1.0)


def test_regular_graphs_undefined():
    assert assortativity(synth.cycle(6)) is None
    assert assortativity(synth.complete(5)) is None
    assert assortativity(G(4, [])) is None


def test_path_p4_matches_direct_formula():
    g = synth.path(4)
    assert assortativity(g) == pytest.approx(pearson_assortativity(4, g.sorted_edges()), abs=1e-12)


@given(st.integers(0, 2**32))
def test_assortativity_matches_oracles(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 25)
    edges = random_gnp_edges(rng, n, rng.uniform(0.05, 0.6))
    g = G(n, edges)
    want = pearson_assortativity(n, g.sorted_edges())
    got = assortativity(g)
    if want is None:
        assert got is None
    else:
        assert got == pytest.approx(want, abs=1e-9)
        assert got == pytest.approx(nx.degree_assortativity_coefficient(nx.Graph(edges)), abs=1e-9)


# coloring -------------------------------------------------------------------------


def test_coloring_examples(backend):
    assert dsatur_coloring(synth.star(10))[0] == 2
    assert dsatur_coloring(synth.complete(5))[0] == 5
    assert dsatur_coloring(synth.cycle(5))[0] == 3 == exact_chromatic(5, synth.cycle(5).sorted_edges())
    assert dsatur_coloring(G(0, [])) == (0, [])
    assert dsatur_coloring(G(3, []))[0] == 1


def test_dsatur_tie_breaks(backend):
    # on a path P4 the two middle nodes tie on degree; lower index goes first
    _, colors = dsatur_coloring(synth.path(4))
    assert colors == [1, 0, 1, 0]
    # star: hub (highest degree) is colored first
    _, colors = dsatur_coloring(synth.star(5))
    assert colors == [0, 1, 1, 1, 1]


def test_improper_coloring_detected():
    assert not is_proper_coloring(synth.path(3), [0, 0, 1])
    assert is_proper_coloring(synth.path(3), [0, 1, 0])


# clique ---------------------------------------------------------------------------


def test_clique_examples(backend):
    k5_pendant = G(6, [(i, j) for i in range(5) for j in range(i + 1, 5)] + [(4, 5)])
    assert clique_number(k5_pendant) == 5
    assert clique_number(synth.star(10)) == 2
    assert clique_number(G(0, [])) == 0
    assert clique_number(G(4, [])) == 1


def test_clique_result_is_a_clique(backend):
    rng = random.Random(3)
    edges = random_gnp_edges(rng, 40, 0.4)
    g = G(40, edges)
    res = max_clique(g)
    es = set(g.edges)
    assert res.exact
    assert all((a, b) in es for i, a in enumerate(res.clique) for b in res.clique[i + 1 :])
    assert res.size == max(len(c) for c in nx.find_cliques(nx.Graph(edges)))


def test_clique_budget(backend):
    rng = random.Random(11)
    g = G(60, random_gnp_edges(rng, 60, 0.7))
    res = max_clique(g, budget=5)
    assert not res.exact
    assert res.size >= 2
    with pytest.raises(CliqueBudgetExceeded) as info:
        clique_number(g, budget=5)
    assert info.value.result.size == res.size


@pytest.mark.parametrize("seed", range(40))
def test_clique_matches_subset_oracle(seed, backend):
    rng = random.Random(seed)
    n = rng.randint(1, 12)
    edges = random_gnp_edges(rng, n, rng.choice([0.1, 0.3, 0.5, 0.8]))
    assert clique_number(G(n, edges)) == brute_clique(n, edges)


# longest path --------------------------------------------------------------------


def test_longest_path_examples(backend):
    for n in (3, 10, 40):
        assert longest_path_mc(synth.star(n), seed=1) == 2
    assert longest_path_mc(synth.path(10), 1000, seed=0) == 9
    assert longest_path_mc(G(0, []), seed=0) == 0
    assert longest_path_mc(G(5, []), seed=0) == 0


def test_longest_path_skips_small_components(backend):
    # a long path plus many small pieces: the answer is the path
    edges = [(i, i + 1) for i in range(19)] + [(20 + 2 * k, 21 + 2 * k) for k in range(10)]
    assert longest_path_mc(G(40, edges), 200, seed=3) == 19


def test_longest_path_deterministic(backend):
    g = G(30, random_gnp_edges(random.Random(2), 30, 0.15))
    assert longest_path_mc(g, 50, seed=9) == longest_path_mc(g, 50, seed=9)


def test_longest_path_needs_a_start():
    with pytest.raises(ValueError):
        longest_path_mc(synth.path(3), 0)


@pytest.mark.parametrize("seed", range(30))
def test_longest_path_lower_bound(seed, backend):
    rng = random.Random(1000 + seed)
    n = rng.randint(1, 12)
    edges = random_gnp_edges(rng, n, 0.3)
    assert longest_path_mc(G(n, edges), 1000, seed=seed) <= exact_longest_path(n, edges)


# ratios / aggregate ---------------------------------------------------------------


def test_ratio_examples():
    assert ratio_bounds(2, 2, 10, 2) == (1.5, 5.0)
    assert ratio_bounds(4, 5, 5, 5) == (1.0, 1.0)
    assert ratio_bounds(0, 0, 0, 0) == (None, None)


def test_empty_graph_metrics():
    m = compute_metrics(G(0, []))
    assert m.greedy_colors == 0 and m.clique_number == 0
    assert m.ratio_lower is None and m.ratio_upper is None
    assert m.max_degree_node is None


@given(st.integers(0, 2**32))
def test_metric_invariants(seed):
    rng = random.Random(seed)
    n = rng.randint(0, 9)
    edges = random_gnp_edges(rng, n, rng.uniform(0, 1))
    g = G(n, edges)
    m = compute_metrics(g, seed=seed, mc_starts=200)
    chi = exact_chromatic(n, edges)
    assert m.clique_number <= chi <= m.greedy_colors <= m.max_degree + 1 or n == 0
    assert m.longest_path_edges + 1 <= max(m.largest_cc, 1)
    assert 0.0 <= m.density <= 1.0
    assert sum(connected_components(g)) == n
    nxg = nx.Graph()
    nxg.add_nodes_from(range(n))
    nxg.add_edges_from(edges)
    if n:
        big = max(nx.connected_components(nxg), key=len)
        assert m.largest_cc == len(big)
        assert m.diameter == nx.diameter(nxg.subgraph(big))
    assert m == compute_metrics(g, seed=seed, mc_starts=200)
    assert math.isclose(m.mean_degree, 2 * len(edges) / n) if n else m.mean_degree == 0
