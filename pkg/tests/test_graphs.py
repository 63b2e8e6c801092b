import itertools
import random

import pytest

from omsim.engine import BudgetExceeded
from omsim.graphs import (
    GraphConfig, OverlayGraph, generate, certify,
    check_expansion, check_edge_sparsity, internal_edges,
    extract_survival_set, check_dense_neighborhood_growth, neighborhood,
)


def complete(n):
    return OverlayGraph(n, [(a, b) for a in range(1, n) for b in range(a + 1, n + 1)])


def path(n):
    return OverlayGraph(n, [(i, i + 1) for i in range(1, n)])


def cycle(n):
    return OverlayGraph(n, [(i, i + 1) for i in range(1, n)] + [(n, 1)])


def random_graph(n, p, rng):
    edges = [(a, b) for a in range(1, n) for b in range(a + 1, n + 1) if rng.random() < p]
    return OverlayGraph(n, edges)


# --- generation ----------------------------------------------------------

def test_generate_complete_when_delta_saturates():
    g = generate(GraphConfig(n=5, delta=4, seed=0))
    assert g.edge_count() == 10
    assert all(g.degree(p) == 4 for p in range(1, 6))


def test_generate_512_with_asymptotic_default_is_complete():
    # 832 * log2(512) far exceeds n - 1, so the overlay saturates
    cfg = GraphConfig.from_coeff(512, 832.0, seed=1)
    assert cfg.delta >= 511
    g = generate(cfg)
    assert g.degree(1) == 511


def test_generate_deterministic_and_simple():
    cfg = GraphConfig(n=100, delta=20, seed=42)
    g1, g2 = generate(cfg), generate(cfg)
    assert g1.adj == g2.adj
    for p in range(1, 101):
        assert p not in g1.adj_sets[p]
        for q in g1.adj[p]:
            assert p in g1.adj_sets[q]
    g3 = generate(GraphConfig(n=100, delta=20, seed=43))
    assert g3.adj != g1.adj


def test_text_roundtrip():
    g = generate(GraphConfig(n=30, delta=8, seed=7))
    assert OverlayGraph.from_text(g.to_text()).adj == g.adj


# --- expansion -----------------------------------------------------------

def test_expansion_complete_true():
    assert check_expansion(complete(5), 2).ok


def test_expansion_path_false_with_witness():
    v = check_expansion(path(5), 2)
    assert not v.ok
    A, B = v.witness
    assert (A, B) == ([1, 2], [4, 5])
    # witness re-verifies: no edge crosses
    g = path(5)
    assert not any(g.has_edge(a, b) for a in A for b in B)


def test_expansion_budget():
    with pytest.raises(BudgetExceeded):
        check_expansion(complete(40), 10, budget=10)


def test_expansion_sampled_reports_rate():
    v = check_expansion(path(8), 2, mode="sampled", trials=300, seed=1)
    assert not v.ok and v.violations > 0 and v.witness is not None


def brute_expansion(g, ell):
    verts = range(1, g.n + 1)
    for A in itertools.combinations(verts, ell):
        rest = [v for v in verts if v not in A]
        for B in itertools.combinations(rest, ell):
            if not any(g.has_edge(a, b) for a in A for b in B):
                return False
    return True


def brute_sparsity(g, ell, alpha):
    verts = range(1, g.n + 1)
    for k in range(1, ell + 1):
        for X in itertools.combinations(verts, k):
            e = sum(1 for a, b in itertools.combinations(X, 2) if g.has_edge(a, b))
            if e > alpha * k:
                return False
    return True


def test_exact_checkers_against_brute_force():
    rng = random.Random(0)
    for _ in range(40):
        n = rng.randint(4, 9)
        g = random_graph(n, rng.choice([0.2, 0.5, 0.8]), rng)
        ell = rng.randint(1, n // 2)
        assert check_expansion(g, ell).ok == brute_expansion(g, ell)
        alpha = rng.choice([0.5, 1.0, 1.5])
        assert check_edge_sparsity(g, ell, alpha).ok == brute_sparsity(g, ell, alpha)


# --- edge sparsity -------------------------------------------------------

def test_sparsity_complete_false():
    v = check_edge_sparsity(complete(5), 4, 1.0)
    assert not v.ok
    X = v.witness
    assert internal_edges(complete(5), X) > len(X)


def test_sparsity_empty_graph_true():
    g = OverlayGraph(5, [])
    assert check_edge_sparsity(g, 5, 0.1).ok


def test_sparsity_cycle_true():
    assert check_edge_sparsity(cycle(5), 5, 1.0).ok


def test_sparsity_greedy_heuristic_finds_planted_clique():
    rng = random.Random(3)
    base = [(a, b) for a in range(1, 40) for b in range(a + 1, 41) if rng.random() < 0.02]
    clique = [(a, b) for a in range(1, 6) for b in range(a + 1, 7)]
    g = OverlayGraph(41, set(base) | set(clique))
    v = check_edge_sparsity(g, 8, 1.2, mode="sampled", trials=50, seed=1)
    assert not v.ok


# --- survival sets -------------------------------------------------------

def test_survival_complete():
    g = complete(5)
    assert extract_survival_set(g, range(1, 6), 4) == {1, 2, 3, 4, 5}


def test_survival_path_peels_to_empty():
    assert extract_survival_set(path(5), range(1, 6), 2) == set()


def test_survival_subset_of_complete_empty():
    assert extract_survival_set(complete(5), {1, 2, 3, 4}, 4) == set()


def test_survival_fixed_point_and_maximality():
    rng = random.Random(1)
    for _ in range(50):
        n = rng.randint(5, 14)
        g = random_graph(n, 0.5, rng)
        B = set(rng.sample(range(1, n + 1), rng.randint(2, n)))
        delta = rng.randint(1, 4)
        C = extract_survival_set(g, B, delta)
        # fixed point: every member keeps delta neighbors inside
        for v in C:
            assert sum(1 for q in g.adj[v] if q in C) >= delta
        # maximality: adding back any peeled vertex breaks the bound for it
        for v in B - C:
            assert sum(1 for q in g.adj[v] if q in C | {v}) < delta


# --- dense neighborhoods -------------------------------------------------

def test_dense_neighborhood_complete():
    assert check_dense_neighborhood_growth(complete(5), 1, 1, 4) == 5


def test_dense_neighborhood_path_center():
    assert check_dense_neighborhood_growth(path(5), 3, 1, 2) == 3


def test_dense_neighborhood_low_degree_zero():
    g = path(5)
    assert check_dense_neighborhood_growth(g, 1, 1, 2) == 0


def test_dense_neighborhood_gamma_zero():
    assert check_dense_neighborhood_growth(path(5), 1, 0, 99) == 1


def test_neighborhood_radius():
    g = path(7)
    assert neighborhood(g, 4, 0) == {4}
    assert neighborhood(g, 4, 2) == {2, 3, 4, 5, 6}


# --- certification bundle ------------------------------------------------

def test_certify_runs_and_reports():
    g = generate(GraphConfig(n=60, delta=18, seed=5))
    rep = certify(g, 18, mode="sampled", trials=200, seed=2)
    lo, hi = rep.degrees
    assert 0 < lo <= hi
    d = rep.to_dict()
    assert d["n"] == 60 and "expanding" in d and "edge_sparse" in d
