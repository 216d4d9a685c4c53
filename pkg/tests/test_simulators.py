import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hazardbounds.bounds import Deterministic, Exponential, LogNormal
from hazardbounds.errors import CapacityError, ContractViolation, DomainError
from hazardbounds.graph_model import (
    ctic_spec,
    erdos_spec,
    make_spec,
    norros_reittu_spec,
    random_star_spec,
    star_spec,
)
from hazardbounds.simulators import (
    SampledGraph,
    TrialSeed,
    components,
    exact_ctic_influence,
    exact_dtic_influence,
    exact_influence,
    exact_scenario_influence,
    exact_sir_influence,
    reachable_set,
    sample_ctic,
    sample_dtic,
    sample_graph,
    sample_sir_final,
    sample_sir_graph,
    sample_site_percolation,
)

from oracles import bfs_reach, brute_influence, sir_global_enumeration, union_find_sizes

TRIANGLE = make_spec(3, [0, 0, 1], [1, 2, 2], [0.5, 0.5, 0.5])


def _random_spec(rng, n, m, undirected=True):
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j and (not undirected or i < j)]
    idx = rng.choice(len(pairs), size=min(m, len(pairs)), replace=False)
    chosen = [pairs[k] for k in idx]
    ps = rng.uniform(0.05, 0.95, len(chosen))
    return make_spec(n, [a for a, _ in chosen], [b for _, b in chosen], ps, undirected=undirected)


# -- sampling ----------------------------------------------------------------

def test_zero_probability_gives_empty_graph():
    g = sample_graph(star_spec(6, 0.0), TrialSeed(1, 0))
    assert g.num_arcs == 0
    g = sample_graph(erdos_spec(50, 0.0), TrialSeed(1, 0))
    assert g.num_arcs == 0


def test_trial_seed_replay_is_bit_exact():
    s = erdos_spec(500, 2.0)
    a = sample_graph(s, TrialSeed(7, 3))
    b = sample_graph(s, TrialSeed(7, 3))
    c = sample_graph(s, TrialSeed(7, 4))
    assert np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
    assert not np.array_equal(a.indices, c.indices)


def test_erdos_edge_count_moments():
    n, c, trials = 10_000, 2.0, 1000
    counts = np.array([sample_graph(erdos_spec(n, c), TrialSeed(11, t)).num_arcs // 2 for t in range(trials)])
    pairs, p = n * (n - 1) // 2, c / n
    mean, var = pairs * p, pairs * p * (1 - p)
    assert abs(counts.mean() - mean) <= 3 * math.sqrt(var / trials)
    assert counts.var(ddof=1) == pytest.approx(var, rel=0.15)


def test_background_pairs_are_uniform():
    # every pair of a small Erdos model should appear with frequency c/n
    n, trials = 6, 20_000
    s = erdos_spec(n, 1.5)
    hits = np.zeros((n, n))
    for t in range(trials):
        g = sample_graph(s, TrialSeed(5, t))
        src, dst = g.arcs()
        hits[src, dst] += 1
    freq = hits[~np.eye(n, dtype=bool)] / trials
    p = 1.5 / n
    assert np.all(np.abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / trials))


def test_sampled_undirected_graphs_are_symmetric():
    for spec in (erdos_spec(200, 3), norros_reittu_spec(np.linspace(0.1, 3, 40)), random_star_spec(50, 0.3, 0.05)):
        assert sample_graph(spec, TrialSeed(0, 0)).is_symmetric()


# -- reachability ------------------------------------------------------------

def test_reachable_set_examples():
    g = SampledGraph.from_arcs(3, [0, 1], [1, 2])
    assert reachable_set(g, []).tolist() == []
    assert reachable_set(g, [0]).tolist() == [0, 1, 2]
    assert reachable_set(g, [1]).tolist() == [1, 2]
    empty = SampledGraph.from_arcs(4, [], [])
    assert reachable_set(empty, range(4)).tolist() == [0, 1, 2, 3]
    with pytest.raises(IndexError):
        reachable_set(g, [3])


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 40), density=st.floats(0, 0.3))
def test_reachable_set_matches_python_bfs(seed, n, density):
    rng = np.random.default_rng(seed)
    A = rng.random((n, n)) < density
    src, dst = np.nonzero(A)
    g = SampledGraph.from_arcs(n, src, dst)
    I = rng.choice(n, size=rng.integers(0, n + 1), replace=False).tolist()
    assert set(reachable_set(g, I).tolist()) == bfs_reach(n, list(zip(src.tolist(), dst.tolist())), I)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 40), p1=st.floats(0, 0.2), extra=st.floats(0, 0.2))
def test_reachable_set_monotone_under_coupling(seed, n, p1, extra):
    rng = np.random.default_rng(seed)
    U = rng.random((n, n))
    s1, d1 = np.nonzero(U < p1)
    s2, d2 = np.nonzero(U < p1 + extra)
    I = [int(rng.integers(n))]
    r1 = set(reachable_set(SampledGraph.from_arcs(n, s1, d1), I).tolist())
    r2 = set(reachable_set(SampledGraph.from_arcs(n, s2, d2), I).tolist())
    assert set(I) <= r1 <= r2


# -- components --------------------------------------------------------------

def test_component_examples():
    st_ = components(SampledGraph.from_arcs(3, [0], [1], undirected=True))
    assert st_.sizes.tolist() == [2, 1] and st_.n_at_least(2) == 1
    n = 6
    full = [(i, j) for i in range(n) for j in range(i + 1, n)]
    g = SampledGraph.from_arcs(n, [a for a, _ in full], [b for _, b in full], undirected=True)
    assert components(g).sizes.tolist() == [n]
    assert components(SampledGraph.from_arcs(5, [], [])).sizes.tolist() == [1] * 5
    with pytest.raises(ContractViolation):
        components(SampledGraph.from_arcs(3, [0], [1]))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 60), c=st.floats(0, 3))
def test_components_match_union_find(seed, n, c):
    g = sample_graph(erdos_spec(n, min(c, n * 0.99)), TrialSeed(seed, 0))
    stats = components(g)
    src, dst = g.arcs()
    assert stats.sizes.tolist() == union_find_sizes(n, zip(src.tolist(), dst.tolist()))
    assert stats.total == n
    assert stats.n_at_least(1) == len(stats.sizes)
    assert np.all(np.diff(stats.sizes) <= 0)


# -- site percolation --------------------------------------------------------

def test_site_percolation_examples():
    tri = [(0, 1), (1, 2), (0, 2)]
    assert sample_site_percolation(3, tri, [0, 0, 0], TrialSeed(0, 0)).total == 0
    path = [(i, i + 1) for i in range(9)]
    assert sample_site_percolation(10, path, np.full(10, 1 - 1e-9), TrialSeed(0, 0)).sizes.tolist() == [10]


def test_site_percolation_triangle_probability():
    # P(C1 >= 2) = P(at least two of three nodes survive) = 1/2
    tri = [(0, 1), (1, 2), (0, 2)]
    trials = 100_000
    rng = np.random.default_rng(2024)
    hits = np.array([sample_site_percolation(3, tri, [0.5] * 3, rng).c1 >= 2 for _ in range(trials)])
    assert abs(hits.mean() - 0.5) <= 3 * math.sqrt(0.25 / trials)


# -- SIR -------------------------------------------------------------------

def test_sir_examples():
    rng = np.random.default_rng(3)
    sizes = [len(sample_sir_final(2, [(0, 1)], 1.0, Exponential(1.0), [0], rng)) for _ in range(20_000)]
    assert abs(np.mean(sizes) - 1.5) <= 3 * np.std(sizes) / math.sqrt(len(sizes))
    assert sample_sir_final(5, [(i, i + 1) for i in range(4)], 1e-12, Exponential(1.0), [2], rng).tolist() == [2]
    with pytest.raises(DomainError):
        sample_sir_graph(2, [(0, 1)], 0.0, Exponential(1.0), rng)


def test_exact_sir_examples():
    assert exact_sir_influence(2, [(0, 1)], 1.0, 1.0, [0]) == pytest.approx(1.5, abs=1e-12)
    assert exact_sir_influence(3, [(0, 1), (1, 2)], 1.0, 1.0, [0]) == pytest.approx(1.75, abs=1e-10)
    assert exact_sir_influence(4, [(0, 1), (1, 2), (2, 3)], 1e-12, 1.0, [0, 3]) == pytest.approx(2, abs=1e-9)
    with pytest.raises(DomainError):
        exact_sir_influence(2, [(0, 1)], 1.0)


@pytest.mark.parametrize(
    "inc",
    [Exponential(1.3), Deterministic(0.7), LogNormal(-0.2, 0.6)],
    ids=["exponential", "deterministic", "lognormal"],
)
@pytest.mark.parametrize(
    "n, edges, I",
    [
        (4, [(0, 1), (1, 2), (2, 3), (3, 0)], [0]),
        (4, [(0, 1), (0, 2), (0, 3), (1, 2)], [1]),
        (5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)], [0, 4]),
    ],
)
def test_exact_sir_matches_global_enumeration(inc, n, edges, I):
    got = exact_sir_influence(n, edges, 0.8, I=I, incubation=inc)
    assert got == pytest.approx(sir_global_enumeration(n, edges, 0.8, inc.laplace, I), abs=1e-10)


def test_sir_sampler_matches_exact_on_star():
    edges = [(0, 1), (0, 2), (0, 3), (1, 2)]
    exact = exact_sir_influence(4, edges, 0.9, I=[0], incubation=Exponential(1.0))
    trials = 40_000
    sizes = np.array([len(sample_sir_final(4, edges, 0.9, Exponential(1.0), [0], TrialSeed(9, t))) for t in range(trials)])
    assert abs(sizes.mean() - exact) <= 3 * sizes.std(ddof=1) / math.sqrt(trials)


# -- cascades and exact oracles ------------------------------------------------

def test_exact_influence_examples():
    assert exact_influence(TRIANGLE, [0]) == 2.25
    assert exact_influence(star_spec(5, 0.3), [0]) == pytest.approx(2.2, abs=1e-12)
    assert exact_influence(star_spec(5, 0.3), range(5)) == 5
    assert exact_influence(star_spec(2, 0.5), [0]) == 1.5
    with pytest.raises(CapacityError):
        exact_influence(erdos_spec(10, 1.0), [0])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 7), m=st.integers(0, 9), undirected=st.booleans())
def test_exact_influence_matches_brute_force(seed, n, m, undirected):
    rng = np.random.default_rng(seed)
    s = _random_spec(rng, n, m, undirected)
    I = sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
    r, c, p = s.entries()
    expected = brute_influence(n, list(zip(r.tolist(), c.tolist())), p.tolist(), I, undirected)
    assert exact_influence(s, I) == pytest.approx(expected, abs=1e-12)
    assert exact_scenario_influence(s, "fixed", I) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6), m=st.integers(0, 7), q=st.floats(0, 1))
def test_scenario_averages_match_subset_enumeration(seed, n, m, q):
    import itertools

    rng = np.random.default_rng(seed)
    s = _random_spec(rng, n, m)
    n0 = int(rng.integers(0, n + 1))
    subsets = list(itertools.combinations(range(n), n0))
    uni = sum(exact_influence(s, list(S)) if S else 0.0 for S in subsets) / len(subsets)
    assert exact_scenario_influence(s, "uniform", n0) == pytest.approx(uni, abs=1e-10)
    ber = 0.0
    for k in range(n + 1):
        for S in itertools.combinations(range(n), k):
            w = q**k * (1 - q) ** (n - k)
            ber += w * (exact_influence(s, list(S)) if S else 0.0)
    assert exact_scenario_influence(s, "bernoulli", q) == pytest.approx(ber, abs=1e-10)


def test_dtic_ctic():
    lam_tau = [0.4, 1.1, 0.05]
    rows, cols = [0, 1, 0], [1, 2, 2]
    dtic = make_spec(3, rows, cols, [-math.expm1(-x) for x in lam_tau], undirected=False)
    assert exact_dtic_influence(dtic, [0]) == exact_ctic_influence(3, rows, cols, lam_tau, [0])
    assert sample_dtic(make_spec(3, rows, cols, [0, 0, 0], undirected=False), [1], TrialSeed(0, 0)).tolist() == [1]
    a = sample_ctic(3, rows, cols, lam_tau, [0], TrialSeed(4, 2))
    b = sample_dtic(ctic_spec(3, rows, cols, lam_tau), [0], TrialSeed(4, 2))
    assert np.array_equal(a, b)
    with pytest.raises(DomainError):
        ctic_spec(3, rows, cols, [0.1, -0.1, 0.2])


def test_monte_carlo_converges_to_exact_triangle():
    trials = 20_000
    sizes = np.array([len(sample_dtic(TRIANGLE, [0], TrialSeed(1, t))) for t in range(trials)])
    assert abs(sizes.mean() - 2.25) <= 3 * sizes.std(ddof=1) / math.sqrt(trials)
