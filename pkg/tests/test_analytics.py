import numpy as np
import pytest

from attachnet.analytics import (
    betweenness,
    communities_walktrap,
    degree_centrality,
    pagerank,
)
from attachnet.dag import Dag
from attachnet.errors import ValidationError
from attachnet.params import GaussianBnParams


def build_model(nodes, coeff_arcs):
    arcs = {(u, v) for u, v, _ in coeff_arcs}
    coefficients = {n: {} for n in nodes}
    for u, v, c in coeff_arcs:
        coefficients[v][u] = c
    dag = Dag(nodes, arcs)
    params = GaussianBnParams(
        nodes=tuple(nodes),
        intercept={n: 0.0 for n in nodes},
        residual_sd={n: 1.0 for n in nodes},
        coefficients=coefficients,
    )
    return dag, params


# -- degree -------------------------------------------------------------


def test_degree_chain():
    dag, _ = build_model(("a", "b", "c"), [("a", "b", 1.0), ("b", "c", 1.0)])
    deg_in, deg_out = degree_centrality(dag)
    assert [deg_out.values[n] for n in "abc"] == [1, 1, 0]
    assert [deg_in.values[n] for n in "abc"] == [0, 1, 1]


def test_degree_empty_graph():
    dag = Dag(("a", "b"), set())
    deg_in, deg_out = degree_centrality(dag)
    assert set(deg_in.values.values()) == {0.0}
    assert set(deg_out.values.values()) == {0.0}


def test_degree_totals_equal_arc_count(fixture_model):
    dag, _ = fixture_model
    deg_in, deg_out = degree_centrality(dag)
    assert sum(deg_in.values.values()) == len(dag.arcs)
    assert sum(deg_out.values.values()) == len(dag.arcs)


def test_fixture_degree_hubs(fixture_model):
    dag, _ = fixture_model
    deg_in, deg_out = degree_centrality(dag)
    assert deg_out.argmax() == "Q09"
    assert deg_in.argmax() == "Q23"


# -- betweenness --------------------------------------------------------


def test_betweenness_chain_center():
    dag, params = build_model(("a", "b", "c"), [("a", "b", 0.4), ("b", "c", 3.0)])
    bet = betweenness(dag, params)
    assert bet.values["b"] == pytest.approx(1.0)
    assert bet.values["a"] == bet.values["c"] == 0.0


def test_betweenness_diamond_splits_ties():
    dag, params = build_model(
        ("s", "u", "v", "t"),
        [("s", "u", 0.5), ("s", "v", 0.5), ("u", "t", 0.5), ("v", "t", 0.5)],
    )
    bet = betweenness(dag, params)
    assert bet.values["u"] == pytest.approx(0.5)
    assert bet.values["v"] == pytest.approx(0.5)


def test_betweenness_prefers_strong_route():
    # strong two-hop route (short distances) beats a weak direct arc
    dag, params = build_model(
        ("a", "m", "b"),
        [("a", "m", 0.9), ("m", "b", 0.9), ("a", "b", 0.1)],
    )
    bet = betweenness(dag, params)
    assert bet.values["m"] == pytest.approx(1.0)


def test_zero_coefficient_arc_excluded():
    dag, params = build_model(("a", "b", "c"), [("a", "b", 0.0), ("b", "c", 0.5)])
    with pytest.warns(UserWarning, match="zero coefficient"):
        bet = betweenness(dag, params)
    assert bet.values["b"] == 0.0


def brute_force_betweenness(dag, params):
    """Enumerate all simple paths; count shortest ones through each node."""
    nodes = dag.nodes
    lengths = {(u, v): 1.0 / abs(c) for u, v, c in params.arc_items() if c}
    score = {n: 0.0 for n in nodes}
    for s in nodes:
        for t in nodes:
            if s == t:
                continue
            paths = []

            def walk(node, dist, seen):
                if node == t:
                    paths.append((dist, tuple(seen)))
                    return
                for nxt in dag.children(node):
                    if nxt not in seen and (node, nxt) in lengths:
                        walk(nxt, dist + lengths[(node, nxt)], seen + [nxt])

            walk(s, 0.0, [s])
            if not paths:
                continue
            best = min(d for d, _ in paths)
            shortest = [p for d, p in paths if d <= best * (1 + 1e-12)]
            for p in shortest:
                for interior in p[1:-1]:
                    score[interior] += 1.0 / len(shortest)
    return score


def test_betweenness_matches_brute_force(rng):
    for _ in range(10):
        m = int(rng.integers(4, 8))
        nodes = tuple(f"n{i}" for i in range(m))
        order = rng.permutation(m)
        coeff_arcs = []
        for i in range(m):
            for j in range(i + 1, m):
                if rng.random() < 0.5:
                    coeff_arcs.append(
                        (nodes[order[i]], nodes[order[j]], float(rng.uniform(0.1, 1.0)))
                    )
        dag, params = build_model(nodes, coeff_arcs)
        fast = betweenness(dag, params).values
        slow = brute_force_betweenness(dag, params)
        for n in nodes:
            assert fast[n] == pytest.approx(slow[n], abs=1e-9)


def test_fixture_betweenness_top_two(fixture_model):
    dag, params = fixture_model
    bet = betweenness(dag, params)
    assert set(bet.top(2)) == {"Q09", "Q23"}


# -- pagerank ------------------------------------------------------------


def test_pagerank_uniform_when_symmetric():
    # all nodes dangling: pure teleportation gives the uniform vector
    dag, params = build_model(("x", "y", "z"), [])
    pr = pagerank(dag, params, damping=0.85)
    assert all(v == pytest.approx(1 / 3) for v in pr.values.values())
    # symmetric two-node exchange likewise stays uniform
    dag2, params2 = build_model(("a", "b", "c"), [("a", "b", 0.5), ("a", "c", 0.5)])
    pr2 = pagerank(dag2, params2, damping=0.85)
    assert pr2.values["b"] == pytest.approx(pr2.values["c"], abs=1e-12)


def test_pagerank_sums_to_one(fixture_model):
    dag, params = fixture_model
    pr = pagerank(dag, params, damping=0.85)
    assert sum(pr.values.values()) == pytest.approx(1.0, abs=1e-9)


def test_pagerank_scale_invariant(fixture_model):
    dag, params = fixture_model
    scaled = GaussianBnParams(
        nodes=params.nodes,
        intercept=params.intercept,
        residual_sd=params.residual_sd,
        coefficients={
            child: {p: 10 * c for p, c in pc.items()}
            for child, pc in params.coefficients.items()
        },
    )
    base = pagerank(dag, params, damping=0.85)
    big = pagerank(dag, scaled, damping=0.85)
    for node in dag.nodes:
        assert base.values[node] == pytest.approx(big.values[node], abs=1e-12)
    assert base.argmax() == big.argmax()


def test_pagerank_matches_dense_linear_solve(rng):
    m = 7
    nodes = tuple(f"n{i}" for i in range(m))
    order = rng.permutation(m)
    coeff_arcs = []
    for i in range(m):
        for j in range(i + 1, m):
            if rng.random() < 0.4:
                coeff_arcs.append((nodes[order[i]], nodes[order[j]], float(rng.uniform(-1, 1))))
    dag, params = build_model(nodes, coeff_arcs)
    a = 0.85
    idx = {n: i for i, n in enumerate(nodes)}
    w = np.zeros((m, m))
    for u, v, c in params.arc_items():
        w[idx[u], idx[v]] = abs(c)
    out = w.sum(axis=1)
    p = np.where(out[:, None] > 0, w / np.where(out[:, None] > 0, out[:, None], 1.0), 1.0 / m)
    direct = np.linalg.solve(np.eye(m) - a * p.T, np.full(m, (1 - a) / m))
    direct /= direct.sum()
    pr = pagerank(dag, params, damping=a)
    for n in nodes:
        assert pr.values[n] == pytest.approx(direct[idx[n]], abs=1e-9)


def test_pagerank_damping_validated(fixture_model):
    dag, params = fixture_model
    with pytest.raises(ValidationError):
        pagerank(dag, params, damping=1.0)


# -- walktrap ------------------------------------------------------------


def test_walktrap_two_disjoint_triangles():
    arcs = [
        ("a1", "a2", 0.9), ("a1", "a3", 0.9), ("a2", "a3", 0.9),
        ("b1", "b2", 0.9), ("b1", "b3", 0.9), ("b2", "b3", 0.9),
    ]
    dag, params = build_model(("a1", "a2", "a3", "b1", "b2", "b3"), arcs)
    part = communities_walktrap(dag, params, steps=4)
    assert part.as_sets() == frozenset(
        {frozenset({"a1", "a2", "a3"}), frozenset({"b1", "b2", "b3"})}
    )


def test_walktrap_single_node():
    dag, params = build_model(("only",), [])
    part = communities_walktrap(dag, params, steps=4)
    assert part.as_sets() == frozenset({frozenset({"only"})})


def test_walktrap_requires_positive_steps(fixture_model):
    dag, params = fixture_model
    with pytest.raises(ValidationError):
        communities_walktrap(dag, params, steps=0)


def test_walktrap_separable_blocks(rng):
    # two dense 5-cliques joined by one weak arc
    left = [f"l{i}" for i in range(5)]
    right = [f"r{i}" for i in range(5)]
    coeff_arcs = []
    for group in (left, right):
        for i, u in enumerate(group):
            for v in group[i + 1 :]:
                coeff_arcs.append((u, v, 0.8))
    coeff_arcs.append((left[-1], right[0], 0.05))
    dag, params = build_model(tuple(left + right), coeff_arcs)
    part = communities_walktrap(dag, params, steps=4)
    assert part.as_sets() == frozenset({frozenset(left), frozenset(right)})


def slow_walktrap(w, steps):
    """Reference agglomeration: everything recomputed from scratch per merge.

    Community profiles come straight from member rows, candidate deltas from
    the Ward formula over all adjacent pairs, modularity from the raw blocks.
    """
    n = w.shape[0]
    degree = w.sum(axis=1)
    profile = np.linalg.matrix_power(w / degree[:, None], steps)
    two_m = w.sum()
    communities = [frozenset([i]) for i in range(n)]

    def adjacent(c1, c2):
        return any(w[i, j] > 0 for i in c1 for j in c2)

    def ward(c1, c2):
        p1 = profile[sorted(c1)].mean(axis=0)
        p2 = profile[sorted(c2)].mean(axis=0)
        r2 = float(((p1 - p2) ** 2 / degree).sum())
        return len(c1) * len(c2) / (len(c1) + len(c2)) / n * r2

    def modularity(groups):
        q = 0.0
        for g in groups:
            gi = sorted(g)
            q += w[np.ix_(gi, gi)].sum() / two_m - (degree[gi].sum() / two_m) ** 2
        return q

    best_partition = list(communities)
    best_q = modularity(communities)
    while len(communities) > 1:
        candidates = [
            (ward(c1, c2), i, j)
            for i, c1 in enumerate(communities)
            for j, c2 in enumerate(communities[i + 1 :], start=i + 1)
            if adjacent(c1, c2)
        ]
        if not candidates:
            break
        _, i, j = min(candidates)
        merged = communities[i] | communities[j]
        communities = [c for k, c in enumerate(communities) if k not in (i, j)] + [merged]
        q = modularity(communities)
        if q > best_q:
            best_q = q
            best_partition = list(communities)
    return frozenset(best_partition)


def test_walktrap_matches_from_scratch_reference(rng):
    from attachnet.analytics import _components, _walktrap_component, _weight_matrix

    for _ in range(8):
        m = int(rng.integers(5, 10))
        nodes = tuple(f"n{i}" for i in range(m))
        coeff_arcs = [
            (nodes[i], nodes[i + 1], float(rng.uniform(0.2, 1))) for i in range(m - 1)
        ]
        for i in range(m):
            for j in range(i + 2, m):
                if rng.random() < 0.3:
                    coeff_arcs.append((nodes[i], nodes[j], float(rng.uniform(0.2, 1))))
        dag, params = build_model(nodes, coeff_arcs)
        w = _weight_matrix(dag, params)
        assert len(_components(w)) == 1
        fast = frozenset(
            frozenset(g) for g in _walktrap_component(w, steps=4, total_weight=float(w.sum()))
        )
        slow = slow_walktrap(w, steps=4)
        assert fast == slow


def test_walktrap_invariant_under_relabeling(rng):
    m = 10
    nodes = tuple(f"n{i}" for i in range(m))
    order = rng.permutation(m)
    coeff_arcs = []
    for i in range(m):
        for j in range(i + 1, m):
            if rng.random() < 0.4:
                coeff_arcs.append((nodes[order[i]], nodes[order[j]], float(rng.uniform(0.2, 1))))
    dag, params = build_model(nodes, coeff_arcs)
    base = communities_walktrap(dag, params, steps=4).as_sets()

    mapping = {n: f"x{i}" for i, n in enumerate(nodes)}
    renamed_arcs = [(mapping[u], mapping[v], c) for u, v, c in coeff_arcs]
    dag2, params2 = build_model(tuple(mapping[n] for n in nodes), renamed_arcs)
    renamed = communities_walktrap(dag2, params2, steps=4).as_sets()
    translated = frozenset(frozenset(mapping[n] for n in group) for group in base)
    assert renamed == translated


def test_walktrap_fixture_recovers_main_blocks(fixture_model, fixture_partition):
    """The avoidance blocks C1/C5 and the anxiety core separate cleanly."""
    dag, params = fixture_model
    part = communities_walktrap(dag, params, steps=4)
    groups = part.as_sets()
    reference = fixture_partition.clusters()
    assert frozenset(reference["C1"]) in groups
    assert frozenset(reference["C5"]) in groups


def test_partition_csv_round_trip(fixture_partition):
    import io

    text = fixture_partition.to_csv()
    again = type(fixture_partition).from_csv(io.StringIO(text))
    assert again.assignment == fixture_partition.assignment
