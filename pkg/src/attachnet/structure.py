"""Score-based DAG search, bootstrap arc strengths and model averaging.

``tabu_search`` runs the add/remove/reverse local search (see
``_kernels.tabu_search_kernel``).  ``bootstrap_strengths`` repeats the search
on resampled data and tallies how often each connection appears and in which
direction; ``average_network`` thresholds the tally into a consensus DAG.
Replicates use independent seed streams derived from ``(seed, replicate)``, so
results are bit-identical for a given configuration regardless of how many
worker threads run them.
"""
from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .dag import Dag, roots_and_terminals  # noqa: F401  (re-exported)
from .errors import ValidationError
from .score import METRICS, DEFAULT_RIDGE, SufficientStats, stats_from_matrix


@dataclass(frozen=True)
class SearchConfig:
    tabu_len: int = 10
    max_iter: int = 100
    max_parents: int | None = None
    restarts: int = 0
    seed: int = 1
    metric: str = "bic"

    def __post_init__(self):
        if self.tabu_len < 1:
            raise ValidationError("tabu_len must be >= 1")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")
        if self.restarts < 0:
            raise ValidationError("restarts must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a non-negative 64-bit integer")
        if self.metric not in METRICS:
            raise ValidationError(f"unknown metric {self.metric!r}")


def _run_kernel(stats: SufficientStats, cfg: SearchConfig, init_adj: np.ndarray):
    max_parents = -1 if cfg.max_parents is None else cfg.max_parents
    return _kernels.tabu_search_kernel(
        stats.cov,
        float(stats.n),
        init_adj,
        cfg.tabu_len,
        cfg.max_iter,
        max_parents,
        DEFAULT_RIDGE,
        METRICS[cfg.metric],
    )


def _random_dag_adjacency(m: int, rng: np.random.Generator) -> np.ndarray:
    """Random DAG: arcs sampled below the diagonal of a random node order."""
    order = rng.permutation(m)
    adj = np.zeros((m, m), dtype=np.int8)
    prob = min(0.25, 4.0 / max(m, 1))
    for i in range(m):
        for j in range(i + 1, m):
            if rng.random() < prob:
                adj[order[i], order[j]] = 1
    return adj


def tabu_search(stats: SufficientStats, cfg: SearchConfig | None = None) -> Dag:
    """Best DAG found by tabu-augmented hill climbing; deterministic per seed.

    The first run starts from the empty graph; each configured restart starts
    from a seeded random DAG and the highest-scoring result wins.
    """
    cfg = cfg or SearchConfig()
    m = len(stats.items)
    best_adj, best_score = _run_kernel(stats, cfg, np.zeros((m, m), dtype=np.int8))
    for restart in range(cfg.restarts):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0x5EED, restart)))
        adj, score = _run_kernel(stats, cfg, _random_dag_adjacency(m, rng))
        if score > best_score + 1e-9:
            best_adj, best_score = adj, score
    return Dag.from_adjacency(stats.items, best_adj)


@dataclass(frozen=True)
class ArcStrengthTable:
    """Bootstrap tallies: ``counts[i, j]`` replicates contained arc i -> j."""

    items: tuple[str, ...]
    counts: np.ndarray
    replicates: int

    def strength(self, u: str, v: str) -> float:
        """Fraction of replicates containing u-v in either direction."""
        i, j = self.items.index(u), self.items.index(v)
        return (self.counts[i, j] + self.counts[j, i]) / self.replicates

    def direction(self, u: str, v: str) -> float:
        """Of the replicates containing u-v, the fraction oriented u -> v."""
        i, j = self.items.index(u), self.items.index(v)
        both = self.counts[i, j] + self.counts[j, i]
        if both == 0:
            return 0.0
        return self.counts[i, j] / both

    def to_csv(self, buf=None) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["from", "to", "strength", "direction"])
        m = len(self.items)
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                both = self.counts[i, j] + self.counts[j, i]
                if both == 0:
                    continue
                writer.writerow(
                    [
                        self.items[i],
                        self.items[j],
                        f"{both / self.replicates:.6g}",
                        f"{self.counts[i, j] / both:.6g}",
                    ]
                )
        text = out.getvalue()
        if buf is not None:
            buf.write(text)
        return text


def bootstrap_strengths(
    table,
    replicates: int,
    sample_size: int = 1000,
    cfg: SearchConfig | None = None,
    threads: int | None = None,
) -> ArcStrengthTable:
    """Arc inclusion/direction frequencies over bootstrap replicates.

    Each replicate draws ``sample_size`` rows with replacement using the seed
    stream ``(cfg.seed, replicate)``, learns a DAG and tallies its arcs.
    """
    cfg = cfg or SearchConfig()
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")
    if sample_size < 2:
        raise ValidationError("sample_size must be >= 2")
    rows = np.asarray(table.rows, dtype=np.float64)
    if not np.isfinite(rows).all():
        raise ValidationError("bootstrap requires a complete table")
    items = tuple(table.items)
    n = rows.shape[0]

    def one(replicate: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, replicate)))
        idx = rng.integers(0, n, size=sample_size)
        stats = stats_from_matrix(rows[idx], items)
        adj, _ = _run_kernel(stats, cfg, np.zeros((len(items), len(items)), dtype=np.int8))
        return adj

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            adjs = list(pool.map(one, range(replicates)))
    else:
        adjs = [one(r) for r in range(replicates)]

    counts = np.zeros((len(items), len(items)), dtype=np.int64)
    for adj in adjs:
        counts += adj
    return ArcStrengthTable(items=items, counts=counts, replicates=replicates)


def _thresholded_arcs(strengths: ArcStrengthTable, threshold: float):
    """Oriented arcs passing the strength threshold plus tied-direction pairs."""
    items = strengths.items
    m = len(items)
    counts = strengths.counts
    arcs = []  # (u, v, strength, direction)
    undirected = []
    for i in range(m):
        for j in range(i + 1, m):
            both = counts[i, j] + counts[j, i]
            if both == 0:
                continue
            strength = both / strengths.replicates
            if strength < threshold:
                continue
            d_ij = counts[i, j] / both
            if d_ij == 0.5:
                undirected.append((items[i], items[j]))
            elif d_ij > 0.5:
                arcs.append((items[i], items[j], strength, d_ij))
            else:
                arcs.append((items[j], items[i], strength, 1.0 - d_ij))
    return arcs, undirected


def _strongly_connected(nodes, arc_set):
    """Tarjan SCC; iterative to keep recursion limits out of the picture."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    result = []
    counter = [0]
    children = {n: sorted(v for u, v in arc_set if u == n) for n in nodes}

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(children[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for child in it:
                if child not in index:
                    index[child] = low[child] = counter[0]
                    counter[0] += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(children[child])))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == node:
                        break
                result.append(comp)
    return result


def average_network(strengths: ArcStrengthTable, threshold: float = 0.5) -> Dag:
    """Consensus DAG: pairs at/above the threshold, majority orientation.

    Pairs split exactly 50/50 stay undirected and are left out of the DAG.  If
    the oriented arcs contain a cycle, the cycle arc with the smallest
    strength*direction product is dropped (repeatedly) with a warning.
    """
    if not (0.0 < threshold <= 1.0):
        raise ValidationError("threshold must be in (0, 1]")
    arcs, undirected = _thresholded_arcs(strengths, threshold)
    for u, v in undirected:
        warnings.warn(f"pair {u}-{v} has no majority direction; left undirected")
    dag, _ = _repair_cycles(strengths.items, arcs)
    return dag


def _repair_cycles(items, arcs):
    arc_set = {(u, v): (s, d) for u, v, s, d in arcs}
    dropped = []
    while True:
        cyclic = [
            comp for comp in _strongly_connected(items, set(arc_set)) if len(comp) > 1
        ]
        if not cyclic:
            break
        in_cycles = [
            (u, v)
            for (u, v) in arc_set
            if any(u in comp and v in comp for comp in cyclic)
        ]
        u, v = min(in_cycles, key=lambda a: (arc_set[a][0] * arc_set[a][1], a))
        s, d = arc_set.pop((u, v))
        dropped.append((u, v))
        warnings.warn(
            f"dropped arc {u}->{v} (strength*direction {s * d:.4g}) to break a cycle"
        )
    return Dag(items, set(arc_set)), dropped


@dataclass(frozen=True)
class StabilityReport:
    """Mean/sd of arc counts in the averaged network per replicate budget."""

    entries: tuple[dict, ...]

    def to_csv(self, buf=None) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["replicates", "directed_mean", "directed_sd", "undirected_mean", "undirected_sd"]
        )
        for e in self.entries:
            writer.writerow(
                [
                    e["replicates"],
                    f"{e['directed_mean']:.6g}",
                    f"{e['directed_sd']:.6g}",
                    f"{e['undirected_mean']:.6g}",
                    f"{e['undirected_sd']:.6g}",
                ]
            )
        text = out.getvalue()
        if buf is not None:
            buf.write(text)
        return text


def _derived_seed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence((seed,) + tags).generate_state(1)[0])


def stability_curve(
    table,
    epochs,
    repeats: int,
    sample_size: int = 1000,
    cfg: SearchConfig | None = None,
    threshold: float = 0.5,
    threads: int | None = None,
) -> StabilityReport:
    """Averaged-network arc counts across bootstrap budgets.

    For every replicate count R, the bootstrap + averaging pipeline runs
    ``repeats`` times with distinct derived seeds; directed and undirected arc
    counts are summarized as mean and (population) standard deviation.
    """
    cfg = cfg or SearchConfig()
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    entries = []
    for epoch_no, big_r in enumerate(epochs):
        directed = []
        undirected = []
        for rep in range(repeats):
            run_cfg = replace(cfg, seed=_derived_seed(cfg.seed, epoch_no, rep))
            strengths = bootstrap_strengths(
                table, big_r, sample_size=sample_size, cfg=run_cfg, threads=threads
            )
            arcs, und = _thresholded_arcs(strengths, threshold)
            dag, _ = _repair_cycles(strengths.items, arcs)
            directed.append(len(dag.arcs))
            undirected.append(len(und))
        entries.append(
            {
                "replicates": int(big_r),
                "directed_mean": float(np.mean(directed)),
                "directed_sd": float(np.std(directed)),
                "undirected_mean": float(np.mean(undirected)),
                "undirected_sd": float(np.std(undirected)),
            }
        )
    return StabilityReport(entries=tuple(entries))
