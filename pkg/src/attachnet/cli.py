"""Command-line interface wiring the pipeline end to end.

Stages mirror the library: ``ingest`` normalizes a raw survey export and
reports demographics, ``learn`` runs the bootstrapped structure search,
``fit`` estimates parameters on a fixed structure, ``analyze`` computes
communities/centralities/coupling, ``influence`` reports path products, and
``compare`` hosts the statistical comparison tools.  ``export`` writes the
bundled reference model; ``full-repro`` chains everything on a raw corpus
download (hours of compute at the reference replicate counts).

Exit codes: 0 success, 1 I/O failure, 2 invalid inputs or flags.

Examples::

    attachnet ingest data.csv --filter-standard -o cohort.csv
    attachnet learn cohort.csv -R 3000 -m 1000 --seed 7 -o model.json
    attachnet analyze model.json --out-dir reports/
    attachnet influence model.json --from Q05 --to Q03 -k 2
    attachnet compare kmeans factors.csv -k 2
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import fixtures
from .analytics import (
    Partition,
    betweenness,
    communities_walktrap,
    degree_centrality,
    pagerank,
)
from .compare import (
    FactorTable,
    confidence_ellipse,
    edge_set_correlation,
    kmeans_best_seed,
    mann_whitney_u,
    pca_project,
)
from .dag import Dag, roots_and_terminals
from .errors import AttachnetError, ValidationError
from .influence import influence_result, cluster_coupling, median_abs_coefficient
from .ingest import (
    CohortFilter,
    ColumnSchema,
    demographic_summary,
    filter_cohort,
    parse_responses,
    read_codebook,
    serialize_responses,
    standard_filter,
)
from .params import fit_mle, intercept_report, read_model, write_model
from .structure import (
    SearchConfig,
    average_network,
    bootstrap_strengths,
    stability_curve,
)


def _default_seed() -> int:
    env = os.environ.get("ATTACHNET_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"ATTACHNET_SEED must be an integer, got {env!r}")
    return 1


def _parse_age_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise ValidationError(f"age range must look like 18:60, got {text!r}")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise ValidationError(f"expected a comma-separated integer list, got {text!r}")


def _write(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


def _load_model(args):
    if getattr(args, "fixture", False):
        return fixtures.load_fixture_model()
    if args.model is None:
        raise ValidationError("a model JSON path (or --fixture) is required")
    return read_model(args.model)


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        tabu_len=args.tabu_len,
        max_iter=args.max_iter,
        max_parents=args.max_parents,
        restarts=args.restarts,
        seed=args.seed,
        metric=args.metric,
    )


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    schema = ColumnSchema(age=args.age_col, gender=args.gender_col, country=args.country_col)
    codebook = read_codebook(args.codebook) if args.codebook else None
    table = parse_responses(args.input, schema=schema, codebook=codebook)
    if table.dropped_rows:
        print(f"dropped {table.dropped_rows} malformed rows", file=sys.stderr)

    f = standard_filter() if args.filter_standard else CohortFilter()
    if args.age:
        f = CohortFilter(
            age_range=_parse_age_range(args.age),
            genders=f.genders,
            regions=f.regions,
            require_complete=f.require_complete,
        )
    if args.genders:
        f = CohortFilter(f.age_range, frozenset(args.genders.split(",")), f.regions, f.require_complete)
    if args.regions:
        f = CohortFilter(f.age_range, f.genders, frozenset(args.regions.split(",")), f.require_complete)
    if args.require_complete:
        f = CohortFilter(f.age_range, f.genders, f.regions, True)
    if f != CohortFilter():
        table = filter_cohort(table, f)

    report = demographic_summary(table)
    print(f"rows: {report.n}")
    print("region:")
    for group, count in sorted(report.merged_america().items(), key=lambda kv: -kv[1]):
        if count:
            print(f"  {group:14s} {count}")
    print("gender:")
    for group, count in report.gender.items():
        if count:
            print(f"  {group:14s} {count}")
    print("age band:")
    for group, count in report.age_band.items():
        if count:
            print(f"  {group:14s} {count}")

    if args.output:
        _write(args.output, serialize_responses(table))
        print(f"wrote {args.output}")
    if args.report:
        lines = ["dimension,group,count"]
        for dim, counts in (("region", report.region), ("gender", report.gender), ("age", report.age_band)):
            lines += [f"{dim},{g},{c}" for g, c in counts.items()]
        _write(args.report, "\n".join(lines) + "\n")
    return 0


def cmd_learn(args) -> int:
    table = parse_responses(args.input)
    complete = CohortFilter(require_complete=True)
    table = filter_cohort(table, complete)
    cfg = _search_config(args)

    if args.stability:
        epochs = _parse_int_list(args.stability)
        report = stability_curve(
            table,
            epochs,
            repeats=args.repeats,
            sample_size=args.sample_size,
            cfg=cfg,
            threshold=args.threshold,
            threads=args.threads,
        )
        text = report.to_csv()
        if args.output:
            _write(args.output, text)
            print(f"wrote {args.output}")
        else:
            print(text, end="")
        return 0

    strengths = bootstrap_strengths(
        table,
        replicates=args.replicates,
        sample_size=args.sample_size,
        cfg=cfg,
        threads=args.threads,
    )
    if args.strengths:
        _write(args.strengths, strengths.to_csv())
        print(f"wrote {args.strengths}")
    dag = average_network(strengths, threshold=args.threshold)
    print(f"averaged network: {len(dag.arcs)} arcs over {len(dag.nodes)} nodes")
    params = fit_mle(dag, table)
    out = args.output or "model.json"
    _write(out, write_model(dag, params))
    print(f"wrote {out}")
    return 0


def cmd_fit(args) -> int:
    table = parse_responses(args.input)
    table = filter_cohort(table, CohortFilter(require_complete=True))
    if args.dag:
        with open(args.dag, newline="", encoding="utf-8") as fh:
            dag = Dag.from_arc_csv(fh, nodes=table.items)
    else:
        dag, _ = _load_model(args)
    params = fit_mle(dag, table, unbiased=args.unbiased)
    out = args.output or "model.json"
    _write(out, write_model(dag, params))
    mean_sd = float(np.mean([params.residual_sd[n] for n in dag.nodes]))
    print(f"fit {len(dag.arcs)} coefficients; mean residual sd {mean_sd:.4f}")
    print(f"wrote {out}")
    return 0


def cmd_analyze(args) -> int:
    dag, params = _load_model(args)
    if not dag.arcs:
        raise ValidationError("model has no arcs; nothing to analyze")
    outdir = Path(args.out_dir) if args.out_dir else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)

    roots, terminals = roots_and_terminals(dag)
    print(f"roots: {', '.join(sorted(roots))}")
    print(f"terminals: {', '.join(sorted(terminals))}")
    print(f"median |coefficient|: {median_abs_coefficient(params):.5f}")

    deg_in, deg_out = degree_centrality(dag)
    bet = betweenness(dag, params)
    pr = pagerank(dag, params, damping=args.damping)
    print(f"max degree out: {deg_out.argmax()}; max degree in: {deg_in.argmax()}")
    print(f"top betweenness: {', '.join(bet.top(3))}")
    print(f"top pagerank: {', '.join(pr.top(3))}")

    if args.clusters:
        with open(args.clusters, newline="", encoding="utf-8") as fh:
            partition = Partition.from_csv(fh)
    elif getattr(args, "fixture", False):
        partition = fixtures.load_fixture_partition()
        walked = communities_walktrap(dag, params, steps=args.steps)
        print(f"walktrap finds {len(walked.clusters())} clusters; "
              f"coupling below uses the reference labels")
    else:
        partition = communities_walktrap(dag, params, steps=args.steps)
    sizes = {label: len(m) for label, m in sorted(partition.clusters().items())}
    print(f"clusters: {sizes}")

    coupling = cluster_coupling(dag, params, partition)
    for (a, b), value in sorted(coupling.items()):
        print(f"  coupling {a}->{b}: {value:.5f}")

    pol = fixtures.load_polarity()
    if all(n in pol for n in dag.nodes):
        report = intercept_report(params, pol)
        if outdir:
            _write(outdir / "intercepts.csv", report.to_csv())

    if outdir:
        _write(outdir / "degree_in.csv", deg_in.to_csv())
        _write(outdir / "degree_out.csv", deg_out.to_csv())
        _write(outdir / "betweenness.csv", bet.to_csv())
        _write(outdir / "pagerank.csv", pr.to_csv())
        _write(outdir / "partition.csv", partition.to_csv())
        coupling_lines = ["from_cluster,to_cluster,sum_abs_coefficient"] + [
            f"{a},{b},{v:.5f}" for (a, b), v in sorted(coupling.items())
        ]
        _write(outdir / "coupling.csv", "\n".join(coupling_lines) + "\n")
        _write(outdir / "arcs.csv", dag.to_arc_csv())
        print(f"wrote reports to {outdir}")
    if args.dot:
        weights = {(p, c): v for p, c, v in params.arc_items()}
        _write(args.dot, dag.to_dot(partition=partition.assignment, weights=weights))
        print(f"wrote {args.dot}")
    return 0


def cmd_influence(args) -> int:
    dag, params = _load_model(args)
    result = influence_result(dag, params, args.source, args.target, k=args.k, cap=args.cap)
    print(f"total influence {args.source} -> {args.target}: {result.total:.4f}")
    if result.paths:
        for rank, path in enumerate(result.paths, start=1):
            print(f"  {rank}. {'->'.join(path.nodes)}  product {path.product:.4f}")
        print(f"  sum of listed products: {sum(p.product for p in result.paths):.4f}")
    if args.output:
        _write(args.output, result.to_csv())
    return 0


def _read_factor_table(path: str) -> FactorTable:
    if path in fixtures.FACTOR_TABLES:
        return fixtures.load_factor_table(path)
    with open(path, newline="", encoding="utf-8") as fh:
        return FactorTable.from_csv(fh)


def cmd_compare_kmeans(args) -> int:
    data = _read_factor_table(args.factors)
    lo, hi = (int(x) for x in args.seeds.split(":"))
    result = kmeans_best_seed(data, k=args.k, seed_range=(lo, hi))
    print(f"best seed {result.best_seed}; within-cluster ss {result.total_within_ss:.5f}")
    for label, members in sorted(result.clusters().items()):
        print(f"  cluster {label}: {', '.join(sorted(members))}")
    if args.output:
        lines = ["item,cluster"] + [f"{i},{c}" for i, c in sorted(result.assignment.items())]
        _write(args.output, "\n".join(lines) + "\n")
    return 0


def cmd_compare_edges(args) -> int:
    ours = fixtures.load_edge_weights(args.ours)
    theirs = fixtures.load_edge_weights(args.theirs)
    n, r, t, p = edge_set_correlation(ours, theirs, mode=args.mode)
    print(f"{args.mode}: n={n} r={r:.3f} t={t:.3f} p={p:.3g}")
    return 0


def cmd_compare_mwu(args) -> int:
    with open(args.values, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    value_col = [c for c in rows[0] if c != "item"][0]
    values = {r["item"]: float(r[value_col]) for r in rows}
    if args.groups == "polarity":
        groups = fixtures.load_polarity()
    else:
        with open(args.groups, newline="", encoding="utf-8") as fh:
            groups = {r["item"]: r["group"] for r in csv.DictReader(fh)}
    names = sorted({groups[i] for i in values})
    if len(names) != 2:
        raise ValidationError(f"need exactly 2 groups, found {names}")
    a = [v for i, v in values.items() if groups[i] == names[0]]
    b = [v for i, v in values.items() if groups[i] == names[1]]
    u, p = mann_whitney_u(a, b)
    print(f"{names[0]} (n={len(a)}) vs {names[1]} (n={len(b)}): U={u:g} p={p:.3g}")
    return 0


def cmd_compare_pca(args) -> int:
    data = _read_factor_table(args.factors)
    projected = pca_project(data, dims=args.dims)
    text = projected.to_csv()
    if projected.variance_explained:
        shares = ", ".join(f"{v:.1%}" for v in projected.variance_explained)
        print(f"variance explained: {shares}")
    if args.output:
        _write(args.output, text)
    else:
        print(text, end="")
    return 0


def cmd_compare_ellipse(args) -> int:
    with open(args.points, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    cols = list(rows[0])
    pts = [(float(r[cols[-2]]), float(r[cols[-1]])) for r in rows]
    e = confidence_ellipse(pts, level=args.level)
    print(f"center: ({e.center[0]:.4f}, {e.center[1]:.4f})")
    print(f"half-axes: {e.axes[0]:.4f}, {e.axes[1]:.4f}; angle {e.angle:.1f} deg")
    return 0


def cmd_export(args) -> int:
    dag, params = fixtures.load_fixture_model()
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write(outdir / "model.json", write_model(dag, params))
    _write(outdir / "arcs.csv", dag.to_arc_csv())
    partition = fixtures.load_fixture_partition()
    _write(outdir / "clusters.csv", partition.to_csv())
    report = intercept_report(params, fixtures.load_polarity())
    _write(outdir / "intercepts.csv", report.to_csv())
    if args.dot:
        weights = {(p, c): v for p, c, v in params.arc_items()}
        _write(outdir / "network.dot", dag.to_dot(partition=partition.assignment, weights=weights))
    print(f"wrote reference model files to {outdir}")
    return 0


def cmd_full_repro(args) -> int:
    """End-to-end reproduction on a raw corpus export (long-running)."""
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    print("[1/5] ingest + standard cohort filter")
    table = parse_responses(args.input)
    table = filter_cohort(table, standard_filter())
    report = demographic_summary(table)
    print(f"  cohort rows: {report.n}")
    _write(outdir / "cohort.csv", serialize_responses(table))

    cfg = SearchConfig(seed=args.seed)
    if not args.skip_stability:
        print("[2/5] stability curve (this is the long part)")
        epochs = _parse_int_list(args.stability)
        stab = stability_curve(
            table, epochs, repeats=args.repeats, sample_size=args.sample_size,
            cfg=cfg, threads=args.threads,
        )
        _write(outdir / "stability.csv", stab.to_csv())
    else:
        print("[2/5] stability curve skipped")

    print(f"[3/5] bootstrap structure learning (R={args.replicates})")
    strengths = bootstrap_strengths(
        table, replicates=args.replicates, sample_size=args.sample_size,
        cfg=cfg, threads=args.threads,
    )
    _write(outdir / "strengths.csv", strengths.to_csv())
    dag = average_network(strengths, threshold=args.threshold)
    print(f"  averaged network has {len(dag.arcs)} arcs")

    print("[4/5] parameter fit")
    params = fit_mle(dag, table)
    _write(outdir / "model.json", write_model(dag, params))
    mean_sd = float(np.mean([params.residual_sd[n] for n in dag.nodes]))
    print(f"  mean residual sd: {mean_sd:.4f}")

    print("[5/5] analysis reports")
    ns = argparse.Namespace(
        model=str(outdir / "model.json"), fixture=False, out_dir=str(outdir / "analysis"),
        damping=0.85, steps=4, clusters=None, dot=str(outdir / "network.dot"),
    )
    cmd_analyze(ns)
    return 0


# -- parser ------------------------------------------------------------------


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed (env ATTACHNET_SEED)")
    p.add_argument("--tabu-len", type=int, default=10)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--max-parents", type=int, default=None)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--metric", choices=("bic", "aic", "loglik"), default="bic")
    p.add_argument("--threads", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attachnet", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, filter and summarize a survey export")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="write the canonical cohort CSV here")
    p.add_argument("--report", help="write demographic counts CSV here")
    p.add_argument("--filter-standard", action="store_true", help="ages 18:60, female/male, complete rows")
    p.add_argument("--age", help="inclusive age range LO:HI")
    p.add_argument("--genders", help="comma-separated gender labels to keep")
    p.add_argument("--regions", help="comma-separated regions to keep")
    p.add_argument("--require-complete", action="store_true")
    p.add_argument("--codebook", help="key=value demographic code mapping file")
    p.add_argument("--age-col", default="age")
    p.add_argument("--gender-col", default="gender")
    p.add_argument("--country-col", default="country")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("learn", help="bootstrap structure learning / stability curve")
    p.add_argument("input")
    p.add_argument("-R", "--replicates", type=int, default=100)
    p.add_argument("-m", "--sample-size", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("-o", "--output", help="model JSON path (default model.json)")
    p.add_argument("--strengths", help="write the arc strength CSV here")
    p.add_argument("--stability", help="comma-separated replicate counts, e.g. 50,100,200")
    p.add_argument("--repeats", type=int, default=5, help="repeats per stability epoch")
    _add_search_flags(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("fit", help="fit parameters on a fixed structure")
    p.add_argument("input")
    p.add_argument("--dag", help="arc-list CSV (from,to)")
    p.add_argument("--model", help="take the structure from this model JSON")
    p.add_argument("--fixture", action="store_true", help="use the bundled reference structure")
    p.add_argument("--unbiased", action="store_true", help="n-p-1 residual sd denominator")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("analyze", help="communities, centralities, coupling, roots/terminals")
    p.add_argument("model", nargs="?", default=None)
    p.add_argument("--fixture", action="store_true", help="analyze the bundled reference model")
    p.add_argument("--out-dir", help="write plot-ready CSV reports here")
    p.add_argument("--damping", type=float, default=0.85)
    p.add_argument("--steps", type=int, default=4, help="walktrap walk length")
    p.add_argument("--clusters", help="node,cluster CSV overriding walktrap")
    p.add_argument("--dot", help="write a Graphviz file here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("influence", help="total influence and top paths between two items")
    p.add_argument("model", nargs="?", default=None)
    p.add_argument("--fixture", action="store_true")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("-k", type=int, default=None, help="report the k largest-|product| paths")
    p.add_argument("--cap", type=int, default=10**6)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_influence)

    p = sub.add_parser("compare", help="statistical comparisons against other studies")
    csub = p.add_subparsers(dest="compare_command", required=True)

    c = csub.add_parser("kmeans", help="seed-swept Lloyd clustering of factor loadings")
    c.add_argument("factors", help="factor CSV (item,f1,f2,...) or a bundled table name")
    c.add_argument("-k", type=int, required=True)
    c.add_argument("--seeds", default="1:4000", help="inclusive seed range LO:HI")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compare_kmeans)

    c = csub.add_parser("edges", help="correlation between two edge-weight sets")
    c.add_argument("ours", help="edge CSV (item_a,item_b,weight) or 'fixture'")
    c.add_argument("theirs", help="edge CSV or 'external'")
    c.add_argument("--mode", choices=("union", "intersection"), default="union")
    c.set_defaults(func=cmd_compare_edges)

    c = csub.add_parser("mwu", help="Mann-Whitney U between two item groups")
    c.add_argument("values", help="CSV with item,value columns")
    c.add_argument("--groups", default="polarity", help="'polarity' or an item,group CSV")
    c.set_defaults(func=cmd_compare_mwu)

    c = csub.add_parser("pca", help="principal-component projection of factor loadings")
    c.add_argument("factors")
    c.add_argument("--dims", type=int, default=2)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compare_pca)

    c = csub.add_parser("ellipse", help="concentration ellipse of 2-D points")
    c.add_argument("points", help="CSV whose last two columns are x,y")
    c.add_argument("--level", type=float, default=0.95)
    c.set_defaults(func=cmd_compare_ellipse)

    p = sub.add_parser("export", help="write the bundled reference model files")
    p.add_argument("--out-dir", default="reference-model")
    p.add_argument("--dot", action="store_true")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("full-repro", help="end-to-end reproduction on a raw corpus (slow)")
    p.add_argument("input", help="raw survey export")
    p.add_argument("--out-dir", default="full-repro")
    p.add_argument("-R", "--replicates", type=int, default=3000)
    p.add_argument("-m", "--sample-size", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--stability", default="50,100,200,500,1000,1500,3000,5000")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--skip-stability", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_full_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        if hasattr(args, "threads") and args.threads is None:
            args.threads = os.cpu_count()
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AttachnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
