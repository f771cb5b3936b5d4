"""Command-line interface.

Exit codes: 0 on success, 2 for configuration or parse problems, 3 for
numerical failures (singular matrices, and non-convergence under --strict).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import (
    DegenerateGroup,
    DegenerateSpectrum,
    DimensionError,
    EmptyAfterFilter,
    InvalidInput,
    InvalidParameter,
    MultifuseError,
    ParseError,
    SingularMatrix,
)
from .pipeline import (
    PipelineConfig,
    build_layers,
    dumps_json17,
    export_graph,
    filter_entities,
    fmt17,
    load_abundance_tables,
    load_similarity_csv,
    run_pipeline,
    write_similarity_csv,
)
from .netanalysis import distance_correlation, louvain_communities
from .sma import BarycenterConfig, rv_matrix, solve_barycenter, uniform_weights, weights_frobenius, weights_rowsum
from .snf import SnfConfig, snf_fuse

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

CONFIG_ERRORS = (
    ParseError,
    InvalidInput,
    InvalidParameter,
    DimensionError,
    DegenerateGroup,
    EmptyAfterFilter,
    FileNotFoundError,
)
NUMERIC_ERRORS = (SingularMatrix, DegenerateSpectrum)

METHOD_ALIASES = {
    "snf": "snf",
    "sma-f": "sma-frobenius",
    "sma-r": "sma-riemannian",
    "sma-w": "sma-wasserstein",
}


class NonConvergence(MultifuseError):
    """Raised under --strict when a solver hits its iteration cap."""


def _sigma_arg(value: str):
    if value == "auto":
        return None
    try:
        return float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("sigma must be a number or 'auto'") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multifuse",
        description="Build, fuse and analyse multiplex similarity networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full pipeline from a JSON config")
    p_run.add_argument("--config", required=True, help="path to a JSON config file")
    p_run.add_argument("--strict", action="store_true", help="fail on non-convergence")

    p_fuse = sub.add_parser("fuse", help="fuse abundance tables with one method")
    p_fuse.add_argument("--method", required=True, choices=sorted(METHOD_ALIASES))
    p_fuse.add_argument("--inputs", required=True, nargs="+", help="abundance CSVs, one per layer")
    p_fuse.add_argument("--sigma", type=_sigma_arg, default=None, help="RBF bandwidth or 'auto'")
    p_fuse.add_argument("--k", type=int, default=None, help="SNF neighbourhood size")
    p_fuse.add_argument("--epsilon", type=float, default=1e-6, help="SNF convergence tolerance")
    p_fuse.add_argument("--max-iter", type=int, default=None, help="iteration cap")
    p_fuse.add_argument("--tol", type=float, default=1e-10, help="barycenter tolerance")
    p_fuse.add_argument("--jitter", type=float, default=None, help="PD regularization for barycenters")
    p_fuse.add_argument(
        "--weights", default=None, choices=["uniform", "rv-pc", "rv-rowsum"],
        help="layer weights (default: the method's natural companion)",
    )
    p_fuse.add_argument("--out", required=True, help="output directory")
    p_fuse.add_argument("--strict", action="store_true", help="fail on non-convergence")

    p_dcor = sub.add_parser("dcor", help="distance correlation of two matrix CSVs")
    p_dcor.add_argument("matrix_a")
    p_dcor.add_argument("matrix_b")

    p_cluster = sub.add_parser("cluster", help="Louvain communities of a matrix CSV")
    p_cluster.add_argument("matrix")
    p_cluster.add_argument("--resolution", type=float, default=1.0)
    p_cluster.add_argument("--seed", type=int, default=0)

    p_export = sub.add_parser("export", help="export a matrix CSV as a graph file")
    p_export.add_argument("matrix")
    p_export.add_argument("--format", required=True, choices=["edge-list", "graphml", "csv-matrix"])
    p_export.add_argument("--out", required=True, help="output file")
    p_export.add_argument("--threshold", type=float, default=0.0, help="drop edges at or below this weight")
    p_export.add_argument("--resolution", type=float, default=1.0, help="Louvain resolution (graphml)")
    p_export.add_argument("--seed", type=int, default=0, help="Louvain seed (graphml)")
    return parser


def _cmd_run(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    report = run_pipeline(cfg)
    bad = [name for name, r in report.fusion.items() if not r.converged]
    for name, r in report.fusion.items():
        status = "converged" if r.converged else "NOT converged"
        print(f"{name}: {status} after {r.iterations} iterations (residual {fmt17(r.residual)})")
    print(f"artifacts written to {cfg.output_dir}")
    if bad and args.strict:
        raise NonConvergence(f"methods did not converge: {', '.join(bad)}")
    return EXIT_OK


def _fuse_weights(choice: str | None, method: str, multiplex) -> object:
    if method == "snf":
        return None
    if choice == "uniform":
        return uniform_weights(multiplex.m)
    rv = rv_matrix(multiplex)
    if choice == "rv-pc":
        return weights_frobenius(rv)
    if choice == "rv-rowsum":
        return weights_rowsum(rv)
    # method-paired default
    if method == "sma-frobenius":
        return weights_frobenius(rv)
    return weights_rowsum(rv)


def _cmd_fuse(args) -> int:
    method = METHOD_ALIASES[args.method]
    tables = load_abundance_tables(args.inputs)
    tables, _ = filter_entities(tables)
    multiplex, sigmas = build_layers(tables, args.sigma)
    weights = _fuse_weights(args.weights, method, multiplex)

    if method == "snf":
        cfg = SnfConfig(k=args.k, epsilon=args.epsilon, max_iter=args.max_iter or 100)
        result = snf_fuse(multiplex, cfg)
    else:
        bc = BarycenterConfig(
            method.removeprefix("sma-"),
            tol=args.tol,
            max_iter=args.max_iter or 1000,
            jitter=args.jitter,
        )
        result = solve_barycenter(multiplex, weights, bc)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    layer = result.as_layer()
    write_similarity_csv(out / f"monoplex_{method}.csv", layer.labels, layer.S)
    summary = {
        "method": method,
        "layers": list(multiplex.names),
        "rbf_sigma": sigmas,
        "converged": result.converged,
        "iterations": result.iterations,
        "residual": result.residual,
        "weights": None if result.weights is None else list(result.weights),
    }
    (out / "fuse_report.json").write_text(dumps_json17(summary) + "\n")
    status = "converged" if result.converged else "NOT converged"
    print(f"{method}: {status} after {result.iterations} iterations")
    print(f"monoplex written to {out / f'monoplex_{method}.csv'}")
    if not result.converged and args.strict:
        raise NonConvergence(f"{method} did not converge within the iteration cap")
    return EXIT_OK


def _cmd_dcor(args) -> int:
    a = load_similarity_csv(args.matrix_a)
    b = load_similarity_csv(args.matrix_b)
    print(fmt17(distance_correlation(a, b)))
    return EXIT_OK


def _cmd_cluster(args) -> int:
    layer = load_similarity_csv(args.matrix)
    part = louvain_communities(layer, resolution=args.resolution, seed=args.seed)
    print("label,community")
    for lab, c in zip(part.labels, part.community):
        print(f"{lab},{int(c)}")
    print(f"# modularity {fmt17(part.modularity)}")
    return EXIT_OK


def _cmd_export(args) -> int:
    layer = load_similarity_csv(args.matrix)
    partition = None
    if args.format == "graphml":
        partition = louvain_communities(layer, resolution=args.resolution, seed=args.seed)
    export_graph(layer, partition, args.format, args.out, args.threshold)
    print(f"wrote {args.out}")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "fuse": _cmd_fuse,
    "dcor": _cmd_dcor,
    "cluster": _cmd_cluster,
    "export": _cmd_export,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
