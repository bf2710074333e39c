"""Command-line interface.

Subcommands: ``generate`` writes a pairs file from a named example;
``compare`` runs both identification pipelines and writes a JSON report plus
PPM images; ``multirun`` tabulates every restart of the alternating ascent;
``bounds`` evaluates the Frobenius-KL bound chain for a fixed partition;
``render`` draws the estimated transition matrix.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .bounds import frobenius_kl_bound
from .dbmr import Affiliation, output_partition as derive_output_partition, reduce_with_affiliation
from .generators import GyreConfig, gen_double_gyre, gen_interval_map, gen_three_coherent
from .model import estimate, ingest_pairs, prune_empty
from .projection import pythagoras_check, verify_factorization
from .report import (
    TRACE_FIELDS,
    compare_experiment,
    multirun_experiment,
    render_compare_images,
    render_matrix_image,
    run_table_fields,
    write_csv,
)
from .svd import Partition

logger = logging.getLogger(__name__)

_EXAMPLES = ("three-coherent", "interval-map", "double-gyre")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohsets",
        description="Coherent-set identification in discrete transition data",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("data", nargs="?", help="pairs or counts file (omit with --example)")
    data.add_argument("--example", choices=_EXAMPLES, help="generate this example instead")
    data.add_argument("--epsilon", type=int, default=0,
                      help="window half-width for categorical noise (default 0)")
    data.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    gyre = data.add_argument_group("double-gyre overrides")
    gyre.add_argument("--A", type=float, default=0.25, dest="amplitude")
    gyre.add_argument("--delta", type=float, default=0.25)
    gyre.add_argument("--omega", type=float, default=2.0 * np.pi)
    gyre.add_argument("--t0", type=float, default=0.0)
    gyre.add_argument("--t1", type=float, default=40.0)
    gyre.add_argument("--step", type=float, default=0.01)
    gyre.add_argument("--rho", type=float, default=1.0 / 32.0)
    gyre.add_argument("--points-per-box", type=int, default=100)

    fit = argparse.ArgumentParser(add_help=False)
    fit.add_argument("--rank", type=int, default=3, help="latent states / truncation rank")
    fit.add_argument("--runs", type=int, default=100, help="random restarts (default 100)")
    fit.add_argument("--hmax", type=int, default=500, help="update-pair cap per run")
    fit.add_argument("--tol", type=float, default=0.0,
                     help="objective stall tolerance (default 0: exact equality)")

    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", parents=[data], help="write a pairs file")
    p_gen.add_argument("--out", required=True, help="output pairs file")
    p_gen.set_defaults(func=cmd_generate)

    p_cmp = sub.add_parser("compare", parents=[data, fit],
                           help="run both pipelines and report")
    p_cmp.add_argument("--out", default="report.json", help="report path (default report.json)")
    p_cmp.add_argument("--no-images", action="store_true", help="skip PPM rendering")
    p_cmp.set_defaults(func=cmd_compare)

    p_multi = sub.add_parser("multirun", parents=[data, fit],
                             help="tabulate every alternating-ascent restart")
    p_multi.add_argument("--trace", action="store_true", help="write per-iterate rows")
    p_multi.add_argument("--out", default="multirun", help="output base name")
    p_multi.set_defaults(func=cmd_multirun)

    p_bounds = sub.add_parser("bounds", parents=[data],
                              help="evaluate the Frobenius-KL bound chain")
    p_bounds.add_argument("labels", nargs="?", help="labels file fixing the input partition")
    p_bounds.add_argument("--kappa", choices=("post", "pr", "q1", "q2"), default="post")
    p_bounds.add_argument("--out", help="write the report here instead of stdout")
    p_bounds.set_defaults(func=cmd_bounds)

    p_render = sub.add_parser("render", parents=[data],
                              help="draw the estimated transition matrix")
    p_render.add_argument("--labels", help="labels file for the partition strips")
    p_render.add_argument("--out", required=True, help="output PPM path")
    p_render.set_defaults(func=cmd_render)
    return parser


def _gyre_config(args) -> GyreConfig:
    return GyreConfig(
        amplitude=args.amplitude, delta=args.delta, omega=args.omega,
        t_start=args.t0, t_end=args.t1, step=args.step,
        rho=args.rho, points_per_box=args.points_per_box, seed=args.seed,
    )


def _generate(args):
    """Build (dataset, default labels or None, metadata) for --example."""
    if args.example == "three-coherent":
        dataset, partition = gen_three_coherent(epsilon=args.epsilon, seed=args.seed)
        meta = {"example": args.example, "epsilon": args.epsilon, "seed": args.seed,
                "default_labels": [int(v) for v in partition.labels],
                "n_latent": partition.n_clusters}
        return dataset, partition.labels, meta
    if args.example == "interval-map":
        dataset, partition = gen_interval_map(epsilon=args.epsilon, seed=args.seed)
        meta = {"example": args.example, "epsilon": args.epsilon, "seed": args.seed,
                "default_labels": [int(v) for v in partition.labels],
                "n_latent": partition.n_clusters}
        return dataset, partition.labels, meta
    dataset, meta = gen_double_gyre(_gyre_config(args))
    return dataset, None, meta


def _load_file(path: str):
    """Read a pairs or counts file, sniffing the format from the first byte."""
    target = Path(path)
    if not target.exists():
        raise ValueError(f"no such file: {path}")
    with open(target, "r", encoding="utf-8") as fh:
        head = fh.readline().lstrip()
    if head.startswith("#"):
        counts = ingest_pairs(dataio.read_pairs(target))
    else:
        counts = dataio.read_counts(target)
    labels = None
    sidecar = target.with_name(target.name + ".meta.json")
    if sidecar.exists():
        meta = dataio.read_json(sidecar)
        if meta.get("default_labels") is not None:
            labels = np.asarray(meta["default_labels"], dtype=np.int64)
    else:
        meta = {}
    return counts, labels, {"source": str(path), **{
        k: meta[k] for k in ("example", "epsilon", "seed") if k in meta
    }}


def _resolve(args):
    """Return (pruned counts, row_map, col_map, pruned default labels, provenance,
    original shape)."""
    if args.data is not None:
        counts, labels, provenance = _load_file(args.data)
    elif args.example is not None:
        dataset, labels, meta = _generate(args)
        counts = ingest_pairs(dataset)
        provenance = {"source": args.example,
                      **{k: meta[k] for k in ("example", "epsilon", "seed") if k in meta}}
    else:
        raise ValueError("provide a data file or --example")
    original_shape = counts.shape
    pruned, row_map, col_map = prune_empty(counts)
    if labels is not None:
        if labels.size != original_shape[1]:
            raise ValueError(
                f"default labels cover {labels.size} of {original_shape[1]} inputs"
            )
        labels = labels[col_map - 1]
    return pruned, row_map, col_map, labels, provenance, original_shape


def _file_labels(path: str, col_map: np.ndarray, original_n: int):
    """Load a labels file covering either all original or only kept inputs."""
    raw, n_latent = dataio.read_labels(path)
    if raw.size == original_n:
        return raw[col_map - 1], n_latent
    if raw.size == col_map.size:
        return raw, n_latent
    raise ValueError(
        f"labels file covers {raw.size} inputs, expected {original_n} "
        f"(or {col_map.size} after pruning)"
    )


def cmd_generate(args) -> int:
    dataset, _, meta = _generate_checked(args)
    dataio.write_pairs(args.out, dataset)
    dataio.write_json(Path(args.out).with_name(Path(args.out).name + ".meta.json"), meta)
    print(f"wrote {dataset.size} records over {dataset.n_inputs} -> "
          f"{dataset.n_outputs} categories to {args.out}")
    return 0


def _generate_checked(args):
    if args.example is None:
        raise ValueError("generate requires --example")
    return _generate(args)


def cmd_compare(args) -> int:
    counts, row_map, col_map, labels, provenance, _ = _resolve(args)
    report, artifacts = compare_experiment(
        counts, rank=args.rank, runs=args.runs, seed=args.seed,
        max_steps=args.hmax, tol=args.tol, default_labels=labels,
        provenance=provenance,
    )
    report["dataset"]["kept_inputs"] = [int(v) for v in col_map]
    report["dataset"]["kept_outputs"] = [int(v) for v in row_map]
    out = Path(args.out)
    if not args.no_images:
        report["images"] = render_compare_images(artifacts, out)
    dataio.write_json(out, report)
    likelihoods = report["likelihoods"]
    print(f"wrote {out}")
    print(f"log-likelihood reference={likelihoods['reference']:.1f} "
          f"svd={likelihoods['svd']:.1f} dbmr={likelihoods['dbmr']:.1f}")
    print(f"coherence full={report['singular_values']['full_coherence']:.4f} "
          f"reduced={report['singular_values']['reduced_coherence']:.4f}")
    return 0


def cmd_multirun(args) -> int:
    counts, _, _, _, provenance, _ = _resolve(args)
    summary, run_rows, trace_rows = multirun_experiment(
        counts, rank=args.rank, runs=args.runs, seed=args.seed,
        max_steps=args.hmax, tol=args.tol, trace=args.trace,
    )
    summary["provenance"] = provenance
    base = Path(args.out)
    json_path = base.with_name(base.name + ".json")
    runs_path = base.with_name(base.name + ".runs.csv")
    dataio.write_json(json_path, summary)
    write_csv(runs_path, run_table_fields(args.rank, min(counts.shape)), run_rows)
    written = [str(json_path), str(runs_path)]
    if args.trace:
        trace_path = base.with_name(base.name + ".trace.csv")
        write_csv(trace_path, TRACE_FIELDS, trace_rows)
        written.append(str(trace_path))
    print(f"best run {summary['best_run']} objective {summary['best_objective']:.4f}")
    print("wrote " + " ".join(written))
    return 0


def cmd_bounds(args) -> int:
    counts, _, col_map, default_labels, provenance, original_shape = _resolve(args)
    if args.labels is not None:
        labels, n_latent = _file_labels(args.labels, col_map, original_shape[1])
    elif default_labels is not None:
        labels = default_labels
        n_latent = int(labels.max())
    else:
        raise ValueError("bounds requires a labels file or an example with default labels")
    model = estimate(counts)
    reduced = reduce_with_affiliation(
        counts, Affiliation(labels=labels, n_latent=n_latent), model=model
    )
    bound = frobenius_kl_bound(counts, model, reduced, kappa_choice=args.kappa)
    residuals = verify_factorization(model, reduced)
    lhs, rhs = pythagoras_check(model.rescaled, reduced.approx_rescaled)
    payload = {
        "provenance": provenance,
        "bound": bound.to_dict(),
        "factorization_residuals": {
            "factorization": residuals.factorization,
            "input_fixed": residuals.input_fixed,
            "output_marginal": residuals.output_marginal,
        },
        "pythagoras": {"gap_sq": lhs, "norm_difference": rhs},
    }
    text = dataio.canonical_json(payload)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_render(args) -> int:
    counts, _, col_map, default_labels, _, original_shape = _resolve(args)
    model = estimate(counts)
    input_partition = None
    output_strip = None
    if args.labels is not None:
        labels, n_latent = _file_labels(args.labels, col_map, original_shape[1])
        input_partition = Partition(labels=labels, n_clusters=n_latent)
    elif default_labels is not None:
        input_partition = Partition(
            labels=default_labels, n_clusters=int(default_labels.max())
        )
    if input_partition is not None:
        reduced = reduce_with_affiliation(
            counts,
            Affiliation(
                labels=input_partition.labels, n_latent=input_partition.n_clusters
            ),
            model=model,
        )
        output_strip = derive_output_partition(reduced)
    render_matrix_image(
        model.matrix, args.out,
        input_partition=input_partition, output_partition=output_strip,
    )
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
