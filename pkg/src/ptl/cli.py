"""Command line interface: ``simulate``, ``fit`` and ``evaluate`` subcommands.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .data import DataSet, load_dataset_csv, standardize
from .harness import emit_results, out_of_sample_r2, run_experiment
from .lasso import LassoOptions
from .simulate import SimConfig, generate_problem
from .transfer import PtlConfig, fit_ptl


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ptl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a synthetic replication study")
    sim.add_argument("--example", type=int, choices=(1, 2, 3, 4), required=True)
    sim.add_argument("--n", type=int, required=True, help="target sample size")
    sim.add_argument("--N", type=int, required=True, dest="source_n",
                     help="per-source sample size")
    sim.add_argument("--p", type=int, default=500, help="covariate dimension")
    sim.add_argument("--s", type=int, default=40, dest="support",
                     help="shared support size")
    sim.add_argument("--h", type=float, default=6.0, dest="contrast_scale",
                     help="scale of the non-transferable contrast")
    sim.add_argument("--reps", type=int, default=100, help="replications")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--estimators", default="lasso,translasso,ptl",
                     help="comma-separated subset of lasso,translasso,ptl")
    sim.add_argument("--folds", type=int, default=5, help="cross-validation folds")
    sim.add_argument("--out", required=True, help="output path (.csv or .json)")
    sim.add_argument("--dump-truth", action="store_true",
                     help="also write the generated ground truth next to --out")
    sim.set_defaults(func=_cmd_simulate)

    fit = sub.add_parser("fit", help="profiled transfer fit from CSV files")
    fit.add_argument("--config", required=True, help="JSON run configuration")
    fit.add_argument("--out", required=True, help="output JSON path")
    fit.add_argument("--standardize", action="store_true",
                     help="center and scale covariate columns after loading")
    fit.set_defaults(func=_cmd_fit)

    ev = sub.add_parser("evaluate", help="repeated two-fold out-of-sample R²")
    ev.add_argument("--config", required=True, help="JSON run configuration")
    ev.add_argument("--repeats", type=int, default=100)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", required=True, help="output path (.csv or .json)")
    ev.add_argument("--standardize", action="store_true",
                    help="center and scale covariate columns after loading")
    ev.set_defaults(func=_cmd_evaluate)
    return parser


def _cmd_simulate(args) -> int:
    estimators = tuple(e.strip() for e in args.estimators.split(",") if e.strip())
    cfg = SimConfig(
        example=args.example,
        n=args.n,
        source_n=args.source_n,
        p=args.p,
        support=args.support,
        contrast_scale=args.contrast_scale,
        seed=args.seed,
    )
    result = run_experiment(
        cfg, args.reps, estimators=estimators, n_folds=args.folds
    )
    emit_results(result, args.out)
    if args.dump_truth:
        truth_path = _truth_path(args.out)
        _dump_truth(cfg, truth_path)
        print(f"ground truth written to {truth_path}")
    for name, summary in result.summaries().items():
        median = summary.get("median")
        median_txt = "n/a" if median is None else f"{median:.6g}"
        print(f"{name}: median mse {median_txt} over {summary['n']} replications")
    print(f"results written to {args.out} ({result.wall_time:.1f}s)")
    return 0


def _truth_path(out: str) -> Path:
    out = Path(out)
    return out.with_name(out.stem + "_truth.csv")


def _dump_truth(cfg: SimConfig, path: Path) -> None:
    """Long-format CSV of the generated ground truth: name,index,value."""
    problem = generate_problem(cfg)
    model = problem.model
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["name", "index", "value"])

        def block(name: str, values: np.ndarray) -> None:
            for i, v in enumerate(np.asarray(values).ravel()):
                writer.writerow([name, i, repr(float(v))])

        block("coef", model.coef)
        block("weights", model.weights)
        block("contrast", model.contrast)
        for k in range(model.n_sources):
            block(f"source_coef_{k + 1}", model.source_coefs[:, k])
        if problem.raw_weights is not None:
            block("raw_weights", problem.raw_weights)
            block("raw_contrast", problem.raw_contrast)


def _load_run_config(path: str, do_standardize: bool):
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    try:
        target_path = spec["target"]["path"]
        source_specs = spec["sources"]
    except KeyError as exc:
        raise ValueError(f"{path}: missing config key {exc}") from None
    target = load_dataset_csv(target_path)
    sources = [load_dataset_csv(s["path"]) for s in source_specs]
    if do_standardize:
        target = standardize(target)
        sources = [standardize(s) for s in sources]
    kinds = [s.get("estimator") for s in source_specs]
    folds = int(spec.get("cv", {}).get("folds", 5))
    seed = int(spec.get("seed", 0))
    return target, sources, kinds, folds, seed


def _cmd_fit(args) -> int:
    target, sources, kinds, folds, seed = _load_run_config(args.config, args.standardize)
    fit = fit_ptl(
        sources,
        target,
        PtlConfig(n_folds=folds, seed=seed, source_kinds=kinds, lasso=LassoOptions()),
    )
    payload = {
        "weights": [float(v) for v in fit.weights],
        "contrast": [float(v) for v in fit.contrast],
        "coef": [float(v) for v in fit.coef],
        "lambda_contrast": fit.lambda_contrast,
        "source_kinds": list(fit.basis.kinds),
        "source_lambdas": [
            None if v is None else float(v) for v in fit.basis.lambdas
        ],
        "ridge_fallback": list(fit.basis.ridge_fallback),
        "diagnostics": fit.diagnostics,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"fit written to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    target, sources, kinds, folds, seed = _load_run_config(args.config, args.standardize)
    records, means = out_of_sample_r2(
        target,
        sources,
        repeats=args.repeats,
        seed=args.seed if args.seed is not None else seed,
        n_folds=folds,
        source_kinds=kinds,
    )
    if args.out.endswith(".csv"):
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["repeat", "orientation", "estimator", "r2"])
            for rec in records:
                writer.writerow(
                    [rec.repeat, rec.orientation, rec.estimator, repr(float(rec.r2))]
                )
    else:
        payload = {
            "means": means,
            "records": [
                {
                    "repeat": rec.repeat,
                    "orientation": rec.orientation,
                    "estimator": rec.estimator,
                    "r2": rec.r2,
                }
                for rec in records
            ],
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    for name, value in means.items():
        print(f"{name}: mean out-of-sample R² {value:.4f}")
    print(f"evaluation written to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2
        print(f"ptl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
