"""Command-line front door: gen, train, score, explain, eval, bench."""

from __future__ import annotations

import argparse
import json
import sys

from . import datagen, metrics
from .data import format_float, load_csv, save_csv
from .errors import DataError, ModelFormatError, UsageError
from .explain import ExplainConfig, explain
from .learn import LearnConfig, learn_spn
from .model import load_model, save_model


def _add_learn_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=LearnConfig.alpha)
    p.add_argument("--min-slice-rows", type=int, default=LearnConfig.min_slice_rows)
    p.add_argument("--rdc-features", type=int, default=LearnConfig.rdc_features)
    p.add_argument("--rdc-scale", type=float, default=LearnConfig.rdc_scale)
    p.add_argument("--gmm-max-iters", type=int, default=LearnConfig.gmm_max_iters)
    p.add_argument("--gmm-tol", type=float, default=LearnConfig.gmm_tol)


def _learn_config(args) -> LearnConfig:
    return LearnConfig(alpha=args.alpha, min_slice_rows=args.min_slice_rows,
                       rdc_features=args.rdc_features, rdc_scale=args.rdc_scale,
                       gmm_max_iters=args.gmm_max_iters, gmm_tol=args.gmm_tol,
                       seed=args.seed)


def _add_explain_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", choices=("forward", "backward"), default="backward")
    p.add_argument("--selection", choices=("elbow", "zscore"), default="elbow")
    p.add_argument("--beam-width", type=int, default=ExplainConfig.beam_width)
    p.add_argument("--max-depth", type=int, default=None,
                   help="forward search depth S (default: number of features)")
    p.add_argument("--kappa", type=float, default=ExplainConfig.kappa)


def _explain_config(args) -> ExplainConfig:
    return ExplainConfig(beam_width=args.beam_width, max_depth=args.max_depth,
                         kappa=args.kappa, strategy=args.strategy,
                         selection=args.selection)


def _add_gen_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-features", type=int, required=True)
    p.add_argument("--n-samples", type=int, default=GenDefaults.n_samples)
    p.add_argument("--n-outliers", type=int, default=GenDefaults.n_outliers)
    p.add_argument("--subspace-min", type=int, default=GenDefaults.subspace_min)
    p.add_argument("--subspace-max", type=int, default=GenDefaults.subspace_max)
    p.add_argument("--clusters-per-subspace", type=int,
                   default=GenDefaults.clusters_per_subspace)
    p.add_argument("--noise-sigma", type=float, default=GenDefaults.noise_sigma)


GenDefaults = datagen.GenConfig(n_features=10)


def _gen_config(args) -> datagen.GenConfig:
    return datagen.GenConfig(
        n_features=args.n_features, n_samples=args.n_samples,
        n_outliers=args.n_outliers, subspace_min=args.subspace_min,
        subspace_max=args.subspace_max,
        clusters_per_subspace=args.clusters_per_subspace,
        noise_sigma=args.noise_sigma, seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="spnexplain")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a planted-subspace synthetic dataset")
    _add_gen_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--labels", required=True, help="output ground-truth JSON sidecar")

    p = sub.add_parser("train", help="learn an SPN density model from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--model", required=True, help="output model JSON path")
    _add_learn_flags(p)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("score", help="score rows by full-joint outlier score")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--contamination", type=float, default=None,
                   help="also flag rows above the (1-contamination) score quantile")
    p.add_argument("--out", default=None, help="output TSV (default stdout)")

    p = sub.add_parser("explain", help="explain outlier rows as JSON-lines")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--rows", required=True,
                   help="comma-separated row indices to explain")
    _add_explain_flags(p)
    p.add_argument("--out", default=None, help="output JSON-lines (default stdout)")

    p = sub.add_parser("eval", help="score explanations against ground-truth labels")
    p.add_argument("--explanations", required=True, help="JSON-lines from 'explain'")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--labels", required=True)

    p = sub.add_parser("bench", help="train once, explain all labeled outliers, report F1")
    p.add_argument("--data", default=None, help="labeled CSV (with --labels); "
                   "omit to generate one")
    p.add_argument("--schema", default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--n-features", type=int, default=None,
                   help="generate a dataset of this width instead of loading one")
    p.add_argument("--n-samples", type=int, default=GenDefaults.n_samples)
    p.add_argument("--n-outliers", type=int, default=GenDefaults.n_outliers)
    p.add_argument("--subspace-min", type=int, default=GenDefaults.subspace_min)
    p.add_argument("--subspace-max", type=int, default=GenDefaults.subspace_max)
    p.add_argument("--clusters-per-subspace", type=int,
                   default=GenDefaults.clusters_per_subspace)
    p.add_argument("--noise-sigma", type=float, default=GenDefaults.noise_sigma)
    _add_learn_flags(p)
    _add_explain_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--explanations", default=None, help="output JSON-lines path")
    p.add_argument("--summary", default=None, help="output summary TSV path")
    return top


def _write_lines(lines: list[str], path: str | None) -> None:
    text = "\n".join(lines) + ("\n" if lines else "")
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_gen(args) -> None:
    labeled = datagen.generate(_gen_config(args))
    save_csv(labeled.dataset, args.out)
    datagen.write_labels(labeled, args.labels)
    print(f"wrote {labeled.dataset.n_rows} rows x {labeled.dataset.n_features} "
          f"features to {args.out}, {len(labeled.outlier_rows)} outliers to {args.labels}")


def cmd_train(args) -> None:
    dataset = load_csv(args.data, args.schema)
    model = learn_spn(dataset, _learn_config(args))
    save_model(model, args.model)
    print(f"trained model with {len(model.nodes)} nodes -> {args.model}")


def cmd_score(args) -> None:
    model = load_model(args.model)
    dataset = load_csv(args.data, args.schema)
    if args.contamination is not None:
        flagged, scores = metrics.detect(model, dataset, args.contamination)
        flags = set(flagged)
        lines = ["row\tscore\tflagged"]
        lines += [f"{i}\t{format_float(s)}\t{int(i in flags)}"
                  for i, s in enumerate(scores)]
    else:
        _, scores = metrics.detect(model, dataset, 0.5)
        lines = ["row\tscore"]
        lines += [f"{i}\t{format_float(s)}" for i, s in enumerate(scores)]
    _write_lines(lines, args.out)


def cmd_explain(args) -> None:
    model = load_model(args.model)
    dataset = load_csv(args.data, args.schema)
    try:
        rows = sorted({int(tok) for tok in args.rows.split(",") if tok.strip()})
    except ValueError as exc:
        raise UsageError(f"--rows must be comma-separated integers: {exc}") from exc
    if not rows:
        raise UsageError("--rows selected no rows")
    for r in rows:
        if not (0 <= r < dataset.n_rows):
            raise DataError(f"row {r} outside dataset of {dataset.n_rows} rows")
    config = _explain_config(args)
    needs_train = config.selection == "zscore"
    lines = []
    for r in rows:
        trace = explain(model, dataset.values[r], config,
                        X_train=dataset.values if needs_train else None)
        lines.append(json.dumps(metrics.trace_record(r, trace)))
    _write_lines(lines, args.out)


def cmd_eval(args) -> None:
    dataset = load_csv(args.data, args.schema)
    labeled = datagen.read_labels(dataset, args.labels)
    try:
        with open(args.explanations) as fh:
            records = [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read explanations {args.explanations}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.explanations}: invalid JSON line: {exc}") from exc
    lines = ["row\tprecision\trecall\tf1"]
    f1s = []
    for rec in records:
        row = rec["row"]
        if row not in labeled.ground_truth:
            raise DataError(f"explained row {row} has no ground-truth label")
        p, r, f1 = metrics.f1_dims(rec["selected"], labeled.ground_truth[row])
        f1s.append(f1)
        lines.append(f"{row}\t{format_float(p)}\t{format_float(r)}\t{format_float(f1)}")
    mean = sum(f1s) / len(f1s) if f1s else 0.0
    lines.append(f"mean\t\t\t{format_float(mean)}")
    _write_lines(lines, None)


def cmd_bench(args) -> None:
    if args.data is not None:
        if args.labels is None:
            raise UsageError("bench with --data also needs --labels")
        dataset = load_csv(args.data, args.schema)
        labeled = datagen.read_labels(dataset, args.labels)
    elif args.n_features is not None:
        labeled = datagen.generate(_gen_config(args))
    else:
        raise UsageError("bench needs either --data/--labels or --n-features")
    report = metrics.run_benchmark(labeled, _learn_config(args),
                                   _explain_config(args),
                                   explanations_path=args.explanations,
                                   summary_path=args.summary)
    print(f"n_features={report.n_features} strategy={report.strategy} "
          f"selection={report.selection} mean_f1={report.mean_f1:.4f} "
          f"train_s={report.train_seconds:.2f} explain_s={report.explain_seconds:.2f}")


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "score": cmd_score,
            "explain": cmd_explain, "eval": cmd_eval, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ModelFormatError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
