"""Command-line entry point: train / ablate / verify / inspect.

stdout carries machine-parseable lines only (prefixes RESULT, SUITE, CHECK,
STAT, COEFF); everything chatty goes to stderr. Exit codes: 0 success,
1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import (BundleError, CheckpointError, load_bundle, save_checkpoint)
from .filters import MeixnerParams, meixner_coeffs
from .graph import Graph, scale_laplacian, sym_normalized_laplacian
from .model import CHEBY, MEIXNER, LAPLACIAN_SCALE
from .train import (FINALS_HEADER, TrainConfig, TrainingDiverged, ablate_hidden,
                    ablate_k, finals_row, run_many, write_csv, write_finals_csv,
                    write_series_csv)
from .verify import SUITES, run_suites

DENSE_SPECTRUM_LIMIT = 2000


class UsageError(Exception):
    """Bad flag combination detected after parsing; maps to exit code 2."""


def _log(msg):
    print(msg, file=sys.stderr)


def _fmt_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".6g")
    return str(v)


def _parse_int_list(text, flag):
    if text is None or not text.strip():
        raise UsageError(f"{flag} needs a non-empty comma-separated integer list")
    try:
        values = [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag}: could not parse {text!r} as integers") from None
    if not values:
        raise UsageError(f"{flag} needs a non-empty comma-separated integer list")
    return values


def _add_shared_train_flags(p):
    p.add_argument("--dataset", required=True, help="bundle directory")
    p.add_argument("--model", choices=(MEIXNER, CHEBY), default=MEIXNER)
    p.add_argument("--k", type=int, default=2, help="polynomial basis terms")
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", help="comma-separated seed list; overrides --seed")
    p.add_argument("--out", default="runs", help="output directory for CSVs")
    p.add_argument("--json", action="store_true",
                   help="also write finals.json next to the CSVs")
    p.add_argument("--no-layernorm-affine", action="store_true",
                   help="freeze per-basis LayerNorm gain/bias at (1, 0)")
    p.add_argument("--decay-meixner-params", action="store_true",
                   help="extend weight decay to the raw shape parameters")
    p.add_argument("--normalize", choices=("on", "off"), default="on",
                   help="per-basis LayerNorm (off = raw recurrence, diagnostic)")
    p.add_argument("--workers", type=int, default=1,
                   help="process count for multi-run fan-out")


def _base_config(args) -> TrainConfig:
    if args.k < 1:
        raise UsageError(f"--k must be >= 1, got {args.k}")
    if args.hidden < 1:
        raise UsageError(f"--hidden must be >= 1, got {args.hidden}")
    if args.epochs < 1:
        raise UsageError(f"--epochs must be >= 1, got {args.epochs}")
    if not (0.0 <= args.dropout < 1.0):
        raise UsageError(f"--dropout must be in [0, 1), got {args.dropout}")
    return TrainConfig(epochs=args.epochs, k=args.k, hidden=args.hidden,
                       dropout=args.dropout, seed=args.seed, model=args.model,
                       lr=args.lr, weight_decay=args.weight_decay,
                       decay_meixner_params=args.decay_meixner_params,
                       layernorm_affine=not args.no_layernorm_affine,
                       normalize=args.normalize == "on")


def _seed_list(args):
    if args.seeds is not None:
        return _parse_int_list(args.seeds, "--seeds")
    return [args.seed]


def _result_line(row) -> str:
    return "RESULT " + " ".join(f"{key}={_fmt_cell(row[key])}" for key in FINALS_HEADER)


def cmd_train(args) -> int:
    config = _base_config(args)
    seeds = _seed_list(args)
    bundle = load_bundle(args.dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    jobs = [replace(config, seed=s) for s in seeds]
    _log(f"training {len(jobs)} run(s) on {bundle.name} "
         f"(model={config.model}, K={config.k}, hidden={config.hidden})")
    reports = run_many(jobs, bundle, args.workers)

    rows = [finals_row(r) for r in reports]
    write_series_csv(out / "series.csv", reports)
    write_finals_csv(out / "finals.csv", rows)
    if args.json:
        (out / "finals.json").write_text(json.dumps(rows, indent=2) + "\n",
                                         encoding="utf-8")
    for report, row in zip(reports, rows):
        ckpt = out / f"checkpoint_seed{report.config.seed}.json"
        save_checkpoint(report._net, ckpt, seed=report.config.seed,
                        epochs_completed=report.config.epochs)
        print(_result_line(row))
    _log(f"wrote {out / 'series.csv'}, {out / 'finals.csv'}, {len(reports)} checkpoint(s)")
    return 0


def cmd_ablate(args) -> int:
    config = _base_config(args)
    values = _parse_int_list(args.values, "--values")
    if any(v < 1 for v in values):
        raise UsageError(f"--values entries must be >= 1, got {values}")
    seeds = _seed_list(args)
    bundle = load_bundle(args.dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    _log(f"{args.sweep} ablation over {values} on {bundle.name}, seeds {seeds}")
    if args.sweep == "k":
        rows = ablate_k(config, bundle, values, seeds=seeds, workers=args.workers)
        csv_path = out / "ablation_k.csv"
    else:
        rows = ablate_hidden(config, bundle, values, seeds=seeds, workers=args.workers)
        csv_path = out / "ablation_hidden.csv"
    write_finals_csv(csv_path, rows)
    if args.json:
        (out / f"ablation_{args.sweep}.json").write_text(
            json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    for row in rows:
        print(_result_line(row))
    _log(f"wrote {csv_path}")
    return 0


def cmd_verify(args) -> int:
    names = [args.suite] if args.suite else None
    try:
        results = run_suites(names, coeff_perturbation=args.perturb_eigen_coeffs)
    except ValueError as e:
        raise UsageError(str(e)) from None
    all_ok = True
    for suite, checks in results.items():
        suite_ok = all(ok for _, ok, _ in checks)
        all_ok &= suite_ok
        for name, ok, detail in checks:
            print(f"CHECK {suite}.{name}: {'ok' if ok else 'FAIL'} ({detail})")
        print(f"SUITE {suite}: {'pass' if suite_ok else 'fail'} ({len(checks)} checks)")
    return 0 if all_ok else 1


def cmd_inspect(args) -> int:
    did_something = False
    if args.dataset:
        did_something = True
        bundle = load_bundle(args.dataset)
        g = Graph.from_edge_list(bundle.num_nodes, bundle.edges)
        print(f"STAT name={bundle.name}")
        print(f"STAT nodes={bundle.num_nodes}")
        print(f"STAT edges={len(g.edges)}")
        print(f"STAT features={bundle.num_features}")
        print(f"STAT classes={bundle.num_classes}")
        print(f"STAT train={len(bundle.train_idx)} val={len(bundle.val_idx)} "
              f"test={len(bundle.test_idx)}")
        if bundle.num_nodes <= DENSE_SPECTRUM_LIMIT:
            l_scaled = scale_laplacian(sym_normalized_laplacian(g), LAPLACIAN_SCALE)
            lam = np.linalg.eigvalsh(l_scaled.densify())
            print(f"STAT scaled_lambda_min={lam[0]:.6g} scaled_lambda_max={lam[-1]:.6g}")
        else:
            _log(f"spectrum skipped: {bundle.num_nodes} nodes exceeds dense "
                 f"path limit {DENSE_SPECTRUM_LIMIT}")
    if args.beta is not None or args.c is not None:
        if args.beta is None or args.c is None:
            raise UsageError("--beta and --c must be given together")
        if args.k < 1:
            raise UsageError(f"--k must be >= 1, got {args.k}")
        did_something = True
        try:
            params = MeixnerParams.from_effective(args.beta, args.c)
        except ValueError as e:
            raise UsageError(str(e)) from None
        coeffs = meixner_coeffs(params, args.k)
        for k in range(args.k):
            print(f"COEFF k={k} b={coeffs.b[k].value:.12g} c={coeffs.cc[k].value:.12g}")
    if not did_something:
        raise UsageError("inspect needs --dataset and/or --beta/--c")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meixnernet",
        description="Spectral graph convolution with learnable Meixner filters")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the training recipe on a bundle")
    _add_shared_train_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_ablate = sub.add_parser("ablate", help="sweep K or hidden width, both models")
    _add_shared_train_flags(p_ablate)
    p_ablate.add_argument("--sweep", choices=("k", "hidden"), default="k")
    p_ablate.add_argument("--values", required=True,
                          help="comma-separated sweep values")
    p_ablate.set_defaults(func=cmd_ablate)

    p_verify = sub.add_parser("verify", help="run the built-in oracle suites")
    p_verify.add_argument("--suite", choices=sorted(SUITES),
                          help="run a single suite instead of all")
    p_verify.add_argument("--perturb-eigen-coeffs", type=float, default=0.0,
                          help=argparse.SUPPRESS)  # fault-injection test hook
    p_verify.set_defaults(func=cmd_verify)

    p_inspect = sub.add_parser("inspect", help="bundle stats and coefficient tables")
    p_inspect.add_argument("--dataset", help="bundle directory to summarize")
    p_inspect.add_argument("--beta", type=float, help="Meixner beta for the table")
    p_inspect.add_argument("--c", type=float, help="Meixner c for the table")
    p_inspect.add_argument("--k", type=int, default=3, help="table length")
    p_inspect.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (BundleError, CheckpointError, TrainingDiverged) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
