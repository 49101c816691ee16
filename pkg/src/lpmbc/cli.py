"""Command-line front end: predict, bench, sweep, synth, verify.

Exit codes: 0 success, 1 usage error, 2 file error, 3 numeric or
infeasible configuration. Errors are reported as one line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import data as dataio
from . import verify
from .classifier import ClassifierConfig, predict_batch
from .core import LPMError, Rng, apply_scaler, fit_scaler
from .evaluation import cross_test, sweep
from .lpm import Assumption
from .neighborhood import Metric, Mode, NeighborhoodMode

EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _assumptions(text: str, bandwidth: str) -> list[Assumption]:
    return [Assumption.parse(v.strip(), bandwidth) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lpmbc", description="Bayesian classification with local probabilistic models")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model_flags(sp, assumption_default="lga", assumption_help="local model assumption"):
        sp.add_argument("--assumption", default=assumption_default, help=assumption_help)
        sp.add_argument("--bandwidth", choices=["unit", "silverman"], default="silverman",
                        help="LCA bandwidth rule (default silverman)")
        sp.add_argument("--metric", choices=["chebychev", "euclidean"], default="chebychev")

    sp = sub.add_parser("predict", help="classify query rows with a fixed configuration")
    sp.add_argument("--train", required=True)
    sp.add_argument("--query", required=True)
    sp.add_argument("--mode", choices=["per-class", "shared", "global"], default="per-class")
    sp.add_argument("--k", type=int, default=5)
    model_flags(sp, assumption_help="lua, lga or lca")
    sp.add_argument("--out", help="CSV output path (default stdout)")

    def bench_flags(sp):
        sp.add_argument("--data", required=True, help="CSV path or bundled name (iris, wine, sonar, libras)")
        sp.add_argument("--folds", type=int, default=5)
        sp.add_argument("--repeats", type=int, default=8)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("bench", help="cross test with inner-CV selection of k and assumption")
    bench_flags(sp)
    model_flags(sp, "lua,lga,lca", "comma-separated assumptions to select from")
    sp.add_argument("--out", help="report path")
    sp.add_argument("--format", choices=["json", "csv"], default="json")

    sp = sub.add_parser("sweep", help="cross tests over fixed (k fraction, assumption) cells")
    bench_flags(sp)
    sp.set_defaults(repeats=1)
    sp.add_argument("--k-fracs", type=_floats, default=[j / 10 for j in range(1, 11)])
    model_flags(sp, "lua,lga,lca", "comma-separated assumptions")
    sp.add_argument("--out", help="curve CSV path (default stdout)")

    sp = sub.add_parser("synth", help="generate the correlated two-Gaussian dataset")
    sp.add_argument("--c", type=float, required=True, help="feature covariance, |C| <= 2")
    sp.add_argument("--n", type=int, default=100, help="samples per class")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sub.add_parser("verify", help="run the invariant suites against brute-force oracles")
    return p


def _load(spec: str):
    path = Path(spec)
    if not path.exists() and spec in dataio.BUNDLED:
        path = dataio.bundled_path(spec)
    return dataio.load_csv(path)


def _load_queries(path: str, d: int) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    except OSError as exc:
        raise dataio.DataIOError(f"{path}: {exc.strerror or exc}") from exc
    if rows and any(_not_number(c) for c in rows[0][:d]):
        rows = rows[1:]
    if not rows:
        raise dataio.DataFormatError(f"{path}: no query rows")
    out = []
    for i, r in enumerate(rows):
        if len(r) not in (d, d + 1):
            raise dataio.DataFormatError(f"{path}: query row {i + 1} has {len(r)} cells, expected {d} or {d + 1}")
        try:
            out.append([float(v) for v in r[:d]])
        except ValueError:
            raise dataio.DataFormatError(f"{path}: query row {i + 1} has a non-numeric feature") from None
    return np.array(out)


def _not_number(cell: str) -> bool:
    try:
        float(cell)
        return False
    except ValueError:
        return True


def _open_out(path):
    if path is None:
        return sys.stdout
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise dataio.DataIOError(f"{path}: {exc.strerror or exc}") from exc


def cmd_predict(args) -> int:
    train = _load(args.train)
    queries = _load_queries(args.query, train.d)
    scaler = fit_scaler(train)
    mode = NeighborhoodMode(Mode(args.mode.replace("-", "_")), args.k)
    config = ClassifierConfig(mode, Assumption.parse(args.assumption, args.bandwidth), Metric(args.metric))
    labels, post = predict_batch(apply_scaler(scaler, train), scaler.transform(queries), config)
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [f"p_{name}" for name in train.class_names])
        for lab, p in zip(labels, post):
            w.writerow([train.class_names[lab]] + [repr(float(v)) for v in p])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_bench(args) -> int:
    ds = _load(args.data)
    assumptions = _assumptions(args.assumption, args.bandwidth)
    report = cross_test(ds, args.repeats, args.folds, Rng(args.seed), assumptions=assumptions,
                        metric=Metric(args.metric))
    agg = report.aggregates
    print(f"{args.data}: n={ds.n} d={ds.d} c={ds.c} folds={args.folds} repeats={args.repeats} seed={args.seed}")
    print(f"mean ACC {agg['mean_acc']:.4f} (std {agg['std_acc']:.4f})  mean MSE {agg['mean_mse']:.4f} "
          f"(std {agg['std_mse']:.4f})")
    if args.out:
        dataio.save_report(report, args.out, args.format)
    else:
        json.dump(report.to_dict(), sys.stdout, indent=2)
        print()
    return 0


def cmd_sweep(args) -> int:
    ds = _load(args.data)
    assumptions = _assumptions(args.assumption, args.bandwidth)
    points = sweep(ds, args.k_fracs, assumptions, args.repeats, args.folds, Rng(args.seed), Metric(args.metric))
    if args.out:
        dataio.save_sweep(points, args.out)
        for p in points:
            print(f"k_fraction={p.k_fraction:<5} {p.assumption:<14} ACC {p.mean_acc:.4f}  MSE {p.mean_mse:.4f}")
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["k_fraction", "assumption", "mean_acc", "mean_mse"])
        for p in points:
            w.writerow([repr(p.k_fraction), p.assumption, repr(p.mean_acc), repr(p.mean_mse)])
    return 0


def cmd_synth(args) -> int:
    ds = dataio.gen_synthetic(dataio.SyntheticSpec(args.c, args.n), Rng(args.seed))
    dataio.save_csv(ds, args.out)
    print(f"wrote {ds.n} samples (C={args.c}) to {args.out}")
    return 0


def cmd_verify(args) -> int:
    ok = True
    for suite in verify.SUITES:
        result = suite()
        print(result.line(), flush=True)
        ok &= result.passed
    return 0 if ok else EXIT_NUMERIC


COMMANDS = {"predict": cmd_predict, "bench": cmd_bench, "sweep": cmd_sweep, "synth": cmd_synth, "verify": cmd_verify}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (dataio.DataIOError, dataio.DataFormatError) as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LPMError, ValueError, FloatingPointError) as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
