"""Command-line entry point: ``maxmachine <command> ...``.

Exit codes: 0 success, 2 usage or config error, 3 data or parse error,
4 numerical or state error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import baseline
from .artifact import from_trace, load_model, save_model
from .config import RunConfig, load_config
from .data import load_triplets, read_key_value_csv, read_pairs, write_triplets
from .errors import ConfigError, DataError, StateError, UndefinedMetricError, UnsupportedVersionError
from .evaluation import (applicability_report, csv_writer, evaluate, make_holdout, write_applicability,
                         write_report)
from .hierarchy import UNKNOWN_TYPE, fit
from .model import posterior_predictive
from .oracle import generate

log = logging.getLogger("maxmachine")

EXIT_USAGE, EXIT_DATA, EXIT_STATE = 2, 3, 4


class UsageError(Exception):
    pass


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    threads = getattr(args, "threads", 1)
    if threads < 1:
        raise UsageError("--threads must be at least 1")
    if threads > 1:
        import dataclasses

        import numba

        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
        cfg = dataclasses.replace(cfg, gibbs=dataclasses.replace(cfg.gibbs, parallel=True))
    return cfg


def _load(args, cfg: RunConfig):
    freq = args.min_attr_freq if args.min_attr_freq is not None else cfg.min_attr_freq
    return load_triplets(args.pairs, args.types, min_attr_freq=freq)


def _fit(data, cfg: RunConfig, dims: int, mask=None):
    # without any type labels the model is a single layer
    types = data.types() if any(t != UNKNOWN_TYPE for t in data.type_of) else None
    return fit(data.to_matrix(), dims, types, mask=mask, priors=cfg.priors, upper_priors=cfg.upper_priors,
               config=cfg.gibbs, init=cfg.init, restarts=cfg.restarts, init_threshold=cfg.init_threshold)


# commands -----------------------------------------------------------------


def cmd_train(args) -> None:
    cfg = _config(args)
    data = _load(args, cfg)
    dims = args.dims if args.dims is not None else cfg.dims
    model, trace = _fit(data, cfg, dims)
    if not trace.converged:
        log.warning("sampler did not converge within %d sweeps", trace.sweep_count)
    art = from_trace(model, trace, data.to_matrix(), cfg.echo() | {"dims": dims}, data.object_ids,
                     data.attribute_ids, keep_samples=args.save_samples)
    save_model(art, args.out)
    log.info("trained %d dimensions on %dx%d in %d sweeps", dims, *data.shape, trace.sweep_count)


def cmd_predict(args) -> None:
    art = load_model(args.model)
    N, D = art.shape
    if args.all:
        cells = np.array([(n, d) for n in range(N) for d in range(D)], dtype=np.int64).reshape(-1, 2)
    else:
        obj = {o: i for i, o in enumerate(art.object_ids)}
        att = {a: j for j, a in enumerate(art.attribute_ids)}
        cells = []
        for o, a in read_pairs(args.cells):
            if o not in obj or a not in att:
                raise DataError(f"unknown cell ({o}, {a})")
            cells.append((obj[o], att[a]))
        cells = np.array(cells, dtype=np.int64).reshape(-1, 2)
    p = posterior_predictive(art.predictive_samples(), cells) if len(cells) else np.empty(0)
    with csv_writer(args.out) as w:
        w.writerow(["object_id", "attribute_id", "p"])
        for (n, d), v in zip(cells, p):
            w.writerow([art.object_ids[n], art.attribute_ids[d], repr(float(v))])


def cmd_evaluate(args) -> None:
    cfg = _config(args)
    data = _load(args, cfg)
    dims = args.dims if args.dims is not None else cfg.dims
    frac = args.holdout_frac if args.holdout_frac is not None else cfg.holdout_fraction
    N, D = data.shape
    mask = make_holdout(N, D, frac, cfg.gibbs.seed)
    model, trace = _fit(data, cfg, dims, mask)
    types = data.types()
    table = baseline.fit(data.to_matrix(), types.type_of, types.names, mask, cfg.smoothing)
    clusters = None
    if args.clusters:
        by_id = read_key_value_csv(args.clusters)
        clusters = {i: by_id.get(o) for i, o in enumerate(data.object_ids)}
    report = evaluate(trace, table, data.to_matrix(), mask, clusters)
    write_report(report, args.out)
    log.info("auc model %.4f baseline %.4f on %d cells", report.auc_model, report.auc_baseline,
             report.n_test_cells)


def cmd_simulate(args) -> None:
    cfg = _config(args)
    synth = generate(cfg.synth)
    prefix = args.out_prefix
    write_triplets(synth.dataset(), f"{prefix}_pairs.csv", f"{prefix}_types.csv")
    np.savez(f"{prefix}_truth.npz", U=synth.U.to_dense(), Z=synth.Z.to_dense(), V=synth.V.to_dense(),
             reliabilities=synth.reliabilities, type_reliabilities=synth.type_reliabilities)


def cmd_report(args) -> None:
    art = load_model(args.model)
    if args.codes:
        with csv_writer(args.out) as w:
            w.writerow(["dim", *art.attribute_ids, "nu", "lambda_hat"])
            U = np.vstack([art.U_mean, np.ones(art.shape[1])])
            nu = art.nu if art.nu is not None else np.full(art.L + 1, np.nan)
            lam = art.lambda_hat if art.lambda_hat is not None else art.reliabilities.mean(axis=0)
            for l in range(art.L + 1):
                name = "clamped" if l == art.L else str(l)
                w.writerow([name, *(repr(float(v)) for v in U[l]), repr(float(nu[l])), repr(float(lam[l]))])
        return
    if args.attribute is None:
        raise UsageError("report needs --attribute or --codes")
    rows = applicability_report(art.predictive_samples(), art.dataset(), args.attribute, args.top_k)
    write_applicability(rows, args.out)


# parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxmachine", description="MaxMachine latent feature models.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(q, dims=True):
        q.add_argument("--pairs", required=True, help="object_id,attribute_id CSV")
        q.add_argument("--types", help="object_id,type CSV")
        q.add_argument("--config", help="key = value config file")
        q.add_argument("--seed", type=int)
        q.add_argument("--threads", type=int, default=1)
        q.add_argument("--min-attr-freq", type=float, dest="min_attr_freq")
        if dims:
            q.add_argument("--dims", type=int, help="number of latent dimensions L")

    q = sub.add_parser("train", help="fit a model and save it")
    data_args(q)
    q.add_argument("--out", required=True)
    q.add_argument("--save-samples", action="store_true", dest="save_samples")
    q.set_defaults(func=cmd_train)

    q = sub.add_parser("predict", help="posterior predictive probabilities")
    q.add_argument("--model", required=True)
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--cells", help="object_id,attribute_id CSV")
    g.add_argument("--all", action="store_true")
    q.add_argument("--out")
    q.set_defaults(func=cmd_predict)

    q = sub.add_parser("evaluate", help="holdout AUC against the type-frequency baseline")
    data_args(q)
    q.add_argument("--holdout-frac", type=float, dest="holdout_frac")
    q.add_argument("--clusters", help="object_id,cluster CSV")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_evaluate)

    q = sub.add_parser("simulate", help="write a planted dataset")
    q.add_argument("--config")
    q.add_argument("--seed", type=int)
    q.add_argument("--out-prefix", required=True, dest="out_prefix")
    q.set_defaults(func=cmd_simulate)

    q = sub.add_parser("report", help="applicability table or dimension codes")
    q.add_argument("--model", required=True)
    q.add_argument("--attribute")
    q.add_argument("--top-k", type=int, default=10, dest="top_k")
    q.add_argument("--codes", action="store_true")
    q.add_argument("--out")
    q.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except BrokenPipeError:
        # output piped into e.g. ``head``; silence the flush at interpreter exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, UnsupportedVersionError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_DATA
    except (StateError, UndefinedMetricError, FloatingPointError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATE
    return 0


if __name__ == "__main__":
    sys.exit(main())
