"""Command-line interface.

    cscv generate   --kind spike|powerlaw ...      write a signal file
    cscv decode     --signal FILE --decoder omp|lasso ...
    cscv adaptive   --signal FILE --m-total M --m1 M1 --stages P --tau T ...
    cscv experiment --preset desk|paper --out run.csv ...

Exit codes: 0 ok, 2 usage, 3 coverage check failed, 4 I/O error,
5 stopping rule inapplicable. ``--config FILE.json`` supplies defaults for
any flag (flat keys named after the flags); explicit flags win. The seed
falls back to ``$CSCV_SEED``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._rng import resolve_seed
from .adaptive import AdaptiveSchedule, adaptive_decode, geometric_schedule
from .decoders import cross_validate_path, lasso_homotopy, omp_decode
from .errors import CSCVError, InsufficientCVRowsError, InvalidArgumentError
from .experiments import (
    ExperimentConfig,
    coverage_threshold,
    run_omp_cv_experiment,
    summarize_figure1,
    write_csv,
    write_manifest,
)
from .jl_cv import (
    JLBudget,
    absolute_interval,
    cv_scores,
    relative_interval,
    sigma_k_bracket,
)
from .sensing import ENSEMBLES, GAUSSIAN, draw_ensemble, measure, split
from .signal_core import (
    CompressibilityModel,
    load_signal,
    make_compressible_signal,
    make_spike_signal,
    save_signal,
    sigma_k,
    sparsity,
    trim_to_k,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ASSERTION = 3
EXIT_IO = 4
EXIT_RULE = 5


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _unit_open(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"expected a number in (0, 1), got {text}")
    return v


def _int_list(text):
    try:
        return tuple(int(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text}")


def _fmt(v):
    return f"{v:.6g}"


def _interval(iv):
    return f"[{_fmt(iv.lower)}, {_fmt(iv.upper)}]"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cscv", description=__doc__.split("\n\n")[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file of default flag values")
        p.add_argument("--seed", type=int, help="master seed (default: $CSCV_SEED)")

    g = sub.add_parser("generate", allow_abbrev=False, help="write a synthetic signal")
    common(g)
    g.add_argument("--kind", choices=("spike", "powerlaw"), default="spike")
    g.add_argument("--n", type=_positive_int, default=3600)
    g.add_argument("--d", type=_positive_int, help="number of spikes (spike) / k for the sigma_k report")
    g.add_argument("--s", type=float, help="power-law decay exponent (> 1)")
    g.add_argument("--c-s", type=_positive_float, default=1.0)
    g.add_argument("--noise-std", type=_nonneg_float, default=0.0)
    g.add_argument("--out", default="signal.txt")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("decode", allow_abbrev=False, help="decode, cross validate, and print error brackets")
    common(d)
    d.add_argument("--signal", required=True)
    d.add_argument("--decoder", choices=("omp", "lasso"), default="omp")
    d.add_argument("--m-total", type=_positive_int, required=True)
    d.add_argument("--r", type=_positive_int, required=True, help="held-out validation rows")
    d.add_argument("--k", type=_positive_int, help="OMP iterations")
    d.add_argument("--ensemble", choices=ENSEMBLES, default=GAUSSIAN)
    d.add_argument("--xi", type=_unit_open, default=0.01)
    d.add_argument("--C", type=_positive_float, default=1.0)
    d.add_argument("--c", type=_positive_float, help="instance-optimality constant for the sigma_k bracket")
    d.add_argument("--out", help="CSV of per-candidate scores and intervals")
    d.set_defaults(func=cmd_decode)

    a = sub.add_parser("adaptive", allow_abbrev=False, help="decode with an adaptive number of measurements")
    common(a)
    a.add_argument("--signal", required=True)
    a.add_argument("--m-total", type=_positive_int, required=True)
    a.add_argument("--m1", type=_positive_int, required=True)
    a.add_argument("--stages", type=_positive_int, required=True)
    a.add_argument("--tau", type=_positive_float, required=True)
    a.add_argument("--decoder", choices=("omp", "lasso"), default="omp")
    a.add_argument("--k", type=_positive_int)
    a.add_argument("--ensemble", choices=ENSEMBLES, default=GAUSSIAN)
    a.add_argument("--xi", type=_unit_open, default=0.01)
    a.add_argument("--warm-start", action="store_true")
    a.add_argument("--trace-out", help="write the stage trace CSV here instead of stdout")
    a.add_argument("--out", help="write the final estimate here")
    a.set_defaults(func=cmd_adaptive)

    e = sub.add_parser("experiment", allow_abbrev=False, help="OMP vs OMP-CV sweep over held-out rows")
    common(e)
    e.add_argument("--preset", choices=("desk", "paper"), default="desk")
    e.add_argument("--out", required=True)
    e.add_argument("--manifest", help="JSON manifest path (default: OUT with .json suffix)")
    e.add_argument("--r-values", type=_int_list)
    e.add_argument("--draws", type=_positive_int)
    e.add_argument("--noise-std", type=_nonneg_float)
    e.add_argument("--ensemble", choices=ENSEMBLES)
    e.add_argument("--jobs", type=_positive_int, default=1)
    e.set_defaults(func=cmd_experiment)
    parser.subcommands = {"generate": g, "decode": d, "adaptive": a, "experiment": e}
    return parser


def _load_config(path, parser):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read config {path}: {exc}")
    if not isinstance(data, dict):
        parser.error(f"config {path} must hold a JSON object")
    return {str(k).lstrip("-").replace("-", "_"): v for k, v in data.items()}


def parse_args(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    early, _ = pre.parse_known_args(argv)
    if early.config and early.command in parser.subcommands:
        sub = parser.subcommands[early.command]
        overlay = _load_config(early.config, parser)
        known = {a.dest: a for a in sub._actions}
        unknown = sorted(set(overlay) - set(known) - {"config"})
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        # run overlay values through each flag's type check; flags on the command line still win
        for dest, value in overlay.items():
            act = known[dest]
            if isinstance(value, list):
                value = ",".join(map(str, value))
            if act.type is not None and value is not None:
                try:
                    value = act.type(value)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    parser.error(f"config key {dest}: {exc}")
            if act.choices is not None and value not in act.choices:
                parser.error(f"config key {dest}: {value!r} not in {sorted(act.choices)}")
            overlay[dest] = value
            act.required = False
        sub.set_defaults(**overlay)
    args = parser.parse_args(argv)
    try:
        args.seed = resolve_seed(args.seed)
    except InvalidArgumentError as exc:
        parser.error(str(exc))
    return parser, args


def cmd_generate(args, parser):
    if args.kind == "spike":
        if args.d is None:
            parser.error("--kind spike needs --d")
        if args.d > args.n:
            parser.error("--d must not exceed --n")
        x = make_spike_signal(args.n, args.d, args.noise_std, seed=args.seed)
    else:
        if args.s is None or not args.s > 1:
            parser.error("--kind powerlaw needs --s > 1")
        x = make_compressible_signal(args.n, CompressibilityModel(args.s, args.c_s), seed=args.seed)
    save_signal(x, args.out)
    print(f"wrote {args.out} N={x.length} seed={args.seed}")
    print(f"sparsity={sparsity(x)}")
    if args.d is not None and args.d <= x.length:
        print(f"sigma_d={sigma_k(x, args.d):.6f} d={args.d}")
    return EXIT_OK


def cmd_decode(args, parser):
    x = load_signal(args.signal)
    if not args.r < args.m_total:
        parser.error("--r must be smaller than --m-total")
    part = split(args.m_total, args.r, x.length, args.ensemble, seed=args.seed)
    y_phi, y_psi = part.measure(x)
    print(f"seed={args.seed} N={x.length} n={part.n} r={part.r} decoder={args.decoder}")

    if args.decoder == "omp":
        if args.k is None:
            parser.error("--decoder omp needs --k")
        if args.k > part.n:
            parser.error(f"--k must not exceed the {part.n} decoder rows")
        seq = omp_decode(part.phi, y_phi, args.k)
    else:
        path = lasso_homotopy(part.phi, y_phi)
        seq = path.as_sequence()
        print(f"kinks={len(path)} tau_max={_fmt(path.tau_max)} truncated={path.truncated}")

    scored = cv_scores(part, y_psi, seq)
    budget = JLBudget.from_rows(part.r, args.xi, seq.p, args.C)
    j = scored.cv_index
    flag = " (heuristic eps > 1/2)" if budget.heuristic else ""
    print(f"p={seq.p} epsilon={_fmt(budget.epsilon)}{flag}")
    print(f"selected_index={j} provenance={_fmt(seq.provenance[j])} score={_fmt(scored.eta_cv_hat)}")
    if budget.epsilon < 1:
        print(f"absolute_interval={_interval(absolute_interval(scored.eta_cv_hat, budget))}")
        print(f"relative_interval={_interval(relative_interval(scored.eta_cv_hat, scored.y_psi_norm, budget))}")
        print(f"oracle_bracket={_interval(scored.oracle_bracket(budget))}")
        if args.c is not None and args.decoder == "omp":
            k = int(seq.provenance[j])
            trimmed = trim_to_k(seq[j], k)
            score = float(np.linalg.norm(y_psi - measure(part.psi, trimmed)))
            iv = sigma_k_bracket(score, budget, args.c)
            print(f"sigma_k_bracket k={k} {_interval(iv)} lower_conditional=True")
    else:
        print("intervals unavailable: epsilon >= 1 (reserve more validation rows)")

    if args.decoder == "lasso" and part.r >= 2:
        cont = JLBudget.from_rows(part.r, args.xi, seq.p, args.C, continuum=True)
        res = cross_validate_path(path, part.psi, y_psi, cont)
        line = f"continuum tau_star={_fmt(res.tau_star)} score={_fmt(res.cv_score)}"
        if cont.epsilon < 1:
            line += f" interval={_interval(res.interval)}"
        print(line)

    if args.out:
        import csv
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "provenance", "score", "abs_lower", "abs_upper"])
            for i, s in enumerate(scored.scores):
                lo, hi = (absolute_interval(s, budget).lower, absolute_interval(s, budget).upper) \
                    if budget.epsilon < 1 else (math.nan, math.nan)
                w.writerow([i, repr(seq.provenance[i]), repr(float(s)), repr(lo), repr(hi)])
    return EXIT_OK


def cmd_adaptive(args, parser):
    x = load_signal(args.signal)
    if args.decoder == "omp" and args.k is None:
        parser.error("--decoder omp needs --k")
    if not args.m1 < args.m_total:
        parser.error("--m1 must be smaller than --m-total")
    stages = geometric_schedule(args.m1, args.stages, args.m_total)
    schedule = AdaptiveSchedule(stages, args.tau, args.k, args.decoder)
    try:
        schedule.validate(args.m_total)
    except InsufficientCVRowsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RULE
    ens = draw_ensemble(args.m_total, x.length, args.ensemble, 1.0, seed=args.seed)
    result = adaptive_decode(ens, measure(ens, x), schedule, xi=args.xi, warm_start=args.warm_start)
    trace = result.trace_csv()
    if args.trace_out:
        Path(args.trace_out).write_text(trace)
    else:
        sys.stdout.write(trace)
    if args.out:
        save_signal(result.estimate, args.out)
    print(f"seed={args.seed} stages={','.join(map(str, stages))}")
    print(result.verdict())
    return EXIT_OK


def cmd_experiment(args, parser):
    overrides = {"master_seed": args.seed}
    if args.r_values:
        overrides["r_values"] = args.r_values
    if args.draws:
        overrides["num_cv_draws"] = args.draws
    if args.noise_std is not None:
        overrides["noise_std"] = args.noise_std
    if args.ensemble:
        overrides["ensemble"] = args.ensemble
    config = ExperimentConfig.preset(args.preset, **overrides)
    summaries = run_omp_cv_experiment(config, jobs=args.jobs)
    manifest_path = args.manifest or str(Path(args.out).with_suffix(".json"))
    write_csv(summaries, args.out)
    write_manifest(config, manifest_path)

    report = summarize_figure1(summaries)
    need = coverage_threshold(config.num_cv_draws, config.xi)
    failed = [s.r for s in summaries if s.coverage_count < need]
    for s in summaries:
        print(f"r={s.r:3d} eps={s.epsilon:.4f} eta_or={s.eta_or:.4f} eta_omp={s.eta_omp:.4f} "
              f"eta_cv={s.eta_cv_mean:.4f}+-{s.eta_cv_std:.4f} coverage={s.coverage_count}/{s.n_draws}")
    print(f"sigma_d={report.sigma_d:.4f} heuristic_r={report.heuristic_r} seed={config.master_seed}")
    if failed:
        print(f"coverage below {need}/{config.num_cv_draws} at r={failed}", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


def main(argv=None) -> int:
    parser, args = parse_args(argv)
    try:
        return args.func(args, parser)
    except InvalidArgumentError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InsufficientCVRowsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RULE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CSCVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
