"""Command-line entry point: ``prefagg <command> [options]``.

Exit codes: 0 success, 2 validation error, 3 solver non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .core import empirical_matrix, representative_matrix, sample_dataset
from .errors import EXIT_IO, EXIT_OK, InvalidArgumentError, NonConvergenceError, PrefAggError
from .experiments import (
    DEFAULT_EPS,
    LN2_SQUARED,
    clone_robustness_sweep,
    cyclic_alternatives,
    cyclic_population,
    impossibility_instance,
    integral_check,
    linear_population,
    reproduce_appendix_d,
    square_alternatives,
)
from .solver import SolverConfig, solve
from .voronoi import DEFAULT_SAMPLES, SpaceBox, WeightVector, estimate_weights
from .winrate import analysis_report

log = logging.getLogger("prefagg")


def _require(path, flag):
    if path is None:
        raise InvalidArgumentError(f"{flag} is required")
    if not Path(path).exists():
        raise io.StorageError(f"{flag}: {path} does not exist")
    return path


def _load_matrix(args):
    """Win rates from --matrix, --comparisons (+ --alternatives) or --population (+ --alternatives)."""
    sources = [s for s in ("matrix", "comparisons", "population") if getattr(args, s, None)]
    if len(sources) != 1:
        raise InvalidArgumentError("give exactly one of --matrix, --comparisons, --population")
    if args.matrix:
        return io.load_matrix(_require(args.matrix, "--matrix"))
    alts = io.load_alternatives(_require(args.alternatives, "--alternatives"))
    if args.comparisons:
        return empirical_matrix(io.load_comparisons(_require(args.comparisons, "--comparisons")), alts)
    return representative_matrix(io.load_population(_require(args.population, "--population")), alts)


def _load_weights(args, ids):
    if args.algorithm == "mle":
        return unit_weights_for(ids)
    if args.weights:
        return io.align(ids, io.load_weights(_require(args.weights, "--weights")))
    if args.space:
        alts = io.load_alternatives(_require(args.alternatives, "--alternatives"))
        w = estimate_weights(alts, io.resolve_space(args.space, alts), args.n_samples, args.seed)
        return io.align(ids, w)
    raise InvalidArgumentError("wmle needs --weights or --space (with --alternatives)")


def unit_weights_for(ids):
    return WeightVector(tuple(ids), np.ones(len(ids)), "unit")


def cmd_gen_dataset(args) -> int:
    alts = io.load_alternatives(_require(args.alternatives, "--alternatives"))
    pop = io.load_population(_require(args.population, "--population"))
    records = sample_dataset(pop, alts, args.per_pair, args.seed)
    out = Path(args.out)
    io.save_comparisons(out / "comparisons.jsonl", records)
    io.save_matrix(out / "exact_matrix.json", representative_matrix(pop, alts),
                   seed=args.seed, per_pair=args.per_pair)
    log.info("wrote %d comparisons to %s", len(records), out)
    return EXIT_OK


def cmd_estimate_weights(args) -> int:
    alts = io.load_alternatives(_require(args.alternatives, "--alternatives"))
    space = io.resolve_space(args.space, alts)
    w = estimate_weights(alts, space, args.n_samples, args.seed)
    io.save_weights(Path(args.out) / "weights.json", w,
                    space={"lower": space.lower.tolist(), "upper": space.upper.tolist()})
    return EXIT_OK


def cmd_solve(args) -> int:
    p = _load_matrix(args)
    w = _load_weights(args, p.ids)
    config = SolverConfig(lam=args.lam, grad_tol=args.grad_tol, max_iters=args.max_iters)
    out = Path(args.out)
    try:
        r, report = solve(p, w, config)
    except NonConvergenceError as exc:
        io.save_rewards(out / "rewards.json", exc.rewards, args.lam, w.mode, exc.report.as_dict())
        raise
    io.save_rewards(out / "rewards.json", r, args.lam, w.mode, {**report.as_dict(), "seed": args.seed})
    analysis = analysis_report(r, p, w, args.lam)
    io.write_json(out / "analysis.json", {**analysis, "seed": args.seed})
    print(" > ".join(analysis["ranking"]))
    return EXIT_OK


def cmd_analyze(args) -> int:
    p = _load_matrix(args)
    r, meta = io.load_rewards(_require(args.rewards, "--rewards"))
    if r.ids != p.ids:
        r = type(r)(p.ids, [r[k] for k in p.ids])
    if args.algorithm is None:
        args.algorithm = "wmle" if meta.get("weights_mode") == "voronoi" else "mle"
    lam = args.lam if args.lam is not None else meta.get("lambda", 0.01)
    w = _load_weights(args, p.ids)
    io.write_json(Path(args.out) / "analysis.json", analysis_report(r, p, w, lam))
    return EXIT_OK


def _parse_C(text: str) -> float:
    if text.lower() in ("ln2sq", "ln2^2", "log2sq"):
        return LN2_SQUARED
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _parse_eps(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon list: {text!r}") from None


def _write_robustness(out: Path, report) -> None:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epsilon", "delta_existing", "delta_pair", "winner_before", "winner_after"])
    for row in report.rows:
        writer.writerow([repr(row.epsilon), repr(row.delta_existing), repr(row.delta_pair),
                         row.winner_before, row.winner_after])
    stem = f"robustness_{report.algorithm}"
    io._write_text(out / f"{stem}.csv", buf.getvalue())
    meta = dict(report.meta)
    meta["error_radii"] = [row.error_radius for row in report.rows]
    positive = [row for row in report.rows if row.epsilon > 0]
    meta["fitted_sqrt_constant"] = report.fitted_sqrt_constant() if positive else None
    io.write_json(out / f"{stem}.json", meta)


def cmd_experiment(args) -> int:
    out = Path(args.out)
    name = args.name
    if name == "appendix-d":
        result = reproduce_appendix_d(args.lam)
        io.write_json(out / "appendix_d.json", result)
        print(f"winner flipped: {result['winner_flipped']}")
    elif name == "impossibility":
        inst = impossibility_instance(args.C)
        io.write_json(out / "impossibility.json", inst.as_dict())
        print(f"kappa = {inst.kappa!r}; p(a>b) = {inst.p_ab_1!r}, {inst.p_ab_2!r}")
    elif name == "clone-sweep":
        if args.instance == "cyclic":
            alts, pop, target, direction = cyclic_alternatives(), cyclic_population(), "c", [1.0, 0.0]
        else:
            alts, pop, target, direction = square_alternatives(), linear_population(), "p11", [-1.0, 0.0]
        space = SpaceBox.unit_cube(alts.dim)
        algorithms = ("mle", "wmle") if args.algorithm in (None, "both") else (args.algorithm,)
        for alg in algorithms:
            report = clone_robustness_sweep(
                alts, pop, target, direction, alg, args.eps, space, args.n_samples, args.seed,
                SolverConfig(lam=args.lam),
            )
            _write_robustness(out, report)
            for row in report.rows:
                print(f"{alg} eps={row.epsilon:g} delta_existing={row.delta_existing:.6g} "
                      f"delta_pair={row.delta_pair:.6g} winner {row.winner_before}->{row.winner_after}")
    elif name == "integral-check":
        rows = integral_check(args.instances, args.n_samples, args.seed)
        io.write_json(out / "integral_check.json", {"seed": args.seed, "n_samples": args.n_samples,
                                                    "instances": rows})
        ok = all(r["within_3se"] for r in rows)
        print(f"integral identity within 3 standard errors: {ok}")
    else:  # argparse restricts choices
        raise InvalidArgumentError(f"unknown experiment {name!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def common(lam_default=0.01):
        # fresh parent per command: parents share action objects
        c = argparse.ArgumentParser(add_help=False)
        c.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        c.add_argument("--lambda", dest="lam", type=float, default=lam_default,
                       help="regularization strength (default 0.01)")
        c.add_argument("--out", default=".", help="output directory (default .)")
        c.add_argument("-v", "--verbose", action="store_true")
        return c

    parser = argparse.ArgumentParser(
        prog="prefagg",
        description="Fit BTL rewards from pairwise preferences with the plain or Voronoi-weighted MLE.",
        epilog="exit codes: 0 success, 2 validation error, 3 non-convergence, 4 I/O error",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def matrix_source(p):
        p.add_argument("--alternatives", help="alternatives CSV (id,c1,...,cd)")
        p.add_argument("--matrix", help="win-rate matrix JSON")
        p.add_argument("--comparisons", help="comparisons JSONL")
        p.add_argument("--population", help="population JSON (exact win rates)")

    def weight_source(p):
        p.add_argument("--algorithm", choices=("mle", "wmle"), default="mle")
        p.add_argument("--weights", help="weights JSON (wmle)")
        p.add_argument("--space", help="unit-cube, factor2 or a space JSON (wmle)")
        p.add_argument("--n-samples", type=int, default=DEFAULT_SAMPLES)

    g = sub.add_parser("gen-dataset", parents=[common()], help="sample comparisons from a population")
    g.add_argument("--alternatives", required=True)
    g.add_argument("--population", required=True)
    g.add_argument("--per-pair", type=int, default=100)
    g.set_defaults(func=cmd_gen_dataset)

    e = sub.add_parser("estimate-weights", parents=[common()], help="Monte Carlo Voronoi weights")
    e.add_argument("--alternatives", required=True)
    e.add_argument("--space", default="unit-cube")
    e.add_argument("--n-samples", type=int, default=DEFAULT_SAMPLES)
    e.set_defaults(func=cmd_estimate_weights)

    s = sub.add_parser("solve", parents=[common()], help="fit rewards (mle or wmle)")
    matrix_source(s)
    weight_source(s)
    s.add_argument("--grad-tol", type=float, default=1e-9)
    s.add_argument("--max-iters", type=int, default=200_000)
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("analyze", parents=[common(None)],
                       help="win-rate analysis of a reward file")
    matrix_source(a)
    weight_source(a)
    a.set_defaults(algorithm=None)
    a.add_argument("--rewards", required=True)
    a.set_defaults(func=cmd_analyze)

    x = sub.add_parser("experiment", parents=[common()], help="built-in reproductions")
    x.add_argument("name", choices=("clone-sweep", "appendix-d", "impossibility", "integral-check"))
    x.add_argument("--C", type=_parse_C, default=LN2_SQUARED,
                   help="impossibility constant, >= ln(2)^2; 'ln2sq' for exactly ln(2)^2")
    x.add_argument("--algorithm", choices=("mle", "wmle", "both"), default="both")
    x.add_argument("--instance", choices=("linear", "cyclic"), default="linear")
    x.add_argument("--eps", type=_parse_eps, default=DEFAULT_EPS,
                   help="comma-separated epsilons (default 0.1,0.05,0.01,0.001)")
    x.add_argument("--n-samples", type=int, default=DEFAULT_SAMPLES)
    x.add_argument("--instances", type=int, default=5, help="integral-check instance count")
    x.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PrefAggError as exc:
        print(f"prefagg: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"prefagg: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
