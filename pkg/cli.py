# cli.py — command-line front end: check, solve, gen, bench, oracle
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

import bench
from exact_oracle import DEFAULT_SCHEDULER_LIMIT, SchedulerLimitExceeded, exact_reachability
from interval_iteration import (DEFAULT_EPSILON, DEFAULT_MAX_SWEEPS, SolveConfig, SolveTimeout,
                                SweepLimitExceeded, Termination, Variant, solve)
from mdp_model import ModelError, build_counterexample, load_model, serialize_model
from pctl_check import PropertyError, Verdict, check, parse_property
from run_report import RunReport, render_structured, render_text
from safe_rounding import Precision, RoundingStrategy

logger = logging.getLogger("cli")

EXIT_CODES = {Verdict.TRUE: 0, Verdict.FALSE: 1, Verdict.UNKNOWN: 2}
EXIT_USAGE = 3
EXIT_INCOMPLETE = 4


def _rational(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")
    return value


def _choices(enum_cls, text: str) -> list:
    names = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return [enum_cls(n) for n in names]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _solver_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alg", choices=[v.value for v in Variant], default=Variant.SR_SII.value)
    p.add_argument("--epsilon", type=_rational, default=DEFAULT_EPSILON)
    p.add_argument("--precision", choices=[x.value for x in Precision], default=Precision.DOUBLE.value)
    p.add_argument("--rounding", choices=[x.value for x in RoundingStrategy],
                   default=RoundingStrategy.HARDWARE.value)
    p.add_argument("--check-all-states", action="store_true", default=None)
    p.add_argument("--max-sweeps", type=int, default=DEFAULT_MAX_SWEEPS)
    p.add_argument("--format", choices=["text", "structured"], default="text")
    p.add_argument("--timeout", type=float, default=None, help="seconds for the iteration phase")


def _config(args: argparse.Namespace) -> SolveConfig:
    return SolveConfig(variant=Variant(args.alg), epsilon=args.epsilon,
                       precision=Precision(args.precision), strategy=RoundingStrategy(args.rounding),
                       max_sweeps=args.max_sweeps, check_all_states=args.check_all_states,
                       time_limit=args.timeout)


def _emit(report: RunReport, fmt: str) -> None:
    print(render_structured(report) if fmt == "structured" else render_text(report))


def _require_complete(result) -> None:
    """Raise after the partial report has been printed; main maps this to exit 4."""
    if result.termination is Termination.SWEEP_LIMIT:
        raise SweepLimitExceeded(result)


# ───── Commands ────────────────────────────────────────────
def cmd_check(args: argparse.Namespace) -> int:
    m = load_model(args.model)
    prop = parse_property(args.property)
    outcome = check(m, prop, _config(args), refine=args.refine)
    verdict = outcome.verdict.value if outcome.verdict is not None else None
    _emit(RunReport.from_result(args.model, prop.text, outcome.result, verdict, outcome.refined), args.format)
    _require_complete(outcome.result)
    if outcome.verdict is None:
        return 0
    return EXIT_CODES[outcome.verdict]


def cmd_solve(args: argparse.Namespace) -> int:
    m = load_model(args.model)
    cfg = _config(args)
    result = solve(m, m.goal_states(args.label), args.opt, cfg)
    if not cfg.variant.safe:
        logger.warning("%s is not a safe variant; the midpoint %r carries no guarantee",
                       cfg.variant.value, result.midpoint)
    prop = f'P{args.opt}=? [ F "{args.label}" ]'
    _emit(RunReport.from_result(args.model, prop, result), args.format)
    _require_complete(result)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    text = serialize_model(build_counterexample(args.n, args.gamma))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cases: List[bench.BenchCase] = []
    for path in args.models:
        m = load_model(path)
        cases.append(bench.BenchCase(path, m, m.goal_states(args.label), args.opt))
    if args.random:
        cases += bench.random_cases(args.seed, args.random, args.opt)
    if not cases:
        cases = bench.catalogue_cases()
    df = bench.run_grid(cases, args.variants, args.strategies, args.precisions,
                        repetitions=args.reps, epsilon=args.epsilon, timeout=args.timeout,
                        jobs=args.jobs)
    if args.compare:
        table = bench.compare(df, *args.compare)
        print(table.to_csv(index=False), end="")
        return 0
    df = bench.summarize(df) if args.summary else bench.with_summary(df)
    bench.write_csv(df, args.out or sys.stdout)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    m = load_model(args.model)
    result = exact_reachability(m, m.goal_states(args.label), args.opt, args.limit)
    print(f"{result.value.numerator}/{result.value.denominator}")
    return 0


# ───── Parser ──────────────────────────────────────────────
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cli", description="Safe-rounding interval iteration for MDPs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help='check a property such as P<=1/2 [ F "goal" ]')
    p.add_argument("model")
    p.add_argument("property")
    p.add_argument("--refine", action="store_true", help="on unknown, retry once with epsilon / 100")
    _solver_options(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="bound the max/min reachability probability of a label")
    p.add_argument("model")
    p.add_argument("label")
    p.add_argument("--opt", choices=["max", "min"], default="max")
    _solver_options(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="emit the rounding counterexample model")
    p.add_argument("n", type=int)
    p.add_argument("gamma", type=_rational)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="time a variant × strategy × precision grid")
    p.add_argument("models", nargs="*")
    p.add_argument("--label", default="goal")
    p.add_argument("--opt", choices=["max", "min"], default="max")
    p.add_argument("--random", type=int, default=0, help="add N seeded random models")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variants", type=lambda t: _choices(Variant, t), default=list(Variant))
    p.add_argument("--strategies", type=lambda t: _choices(RoundingStrategy, t),
                   default=list(RoundingStrategy))
    p.add_argument("--precisions", type=lambda t: _choices(Precision, t), default=list(Precision))
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--epsilon", type=_rational, default=DEFAULT_EPSILON)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--summary", action="store_true", help="median-of-repetitions rows only")
    p.add_argument("--compare", nargs=2, metavar=("A", "B"), help="time ratio of variant A to B")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="exact rational value by scheduler enumeration")
    p.add_argument("model")
    p.add_argument("label")
    p.add_argument("--opt", choices=["max", "min"], default="max")
    p.add_argument("--limit", type=int, default=DEFAULT_SCHEDULER_LIMIT)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="[%(levelname)s] %(message)s", force=True)
    try:
        return args.func(args)
    except (SweepLimitExceeded, SolveTimeout) as e:
        logger.error("%s", e)
        return EXIT_INCOMPLETE
    except (ModelError, PropertyError, SchedulerLimitExceeded, ValueError, OSError, KeyError) as e:
        logger.error("%s", e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
