"""Command-line surface: identify, decide, coverage, experiment.

Exit codes: 0 success, 2 input/config error, 3 I/O error.  Randomized
subcommands take --seed, falling back to the COVERAGE_LAB_SEED environment
variable, then 0; identical seed and flags give identical output bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from ._version import __version__
from .config_io import DEFAULT_ALPHA, DEFAULT_REPLICATIONS, experiment_config_from_dict
from .coverage import (
    INDEPENDENT,
    POINT_COVERAGE,
    SET_COVERAGE,
    SHARED,
    SyntheticRegionSpec,
    estimate_coverage,
    synthetic_region,
    test_inversion_region,
)
from .decision import RULE_FUNCTIONS
from .experiment import (
    PROCESS_PC,
    PROCESS_SC,
    TestInversionSpec,
    exact_analysis,
    iter_replications,
    run_experiment,
    spec_descriptor,
    summarize_records,
    write_records_csv,
)
from .model import identified_set, implied_marginal
from .problem_io import ProblemFileError, dump_problem, load_problem
from .problems import paper_example, paper_example_identified

SEED_ENV_VAR = "COVERAGE_LAB_SEED"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _seed_override(args) -> int | None:
    """--seed wins; the environment variable is the fallback; None means neither given."""
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise ProblemFileError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
        if seed < 0:
            raise ProblemFileError(f"{SEED_ENV_VAR} must be nonnegative, got {seed}")
        return seed
    return None


def _load_cli_problem(args, identified_only: bool = False):
    if args.paper_example:
        b = args.B if args.B is not None else 1.0
        return paper_example_identified(b) if identified_only else paper_example(b)
    if args.problem is None:
        raise ProblemFileError("either --problem FILE or --paper-example is required")
    if args.B is not None:
        raise ProblemFileError("--B only applies to --paper-example")
    return load_problem(args.problem)


def cmd_identify(args) -> int:
    if args.dump_paper_example is not None:
        b = args.B if args.B is not None else 1.0
        dump_problem(paper_example(b), args.dump_paper_example)
        print(f"wrote problem file: {args.dump_paper_example}")
        return EXIT_OK

    problem = _load_cli_problem(args)
    restrictions = () if args.no_restrictions else problem.restrictions
    tol = args.tol if args.tol is not None else problem.tol
    labels = identified_set(problem.theta, problem.p_x, restrictions, tol)

    for label in labels:
        print(label)
    if not labels:
        print("warning: identified set is empty", file=sys.stderr)
    print(f"# implied marginal over x ({', '.join(problem.space.x_values)}):")
    for m in problem.theta:
        probs = " ".join(_fmt(v) for v in implied_marginal(m).probs)
        print(f"#   {m.label}: {probs}")
    return EXIT_OK


def cmd_decide(args) -> int:
    problem = _load_cli_problem(args)
    region = [part for part in args.region.split(",") if part]
    if not region:
        raise ProblemFileError("--region must list at least one model label")
    evaluation = RULE_FUNCTIONS[args.rule](problem, region)

    print(f"rule: {args.rule}")
    print(f"region: {','.join(region)}")
    for label, value in evaluation.per_action_values.items():
        print(f"value[{label}]: {_fmt(value)}")
    print(f"chosen: {evaluation.chosen_action}")
    print(f"value: {_fmt(evaluation.value)}")
    if args.rule == "minmax_regret":
        print(f"worst_case_regret: {_fmt(evaluation.worst_case_regret)}")
    print(f"tie_set: {','.join(evaluation.tie_set)}")
    return EXIT_OK


def _coverage_process(args, problem, theta_i, alpha, which):
    """Build a region-producing closure for one process slot (sc or pc)."""
    if args.test_inversion:
        randomization = SHARED if which == PROCESS_SC else INDEPENDENT
        spec = TestInversionSpec(n=args.n, randomization=randomization, resamples=args.resamples)
        p_x_probs = problem.p_x.probs

        def process(rng):
            counts = rng.multinomial(spec.n, p_x_probs)
            return test_inversion_region(problem, counts, spec.n, alpha, spec.randomization, rng, spec.resamples)

    else:
        mode = SET_COVERAGE if which == PROCESS_SC else POINT_COVERAGE
        spec = SyntheticRegionSpec(alpha=alpha, mode=mode)

        def process(rng):
            return synthetic_region(theta_i, problem.model_labels, spec, rng)

    return spec, process


def cmd_coverage(args) -> int:
    problem = _load_cli_problem(args, identified_only=True)
    theta_i = problem.identified_labels()
    if not theta_i:
        raise ProblemFileError("the problem's identified set is empty; coverage is undefined")
    alpha = args.alpha if args.alpha is not None else DEFAULT_ALPHA
    override = _seed_override(args)
    seed = override if override is not None else 0
    which = [PROCESS_SC, PROCESS_PC] if args.process == "both" else [args.process.upper()]

    for name in which:
        spec, process = _coverage_process(args, problem, theta_i, alpha, name)
        report = estimate_coverage(process, theta_i, args.R, seed)
        print(f"process: {name} {spec_descriptor(spec)} alpha={_fmt(alpha)} R={args.R} seed={seed}")
        print(f"set_coverage: {_fmt(report.set_coverage)} (se {_fmt(report.set_coverage_se)})")
        for label in theta_i:
            print(
                f"point_coverage[{label}]: {_fmt(report.point_coverage[label])} "
                f"(se {_fmt(report.point_coverage_se[label])})"
            )
    return EXIT_OK


def _experiment_config(args):
    if args.paper_example and args.config is not None:
        raise ProblemFileError("--paper-example and --config are mutually exclusive")
    if args.paper_example:
        data = {"problem": "paper_example"}
    elif args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ProblemFileError(f"{args.config}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ProblemFileError(f"{args.config}: expected a JSON object at top level")
    else:
        raise ProblemFileError("either --config FILE or --paper-example is required")

    if args.test_inversion:
        data["sc_process"] = {"type": "test_inversion", "n": args.n, "randomization": SHARED, "resamples": args.resamples}
        data["pc_process"] = {"type": "test_inversion", "n": args.n, "randomization": INDEPENDENT, "resamples": args.resamples}
    elif args.synthetic:
        data["sc_process"] = {"type": "synthetic", "mode": SET_COVERAGE}
        data["pc_process"] = {"type": "synthetic", "mode": POINT_COVERAGE}

    if args.alpha is not None:
        data["alpha"] = args.alpha
    if args.B is not None:
        data["B"] = args.B
    if args.R is not None:
        data["R"] = args.R
    if args.rule is not None:
        data["rule"] = args.rule
    seed = _seed_override(args)
    if seed is not None:
        data["seed"] = seed
    return experiment_config_from_dict(data)


def _print_report(report) -> None:
    reps = report.replications if report.replications is not None else "exact"
    print(f"experiment: rule={report.rule} alpha={_fmt(report.alpha)} R={reps} seed={report.seed}")
    print(f"identified set: {','.join(report.theta_i)}")
    for name in (PROCESS_SC, PROCESS_PC):
        s = report.processes[name]
        print(f"process {name} ({s.spec}):")
        print(f"  set_coverage: {_fmt(s.set_coverage)} (se {_fmt(s.set_coverage_se)})")
        for label, value in s.point_coverage.items():
            print(f"  point_coverage[{label}]: {_fmt(value)} (se {_fmt(s.point_coverage_se[label])})")
        print(f"  violation_rate: {_fmt(s.violation_rate)} (se {_fmt(s.violation_rate_se)})")
        freq = " ".join(f"{label}={_fmt(value)}" for label, value in s.action_freq.items())
        print(f"  action_freq: {freq} (degenerate={_fmt(s.degenerate_rate)})")
        mean = "n/a" if s.mean_identified_min is None else _fmt(s.mean_identified_min)
        print(f"  mean_identified_min: {mean}")


def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.exact:
        report = exact_analysis(cfg)
        records = []
    else:
        records = list(iter_replications(cfg))
        report = summarize_records(cfg, records)

    _print_report(report)

    if args.format in ("json", "both"):
        summary_path = out_dir / "summary.json"
        with open(summary_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
        print(f"wrote summary: {summary_path}")
    if args.format in ("csv", "both"):
        csv_path = out_dir / "replications.csv"
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            write_records_csv(records, fh)
        print(f"wrote replications: {csv_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coverage-lab",
        description="Robust decisions over partially identified finite models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_problem_flags(p, with_tol=False):
        p.add_argument("--problem", metavar="FILE", help="problem description file (JSON)")
        p.add_argument("--paper-example", action="store_true", help="use the built-in gender/talent benchmark")
        p.add_argument("--B", type=float, default=None, help="benefit scale for the benchmark (default 1)")
        if with_tol:
            p.add_argument("--tol", type=float, default=None, help="marginal-matching tolerance override")

    p_identify = sub.add_parser("identify", help="compute the identified set of a problem")
    add_problem_flags(p_identify, with_tol=True)
    p_identify.add_argument("--no-restrictions", action="store_true", help="ignore a priori restrictions")
    p_identify.add_argument(
        "--dump-paper-example", metavar="PATH", default=None, help="write the benchmark problem file and exit"
    )
    p_identify.set_defaults(func=cmd_identify)

    p_decide = sub.add_parser("decide", help="evaluate a robust rule on a region of models")
    add_problem_flags(p_decide)
    p_decide.add_argument("--region", required=True, help="comma-separated model labels")
    p_decide.add_argument("--rule", choices=sorted(RULE_FUNCTIONS), default="maxmin")
    p_decide.set_defaults(func=cmd_decide)

    def add_process_flags(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--synthetic", action="store_true", help="synthetic SC/PC processes (default)")
        group.add_argument("--test-inversion", action="store_true", help="data-driven test-inversion processes")
        p.add_argument("--n", type=int, default=1000, help="sample size for test inversion (default 1000)")
        p.add_argument("--resamples", type=int, default=2000, help="MC reference size per p-value (default 2000)")
        p.add_argument("--alpha", type=float, default=None, help="coverage level (default 0.05)")
        p.add_argument("--seed", type=int, default=None, help=f"master seed (fallback ${SEED_ENV_VAR}, then 0)")

    p_coverage = sub.add_parser("coverage", help="estimate set/point coverage of a region process")
    add_problem_flags(p_coverage)
    add_process_flags(p_coverage)
    p_coverage.add_argument("--process", choices=["sc", "pc", "both"], default="both")
    p_coverage.add_argument("--R", type=int, default=DEFAULT_REPLICATIONS, help="replications")
    p_coverage.set_defaults(func=cmd_coverage)

    p_experiment = sub.add_parser("experiment", help="run the SC vs PC robustness comparison")
    p_experiment.add_argument("--config", metavar="FILE", help="experiment config file (JSON)")
    p_experiment.add_argument("--paper-example", action="store_true", help="use the built-in benchmark config")
    p_experiment.add_argument("--B", type=float, default=None, help="benefit scale for the benchmark")
    add_process_flags(p_experiment)
    p_experiment.add_argument("--R", type=int, default=None, help="replications")
    p_experiment.add_argument("--rule", choices=sorted(RULE_FUNCTIONS), default=None)
    p_experiment.add_argument("--exact", action="store_true", help="exact enumeration instead of Monte Carlo")
    p_experiment.add_argument("--out", default=".", help="output directory (default current directory)")
    p_experiment.add_argument("--format", choices=["csv", "json", "both"], default="both")
    p_experiment.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProblemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
