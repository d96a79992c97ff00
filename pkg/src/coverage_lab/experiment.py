"""Replication engine for the set- vs point-coverage robustness comparison.

Each replication realizes one SC region and one PC region (synthetic or
test-inversion; test-inversion processes share a single data sample within
the replication), applies the configured robust rule to each region, and
checks whether the region-based worst case honestly lower-bounds the
identified-set worst case for the chosen action.  Violations, coverage,
action frequencies, and the realized identified-set minima are aggregated
with Monte Carlo standard errors.  For synthetic processes the region
distribution is finite, so `exact_analysis` enumerates it and reports the
same fields with zero standard error.

An empty region leaves the rule with no valid action; such replications are
recorded as degenerate, counted as automatic guarantee violations (worst
case assumed), excluded from the per-action frequencies, and reported
separately.  Action frequencies are unconditional fractions of all
replications, so frequencies plus the degenerate rate sum to one.

Replication ``r`` draws everything from the substream seeded by
``(seed, r)``; the record stream and every report are deterministic given
the master seed, whatever the execution order.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from ._version import __version__
from .coverage import (
    Region,
    RegionProvenance,
    SyntheticRegionSpec,
    binomial_se,
    synthetic_region,
    test_inversion_region,
    DEFAULT_RESAMPLES,
    RANDOMIZATIONS,
)
from .decision import DecisionProblem, RULE_FUNCTIONS, guarantee_holds
from .problem_io import problem_to_dict

PROCESS_SC = "SC"
PROCESS_PC = "PC"

RULE_MAXMIN = "maxmin"
RULE_MINMAX_REGRET = "minmax_regret"
RULES = tuple(RULE_FUNCTIONS)

CSV_COLUMNS = ("rep", "process", "region_labels", "rule", "chosen_action", "region_min", "identified_min", "violation")


@dataclass(frozen=True)
class TestInversionSpec:
    """Data-driven region process: sample size, randomization discipline, MC reference size."""

    __test__ = False  # not a pytest class, despite the name

    n: int
    randomization: str
    resamples: int = DEFAULT_RESAMPLES

    def __post_init__(self) -> None:
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError(f"sample size must be an integer >= 1, got {self.n!r}")
        if self.randomization not in RANDOMIZATIONS:
            raise ValueError(f"randomization must be one of {RANDOMIZATIONS}, got {self.randomization!r}")
        if self.resamples < 1:
            raise ValueError(f"resamples must be >= 1, got {self.resamples}")


ProcessSpec = SyntheticRegionSpec | TestInversionSpec


def spec_descriptor(spec: ProcessSpec) -> str:
    if isinstance(spec, SyntheticRegionSpec):
        return f"synthetic:{spec.mode}"
    return f"test_inversion:{spec.randomization}(n={spec.n})"


def spec_to_dict(spec: ProcessSpec) -> dict:
    if isinstance(spec, SyntheticRegionSpec):
        out: dict = {"type": "synthetic", "mode": spec.mode}
        if spec.drop_probs is not None:
            out["drop_probs"] = dict(spec.drop_probs)
        return out
    return {"type": "test_inversion", "n": spec.n, "randomization": spec.randomization, "resamples": spec.resamples}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a replication run needs; immutable and fully seed-determined."""

    problem: DecisionProblem
    sc_process: ProcessSpec
    pc_process: ProcessSpec
    rule: str = RULE_MAXMIN
    alpha: float = 0.05
    replications: int = 10_000
    seed: int = 0
    problem_name: str | None = None

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule!r}")
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if not (isinstance(self.replications, int) and self.replications >= 1):
            raise ValueError(f"replications must be an integer >= 1, got {self.replications!r}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        ns = []
        for spec in (self.sc_process, self.pc_process):
            if isinstance(spec, SyntheticRegionSpec):
                if spec.alpha != self.alpha:
                    raise ValueError(
                        f"synthetic process alpha {spec.alpha} differs from experiment alpha {self.alpha}"
                    )
            elif isinstance(spec, TestInversionSpec):
                if self.alpha == 0.0:
                    raise ValueError("test-inversion processes need alpha in (0, 1)")
                ns.append(spec.n)
            else:
                raise ValueError(f"unsupported process spec {spec!r}")
        if len(ns) == 2 and ns[0] != ns[1]:
            raise ValueError(
                f"SC and PC test-inversion processes share one sample per replication; "
                f"sample sizes differ ({ns[0]} vs {ns[1]})"
            )

    def to_dict(self) -> dict:
        out: dict = {
            "problem": problem_to_dict(self.problem),
            "rule": self.rule,
            "alpha": self.alpha,
            "R": self.replications,
            "seed": self.seed,
            "sc_process": spec_to_dict(self.sc_process),
            "pc_process": spec_to_dict(self.pc_process),
        }
        if self.problem_name is not None:
            out["problem_name"] = self.problem_name
        return out


@dataclass(frozen=True)
class ReplicationRecord:
    """One process's region and decision within one replication.

    ``region_min`` and ``identified_min`` are the chosen action's worst-case
    expected utilities over the region and over the identified set; the
    violation flag is exactly ``identified_min < region_min``.  Degenerate
    (empty-region) records carry no action and count as violations.
    """

    index: int
    process: str
    region_labels: tuple[str, ...]
    rule: str
    chosen_action: str | None
    region_min: float | None
    identified_min: float | None
    violation: bool

    @property
    def degenerate(self) -> bool:
        return self.chosen_action is None


@dataclass(frozen=True)
class ProcessSummary:
    """Aggregates for one region process within an experiment report."""

    process: str
    spec: str
    set_coverage: float
    set_coverage_se: float
    point_coverage: dict[str, float]
    point_coverage_se: dict[str, float]
    action_freq: dict[str, float]
    violation_rate: float
    violation_rate_se: float
    mean_identified_min: float | None
    degenerate_rate: float

    def to_dict(self) -> dict:
        return {
            "process": self.process,
            "spec": self.spec,
            "set_coverage": self.set_coverage,
            "set_coverage_se": self.set_coverage_se,
            "point_coverage": dict(self.point_coverage),
            "point_coverage_se": dict(self.point_coverage_se),
            "action_freq": dict(self.action_freq),
            "violation_rate": self.violation_rate,
            "violation_rate_se": self.violation_rate_se,
            "mean_identified_min": self.mean_identified_min,
            "degenerate_rate": self.degenerate_rate,
        }


@dataclass(frozen=True)
class ExperimentReport:
    """Full comparison of the SC- and PC-based decision rules."""

    kind: str  # "monte_carlo" or "exact"
    rule: str
    alpha: float
    replications: int | None
    seed: int | None
    theta_i: tuple[str, ...]
    processes: dict[str, ProcessSummary]
    config: dict
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "kind": self.kind,
            "rule": self.rule,
            "alpha": self.alpha,
            "replications": self.replications,
            "seed": self.seed,
            "theta_i": list(self.theta_i),
            "processes": {name: s.to_dict() for name, s in self.processes.items()},
            "config": self.config,
        }


def _identified_or_fail(problem: DecisionProblem) -> tuple[str, ...]:
    theta_i = tuple(problem.identified_labels())
    if not theta_i:
        raise ValueError("the problem's identified set is empty; coverage and guarantees are undefined")
    return theta_i


class _RuleEvaluator:
    """Evaluate (rule, region) pairs with memoization; regions repeat heavily."""

    def __init__(self, problem: DecisionProblem, rule: str, theta_i: Sequence[str]):
        self._problem = problem
        self._rule_fn = RULE_FUNCTIONS[rule]
        self._theta_i = list(theta_i)
        self._cache: dict[tuple[str, ...], tuple[str | None, float | None, float | None, bool]] = {}

    def __call__(self, labels: tuple[str, ...]) -> tuple[str | None, float | None, float | None, bool]:
        hit = self._cache.get(labels)
        if hit is None:
            if labels:
                chosen = self._rule_fn(self._problem, labels).chosen_action
                check = guarantee_holds(self._problem, chosen, labels, self._theta_i)
                hit = (chosen, check.region_min, check.identified_min, not check.holds)
            else:
                # No valid action exists; assume the worst.
                hit = (None, None, None, True)
            self._cache[labels] = hit
        return hit


def _realize(
    problem: DecisionProblem,
    spec: ProcessSpec,
    theta_i: tuple[str, ...],
    alpha: float,
    counts: np.ndarray | None,
    rng: np.random.Generator,
    provenance: RegionProvenance,
) -> Region:
    if isinstance(spec, SyntheticRegionSpec):
        return synthetic_region(theta_i, problem.model_labels, spec, rng, provenance)
    assert counts is not None
    return test_inversion_region(
        problem, counts, spec.n, alpha, spec.randomization, rng, spec.resamples, provenance
    )


def iter_replications(cfg: ExperimentConfig) -> Iterator[ReplicationRecord]:
    """Yield the SC record then the PC record for each replication, in index order."""
    theta_i = _identified_or_fail(cfg.problem)
    evaluate = _RuleEvaluator(cfg.problem, cfg.rule, theta_i)
    processes = ((PROCESS_SC, cfg.sc_process), (PROCESS_PC, cfg.pc_process))
    sample_n = next((s.n for _, s in processes if isinstance(s, TestInversionSpec)), None)
    p_x_probs = cfg.problem.p_x.probs

    for r in range(cfg.replications):
        rng = np.random.default_rng([cfg.seed, r])
        counts = rng.multinomial(sample_n, p_x_probs) if sample_n is not None else None
        for name, spec in processes:
            provenance = RegionProvenance(process=spec_descriptor(spec), replication=r, seed=cfg.seed)
            region = _realize(cfg.problem, spec, theta_i, cfg.alpha, counts, rng, provenance)
            chosen, region_min, identified_min, violation = evaluate(region.labels)
            yield ReplicationRecord(
                index=r,
                process=name,
                region_labels=region.labels,
                rule=cfg.rule,
                chosen_action=chosen,
                region_min=region_min,
                identified_min=identified_min,
                violation=violation,
            )


def summarize_records(cfg: ExperimentConfig, records: Iterable[ReplicationRecord]) -> ExperimentReport:
    """Aggregate a record stream into an ExperimentReport (recomputable, order-insensitive)."""
    theta_i = _identified_or_fail(cfg.problem)
    stats = {
        name: {
            "n": 0,
            "violations": 0,
            "set_hits": 0,
            "point_hits": {lbl: 0 for lbl in theta_i},
            "action_counts": {lbl: 0 for lbl in cfg.problem.action_labels},
            "degenerate": 0,
            "idmin_sum": 0.0,
        }
        for name in (PROCESS_SC, PROCESS_PC)
    }

    for rec in records:
        s = stats[rec.process]
        s["n"] += 1
        s["violations"] += rec.violation
        inside = set(rec.region_labels)
        covered_all = True
        for lbl in theta_i:
            if lbl in inside:
                s["point_hits"][lbl] += 1
            else:
                covered_all = False
        s["set_hits"] += covered_all
        if rec.degenerate:
            s["degenerate"] += 1
        else:
            s["action_counts"][rec.chosen_action] += 1
            s["idmin_sum"] += rec.identified_min

    processes = {}
    for name, spec in ((PROCESS_SC, cfg.sc_process), (PROCESS_PC, cfg.pc_process)):
        s = stats[name]
        n = s["n"]
        if n == 0:
            raise ValueError(f"record stream contains no {name} records")
        set_cov = s["set_hits"] / n
        point_cov = {lbl: hits / n for lbl, hits in s["point_hits"].items()}
        viol = s["violations"] / n
        acted = n - s["degenerate"]
        processes[name] = ProcessSummary(
            process=name,
            spec=spec_descriptor(spec),
            set_coverage=set_cov,
            set_coverage_se=binomial_se(set_cov, n),
            point_coverage=point_cov,
            point_coverage_se={lbl: binomial_se(c, n) for lbl, c in point_cov.items()},
            action_freq={lbl: count / n for lbl, count in s["action_counts"].items()},
            violation_rate=viol,
            violation_rate_se=binomial_se(viol, n),
            mean_identified_min=(s["idmin_sum"] / acted) if acted else None,
            degenerate_rate=s["degenerate"] / n,
        )

    return ExperimentReport(
        kind="monte_carlo",
        rule=cfg.rule,
        alpha=cfg.alpha,
        replications=cfg.replications,
        seed=cfg.seed,
        theta_i=theta_i,
        processes=processes,
        config=cfg.to_dict(),
    )


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the full Monte Carlo comparison; deterministic given the master seed."""
    return summarize_records(cfg, iter_replications(cfg))


def exact_analysis(cfg: ExperimentConfig) -> ExperimentReport:
    """Enumerate the synthetic region distribution and report exact probabilities.

    Requires both processes to be synthetic; a test-inversion region's
    distribution is not finitely enumerable.  Standard errors are zero.
    """
    for spec in (cfg.sc_process, cfg.pc_process):
        if not isinstance(spec, SyntheticRegionSpec):
            raise ValueError("exact analysis requires synthetic SC and PC processes")

    theta_i = _identified_or_fail(cfg.problem)
    evaluate = _RuleEvaluator(cfg.problem, cfg.rule, theta_i)
    all_labels = cfg.problem.model_labels

    processes = {}
    for name, spec in ((PROCESS_SC, cfg.sc_process), (PROCESS_PC, cfg.pc_process)):
        d = spec.drop_vector(theta_i)
        outcomes: list[tuple[frozenset[str], float]] = []
        if spec.mode == "set_coverage":
            outcomes.append((frozenset(), 1.0 - cfg.alpha))
            outcomes.extend((frozenset({lbl}), float(dj)) for lbl, dj in zip(theta_i, d) if dj > 0.0)
        else:
            for flags in itertools.product((False, True), repeat=len(theta_i)):
                prob = 1.0
                for dj, dropped in zip(d, flags):
                    prob *= dj if dropped else (1.0 - dj)
                if prob > 0.0:
                    outcomes.append((frozenset(lbl for lbl, f in zip(theta_i, flags) if f), prob))

        viol = 0.0
        set_cov = 0.0
        point_cov = {lbl: 0.0 for lbl in theta_i}
        action_freq = {lbl: 0.0 for lbl in cfg.problem.action_labels}
        degenerate = 0.0
        idmin_weighted = 0.0
        for dropped, prob in outcomes:
            labels = tuple(lbl for lbl in all_labels if lbl not in dropped)
            chosen, _, identified_min, violation = evaluate(labels)
            if violation:
                viol += prob
            if not dropped:
                set_cov += prob
            for lbl in theta_i:
                if lbl not in dropped:
                    point_cov[lbl] += prob
            if chosen is None:
                degenerate += prob
            else:
                action_freq[chosen] += prob
                idmin_weighted += prob * identified_min

        acted = 1.0 - degenerate
        processes[name] = ProcessSummary(
            process=name,
            spec=spec_descriptor(spec),
            set_coverage=set_cov,
            set_coverage_se=0.0,
            point_coverage=point_cov,
            point_coverage_se={lbl: 0.0 for lbl in theta_i},
            action_freq=action_freq,
            violation_rate=viol,
            violation_rate_se=0.0,
            mean_identified_min=(idmin_weighted / acted) if acted > 0.0 else None,
            degenerate_rate=degenerate,
        )

    return ExperimentReport(
        kind="exact",
        rule=cfg.rule,
        alpha=cfg.alpha,
        replications=None,
        seed=None,
        theta_i=theta_i,
        processes=processes,
        config=cfg.to_dict(),
    )


def write_records_csv(records: Iterable[ReplicationRecord], stream: IO[str]) -> int:
    """Write the per-replication CSV; returns the number of rows written."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    rows = 0
    for rec in records:
        writer.writerow(
            (
                rec.index,
                rec.process,
                "|".join(rec.region_labels),
                rec.rule,
                rec.chosen_action if rec.chosen_action is not None else "",
                repr(rec.region_min) if rec.region_min is not None else "",
                repr(rec.identified_min) if rec.identified_min is not None else "",
                int(rec.violation),
            )
        )
        rows += 1
    return rows
