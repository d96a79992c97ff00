"""Robust decisions over partially identified finite models.

Identified sets, maxmin and minmax-regret rules over model regions, synthetic
and test-inversion confidence-region processes with set or point coverage,
and a seeded replication engine comparing the two coverage notions.
"""

from ._version import __version__
from .model import (
    LatentMarginalEq,
    Model,
    ModelSet,
    ObservableMarginal,
    PredicateRestriction,
    Restriction,
    StateSpace,
    identified_set,
    implied_marginal,
    marginal_deviation,
)
from .decision import (
    Action,
    DecisionProblem,
    GuaranteeCheck,
    RegionEvaluation,
    expected_utility,
    guarantee_holds,
    maxmin_action,
    minmax_regret_action,
    regret,
    restrict_problem,
    utility_matrix,
)
from .problems import paper_example, paper_example_identified
from .coverage import (
    CoverageReport,
    Region,
    RegionProvenance,
    SampleSpec,
    SyntheticRegionSpec,
    draw_sample,
    estimate_coverage,
    marginal_test_statistic,
    synthetic_region,
    test_inversion_region,
)
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    ProcessSummary,
    ReplicationRecord,
    TestInversionSpec,
    exact_analysis,
    iter_replications,
    run_experiment,
    summarize_records,
    write_records_csv,
)
from .problem_io import ProblemFileError, dump_problem, load_problem, problem_from_dict, problem_to_dict
from .config_io import experiment_config_from_dict, load_experiment_config

__all__ = [
    "__version__",
    "Action",
    "CoverageReport",
    "DecisionProblem",
    "ExperimentConfig",
    "ExperimentReport",
    "GuaranteeCheck",
    "LatentMarginalEq",
    "Model",
    "ModelSet",
    "ObservableMarginal",
    "PredicateRestriction",
    "ProblemFileError",
    "ProcessSummary",
    "Region",
    "RegionEvaluation",
    "RegionProvenance",
    "ReplicationRecord",
    "Restriction",
    "SampleSpec",
    "StateSpace",
    "SyntheticRegionSpec",
    "TestInversionSpec",
    "draw_sample",
    "dump_problem",
    "estimate_coverage",
    "exact_analysis",
    "expected_utility",
    "experiment_config_from_dict",
    "guarantee_holds",
    "identified_set",
    "implied_marginal",
    "iter_replications",
    "load_experiment_config",
    "load_problem",
    "marginal_deviation",
    "marginal_test_statistic",
    "maxmin_action",
    "minmax_regret_action",
    "paper_example",
    "paper_example_identified",
    "problem_from_dict",
    "problem_to_dict",
    "regret",
    "restrict_problem",
    "run_experiment",
    "summarize_records",
    "synthetic_region",
    "test_inversion_region",
    "utility_matrix",
    "write_records_csv",
]
