"""JSON schema for experiment config files.

A config file is a JSON object with keys ``problem`` (an inline problem
object, or the string ``"paper_example"`` together with an optional ``B``),
``rule``, ``alpha``, ``R``, ``seed``, ``sc_process``, and ``pc_process``.
Each process entry is ``{"type": "synthetic", "mode": ..., "drop_probs": ...}``
or ``{"type": "test_inversion", "n": ..., "randomization": ..., "resamples": ...}``.
Unknown keys are rejected.  When the problem is ``"paper_example"``, the
experiment uses the benchmark with its model set already cut down to the
identified set, which is the shipped default scenario.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from .coverage import POINT_COVERAGE, SET_COVERAGE, SHARED, SYNTHETIC_MODES, SyntheticRegionSpec, DEFAULT_RESAMPLES
from .experiment import ExperimentConfig, ProcessSpec, TestInversionSpec
from .problem_io import ProblemFileError, _check_keys, _require_mapping, problem_from_dict

CONFIG_KEYS = ("problem", "B", "rule", "alpha", "R", "seed", "sc_process", "pc_process")
SYNTHETIC_PROCESS_KEYS = ("type", "mode", "drop_probs")
TEST_INVERSION_PROCESS_KEYS = ("type", "n", "randomization", "resamples")

DEFAULT_ALPHA = 0.05
DEFAULT_REPLICATIONS = 10_000


def _number(obj: Mapping[str, Any], key: str, what: str) -> float:
    value = obj[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ProblemFileError(f"{what}: {key!r} must be a number")
    return float(value)


def _integer(obj: Mapping[str, Any], key: str, what: str) -> int:
    value = obj[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise ProblemFileError(f"{what}: {key!r} must be an integer")
    return value


def process_spec_from_dict(data: Any, alpha: float, default_mode: str, what: str) -> ProcessSpec:
    entry = _require_mapping(data, what)
    if "type" not in entry:
        raise ProblemFileError(f"{what}: missing required key 'type'")
    kind = entry["type"]
    try:
        if kind == "synthetic":
            _check_keys(entry, SYNTHETIC_PROCESS_KEYS, ("type",), what)
            mode = entry.get("mode", default_mode)
            if mode not in SYNTHETIC_MODES:
                raise ProblemFileError(f"{what}: mode must be one of {SYNTHETIC_MODES}, got {mode!r}")
            drop_probs = entry.get("drop_probs")
            if drop_probs is not None:
                drop_probs = {str(k): float(v) for k, v in _require_mapping(drop_probs, f"{what}.drop_probs").items()}
            return SyntheticRegionSpec(alpha=alpha, mode=mode, drop_probs=drop_probs)
        if kind == "test_inversion":
            _check_keys(entry, TEST_INVERSION_PROCESS_KEYS, ("type", "n"), what)
            return TestInversionSpec(
                n=_integer(entry, "n", what),
                randomization=entry.get("randomization", SHARED),
                resamples=entry.get("resamples", DEFAULT_RESAMPLES),
            )
    except ValueError as exc:
        if isinstance(exc, ProblemFileError):
            raise
        raise ProblemFileError(f"{what}: {exc}") from None
    raise ProblemFileError(f"{what}: type must be 'synthetic' or 'test_inversion', got {kind!r}")


def experiment_config_from_dict(data: Any) -> ExperimentConfig:
    """Build an ExperimentConfig from a parsed config object."""
    # Imported here to keep module import light and cycle-free.
    from .problems import paper_example_identified

    obj = _require_mapping(data, "config")
    _check_keys(obj, CONFIG_KEYS, ("problem",), "config")

    problem_entry = obj["problem"]
    problem_name = None
    if problem_entry == "paper_example":
        b = _number(obj, "B", "config") if "B" in obj else 1.0
        try:
            problem = paper_example_identified(b)
        except ValueError as exc:
            raise ProblemFileError(f"config: {exc}") from None
        problem_name = "paper_example"
    elif isinstance(problem_entry, str):
        raise ProblemFileError(f"config: unknown problem name {problem_entry!r}; only 'paper_example' is built in")
    else:
        if "B" in obj:
            raise ProblemFileError("config: 'B' only applies to the built-in paper_example problem")
        problem = problem_from_dict(problem_entry)

    alpha = _number(obj, "alpha", "config") if "alpha" in obj else DEFAULT_ALPHA
    sc = process_spec_from_dict(
        obj.get("sc_process", {"type": "synthetic", "mode": SET_COVERAGE}), alpha, SET_COVERAGE, "sc_process"
    )
    pc = process_spec_from_dict(
        obj.get("pc_process", {"type": "synthetic", "mode": POINT_COVERAGE}), alpha, POINT_COVERAGE, "pc_process"
    )

    try:
        return ExperimentConfig(
            problem=problem,
            sc_process=sc,
            pc_process=pc,
            rule=obj.get("rule", "maxmin"),
            alpha=alpha,
            replications=_integer(obj, "R", "config") if "R" in obj else DEFAULT_REPLICATIONS,
            seed=_integer(obj, "seed", "config") if "seed" in obj else 0,
            problem_name=problem_name,
        )
    except ValueError as exc:
        if isinstance(exc, ProblemFileError):
            raise
        raise ProblemFileError(f"config: {exc}") from None


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFileError(f"{path}: invalid JSON: {exc}") from None
    return experiment_config_from_dict(data)
