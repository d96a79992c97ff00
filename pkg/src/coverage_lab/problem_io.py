"""JSON schema for decision-problem files.

A problem file is a single JSON object with keys ``x_values``, ``eps_values``,
``models`` (label -> flat row-major probability list over the (x, eps) grid),
``p_x`` (list aligned with x_values), ``restrictions`` (list of
``{"type": "latent_marginal_eq", "eps": label, "value": real}``), ``actions``
(label -> flat row-major outcome list), and ``tol``.  Unknown keys are
rejected.  Dump and load round-trip field for field.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .decision import Action, DecisionProblem
from .model import LatentMarginalEq, Model, ModelSet, ObservableMarginal, StateSpace

PROBLEM_KEYS = ("x_values", "eps_values", "models", "p_x", "restrictions", "actions", "tol")
RESTRICTION_KEYS = ("type", "eps", "value")


class ProblemFileError(ValueError):
    """A problem or config file failed validation; message names the offending field."""


def _require_mapping(obj: Any, what: str) -> Mapping[str, Any]:
    if not isinstance(obj, Mapping):
        raise ProblemFileError(f"{what}: expected a JSON object, got {type(obj).__name__}")
    return obj


def _check_keys(obj: Mapping[str, Any], allowed: tuple[str, ...], required: tuple[str, ...], what: str) -> None:
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ProblemFileError(f"{what}: unknown key(s) {sorted(unknown)}; allowed: {list(allowed)}")
    missing = set(required) - set(obj)
    if missing:
        raise ProblemFileError(f"{what}: missing required key(s) {sorted(missing)}")


def _as_labels(obj: Any, what: str) -> tuple[str, ...]:
    if not isinstance(obj, list) or not all(isinstance(v, str) for v in obj):
        raise ProblemFileError(f"{what}: expected a list of strings")
    return tuple(obj)


def _as_numbers(obj: Any, what: str) -> list[float]:
    if not isinstance(obj, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
        raise ProblemFileError(f"{what}: expected a list of numbers")
    return [float(v) for v in obj]


def _grid(values: list[float], space: StateSpace, what: str) -> np.ndarray:
    if len(values) != space.n_states:
        raise ProblemFileError(
            f"{what}: expected {space.n_states} entries "
            f"({space.n_x} x values times {space.n_eps} eps values), got {len(values)}"
        )
    return np.array(values).reshape(space.n_x, space.n_eps)


def _restriction_from_dict(obj: Any, what: str) -> LatentMarginalEq:
    entry = _require_mapping(obj, what)
    _check_keys(entry, RESTRICTION_KEYS, RESTRICTION_KEYS, what)
    if entry["type"] != "latent_marginal_eq":
        raise ProblemFileError(
            f"{what}: unsupported restriction type {entry['type']!r}; only 'latent_marginal_eq' is supported"
        )
    if not isinstance(entry["eps"], str):
        raise ProblemFileError(f"{what}: 'eps' must be a string label")
    if not isinstance(entry["value"], (int, float)) or isinstance(entry["value"], bool):
        raise ProblemFileError(f"{what}: 'value' must be a number")
    return LatentMarginalEq(eps=entry["eps"], value=float(entry["value"]))


def problem_from_dict(data: Any) -> DecisionProblem:
    """Build a DecisionProblem from a parsed problem-file object."""
    obj = _require_mapping(data, "problem")
    _check_keys(obj, PROBLEM_KEYS, ("x_values", "eps_values", "models", "p_x", "actions"), "problem")

    space = StateSpace(
        x_values=_as_labels(obj["x_values"], "x_values"),
        eps_values=_as_labels(obj["eps_values"], "eps_values"),
    )

    models_obj = _require_mapping(obj["models"], "models")
    if not models_obj:
        raise ProblemFileError("models: at least one model is required")
    models = []
    for label, flat in models_obj.items():
        values = _as_numbers(flat, f"models[{label!r}]")
        try:
            models.append(Model(label=label, space=space, pmf=_grid(values, space, f"models[{label!r}]")))
        except ValueError as exc:
            raise ProblemFileError(f"models[{label!r}]: {exc}") from None

    p_x_values = _as_numbers(obj["p_x"], "p_x")
    if len(p_x_values) != space.n_x:
        raise ProblemFileError(f"p_x: expected {space.n_x} entries (one per x label), got {len(p_x_values)}")
    try:
        p_x = ObservableMarginal(x_values=space.x_values, probs=p_x_values)
    except ValueError as exc:
        raise ProblemFileError(f"p_x: {exc}") from None

    restrictions_obj = obj.get("restrictions", [])
    if not isinstance(restrictions_obj, list):
        raise ProblemFileError("restrictions: expected a list")
    restrictions = tuple(
        _restriction_from_dict(entry, f"restrictions[{i}]") for i, entry in enumerate(restrictions_obj)
    )
    for r in restrictions:
        if r.eps not in space.eps_values:
            raise ProblemFileError(
                f"restrictions: eps label {r.eps!r} not in eps_values {list(space.eps_values)}"
            )

    actions_obj = _require_mapping(obj["actions"], "actions")
    if not actions_obj:
        raise ProblemFileError("actions: at least one action is required")
    actions = []
    for label, flat in actions_obj.items():
        values = _as_numbers(flat, f"actions[{label!r}]")
        try:
            actions.append(Action(label=label, outcomes=_grid(values, space, f"actions[{label!r}]")))
        except ValueError as exc:
            raise ProblemFileError(f"actions[{label!r}]: {exc}") from None

    tol = obj.get("tol", 0.0)
    if not isinstance(tol, (int, float)) or isinstance(tol, bool):
        raise ProblemFileError("tol: expected a number")

    try:
        return DecisionProblem(
            space=space,
            theta=ModelSet(space=space, models=tuple(models)),
            p_x=p_x,
            restrictions=restrictions,
            actions=tuple(actions),
            tol=float(tol),
        )
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from None


def problem_to_dict(p: DecisionProblem) -> dict[str, Any]:
    """Serialize a DecisionProblem to the problem-file object (lossless for file-borne problems)."""
    restrictions = []
    for r in p.restrictions:
        if not isinstance(r, LatentMarginalEq):
            raise ValueError(
                f"restriction {getattr(r, 'description', r)!r} has no file form; "
                "only latent_marginal_eq restrictions can be serialized"
            )
        restrictions.append({"type": "latent_marginal_eq", "eps": r.eps, "value": r.value})
    return {
        "x_values": list(p.space.x_values),
        "eps_values": list(p.space.eps_values),
        "models": {m.label: [float(v) for v in m.pmf.ravel()] for m in p.theta},
        "p_x": [float(v) for v in p.p_x.probs],
        "restrictions": restrictions,
        "actions": {a.label: [float(v) for v in a.outcomes.ravel()] for a in p.actions},
        "tol": float(p.tol),
    }


def load_problem(path: str | Path) -> DecisionProblem:
    """Parse a problem file; raises ProblemFileError with a field diagnostic on bad input."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFileError(f"{path}: invalid JSON: {exc}") from None
    return problem_from_dict(data)


def dump_problem(p: DecisionProblem, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(p), fh, indent=2)
        fh.write("\n")
