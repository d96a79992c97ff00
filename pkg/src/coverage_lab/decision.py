"""Expected utilities and robust action rules over regions of the model set.

An action maps every state to a real outcome; its expected utility under a
model is the pmf-weighted sum of outcomes.  The two robust rules evaluate an
action by its worst case over a region of models: maxmin uses the utility
itself, minmax regret uses the (signed, nonpositive) shortfall from the best
achievable utility under each model.  Both pick the action maximizing that
worst case, breaking ties by declared action order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import (
    Model,
    ModelSet,
    ObservableMarginal,
    Restriction,
    StateSpace,
    _unique_labels,
    identified_set,
)


@dataclass(frozen=True, eq=False)
class Action:
    """Real-valued outcome table over the state grid, tagged with a label."""

    label: str
    outcomes: np.ndarray

    @classmethod
    def from_cells(cls, space: StateSpace, label: str, cells: Mapping[tuple[str, str], float]) -> "Action":
        table = np.zeros((space.n_x, space.n_eps))
        for (x, eps), value in cells.items():
            table[space.x_index(x), space.eps_index(eps)] = value
        return cls(label=str(label), outcomes=table)

    def __post_init__(self) -> None:
        arr = np.array(self.outcomes, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"action {self.label!r}: outcome table must be 2-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"action {self.label!r}: outcomes must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "outcomes", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Action):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.outcomes, other.outcomes)


@dataclass(frozen=True, eq=False)
class DecisionProblem:
    """A finite robust decision problem.

    Bundles the state space, the candidate model set, the observable
    marginal, the a priori restrictions, the available actions, and the
    marginal-matching tolerance used when computing the identified set.
    """

    space: StateSpace
    theta: ModelSet
    p_x: ObservableMarginal
    restrictions: tuple[Restriction, ...]
    actions: tuple[Action, ...]
    tol: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "restrictions", tuple(self.restrictions))
        object.__setattr__(self, "actions", tuple(self.actions))
        if self.theta.space != self.space:
            raise ValueError("model set does not share the problem's state space")
        if self.p_x.x_values != self.space.x_values:
            raise ValueError(
                f"observable marginal labels {self.p_x.x_values} do not match "
                f"state space x labels {self.space.x_values}"
            )
        if not self.actions:
            raise ValueError("decision problem needs at least one action")
        _unique_labels((a.label for a in self.actions), "action set")
        shape = (self.space.n_x, self.space.n_eps)
        for a in self.actions:
            if a.outcomes.shape != shape:
                raise ValueError(
                    f"action {a.label!r}: outcome table shape {a.outcomes.shape} "
                    f"does not match state grid {shape}"
                )
        if np.isnan(self.tol) or self.tol < 0:
            raise ValueError(f"tol must be nonnegative, got {self.tol}")

    @property
    def action_labels(self) -> tuple[str, ...]:
        return tuple(a.label for a in self.actions)

    @property
    def model_labels(self) -> tuple[str, ...]:
        return self.theta.labels

    def action(self, label: str) -> Action:
        for a in self.actions:
            if a.label == label:
                return a
        raise ValueError(f"unknown action label {label!r}; valid: {self.action_labels}")

    def model(self, label: str) -> Model:
        return self.theta.model(label)

    def identified_labels(self) -> list[str]:
        """Identified set of this problem under its own marginal, restrictions, and tol."""
        return identified_set(self.theta, self.p_x, self.restrictions, self.tol)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DecisionProblem):
            return NotImplemented
        return (
            self.space == other.space
            and self.theta == other.theta
            and self.p_x == other.p_x
            and self.restrictions == other.restrictions
            and self.actions == other.actions
            and self.tol == other.tol
        )


def restrict_problem(p: DecisionProblem, labels: Sequence[str]) -> DecisionProblem:
    """Copy of the problem with the model set cut down to ``labels`` (original order)."""
    keep = set(labels)
    unknown = keep - set(p.model_labels)
    if unknown:
        raise ValueError(f"unknown model labels {sorted(unknown)}; valid: {p.model_labels}")
    models = tuple(m for m in p.theta if m.label in keep)
    return DecisionProblem(
        space=p.space,
        theta=ModelSet(space=p.space, models=models),
        p_x=p.p_x,
        restrictions=p.restrictions,
        actions=p.actions,
        tol=p.tol,
    )


def expected_utility(a: Action, m: Model) -> float:
    """Expected outcome of the action under the model's joint pmf."""
    return float((a.outcomes * m.pmf).sum())


def utility_matrix(p: DecisionProblem) -> np.ndarray:
    """Dense table U[i, j] = expected_utility(actions[i], models[j])."""
    out = np.empty((len(p.actions), len(p.theta)))
    for i, a in enumerate(p.actions):
        for j, m in enumerate(p.theta):
            out[i, j] = expected_utility(a, m)
    return out


def regret(a: Action, m: Model, p: DecisionProblem) -> float:
    """Nonnegative shortfall of ``a`` from the best action under model ``m``."""
    best = max(expected_utility(other, m) for other in p.actions)
    return best - expected_utility(a, m)


@dataclass(frozen=True)
class RegionEvaluation:
    """Outcome of a robust rule on one region of models.

    ``per_action_values`` holds each action's worst-case criterion over the
    region (utility min for maxmin; signed regret min, always <= 0, for
    minmax regret).  ``chosen_action`` is the first action in declared order
    among the argmax set; ``tie_set`` is the full argmax set.
    """

    chosen_action: str
    value: float
    per_action_values: dict[str, float]
    tie_set: tuple[str, ...]

    @property
    def worst_case_regret(self) -> float:
        """Nonnegative form of a minmax-regret value (negation of ``value``)."""
        return -self.value


def _region_indices(p: DecisionProblem, region: Sequence[str]) -> list[int]:
    region = list(region)
    if not region:
        raise ValueError("region must be nonempty: the worst case over an empty region is undefined")
    return [p.theta.index_of(label) for label in region]


def _pick(p: DecisionProblem, values: np.ndarray) -> RegionEvaluation:
    best = float(values.max())
    tie_set = tuple(a.label for a, v in zip(p.actions, values) if float(v) == best)
    return RegionEvaluation(
        chosen_action=tie_set[0],
        value=best,
        per_action_values={a.label: float(v) for a, v in zip(p.actions, values)},
        tie_set=tie_set,
    )


def maxmin_action(p: DecisionProblem, region: Sequence[str]) -> RegionEvaluation:
    """Action maximizing the worst-case expected utility over the region."""
    idx = _region_indices(p, region)
    values = utility_matrix(p)[:, idx].min(axis=1)
    return _pick(p, values)


def minmax_regret_action(p: DecisionProblem, region: Sequence[str]) -> RegionEvaluation:
    """Action minimizing the worst-case regret over the region.

    Reported values are signed: per action, min over the region of
    (utility - best utility under that model), so 0 is regret-free and the
    rule maximizes this nonpositive criterion.
    """
    idx = _region_indices(p, region)
    utilities = utility_matrix(p)
    signed = utilities - utilities.max(axis=0, keepdims=True)
    values = signed[:, idx].min(axis=1)
    return _pick(p, values)


RULE_FUNCTIONS = {
    "maxmin": maxmin_action,
    "minmax_regret": minmax_regret_action,
}


@dataclass(frozen=True)
class GuaranteeCheck:
    """Did the region-based worst case actually lower-bound the identified-set worst case?"""

    holds: bool
    identified_min: float
    region_min: float


def guarantee_holds(
    p: DecisionProblem,
    chosen: str,
    region: Sequence[str],
    identified: Sequence[str],
) -> GuaranteeCheck:
    """Check the robustness guarantee for a chosen action.

    The region-based rule advertises ``min over region of U(chosen, .)`` as a
    utility floor.  The advertised floor is honest exactly when the min over
    the identified set is at least that large.
    """
    a = p.action(chosen)
    region_idx = _region_indices(p, region)
    identified_idx = _region_indices(p, identified)
    utilities = np.array([expected_utility(a, m) for m in p.theta])
    region_min = float(utilities[region_idx].min())
    identified_min = float(utilities[identified_idx].min())
    return GuaranteeCheck(
        holds=identified_min >= region_min,
        identified_min=identified_min,
        region_min=region_min,
    )
