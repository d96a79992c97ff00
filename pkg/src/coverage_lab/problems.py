"""Built-in gender/talent benchmark problem.

A population is half female, half male, and half talented, but the joint
distribution of gender and talent is unknown.  A planner can offer an
education opportunity to women only (a1), men only (a2), or everyone (a3).
Offering to a talented person nets +B, offering to a not-so-talented person
nets -B (wasted resources), withholding from a talented person nets -B
(wasted talent), and withholding from a not-so-talented person nets 0.

Four candidate models: under theta1 all talent is male, under theta2 all
talent is female, under theta3 everyone is talented, under theta4 no one is.
Only theta1 and theta2 respect the half-talented restriction, so the
identified set is {theta1, theta2} and the data can never split the two.
"""

from __future__ import annotations

import math

from .decision import Action, DecisionProblem, restrict_problem
from .model import LatentMarginalEq, Model, ModelSet, ObservableMarginal, StateSpace

X_LABELS = ("F", "M")
EPS_LABELS = ("T", "N")
MODEL_LABELS = ("theta1", "theta2", "theta3", "theta4")
ACTION_LABELS = ("a1", "a2", "a3")

# Per action, the set of x groups offered the opportunity.
_OFFERED = {"a1": ("F",), "a2": ("M",), "a3": ("F", "M")}

_MODEL_CELLS = {
    "theta1": {("F", "N"): 0.5, ("M", "T"): 0.5},  # all talent is male
    "theta2": {("F", "T"): 0.5, ("M", "N"): 0.5},  # all talent is female
    "theta3": {("F", "T"): 0.5, ("M", "T"): 0.5},  # everyone is talented
    "theta4": {("F", "N"): 0.5, ("M", "N"): 0.5},  # no one is talented
}


def _benefit(offered: bool, talented: bool, b: float) -> float:
    if offered:
        return b if talented else -b
    return -b if talented else 0.0


def paper_example(B: float = 1.0) -> DecisionProblem:
    """The gender/talent benchmark problem with benefit scale ``B > 0``."""
    if not (isinstance(B, (int, float)) and math.isfinite(B) and B > 0):
        raise ValueError(f"B must be a positive finite number, got {B!r}")
    b = float(B)
    space = StateSpace(x_values=X_LABELS, eps_values=EPS_LABELS)
    theta = ModelSet(
        space=space,
        models=tuple(Model.from_cells(space, label, _MODEL_CELLS[label]) for label in MODEL_LABELS),
    )
    actions = tuple(
        Action.from_cells(
            space,
            label,
            {
                (x, eps): _benefit(x in _OFFERED[label], eps == "T", b)
                for x in X_LABELS
                for eps in EPS_LABELS
            },
        )
        for label in ACTION_LABELS
    )
    return DecisionProblem(
        space=space,
        theta=theta,
        p_x=ObservableMarginal(x_values=X_LABELS, probs=(0.5, 0.5)),
        restrictions=(LatentMarginalEq(eps="T", value=0.5),),
        actions=actions,
        tol=0.0,
    )


def paper_example_identified(B: float = 1.0) -> DecisionProblem:
    """Benchmark problem with the model set cut down to its identified set.

    This is the default problem for region-process experiments: regions are
    subsets of the candidate set, and keeping only restriction-compatible
    models makes the full region's worst case coincide with the identified
    set's, as the stylized scenario assumes.
    """
    p = paper_example(B)
    return restrict_problem(p, p.identified_labels())
