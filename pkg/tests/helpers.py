"""Shared test utilities: naive enumeration oracles and random-instance strategies.

The oracles are deliberately coded as plain Python double loops, independent
of the library's numpy paths, so they can arbitrate the decision rules.
"""

import numpy as np
from hypothesis import strategies as st

from coverage_lab import Action, DecisionProblem, Model, ModelSet, ObservableMarginal, StateSpace


def naive_expected_utility(action, model):
    space = model.space
    total = 0.0
    for x in space.x_values:
        for eps in space.eps_values:
            total += action.outcomes[space.x_index(x), space.eps_index(eps)] * model.cell(x, eps)
    return total


def naive_maxmin(problem, region):
    values = {}
    for a in problem.actions:
        values[a.label] = min(naive_expected_utility(a, problem.model(lbl)) for lbl in region)
    best = max(values.values())
    ties = tuple(lbl for lbl, v in values.items() if v == best)
    return ties[0], best, values, ties


def naive_minmax_regret(problem, region):
    best_by_model = {}
    for lbl in region:
        m = problem.model(lbl)
        best_by_model[lbl] = max(naive_expected_utility(a, m) for a in problem.actions)
    values = {}
    for a in problem.actions:
        values[a.label] = min(
            naive_expected_utility(a, problem.model(lbl)) - best_by_model[lbl] for lbl in region
        )
    best = max(values.values())
    ties = tuple(lbl for lbl, v in values.items() if v == best)
    return ties[0], best, values, ties


def assert_matches_oracle(evaluation, oracle_result, action_labels):
    """Library evaluation equals the naive oracle, up to summation-order noise.

    Per-action values agree to 1e-12; the chosen action must be an argmax of
    the oracle's table; label-level tie comparisons are only enforced when
    the oracle's runner-up gap makes them numerically unambiguous.
    """
    chosen, value, values, ties = oracle_result
    assert abs(evaluation.value - value) <= 1e-12
    for lbl in action_labels:
        assert abs(evaluation.per_action_values[lbl] - values[lbl]) <= 1e-12
    best = max(values.values())
    assert values[evaluation.chosen_action] >= best - 1e-12
    gaps = [best - v for v in values.values()]
    if all(g == 0.0 or g > 1e-9 for g in gaps):
        assert evaluation.chosen_action == chosen
        assert evaluation.tie_set == ties


def _normalized_pmf(weights, n_x, n_eps):
    total = float(sum(weights))
    return np.array([w / total for w in weights]).reshape(n_x, n_eps)


@st.composite
def decision_problems(draw, max_x=3, max_eps=3, max_models=4, max_actions=4):
    """Small random problems whose identified set is guaranteed nonempty.

    The observable marginal is copied from a randomly chosen anchor model, so
    at least that model matches it exactly.
    """
    n_x = draw(st.integers(1, max_x))
    n_eps = draw(st.integers(1, max_eps))
    space = StateSpace(
        x_values=tuple(f"x{i}" for i in range(n_x)),
        eps_values=tuple(f"e{j}" for j in range(n_eps)),
    )
    cells = n_x * n_eps

    n_models = draw(st.integers(1, max_models))
    weight_lists = st.lists(st.integers(0, 8), min_size=cells, max_size=cells).filter(
        lambda w: sum(w) > 0
    )
    models = tuple(
        Model(label=f"m{k}", space=space, pmf=_normalized_pmf(draw(weight_lists), n_x, n_eps))
        for k in range(n_models)
    )

    anchor = models[draw(st.integers(0, n_models - 1))]
    p_x = ObservableMarginal(x_values=space.x_values, probs=anchor.pmf.sum(axis=1))

    n_actions = draw(st.integers(1, max_actions))
    outcome_lists = st.lists(st.integers(-8, 8), min_size=cells, max_size=cells)
    actions = tuple(
        Action(label=f"a{k}", outcomes=np.array(draw(outcome_lists), dtype=float).reshape(n_x, n_eps) / 2.0)
        for k in range(n_actions)
    )

    tol = draw(st.sampled_from([0.0, 1e-9, 0.05]))
    return DecisionProblem(
        space=space,
        theta=ModelSet(space=space, models=models),
        p_x=p_x,
        restrictions=(),
        actions=actions,
        tol=tol,
    )


@st.composite
def problems_with_regions(draw, **kwargs):
    problem = draw(decision_problems(**kwargs))
    labels = list(problem.model_labels)
    size = draw(st.integers(1, len(labels)))
    region = tuple(draw(st.permutations(labels))[:size])
    return problem, region


@st.composite
def problems_with_nested_regions(draw, **kwargs):
    """A problem plus regions A <= B (both nonempty)."""
    problem = draw(decision_problems(**kwargs))
    labels = list(problem.model_labels)
    big = draw(st.integers(1, len(labels)))
    order = draw(st.permutations(labels))
    region_b = tuple(order[:big])
    small = draw(st.integers(1, big))
    region_a = tuple(order[:small])
    return problem, region_a, region_b
