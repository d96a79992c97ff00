"""Finite partially identified models over a product state grid.

A state is a pair ``(x, eps)`` of an observable label and a latent label.
A model assigns a joint pmf to the grid, but only the x-marginal is ever
observable, so distinct models can be indistinguishable from data.  The
identified set collects the models whose implied x-marginal matches the
observable marginal (up to a tolerance) and which pass every a priori
restriction.

All types are immutable after construction and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence, Union

import numpy as np

# Mass-balance tolerance for pmf validation.  Every probability in the
# built-in problems is a dyadic rational, exactly representable in binary.
PROB_TOL = 1e-12


def _frozen_array(values, shape: tuple[int, ...], what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{what}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: entries must be finite")
    arr.flags.writeable = False
    return arr


def _check_pmf(arr: np.ndarray, what: str) -> None:
    if np.any(arr < 0.0):
        raise ValueError(f"{what}: probabilities must be nonnegative")
    total = float(arr.sum())
    if abs(total - 1.0) > PROB_TOL:
        raise ValueError(f"{what}: probabilities sum to {total!r}, expected 1")


def _unique_labels(labels, what: str) -> tuple[str, ...]:
    out = tuple(str(lbl) for lbl in labels)
    if not out:
        raise ValueError(f"{what}: must be nonempty")
    if len(set(out)) != len(out):
        raise ValueError(f"{what}: labels must be unique, got {out}")
    return out


@dataclass(frozen=True)
class StateSpace:
    """Product grid of observable (x) and latent (eps) value labels."""

    x_values: tuple[str, ...]
    eps_values: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_values", _unique_labels(self.x_values, "x_values"))
        object.__setattr__(self, "eps_values", _unique_labels(self.eps_values, "eps_values"))

    @property
    def n_x(self) -> int:
        return len(self.x_values)

    @property
    def n_eps(self) -> int:
        return len(self.eps_values)

    @property
    def n_states(self) -> int:
        return self.n_x * self.n_eps

    def x_index(self, x: str) -> int:
        try:
            return self.x_values.index(x)
        except ValueError:
            raise ValueError(f"unknown x label {x!r}; valid: {self.x_values}") from None

    def eps_index(self, eps: str) -> int:
        try:
            return self.eps_values.index(eps)
        except ValueError:
            raise ValueError(f"unknown eps label {eps!r}; valid: {self.eps_values}") from None

    def states(self) -> Iterator[tuple[str, str]]:
        """Iterate grid cells in row-major (x-major) order."""
        for x in self.x_values:
            for eps in self.eps_values:
                yield (x, eps)


@dataclass(frozen=True, eq=False)
class Model:
    """A candidate joint pmf over the state grid, tagged with a label.

    ``pmf[i, j]`` is the probability of state ``(x_values[i], eps_values[j])``.
    """

    label: str
    space: StateSpace
    pmf: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(self.pmf, (self.space.n_x, self.space.n_eps), f"model {self.label!r} pmf")
        _check_pmf(arr, f"model {self.label!r} pmf")
        object.__setattr__(self, "pmf", arr)

    @classmethod
    def from_cells(cls, space: StateSpace, label: str, cells: Mapping[tuple[str, str], float]) -> "Model":
        """Build a model from a sparse ``{(x, eps): prob}`` mapping; omitted cells are 0."""
        table = np.zeros((space.n_x, space.n_eps))
        for (x, eps), prob in cells.items():
            table[space.x_index(x), space.eps_index(eps)] = prob
        return cls(label=str(label), space=space, pmf=table)

    def cell(self, x: str, eps: str) -> float:
        return float(self.pmf[self.space.x_index(x), self.space.eps_index(eps)])

    def latent_marginal(self) -> np.ndarray:
        """Marginal pmf of eps (sum over x)."""
        return self.pmf.sum(axis=0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Model):
            return NotImplemented
        return (
            self.label == other.label
            and self.space == other.space
            and np.array_equal(self.pmf, other.pmf)
        )


@dataclass(frozen=True, eq=False)
class ObservableMarginal:
    """Pmf of the observable component, indexed by x label."""

    x_values: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_values", _unique_labels(self.x_values, "x_values"))
        arr = _frozen_array(self.probs, (len(self.x_values),), "observable marginal")
        _check_pmf(arr, "observable marginal")
        object.__setattr__(self, "probs", arr)

    def prob(self, x: str) -> float:
        try:
            return float(self.probs[self.x_values.index(x)])
        except ValueError:
            raise ValueError(f"unknown x label {x!r}; valid: {self.x_values}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ObservableMarginal):
            return NotImplemented
        return self.x_values == other.x_values and np.array_equal(self.probs, other.probs)


def implied_marginal(m: Model) -> ObservableMarginal:
    """X-marginal implied by a model: for each x, the pmf summed over eps."""
    return ObservableMarginal(x_values=m.space.x_values, probs=m.pmf.sum(axis=1))


@dataclass(frozen=True)
class LatentMarginalEq:
    """A priori restriction: the latent marginal puts mass ``value`` on ``eps``.

    This is the one built-in restriction family the problem-file schema
    supports (e.g. "half the population is talented").
    """

    eps: str
    value: float
    atol: float = PROB_TOL

    def __post_init__(self) -> None:
        if not (0.0 <= self.value <= 1.0):
            raise ValueError(f"restriction value must be in [0, 1], got {self.value}")
        if self.atol < 0:
            raise ValueError("atol must be nonnegative")

    @property
    def description(self) -> str:
        return f"P(eps={self.eps}) = {self.value:g}"

    def __call__(self, m: Model) -> bool:
        mass = float(m.pmf[:, m.space.eps_index(self.eps)].sum())
        return abs(mass - self.value) <= self.atol


@dataclass(frozen=True)
class PredicateRestriction:
    """A priori restriction wrapping an arbitrary deterministic predicate."""

    description: str
    predicate: Callable[[Model], bool]

    def __call__(self, m: Model) -> bool:
        return bool(self.predicate(m))


Restriction = Union[LatentMarginalEq, PredicateRestriction]


@dataclass(frozen=True, eq=False)
class ModelSet:
    """Ordered collection of candidate models sharing one state space."""

    space: StateSpace
    models: tuple[Model, ...]

    def __post_init__(self) -> None:
        models = tuple(self.models)
        if not models:
            raise ValueError("model set must contain at least one model")
        _unique_labels((m.label for m in models), "model set")
        for m in models:
            if m.space != self.space:
                raise ValueError(f"model {m.label!r} does not share the owning state space")
        object.__setattr__(self, "models", models)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.models)

    def model(self, label: str) -> Model:
        for m in self.models:
            if m.label == label:
                return m
        raise ValueError(f"unknown model label {label!r}; valid: {self.labels}")

    def index_of(self, label: str) -> int:
        for i, m in enumerate(self.models):
            if m.label == label:
                return i
        raise ValueError(f"unknown model label {label!r}; valid: {self.labels}")

    def __iter__(self) -> Iterator[Model]:
        return iter(self.models)

    def __len__(self) -> int:
        return len(self.models)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelSet):
            return NotImplemented
        return self.space == other.space and self.models == other.models


def marginal_deviation(m: Model, p_x: ObservableMarginal) -> float:
    """Sup-norm distance between a model's implied x-marginal and ``p_x``."""
    if p_x.x_values != m.space.x_values:
        raise ValueError(
            f"observable marginal labels {p_x.x_values} do not match state space x labels {m.space.x_values}"
        )
    return float(np.max(np.abs(m.pmf.sum(axis=1) - p_x.probs)))


def identified_set(
    theta: ModelSet,
    p_x: ObservableMarginal,
    restrictions: Sequence[Restriction] = (),
    tol: float = 0.0,
) -> list[str]:
    """Labels of the models consistent with the observable marginal and restrictions.

    A model qualifies when its implied x-marginal matches ``p_x`` within
    ``tol`` in sup norm and every restriction predicate accepts it.  Output
    order follows the model-set order.  ``tol`` may be ``inf``.
    """
    if np.isnan(tol) or tol < 0:
        raise ValueError(f"tol must be nonnegative, got {tol}")
    if p_x.x_values != theta.space.x_values:
        raise ValueError(
            f"observable marginal labels {p_x.x_values} do not match state space x labels {theta.space.x_values}"
        )
    out = []
    for m in theta:
        if marginal_deviation(m, p_x) <= tol and all(r(m) for r in restrictions):
            out.append(m.label)
    return out
