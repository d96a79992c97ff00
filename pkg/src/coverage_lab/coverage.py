"""Confidence-region processes for the identified set, and coverage estimation.

Two families of region processes over a model set:

* synthetic processes that realize prescribed coverage probabilities exactly,
  with no data involved.  In ``set_coverage`` mode the whole identified set
  is dropped-into (one member removed) with probability alpha; in
  ``point_coverage`` mode each member is removed independently with
  probability alpha.  Labels outside the identified set are never removed.

* data-driven test-inversion regions built from a multinomial sample of the
  observable marginal: a model stays in the region when a randomized
  goodness-of-fit test of its implied marginal does not reject.  P-values
  use a Monte Carlo reference distribution with a uniform tie-breaker, which
  makes the test exact at every level for the discrete statistic.

Test inversion supports two randomization disciplines.  In ``shared`` mode
all models are tested against the full sample with one shared tie-breaker,
so models with identical implied marginals enter or leave the region
together and the region covers the whole identified set at exact level
1 - alpha.  In ``independent`` mode each model is tested on its own disjoint
random fold of the sample (with fresh resamples and a fresh tie-breaker), so
exclusion events are genuinely independent across models: each point is
covered at exact level 1 - alpha while the whole identified set is covered
with probability (1 - alpha)^k only.  Sharing the data across models cannot
deliver that independence, however the per-model randomness is drawn: the
common sample correlates the tests.  Disjoint folds trade per-model sample
size for exact independence.

Replications are reproducible: region draws are deterministic functions of
the generator state they are handed, and `estimate_coverage` derives one
substream per replication from (seed, index), so results do not depend on
execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .decision import DecisionProblem
from .model import Model, ObservableMarginal, PROB_TOL, implied_marginal

SET_COVERAGE = "set_coverage"
POINT_COVERAGE = "point_coverage"
SYNTHETIC_MODES = (SET_COVERAGE, POINT_COVERAGE)

SHARED = "shared"
INDEPENDENT = "independent"
RANDOMIZATIONS = (SHARED, INDEPENDENT)

# Monte Carlo reference size for randomized p-values.
DEFAULT_RESAMPLES = 2000


@dataclass(frozen=True)
class RegionProvenance:
    """Which process produced a region, in which replication, under which seed."""

    process: str
    replication: int | None = None
    seed: int | None = None


@dataclass(frozen=True)
class Region:
    """A subset of model labels with provenance."""

    labels: tuple[str, ...]
    provenance: RegionProvenance

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(str(lbl) for lbl in self.labels))

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def covers(self, labels: Sequence[str]) -> bool:
        """True when every given label is inside the region."""
        mine = set(self.labels)
        return all(lbl in mine for lbl in labels)

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class SyntheticRegionSpec:
    """Randomized region process with prescribed drop probabilities.

    ``drop_probs``, when given, must assign an explicit drop probability
    (each <= alpha) to every identified-set label; in set_coverage mode the
    probabilities must additionally sum to alpha, since at most one label is
    ever dropped.
    """

    alpha: float
    mode: str = SET_COVERAGE
    drop_probs: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.mode not in SYNTHETIC_MODES:
            raise ValueError(f"mode must be one of {SYNTHETIC_MODES}, got {self.mode!r}")
        if self.drop_probs is not None:
            object.__setattr__(self, "drop_probs", dict(self.drop_probs))

    def drop_vector(self, theta_i: Sequence[str]) -> np.ndarray:
        """Per-label drop probabilities aligned with ``theta_i`` order."""
        k = len(theta_i)
        if self.drop_probs is None:
            if self.mode == SET_COVERAGE:
                return np.full(k, self.alpha / k)
            return np.full(k, self.alpha)
        extra = set(self.drop_probs) - set(theta_i)
        if extra:
            raise ValueError(f"drop_probs refer to labels outside the identified set: {sorted(extra)}")
        missing = set(theta_i) - set(self.drop_probs)
        if missing:
            raise ValueError(f"drop_probs must cover every identified-set label; missing {sorted(missing)}")
        d = np.array([float(self.drop_probs[lbl]) for lbl in theta_i])
        if np.any(d < 0) or np.any(d > self.alpha):
            raise ValueError(f"each drop probability must lie in [0, alpha={self.alpha}]")
        if self.mode == SET_COVERAGE and abs(float(d.sum()) - self.alpha) > PROB_TOL:
            raise ValueError(
                f"set_coverage drop_probs must sum to alpha={self.alpha}, got {float(d.sum())!r}"
            )
        return d


@dataclass(frozen=True)
class SampleSpec:
    """Size and seed of one multinomial sample of the observable marginal."""

    n: int
    seed: int = 0

    def __post_init__(self) -> None:
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError(f"sample size must be an integer >= 1, got {self.n!r}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")


def draw_sample(p_x: ObservableMarginal, spec: SampleSpec) -> np.ndarray:
    """Multinomial counts of size ``spec.n`` over the x labels, deterministic given the seed."""
    rng = np.random.default_rng(spec.seed)
    return rng.multinomial(spec.n, p_x.probs)


def _uniques(labels: Sequence[str], what: str) -> tuple[str, ...]:
    out = tuple(str(lbl) for lbl in labels)
    if len(set(out)) != len(out):
        raise ValueError(f"{what}: labels must be unique")
    return out


def synthetic_region(
    theta_i: Sequence[str],
    all_labels: Sequence[str],
    spec: SyntheticRegionSpec,
    rng: np.random.Generator,
    provenance: RegionProvenance | None = None,
) -> Region:
    """Draw one region from a synthetic process.

    set_coverage mode: with probability 1 - alpha the region is all labels;
    with probability alpha exactly one identified-set label is removed
    (uniformly at random unless drop_probs says otherwise).
    point_coverage mode: each identified-set label is removed independently
    with its drop probability.  Non-identified labels are always kept.
    """
    theta_i = _uniques(theta_i, "theta_i")
    all_labels = _uniques(all_labels, "all_labels")
    if not theta_i:
        raise ValueError("theta_i must be nonempty")
    outside = set(theta_i) - set(all_labels)
    if outside:
        raise ValueError(f"identified-set labels missing from the model set: {sorted(outside)}")

    d = spec.drop_vector(theta_i)
    dropped: set[str] = set()
    if spec.mode == SET_COVERAGE:
        u = rng.uniform()
        edges = np.cumsum(d)
        for lbl, edge in zip(theta_i, edges):
            if u < edge:
                dropped.add(lbl)
                break
    else:
        us = rng.uniform(size=len(theta_i))
        dropped.update(lbl for lbl, u, dj in zip(theta_i, us, d) if u < dj)

    if provenance is None:
        provenance = RegionProvenance(process=f"synthetic:{spec.mode}")
    return Region(labels=tuple(lbl for lbl in all_labels if lbl not in dropped), provenance=provenance)


def _check_counts(counts, n: int, n_cells: int) -> np.ndarray:
    arr = np.asarray(counts)
    if arr.shape != (n_cells,):
        raise ValueError(f"counts must have one entry per x label ({n_cells}), got shape {arr.shape}")
    if np.any(arr < 0):
        raise ValueError("counts must be nonnegative")
    if int(arr.sum()) != n:
        raise ValueError(f"counts sum to {int(arr.sum())}, expected n={n}")
    return arr.astype(np.int64)


def _chi_square(counts: np.ndarray, n: int, q: np.ndarray) -> float:
    """Pearson statistic of counts against expected n*q; +inf when an impossible cell has mass."""
    support = q > 0.0
    if np.any(counts[~support] > 0):
        return math.inf
    expected = n * q[support]
    return float(((counts[support] - expected) ** 2 / expected).sum())


def marginal_test_statistic(m: Model, counts, n: int) -> float:
    """Pearson chi-square of observed x counts against the model's implied marginal.

    Cells the model rules out (implied probability zero) contribute nothing
    when empty and force the statistic to +inf when observed.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    q = implied_marginal(m).probs
    arr = _check_counts(counts, n, q.shape[0])
    return _chi_square(arr, n, q)


def _reference_statistics(q: np.ndarray, n: int, resamples: int, rng: np.random.Generator) -> np.ndarray:
    draws = rng.multinomial(n, q, size=resamples)
    support = q > 0.0
    expected = n * q[support]
    return ((draws[:, support] - expected) ** 2 / expected).sum(axis=1)


def _mc_pvalue(t_obs: float, ref: np.ndarray, u: float) -> float:
    # Randomized Monte Carlo p-value: exactly Uniform(0,1) when the observed
    # statistic is exchangeable with the reference draws.
    n_gt = int((ref > t_obs).sum())
    n_eq = int((ref == t_obs).sum())
    return (n_gt + u * (1 + n_eq)) / (ref.shape[0] + 1)


def _fold_sizes(n: int, k: int) -> list[int]:
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def test_inversion_region(
    p: DecisionProblem,
    counts,
    n: int,
    alpha: float,
    randomization: str,
    rng: np.random.Generator,
    resamples: int = DEFAULT_RESAMPLES,
    provenance: RegionProvenance | None = None,
) -> Region:
    """Region of models whose implied marginal survives a randomized exact test.

    Every model is tested at level ``alpha`` against the sampled counts and
    kept when its randomized p-value exceeds alpha.  ``shared`` mode tests on
    the full sample with one tie-breaking uniform, computing a single
    p-value per distinct implied marginal; ``independent`` mode partitions
    the sample into one random fold per model (multivariate hypergeometric
    split, so folds are exact independent subsamples) and tests each model on
    its own fold.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if randomization not in RANDOMIZATIONS:
        raise ValueError(f"randomization must be one of {RANDOMIZATIONS}, got {randomization!r}")
    if resamples < 1:
        raise ValueError(f"resamples must be >= 1, got {resamples}")
    arr = _check_counts(counts, n, p.space.n_x)

    kept: list[str] = []
    if randomization == SHARED:
        u = rng.uniform()
        pvalues: dict[tuple[float, ...], float] = {}
        for m in p.theta:
            q = implied_marginal(m).probs
            key = tuple(q.tolist())
            if key not in pvalues:
                t_obs = _chi_square(arr, n, q)
                ref = _reference_statistics(q, n, resamples, rng)
                pvalues[key] = _mc_pvalue(t_obs, ref, u)
            if pvalues[key] > alpha:
                kept.append(m.label)
    else:
        k = len(p.theta)
        if n < k:
            raise ValueError(f"independent mode needs at least one observation per model ({k}), got n={n}")
        sizes = _fold_sizes(n, k)
        folds = []
        remaining = arr.copy()
        for size in sizes:
            fold = rng.multivariate_hypergeometric(remaining, size)
            folds.append(np.asarray(fold, dtype=np.int64))
            remaining -= fold
        for m, fold, size in zip(p.theta, folds, sizes):
            q = implied_marginal(m).probs
            t_obs = _chi_square(fold, size, q)
            ref = _reference_statistics(q, size, resamples, rng)
            if _mc_pvalue(t_obs, ref, rng.uniform()) > alpha:
                kept.append(m.label)

    if provenance is None:
        provenance = RegionProvenance(process=f"test_inversion:{randomization}")
    return Region(labels=tuple(kept), provenance=provenance)


test_inversion_region.__test__ = False  # not a pytest test, despite the name


def binomial_se(p_hat: float, r: int) -> float:
    """Monte Carlo standard error of an empirical rate over ``r`` replications."""
    return math.sqrt(p_hat * (1.0 - p_hat) / r)


@dataclass(frozen=True)
class CoverageReport:
    """Empirical set and per-point coverage of a region process."""

    replications: int
    seed: int
    set_coverage: float
    set_coverage_se: float
    point_coverage: dict[str, float]
    point_coverage_se: dict[str, float]


def estimate_coverage(
    process: Callable[[np.random.Generator], Region],
    theta_i: Sequence[str],
    replications: int,
    seed: int = 0,
) -> CoverageReport:
    """Monte Carlo set/point coverage of a region process over the identified set.

    ``process`` maps a generator to a Region; replication ``r`` receives the
    substream seeded by ``(seed, r)``, so estimates are reproducible and
    independent of execution order.
    """
    theta_i = _uniques(theta_i, "theta_i")
    if not theta_i:
        raise ValueError("theta_i must be nonempty")
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")

    set_hits = 0
    point_hits = {lbl: 0 for lbl in theta_i}
    for r in range(replications):
        region = process(np.random.default_rng([seed, r]))
        inside = set(region.labels)
        all_in = True
        for lbl in theta_i:
            if lbl in inside:
                point_hits[lbl] += 1
            else:
                all_in = False
        set_hits += all_in

    set_cov = set_hits / replications
    point_cov = {lbl: hits / replications for lbl, hits in point_hits.items()}
    return CoverageReport(
        replications=replications,
        seed=seed,
        set_coverage=set_cov,
        set_coverage_se=binomial_se(set_cov, replications),
        point_coverage=point_cov,
        point_coverage_se={lbl: binomial_se(c, replications) for lbl, c in point_cov.items()},
    )
