"""Wave-by-wave sample composition and performance metrics.

Everything here compares realized samples or estimates against a baseline of
true population values, per attribute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Mapping, Sequence

from .errors import InputError
from .netgen import FEMALE, Individual
from .recruit import RecruitmentForest


@dataclass(frozen=True)
class WaveStats:
    """Cumulative sample composition after a given wave."""

    wave: int
    new_unique: int
    cumulative_n: int
    mean_age: float
    prop_female: float


@dataclass(frozen=True)
class Baseline:
    """True population values per attribute, with optional fixed error scales."""

    values: Mapping[str, float]
    scales: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class MetricsCell:
    """One (recruitment design, estimator) cell of the comparison grid."""

    recruitment: str
    estimator: str
    rmse: float | None
    coverage_count: int
    coverage_total: int

    def to_dict(self) -> dict:
        rate = (
            self.coverage_count / self.coverage_total if self.coverage_total else None
        )
        return {
            "recruitment": self.recruitment,
            "estimator": self.estimator,
            "rmse": self.rmse,
            "coverage_count": self.coverage_count,
            "coverage_total": self.coverage_total,
            "coverage_rate": rate,
        }


@dataclass(frozen=True)
class ConvergencePoint:
    """Absolute bias of cumulative sample composition at one wave."""

    wave: int
    age_bias: float
    female_bias: float


def population_baseline(population: Sequence[Individual]) -> Baseline:
    """Realized true values: mean age and proportion female."""
    if not population:
        raise InputError("population is empty")
    n = len(population)
    mean_age = sum(ind.age for ind in population) / n
    prop_female = sum(1 for ind in population if ind.gender == FEMALE) / n
    return Baseline({"age": mean_age, "female": prop_female})


def wave_stats(
    forest: RecruitmentForest, population: Sequence[Individual]
) -> list[WaveStats]:
    """Per-wave arrival counts and cumulative composition.

    Seeds are wave 0. An empty forest yields an empty list.
    """
    if not forest.seeds and not forest.events:
        return []
    by_id = {ind.id: ind for ind in population}
    missing = [i for i in forest.node_ids() if i not in by_id]
    if missing:
        raise InputError(f"forest ids absent from population: {missing[:20]}")
    arrivals: dict[int, list[int]] = {0: list(forest.seeds)}
    for wave, _, recruit in forest.events:
        arrivals.setdefault(wave, []).append(recruit)
    out: list[WaveStats] = []
    cum_n = 0
    cum_age = 0.0
    cum_female = 0
    for wave in sorted(arrivals):
        new = arrivals[wave]
        cum_n += len(new)
        cum_age += sum(by_id[i].age for i in new)
        cum_female += sum(1 for i in new if by_id[i].gender == FEMALE)
        out.append(
            WaveStats(
                wave=wave,
                new_unique=len(new),
                cumulative_n=cum_n,
                mean_age=cum_age / cum_n,
                prop_female=cum_female / cum_n,
            )
        )
    return out


def se_from_ci(ci_low: float, ci_high: float, level: float) -> float:
    """Standard error implied by a normal-approximation interval's half-width."""
    if not 0.0 < level < 1.0:
        raise InputError(f"level must be in (0, 1), got {level}")
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    return (ci_high - ci_low) / (2.0 * z)


def standardized_rmse(
    estimates: Mapping[str, tuple[float, float]], baseline: Baseline
) -> float:
    """Root mean squared standardized error across attributes.

    ``estimates`` maps attribute -> (point, standard error). Each error is
    divided by ``baseline.scales[attr]`` when provided, else by the estimate's
    own standard error. Raises on missing baselines or nonpositive scales.
    """
    if not estimates:
        raise InputError("no estimates supplied")
    total = 0.0
    for attr, (point, se) in estimates.items():
        if attr not in baseline.values:
            raise InputError(f"missing baseline value for {attr!r}")
        scale = baseline.scales.get(attr, se)
        if not math.isfinite(scale) or scale <= 0:
            raise InputError(f"nonpositive or non-finite error scale for {attr!r}: {scale}")
        z = (point - baseline.values[attr]) / scale
        total += z * z
    return math.sqrt(total / len(estimates))


def ci_coverage(
    intervals: Mapping[str, tuple[float, float]], baseline: Baseline
) -> tuple[int, int]:
    """Count of intervals containing their true value, over the total.

    Endpoints count as covering.
    """
    count = 0
    for attr, (lo, hi) in intervals.items():
        if attr not in baseline.values:
            raise InputError(f"missing baseline value for {attr!r}")
        if lo > hi:
            raise InputError(f"inverted interval for {attr!r}: ({lo}, {hi})")
        if lo <= baseline.values[attr] <= hi:
            count += 1
    return count, len(intervals)


def convergence_trace(
    stats: Sequence[WaveStats], baseline: Baseline
) -> list[ConvergencePoint]:
    """Absolute bias of cumulative mean age and proportion female per wave."""
    for attr in ("age", "female"):
        if attr not in baseline.values:
            raise InputError(f"missing baseline value for {attr!r}")
    return [
        ConvergencePoint(
            wave=s.wave,
            age_bias=abs(s.mean_age - baseline.values["age"]),
            female_bias=abs(s.prop_female - baseline.values["female"]),
        )
        for s in stats
    ]
