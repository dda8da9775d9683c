"""Inverse-degree-weighted estimation and the recruitment-tree bootstrap.

The point estimator weights each respondent by the reciprocal of their
reported degree:

    estimate = sum(x_i / d_i) / sum(1 / d_i)

which corrects for the higher inclusion probability of well-connected
individuals under chain referral. Its confidence interval comes from
resampling the recruitment forest itself: each bootstrap replicate redraws
the seeds with replacement and then, recursively, redraws every placed
node's children from that node's observed child set (one uniform draw per
observed child slot). Replicate b's estimate is computed over its placed
multiset, and replicates are summarized by a weighted percentile interval
with weight w_b = sum(1 / d_i), the replicate's effective sample size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from statistics import NormalDist
from typing import TYPE_CHECKING, Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, EstimationError, InputError

if TYPE_CHECKING:
    from .recruit import RecruitmentForest

VH = "vh"
TREEBOOT = "treeboot"
NAIVE = "naive"
ESTIMATORS = (VH, TREEBOOT, NAIVE)


@dataclass(frozen=True)
class SurveyRecord:
    """One respondent: id, reported degree, and named attribute values."""

    id: int
    degree: int
    values: Mapping[str, float]


class SurveyedSample:
    """Immutable collection of survey records with unique ids."""

    def __init__(self, records: Sequence[SurveyRecord]) -> None:
        self._records = tuple(records)
        self._by_id: dict[int, SurveyRecord] = {}
        for rec in self._records:
            if rec.id in self._by_id:
                raise InputError(f"duplicate id {rec.id} in sample")
            self._by_id[rec.id] = rec

    @property
    def records(self) -> tuple[SurveyRecord, ...]:
        return self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[SurveyRecord]:
        return iter(self._records)

    def __contains__(self, record_id: int) -> bool:
        return record_id in self._by_id

    def record(self, record_id: int) -> SurveyRecord:
        try:
            return self._by_id[record_id]
        except KeyError:
            raise InputError(f"no sample record for id {record_id}") from None

    def attributes(self) -> tuple[str, ...]:
        """Attribute names present on the first record."""
        if not self._records:
            return ()
        return tuple(self._records[0].values)

    def column(self, attribute: str) -> np.ndarray:
        try:
            return np.array([rec.values[attribute] for rec in self._records], dtype=float)
        except KeyError:
            raise InputError(f"attribute {attribute!r} missing from sample records") from None

    def degrees(self) -> np.ndarray:
        return np.array([rec.degree for rec in self._records], dtype=float)


@dataclass(frozen=True)
class EstimateReport:
    """A point estimate with its interval and, for resampling estimators,
    the replicate values and weights behind it."""

    attribute: str
    estimator: str
    point: float
    ci_low: float
    ci_high: float
    level: float
    replicates: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.replicates) != len(self.weights):
            raise InputError(
                f"{len(self.replicates)} replicates but {len(self.weights)} weights"
            )
        if any(w <= 0 for w in self.weights):
            raise InputError("replicate weights must be strictly positive")
        if not self.ci_low <= self.ci_high:
            raise InputError(f"ci_low {self.ci_low} exceeds ci_high {self.ci_high}")
        if not 0.0 < self.level < 1.0:
            raise ConfigurationError(f"level must be in (0, 1), got {self.level}")

    @property
    def b(self) -> int:
        return len(self.replicates)

    def to_dict(self) -> dict:
        """JSON-ready summary (replicates are dumped separately if at all)."""
        return {
            "attribute": self.attribute,
            "estimator": self.estimator,
            "point": self.point,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "level": self.level,
            "B": self.b,
        }


def _check_degrees(sample: SurveyedSample) -> None:
    bad = [rec.id for rec in sample if rec.degree < 1]
    if bad:
        raise InputError(
            f"reported degree < 1 for ids {bad[:20]}; inverse-degree weights undefined"
        )


def vh_estimate(sample: SurveyedSample, attribute: str) -> float:
    """Inverse-degree-weighted mean of an attribute.

    Records are weighted by 1/degree; a record appearing once counts once
    (bootstrap duplicates are handled by the resampler, not here).
    """
    if len(sample) == 0:
        raise EstimationError("cannot estimate from an empty sample")
    _check_degrees(sample)
    x = sample.column(attribute)
    if np.min(x) == np.max(x):
        # any positive weighting of a constant is that constant; returning
        # it directly avoids last-ulp noise from the division
        return float(x[0])
    inv_d = 1.0 / sample.degrees()
    return float(np.sum(x * inv_d) / np.sum(inv_d))


def naive_mean_ci(
    sample: SurveyedSample, attribute: str, level: float = 0.95
) -> tuple[float, float, float]:
    """Unweighted mean with a normal-approximation interval.

    Returns (point, lo, hi). With a single observation the interval width is
    undefined; a degenerate (point, point, point) is returned with a warning.
    """
    if len(sample) == 0:
        raise EstimationError("cannot estimate from an empty sample")
    if not 0.0 < level < 1.0:
        raise ConfigurationError(f"level must be in (0, 1), got {level}")
    x = sample.column(attribute)
    point = float(np.mean(x))
    if x.size == 1:
        warnings.warn(
            "interval width undefined for a single observation; returning a degenerate interval",
            stacklevel=2,
        )
        return point, point, point
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    half = z * float(np.std(x, ddof=1)) / math.sqrt(x.size)
    return point, point - half, point + half


def weighted_percentile_ci(
    replicates: Sequence[float], weights: Sequence[float], level: float
) -> tuple[float, float]:
    """Weighted percentile interval over replicate values.

    Sort replicates ascending (stable), accumulate weights, and take as each
    endpoint the first value whose cumulative weight reaches the target mass:
    (1-level)/2 of the total for the lower endpoint, 1-(1-level)/2 for the
    upper. Endpoints are always realized replicate values; equal weights
    reduce to the ordinary percentile rule.
    """
    r = np.asarray(replicates, dtype=float)
    w = np.asarray(weights, dtype=float)
    if r.ndim != 1 or w.ndim != 1 or r.shape != w.shape:
        raise InputError(
            f"replicates and weights must be equal-length 1-d, got {r.shape} and {w.shape}"
        )
    if r.size == 0:
        raise InputError("at least one replicate is required")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise InputError("weights must be finite and strictly positive")
    if not 0.0 < level < 1.0:
        raise ConfigurationError(f"level must be in (0, 1), got {level}")
    order = np.argsort(r, kind="stable")
    r_sorted = r[order]
    cum = np.cumsum(w[order])
    total = float(cum[-1])
    tail = 0.5 * (1.0 - level)
    lo_idx = min(int(np.searchsorted(cum, tail * total, side="left")), r.size - 1)
    hi_idx = min(int(np.searchsorted(cum, (1.0 - tail) * total, side="left")), r.size - 1)
    return float(r_sorted[lo_idx]), float(r_sorted[hi_idx])


class _ForestArrays:
    """Dense-array view of a recruitment forest for vectorized resampling."""

    def __init__(self, forest: "RecruitmentForest", sample: SurveyedSample) -> None:
        node_ids = forest.node_ids()
        if not forest.seeds:
            raise InputError("forest has no seeds")
        missing = [i for i in node_ids if i not in sample]
        if missing:
            raise InputError(
                f"forest nodes missing from sample: {missing[:20]}"
                + ("..." if len(missing) > 20 else "")
            )
        row = {node_id: k for k, node_id in enumerate(node_ids)}
        self.node_ids = node_ids
        self.inv_degree = np.array(
            [1.0 / sample.record(i).degree for i in node_ids], dtype=float
        )
        children = forest.children_map()
        counts = np.zeros(len(node_ids), dtype=np.int64)
        flat: list[int] = []
        starts = np.zeros(len(node_ids), dtype=np.int64)
        for k, node_id in enumerate(node_ids):
            starts[k] = len(flat)
            kids = children.get(node_id, [])
            counts[k] = len(kids)
            flat.extend(row[c] for c in kids)
        self.child_count = counts
        self.child_start = starts
        self.child_flat = np.array(flat, dtype=np.int64)
        self.seed_rows = np.array([row[s] for s in forest.seeds], dtype=np.int64)

    def values(self, sample: SurveyedSample, attribute: str) -> np.ndarray:
        return np.array(
            [sample.record(i).values[attribute] for i in self.node_ids], dtype=float
        )


def _resample_placements(
    arrays: _ForestArrays, b: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw B bootstrap forests at once.

    Returns (replicate index, node row) for every placement across all B
    replicates. Each replicate places len(seeds) seed draws with replacement,
    then every placed node draws one child uniformly from its observed child
    set per observed child, level by level until no placed node has children.
    """
    n_seeds = arrays.seed_rows.size
    rep = np.repeat(np.arange(b, dtype=np.int64), n_seeds)
    nodes = arrays.seed_rows[rng.integers(0, n_seeds, size=b * n_seeds)]
    all_reps = [rep]
    all_nodes = [nodes]
    while True:
        counts = arrays.child_count[nodes]
        has_kids = counts > 0
        if not has_kids.any():
            break
        parents = nodes[has_kids]
        parent_reps = rep[has_kids]
        parent_counts = counts[has_kids]
        rep = np.repeat(parent_reps, parent_counts)
        base = np.repeat(arrays.child_start[parents], parent_counts)
        width = np.repeat(parent_counts, parent_counts)
        nodes = arrays.child_flat[base + rng.integers(0, width)]
        all_reps.append(rep)
        all_nodes.append(nodes)
    return np.concatenate(all_reps), np.concatenate(all_nodes)


def tree_bootstrap(
    forest: "RecruitmentForest",
    sample: SurveyedSample,
    attribute: str,
    b: int = 1000,
    level: float = 0.95,
    rng: np.random.Generator | None = None,
) -> EstimateReport:
    """Bootstrap the inverse-degree estimator by resampling the forest.

    The point estimate is computed on the original sample; each of the ``b``
    replicates re-grows the forest (seeds with replacement, then recursive
    uniform child draws) and re-estimates over the placed multiset, counting
    duplicates as many times as drawn. The interval is the weighted percentile
    interval over replicates with weights w_b = sum of placed 1/d_i.
    """
    if b < 1:
        raise ConfigurationError(f"b must be >= 1, got {b}")
    if not 0.0 < level < 1.0:
        raise ConfigurationError(f"level must be in (0, 1), got {level}")
    if rng is None:
        raise ConfigurationError("an explicit random generator is required")
    point = vh_estimate(sample, attribute)
    arrays = _ForestArrays(forest, sample)
    x = arrays.values(sample, attribute)
    rep, nodes = _resample_placements(arrays, b, rng)
    denom = np.bincount(rep, weights=arrays.inv_degree[nodes], minlength=b)
    if np.min(x) == np.max(x):
        # constant column: every placement's weighted mean is exactly that
        # constant, so the interval must come out zero-width
        replicates = np.full(b, float(x[0]))
    else:
        numer = np.bincount(rep, weights=x[nodes] * arrays.inv_degree[nodes], minlength=b)
        replicates = numer / denom
    lo, hi = weighted_percentile_ci(replicates, denom, level)
    return EstimateReport(
        attribute=attribute,
        estimator=TREEBOOT,
        point=point,
        ci_low=lo,
        ci_high=hi,
        level=level,
        replicates=tuple(float(v) for v in replicates),
        weights=tuple(float(v) for v in denom),
    )
