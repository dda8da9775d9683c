"""Seed selection, contact nomination, and chain-referral recruitment.

Two recruitment designs share one engine. Both survey respondents wave by
wave; each respondent names contacts (nomination) and picks up to
``max_recruits`` of them to refer into the next wave. The designs differ
only in how the picks are chosen from the contact list:

* ``rds``: with probability ``selection_alpha`` per pick, the respondent
  takes the remaining contact most similar to themselves (same gender first,
  then smallest age gap), otherwise a uniformly random remaining contact.
* ``rrds``: a uniformly random subset, i.e. the choice is taken away from
  the respondent and randomized.

Picks are made over the full contact list, the way referrals work in the
field: a respondent does not know who has already been surveyed. A pick
naming someone already surveyed, or already claimed by an earlier recruiter
in the same wave, is simply spent; nobody is surveyed twice and wasted picks
are not replaced. The first claimant becomes the parent in the recruitment
forest, and within-wave processing order is randomized per wave. This waste
is what separates the designs: similarity-ranked picks pile onto the same
locally popular contacts wave after wave, while randomized picks spread
across each list, so randomized chains keep finding fresh respondents after
preferential chains have begun re-naming people already enrolled.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, InputError, InsufficientSeedsError
from .estimators import SurveyRecord, SurveyedSample
from .netgen import GENDERS, Individual, SocialGraph, attribute_value

logger = logging.getLogger(__name__)

RDS = "rds"
RRDS = "rrds"
METHODS = (RDS, RRDS)

EXHAUSTIVE = "exhaustive"
APPROX_EXHAUSTIVE = "approx_exhaustive"
SELECTIVE = "selective"
NOMINATION_KINDS = (EXHAUSTIVE, APPROX_EXHAUSTIVE, SELECTIVE)


@dataclass(frozen=True)
class NominationMode:
    """How a respondent's contact list relates to their true neighborhood.

    ``prob`` is the per-neighbor dropout probability for ``approx_exhaustive``
    and the per-neighbor inclusion probability for ``selective``; it is unused
    for ``exhaustive``.
    """

    kind: str = EXHAUSTIVE
    prob: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in NOMINATION_KINDS:
            raise ConfigurationError(
                f"nomination kind must be one of {NOMINATION_KINDS}, got {self.kind!r}"
            )
        if not 0.0 <= self.prob <= 1.0:
            raise ConfigurationError(f"nomination prob must be in [0, 1], got {self.prob}")

    @classmethod
    def exhaustive(cls) -> "NominationMode":
        return cls(EXHAUSTIVE, 0.0)

    @classmethod
    def approx_exhaustive(cls, dropout_prob: float) -> "NominationMode":
        return cls(APPROX_EXHAUSTIVE, dropout_prob)

    @classmethod
    def selective(cls, inclusion_prob: float) -> "NominationMode":
        return cls(SELECTIVE, inclusion_prob)


@dataclass(frozen=True)
class NominationList:
    """Contacts one respondent named, in elicitation order."""

    respondent_id: int
    contacts: tuple[int, ...]
    mode: NominationMode


@dataclass(frozen=True)
class SeedSpec:
    """Filter for initial participants: optional gender and strict age cutoff."""

    count: int
    gender: str | None = None
    max_age: float | None = None

    def validate(self) -> None:
        if self.count < 1:
            raise ConfigurationError(f"seeds.count must be >= 1, got {self.count}")
        if self.gender is not None and self.gender not in GENDERS:
            raise ConfigurationError(
                f"seeds.gender must be one of {GENDERS} or absent, got {self.gender!r}"
            )


@dataclass(frozen=True)
class RecruitConfig:
    """Knobs shared by both recruitment designs.

    ``selection_alpha`` only affects the ``rds`` design.
    """

    max_recruits: int = 3
    max_waves: int = 12
    selection_alpha: float = 0.9
    nomination: NominationMode = field(default_factory=NominationMode.exhaustive)

    def validate(self) -> None:
        if self.max_recruits < 1:
            raise ConfigurationError(
                f"recruitment.max_recruits must be >= 1, got {self.max_recruits}"
            )
        if self.max_waves < 0:
            raise ConfigurationError(
                f"recruitment.max_waves must be >= 0, got {self.max_waves}"
            )
        if not 0.0 <= self.selection_alpha <= 1.0:
            raise ConfigurationError(
                f"recruitment.selection_alpha must be in [0, 1], got {self.selection_alpha}"
            )


@dataclass(frozen=True)
class RecruitmentForest:
    """Who recruited whom: seeds at wave 0, one event per enrolled recruit.

    Events are (wave, recruiter_id, recruit_id) in enrollment order. Each
    recruit appears exactly once; recruiters must be seeds or earlier recruits,
    and every event's wave is its recruiter's wave plus one.
    """

    seeds: tuple[int, ...]
    events: tuple[tuple[int, int, int], ...]
    method: str

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if len(set(self.seeds)) != len(self.seeds):
            raise InputError("seed ids must be distinct")
        wave_of: dict[int, int] = {s: 0 for s in self.seeds}
        for wave, recruiter, recruit in self.events:
            if recruiter not in wave_of:
                raise InputError(
                    f"recruiter {recruiter} enrolls before being surveyed"
                )
            if recruit in wave_of:
                raise InputError(f"recruit {recruit} enrolled more than once")
            if wave != wave_of[recruiter] + 1:
                raise InputError(
                    f"recruit {recruit} recorded at wave {wave}, expected "
                    f"{wave_of[recruiter] + 1}"
                )
            wave_of[recruit] = wave

    def node_ids(self) -> list[int]:
        """Seeds then recruits, in enrollment order."""
        return list(self.seeds) + [event[2] for event in self.events]

    def children_map(self) -> dict[int, list[int]]:
        children: dict[int, list[int]] = {}
        for _, recruiter, recruit in self.events:
            children.setdefault(recruiter, []).append(recruit)
        return children

    def waves_realized(self) -> int:
        return max((event[0] for event in self.events), default=0)


@dataclass(frozen=True)
class RecruitmentRun:
    """A forest plus the degree each respondent reported when surveyed."""

    forest: RecruitmentForest
    reported_degree: Mapping[int, int]


def select_seeds(
    graph: SocialGraph, spec: SeedSpec, rng: np.random.Generator
) -> list[int]:
    """Draw ``spec.count`` distinct seeds uniformly from qualifying individuals.

    Qualifying means matching ``spec.gender`` (if set) and ``age < spec.max_age``
    (if set). Raises InsufficientSeedsError naming the shortfall when fewer
    individuals qualify than are requested.
    """
    spec.validate()
    qualifying = [
        ind.id
        for ind in graph.individuals
        if (spec.gender is None or ind.gender == spec.gender)
        and (spec.max_age is None or ind.age < spec.max_age)
    ]
    if len(qualifying) < spec.count:
        raise InsufficientSeedsError(
            f"requested {spec.count} seeds but only {len(qualifying)} individuals "
            f"qualify (short by {spec.count - len(qualifying)})"
        )
    picks = rng.choice(len(qualifying), size=spec.count, replace=False)
    return [qualifying[int(k)] for k in picks]


def nominate(
    respondent_id: int,
    graph: SocialGraph,
    mode: NominationMode,
    rng: np.random.Generator,
) -> NominationList:
    """Elicit one respondent's contact list under the given nomination mode.

    The list is always a duplicate-free subset of the true neighborhood,
    returned in randomized elicitation order.
    """
    neighbors = graph.neighbors(respondent_id)
    if mode.kind == EXHAUSTIVE:
        contacts = list(neighbors)
    elif mode.kind == APPROX_EXHAUSTIVE:
        keep = rng.random(len(neighbors)) >= mode.prob
        contacts = [nb for nb, k in zip(neighbors, keep) if k]
    else:
        keep = rng.random(len(neighbors)) < mode.prob
        contacts = [nb for nb, k in zip(neighbors, keep) if k]
    perm = rng.permutation(len(contacts))
    return NominationList(
        respondent_id, tuple(contacts[int(k)] for k in perm), mode
    )


def rds_select(
    recruiter: Individual,
    eligible: Sequence[Individual],
    alpha: float,
    max_k: int,
    rng: np.random.Generator,
) -> list[int]:
    """Choose up to ``max_k`` recruits with similarity-biased preference.

    Eligible contacts are ranked by same gender first, then ascending absolute
    age gap to the recruiter, with ascending id breaking ties. Each selection
    slot takes the top-ranked remaining contact with probability ``alpha`` and
    a uniformly random remaining contact otherwise.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha must be in [0, 1], got {alpha}")
    if max_k < 1:
        raise ConfigurationError(f"max_k must be >= 1, got {max_k}")
    ranked = sorted(
        eligible,
        key=lambda other: (
            other.gender != recruiter.gender,
            abs(other.age - recruiter.age),
            other.id,
        ),
    )
    picks: list[int] = []
    for _ in range(min(max_k, len(ranked))):
        if rng.random() < alpha:
            chosen = ranked.pop(0)
        else:
            chosen = ranked.pop(int(rng.integers(len(ranked))))
        picks.append(chosen.id)
    return picks


def rrds_select(
    eligible: Sequence[int], max_k: int, rng: np.random.Generator
) -> list[int]:
    """Choose up to ``max_k`` recruits uniformly at random without replacement."""
    if max_k < 1:
        raise ConfigurationError(f"max_k must be >= 1, got {max_k}")
    k = min(max_k, len(eligible))
    if k == 0:
        return []
    picks = rng.choice(len(eligible), size=k, replace=False)
    return [int(eligible[int(p)]) for p in picks]


def run_recruitment(
    graph: SocialGraph,
    seeds: Sequence[int],
    config: RecruitConfig,
    method: str,
    rng: np.random.Generator,
) -> RecruitmentRun:
    """Run one full recruitment from the given seeds.

    Seeds are surveyed as wave 0; waves proceed until ``max_waves`` is reached
    or a wave enrolls nobody. Each respondent's picks are selected from their
    full nomination list; picks naming an already-surveyed or already-claimed
    contact are spent without replacement. Nomination lists are elicited once
    per respondent at survey time, and the reported degree is the list's
    length.
    """
    config.validate()
    if method not in METHODS:
        raise ConfigurationError(f"method must be one of {METHODS}, got {method!r}")
    if not seeds:
        raise InputError("at least one seed is required")
    if len(set(seeds)) != len(seeds):
        raise InputError("seed ids must be distinct")
    for s in seeds:
        if s not in graph:
            raise InputError(f"seed id {s} absent from graph")

    nominations: dict[int, tuple[int, ...]] = {}
    reported: dict[int, int] = {}

    def survey(node_id: int) -> None:
        contacts = nominate(node_id, graph, config.nomination, rng).contacts
        nominations[node_id] = contacts
        reported[node_id] = len(contacts)

    for s in seeds:
        survey(s)
    surveyed: set[int] = set(seeds)
    current: list[int] = list(seeds)
    events: list[tuple[int, int, int]] = []

    for wave in range(1, config.max_waves + 1):
        if not current:
            break
        order = rng.permutation(len(current))
        claimed: list[int] = []
        claimed_set: set[int] = set()
        for idx in order:
            recruiter = current[int(idx)]
            pool = nominations[recruiter]
            if method == RDS:
                picks = rds_select(
                    graph.individual(recruiter),
                    [graph.individual(c) for c in pool],
                    config.selection_alpha,
                    config.max_recruits,
                    rng,
                )
            else:
                picks = rrds_select(pool, config.max_recruits, rng)
            for recruit in picks:
                if recruit in surveyed or recruit in claimed_set:
                    continue
                claimed_set.add(recruit)
                claimed.append(recruit)
                events.append((wave, recruiter, recruit))
                survey(recruit)
        if not claimed:
            break
        surveyed |= claimed_set
        current = claimed

    forest = RecruitmentForest(tuple(seeds), tuple(events), method)
    return RecruitmentRun(forest, reported)


def surveyed_sample(
    run: RecruitmentRun,
    graph: SocialGraph,
    attributes: Sequence[str] = ("age", "female"),
) -> SurveyedSample:
    """Turn a recruitment run into the sample the estimators see.

    One record per surveyed individual with their reported degree and
    attribute values. Individuals reporting zero contacts are excluded with a
    warning: inverse-degree weights are undefined for them, and clamping the
    degree up would silently inflate their weight.
    """
    records: list[SurveyRecord] = []
    dropped: list[int] = []
    for node_id in run.forest.node_ids():
        degree = run.reported_degree[node_id]
        if degree < 1:
            dropped.append(node_id)
            continue
        ind = graph.individual(node_id)
        records.append(
            SurveyRecord(
                node_id,
                degree,
                {attr: attribute_value(ind, attr) for attr in attributes},
            )
        )
    if dropped:
        logger.warning(
            "excluded %d zero-degree individual(s) from estimation: %s",
            len(dropped),
            dropped[:20],
        )
    return SurveyedSample(records)


def prune_to_sample(forest: RecruitmentForest, sample: SurveyedSample) -> RecruitmentForest:
    """Drop forest nodes that carry no sample record.

    Only zero-report individuals can lack a record, and they never recruit
    anybody, so they are always leaves (or childless seeds); removing them and
    their arrival events leaves a valid forest over the estimable sample.
    """
    keep_seeds = tuple(s for s in forest.seeds if s in sample)
    keep_events = tuple(e for e in forest.events if e[2] in sample)
    if len(keep_seeds) == len(forest.seeds) and len(keep_events) == len(forest.events):
        return forest
    return RecruitmentForest(keep_seeds, keep_events, forest.method)
