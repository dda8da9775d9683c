"""Synthetic populations and homophily-biased random graphs.

Populations carry two attributes, age and gender. Ages are normal draws
rejection-sampled into a closed interval; gender is an independent Bernoulli
split. Edges are placed by drawing candidate pairs at random and accepting
each with probability ``alpha * similarity + (1 - alpha)``, until a fixed edge
count implied by the target mean degree is reached. At ``alpha = 0`` acceptance
ignores demographics; at ``alpha = 1`` it is driven entirely by similarity.

Candidate pairs are proposed two ways. With probability ``closure_prob`` a
proposal closes a triangle: it pairs two contacts of a common third person,
which gives the network overlapping contact circles. Otherwise the initiating
endpoint is drawn in proportion to a lognormal contact propensity (unit mean,
spread ``sociality_sd``) deflated by that person's average acceptance, and the
partner is whoever sits nearest in age to a heavy-tailed displacement of the
initiator's age. People therefore mostly meet age-peers while retaining some
long-range ties, the propensity spread creates well-connected people with long
contact lists, and the reach deflation keeps expected degree roughly
independent of demographics so chain samples can converge to the true
population composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, InputError

FEMALE = "female"
MALE = "male"
GENDERS = (FEMALE, MALE)

# attribute names usable in estimation; "female"/"male" are 0/1 encodings of gender
ATTRIBUTES = ("age", "female", "male")

_MAX_REDRAW_ROUNDS = 1000
_CANDIDATE_BATCH = 4096


@dataclass(frozen=True)
class Individual:
    """One population member."""

    id: int
    age: float
    gender: str


@dataclass(frozen=True)
class PopulationSpec:
    """Parameters of the synthetic population and its contact network."""

    n: int
    age_mean: float = 41.5
    age_sd: float = 10.0
    age_min: float = 18.0
    age_max: float = 65.0
    female_prop: float = 0.70
    target_mean_degree: float = 2.0
    homophily_alpha: float = 0.9
    age_scale_tau: float = 5.0
    sociality_sd: float = 0.8
    closure_prob: float = 0.92

    def validate(self) -> None:
        if self.n < 0:
            raise ConfigurationError(f"population.n must be >= 0, got {self.n}")
        if self.age_sd <= 0:
            raise ConfigurationError(f"population.age_sd must be > 0, got {self.age_sd}")
        if not self.age_min < self.age_max:
            raise ConfigurationError(
                f"population.age_min must be < population.age_max, "
                f"got [{self.age_min}, {self.age_max}]"
            )
        if not 0.0 <= self.female_prop <= 1.0:
            raise ConfigurationError(
                f"population.female_prop must be in [0, 1], got {self.female_prop}"
            )
        if self.target_mean_degree < 0:
            raise ConfigurationError(
                f"population.target_mean_degree must be >= 0, got {self.target_mean_degree}"
            )
        if not 0.0 <= self.homophily_alpha <= 1.0:
            raise ConfigurationError(
                f"population.homophily_alpha must be in [0, 1], got {self.homophily_alpha}"
            )
        if self.age_scale_tau <= 0:
            raise ConfigurationError(
                f"population.age_scale_tau must be > 0, got {self.age_scale_tau}"
            )
        if self.sociality_sd < 0:
            raise ConfigurationError(
                f"population.sociality_sd must be >= 0, got {self.sociality_sd}"
            )
        if not 0.0 <= self.closure_prob <= 1.0:
            raise ConfigurationError(
                f"population.closure_prob must be in [0, 1], got {self.closure_prob}"
            )


def attribute_value(individual: Individual, attribute: str) -> float:
    """Numeric value of a named attribute for one individual."""
    if attribute == "age":
        return individual.age
    if attribute == "female":
        return 1.0 if individual.gender == FEMALE else 0.0
    if attribute == "male":
        return 1.0 if individual.gender == MALE else 0.0
    raise ConfigurationError(
        f"unknown attribute {attribute!r}; supported: {', '.join(ATTRIBUTES)}"
    )


class SocialGraph:
    """Undirected simple graph over a population.

    Neighbor lists and the edge list are kept in ascending order so that two
    graphs with equal content behave identically regardless of how they were
    constructed. Construction rejects self-loops, duplicate edges, duplicate
    ids, and edges naming unknown ids.
    """

    def __init__(
        self, individuals: Sequence[Individual], edges: Iterable[tuple[int, int]]
    ) -> None:
        self._individuals = tuple(individuals)
        self._by_id: dict[int, Individual] = {}
        for ind in self._individuals:
            if ind.id in self._by_id:
                raise InputError(f"duplicate individual id {ind.id}")
            if ind.gender not in GENDERS:
                raise InputError(f"individual {ind.id} has unknown gender {ind.gender!r}")
            self._by_id[ind.id] = ind
        adj: dict[int, list[int]] = {ind.id: [] for ind in self._individuals}
        seen: set[tuple[int, int]] = set()
        for a, b in edges:
            if a == b:
                raise InputError(f"self-loop at id {a}")
            key = (a, b) if a < b else (b, a)
            if key in seen:
                raise InputError(f"duplicate edge {key}")
            if key[0] not in adj or key[1] not in adj:
                raise InputError(f"edge {key} references an unknown id")
            seen.add(key)
            adj[key[0]].append(key[1])
            adj[key[1]].append(key[0])
        self._edges: tuple[tuple[int, int], ...] = tuple(sorted(seen))
        self._adj: dict[int, tuple[int, ...]] = {
            i: tuple(sorted(ns)) for i, ns in adj.items()
        }

    @property
    def individuals(self) -> tuple[Individual, ...]:
        return self._individuals

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """Edges as (low id, high id) pairs in ascending order."""
        return self._edges

    @property
    def n(self) -> int:
        return len(self._individuals)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def ids(self) -> Iterator[int]:
        """All ids in ascending order."""
        return iter(sorted(self._adj))

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._by_id

    def individual(self, node_id: int) -> Individual:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise InputError(f"unknown individual id {node_id}") from None

    def neighbors(self, node_id: int) -> tuple[int, ...]:
        try:
            return self._adj[node_id]
        except KeyError:
            raise InputError(f"unknown individual id {node_id}") from None

    def degree(self, node_id: int) -> int:
        return len(self.neighbors(node_id))

    def mean_degree(self) -> float:
        if self.n == 0:
            return 0.0
        return 2.0 * self.edge_count / self.n


def generate_population(spec: PopulationSpec, rng: np.random.Generator) -> list[Individual]:
    """Draw a population of ``spec.n`` individuals.

    Ages are N(age_mean, age_sd) draws, redrawn until they land inside
    [age_min, age_max]; genders are independent Bernoulli(female_prop).
    Ids are assigned 0..n-1 in draw order.
    """
    spec.validate()
    if spec.n == 0:
        return []
    ages = rng.normal(spec.age_mean, spec.age_sd, size=spec.n)
    out_of_bounds = (ages < spec.age_min) | (ages > spec.age_max)
    rounds = 0
    while out_of_bounds.any():
        rounds += 1
        if rounds > _MAX_REDRAW_ROUNDS:
            raise ConfigurationError(
                "age bounds reject nearly all draws; widen [age_min, age_max] "
                "or move age_mean/age_sd"
            )
        k = int(out_of_bounds.sum())
        ages[out_of_bounds] = rng.normal(spec.age_mean, spec.age_sd, size=k)
        out_of_bounds = (ages < spec.age_min) | (ages > spec.age_max)
    female = rng.random(spec.n) < spec.female_prop
    return [
        Individual(i, float(ages[i]), FEMALE if female[i] else MALE)
        for i in range(spec.n)
    ]


def similarity(a: Individual, b: Individual, tau: float) -> float:
    """Demographic similarity in [0, 1].

    Half the score is shared gender, half decays exponentially in the age gap
    with scale ``tau``: 0.5 * 1[gender equal] + 0.5 * exp(-|age_a - age_b| / tau).
    """
    if tau <= 0:
        raise ConfigurationError(f"tau must be > 0, got {tau}")
    gender_term = 0.5 if a.gender == b.gender else 0.0
    return gender_term + 0.5 * math.exp(-abs(a.age - b.age) / tau)


# mean age-similarity seen under tau-scaled Cauchy meeting gaps; constant
# across ages, so demographic reach varies only through the gender mix
_LOCAL_KERNEL_MEAN = 0.6
# strength of the reach deflation applied to each proposal endpoint
_REACH_EXPONENT = 1.0
# meeting locality: the Cauchy age-gap scale for partner targeting is this
# fraction of age_scale_tau, so contact circles are age-tighter than the
# similarity kernel can resolve
_MEETING_SCALE_FACTOR = 0.3


def _gender_reach(same_gender_share: np.ndarray | float, alpha: float):
    """Average acceptance a person would see against proposed partners.

    Under age-targeted pairing the age term of the acceptance probability
    averages to a constant, so reach depends only on how much of the
    population shares the person's gender.
    """
    return alpha * 0.5 * (same_gender_share + _LOCAL_KERNEL_MEAN) + (1.0 - alpha)


def _proposal_weights(
    population: Sequence[Individual], spec: PopulationSpec, rng: np.random.Generator
) -> np.ndarray:
    """Per-person proposal weights for the initiating endpoint, summing to 1.

    Each person gets a lognormal contact propensity with unit mean and spread
    ``sociality_sd``. The propensity is deflated by the person's demographic
    reach, the average acceptance they would see against the partners the
    proposal process offers them. Without that compensation, acceptance-based
    homophily hands the majority gender systematically higher degrees, and
    chain samples then converge to the degree-weighted population rather than
    the actual one.
    """
    n = len(population)
    if spec.sociality_sd > 0:
        sd = spec.sociality_sd
        propensity = rng.lognormal(mean=-0.5 * sd * sd, sigma=sd, size=n)
    else:
        propensity = np.ones(n)
    is_female = np.array([ind.gender == FEMALE for ind in population])
    female_share = float(is_female.mean())
    same_gender_share = np.where(is_female, female_share, 1.0 - female_share)
    reach = _gender_reach(same_gender_share, spec.homophily_alpha)
    weights = propensity / np.power(reach, _REACH_EXPONENT)
    return weights / weights.sum()


def generate_edges(
    population: Sequence[Individual], spec: PopulationSpec, rng: np.random.Generator
) -> SocialGraph:
    """Wire a population into a graph with ``floor(n * target_mean_degree / 2)`` edges.

    Candidate pairs are proposed with replacement and a fresh pair (i, j) is
    accepted with probability
    ``homophily_alpha * similarity(i, j) + (1 - homophily_alpha)``;
    self-pairs and already-placed edges are discarded. A proposal is, with
    probability ``closure_prob``, a friend-of-friend pair: two contacts of a
    common third person, drawn from the edges placed so far (falling back to an
    ordinary pair while the graph is too small to offer one). Otherwise the
    initiating endpoint is drawn in proportion to its reach-compensated contact
    propensity (see ``_proposal_weights``) and paired with the person nearest
    in age to a Cauchy-displaced target at scale ``age_scale_tau``, reflected
    at the population age bounds. Closure makes contact circles overlap, so a
    person's acquaintances tend to know each other; age-targeted pairing keeps
    those circles demographically tight.
    """
    spec.validate()
    n = len(population)
    target_edges = int(n * spec.target_mean_degree / 2)
    max_edges = n * (n - 1) // 2
    if target_edges > max_edges:
        raise ConfigurationError(
            f"target_mean_degree {spec.target_mean_degree} needs {target_edges} edges "
            f"but a simple graph on {n} nodes holds at most {max_edges}"
        )
    if target_edges == 0:
        return SocialGraph(population, [])

    alpha = spec.homophily_alpha
    tau = spec.age_scale_tau
    closure = spec.closure_prob
    weights = _proposal_weights(population, spec, rng)
    by_id = {ind.id: ind for ind in population}
    if len(by_id) != n:
        raise InputError("population contains duplicate ids")
    ages = np.array([ind.age for ind in population], dtype=float)
    fem_mask = np.array([ind.gender == FEMALE for ind in population])
    # partner gender is drawn from the population mix deflated by reach, the
    # mirror of the initiator-side compensation in _proposal_weights; the
    # partner itself is then the nearest age match within that gender
    female_share = float(fem_mask.mean())
    tables: dict[bool, tuple[np.ndarray, np.ndarray]] = {}
    for want_female in (True, False):
        idx = np.flatnonzero(fem_mask == want_female)
        if idx.size:
            order = idx[np.argsort(ages[idx], kind="stable")]
            tables[want_female] = (ages[order], order)
    if len(tables) < 2:
        p_female = 1.0 if True in tables else 0.0
        tables = {True: next(iter(tables.values())), False: next(iter(tables.values()))}
    else:
        wf = female_share / _gender_reach(female_share, alpha) ** _REACH_EXPONENT
        wm = (1.0 - female_share) / _gender_reach(
            1.0 - female_share, alpha
        ) ** _REACH_EXPONENT
        p_female = wf / (wf + wm)
    adj: dict[int, list[int]] = {ind.id: [] for ind in population}
    edges: set[tuple[int, int]] = set()
    placed: list[tuple[int, int]] = []
    draws = 0
    draw_budget = max(10_000_000, 10_000 * target_edges)
    # index draws are taken modulo the current edge or neighbor count; the
    # huge bound keeps the modulo bias negligible
    _BIG = 1 << 62
    while len(edges) < target_edges:
        draws += _CANDIDATE_BATCH
        if draws > draw_budget:
            raise ConfigurationError(
                f"edge target {target_edges} not reached after {draws} candidate draws"
            )
        ii = rng.choice(n, size=_CANDIDATE_BATCH, p=weights)
        gaps = tau * _MEETING_SCALE_FACTOR * rng.standard_cauchy(_CANDIDATE_BATCH)
        gg = rng.random(_CANDIDATE_BATCH)
        mm = rng.random(_CANDIDATE_BATCH)
        ee = rng.integers(0, _BIG, size=_CANDIDATE_BATCH)
        sides = rng.integers(0, 2, size=_CANDIDATE_BATCH)
        kk = rng.integers(0, _BIG, size=_CANDIDATE_BATCH)
        uu = rng.random(_CANDIDATE_BATCH)
        for t in range(_CANDIDATE_BATCH):
            a = b = None
            if placed and mm[t] < closure:
                hub_edge = placed[ee[t] % len(placed)]
                w = hub_edge[sides[t]]
                others = adj[w]
                if len(others) >= 2:
                    u_id = hub_edge[1 - sides[t]]
                    v_id = others[kk[t] % len(others)]
                    if v_id != u_id:
                        a, b = by_id[u_id], by_id[v_id]
                    else:
                        continue
            if a is None:
                i = ii[t]
                s_ages, s_order = tables[gg[t] < p_female]
                ng = len(s_ages)
                if ng == 1:
                    # a one-person gender offers no age variation to target
                    jpos = 0
                else:
                    # partner is whoever of the chosen gender sits nearest a
                    # Cauchy-displaced age target, reflected once at that
                    # gender's age bounds
                    lo, hi = s_ages[0], s_ages[-1]
                    target = ages[i] + gaps[t]
                    if target < lo:
                        target = 2.0 * lo - target
                    elif target > hi:
                        target = 2.0 * hi - target
                    if target < lo or target > hi:
                        continue
                    pos = int(np.searchsorted(s_ages, target))
                    if pos == 0:
                        jpos = 0
                    elif pos == ng:
                        jpos = ng - 1
                    elif target - s_ages[pos - 1] <= s_ages[pos] - target:
                        jpos = pos - 1
                    else:
                        jpos = pos
                j = int(s_order[jpos])
                if i == j:
                    continue
                a, b = population[i], population[j]
            key = (a.id, b.id) if a.id < b.id else (b.id, a.id)
            if key in edges:
                continue
            if uu[t] < alpha * similarity(a, b, tau) + (1.0 - alpha):
                edges.add(key)
                placed.append(key)
                adj[a.id].append(b.id)
                adj[b.id].append(a.id)
                if len(edges) == target_edges:
                    break
    return SocialGraph(population, placed)


def component_report(graph: SocialGraph) -> list[int]:
    """Connected component sizes in descending order."""
    visited: set[int] = set()
    sizes: list[int] = []
    for start in graph.ids():
        if start in visited:
            continue
        visited.add(start)
        stack = [start]
        size = 0
        while stack:
            node = stack.pop()
            size += 1
            for nb in graph.neighbors(node):
                if nb not in visited:
                    visited.add(nb)
                    stack.append(nb)
        sizes.append(size)
    return sorted(sizes, reverse=True)


def gender_assortativity(graph: SocialGraph) -> float:
    """Newman's nominal assortativity coefficient for gender.

    Returns nan for graphs with no edges, or where every edge endpoint shares
    one gender (the coefficient is undefined there).
    """
    if graph.edge_count == 0:
        return float("nan")
    index = {g: k for k, g in enumerate(GENDERS)}
    mix = np.zeros((2, 2), dtype=float)
    for a, b in graph.edges:
        ga = index[graph.individual(a).gender]
        gb = index[graph.individual(b).gender]
        mix[ga, gb] += 1.0
        mix[gb, ga] += 1.0
    mix /= mix.sum()
    trace = float(np.trace(mix))
    a_marg = mix.sum(axis=1)
    squared = float(np.sum(a_marg * a_marg))
    denom = 1.0 - squared
    if denom == 0.0:
        return float("nan")
    return (trace - squared) / denom
