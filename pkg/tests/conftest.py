"""Shared builders and an exact oracle for the bootstrap tests."""

from __future__ import annotations

from fractions import Fraction

from rrds.estimators import SurveyedSample
from rrds.netgen import MALE, Individual
from rrds.recruit import RecruitmentForest

# filled by the acceptance tests, printed after the run so the verdict for
# each criterion is visible in plain pytest output
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)


def person(pid: int, age: float = 30.0, gender: str = MALE) -> Individual:
    return Individual(pid, float(age), gender)


def _combine(d1: dict, d2: dict) -> dict:
    out: dict = {}
    for m1, p1 in d1.items():
        for m2, p2 in d2.items():
            key = tuple(sorted(m1 + m2))
            out[key] = out.get(key, Fraction(0)) + p1 * p2
    return out


def _node_dist(node: int, children: dict, cache: dict) -> dict:
    """Distribution over placed-node multisets for one copy of ``node``.

    A copy always places the node itself, then draws one child uniformly
    from the node's observed child set per observed child, recursing into
    whatever each draw lands on.
    """
    if node in cache:
        return cache[node]
    kids = children.get(node, [])
    dist: dict = {(node,): Fraction(1)}
    if kids:
        slot: dict = {}
        for kid in kids:
            for multiset, p in _node_dist(kid, children, cache).items():
                slot[multiset] = slot.get(multiset, Fraction(0)) + Fraction(1, len(kids)) * p
        for _ in kids:
            dist = _combine(dist, slot)
    cache[node] = dist
    return dist


def enumerate_tree_bootstrap(
    forest: RecruitmentForest, sample: SurveyedSample, attribute: str, ndigits: int = 9
) -> dict[float, Fraction]:
    """Exact replicate-estimate distribution by brute-force enumeration.

    Enumerates every resampled forest (seeds redrawn with replacement, then
    each placed copy redrawing its children) and maps each placed multiset to
    its inverse-degree-weighted estimate, rounded to ``ndigits`` to absorb
    float summation-order noise. Probabilities are exact Fractions.
    """
    children = forest.children_map()
    cache: dict = {}
    seed_slot: dict = {}
    for s in forest.seeds:
        for multiset, p in _node_dist(s, children, cache).items():
            seed_slot[multiset] = (
                seed_slot.get(multiset, Fraction(0)) + Fraction(1, len(forest.seeds)) * p
            )
    dist: dict = {(): Fraction(1)}
    for _ in forest.seeds:
        dist = _combine(dist, seed_slot)
    out: dict[float, Fraction] = {}
    for multiset, p in dist.items():
        num = 0.0
        den = 0.0
        for node in multiset:
            rec = sample.record(node)
            num += rec.values[attribute] / rec.degree
            den += 1.0 / rec.degree
        val = round(num / den, ndigits)
        out[val] = out.get(val, Fraction(0)) + p
    return out
