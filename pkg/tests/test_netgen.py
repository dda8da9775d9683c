"""Population drawing, graph wiring, and graph reports."""

import math

import numpy as np
import pytest

from conftest import person
from rrds.errors import ConfigurationError, InputError
from rrds.netgen import (
    FEMALE,
    MALE,
    PopulationSpec,
    SocialGraph,
    attribute_value,
    component_report,
    gender_assortativity,
    generate_edges,
    generate_population,
    similarity,
)


def test_population_moments_near_targets():
    pop = generate_population(PopulationSpec(n=10_000), np.random.default_rng(1234))
    mean_age = sum(ind.age for ind in pop) / len(pop)
    prop_female = sum(ind.gender == FEMALE for ind in pop) / len(pop)
    assert abs(mean_age - 41.5) < 0.3
    assert abs(prop_female - 0.70) < 0.015


def test_population_ids_bounds_genders():
    spec = PopulationSpec(n=2_000)
    pop = generate_population(spec, np.random.default_rng(9))
    assert [ind.id for ind in pop] == list(range(2_000))
    assert all(spec.age_min <= ind.age <= spec.age_max for ind in pop)
    assert {ind.gender for ind in pop} == {FEMALE, MALE}


def test_population_empty():
    assert generate_population(PopulationSpec(n=0), np.random.default_rng(0)) == []


def test_population_tight_bounds_still_fill():
    spec = PopulationSpec(n=500, age_min=41.0, age_max=42.0)
    pop = generate_population(spec, np.random.default_rng(3))
    assert len(pop) == 500
    assert all(41.0 <= ind.age <= 42.0 for ind in pop)


def test_population_hopeless_bounds_error():
    spec = PopulationSpec(n=50, age_min=18.0, age_max=18.0 + 1e-9)
    with pytest.raises(ConfigurationError, match="age bounds"):
        generate_population(spec, np.random.default_rng(3))


@pytest.mark.parametrize(
    ("kwargs", "fragment"),
    [
        (dict(n=-1), "population.n"),
        (dict(n=5, age_sd=0.0), "age_sd"),
        (dict(n=5, age_min=30.0, age_max=30.0), "age_min"),
        (dict(n=5, female_prop=1.3), "female_prop"),
        (dict(n=5, target_mean_degree=-0.5), "target_mean_degree"),
        (dict(n=5, homophily_alpha=1.5), "homophily_alpha"),
        (dict(n=5, age_scale_tau=0.0), "age_scale_tau"),
        (dict(n=5, sociality_sd=-0.1), "sociality_sd"),
        (dict(n=5, closure_prob=-0.2), "closure_prob"),
    ],
)
def test_population_spec_validation(kwargs, fragment):
    with pytest.raises(ConfigurationError, match=fragment):
        PopulationSpec(**kwargs).validate()


def test_similarity_frozen_values():
    assert similarity(person(0, 30, MALE), person(1, 30, MALE), tau=5.0) == 1.0
    assert similarity(person(0, 30, MALE), person(1, 30, FEMALE), tau=5.0) == 0.5
    five_year_gap = similarity(person(0, 30, MALE), person(1, 35, MALE), tau=5.0)
    assert five_year_gap == 0.5 + 0.5 * math.exp(-1.0)
    assert five_year_gap == pytest.approx(0.6839397205857212, abs=1e-15)


def test_similarity_symmetric_and_bounded():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a = person(0, float(rng.uniform(18, 65)), FEMALE if rng.random() < 0.5 else MALE)
        b = person(1, float(rng.uniform(18, 65)), FEMALE if rng.random() < 0.5 else MALE)
        s = similarity(a, b, tau=5.0)
        assert s == similarity(b, a, tau=5.0)
        assert 0.0 <= s <= 1.0


def test_similarity_rejects_bad_tau():
    with pytest.raises(ConfigurationError, match="tau"):
        similarity(person(0), person(1), tau=0.0)


def test_edge_count_and_mean_degree_at_scale():
    spec = PopulationSpec(n=10_000)
    pop = generate_population(spec, np.random.default_rng(7))
    graph = generate_edges(pop, spec, np.random.default_rng(8))
    assert graph.edge_count == 10_000
    assert 1.9 <= graph.mean_degree() <= 2.1


def test_edge_count_truncates_odd_products():
    pop = [person(i, 25 + i, MALE) for i in range(5)]
    graph = generate_edges(pop, PopulationSpec(n=5, target_mean_degree=1.0), np.random.default_rng(2))
    assert graph.edge_count == 2


@pytest.mark.parametrize("genders", [(MALE, MALE), (FEMALE, MALE), (FEMALE, FEMALE)])
def test_two_person_population_wires_the_only_edge(genders):
    pop = [person(0, 30.0, genders[0]), person(1, 33.0, genders[1])]
    graph = generate_edges(pop, PopulationSpec(n=2, target_mean_degree=1.0), np.random.default_rng(5))
    assert graph.edges == ((0, 1),)


def test_degenerate_edge_targets():
    assert generate_edges([], PopulationSpec(n=0), np.random.default_rng(0)).edge_count == 0
    lone = generate_edges(
        [person(0)], PopulationSpec(n=1, target_mean_degree=0.0), np.random.default_rng(0)
    )
    assert lone.edge_count == 0 and lone.n == 1


def test_unreachable_edge_target_rejected():
    pop = [person(i, 20 + i) for i in range(3)]
    with pytest.raises(ConfigurationError, match="holds at most"):
        generate_edges(pop, PopulationSpec(n=3, target_mean_degree=4.0), np.random.default_rng(0))


def test_duplicate_ids_rejected():
    pop = [person(0, 30.0), person(0, 40.0)]
    with pytest.raises(InputError, match="duplicate ids"):
        generate_edges(pop, PopulationSpec(n=2, target_mean_degree=1.0), np.random.default_rng(0))


def test_homophily_raises_gender_assortativity():
    spec0 = PopulationSpec(n=400, target_mean_degree=3.0, homophily_alpha=0.0)
    spec9 = PopulationSpec(n=400, target_mean_degree=3.0, homophily_alpha=0.9)
    low, high = [], []
    for k in range(20):
        pop = generate_population(spec0, np.random.default_rng(1000 + k))
        low.append(gender_assortativity(generate_edges(pop, spec0, np.random.default_rng(2000 + k))))
        high.append(gender_assortativity(generate_edges(pop, spec9, np.random.default_rng(2000 + k))))
    mean_low = sum(low) / len(low)
    mean_high = sum(high) / len(high)
    assert all(math.isfinite(v) for v in low + high)
    assert mean_high > mean_low
    assert mean_high > 0.1


def test_component_report_hand_cases():
    isolated = SocialGraph([person(i) for i in range(5)], [])
    assert component_report(isolated) == [1, 1, 1, 1, 1]

    path_plus_loner = SocialGraph([person(i) for i in range(4)], [(0, 1), (1, 2)])
    assert component_report(path_plus_loner) == [3, 1]

    cycle = SocialGraph([person(i) for i in range(4)], [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert component_report(cycle) == [4]


def test_gender_assortativity_hand_cases():
    no_edges = SocialGraph([person(0), person(1)], [])
    assert math.isnan(gender_assortativity(no_edges))

    all_male = SocialGraph([person(0, 30, MALE), person(1, 31, MALE)], [(0, 1)])
    assert math.isnan(gender_assortativity(all_male))

    crossed = SocialGraph([person(0, 30, MALE), person(1, 31, FEMALE)], [(0, 1)])
    assert gender_assortativity(crossed) == pytest.approx(-1.0)

    split = SocialGraph(
        [person(0, 30, MALE), person(1, 31, MALE), person(2, 30, FEMALE), person(3, 31, FEMALE)],
        [(0, 1), (2, 3)],
    )
    assert gender_assortativity(split) == pytest.approx(1.0)


def test_social_graph_rejects_malformed_input():
    people = [person(0), person(1)]
    with pytest.raises(InputError, match="self-loop"):
        SocialGraph(people, [(0, 0)])
    with pytest.raises(InputError, match="duplicate edge"):
        SocialGraph(people, [(0, 1), (1, 0)])
    with pytest.raises(InputError, match="unknown id"):
        SocialGraph(people, [(0, 7)])
    with pytest.raises(InputError, match="duplicate individual"):
        SocialGraph([person(0), person(0)], [])
    with pytest.raises(InputError, match="unknown gender"):
        SocialGraph([person(0, 30.0, "other")], [])


def test_social_graph_accessors():
    graph = SocialGraph([person(i) for i in (3, 1, 2)], [(3, 1), (2, 1)])
    assert graph.edges == ((1, 2), (1, 3))
    assert graph.neighbors(1) == (2, 3)
    assert graph.degree(1) == 2 and graph.degree(2) == 1
    assert list(graph.ids()) == [1, 2, 3]
    assert 2 in graph and 9 not in graph
    assert graph.individual(3).id == 3
    with pytest.raises(InputError, match="unknown individual"):
        graph.individual(9)
    with pytest.raises(InputError, match="unknown individual"):
        graph.neighbors(9)
    assert SocialGraph([], []).mean_degree() == 0.0


def test_generated_graph_is_simple_and_on_target():
    spec = PopulationSpec(n=300, target_mean_degree=2.0)
    pop = generate_population(spec, np.random.default_rng(21))
    graph = generate_edges(pop, spec, np.random.default_rng(22))
    assert graph.edge_count == 300
    assert len(set(graph.edges)) == graph.edge_count
    assert all(0 <= a < b < 300 for a, b in graph.edges)
    assert sum(graph.degree(i) for i in graph.ids()) == 2 * graph.edge_count


def test_generation_is_deterministic_per_seed():
    spec = PopulationSpec(n=300, target_mean_degree=2.0)
    pop_a = generate_population(spec, np.random.default_rng(5))
    pop_b = generate_population(spec, np.random.default_rng(5))
    assert pop_a == pop_b
    edges_a = generate_edges(pop_a, spec, np.random.default_rng(6)).edges
    edges_b = generate_edges(pop_b, spec, np.random.default_rng(6)).edges
    assert edges_a == edges_b
    edges_c = generate_edges(pop_a, spec, np.random.default_rng(7)).edges
    assert edges_c != edges_a


def test_attribute_value_encodings():
    f = person(0, 44.5, FEMALE)
    m = person(1, 20.0, MALE)
    assert attribute_value(f, "age") == 44.5
    assert attribute_value(f, "female") == 1.0 and attribute_value(m, "female") == 0.0
    assert attribute_value(f, "male") == 0.0 and attribute_value(m, "male") == 1.0
    with pytest.raises(ConfigurationError, match="unknown attribute"):
        attribute_value(f, "income")
