"""Configuration loading, overrides, presets, and seed-stream derivation."""

import numpy as np
import pytest

from rrds.config import load_config, preset_path, with_run_overrides
from rrds.errors import ConfigurationError
from rrds.seeding import STAGES, replication_key, stream

MINIMAL = """
[population]
n = 500

[seeds]
count = 4
"""


def write(tmp_path, text, name="scenario.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_minimal_file_fills_defaults(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL), env={})
    assert cfg.population.n == 500
    assert cfg.population.age_mean == 41.5
    assert cfg.population.age_sd == 10.0
    assert (cfg.population.age_min, cfg.population.age_max) == (18.0, 65.0)
    assert cfg.population.female_prop == 0.70
    assert cfg.population.target_mean_degree == 2.0
    assert cfg.population.homophily_alpha == 0.9
    assert cfg.population.sociality_sd == 0.8
    assert cfg.population.closure_prob == 0.92
    assert cfg.seeds.count == 4
    assert cfg.seeds.gender is None and cfg.seeds.max_age is None
    assert (cfg.recruitment.max_recruits, cfg.recruitment.max_waves) == (3, 12)
    assert cfg.recruitment.selection_alpha == 0.9
    assert cfg.recruitment.nomination.kind == "exhaustive"
    assert cfg.estimation.bootstrap_replicates == 1000
    assert cfg.estimation.confidence_level == 0.95
    assert cfg.estimation.attributes == ("age", "female")
    assert cfg.estimation.dump_replicates is False
    assert (cfg.run.replications, cfg.run.master_seed) == (1, 0)
    assert (cfg.run.out_dir, cfg.run.workers) == ("out", 1)


def test_baseline_preset_loads():
    cfg = load_config(preset_path("baseline"), env={})
    assert cfg.population.n == 10_000
    assert cfg.population.female_prop == 0.70
    assert cfg.seeds.count == 76
    assert cfg.seeds.gender == "male"
    assert cfg.seeds.max_age == 25.0
    assert cfg.recruitment.max_recruits == 3
    assert cfg.recruitment.max_waves == 12
    assert cfg.recruitment.selection_alpha == 0.9
    assert cfg.run.replications == 50
    assert cfg.run.master_seed == 20260818
    assert cfg.run.out_dir == "out/baseline"
    assert cfg.run.workers == 1


def test_unknown_preset_and_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="unknown preset"):
        preset_path("nope")
    with pytest.raises(ConfigurationError, match="cannot read config"):
        load_config(tmp_path / "absent.toml", env={})


def test_invalid_toml(tmp_path):
    with pytest.raises(ConfigurationError, match="invalid TOML"):
        load_config(write(tmp_path, "[population\nn = 5"), env={})


def test_unknown_keys_and_sections(tmp_path):
    with pytest.raises(ConfigurationError, match="unknown key population.foo"):
        load_config(write(tmp_path, MINIMAL + "\n[population.foo]\nbar = 1\n"), env={})
    with pytest.raises(ConfigurationError, match=r"unknown config section \[network\]"):
        load_config(write(tmp_path, MINIMAL + "\n[network]\nkind = 1\n"), env={})


@pytest.mark.parametrize(
    "snippet, message",
    [
        ('[population]\nn = "x"\n[seeds]\ncount = 1', "population.n must be"),
        ("[population]\nn = true\n[seeds]\ncount = 1", "population.n must be"),
        ("[population]\nn = 10\n[seeds]\ncount = 1\ngender = 3", "seeds.gender must be"),
    ],
)
def test_type_errors(tmp_path, snippet, message):
    with pytest.raises(ConfigurationError, match=message):
        load_config(write(tmp_path, snippet), env={})


def test_required_keys_and_range_validation(tmp_path):
    with pytest.raises(ConfigurationError, match="population.n is required"):
        load_config(write(tmp_path, "[seeds]\ncount = 1"), env={})
    with pytest.raises(ConfigurationError, match="seeds.count is required"):
        load_config(write(tmp_path, "[population]\nn = 10"), env={})


def test_range_validation_names_the_field(tmp_path):
    bad = MINIMAL.replace("n = 500", "n = 500\nfemale_prop = 1.3")
    with pytest.raises(ConfigurationError, match="population.female_prop must be in"):
        load_config(write(tmp_path, bad), env={})


def test_env_overrides_apply(tmp_path):
    env = {
        "RRDS_POPULATION__N": "800",
        "RRDS_RUN__MASTER_SEED": "7",
        "RRDS_SEEDS__GENDER": '"female"',
        "IRRELEVANT": "1",
    }
    cfg = load_config(write(tmp_path, MINIMAL), env=env)
    assert cfg.population.n == 800
    assert cfg.run.master_seed == 7
    assert cfg.seeds.gender == "female"


@pytest.mark.parametrize(
    "name, value, message",
    [
        ("RRDS_POPULATION__N", "female", "cannot parse"),
        ("RRDS_HOUSE__N", "1", "unknown section"),
        ("RRDS_POPULATION", "1", "malformed override"),
    ],
)
def test_env_override_errors(tmp_path, name, value, message):
    with pytest.raises(ConfigurationError, match=message):
        load_config(write(tmp_path, MINIMAL), env={name: value})


def test_precedence_file_env_overrides(tmp_path):
    path = write(tmp_path, MINIMAL)
    env = {"RRDS_POPULATION__N": "800"}
    assert load_config(path, env=env).population.n == 800
    cfg = load_config(path, env=env, overrides={"population": {"n": 900}})
    assert cfg.population.n == 900


def test_with_run_overrides(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL), env={})
    out = with_run_overrides(cfg, master_seed=99, replications=3, out_dir="elsewhere", workers=2)
    assert (out.run.master_seed, out.run.replications) == (99, 3)
    assert (out.run.out_dir, out.run.workers) == ("elsewhere", 2)
    # the original is untouched
    assert cfg.run.master_seed == 0
    with pytest.raises(ConfigurationError, match="run.workers"):
        with_run_overrides(cfg, workers=0)


def test_stage_table_is_frozen():
    assert STAGES == {
        "population": 0,
        "edges": 1,
        "seeds": 2,
        "recruit_rds": 3,
        "recruit_rrds": 4,
        "bootstrap_rds": 5,
        "bootstrap_rrds": 6,
    }


def test_streams_are_reproducible_and_distinct():
    a = stream(42, 0, "edges").random(8)
    b = stream(42, 0, "edges").random(8)
    assert np.array_equal(a, b)
    others = [
        stream(42, 0, "population").random(8),
        stream(42, 1, "edges").random(8),
        stream(43, 0, "edges").random(8),
    ]
    assert all(not np.array_equal(a, o) for o in others)


def test_stream_validation():
    with pytest.raises(ConfigurationError, match="unknown stage"):
        stream(1, 0, "warmup")
    with pytest.raises(ConfigurationError, match="rep"):
        stream(1, -1, "edges")


def test_replication_key_format():
    key = replication_key(20260818, 0)
    assert len(key) == 32
    assert set(key) <= set("0123456789abcdef")
    assert replication_key(20260818, 0) == key
    assert replication_key(20260818, 1) != key
