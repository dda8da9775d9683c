"""Scenario configuration: TOML files, environment overrides, validation.

Precedence, lowest to highest: file values, environment variables, CLI flags.
Environment overrides use the prefix ``RRDS_`` with a double underscore
between section and key, e.g. ``RRDS_POPULATION__N=500`` or
``RRDS_RUN__MASTER_SEED=7``. Values are parsed as TOML fragments, so strings
need quotes (``RRDS_SEEDS__GENDER='"female"'``) and lists use TOML syntax.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigurationError
from .netgen import ATTRIBUTES, PopulationSpec
from .recruit import NominationMode, RecruitConfig, SeedSpec

ENV_PREFIX = "RRDS_"

_SECTIONS = ("population", "seeds", "recruitment", "estimation", "run")

_KEYS = {
    "population": {
        "n": int,
        "age_mean": float,
        "age_sd": float,
        "age_min": float,
        "age_max": float,
        "female_prop": float,
        "target_mean_degree": float,
        "homophily_alpha": float,
        "age_scale_tau": float,
        "sociality_sd": float,
        "closure_prob": float,
    },
    "seeds": {"count": int, "gender": str, "max_age": float},
    "recruitment": {
        "max_recruits": int,
        "max_waves": int,
        "selection_alpha": float,
        "nomination": str,
        "nomination_prob": float,
    },
    "estimation": {
        "bootstrap_replicates": int,
        "confidence_level": float,
        "attributes": list,
        "dump_replicates": bool,
    },
    "run": {
        "replications": int,
        "master_seed": int,
        "out_dir": str,
        "workers": int,
    },
}


@dataclass(frozen=True)
class EstimationConfig:
    bootstrap_replicates: int = 1000
    confidence_level: float = 0.95
    attributes: tuple[str, ...] = ("age", "female")
    dump_replicates: bool = False

    def validate(self) -> None:
        if self.bootstrap_replicates < 1:
            raise ConfigurationError(
                f"estimation.bootstrap_replicates must be >= 1, "
                f"got {self.bootstrap_replicates}"
            )
        if not 0.0 < self.confidence_level < 1.0:
            raise ConfigurationError(
                f"estimation.confidence_level must be in (0, 1), "
                f"got {self.confidence_level}"
            )
        if not self.attributes:
            raise ConfigurationError("estimation.attributes must not be empty")
        for attr in self.attributes:
            if attr not in ATTRIBUTES:
                raise ConfigurationError(
                    f"estimation.attributes: unknown attribute {attr!r}; "
                    f"supported: {', '.join(ATTRIBUTES)}"
                )


@dataclass(frozen=True)
class RunSettings:
    replications: int = 1
    master_seed: int = 0
    out_dir: str = "out"
    workers: int = 1

    def validate(self) -> None:
        if self.replications < 1:
            raise ConfigurationError(
                f"run.replications must be >= 1, got {self.replications}"
            )
        if self.workers < 1:
            raise ConfigurationError(f"run.workers must be >= 1, got {self.workers}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError(
                f"run.master_seed must be an unsigned 64-bit integer, "
                f"got {self.master_seed}"
            )


@dataclass(frozen=True)
class ScenarioConfig:
    population: PopulationSpec
    seeds: SeedSpec
    recruitment: RecruitConfig
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    run: RunSettings = field(default_factory=RunSettings)

    def validate(self) -> None:
        self.population.validate()
        self.seeds.validate()
        self.recruitment.validate()
        self.estimation.validate()
        self.run.validate()

    def to_dict(self) -> dict:
        """Flat JSON-ready echo of every setting, for manifests."""
        return {
            "population": {
                "n": self.population.n,
                "age_mean": self.population.age_mean,
                "age_sd": self.population.age_sd,
                "age_min": self.population.age_min,
                "age_max": self.population.age_max,
                "female_prop": self.population.female_prop,
                "target_mean_degree": self.population.target_mean_degree,
                "homophily_alpha": self.population.homophily_alpha,
                "age_scale_tau": self.population.age_scale_tau,
                "sociality_sd": self.population.sociality_sd,
                "closure_prob": self.population.closure_prob,
            },
            "seeds": {
                "count": self.seeds.count,
                "gender": self.seeds.gender,
                "max_age": self.seeds.max_age,
            },
            "recruitment": {
                "max_recruits": self.recruitment.max_recruits,
                "max_waves": self.recruitment.max_waves,
                "selection_alpha": self.recruitment.selection_alpha,
                "nomination": self.recruitment.nomination.kind,
                "nomination_prob": self.recruitment.nomination.prob,
            },
            "estimation": {
                "bootstrap_replicates": self.estimation.bootstrap_replicates,
                "confidence_level": self.estimation.confidence_level,
                "attributes": list(self.estimation.attributes),
                "dump_replicates": self.estimation.dump_replicates,
            },
            "run": {
                "replications": self.run.replications,
                "master_seed": self.run.master_seed,
                "out_dir": self.run.out_dir,
                "workers": self.run.workers,
            },
        }


def _check_section(section: str, data: Mapping) -> None:
    known = _KEYS[section]
    for key, value in data.items():
        if key not in known:
            raise ConfigurationError(
                f"unknown key {section}.{key}; known keys: {', '.join(sorted(known))}"
            )
        expected = known[key]
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            continue
        if expected is not list and (
            not isinstance(value, expected) or isinstance(value, bool) != (expected is bool)
        ):
            raise ConfigurationError(
                f"{section}.{key} must be {expected.__name__}, "
                f"got {type(value).__name__} {value!r}"
            )
        if expected is list and not isinstance(value, list):
            raise ConfigurationError(
                f"{section}.{key} must be a list, got {type(value).__name__} {value!r}"
            )


def _build(data: Mapping) -> ScenarioConfig:
    for section in data:
        if section not in _SECTIONS:
            raise ConfigurationError(
                f"unknown config section [{section}]; known: {', '.join(_SECTIONS)}"
            )
    for section in _SECTIONS:
        _check_section(section, data.get(section, {}))

    pop = data.get("population", {})
    if "n" not in pop:
        raise ConfigurationError("population.n is required")
    population = PopulationSpec(**pop)

    sd = data.get("seeds", {})
    if "count" not in sd:
        raise ConfigurationError("seeds.count is required")
    seeds = SeedSpec(
        count=sd["count"], gender=sd.get("gender"), max_age=sd.get("max_age")
    )

    rc = dict(data.get("recruitment", {}))
    kind = rc.pop("nomination", "exhaustive")
    prob = rc.pop("nomination_prob", 0.0)
    recruitment = RecruitConfig(nomination=NominationMode(kind, prob), **rc)

    est = dict(data.get("estimation", {}))
    if "attributes" in est:
        attrs = est["attributes"]
        if not all(isinstance(a, str) for a in attrs):
            raise ConfigurationError("estimation.attributes must be a list of strings")
        est["attributes"] = tuple(attrs)
    estimation = EstimationConfig(**est)

    run = RunSettings(**data.get("run", {}))

    config = ScenarioConfig(population, seeds, recruitment, estimation, run)
    config.validate()
    return config


def _apply_env(data: dict, env: Mapping[str, str]) -> None:
    for name in sorted(env):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        if "__" not in rest:
            raise ConfigurationError(
                f"malformed override {name}: expected {ENV_PREFIX}SECTION__KEY"
            )
        section, key = rest.split("__", 1)
        section = section.lower()
        key = key.lower()
        if section not in _SECTIONS:
            raise ConfigurationError(
                f"override {name}: unknown section {section!r}"
            )
        try:
            parsed = tomllib.loads(f"value = {env[name]}")["value"]
        except tomllib.TOMLDecodeError:
            raise ConfigurationError(
                f"override {name}: cannot parse {env[name]!r} as a TOML value "
                f"(strings need quotes)"
            ) from None
        data.setdefault(section, {})[key] = parsed


def load_config(
    path: str | Path,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, Mapping[str, object]] | None = None,
) -> ScenarioConfig:
    """Load, override, and validate a scenario configuration.

    ``overrides`` maps section -> key -> value and wins over both the file
    and the environment (the CLI passes its flags through here).
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML: {exc}") from exc
    _apply_env(data, os.environ if env is None else env)
    for section, kv in (overrides or {}).items():
        for key, value in kv.items():
            data.setdefault(section, {})[key] = value
    return _build(data)


def preset_path(name: str) -> Path:
    """Path of a packaged scenario preset, e.g. ``baseline``."""
    from importlib.resources import files as resource_files

    candidate = resource_files("rrds").joinpath("presets", f"{name}.toml")
    with_suffix = Path(str(candidate))
    if not with_suffix.is_file():
        raise ConfigurationError(f"unknown preset {name!r}")
    return with_suffix


def with_run_overrides(
    config: ScenarioConfig,
    *,
    master_seed: int | None = None,
    replications: int | None = None,
    out_dir: str | None = None,
    workers: int | None = None,
) -> ScenarioConfig:
    """Clone a config with run settings replaced (used by CLI flags)."""
    run = config.run
    if master_seed is not None:
        run = replace(run, master_seed=master_seed)
    if replications is not None:
        run = replace(run, replications=replications)
    if out_dir is not None:
        run = replace(run, out_dir=out_dir)
    if workers is not None:
        run = replace(run, workers=workers)
    run.validate()
    return replace(config, run=run)
