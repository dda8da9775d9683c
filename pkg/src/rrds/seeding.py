"""Deterministic random-stream derivation for replications and pipeline stages.

Every replication derives one independent stream per pipeline stage from
(master seed, replication index, stage id). Stage ids are part of the on-disk
reproducibility contract: outputs are byte-identical across runs, across
worker counts, and across running the pipeline whole versus stage by stage.
Do not renumber.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

STAGES = {
    "population": 0,
    "edges": 1,
    "seeds": 2,
    "recruit_rds": 3,
    "recruit_rrds": 4,
    "bootstrap_rds": 5,
    "bootstrap_rrds": 6,
}


def stream(master_seed: int, rep: int, stage: str) -> np.random.Generator:
    """Independent generator for one (replication, stage) pair."""
    if stage not in STAGES:
        raise ConfigurationError(f"unknown stage {stage!r}; known: {sorted(STAGES)}")
    if rep < 0:
        raise ConfigurationError(f"rep must be >= 0, got {rep}")
    seq = np.random.SeedSequence(master_seed, spawn_key=(rep, STAGES[stage]))
    return np.random.default_rng(seq)


def replication_key(master_seed: int, rep: int) -> str:
    """Stable hex fingerprint of a replication's seed material, for manifests."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(rep,))
    return "".join(f"{int(w):016x}" for w in seq.generate_state(2, np.uint64))
