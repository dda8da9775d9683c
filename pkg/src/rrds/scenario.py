"""Pipeline orchestration.

One replication runs four stages: generate a population and graph, recruit
under each requested design, estimate, and compute metrics. Each stage writes
its outputs under ``<out>/rep_NNNN/`` and can be re-run standalone from the
files of the previous stage; because every stage draws from its own
(master seed, replication, stage) random stream, staged and whole-pipeline
runs produce byte-identical files. ``run_scenario`` fans replications out to
worker processes and reduces the per-replication summaries into aggregate
files; the reduction is order-fixed, so results do not depend on the worker
count.

Estimator reports per arm and attribute:

* ``vh``: inverse-degree-weighted point with a naive normal half-width
  centered on it (a design-ignorant interval around the design-aware point).
* ``treeboot``: same point, interval from the recruitment-tree bootstrap.
* ``naive``: unweighted mean with its normal interval, always emitted as the
  comparison baseline.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from .config import ScenarioConfig
from .errors import ConfigurationError, InputError
from .estimators import (
    NAIVE,
    TREEBOOT,
    VH,
    EstimateReport,
    SurveyedSample,
    naive_mean_ci,
    tree_bootstrap,
    vh_estimate,
)
from .files import (
    read_estimates,
    read_forest,
    read_graph,
    read_nodes,
    read_sample,
    read_seeds,
    sha256_file,
    write_convergence,
    write_edges,
    write_estimates,
    write_forest,
    write_json,
    write_nodes,
    write_replicates,
    write_sample,
    write_seeds,
    write_wave_stats,
)
from .metrics import (
    Baseline,
    MetricsCell,
    WaveStats,
    ci_coverage,
    population_baseline,
    se_from_ci,
    standardized_rmse,
    wave_stats,
)
from .netgen import (
    Individual,
    SocialGraph,
    component_report,
    gender_assortativity,
    generate_edges,
    generate_population,
)
from .recruit import (
    METHODS,
    RecruitmentForest,
    prune_to_sample,
    run_recruitment,
    select_seeds,
    surveyed_sample,
)
from .seeding import replication_key, stream

ARMS = METHODS
POINT_ESTIMATORS = (VH, TREEBOOT)

_WAVE_METRICS = (
    "new_unique",
    "cumulative_n",
    "mean_age",
    "prop_female",
    "age_abs_bias",
    "female_abs_bias",
)


def rep_dir(out: Path, rep: int) -> Path:
    return out / f"rep_{rep:04d}"


def _check_arms(arms: Sequence[str]) -> tuple[str, ...]:
    arms = tuple(arms)
    if not arms or any(a not in ARMS for a in arms) or len(set(arms)) != len(arms):
        raise ConfigurationError(f"arms must be a subset of {ARMS}, got {arms}")
    return arms


def _check_estimators(estimators: Sequence[str]) -> tuple[str, ...]:
    estimators = tuple(estimators)
    if (
        not estimators
        or any(e not in POINT_ESTIMATORS for e in estimators)
        or len(set(estimators)) != len(estimators)
    ):
        raise ConfigurationError(
            f"estimators must be a subset of {POINT_ESTIMATORS}, got {estimators}"
        )
    return estimators


def stage_generate(config: ScenarioConfig, rep: int, out: Path) -> SocialGraph:
    """Generate one replication's population and graph; write node/edge files."""
    rd = rep_dir(out, rep)
    seed = config.run.master_seed
    population = generate_population(config.population, stream(seed, rep, "population"))
    graph = generate_edges(population, config.population, stream(seed, rep, "edges"))
    write_nodes(rd / "nodes.csv", graph)
    write_edges(rd / "edges.csv", graph)
    components = component_report(graph)
    assort = gender_assortativity(graph)
    write_json(
        rd / "graph_stats.json",
        {
            "n": graph.n,
            "edges": graph.edge_count,
            "mean_degree": graph.mean_degree(),
            "component_count": len(components),
            "largest_components": components[:10],
            "largest_component_share": (
                components[0] / graph.n if graph.n else None
            ),
            "gender_assortativity": None if assort != assort else assort,
        },
    )
    return graph


def stage_recruit(
    config: ScenarioConfig,
    rep: int,
    out: Path,
    arms: Sequence[str] = ARMS,
    graph: SocialGraph | None = None,
) -> dict[str, tuple[RecruitmentForest, RecruitmentForest, SurveyedSample]]:
    """Select seeds and run recruitment per arm; write seed/forest/sample files.

    Returns per arm the full recruitment forest, the estimable (pruned)
    forest, and the sample.
    """
    arms = _check_arms(arms)
    rd = rep_dir(out, rep)
    seed = config.run.master_seed
    if graph is None:
        graph = read_graph(rd / "nodes.csv", rd / "edges.csv")
    seed_ids = select_seeds(graph, config.seeds, stream(seed, rep, "seeds"))
    write_seeds(rd / "seeds.csv", seed_ids)
    result: dict[str, tuple[RecruitmentForest, RecruitmentForest, SurveyedSample]] = {}
    for arm in arms:
        rng = stream(seed, rep, f"recruit_{arm}")
        run = run_recruitment(graph, seed_ids, config.recruitment, arm, rng)
        sample = surveyed_sample(run, graph, config.estimation.attributes)
        estimable = prune_to_sample(run.forest, sample)
        ad = rd / arm
        write_forest(ad / "forest.csv", run.forest)
        write_sample(ad / "sample.csv", sample, config.estimation.attributes)
        write_json(
            ad / "run.json",
            {
                "method": arm,
                "seed_count": len(seed_ids),
                "max_recruits": config.recruitment.max_recruits,
                "max_waves": config.recruitment.max_waves,
                "selection_alpha": config.recruitment.selection_alpha,
                "nomination": {
                    "kind": config.recruitment.nomination.kind,
                    "prob": config.recruitment.nomination.prob,
                },
                "waves_realized": run.forest.waves_realized(),
                "final_unique": len(run.forest.node_ids()),
                "estimable_n": len(sample),
            },
        )
        result[arm] = (run.forest, estimable, sample)
    return result


def _vh_report(sample: SurveyedSample, attribute: str, level: float) -> EstimateReport:
    point = vh_estimate(sample, attribute)
    _, lo, hi = naive_mean_ci(sample, attribute, level)
    half = 0.5 * (hi - lo)
    return EstimateReport(attribute, VH, point, point - half, point + half, level)


def _naive_report(sample: SurveyedSample, attribute: str, level: float) -> EstimateReport:
    point, lo, hi = naive_mean_ci(sample, attribute, level)
    return EstimateReport(attribute, NAIVE, point, lo, hi, level)


def stage_estimate(
    config: ScenarioConfig,
    rep: int,
    out: Path,
    arm: str,
    estimators: Sequence[str] = POINT_ESTIMATORS,
    data: tuple[RecruitmentForest, SurveyedSample] | None = None,
) -> list[EstimateReport]:
    """Estimate every configured attribute for one arm; write estimates.json."""
    estimators = _check_estimators(estimators)
    rd = rep_dir(out, rep)
    ad = rd / arm
    seed = config.run.master_seed
    if data is None:
        sample = read_sample(ad / "sample.csv")
        full = read_forest(ad / "forest.csv", read_seeds(rd / "seeds.csv"), arm)
        forest = prune_to_sample(full, sample)
    else:
        forest, sample = data
    rng = stream(seed, rep, f"bootstrap_{arm}")
    level = config.estimation.confidence_level
    reports: list[EstimateReport] = []
    for attribute in config.estimation.attributes:
        if VH in estimators:
            reports.append(_vh_report(sample, attribute, level))
        if TREEBOOT in estimators:
            reports.append(
                tree_bootstrap(
                    forest,
                    sample,
                    attribute,
                    config.estimation.bootstrap_replicates,
                    level,
                    rng,
                )
            )
        reports.append(_naive_report(sample, attribute, level))
    write_estimates(ad / "estimates.json", reports)
    if config.estimation.dump_replicates:
        for report in reports:
            if report.estimator == TREEBOOT:
                write_replicates(ad / f"replicates_{report.attribute}.csv", report)
    return reports


def stage_metrics(
    config: ScenarioConfig,
    rep: int,
    out: Path,
    arm: str,
    data: tuple[Sequence[Individual], RecruitmentForest, list[dict]] | None = None,
) -> dict:
    """Wave statistics and per-arm metric cells; writes wave_stats.csv and metrics.json."""
    rd = rep_dir(out, rep)
    ad = rd / arm
    if data is None:
        population = read_nodes(rd / "nodes.csv")
        forest = read_forest(ad / "forest.csv", read_seeds(rd / "seeds.csv"), arm)
        estimates = read_estimates(ad / "estimates.json")
    else:
        population, forest, estimates = data
    stats = wave_stats(forest, population)
    write_wave_stats(ad / "wave_stats.csv", stats)
    baseline = population_baseline(population)
    by_estimator: dict[str, list[dict]] = {}
    for entry in estimates:
        by_estimator.setdefault(entry["estimator"], []).append(entry)
    cells: list[MetricsCell] = []
    for name in sorted(by_estimator):
        entries = by_estimator[name]
        points = {
            e["attribute"]: (
                e["point"],
                se_from_ci(e["ci_low"], e["ci_high"], e["level"]),
            )
            for e in entries
        }
        intervals = {e["attribute"]: (e["ci_low"], e["ci_high"]) for e in entries}
        try:
            rmse = standardized_rmse(points, baseline)
        except InputError:
            # degenerate interval (zero scale); the cell keeps its coverage counts
            rmse = None
        count, total = ci_coverage(intervals, baseline)
        cells.append(MetricsCell(arm, name, rmse, count, total))
    write_json(
        ad / "metrics.json",
        {
            "method": arm,
            "baseline": dict(baseline.values),
            "standardization": "estimator_se",
            "cells": [c.to_dict() for c in cells],
        },
    )
    return {"stats": stats, "baseline": baseline, "cells": cells}


def _padded_series(stats: Sequence[WaveStats], baseline: Baseline, max_waves: int) -> dict:
    """Wave series extended to max_waves; empty waves carry totals forward."""
    by_wave = {s.wave: s for s in stats}
    series: dict[str, list[float]] = {m: [] for m in _WAVE_METRICS}
    last: WaveStats | None = None
    for wave in range(max_waves + 1):
        s = by_wave.get(wave)
        if s is None:
            if last is None:
                raise InputError("wave series must start at wave 0")
            s = WaveStats(wave, 0, last.cumulative_n, last.mean_age, last.prop_female)
        last = s
        series["new_unique"].append(float(s.new_unique))
        series["cumulative_n"].append(float(s.cumulative_n))
        series["mean_age"].append(s.mean_age)
        series["prop_female"].append(s.prop_female)
        series["age_abs_bias"].append(abs(s.mean_age - baseline.values["age"]))
        series["female_abs_bias"].append(abs(s.prop_female - baseline.values["female"]))
    return series


def run_replication(
    config: ScenarioConfig,
    rep: int,
    out: Path,
    arms: Sequence[str] = ARMS,
    estimators: Sequence[str] = POINT_ESTIMATORS,
) -> dict:
    """Run every stage for one replication; returns a summary for aggregation."""
    arms = _check_arms(arms)
    estimators = _check_estimators(estimators)
    graph = stage_generate(config, rep, out)
    recruited = stage_recruit(config, rep, out, arms, graph=graph)
    population = graph.individuals
    baseline = population_baseline(population)
    summary: dict = {
        "rep": rep,
        "key": replication_key(config.run.master_seed, rep),
        "baseline": dict(baseline.values),
        "arms": {},
    }
    for arm in arms:
        full_forest, estimable, sample = recruited[arm]
        reports = stage_estimate(
            config, rep, out, arm, estimators, data=(estimable, sample)
        )
        report_dicts = [r.to_dict() for r in reports]
        m = stage_metrics(
            config, rep, out, arm, data=(population, full_forest, report_dicts)
        )
        series = _padded_series(m["stats"], baseline, config.recruitment.max_waves)
        summary["arms"][arm] = {
            "seed_count": len(full_forest.seeds),
            "final_unique": len(full_forest.node_ids()),
            "waves_realized": full_forest.waves_realized(),
            "series": series,
            "cells": {c.estimator: c.to_dict() for c in m["cells"]},
        }
    rd = rep_dir(out, rep)
    summary["files"] = {
        str(p.relative_to(out)): sha256_file(p)
        for p in sorted(rd.rglob("*"))
        if p.is_file()
    }
    return summary


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _sd(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    m = _mean(values)
    return (sum((v - m) ** 2 for v in values) / (len(values) - 1)) ** 0.5


def _aggregate_cells(summaries: Sequence[dict], arm: str) -> list[dict]:
    names: list[str] = []
    for summary in summaries:
        for name in summary["arms"][arm]["cells"]:
            if name not in names:
                names.append(name)
    cells = []
    for name in sorted(names):
        per_rep = [s["arms"][arm]["cells"][name] for s in summaries]
        rmses = [c["rmse"] for c in per_rep if c["rmse"] is not None]
        count = sum(c["coverage_count"] for c in per_rep)
        total = sum(c["coverage_total"] for c in per_rep)
        cells.append(
            {
                "recruitment": arm,
                "estimator": name,
                "rmse": _mean(rmses) if rmses else None,
                "coverage_count": count,
                "coverage_total": total,
                "coverage_rate": count / total if total else None,
            }
        )
    return cells


def _aggregate(
    config: ScenarioConfig, summaries: Sequence[dict], arms: Sequence[str]
) -> dict:
    max_waves = config.recruitment.max_waves
    agg: dict = {
        "replications": len(summaries),
        "arms_run": list(arms),
        "baseline_mean": {
            attr: _mean([s["baseline"][attr] for s in summaries])
            for attr in summaries[0]["baseline"]
        },
        "arms": {},
        "cells": [],
    }
    for arm in arms:
        finals = [float(s["arms"][arm]["final_unique"]) for s in summaries]
        seeds = [float(s["arms"][arm]["seed_count"]) for s in summaries]
        new_per_wave = [
            (f - sc) / max(1, max_waves) for f, sc in zip(finals, seeds)
        ]
        per_wave = {
            metric: [
                _mean([s["arms"][arm]["series"][metric][w] for s in summaries])
                for w in range(max_waves + 1)
            ]
            for metric in _WAVE_METRICS
        }
        agg["arms"][arm] = {
            "seed_count": _mean(seeds),
            "final_unique_mean": _mean(finals),
            "final_unique_sd": _sd(finals),
            "new_per_wave_mean": _mean(new_per_wave),
            "waves_realized_mean": _mean(
                [float(s["arms"][arm]["waves_realized"]) for s in summaries]
            ),
            "final_abs_bias": {
                "age": per_wave["age_abs_bias"][-1],
                "female": per_wave["female_abs_bias"][-1],
            },
            "per_wave": per_wave,
        }
        agg["cells"].extend(_aggregate_cells(summaries, arm))
    if "rds" in agg["arms"] and "rrds" in agg["arms"]:
        rds_final = agg["arms"]["rds"]["final_unique_mean"]
        rds_new = agg["arms"]["rds"]["new_per_wave_mean"]
        agg["ratios_rrds_over_rds"] = {
            "final_unique": (
                agg["arms"]["rrds"]["final_unique_mean"] / rds_final
                if rds_final
                else None
            ),
            "new_per_wave": (
                agg["arms"]["rrds"]["new_per_wave_mean"] / rds_new if rds_new else None
            ),
        }
    else:
        agg["ratios_rrds_over_rds"] = None
    return agg


def run_scenario(
    config: ScenarioConfig,
    arms: Sequence[str] = ARMS,
    estimators: Sequence[str] = POINT_ESTIMATORS,
) -> dict:
    """Run all replications, write aggregates, and return the run manifest."""
    config.validate()
    arms = _check_arms(arms)
    estimators = _check_estimators(estimators)
    out = Path(config.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    n_reps = config.run.replications
    workers = min(config.run.workers, n_reps)
    summaries: list[dict] = []
    failures: list[dict] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(run_replication, config, rep, out, arms, estimators): rep
                for rep in range(n_reps)
            }
            for future in as_completed(futures):
                rep = futures[future]
                try:
                    summaries.append(future.result())
                except Exception as exc:  # noqa: BLE001 - reported in manifest
                    failures.append({"rep": rep, "error": f"{type(exc).__name__}: {exc}"})
    else:
        for rep in range(n_reps):
            try:
                summaries.append(run_replication(config, rep, out, arms, estimators))
            except Exception as exc:  # noqa: BLE001 - reported in manifest
                failures.append({"rep": rep, "error": f"{type(exc).__name__}: {exc}"})
    summaries.sort(key=lambda s: s["rep"])
    failures.sort(key=lambda f: f["rep"])

    files: dict[str, str] = {}
    for summary in summaries:
        files.update(summary.pop("files"))

    if summaries:
        aggregate = _aggregate(config, summaries, arms)
        write_json(out / "aggregate.json", aggregate)
        write_json(
            out / "metrics.json",
            {"standardization": "estimator_se", "cells": aggregate["cells"]},
        )
        rows = []
        for arm in arms:
            per_wave = aggregate["arms"][arm]["per_wave"]
            for metric in _WAVE_METRICS:
                for wave, value in enumerate(per_wave[metric]):
                    rows.append((wave, arm, metric, value))
        write_convergence(out / "convergence.csv", rows)
        for name in ("aggregate.json", "metrics.json", "convergence.csv"):
            files[name] = sha256_file(out / name)

    manifest = {
        "tool": "rrds",
        "version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "elapsed_seconds": time.perf_counter() - t0,
        "master_seed": config.run.master_seed,
        "replications": n_reps,
        "workers": config.run.workers,
        "arms": list(arms),
        "estimators": list(estimators) + [NAIVE],
        "config": config.to_dict(),
        "replication_keys": [
            {"rep": s["rep"], "key": s["key"]} for s in summaries
        ],
        "status": "ok" if not failures else ("partial" if summaries else "failed"),
        "failures": failures,
        "files": files,
    }
    write_json(out / "manifest.json", manifest)
    return manifest
