"""Readers and writers for the on-disk data formats.

All files are deterministic: LF line endings, floats round-tripped via
``repr`` (shortest exact representation), JSON with sorted keys. Readers
raise ParseError naming the file and line on any schema mismatch.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParseError
from .estimators import EstimateReport, SurveyRecord, SurveyedSample
from .metrics import WaveStats
from .netgen import GENDERS, Individual, SocialGraph
from .recruit import RecruitmentForest

NODES_HEADER = ["id", "age", "gender", "degree"]
EDGES_HEADER = ["src", "dst"]
SEEDS_HEADER = ["seed_id"]
FOREST_HEADER = ["wave", "recruiter_id", "recruit_id"]
WAVE_HEADER = ["wave", "new_unique", "cumulative_n", "mean_age", "prop_female"]
CONVERGENCE_HEADER = ["wave", "method", "metric", "value"]


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


class _CsvReader:
    """Header-checked CSV reader with positioned errors."""

    def __init__(self, path: Path, header: Sequence[str]) -> None:
        self.path = path
        self.expected = list(header)
        try:
            self._fh = open(path, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        self._reader = csv.reader(self._fh)
        self.line = 0
        got = self._next_row(allow_eof=False)
        if got != self.expected:
            self.close()
            raise ParseError(
                f"{path}:1: expected header {','.join(self.expected)!r}, "
                f"got {','.join(got)!r}"
            )

    def _next_row(self, allow_eof: bool = True) -> list[str] | None:
        try:
            row = next(self._reader)
        except StopIteration:
            if allow_eof:
                return None
            raise ParseError(f"{self.path}: file is empty") from None
        self.line += 1
        return row

    def rows(self) -> Iterable[list[str]]:
        while True:
            row = self._next_row()
            if row is None:
                return
            if len(row) != len(self.expected):
                raise ParseError(
                    f"{self.path}:{self.line}: expected {len(self.expected)} "
                    f"columns, got {len(row)}"
                )
            yield row

    def parse(self, raw: str, kind: type, column: str):
        try:
            return kind(raw)
        except ValueError:
            raise ParseError(
                f"{self.path}:{self.line}: column {column!r}: "
                f"cannot parse {raw!r} as {kind.__name__}"
            ) from None

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "_CsvReader":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_nodes(path: Path, graph: SocialGraph) -> None:
    _write_csv(
        path,
        NODES_HEADER,
        (
            (ind.id, ind.age, ind.gender, graph.degree(ind.id))
            for ind in graph.individuals
        ),
    )


def read_nodes(path: Path) -> list[Individual]:
    """Load individuals; the degree column is informational and ignored."""
    out: list[Individual] = []
    with _CsvReader(path, NODES_HEADER) as reader:
        for row in reader.rows():
            node_id = reader.parse(row[0], int, "id")
            age = reader.parse(row[1], float, "age")
            gender = row[2]
            if gender not in GENDERS:
                raise ParseError(
                    f"{path}:{reader.line}: column 'gender': unknown value {gender!r}"
                )
            reader.parse(row[3], int, "degree")
            out.append(Individual(node_id, age, gender))
    return out


def write_edges(path: Path, graph: SocialGraph) -> None:
    _write_csv(path, EDGES_HEADER, graph.edges)


def read_edges(path: Path) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    with _CsvReader(path, EDGES_HEADER) as reader:
        for row in reader.rows():
            src = reader.parse(row[0], int, "src")
            dst = reader.parse(row[1], int, "dst")
            if not src < dst:
                raise ParseError(
                    f"{path}:{reader.line}: edge ({src}, {dst}) violates src < dst"
                )
            out.append((src, dst))
    return out


def read_graph(nodes_path: Path, edges_path: Path) -> SocialGraph:
    return SocialGraph(read_nodes(nodes_path), read_edges(edges_path))


def write_seeds(path: Path, seeds: Sequence[int]) -> None:
    _write_csv(path, SEEDS_HEADER, ((s,) for s in seeds))


def read_seeds(path: Path) -> list[int]:
    with _CsvReader(path, SEEDS_HEADER) as reader:
        return [reader.parse(row[0], int, "seed_id") for row in reader.rows()]


def write_forest(path: Path, forest: RecruitmentForest) -> None:
    _write_csv(path, FOREST_HEADER, forest.events)


def read_forest(path: Path, seeds: Sequence[int], method: str) -> RecruitmentForest:
    events: list[tuple[int, int, int]] = []
    with _CsvReader(path, FOREST_HEADER) as reader:
        for row in reader.rows():
            events.append(
                (
                    reader.parse(row[0], int, "wave"),
                    reader.parse(row[1], int, "recruiter_id"),
                    reader.parse(row[2], int, "recruit_id"),
                )
            )
    return RecruitmentForest(tuple(seeds), tuple(events), method)


def write_sample(path: Path, sample: SurveyedSample, attributes: Sequence[str]) -> None:
    header = ["id", "degree", *attributes]
    _write_csv(
        path,
        header,
        (
            (rec.id, rec.degree, *(rec.values[a] for a in attributes))
            for rec in sample
        ),
    )


def read_sample(path: Path) -> SurveyedSample:
    """Load a sample; attribute columns are inferred from the header."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            first = fh.readline().rstrip("\n")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    header = first.split(",") if first else []
    if header[:2] != ["id", "degree"] or len(header) < 3:
        raise ParseError(
            f"{path}:1: expected header starting 'id,degree' with at least one "
            f"attribute column, got {first!r}"
        )
    attributes = header[2:]
    records: list[SurveyRecord] = []
    with _CsvReader(path, header) as reader:
        for row in reader.rows():
            rec_id = reader.parse(row[0], int, "id")
            degree = reader.parse(row[1], int, "degree")
            values = {
                attr: reader.parse(row[2 + k], float, attr)
                for k, attr in enumerate(attributes)
            }
            records.append(SurveyRecord(rec_id, degree, values))
    return SurveyedSample(records)


def write_wave_stats(path: Path, stats: Sequence[WaveStats]) -> None:
    _write_csv(
        path,
        WAVE_HEADER,
        (
            (s.wave, s.new_unique, s.cumulative_n, s.mean_age, s.prop_female)
            for s in stats
        ),
    )


def write_estimates(path: Path, reports: Sequence[EstimateReport]) -> None:
    write_json(path, [rep.to_dict() for rep in reports])


def read_estimates(path: Path) -> list[dict]:
    data = read_json(path)
    if not isinstance(data, list):
        raise ParseError(f"{path}: expected a JSON list of estimate objects")
    required = {"attribute", "estimator", "point", "ci_low", "ci_high", "level", "B"}
    for k, entry in enumerate(data):
        if not isinstance(entry, dict) or not required <= set(entry):
            raise ParseError(
                f"{path}: estimate {k} missing keys "
                f"{sorted(required - set(entry if isinstance(entry, dict) else ()))}"
            )
    return data


def write_replicates(path: Path, report: EstimateReport) -> None:
    """Audit dump of bootstrap replicates for one report."""
    _write_csv(
        path,
        ["replicate", "value", "weight"],
        (
            (k, v, w)
            for k, (v, w) in enumerate(zip(report.replicates, report.weights))
        ),
    )


def write_convergence(path: Path, rows: Iterable[tuple[int, str, str, float]]) -> None:
    """Long-format per-wave aggregate series: wave, method, metric, value."""
    _write_csv(path, CONVERGENCE_HEADER, rows)


def write_json(path: Path, obj: object) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: Path) -> object:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
