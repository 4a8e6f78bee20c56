"""End-to-end pipeline and parameter sweeps.

A pipeline run selects slots and tags, builds and prunes the bipartite
graph, then hands it to each requested allocator. A sweep runs the
pipeline over the Cartesian product of parameter lists and writes one
report row per (cell, method).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .baselines import allocate_bm, allocate_mda, allocate_random, allocate_tsrt
from .data import DEFAULT_EXTENT, generate_synthetic, load_dataset, make_inventory
from .exceptions import ConfigurationError, StageError
from .graph import build_graph, prune
from .influence import InfluenceEngine
from .matcher import ombm_allocate
from .selection import stochastic_greedy_select

logger = logging.getLogger(__name__)

METHODS = ("ombm", "bm", "mda", "tsrt", "ra")
REPORT_COLUMNS = (
    "method",
    "k",
    "l",
    "theta",
    "epsilon",
    "lambda",
    "matched_slots",
    "matched_tags",
    "influence",
    "runtime_ms",
    "repetitions",
)


def thread_count(default=1):
    """Parallelism cap from ``SLOTMATCH_THREADS``."""
    raw = os.environ.get("SLOTMATCH_THREADS")
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"SLOTMATCH_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigurationError("SLOTMATCH_THREADS must be >= 1")
    return value


@dataclass
class ExperimentConfig:
    """Everything a sweep needs.

    Either ``data`` (a directory with the three CSV files) or the
    ``synthetic_*`` fields describe the dataset. Defaults are scaled down
    to a run that finishes in seconds on a laptop.
    """

    data: Optional[str] = None
    synthetic_seed: int = 42
    synthetic_users: int = 1000
    synthetic_billboards: int = 50
    synthetic_tags: int = 10
    dominant_tag: Optional[int] = None
    horizon: tuple = (0, 86_400, 3_600)
    k: List[int] = field(default_factory=lambda: [30])
    l: List[int] = field(default_factory=lambda: [10])
    theta: List[float] = field(default_factory=lambda: [-1.0])
    epsilon: List[float] = field(default_factory=lambda: [0.01])
    radius: List[float] = field(default_factory=lambda: [100.0])
    methods: List[str] = field(default_factory=lambda: list(METHODS))
    repetitions: int = 5
    seed: int = 0
    bounds: object = "auto"

    def validate(self):
        for name in ("k", "l", "theta", "epsilon", "radius", "methods"):
            if not getattr(self, name):
                raise ConfigurationError(f"sweep list {name!r} is empty")
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be >= 1")
        for name in ("k", "l"):
            bad = [v for v in getattr(self, name) if int(v) != v or v < 1]
            if bad:
                raise ConfigurationError(f"{name} values must be positive integers, got {bad}")
        if any(not 0.0 <= e < 1.0 for e in self.epsilon):
            raise ConfigurationError(f"epsilon values must lie in [0, 1), got {self.epsilon}")
        if any(r <= 0 for r in self.radius):
            raise ConfigurationError(f"lambda values must be positive, got {self.radius}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigurationError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        return self


@dataclass
class Cell:
    k: int
    l: int
    theta: float
    epsilon: float
    radius: float

    @property
    def key(self):
        return f"k={self.k}_l={self.l}_theta={self.theta:g}_eps={self.epsilon:g}_lambda={self.radius:g}"


@dataclass
class PipelineResult:
    cell: Cell
    selection: object
    graph: object
    pruned: object
    allocations: Dict[str, object]
    rows: List[dict]


def load_engine(config: ExperimentConfig, radius) -> InfluenceEngine:
    if config.data:
        dataset = load_dataset(config.data)
    else:
        dataset = generate_synthetic(
            config.synthetic_seed,
            config.synthetic_users,
            config.synthetic_billboards,
            config.synthetic_tags,
            horizon=config.horizon,
            extent=DEFAULT_EXTENT,
            dominant_tag=config.dominant_tag,
        )
    inventory = make_inventory(dataset, config.horizon, radius)
    return InfluenceEngine.from_inventory(inventory, dataset.affinities)


def _allocate(method, graph, seed, bounds):
    if method == "ombm":
        return ombm_allocate(graph, bounds)
    if method == "bm":
        return allocate_bm(graph)
    if method == "mda":
        return allocate_mda(graph)
    if method == "tsrt":
        return allocate_tsrt(graph, seed=seed)
    return allocate_random(graph, seed=seed)


def _timed(fn, repetitions):
    """Run ``fn`` ``repetitions`` times; return its (identical) result and mean ms."""
    elapsed = 0.0
    result = None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        result = fn()
        elapsed += time.perf_counter() - t0
    return result, 1000.0 * elapsed / repetitions


def allocation_influence(engine, graph, allocation):
    slot_idx = [engine._slot_pos[s] for s in graph.slots]
    tag_idx = [engine._tag_pos[t] for t in graph.tags]
    return engine.allocation_influence(slot_idx, allocation.assignment, tag_idx)


def run_pipeline(engine, cell: Cell, methods=METHODS, seed=0, repetitions=1, bounds="auto") -> PipelineResult:
    """Select, build, prune and allocate for a single parameter cell.

    Every random step is seeded from ``seed``, so repeating a cell gives the
    same allocations; ``repetitions`` only averages the runtimes.
    """
    try:
        selection, sg_ms = _timed(
            lambda: stochastic_greedy_select(engine, cell.k, cell.l, cell.epsilon, seed), repetitions
        )
    except Exception as exc:
        raise StageError("select", exc) from exc
    try:
        graph = build_graph(selection, engine)
    except Exception as exc:
        raise StageError("graph", exc) from exc
    try:
        pruned = prune(graph, cell.theta)
    except Exception as exc:
        raise StageError("prune", exc) from exc

    base = {"k": cell.k, "l": cell.l, "theta": cell.theta, "epsilon": cell.epsilon, "lambda": cell.radius}
    rows = [
        dict(
            method="sg",
            **base,
            matched_slots=len(selection.slots),
            matched_tags=len(selection.tags),
            influence=selection.influence,
            runtime_ms=sg_ms,
            repetitions=repetitions,
        )
    ]
    allocations = {}
    for method in methods:
        try:
            alloc, ms = _timed(lambda: _allocate(method, pruned, seed, bounds), repetitions)
        except Exception as exc:
            raise StageError(method, exc) from exc
        allocations[method] = alloc
        rows.append(
            dict(
                method=method,
                **base,
                matched_slots=alloc.matched_slots,
                matched_tags=alloc.matched_tags,
                influence=allocation_influence(engine, pruned, alloc),
                runtime_ms=ms,
                repetitions=repetitions,
            )
        )
    return PipelineResult(cell, selection, graph, pruned, allocations, rows)


def _row_key(row):
    order = {m: i for i, m in enumerate(("sg",) + METHODS)}
    return (row["lambda"], row["k"], row["l"], row["epsilon"], row["theta"], order.get(row["method"], 99))


@dataclass
class ExperimentReport:
    rows: List[dict]
    environment: dict = field(default_factory=dict)
    failures: List[dict] = field(default_factory=list)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({c: row[c] for c in REPORT_COLUMNS})
        return buf.getvalue()

    def to_json(self):
        return json.dumps(
            {"rows": self.rows, "environment": self.environment, "failures": self.failures}, indent=2
        ) + "\n"

    @classmethod
    def from_csv(cls, text):
        rows = []
        for raw in csv.DictReader(io.StringIO(text)):
            rows.append(
                {
                    "method": raw["method"],
                    "k": int(raw["k"]),
                    "l": int(raw["l"]),
                    "theta": float(raw["theta"]),
                    "epsilon": float(raw["epsilon"]),
                    "lambda": float(raw["lambda"]),
                    "matched_slots": int(raw["matched_slots"]),
                    "matched_tags": int(raw["matched_tags"]),
                    "influence": float(raw["influence"]),
                    "runtime_ms": float(raw["runtime_ms"]),
                    "repetitions": int(raw["repetitions"]),
                }
            )
        return cls(rows)

    @classmethod
    def from_json(cls, text):
        payload = json.loads(text)
        return cls(payload["rows"], payload.get("environment", {}), payload.get("failures", []))


def _cells(config):
    for radius, k, l, eps, theta in itertools.product(
        config.radius, config.k, config.l, config.epsilon, config.theta
    ):
        yield Cell(int(k), int(l), float(theta), float(eps), float(radius))


def sweep(config: ExperimentConfig, out_dir=None, threads=None, engines=None) -> ExperimentReport:
    """Run every cell of the sweep; rows come back sorted, not in completion order.

    A cell that fails is logged in ``report.failures`` and the sweep goes on.
    With ``out_dir`` set, per-cell artifacts and ``report.csv``/``report.json``
    are written there.
    """
    config.validate()
    threads = thread_count() if threads is None else threads
    engines = dict(engines or {})
    for radius in config.radius:
        if radius not in engines:
            engines[radius] = load_engine(config, radius)
    cells = list(_cells(config))
    out_dir = None if out_dir is None else Path(out_dir)

    def work(cell):
        try:
            result = run_pipeline(
                engines[cell.radius], cell, config.methods, config.seed, config.repetitions, config.bounds
            )
        except Exception as exc:  # recorded, sweep continues
            logger.warning("cell %s failed: %s", cell.key, exc)
            return cell, None, {"cell": asdict(cell), "error": str(exc)}
        if out_dir is not None:
            write_artifacts(out_dir if len(cells) == 1 else out_dir / "cells" / cell.key, result)
        return cell, result, None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, cells))
    else:
        outcomes = [work(c) for c in cells]

    rows, failures = [], []
    for _, result, failure in outcomes:
        if failure:
            failures.append(failure)
        else:
            rows.extend(result.rows)
    rows.sort(key=_row_key)
    env = {
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "threads": threads,
        "config": {f.name: getattr(config, f.name) for f in fields(config)},
    }
    report = ExperimentReport(rows, env, failures)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
        (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    return report


def write_artifacts(directory, result: PipelineResult):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "selection.json").write_text(result.selection.to_json() + "\n", encoding="utf-8")
    result.pruned.save(directory / "graph.json")
    for method, alloc in result.allocations.items():
        alloc.save(directory / f"allocation-{method}.json", result.pruned)
