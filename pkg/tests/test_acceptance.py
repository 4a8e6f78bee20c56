"""Acceptance criteria, one test each.

Every test prints a single ``[criterion N] PASS|FAIL ...`` line and then
asserts. Numbers behind each verdict are collected in
``acceptance-report.json`` at the repository root.
"""

import csv
import itertools
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from conftest import EXAMPLE_FINAL, example_graph
from slotmatch.baselines import allocate_bm, allocate_mda, oracle_optimal
from slotmatch.bench import METHODS, Cell, ExperimentConfig, load_engine, run_pipeline
from slotmatch.graph import WeightedBipartiteGraph, build_graph, prune
from slotmatch.instances import STANDARD_THETAS, random_engine, random_pruned_graph
from slotmatch.matcher import approximation_report, ombm_allocate, verify_lemmas
from slotmatch.selection import SelectionResult, stochastic_greedy_select

ROOT = Path(__file__).resolve().parent.parent
REPORT = {}


@pytest.fixture(scope="module", autouse=True)
def report_file():
    yield
    path = ROOT / "acceptance-report.json"
    merged = json.loads(path.read_text()) if path.exists() else {}
    merged.update(REPORT)
    path.write_text(json.dumps(dict(sorted(merged.items())), indent=2, default=float) + "\n")


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail, **data):
        REPORT[f"criterion {number}"] = {"pass": bool(ok), "detail": detail, **data}
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return emit


# 1 -------------------------------------------------------------------------


def test_criterion_1_worked_example(verdict):
    t0 = time.perf_counter()
    alloc = ombm_allocate(example_graph(theta=-1.0), bounds=2)
    elapsed = time.perf_counter() - t0
    after_first = list(alloc.rounds[0].assignment)
    expected_first = [-1, -1, -1, -1, 2, -1, -1, -1, -1, -1]
    ok = alloc.assignment.tolist() == EXAMPLE_FINAL and after_first == expected_first and elapsed < 1.0
    verdict(
        1, ok,
        f"final={alloc.assignment.tolist()} after-iteration-1={after_first} time={elapsed * 1000:.1f}ms",
        final=alloc.assignment.tolist(), after_first=after_first, seconds=elapsed,
    )
    assert ok


# 2 -------------------------------------------------------------------------


def test_criterion_2_influence_matches_direct_sum(verdict):
    t0 = time.perf_counter()
    worst, checks = 0.0, 0
    rng = np.random.default_rng(2024)
    for i in range(200):
        n_users, n_slots, n_tags = (int(rng.integers(1, m + 1)) for m in (6, 5, 3))
        eng = random_engine(10_000 + i, n_users, n_slots, n_tags)
        P, A = eng.exposure.tolist(), eng.affinity.tolist()
        for T in oracles.subsets(range(n_tags)):
            for u in range(n_users):
                got = eng.tag_probability(eng.users[u], [eng.tags[t] for t in T])
                worst = max(worst, abs(got - oracles.tag_prob(A, u, T)))
                checks += 1
        for S in oracles.subsets(range(n_slots)):
            slots = [eng.slots[s] for s in S]
            worst = max(worst, abs(eng.slot_influence(slots) - oracles.slot_influence(P, S)))
            checks += 1
            for T in oracles.subsets(range(n_tags)):
                got = eng.conditional_influence(slots, [eng.tags[t] for t in T])
                worst = max(worst, abs(got - oracles.conditional_influence(P, A, S, T)))
                checks += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10
    verdict(2, ok, f"{checks} evaluations, max |error|={worst:.2e}, time={elapsed:.2f}s", max_error=worst, seconds=elapsed)
    assert ok


# 3 -------------------------------------------------------------------------


def _set_function_violations(f, ground):
    """Counts of negative values, monotonicity and diminishing-returns breaks of ``f``."""
    subsets = [frozenset(s) for s in oracles.subsets(ground)]
    value = {s: f(s) for s in subsets}
    neg = sum(v < -1e-12 for v in value.values())
    mono = dim = 0
    for a in subsets:
        for b in subsets:
            if not a <= b:
                continue
            mono += value[a] > value[b] + 1e-12
            for x in ground:
                if x in b:
                    continue
                dim += value[a | {x}] - value[a] < value[b | {x}] - value[b] - 1e-12
    return neg, mono, dim


def test_criterion_3_submodularity(verdict):
    t0 = time.perf_counter()
    totals = np.zeros(3, dtype=int)
    rng = np.random.default_rng(7)
    for i in range(50):
        n_slots, n_tags = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        eng = random_engine(20_000 + i, int(rng.integers(1, 7)), n_slots, n_tags)
        all_slots, all_tags = list(range(n_slots)), list(range(n_tags))
        totals += _set_function_violations(lambda S: eng.influence_idx(sorted(S)), all_slots)
        for T in oracles.subsets(all_tags):
            totals += _set_function_violations(lambda S: eng.influence_idx(sorted(S), list(T)), all_slots)
        for S in oracles.subsets(all_slots):
            totals += _set_function_violations(lambda T: eng.influence_idx(list(S), sorted(T)), all_tags)
    elapsed = time.perf_counter() - t0
    ok = not totals.any() and elapsed < 30
    verdict(
        3, ok,
        f"negative={totals[0]} monotonicity={totals[1]} diminishing-returns={totals[2]} time={elapsed:.2f}s",
        violations=totals.tolist(), seconds=elapsed,
    )
    assert ok


# 4 and 5 -------------------------------------------------------------------


@pytest.fixture(scope="module")
def lemma_runs():
    t0 = time.perf_counter()
    runs = []
    for seed in range(500):
        _, graph, theta = random_pruned_graph(seed, max_slots=8, max_tags=4)
        alloc = ombm_allocate(graph)
        oracle = oracle_optimal(graph, alloc.bounds, return_result=True)
        runs.append((seed, theta, graph, alloc, oracle))
    return runs, time.perf_counter() - t0


def test_criterion_4_lemmas(verdict, lemma_runs):
    runs, elapsed = lemma_runs
    unique = bounds = dominating = 0
    examples = []
    for seed, theta, graph, alloc, oracle in runs:
        rep = verify_lemmas(alloc, graph, oracle)
        unique += not rep.slot_uniqueness
        bounds += not rep.bound_respect
        if not rep.dominating_in_optimum:
            dominating += 1
            if len(examples) < 5:
                examples.append({"seed": seed, "theta": theta, "violations": rep.violations})
    ok = unique == bounds == dominating == 0 and elapsed < 120
    verdict(
        4, ok,
        f"500 graphs: slot-uniqueness violations={unique}, bound violations={bounds}, "
        f"first-sweep edges outside every optimum={dominating}, time={elapsed:.1f}s",
        slot_uniqueness_violations=unique, bound_violations=bounds,
        dominating_edge_violations=dominating, examples=examples,
    )
    assert ok


def test_criterion_5_approximation_bound(verdict, lemma_runs):
    runs, _ = lemma_runs
    ratios, broken = [], []
    for seed, theta, graph, alloc, oracle in runs:
        rep = approximation_report(alloc, oracle.allocation, graph)
        ratios.append(rep.ratio)
        if not rep.holds:
            broken.append({"seed": seed, "ratio": rep.ratio, "bound": rep.bound, "per_tag": rep.per_tag})
    finite = np.array([r for r in ratios if math.isfinite(r)])
    quantiles = {str(q): float(np.quantile(finite, q)) for q in (0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0)}
    hist, edges = np.histogram(finite, bins=[1.0, 1.0 + 1e-9, 1.01, 1.05, 1.1, 1.25, 1.5, 2.0, np.inf])
    ok = not broken
    verdict(
        5, ok,
        f"bound violated on {len(broken)}/500, ratio==1 on {int(hist[0])}, median={quantiles['0.5']:.4f}, "
        f"max={quantiles['1.0']:.4f}",
        ratios=ratios, quantiles=quantiles,
        histogram={"edges": [float(e) for e in edges], "counts": hist.tolist()},
        infinite=len(ratios) - finite.size, violations=broken,
    )
    assert ok


# 6 -------------------------------------------------------------------------


def _retained(weights):
    values = [w for row in weights for w in row]
    mu = sum(values) / len(values)
    sigma = math.sqrt(sum((w - mu) ** 2 for w in values) / len(values))
    return lambda theta: {
        (t, s) for t, row in enumerate(weights) for s, w in enumerate(row) if w >= mu + theta * sigma
    }


def test_criterion_6_pruning(verdict):
    mismatches = nesting = graphs = 0
    cases = [example_graph(theta=-1e9)]
    for seed in range(300):
        eng = random_engine(30_000 + seed, 1 + seed % 6, 1 + seed % 8, 1 + seed % 4)
        cases.append(build_graph(SelectionResult(list(eng.slots), list(eng.tags)), eng))
    cases.append(WeightedBipartiteGraph(["a", "b"], ["x", "y", "z"], np.full((2, 3), 0.3)))
    for g in cases:
        graphs += 1
        expected = _retained(g.weights.tolist())
        for theta in STANDARD_THETAS:
            kept = prune(g, theta).edge_set()
            mismatches += kept != expected(theta)
            nesting += not prune(g, theta + 1).edge_set() <= kept
    ok = mismatches == nesting == 0
    verdict(6, ok, f"{graphs} graphs x {len(STANDARD_THETAS)} thetas: rule mismatches={mismatches}, nesting breaks={nesting}")
    assert ok


# 7 -------------------------------------------------------------------------


def test_criterion_7_stochastic_greedy(verdict):
    rng = np.random.default_rng(77)
    below, worst, not_reproducible = 0, np.inf, 0
    for i in range(100):
        n_slots, n_tags = int(rng.integers(1, 7)), int(rng.integers(1, 4))
        k, l = int(rng.integers(1, n_slots + 1)), int(rng.integers(1, n_tags + 1))
        eng = random_engine(40_000 + i, int(rng.integers(1, 7)), n_slots, n_tags)
        P, A = eng.exposure.tolist(), eng.affinity.tolist()
        res = stochastic_greedy_select(eng, k, l, epsilon=0)
        best = max(
            oracles.conditional_influence(P, A, S, T)
            for S in itertools.combinations(range(n_slots), k)
            for T in itertools.combinations(range(n_tags), l)
        )
        if best > 0:
            worst = min(worst, res.influence / best)
        below += res.influence < (1 - 1 / math.e) * best - 1e-12
        for eps in (0, 0.1):
            a = stochastic_greedy_select(eng, k, l, epsilon=eps, seed=i).to_json()
            b = stochastic_greedy_select(eng, k, l, epsilon=eps, seed=i).to_json()
            not_reproducible += a.encode() != b.encode()
    ok = below == 0 and not_reproducible == 0
    verdict(
        7, ok,
        f"{100 - below}/100 at >= (1-1/e) of optimum (worst ratio {worst:.3f}), "
        f"non-identical reruns={not_reproducible}",
        worst_ratio=worst, below=below,
    )
    assert ok


# 8 -------------------------------------------------------------------------


def _synthetic(seed, dominant=None):
    cfg = ExperimentConfig(synthetic_seed=seed, synthetic_users=1000, synthetic_billboards=50, synthetic_tags=10,
                           dominant_tag=dominant)
    return load_engine(cfg, 100.0)


def _rows(engine, k=30, l=10, theta=-1.0, seed=0):
    return {r["method"]: r for r in run_pipeline(engine, Cell(k, l, theta, 0.01, 100.0), METHODS, seed).rows}


def _monotone(values, direction):
    pairs = list(zip(values, values[1:]))
    return all(b >= a for a, b in pairs) if direction > 0 else all(b <= a for a, b in pairs)


def test_criterion_8_qualitative_trends(verdict, capsys):
    t0 = time.perf_counter()
    engine = _synthetic(42)
    lines, data = [], {}

    # (a) matched counts non-decreasing in k
    ks = [10, 20, 30, 40, 50]
    by_k = [_rows(engine, k=k) for k in ks]
    bad_a = [
        f"{m}/{col}" for m in METHODS for col in ("matched_slots", "matched_tags")
        if not _monotone([r[m][col] for r in by_k], +1)
    ]
    data["a"] = {m: {c: [r[m][c] for r in by_k] for c in ("matched_slots", "matched_tags")} for m in METHODS}
    lines.append(("a", not bad_a, f"k={ks}: non-monotone series {bad_a or 'none'}"))

    # (b) OMBM influence against each baseline over 50 seeds
    wins = {m: 0 for m in METHODS[1:]}
    for seed in range(50):
        rows = _rows(_synthetic(seed), seed=seed)
        for m in wins:
            wins[m] += rows["ombm"]["influence"] >= rows[m]["influence"]
    data["b"] = wins
    lines.append(("b", all(w >= 45 for w in wins.values()), f"OMBM >= baseline on {wins} of 50 seeds (need 45)"))

    # (c) matched counts non-increasing in theta
    thetas = sorted(STANDARD_THETAS)
    by_theta = [_rows(engine, theta=t) for t in thetas]
    bad_c = [
        f"{m}/{col}" for m in METHODS for col in ("matched_slots", "matched_tags")
        if not _monotone([r[m][col] for r in by_theta], -1)
    ]
    data["c"] = {m: {c: [r[m][c] for r in by_theta] for c in ("matched_slots", "matched_tags")} for m in METHODS}
    lines.append(("c", not bad_c, f"theta={thetas}: non-monotone series {bad_c or 'none'}"))

    # (d) one dominant tag: BM and MDA put every covered slot on one tag
    dominant = _synthetic(42, dominant=3)
    cell = Cell(30, 10, -1.0, 0.01, 100.0)
    pruned = run_pipeline(dominant, cell, ("bm", "mda"), 0).pruned
    tags_used = {name: sorted({int(t) for t in fn(pruned).assignment if t >= 0})
                 for name, fn in (("bm", allocate_bm), ("mda", allocate_mda))}
    data["d"] = tags_used
    lines.append(("d", all(len(v) == 1 for v in tags_used.values()), f"distinct tags used {tags_used}"))

    elapsed = time.perf_counter() - t0
    ok = all(flag for _, flag, _ in lines) and elapsed < 300
    with capsys.disabled():
        for part, flag, text in lines:
            print(f"\n    (8{part}) {'pass' if flag else 'fail'}: {text}", end="")
    verdict(8, ok, f"sub-checks failing: {[p for p, f, _ in lines if not f] or 'none'}, time={elapsed:.1f}s",
            seconds=elapsed, **{f"sub_{p}": {"pass": f, "detail": t} for p, f, t in lines}, data=data)
    assert ok


# 9 -------------------------------------------------------------------------


def _bench(out, threads):
    env = dict(os.environ, SLOTMATCH_THREADS=str(threads))
    cmd = [sys.executable, "-m", "slotmatch.cli", "bench", "--k", "10,20", "--l", "5", "--theta=-1,0",
           "--repetitions", "1", "--seed", "9", "--out", str(out), "--run-id", "run"]
    subprocess.run(cmd, env=env, check=True, capture_output=True)
    run = out / "run"
    with open(run / "report.csv", newline="") as fh:
        report = [{k: v for k, v in row.items() if k != "runtime_ms"} for row in csv.DictReader(fh)]
    allocations = {str(p.relative_to(run)): p.read_bytes() for p in sorted(run.rglob("allocation-*.json"))}
    return report, allocations


def test_criterion_9_determinism(verdict, tmp_path):
    rep1, alloc1 = _bench(tmp_path / "t1", 1)
    rep8, alloc8 = _bench(tmp_path / "t8", 8)
    same_report = rep1 == rep8
    same_alloc = alloc1 == alloc8 and len(alloc1) > 0
    ok = same_report and same_alloc
    verdict(9, ok, f"report.csv rows identical={same_report} ({len(rep1)} rows), "
                   f"allocation files identical={same_alloc} ({len(alloc1)} files)")
    assert ok
