"""Acceptance suite A1-A10 on the bundled India scenario.

Each criterion records one PASS/FAIL line, printed in the pytest terminal
summary (see conftest.py) and echoed to stdout.
"""
import math
import statistics

import numpy as np
import pytest
from scipy import integrate, stats

from clustersim import cli
from clustersim.config import load_config
from clustersim.contacts import contacts_grid, contacts_naive
from clustersim.engine import sample_move, step_day
from clustersim.metrics import daily_metrics
from clustersim.population import cluster_radius, seed_world
from clustersim.rng import Stream

SEEDS = range(10)
TOTAL_CLUSTERS = 29_918
DAY0_INFECTED = 258
RESULTS: dict[str, str] = {}


def report(key, ok, detail):
    line = f"{key} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS[key] = line
    print(line)
    assert ok, line


def run_checked(cfg, dataset):
    """Step a scenario day by day, checking conservation invariants as it goes."""
    world = seed_world(dataset, cfg.model_constants(dataset), cfg.policy(), cfg.seed)
    series = [daily_metrics(world)]
    problems = []
    if series[0].infected_clusters != DAY0_INFECTED:
        problems.append(f"day-0 infected {series[0].infected_clusters}")
    for _ in range(cfg.horizon_days):
        world, m = step_day(world)
        if world.n_clusters != TOTAL_CLUSTERS:
            problems.append(f"day {m.day}: {world.n_clusters} clusters")
        outside = int(np.count_nonzero(~dataset.index.inside(world.position)))
        if outside:
            problems.append(f"day {m.day}: {outside} clusters outside the country")
        if m.infected_clusters < series[-1].infected_clusters:
            problems.append(f"day {m.day}: infected count decreased")
        series.append(m)
    return series, problems


@pytest.fixture(scope="module")
def sweep(bundled):
    cfg = load_config(cli.BUNDLED_SCENARIO).replace(snapshot_days=())
    runs = {}
    for seed in SEEDS:
        for label, ld in (("lockdown", cfg.lockdown_day), ("free", None)):
            runs[label, seed] = run_checked(cfg.replace(seed=seed, lockdown_day=ld), bundled)
    return cfg, runs


def test_a1_scenario_ordering(sweep):
    _, runs = sweep
    finals = [(runs["lockdown", s][0][-1].infected_clusters,
               runs["free", s][0][-1].infected_clusters) for s in SEEDS]
    wins = sum(a < b for a, b in finals)
    report("A1", wins == len(finals),
           f"lockdown < no-lockdown in {wins}/{len(finals)} seeds; finals {finals}")


def test_a2_magnitude_bands(sweep):
    _, runs = sweep
    lock = statistics.median(runs["lockdown", s][0][-1].high_risk_fraction for s in SEEDS)
    free = statistics.median(runs["free", s][0][-1].high_risk_fraction for s in SEEDS)
    report("A2", lock < 0.10 and free > 0.25,
           f"median day-60 high-risk fraction {lock:.4f} with lockdown (< 0.10), "
           f"{free:.4f} without (> 0.25)")


def test_a3_movement_collapse(sweep):
    cfg, runs = sweep
    d = cfg.lockdown_day
    drops = []
    for s in SEEDS:
        by_day = {m.day: m.mean_move_km for m in runs["lockdown", s][0]}
        drops.append(by_day[d - 1] / by_day[d + 1])
    ok = all(40 <= x <= 55 for x in drops)
    report("A3", ok, f"day {d - 1} / day {d + 1} mean movement drop "
                     f"{min(drops):.2f}..{max(drops):.2f} (band [40, 55])")


def test_a4_plateau(sweep):
    _, runs = sweep
    limit = 0.002 * TOTAL_CLUSTERS
    medians = [statistics.median(m.new_infections for m in runs["lockdown", s][0][15:61])
               for s in SEEDS]
    report("A4", max(medians) <= limit,
           f"median new infections over days 15-60 per seed {min(medians)}..{max(medians)} "
           f"(limit {limit:.1f})")


def test_a5_grid_equals_naive():
    rng = np.random.default_rng(20_200_320)
    mismatches = 0
    for k in range(1000):
        n = int(rng.integers(0, 501))
        scale = float(rng.choice([1.0, 10.0, 100.0]))
        pts = rng.random((n, 2)) * scale
        if k % 4 == 0:
            pts = np.round(pts * 4) / 4          # lattice points, exact-threshold ties
        t = float(rng.choice([0.01, 0.05, 0.25, 0.5, 1.0, 2.01 * 5.3])) * scale / 10
        if not np.array_equal(contacts_grid(pts, t), contacts_naive(pts, t)):
            mismatches += 1
    report("A5", mismatches == 0, f"{mismatches} mismatches over 1000 instances")


def test_a6_thread_determinism(tmp_path):
    outs = []
    for threads in (1, 8):
        out = tmp_path / f"t{threads}"
        assert cli.main(["run", "--seed", "7", "--threads", str(threads),
                         "--out", str(out)]) == 0
        outs.append({p.name: p.read_bytes() for p in (out / "india" / "7").iterdir()})
    same = outs[0] == outs[1]
    names = sorted(outs[0])
    report("A6", same and "metrics.csv" in names and len(names) == 8,
           f"1 vs 8 threads byte-identical over {len(names)} files: {same}")


def test_a7_conservation(sweep):
    _, runs = sweep
    problems = [f"{k}: {p}" for k, (_, probs) in runs.items() for p in probs]
    report("A7", not problems,
           f"{len(runs)} runs, {TOTAL_CLUSTERS} clusters, in-country, nondecreasing, "
           f"{DAY0_INFECTED} on day 0" if not problems else "; ".join(problems[:5]))


def test_a8_radius_formula():
    rng = np.random.default_rng(8)
    worst_closed = worst_p = 0.0
    for _ in range(10_000):
        P = 10 ** rng.uniform(0, 10)
        A = 10 ** rng.uniform(-3, 8)
        C = int(rng.integers(1, 10**6))
        r = cluster_radius(P, A, C)
        worst_closed = max(worst_closed, abs(r / math.sqrt(A / (math.pi * C)) - 1))
        worst_p = max(worst_p, abs(cluster_radius(P * 10 ** rng.uniform(-3, 3), A, C) / r - 1))
    report("A8", worst_closed < 1e-9 and worst_p < 1e-9,
           f"max rel error vs closed form {worst_closed:.2e}, under P rescaling {worst_p:.2e}")


def test_a9_sampler_statistics(bundled):
    sd = bundled.records[0].move_stddev
    d = sample_move(35.0, sd, Stream.derive(2020, "a9"), np.arange(1_000_000))
    dist = np.hypot(d[:, 0], d[:, 1])
    mass = integrate.quad(lambda x: stats.norm.pdf(x, 35.0, sd), 0, math.inf)[0]
    oracle = integrate.quad(lambda x: x * stats.norm.pdf(x, 35.0, sd), 0, math.inf)[0] / mass
    rel = abs(dist.mean() / oracle - 1)
    resultant = float(np.hypot(*(d / dist[:, None]).mean(axis=0)))
    report("A9", rel < 0.01 and resultant < 0.01,
           f"mean {dist.mean():.4f} vs oracle {oracle:.4f} (rel {rel:.2e}); "
           f"resultant length {resultant:.2e}")


def test_a10_hand_traces():
    from test_engine import test_three_cluster_hand_trace, test_two_state_hand_trace
    failures = []
    for fn in (test_three_cluster_hand_trace, test_two_state_hand_trace):
        try:
            fn()
        except AssertionError as exc:
            failures.append(f"{fn.__name__}: {exc}")
    report("A10", not failures, "3-cluster and 2-state traces match" if not failures
           else "; ".join(failures))
