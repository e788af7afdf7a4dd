import math

import numpy as np
import pytest
from scipy import integrate, stats

from clustersim.config import ScenarioConfig
from clustersim.engine import (apply_move, apply_transmission, migrate, movement_regime,
                               restricted, run_scenario, sample_move, step_day,
                               truncated_normal)
from clustersim.geodata import RegionIndex, contains
from clustersim.population import ModelConstants
from clustersim.rng import Stream
from clustersim.world import Policy, World

from conftest import record, square, synthetic_dataset


def make_world(dataset, positions, *, infected=(), home=None, current=None, migrant=None,
               policy=None, radius=1.0, day=0, seed=0):
    n = len(positions)
    inf = np.full(n, -1, dtype=np.int32)
    for i in infected:
        inf[i] = 0
    cur = np.zeros(n, np.int32) if current is None else np.asarray(current, np.int32)
    return World(day=day, seed=seed, position=np.asarray(positions, float),
                 home_state=cur.copy() if home is None else np.asarray(home, np.int32),
                 current_state=cur, infection_day=inf,
                 migrant=np.zeros(n, bool) if migrant is None else np.asarray(migrant, bool),
                 last_move_km=np.zeros(n),
                 constants=ModelConstants(1e6, 1.0, n, radius),
                 dataset=dataset, policy=policy or Policy(lockdown_day=None))


def truncated_mean(m, s):
    mass = integrate.quad(lambda x: stats.norm.pdf(x, m, s), 0, math.inf)[0]
    return integrate.quad(lambda x: x * stats.norm.pdf(x, m, s), 0, math.inf)[0] / mass


# --- movement ---------------------------------------------------------------

def test_movement_regime_examples():
    pol = Policy(lockdown_day=5)
    assert movement_regime(-1, 3, pol) == 35.0
    assert movement_regime(-1, 10, pol) == pytest.approx(0.7)
    free = Policy(lockdown_day=None)
    assert movement_regime(0, 3, free) == 35.0
    assert movement_regime(0, 6, free) == pytest.approx(0.7)


def test_restrictions_do_not_compound():
    pol = Policy(lockdown_day=1)
    assert movement_regime(0, 20, pol) == pytest.approx(0.7)
    assert restricted(np.array([-1, 0, 18]), 20, Policy(lockdown_day=None)).tolist() == \
        [False, True, False]


def test_truncated_normal_degenerate_and_nonnegative():
    u = Stream.derive(0, "t").uniform(np.arange(1000))
    assert np.allclose(truncated_normal(35.0, 1e-12, u), 35.0)
    assert (truncated_normal(0.5, 10.0, u) >= 0).all()


def test_sample_move_distance_mean_and_direction():
    s = Stream.derive(9, "move", 1)
    d = sample_move(35.0, 10.0, s, np.arange(1_000_000))
    dist = np.hypot(d[:, 0], d[:, 1])
    oracle = truncated_mean(35.0, 10.0)
    assert oracle == pytest.approx(35.00872885753654, rel=1e-9)
    assert abs(dist.mean() / oracle - 1) < 0.01
    unit = d / dist[:, None]
    assert np.hypot(*unit.mean(axis=0)) < 0.01


def test_sample_move_heavily_truncated_mean():
    s = Stream.derive(1, "tn")
    dist = np.hypot(*sample_move(0.7, 10.0, s, np.arange(500_000)).T)
    assert abs(dist.mean() / truncated_mean(0.7, 10.0) - 1) < 0.01


def test_apply_move_interior_and_forced_rejection():
    big = square("big", 0, 0, 10)
    idx = RegionIndex([big], cell_km=1.0)
    s = Stream.derive(0, "m")
    new, real, st = apply_move([(5.0, 5.0)], [(1.0, -2.0)], idx, s, np.arange(1))
    assert new.tolist() == [[6.0, 3.0]] and real[0] == pytest.approx(math.sqrt(5))
    assert st.tolist() == [0]
    new, real, st = apply_move([(5.0, 5.0)], [(30.0, 0.0)], idx, s, np.arange(1))
    assert new.tolist() == [[5.0, 5.0]] and real[0] == 0.0 and st.tolist() == [0]


def test_apply_move_always_contained():
    from test_geodata import L_SHAPE
    from clustersim.geodata import sample_uniform
    idx = RegionIndex([L_SHAPE], cell_km=0.25)
    ids = np.arange(100_000)
    start = sample_uniform(L_SHAPE, Stream.derive(1, "start"), ids)
    disp = sample_move(0.6, 0.3, Stream.derive(1, "d"), ids)
    new, real, _ = apply_move(start, disp, idx, Stream.derive(1, "d"), ids)
    assert contains(L_SHAPE, new).all()
    moved = real > 0
    assert np.allclose(np.hypot(*(new - start)[moved].T), real[moved])


# --- migration --------------------------------------------------------------

def two_states(rate=1.0):
    a, b = square("A", 0, 0, 1000), square("B", 2000, 0, 1)
    ds = synthetic_dataset([a, b], [record("A", quota=3), record("B", quota=2)],
                           migration=[[0, 0.5], [0.5, 0]])
    return ds, Policy(lockdown_day=None, migration_rate=rate, mean_move_km=0.0)


def test_migrate_reversal_lands_in_home_state():
    ds, pol = two_states()
    w = make_world(ds, [(2000.5, 0.5)], home=[0], current=[1], migrant=[True], policy=pol)
    moved = migrate(w, 1, Stream.derive(0, "migrate", 1))
    assert moved.tolist() == [0] and w.current_state[0] == 0
    assert contains(ds.regions[0], w.position[0])


def test_migrate_rate_zero_is_identity():
    ds, pol = two_states(rate=0.0)
    w = make_world(ds, [(1.0, 1.0)], migrant=[True], policy=pol)
    before = w.position.copy()
    assert len(migrate(w, 1, Stream.derive(0, "m"))) == 0
    assert np.array_equal(w.position, before)


def test_migrate_firing_frequency_and_lockdown_scaling():
    ds, pol = two_states(rate=0.1)
    n = 10_000
    w = make_world(ds, np.full((n, 2), 500.0), migrant=np.ones(n, bool), policy=pol)
    fired = len(migrate(w, 1, Stream.derive(0, "m", 1)))
    assert abs(fired / n - 0.1) < 0.005
    w = make_world(ds, np.full((n, 2), 500.0), migrant=np.ones(n, bool),
                   policy=Policy(lockdown_day=0, migration_rate=0.5, restriction_factor=5))
    assert abs(len(migrate(w, 1, Stream.derive(0, "m", 1))) / n - 0.1) < 0.005


# --- transmission -----------------------------------------------------------

def line_world(positions, infected, **kw):
    ds = synthetic_dataset([square("S", -10, -10, 100)], [record("S", quota=len(positions))])
    return make_world(ds, positions, infected=infected, **kw)


def contacts_of(w):
    from clustersim.contacts import detect_contacts
    return detect_contacts(w.position, 2.01 * w.constants.radius)


def test_infected_healthy_pair_both_infected():
    w = line_world([(0, 0), (1, 0)], infected=[0])
    hit = apply_transmission(w, contacts_of(w), Stream.derive(0, "t"), 1)
    assert hit.tolist() == [1] and w.infected_count == 2


def test_healthy_pair_unchanged():
    w = line_world([(0, 0), (1, 0)], infected=[])
    assert len(apply_transmission(w, contacts_of(w), Stream.derive(0, "t"), 1)) == 0


def test_chain_is_single_pass():
    w = line_world([(0, 0), (2, 0), (4, 0)], infected=[0])
    apply_transmission(w, contacts_of(w), Stream.derive(0, "t"), 1)
    assert w.infection_day.tolist() == [0, 1, -1]
    apply_transmission(w, contacts_of(w), Stream.derive(0, "t"), 2)
    assert w.infection_day.tolist() == [0, 1, 2]


def test_multiple_exposures_combine_independently():
    n = 20_000
    ds = synthetic_dataset([square("S", 0, 0, 10)], [record("S", quota=3 * n)])
    pol = Policy(lockdown_day=None, transmission_mode="age-weighted", transmission_base=0.3)
    w = make_world(ds, np.zeros((3 * n, 2)), infected=range(2 * n), policy=pol)
    healthy = np.arange(2 * n, 3 * n)
    pairs = np.concatenate([np.column_stack([healthy - 2 * n, healthy]),
                            np.column_stack([healthy - n, healthy])])
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    hit = apply_transmission(w, pairs, Stream.derive(4, "t"), 1)
    assert abs(len(hit) / n - (1 - 0.7 ** 2)) < 0.015


def test_persisting_encounter_gets_one_trial():
    pol = Policy(lockdown_day=None, transmission_mode="age-weighted", transmission_base=0.5)
    n = 4000
    pos = np.zeros((2 * n, 2))
    pos[:, 0] = np.repeat(np.arange(n) * 10.0, 2) - 10
    pos[1::2, 1] = 0.5
    w = line_world(pos, infected=range(0, 2 * n, 2), policy=pol)
    c = contacts_of(w)
    assert len(c) == n
    first = len(apply_transmission(w, c, Stream.derive(0, "t", 1), 1))
    second = len(apply_transmission(w, c, Stream.derive(0, "t", 2), 2))
    assert abs(first / n - 0.5) < 0.03 and second == 0
    # a separated pair that meets again is a new encounter
    apply_transmission(w, c[:0], Stream.derive(0, "t", 3), 3)
    third = len(apply_transmission(w, c, Stream.derive(0, "t", 4), 4))
    assert abs(third / (n - first) - 0.5) < 0.04


def test_retrial_policy_tests_every_day():
    pol = Policy(lockdown_day=None, transmission_mode="age-weighted", transmission_base=0.5,
                 retrial=True)
    w = line_world([(0, 0), (1, 0)], infected=[0], policy=pol)
    c = contacts_of(w)
    days = 0
    while w.infected_count < 2 and days < 64:
        days += 1
        apply_transmission(w, c, Stream.derive(0, "t", days), days)
    assert w.infected_count == 2


# --- whole days -------------------------------------------------------------

def still_policy(**kw):
    return Policy(lockdown_day=None, mean_move_km=0.0, migration_rate=0.0, **kw)


def test_no_infected_stays_clean():
    w = line_world([(0, 0), (1, 0), (50, 50)], infected=[], policy=still_policy())
    for _ in range(5):
        w, m = step_day(w)
        assert m.infected_clusters == 0 and m.new_infections == 0


def test_all_infected_is_absorbing():
    w = line_world([(0, 0), (1, 0), (50, 50)], infected=[0, 1, 2], policy=still_policy())
    w, m = step_day(w)
    assert m.high_risk_fraction == 1.0 and m.new_infections == 0


def test_three_cluster_hand_trace():
    # 0 infected, 1 healthy 5 km east (out of range 2.01), 2 isolated far away
    w = line_world([(0, 0), (5, 0), (80, 80)], infected=[0], policy=still_policy())
    s = Stream.derive(0, "forced")
    new, real, state = apply_move(w.position, [(0, 0), (-4, 0), (0, 0)], w.dataset.index, s,
                                  np.arange(3))
    w.position = new
    assert real.tolist() == [0.0, 4.0, 0.0]
    hit = apply_transmission(w, contacts_of(w), Stream.derive(0, "t"), 1)
    assert hit.tolist() == [1]
    assert w.infection_day.tolist() == [0, 1, -1]

    # the same world through step_day, with cluster 1 already in range
    w = line_world([(0, 0), (1, 0), (80, 80)], infected=[0], policy=still_policy())
    w, m = step_day(w)
    assert (m.day, m.infected_clusters, m.new_infections) == (1, 2, 1)
    assert m.mean_move_km < 1e-8
    assert w.infection_day.tolist() == [0, 1, -1]


def test_two_state_hand_trace():
    # A is a 1000 km square; B a 1 km square far away, so everyone in B touches.
    ds, _ = two_states()
    pol = Policy(lockdown_day=None, migration_rate=1.0, mean_move_km=0.0)
    w = make_world(ds, [(100, 100), (900, 900), (300, 700), (2000.5, 0.5), (2000.2, 0.8)],
                   current=[0, 0, 0, 1, 1], migrant=[True, False, False, False, False],
                   infected=[0], policy=pol)
    expected = [
        # day, state of cluster 0, infection days
        (1, 1, [0, -1, -1, 1, 1]),   # 0 migrates into B and infects both residents
        (2, 0, [0, -1, -1, 1, 1]),   # 0 goes back home; nobody new in range
        (3, 1, [0, -1, -1, 1, 1]),   # and out again
    ]
    for day, state, inf in expected:
        w, m = step_day(w)
        assert w.day == day and w.current_state[0] == state
        assert w.infection_day.tolist() == inf
        assert m.infected_clusters == sum(d >= 0 for d in inf)
        assert contains(ds.regions[state], w.position[0])
    assert w.current_state[1:].tolist() == [0, 0, 1, 1]


def test_regime_drawn_per_cluster():
    ds = synthetic_dataset([square("S", -500, -500, 1000)], [record("S", quota=2, sd=1e-9)])
    pol = Policy(lockdown_day=4, incubation_days=2, migration_rate=0.0)
    w = make_world(ds, [(0, 0), (200, 200)], infected=[0], policy=pol, radius=0.1)
    seen = []
    for _ in range(5):
        w, _m = step_day(w)
        seen.append(w.last_move_km.round(6).tolist())
    assert seen == [[35.0, 35.0], [0.7, 35.0], [0.7, 35.0], [0.7, 0.7], [0.7, 0.7]]


def test_horizon_zero_run(bundled):
    res = run_scenario(ScenarioConfig(horizon_days=0), bundled)
    assert len(res.metrics) == 1
    assert res.metrics[0].infected_clusters == 258 and res.metrics[0].day == 0


def test_threads_give_identical_days(bundled):
    cfg = ScenarioConfig(horizon_days=3, lockdown_day=1, snapshot_days=(3,), transmission_mode="age-weighted",
                         transmission_base=0.08, seed=5)
    a = run_scenario(cfg, bundled, threads=1, keep_world=True)
    b = run_scenario(cfg, bundled, threads=8, keep_world=True)
    assert [m.row() for m in a.metrics] == [m.row() for m in b.metrics]
    assert np.array_equal(a.world.position, b.world.position)
    assert np.array_equal(a.world.infection_day, b.world.infection_day)
