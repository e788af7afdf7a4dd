"""Daily update of the cluster world.

Order within a day: movement -> migration -> contact detection ->
transmission -> day increment. Every random draw comes from a counter-based
stream keyed by (seed, purpose, day) and indexed by cluster id, so a run is
reproducible bit-for-bit regardless of thread count.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import ndtr, ndtri

from .contacts import detect_contacts
from .geodata import RegionIndex, sample_uniform
from .metrics import DailyMetrics, daily_metrics
from .rng import Stream
from .world import Policy, World

if TYPE_CHECKING:
    from .config import ScenarioConfig
    from .population import Dataset


def restricted(infection_day, day: int, policy: Policy):
    """True where a cluster moves in the restricted regime on ``day``.

    Restriction applies during lockdown, or once an infected cluster is past
    its incubation period. The two causes do not compound.
    """
    inf = np.asarray(infection_day)
    symptomatic = (inf >= 0) & (day - inf >= policy.incubation_days)
    return symptomatic | policy.lockdown_active(day)


def movement_regime(infection_day, day: int, policy: Policy):
    """Mean daily movement (km): ``mean_move_km`` or that divided by the factor."""
    r = restricted(infection_day, day, policy)
    out = np.where(r, policy.mean_move_km / policy.restriction_factor, policy.mean_move_km)
    return float(out) if out.ndim == 0 else out


def truncated_normal(mean, stddev, u):
    """Normal(mean, stddev) conditioned on being >= 0, by inverse CDF of ``u``.

    Same law as redrawing until nonnegative, but a single draw per value.
    """
    mean = np.asarray(mean, dtype=np.float64)
    stddev = np.asarray(stddev, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        lower = ndtr(np.where(stddev > 0, -mean / stddev, -np.inf))
        x = mean + stddev * ndtri(lower + u * (1.0 - lower))
    x = np.where(stddev > 0, x, mean)
    return np.maximum(x, 0.0)


def sample_move(mean, stddev, stream: Stream, ids) -> np.ndarray:
    """Displacements with truncated-normal length and uniform direction.

    Draw 0 of ``stream`` sets the length, draw 1 the direction.
    """
    ids = np.asarray(ids)
    dist = truncated_normal(mean, stddev, stream.uniform(ids, 0))
    theta = 2.0 * np.pi * stream.uniform(ids, 1)
    return np.column_stack([dist * np.cos(theta), dist * np.sin(theta)])


def apply_move(positions, displacement, country: RegionIndex, stream: Stream, ids,
               redraws: int = 16):
    """Move each point by its displacement if the result stays in the country.

    Rejected moves keep their length and retry with fresh directions (draws
    2, 3, ... of ``stream``) up to ``redraws`` times, then stay put.
    Returns (new positions, realized distance, containing region index).
    """
    pos = np.asarray(positions, dtype=np.float64)
    disp = np.asarray(displacement, dtype=np.float64)
    ids = np.asarray(ids)
    dist = np.hypot(disp[:, 0], disp[:, 1])
    new = pos.copy()
    realized = np.zeros(len(pos))
    state = np.full(len(pos), -1, dtype=np.int32)

    cand = pos + disp
    loc = country.locate(cand)
    ok = loc >= 0
    new[ok], realized[ok], state[ok] = cand[ok], dist[ok], loc[ok]
    todo = np.flatnonzero(~ok)
    for k in range(redraws):
        if len(todo) == 0:
            break
        theta = 2.0 * np.pi * stream.uniform(ids[todo], 2 + k)
        cand = pos[todo] + dist[todo, None] * np.column_stack([np.cos(theta), np.sin(theta)])
        loc = country.locate(cand)
        ok = loc >= 0
        hit = todo[ok]
        new[hit], realized[hit], state[hit] = cand[ok], dist[hit], loc[ok]
        todo = todo[~ok]
    if len(todo):
        state[todo] = country.locate(pos[todo])
    return new, realized, state


def migrate(world: World, day: int, stream: Stream) -> np.ndarray:
    """Relocate migrant clusters in place; return the ids that moved.

    A cluster away from home returns to its home state. A cluster at home
    leaves for a destination drawn from its home state's migration row.
    The daily rate is divided by the restriction factor during lockdown.
    """
    pol = world.policy
    rate = pol.migration_rate
    if pol.lockdown_active(day):
        rate /= pol.restriction_factor
    ids = np.flatnonzero(world.migrant)
    if rate <= 0 or len(ids) == 0:
        return np.empty(0, dtype=np.int64)
    ids = ids[stream.uniform(ids, 0) < rate]
    home = world.home_state[ids]
    dest = home.copy()
    at_home = world.current_state[ids] == home
    if np.any(at_home):
        rows = world.dataset.migration[home[at_home]]
        totals = rows.sum(axis=1)
        u = stream.uniform(ids[at_home], 1) * totals
        pick = np.count_nonzero(np.cumsum(rows, axis=1) <= u[:, None], axis=1)
        pick = np.where(totals > 0, np.minimum(pick, rows.shape[1] - 1), -1)
        dest[at_home] = pick
    moving = dest >= 0
    ids, dest = ids[moving], dest[moving]
    pos_stream = stream.child("position")
    for s in np.unique(dest):
        sel = ids[dest == s]
        world.position[sel] = sample_uniform(world.dataset.regions[s], pos_stream, sel)
        world.current_state[sel] = s
    return ids


def apply_transmission(world: World, contacts: np.ndarray, stream: Stream, day: int) -> np.ndarray:
    """Infect healthy clusters in contact with clusters infected at dawn.

    Each infected partner is an independent trial with the healthy cluster's
    state probability, so ``m`` partners infect with 1 - (1 - p)**m. Newly
    infected clusters do not transmit until the next day. Returns new ids.

    Unless ``policy.retrial`` is set, an infected/healthy pair that was
    already in contact (and already mixed) the day before is the same
    encounter and gets no second trial. With probability 1 this makes no
    difference, since such a pair cannot survive a trial.
    """
    contacts = np.asarray(contacts).reshape(-1, 2)
    dawn = world.infection_day >= 0
    i, j = contacts[:, 0], contacts[:, 1]
    mixed = dawn[i] != dawn[j]
    keys = i[mixed] * np.int64(world.n_clusters) + j[mixed]
    fresh = np.ones(len(keys), dtype=bool)
    if not world.policy.retrial:
        fresh = ~np.isin(keys, world.open_encounters, assume_unique=True)
    healthy = np.where(dawn[i], j, i)[mixed][fresh]
    exposures = np.bincount(healthy, minlength=world.n_clusters)
    cand = np.flatnonzero(exposures)
    p = world.contact_probability[world.current_state[cand]]
    p_any = 1.0 - (1.0 - p) ** exposures[cand]
    hit = cand[stream.uniform(cand) < p_any]
    world.infection_day[hit] = day
    # pairs still mixed after this pass carry over as open encounters
    still = world.infection_day[np.where(dawn[i], j, i)[mixed]] < 0
    world.open_encounters = keys[still]
    return hit


def step_day(world: World, threads: int = 1) -> tuple[World, DailyMetrics]:
    """Advance ``world`` by one day in place; return it with that day's metrics."""
    day = world.day + 1
    pol = world.policy
    ds = world.dataset
    ids = np.arange(world.n_clusters)

    regime = restricted(world.infection_day, day, pol)
    mean = np.where(regime, pol.mean_move_km / pol.restriction_factor, pol.mean_move_km)
    sd = np.array([r.move_stddev for r in ds.records])[world.current_state]
    if pol.scale_stddev:
        sd = np.where(regime, sd / pol.restriction_factor, sd)
    move = Stream.derive(world.seed, "move", day)
    disp = sample_move(mean, sd, move, ids)
    pos, realized, state = apply_move(world.position, disp, ds.index, move, ids,
                                      pol.boundary_attempts)
    world.position = pos
    world.last_move_km = realized
    world.current_state = np.where(state >= 0, state, world.current_state).astype(np.int32)

    migrate(world, day, Stream.derive(world.seed, "migrate", day))

    threshold = pol.contact_coefficient * world.constants.radius
    contacts = detect_contacts(world.position, threshold, pol.contact_method, threads)
    apply_transmission(world, contacts, Stream.derive(world.seed, "transmit", day), day)
    world.day = day
    return world, daily_metrics(world)


@dataclass
class Snapshot:
    day: int
    x_km: np.ndarray
    y_km: np.ndarray
    state_name: np.ndarray
    status: np.ndarray
    infection_day: np.ndarray

    @classmethod
    def of(cls, world: World) -> "Snapshot":
        names = np.array([r.name for r in world.dataset.records], dtype=object)
        return cls(world.day, world.position[:, 0].copy(), world.position[:, 1].copy(),
                   names[world.current_state], world.status_labels(),
                   world.infection_day.copy())

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["day", "cluster_id", "x_km", "y_km", "state_name", "status",
                        "infection_day"])
            for i in range(len(self.x_km)):
                d = int(self.infection_day[i])
                w.writerow([self.day, i, f"{self.x_km[i]:.6f}", f"{self.y_km[i]:.6f}",
                            self.state_name[i], self.status[i], "" if d < 0 else d])


@dataclass
class RunResult:
    metrics: list[DailyMetrics]
    snapshots: dict[int, Snapshot] = field(default_factory=dict)
    world: World | None = None


def run_scenario(config: "ScenarioConfig", dataset: "Dataset", threads: int = 1,
                 keep_world: bool = False) -> RunResult:
    """Seed the day-0 world, advance ``horizon_days`` days, collect outputs."""
    from .population import seed_world

    constants = config.model_constants(dataset)
    world = seed_world(dataset, constants, config.policy(), config.seed)
    snap_days = set(config.snapshot_days)
    result = RunResult(metrics=[daily_metrics(world)])
    if 0 in snap_days:
        result.snapshots[0] = Snapshot.of(world)
    for _ in range(config.horizon_days):
        world, m = step_day(world, threads=threads)
        result.metrics.append(m)
        if world.day in snap_days:
            result.snapshots[world.day] = Snapshot.of(world)
    if keep_world:
        result.world = world
    return result
