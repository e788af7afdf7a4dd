"""Ingestion of the state tables and construction of the day-0 world."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .geodata import Region, RegionIndex, load_regions, sample_uniform
from .rng import Stream
from .world import Policy, World


class DataError(ValueError):
    pass


@dataclass
class StateRecord:
    name: str
    population: int
    cluster_quota: int
    initial_infected: int
    move_stddev: float
    age_distribution: tuple[float, ...]
    migration_row: np.ndarray = field(default_factory=lambda: np.zeros(0))
    area_km2: float | None = None

    def problems(self) -> list[str]:
        out = []
        if self.population <= 0:
            out.append(f"{self.name}: population must be positive")
        if self.cluster_quota <= 0:
            out.append(f"{self.name}: cluster_quota must be positive")
        if not 0 <= self.initial_infected <= self.cluster_quota:
            out.append(f"{self.name}: initial_infected {self.initial_infected} "
                       f"outside [0, cluster_quota={self.cluster_quota}]")
        if not self.move_stddev > 0:
            out.append(f"{self.name}: move_stddev_km must be positive")
        if any(not 0.0 <= f <= 1.0 for f in self.age_distribution):
            out.append(f"{self.name}: age fractions must lie in [0, 1]")
        if abs(math.fsum(self.age_distribution) - 1.0) > 1e-9:
            out.append(f"{self.name}: age fractions sum to "
                       f"{math.fsum(self.age_distribution):.6g}, expected 1")
        row = np.asarray(self.migration_row)
        if row.size and (np.any(row < 0) or np.any(row > 1) or row.sum() > 1 + 1e-9):
            out.append(f"{self.name}: migration row must be fractions summing to <= 1")
        return out


@dataclass(frozen=True)
class AgeRiskTable:
    bins: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.bins) != len(self.weights) or not self.weights:
            raise DataError("age risk table: bins and weights differ in length")
        if any(not 0.0 <= w <= 1.0 for w in self.weights):
            raise DataError("age risk table: weights must lie in [0, 1]")
        if max(self.weights) != 1.0:
            raise DataError("age risk table: largest weight must be 1 after normalization")

    @classmethod
    def normalized(cls, bins: Sequence[str], raw: Sequence[float]) -> "AgeRiskTable":
        top = max(raw)
        if top <= 0:
            raise DataError("age risk table: all weights are zero")
        return cls(tuple(bins), tuple(float(w) / top for w in raw))


@dataclass(frozen=True)
class ModelConstants:
    total_population: float
    total_area: float
    total_clusters: int
    radius: float
    contact_coefficient: float = 2.01

    @property
    def persons_per_cluster(self) -> float:
        return self.total_population / self.total_clusters

    @property
    def contact_distance(self) -> float:
        return self.contact_coefficient * self.radius

    @classmethod
    def build(cls, total_population, total_area, total_clusters, *,
              contact_coefficient=2.01, radius_override=None) -> "ModelConstants":
        r = cluster_radius(total_population, total_area, total_clusters)
        if radius_override is not None:
            if radius_override <= 0:
                raise DataError("radius override must be positive")
            r = float(radius_override)
        if contact_coefficient <= 0:
            raise DataError("contact coefficient must be positive")
        return cls(float(total_population), float(total_area), int(total_clusters), r,
                   float(contact_coefficient))


def cluster_radius(P: float, A: float, C: float) -> float:
    """Radius (km) of the disc each cluster covers.

    Evaluated as written, sqrt((P/C) * (A/P) / pi); P cancels analytically.
    """
    if not (P > 0 and A > 0 and C > 0):
        raise DataError(f"cluster_radius needs positive inputs, got P={P}, A={A}, C={C}")
    return math.sqrt((1.0 / math.pi) * ((P / C) * (A / P)))


def allocate_clusters(state_populations: Mapping[str, float], cap: int,
                      quotas: Mapping[str, int] | None = None) -> dict[str, int]:
    """Per-state cluster counts, proportional to population, most populous = cap.

    When an explicit ``quotas`` table is supplied it is validated against the
    populations and returned unchanged.
    """
    if not state_populations:
        raise DataError("allocate_clusters: empty population table")
    if cap <= 0:
        raise DataError("allocate_clusters: cap must be positive")
    if any(p <= 0 for p in state_populations.values()):
        raise DataError("allocate_clusters: populations must be positive")
    if quotas is not None:
        missing = set(state_populations) ^ set(quotas)
        if missing:
            raise DataError(f"allocate_clusters: quota table mismatch for {sorted(missing)}")
        top = max(state_populations, key=state_populations.get)
        if quotas[top] != cap:
            raise DataError(f"allocate_clusters: most populous state {top!r} has "
                            f"{quotas[top]} clusters, expected {cap}")
        if any(q < 1 for q in quotas.values()):
            raise DataError("allocate_clusters: every state needs at least one cluster")
        return dict(quotas)
    pmax = max(state_populations.values())
    return {k: max(1, int(round(cap * p / pmax))) for k, p in state_populations.items()}


def transmission_probability(age_distribution: Sequence[float], risk: AgeRiskTable,
                             base: float = 1.0) -> float:
    if len(age_distribution) != len(risk.weights):
        raise DataError(f"age distribution has {len(age_distribution)} bins, "
                        f"risk table has {len(risk.weights)}")
    if not 0.0 <= base <= 1.0:
        raise DataError(f"base probability {base} outside [0, 1]")
    p = base * math.fsum(f * w for f, w in zip(age_distribution, risk.weights))
    return min(1.0, max(0.0, p))


# --- file ingestion -------------------------------------------------------

def _read_csv(path: Path) -> list[dict[str, str]]:
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except FileNotFoundError:
        raise DataError(f"input file not found: {path}") from None


def _num(value: str, kind, where: str):
    try:
        return kind(value.strip())
    except (ValueError, AttributeError):
        raise DataError(f"{where}: cannot parse {value!r} as {kind.__name__}") from None


def load_states(path: str | Path) -> list[StateRecord]:
    path = Path(path)
    rows = _read_csv(path)
    need = {"name", "population", "cluster_quota", "initial_infected",
            "move_stddev_km", "age_bin_fractions"}
    if not rows or not need <= set(rows[0]):
        raise DataError(f"{path}: expected columns {sorted(need)}")
    out = []
    for i, row in enumerate(rows, start=2):
        where = f"{path}:{i}"
        fractions = tuple(_num(v, float, where) for v in row["age_bin_fractions"].split(";"))
        area = row.get("area_km2")
        out.append(StateRecord(
            name=row["name"].strip(),
            population=_num(row["population"], int, where),
            cluster_quota=_num(row["cluster_quota"], int, where),
            initial_infected=_num(row["initial_infected"], int, where),
            move_stddev=_num(row["move_stddev_km"], float, where),
            age_distribution=fractions,
            area_km2=_num(area, float, where) if area not in (None, "") else None,
        ))
    names = [r.name for r in out]
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate state names")
    return out


def load_migration(path: str | Path, records: Sequence[StateRecord]) -> np.ndarray:
    """Read origin->destination counts and normalize each row by origin population.

    Returns a float matrix aligned to ``records``; states absent from the file
    get zero rows and columns.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise DataError(f"input file not found: {path}") from None
    if not rows:
        raise DataError(f"{path}: empty migration matrix")
    header = [h.strip() for h in rows[0][1:]]
    body = rows[1:]
    if len(body) != len(header) or any(len(r) != len(header) + 1 for r in body):
        raise DataError(f"{path}: migration matrix is not square "
                        f"({len(body)} rows, {len(header)} columns)")
    origins = [r[0].strip() for r in body]
    if origins != header:
        raise DataError(f"{path}: row labels do not match header")
    pos = {r.name: i for i, r in enumerate(records)}
    unknown = [h for h in header if h not in pos]
    if unknown:
        raise DataError(f"{path}: unknown states {unknown}")
    mat = np.zeros((len(records), len(records)))
    for o, r in zip(origins, body):
        for d, v in zip(header, r[1:]):
            count = _num(v, float, f"{path}:{o}->{d}")
            if count < 0:
                raise DataError(f"{path}: negative count {o}->{d}")
            if o != d:
                mat[pos[o], pos[d]] = count
    pops = np.array([r.population for r in records], dtype=float)
    mat /= pops[:, None]
    for rec, row in zip(records, mat):
        rec.migration_row = row
    return mat


def load_age_risk(path: str | Path) -> AgeRiskTable:
    path = Path(path)
    rows = _read_csv(path)
    if not rows or not {"age_bin", "relative_weight"} <= set(rows[0]):
        raise DataError(f"{path}: expected columns age_bin, relative_weight")
    bins = [r["age_bin"].strip() for r in rows]
    raw = [_num(r["relative_weight"], float, f"{path}:{r['age_bin']}") for r in rows]
    return AgeRiskTable.normalized(bins, raw)


@dataclass
class Dataset:
    """Everything read from disk, aligned by state index."""

    records: list[StateRecord]
    regions: list[Region]
    migration: np.ndarray
    age_risk: AgeRiskTable | None
    index: RegionIndex = field(repr=False)

    @property
    def names(self) -> list[str]:
        return [r.name for r in self.records]

    @classmethod
    def build(cls, records: Sequence[StateRecord], regions: Mapping[str, Region],
              migration: np.ndarray | None = None, age_risk: AgeRiskTable | None = None,
              cell_km: float = 10.0) -> "Dataset":
        missing = [r.name for r in records if r.name not in regions]
        if missing:
            raise DataError(f"no region geometry for states: {', '.join(missing)}")
        problems = [p for r in records for p in r.problems()]
        if problems:
            raise DataError("; ".join(problems))
        n = len(records)
        if migration is None:
            migration = np.zeros((n, n))
            for r in records:
                r.migration_row = np.zeros(n)
        if age_risk is not None:
            for r in records:
                if len(r.age_distribution) != len(age_risk.weights):
                    raise DataError(f"{r.name}: {len(r.age_distribution)} age bins, "
                                    f"risk table has {len(age_risk.weights)}")
        regs = [regions[r.name] for r in records]
        return cls(list(records), regs, np.asarray(migration, dtype=float), age_risk,
                   RegionIndex(regs, cell_km=cell_km))


def load_dataset(states, migration, age_risk, regions) -> Dataset:
    records = load_states(states)
    mat = load_migration(migration, records)
    risk = load_age_risk(age_risk)
    return Dataset.build(records, load_regions(regions), mat, risk)


# --- day-0 world ----------------------------------------------------------

def migrant_inflow(dataset: Dataset) -> np.ndarray:
    """Persons living in destination d whose home is o, as an (o, d) matrix."""
    pops = np.array([r.population for r in dataset.records], dtype=float)
    return dataset.migration * pops[:, None]


def seed_world(dataset: Dataset, constants: ModelConstants, policy: Policy,
               seed: int) -> World:
    """Place every state's clusters uniformly inside its polygon; mark seeds infected.

    Infected clusters are picked uniformly without replacement within each
    state. A share of each state's clusters equal to its migrant inflow is
    tagged as migrants whose home is drawn in proportion to the inflow.
    """
    stream = Stream.derive(seed, "seed")
    pos_s, inf_s, mig_s, home_s = (stream.child(t) for t in ("position", "infected",
                                                              "migrant", "home"))
    inflow = migrant_inflow(dataset)
    n = sum(r.cluster_quota for r in dataset.records)
    position = np.empty((n, 2))
    state = np.empty(n, dtype=np.int32)
    home = np.empty(n, dtype=np.int32)
    infection_day = np.full(n, -1, dtype=np.int32)
    migrant = np.zeros(n, dtype=bool)

    start = 0
    for si, (rec, region) in enumerate(zip(dataset.records, dataset.regions)):
        ids = np.arange(start, start + rec.cluster_quota)
        position[ids] = sample_uniform(region, pos_s, ids)
        state[ids] = si
        home[ids] = si
        if rec.initial_infected:
            # k smallest of iid uniforms = uniform subset without replacement
            order = np.argsort(inf_s.uniform(ids), kind="stable")
            infection_day[ids[order[:rec.initial_infected]]] = 0
        col = inflow[:, si].copy()
        col[si] = 0.0
        share = min(1.0, col.sum() / rec.population)
        if share > 0:
            tagged = ids[mig_s.uniform(ids) < share]
            cdf = np.cumsum(col) / col.sum()
            pick = np.searchsorted(cdf, home_s.uniform(tagged), side="right")
            home[tagged] = np.minimum(pick, len(col) - 1)
            migrant[tagged] = True
        start += rec.cluster_quota

    return World(day=0, seed=int(seed), position=position, home_state=home,
                 current_state=state, infection_day=infection_day, migrant=migrant,
                 last_move_km=np.zeros(n), constants=constants, dataset=dataset,
                 policy=policy)


def bundled_paths() -> dict[str, Path]:
    base = Path(__file__).with_name("data") / "india"
    return {"states": base / "states.csv", "migration": base / "migration.csv",
            "age_risk": base / "age_risk.csv", "regions": base / "regions.geojson"}
