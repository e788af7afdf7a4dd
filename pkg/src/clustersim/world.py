"""Simulation state types shared by the engine and the seeding code."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Optional

import numpy as np

if TYPE_CHECKING:
    from .population import Dataset, ModelConstants

TRANSMISSION_MODES = ("deterministic", "age-weighted")


@dataclass(frozen=True)
class Policy:
    lockdown_day: Optional[int] = 5
    restriction_factor: float = 50.0
    incubation_days: int = 5
    contact_coefficient: float = 2.01
    mean_move_km: float = 35.0
    migration_rate: float = 1.0 / 365.0
    transmission_mode: str = "deterministic"
    transmission_base: float = 1.0
    # Restricted movement also divides the state std-dev by restriction_factor.
    scale_stddev: bool = True
    boundary_attempts: int = 16
    contact_method: str = "grid"
    # Re-test persisting infected/healthy contacts every day.
    retrial: bool = False

    def __post_init__(self):
        if self.restriction_factor < 1:
            raise ValueError("restriction_factor must be >= 1")
        if self.incubation_days < 0:
            raise ValueError("incubation_days must be >= 0")
        if self.contact_coefficient <= 0:
            raise ValueError("contact_coefficient must be > 0")
        if self.mean_move_km < 0:
            raise ValueError("mean_move_km must be >= 0")
        if not 0.0 <= self.migration_rate <= 1.0:
            raise ValueError("migration_rate must be a probability")
        if self.transmission_mode not in TRANSMISSION_MODES:
            raise ValueError(f"transmission_mode must be one of {TRANSMISSION_MODES}")
        if not 0.0 <= self.transmission_base <= 1.0:
            raise ValueError("transmission_base must be a probability")
        if self.boundary_attempts < 1:
            raise ValueError("boundary_attempts must be >= 1")
        if self.contact_method not in ("grid", "naive"):
            raise ValueError("contact_method must be 'grid' or 'naive'")

    def lockdown_active(self, day: int) -> bool:
        return self.lockdown_day is not None and day >= self.lockdown_day


@dataclass(frozen=True)
class Cluster:
    """Read-only view of one cluster; the world stores clusters column-wise."""

    id: int
    home_state: int
    current_state: int
    position: tuple[float, float]
    infection_day: Optional[int]
    migrant: bool
    last_move_km: float

    @property
    def infected(self) -> bool:
        return self.infection_day is not None


@dataclass
class World:
    day: int
    seed: int
    position: np.ndarray          # (N, 2) km
    home_state: np.ndarray        # (N,) state index
    current_state: np.ndarray     # (N,) state index
    infection_day: np.ndarray     # (N,) day index, -1 = healthy
    migrant: np.ndarray           # (N,) bool
    last_move_km: np.ndarray      # (N,) km
    constants: "ModelConstants"
    dataset: "Dataset"
    policy: Policy
    contact_probability: np.ndarray = field(init=False, repr=False)
    # Sorted i*N+j keys of infected/healthy pairs in contact at the end of the last day.
    open_encounters: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64),
                                        repr=False)

    def __post_init__(self):
        self.contact_probability = state_transmission_probabilities(self.dataset, self.policy)

    @property
    def n_clusters(self) -> int:
        return len(self.infection_day)

    @property
    def infected(self) -> np.ndarray:
        return self.infection_day >= 0

    @property
    def infected_count(self) -> int:
        return int(np.count_nonzero(self.infection_day >= 0))

    def cluster(self, i: int) -> Cluster:
        d = int(self.infection_day[i])
        return Cluster(id=int(i), home_state=int(self.home_state[i]),
                       current_state=int(self.current_state[i]),
                       position=(float(self.position[i, 0]), float(self.position[i, 1])),
                       infection_day=None if d < 0 else d, migrant=bool(self.migrant[i]),
                       last_move_km=float(self.last_move_km[i]))

    def copy(self) -> "World":
        return replace(self, position=self.position.copy(), home_state=self.home_state.copy(),
                       current_state=self.current_state.copy(),
                       infection_day=self.infection_day.copy(), migrant=self.migrant.copy(),
                       last_move_km=self.last_move_km.copy(),
                       open_encounters=self.open_encounters.copy())

    def with_policy(self, policy: Policy) -> "World":
        w = self.copy()
        w.policy = policy
        w.contact_probability = state_transmission_probabilities(self.dataset, policy)
        return w

    def status_labels(self) -> np.ndarray:
        """healthy / incubating / symptomatic per cluster at the current day."""
        lab = np.full(self.n_clusters, "healthy", dtype=object)
        inf = self.infected
        incubating = inf & (self.day - self.infection_day < self.policy.incubation_days)
        lab[incubating] = "incubating"
        lab[inf & ~incubating] = "symptomatic"
        return lab


def state_transmission_probabilities(dataset: "Dataset", policy: Policy) -> np.ndarray:
    from .population import transmission_probability

    n = len(dataset.records)
    if policy.transmission_mode == "deterministic":
        return np.ones(n)
    if dataset.age_risk is None:
        raise ValueError("age-weighted transmission needs an age risk table")
    return np.array([transmission_probability(r.age_distribution, dataset.age_risk,
                                              policy.transmission_base)
                     for r in dataset.records])
