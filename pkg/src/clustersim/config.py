"""Scenario configuration: one TOML file, optionally overridden from the CLI."""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .population import Dataset, ModelConstants, bundled_paths, load_dataset
from .world import Policy

DEFAULT_SNAPSHOT_DAYS = (5, 15, 25, 35, 45, 60)
INDIA_AREA_KM2 = 3_287_263.0
INDIA_POPULATION = 1.35e9
INPUT_KEYS = ("states", "migration", "age_risk", "regions")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    horizon_days: int = 60
    lockdown_day: Optional[int] = 5
    restriction_factor: float = 50.0
    incubation_days: int = 5
    mean_move_km: float = 35.0
    contact_coefficient: float = 2.01
    total_area_km2: float = INDIA_AREA_KM2
    total_population: float = INDIA_POPULATION
    radius_override_km: Optional[float] = None
    seed: int = 0
    snapshot_days: tuple[int, ...] = DEFAULT_SNAPSHOT_DAYS
    transmission_mode: str = "deterministic"
    transmission_base: float = 1.0
    migration_rate: float = 1.0 / 365.0
    scale_stddev: bool = True
    boundary_attempts: int = 16
    contact_method: str = "grid"
    retrial: bool = False
    plateau_fraction: float = 0.001
    inputs: dict[str, str] = field(default_factory=lambda: {k: str(v) for k, v in
                                                             bundled_paths().items()})

    def __post_init__(self):
        if self.horizon_days < 0:
            raise ConfigError("horizon_days must be >= 0")
        if self.lockdown_day is not None:
            if self.lockdown_day < 0:
                raise ConfigError("lockdown_day must be >= 0")
            if self.horizon_days and self.lockdown_day >= self.horizon_days:
                raise ConfigError("lockdown_day must be < horizon_days")
        for key in ("restriction_factor", "mean_move_km", "contact_coefficient",
                    "total_area_km2", "total_population"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        if self.radius_override_km is not None and not self.radius_override_km > 0:
            raise ConfigError("radius_override_km must be positive")
        if any(d < 0 for d in self.snapshot_days):
            raise ConfigError("snapshot_days must be nonnegative")
        missing = [k for k in INPUT_KEYS if k not in self.inputs]
        if missing:
            raise ConfigError(f"inputs missing keys: {missing}")
        try:
            self.policy()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def policy(self) -> Policy:
        return Policy(lockdown_day=self.lockdown_day,
                      restriction_factor=self.restriction_factor,
                      incubation_days=self.incubation_days,
                      contact_coefficient=self.contact_coefficient,
                      mean_move_km=self.mean_move_km,
                      migration_rate=self.migration_rate,
                      transmission_mode=self.transmission_mode,
                      transmission_base=self.transmission_base,
                      scale_stddev=self.scale_stddev,
                      boundary_attempts=self.boundary_attempts,
                      contact_method=self.contact_method,
                      retrial=self.retrial)

    def model_constants(self, dataset: Dataset) -> ModelConstants:
        clusters = sum(r.cluster_quota for r in dataset.records)
        return ModelConstants.build(self.total_population, self.total_area_km2, clusters,
                                    contact_coefficient=self.contact_coefficient,
                                    radius_override=self.radius_override_km)

    def load_dataset(self) -> Dataset:
        return load_dataset(**{k: self.inputs[k] for k in INPUT_KEYS})

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["snapshot_days"] = list(self.snapshot_days)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def config_from_mapping(raw: dict[str, Any], base_dir: Path | None = None) -> ScenarioConfig:
    raw = dict(raw)
    unknown = set(raw) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "lockdown_day" in raw and raw["lockdown_day"] in (False, "none", "None", -1):
        raw["lockdown_day"] = None
    if "snapshot_days" in raw:
        raw["snapshot_days"] = tuple(int(d) for d in raw["snapshot_days"])
    if "inputs" in raw:
        inputs = {k: str(v) for k, v in bundled_paths().items()}
        for k, v in raw["inputs"].items():
            if k not in INPUT_KEYS:
                raise ConfigError(f"unknown input key {k!r}")
            p = Path(v)
            if base_dir is not None and not p.is_absolute():
                p = base_dir / p
            inputs[k] = str(p)
        raw["inputs"] = inputs
    return ScenarioConfig(**raw)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_mapping(raw, base_dir=path.parent)
