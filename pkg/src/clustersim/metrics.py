"""Per-day observables and lockdown/no-lockdown comparison."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .world import World

METRIC_FIELDS = ("day", "infected_clusters", "new_infections", "mean_move_km",
                 "high_risk_fraction")


@dataclass(frozen=True)
class DailyMetrics:
    day: int
    infected_clusters: int
    new_infections: int
    mean_move_km: float
    high_risk_fraction: float

    def row(self) -> list[str]:
        return [str(self.day), str(self.infected_clusters), str(self.new_infections),
                f"{self.mean_move_km:.6f}", f"{self.high_risk_fraction:.8f}"]


def daily_metrics(world: "World") -> DailyMetrics:
    """Observables at the world's current day.

    The high-risk share is infected clusters over all clusters; persons per
    cluster cancels from numerator and denominator.
    """
    infected = world.infection_day >= 0
    n_inf = int(np.count_nonzero(infected))
    new = int(np.count_nonzero(world.infection_day == world.day)) if world.day > 0 else 0
    return DailyMetrics(day=int(world.day), infected_clusters=n_inf, new_infections=new,
                        mean_move_km=float(np.mean(world.last_move_km)),
                        high_risk_fraction=n_inf / world.n_clusters)


def plateau_day(series: Sequence[DailyMetrics], epsilon: float) -> int | None:
    """First day from which new infections stay <= epsilon through the end."""
    day = None
    for m in reversed(series):
        if m.new_infections > epsilon:
            break
        day = m.day
    return day


@dataclass(frozen=True)
class Comparison:
    days: tuple[int, ...]
    delta_infected: tuple[int, ...]
    ratio: tuple[float, ...]
    final_ratio: float
    plateau_day: int | None

    def rows(self) -> list[list[str]]:
        return [[str(d), str(x), _fmt_ratio(r)]
                for d, x, r in zip(self.days, self.delta_infected, self.ratio)]


def _ratio(b: int, a: int) -> float:
    if a == 0:
        return 1.0 if b == 0 else math.inf
    return b / a


def _fmt_ratio(r: float) -> str:
    return "inf" if math.isinf(r) else f"{r:.6f}"


def compare_runs(a: Sequence[DailyMetrics], b: Sequence[DailyMetrics], *,
                 total_clusters: int, plateau_fraction: float = 0.001) -> Comparison:
    """Compare a restricted run ``a`` against a reference run ``b``.

    Deltas and ratios are ``b - a`` and ``b / a`` in infected clusters, so a
    lockdown run passed as ``a`` gives ratios above one. The plateau day is
    measured on ``a`` with epsilon = ``plateau_fraction * total_clusters``.
    """
    if len(a) != len(b) or [m.day for m in a] != [m.day for m in b]:
        raise ValueError(f"horizon mismatch: {len(a)} vs {len(b)} days")
    days = tuple(m.day for m in a)
    delta = tuple(y.infected_clusters - x.infected_clusters for x, y in zip(a, b))
    ratio = tuple(_ratio(y.infected_clusters, x.infected_clusters) for x, y in zip(a, b))
    return Comparison(days, delta, ratio,
                      final_ratio=ratio[-1] if ratio else 1.0,
                      plateau_day=plateau_day(a, plateau_fraction * total_clusters))


def movement_drop(series: Sequence[DailyMetrics], before: int, after: int) -> float:
    """Ratio of mean movement on day ``before`` to that on day ``after``."""
    by_day = {m.day: m.mean_move_km for m in series}
    if by_day[after] == 0:
        return math.inf
    return by_day[before] / by_day[after]


def write_metrics_csv(path: str | Path, series: Sequence[DailyMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_FIELDS)
        for m in series:
            w.writerow(m.row())


def read_metrics_csv(path: str | Path) -> list[DailyMetrics]:
    with open(path, newline="") as fh:
        return [DailyMetrics(int(r["day"]), int(r["infected_clusters"]),
                             int(r["new_infections"]), float(r["mean_move_km"]),
                             float(r["high_risk_fraction"]))
                for r in csv.DictReader(fh)]


def write_comparison_csv(path: str | Path, comparison: Comparison) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "delta_infected", "ratio"])
        w.writerows(comparison.rows())
