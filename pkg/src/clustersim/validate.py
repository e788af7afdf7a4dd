"""Report-only checks over the four input files."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .geodata import GeometryError, Region, total_area
from .population import (DataError, StateRecord, load_age_risk, load_migration,
                         load_states)

BUNDLED_CLUSTERS = 29_918
BUNDLED_INFECTED = 258


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.name}" + (f": {self.detail}"
                                                                  if self.detail else "")


def _regions_checks(path: Path) -> tuple[list[Check], dict[str, Region]]:
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        return [Check("regions file", False, f"not found: {path}")], {}
    except json.JSONDecodeError as exc:
        return [Check("regions file", False, f"{path}: invalid JSON ({exc})")], {}
    checks, regions = [], {}
    for k, feat in enumerate(doc.get("features", [])):
        name = (feat.get("properties") or {}).get("name", f"feature {k}")
        geom = feat.get("geometry") or {}
        coords = geom.get("coordinates", [])
        polys = [coords] if geom.get("type") == "Polygon" else coords
        try:
            regions[name] = Region.from_rings(name, polys)
            checks.append(Check(f"region {name}", True))
        except (GeometryError, TypeError, ValueError) as exc:
            checks.append(Check(f"region {name}", False, str(exc)))
    if not regions:
        checks.append(Check("regions file", False, f"{path}: no valid regions"))
    return checks, regions


def validate_data(states, migration, age_risk, regions, *,
                  expected_clusters: int | None = BUNDLED_CLUSTERS,
                  expected_infected: int | None = BUNDLED_INFECTED,
                  area_tolerance: float = 0.02) -> list[Check]:
    """Run every input check and return them in a fixed order; never raises."""
    checks: list[Check] = []
    records: list[StateRecord] = []
    try:
        records = load_states(states)
        checks.append(Check("states table", True, f"{len(records)} rows"))
    except DataError as exc:
        checks.append(Check("states table", False, str(exc)))

    for r in records:
        age_sum = math.fsum(r.age_distribution)
        checks.append(Check(f"age distribution {r.name}", abs(age_sum - 1.0) <= 1e-6,
                            f"sums to {age_sum:.6g}"))
        other = [p for p in r.problems() if "age fractions sum" not in p]
        checks.append(Check(f"state record {r.name}", not other, "; ".join(other)))

    if records:
        quota = sum(r.cluster_quota for r in records)
        infected = sum(r.initial_infected for r in records)
        if expected_clusters is not None:
            checks.append(Check("cluster quota total", quota == expected_clusters,
                                f"{quota} (expected {expected_clusters})"))
        if expected_infected is not None:
            checks.append(Check("initial infected total", infected == expected_infected,
                                f"{infected} (expected {expected_infected})"))
        try:
            load_migration(migration, records)
            checks.append(Check("migration matrix", True, "square, labels match"))
        except DataError as exc:
            checks.append(Check("migration matrix", False, str(exc)))

    try:
        table = load_age_risk(age_risk)
        checks.append(Check("age risk table", True, f"{len(table.bins)} bins"))
        bad = [r.name for r in records if len(r.age_distribution) != len(table.bins)]
        checks.append(Check("age bins aligned", not bad,
                            f"mismatched: {', '.join(bad)}" if bad else ""))
    except DataError as exc:
        checks.append(Check("age risk table", False, str(exc)))

    region_checks, regs = _regions_checks(Path(regions))
    checks.extend(region_checks)
    if records and regs:
        missing = [r.name for r in records if r.name not in regs]
        checks.append(Check("regions cover states", not missing,
                            f"missing: {', '.join(missing)}" if missing else ""))
        table_area = [r.area_km2 for r in records]
        if all(a is not None for a in table_area) and not missing:
            shoelace = total_area(regs[r.name] for r in records)
            rel = shoelace / sum(table_area) - 1.0
            checks.append(Check("total area vs table", abs(rel) <= area_tolerance,
                                f"{shoelace:.0f} km2 vs {sum(table_area):.0f} km2 "
                                f"({rel:+.2%})"))
    return checks
