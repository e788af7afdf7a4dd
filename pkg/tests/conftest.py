import numpy as np
import pytest

from clustersim.config import ScenarioConfig
from clustersim.geodata import Region
from clustersim.population import AgeRiskTable, Dataset, StateRecord


def square(name, x0=0.0, y0=0.0, side=1.0):
    return Region.from_rings(name, [[[(x0, y0), (x0 + side, y0), (x0 + side, y0 + side),
                                      (x0, y0 + side)]]])


def record(name, quota=1, infected=0, sd=1e-9, population=1000):
    return StateRecord(name=name, population=population, cluster_quota=quota,
                       initial_infected=infected, move_stddev=sd, age_distribution=(1.0,))


def synthetic_dataset(regions, records, migration=None):
    return Dataset.build(records, {r.name: r for r in regions},
                         None if migration is None else np.asarray(migration, float),
                         AgeRiskTable(("all",), (1.0,)), cell_km=1.0)


@pytest.fixture(scope="session")
def bundled():
    return ScenarioConfig().load_dataset()


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=lambda k: int(k[1:])):
        terminalreporter.write_line(results[key])
