import time

import pytest

from ipm_softmag.calibration import load_calibration
from ipm_softmag.geometry import MotorGeometry, delta_type, v_type
from ipm_softmag.materials import load_material_db
from ipm_softmag.report import SweepConfig, run_sweep

ACCEPTANCE_RESULTS: dict[str, str] = {}


@pytest.fixture(scope="session")
def db():
    return load_material_db()


@pytest.fixture(scope="session")
def geom():
    return MotorGeometry()


@pytest.fixture(scope="session")
def vtopo():
    return v_type()


@pytest.fixture(scope="session")
def dtopo():
    return delta_type()


@pytest.fixture(scope="session")
def calib():
    return load_calibration()


@pytest.fixture(scope="session")
def full_sweep():
    """The 24-cell study, computed once per session, with its wall time."""
    t0 = time.perf_counter()
    rows = run_sweep(SweepConfig())
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="session")
def sweep_by_cell(full_sweep):
    rows, _ = full_sweep
    return {(r.material, r.topology): r for r in rows}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        ACCEPTANCE_RESULTS[name] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")

    def order(name):
        return int(name.split("_")[2])

    for name in sorted(ACCEPTANCE_RESULTS, key=order):
        terminalreporter.write_line(f"{ACCEPTANCE_RESULTS[name]}  {name}")
