import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from activescan.perception import PrototypeSegmenter
from activescan.sensor import CameraModel
from activescan.worldgen import FieldSpec, Region, generate_field

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def camera():
    return CameraModel()


@pytest.fixture(scope="session")
def segmenter():
    return PrototypeSegmenter()


@pytest.fixture(scope="session")
def small_spec():
    """30 m x 24 m, vegetated left half and bare right half."""
    return FieldSpec(
        width_m=30.0,
        height_m=24.0,
        plant_radius_m=0.12,
        regions=(
            Region("vegetated", 0.0, 0.0, 15.0, 24.0, True, 1.0),
            Region("bare", 15.0, 0.0, 30.0, 24.0, False, 0.0),
        ),
        seed=11,
    )


@pytest.fixture(scope="session")
def small_world(small_spec):
    return generate_field(small_spec)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# One pass/fail line per acceptance criterion. Tests tag themselves with
# record_property("criterion", n) and optionally ("detail", text).
_criteria: dict[int, list[tuple[str, str, str]]] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "xfail" if hasattr(report, "wasxfail") else report.outcome
        _criteria.setdefault(props["criterion"], []).append(
            (report.nodeid.split("::")[-1], outcome, props.get("detail", ""))
        )


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        parts = _criteria[n]
        outcomes = {o for _, o, _ in parts}
        if outcomes <= {"passed"}:
            status = "PASS"
        elif outcomes <= {"passed", "xfail"}:
            status = "PASS with a documented deviation (see xfail below)"
        else:
            status = "FAIL"
        tr.write_line(f"criterion {n:2d}: {status}")
        for name, outcome, detail in parts:
            tr.write_line(f"    {outcome:7s} {name}{': ' + detail if detail else ''}")
