import pytest

from levichain.field import LevitatorUnit, surface_aligned_depth
from levichain.physics import Environment, OilType

_acceptance_results = []


@pytest.fixture
def bench_env():
    return Environment(wind_speed=0.0, water_density=1000.0, sound_speed=343.0, gravity=9.81)


@pytest.fixture
def bench_oil():
    return OilType("bench", density=700.0, viscosity=0.05)


@pytest.fixture
def bench_unit(bench_env):
    u = LevitatorUnit(id=0, position=(0.0, 0.0), num_transducers=14, power_per_transducer=1.0,
                      frequency=40e3, aperture_area=0.1, reflector_gap=0.05)
    from dataclasses import replace
    return replace(u, depth_setpoint=surface_aligned_depth(u, bench_env))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _acceptance_results.append((marker.args[0], item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    grouped = {}
    for label, name, outcome in _acceptance_results:
        grouped.setdefault(label, []).append((name, outcome))
    terminalreporter.section("acceptance criteria")
    for label in sorted(grouped):
        checks = grouped[label]
        failed = [n for n, o in checks if o != "passed"]
        status = "FAIL" if failed else "PASS"
        detail = f"{len(checks) - len(failed)}/{len(checks)} checks"
        if failed:
            detail += "; failing: " + ", ".join(failed)
        terminalreporter.write_line(f"[{status}] {label} ({detail})")
