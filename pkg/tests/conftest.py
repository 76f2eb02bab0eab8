import pytest

from cdsprobe import data_path
from cdsprobe.behavior import parse_state_machine
from cdsprobe.constraints import parse_constraints
from cdsprobe.display_model import generate_model, parse_display_xml, parse_mapping
from cdsprobe.flightsim import parse_faults, parse_profile
from cdsprobe.pathgen import parse_tables

_acceptance_results = {}


@pytest.fixture(scope="session")
def pfd_model():
    return generate_model(parse_display_xml(data_path("pfd.xml").read_bytes()),
                          parse_mapping(data_path("pfd.map").read_bytes()))


@pytest.fixture(scope="session")
def flight_machine():
    return parse_state_machine(data_path("flight_machine.json").read_bytes())


@pytest.fixture(scope="session")
def pfd_constraints():
    return parse_constraints(data_path("pfd.ocl").read_bytes())


@pytest.fixture(scope="session")
def profile():
    return parse_profile(data_path("profile.json").read_bytes())


@pytest.fixture(scope="session")
def tables():
    return parse_tables(data_path("tables.json").read_bytes())


@pytest.fixture(scope="session")
def seeded_faults():
    return parse_faults(data_path("faults.json").read_bytes())


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        prev = _acceptance_results.get(number, (title, True))
        _acceptance_results[number] = (title, prev[1] and report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance_results):
        title, ok = _acceptance_results[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
