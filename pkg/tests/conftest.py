import pytest

from vmfilt.blob import ellipse_grid_scene, render_scene

_results = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, desc): numbered acceptance criterion, one summary line each")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, desc = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL",
                  "skipped": "SKIP"}.get(rep.outcome, rep.outcome.upper())
        _results.append((num, status, desc))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num, status, desc in sorted(_results):
        terminalreporter.write_line(f"{status} criterion {num:2d}: {desc}")


@pytest.fixture(scope="session")
def ecc2_image():
    return render_scene(ellipse_grid_scene(2.0))


@pytest.fixture(scope="session")
def ecc4_image():
    return render_scene(ellipse_grid_scene(4.0))
