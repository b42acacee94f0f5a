import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, max_examples=30, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.stash[_ACCEPTANCE_KEY] = rep.passed


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion["label"] = ...`` and optional ``criterion["detail"]``."""
    rec = {"label": request.node.name, "detail": ""}
    yield rec
    passed = request.node.stash.get(_ACCEPTANCE_KEY, False)
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])
    lines.append(f"{'PASS' if passed else 'FAIL'}  {rec['label']}  {rec['detail']}".rstrip())


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
