import os
from importlib.resources import files

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CONFIG_DIR = str(files("rmpflab") / "configs")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def config_path():
    def path(name):
        return os.path.join(CONFIG_DIR, name)
    return path


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)`` for the end-of-run acceptance table."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(number, title, passed, detail):
        lines.append((number, title, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config.stash.get(ACCEPTANCE_KEY, []))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in lines:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}")
