import functools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridsched import io  # noqa: E402
from gridsched.cli import data_path  # noqa: E402
from gridsched.generator import generate  # noqa: E402
from gridsched.model import CapPolicy  # noqa: E402
from gridsched.schedule import solve_scenario  # noqa: E402

# filled by test_acceptance; printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def demo_scenario():
    gen = io.generator_from_dict(io.load_json(data_path("demo_generator.json")))
    return generate(gen).scenario


@functools.lru_cache(maxsize=None)
def demo_run(mode="v2g", price="rt", eta=None, zones="all"):
    """Solve a variant of the bundled demo once per session."""
    config = demo_scenario().replace(direction_mode=mode).with_price_profile(price)
    config = config.with_cap_policy(CapPolicy(eta, zones))
    return config, solve_scenario(config)


@pytest.fixture(scope="session")
def demo():
    return demo_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
