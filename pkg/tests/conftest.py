import pathlib

import pytest

from fjspmix import build_graph, parse_instance, with_horizon

INSTANCE_DIR = pathlib.Path(__file__).resolve().parent.parent / "instances"

# Two jobs, three operations, ten assignment vertices; the smallest
# instance on which every structural claim is still non-trivial.
REFERENCE = (INSTANCE_DIR / "two_jobs.json").read_text()

# One fast machine behind a one-op job plus a slow alternative; greedy
# lands on the slow machine so optimization has room to improve.
TRAP = (INSTANCE_DIR / "machine_choice.json").read_text()

# Two unit jobs on one machine with two slots: exactly two feasible
# schedules and no single swap between them.
SWAP_LOCKED = """
{"machines": ["M1"], "horizon": 2,
 "jobs": [{"name": "J1", "operations": [{"eligible": {"M1": 1}}]},
          {"name": "J2", "operations": [{"eligible": {"M1": 1}}]}]}
"""


@pytest.fixture(scope="session")
def ref_instance():
    return parse_instance(REFERENCE)


@pytest.fixture(scope="session")
def ref_graph(ref_instance):
    return build_graph(ref_instance)


@pytest.fixture(scope="session")
def h4_instance(ref_instance):
    return with_horizon(ref_instance, 4)


@pytest.fixture(scope="session")
def h4_graph(h4_instance):
    return build_graph(h4_instance)


@pytest.fixture(scope="session")
def trap_graph():
    return build_graph(parse_instance(TRAP))


@pytest.fixture(scope="session")
def locked_graph():
    return build_graph(parse_instance(SWAP_LOCKED))
