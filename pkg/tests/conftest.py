from __future__ import annotations

import math

import pytest
from hypothesis import settings

from slaflow.cluster import ModelSpec
from slaflow.workload import DEFAULT_TOKEN_CONFIG, PRIMARY_MODEL, SECONDARY_MODEL, Dist, build_standard_tasks

# property tests draw the same examples on every run
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

# filled by test_acceptance, printed once at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def constant_token_config():
    """Default layout with every distribution collapsed to its (rounded) mean."""
    return {task: {node: {k: Dist.constant(math.floor(d.mean) if k != "latency" else d.mean)
                          for k, d in dists.items()}
                   for node, dists in nodes.items()}
            for task, nodes in DEFAULT_TOKEN_CONFIG.items()}


@pytest.fixture
def templates():
    return {t.task_type: t for t in build_standard_tasks()}


@pytest.fixture
def constant_templates():
    return {t.task_type: t for t in build_standard_tasks(constant_token_config())}


@pytest.fixture
def models():
    return [ModelSpec(PRIMARY_MODEL), ModelSpec(SECONDARY_MODEL)]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
