import itertools

import numpy as np
import pytest

from fountain_flan import CodeInstance, ideal_soliton, sample_code


def random_codes(count, k_range=(2, 8), n_range=(2, 12), seed=0):
    """Ideal-soliton codes with random small dimensions."""
    rng = np.random.default_rng(seed)
    codes = []
    for _ in range(count):
        k = int(rng.integers(k_range[0], k_range[1] + 1))
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        codes.append(sample_code(k, n, ideal_soliton(k), int(rng.integers(2**32))))
    return codes


def all_patterns(n):
    for mask in range(1 << n):
        yield [i for i in range(n) if mask >> i & 1]


def subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


@pytest.fixture
def chain_code():
    return CodeInstance.from_adjacency(2, [[0], [0, 1]])


@pytest.fixture
def double_edge_code():
    return CodeInstance.from_adjacency(2, [[0, 1], [0, 1]])


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; printed after the run."""
    label = request.node.get_closest_marker("criterion").args[0]
    state = {"detail": ""}
    yield state
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label} {state['detail']}".rstrip())


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
