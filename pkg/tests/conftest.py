import functools

import pytest

from rescal_transitive.graph import build_complete_binary_tree, edge_partitions, transitive_closure


@functools.lru_cache(maxsize=None)
def tree_partitions(depth):
    return edge_partitions(transitive_closure(build_complete_binary_tree(depth)))


@pytest.fixture
def parts3():
    return tree_partitions(3)


@pytest.fixture
def parts4():
    return tree_partitions(4)


ACCEPTANCE_LINES = []


def record_criterion(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
