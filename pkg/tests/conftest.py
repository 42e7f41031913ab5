from fractions import Fraction

import pytest

from quathecke.classes import class_set_from_ideals, left_ideal_classes
from quathecke.hecke import build_context
from quathecke.quaternion import build_algebra, maximal_order_basis

_CACHE: dict = {}


def classset_for(p: int):
    """BFS class set, memoised across the whole session."""
    if p not in _CACHE:
        _CACHE[p] = left_ideal_classes(maximal_order_basis(build_algebra(p)))
    return _CACHE[p]


def p11_ideal_basis(alg):
    e = alg.element
    half = Fraction(1, 2)
    return [e(2), e(0, -2), e(1, Fraction(-3, 2), 0, -half), e(half, -1, -half, 0)]


@pytest.fixture(scope="session")
def alg11():
    return build_algebra(11)


@pytest.fixture(scope="session")
def order11(alg11):
    return maximal_order_basis(alg11)


@pytest.fixture(scope="session")
def cs11(alg11, order11):
    """Class set of p=11 with the worked example's ideal basis for the second class."""
    return class_set_from_ideals(alg11, order11, [order11.s, p11_ideal_basis(alg11)])


@pytest.fixture(scope="session")
def ctx11_2(cs11):
    return build_context(cs11, 2, 1)


@pytest.fixture(scope="session")
def ctx11_3(cs11):
    return build_context(cs11, 3, 1)


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
