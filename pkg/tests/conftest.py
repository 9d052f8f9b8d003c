import numpy as np
import pytest

from prefagg.core import AlternativeSet
from prefagg.experiments import (
    cyclic_alternatives,
    cyclic_population,
    linear_population,
    square_alternatives,
)
from prefagg.voronoi import SpaceBox


@pytest.fixture
def cyclic():
    return cyclic_alternatives(), cyclic_population()


@pytest.fixture
def square():
    return square_alternatives()


@pytest.fixture
def square_with_clone():
    return AlternativeSet(
        ("p00", "p10", "p11", "p09"),
        np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.9, 1.0]]),
    )


@pytest.fixture
def linear_pop():
    return linear_population()


@pytest.fixture
def unit_square():
    return SpaceBox.unit_cube(2)



_ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Print and record one PASS/FAIL line, then return whether it passed."""

    def emit(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
