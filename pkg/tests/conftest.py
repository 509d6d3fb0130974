from pathlib import Path

import numpy as np
import pytest

from crflow import build_complex, figure_eight_spec, load_gluing

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fig8():
    return build_complex(figure_eight_spec())


@pytest.fixture(scope="session")
def genus_two():
    return build_complex(load_gluing(DATA / "genus_two_boundary.json"))


@pytest.fixture(scope="session")
def mixed():
    return build_complex(load_gluing(DATA / "two_vertex_mixed.json"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"criterion {number:>3}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
