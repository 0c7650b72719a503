from pathlib import Path

import numpy as np
import pytest

from locclab.deviation import WeightedStateFamily
from locclab.protocol import ProtocolTree, local_round
from locclab.qcore import HilbertStructure, ket

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def two_qubits() -> HilbertStructure:
    return HilbertStructure([2, 2])


@pytest.fixture
def pair_family(two_qubits) -> WeightedStateFamily:
    """|00> and |10> with equal priors."""
    return WeightedStateFamily.from_vectors(two_qubits, [ket(0, 4), ket(2, 4)])


@pytest.fixture
def perfect_tree(two_qubits) -> ProtocolTree:
    """One computational-basis measurement on the first qubit."""
    return ProtocolTree.from_rounds(two_qubits, local_round(two_qubits, 0, [np.diag([1.0, 0]), np.diag([0, 1.0])]))


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
