import math

import numpy as np
import pytest

from lamarck.cppn import CppnGenome


def plus_genome() -> CppnGenome:
    """Joint for every cell one step from the core, empty further out.

    joint = sin(pi/2 * d), empty = 0.25 * d, brick = 0: joint wins at d = 1
    (1 > 0.25 > 0) and empty wins at d = 2 (0.5 > sin(pi) ~ 1e-16).
    """
    return CppnGenome.build(
        [(3, 5, math.pi / 2), (3, 6, 0.25)],
        output_activation={4: "identity", 5: "sine", 6: "identity", 7: "identity", 8: "identity"},
    )


def constant_winner(index: int) -> CppnGenome:
    """The output ``index`` always wins: it reads 5 * d, the others read 0."""
    return CppnGenome.build([(3, 4 + index, 5.0)], output_activation="identity")


@pytest.fixture
def plus_tree():
    from lamarck.morphology import develop

    return develop(plus_genome())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
