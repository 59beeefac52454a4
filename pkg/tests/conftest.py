from pathlib import Path

import pytest

from transfer_solve.core import Disk, DomainSpec, LeftCutoff, Strip, Tolerances
from transfer_solve.solver import ProblemSpec

PROBLEMS = Path(__file__).resolve().parents[1] / "src" / "transfer_solve" / "problems"


def make_problem(text, k, radius=4.0, J=1.0, a=1.0, anchor=0j, params=(), **tol):
    return ProblemSpec.from_text(
        text, k,
        strip=Strip(a),
        cutoff=LeftCutoff(J),
        domain=DomainSpec(Disk(0j, radius), anchor),
        parameters=params,
        tolerances=Tolerances(**tol),
    )


@pytest.fixture
def exp_sum2():
    """Exponential sum at k=2, domain |z| < 4, seed parameter 0.5."""
    return make_problem("exp(s+z1)+exp(s+z2)", 2, params=(0.5,))


@pytest.fixture(scope="session")
def problems_dir():
    return PROBLEMS


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
