import numpy as np
import pytest

from intermdm.model import AgentState
from intermdm.synthdata import generate_synthetic


def make_agent(theta, phi: dict, c) -> AgentState:
    """Agent with hand-set probabilities (zeros become -inf in log space)."""
    with np.errstate(divide="ignore"):
        return AgentState(
            modalities=tuple(phi),
            log_phi={m: np.log(np.asarray(p, dtype=float)) for m, p in phi.items()},
            log_theta=np.log(np.asarray(theta, dtype=float)),
            c=np.asarray(c, dtype=np.int64),
        )


@pytest.fixture(scope="session")
def small_dataset():
    return generate_synthetic(num_objects=6, per_object=5, V=12, seed=3)


@pytest.fixture(scope="session")
def default_dataset():
    return generate_synthetic(seed=0)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    """Log one acceptance verdict; the lines are echoed in the terminal summary."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
