import numpy as np
import pytest

from frohlich.fock import LAMBDA0, FockBasis, ModeGrid, coupling_amplitudes

# one line per acceptance criterion, echoed after the run
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


def make_single_mode_grid(g_target: float, radius: float = 1.0) -> ModeGrid:
    """One-mode grid whose coupling lands on g_target up to ulps."""
    weight = (g_target * radius / LAMBDA0) ** 2
    w = np.array([weight])
    r = np.array([radius])
    g = coupling_amplitudes(1.0, LAMBDA0, w, r)
    return ModeGrid(
        k=np.array([[radius, 0.0, 0.0]]),
        radius=r,
        weight=w,
        g=g,
        alpha=1.0,
        lambda0=LAMBDA0,
        r_min=0.5 * radius,
        lambda_max=2.0 * radius,
    )


def dense_creation_oracle(basis: FockBasis, i: int) -> np.ndarray:
    """Creation matrix assembled by direct state lookup, independent of fock's path."""
    index = {tuple(s): j for j, s in enumerate(basis.states.tolist())}
    mat = np.zeros((basis.dim, basis.dim))
    for col, state in enumerate(basis.states.tolist()):
        if sum(state) + 1 > basis.n_max:
            continue
        raised = list(state)
        raised[i] += 1
        mat[index[tuple(raised)], col] = np.sqrt(raised[i])
    return mat


@pytest.fixture
def single_mode_grid():
    return make_single_mode_grid(0.5)
