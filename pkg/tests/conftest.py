import numpy as np
import pytest

from qudit_surgery.lattice import build_patch
from qudit_surgery.surgery import logical_basis

ACCEPTANCE_LINES: list[str] = []


def dense_product_projector(g) -> np.ndarray:
    """prod A(v) prod B(p) as a dense matrix, built from the per-site
    matrices alone (an oracle independent of the reduced-space rank code)."""
    from qudit_surgery.lattice import projector
    dim = g.d ** g.n_edges
    m = np.eye(dim, dtype=complex)
    for s in g.stabilizers():
        m = projector(g, s, 0).matrix(g.edges) @ m
    return m


@pytest.fixture(scope="session")
def minimal():
    """Validated 8-edge patches with their logical bases, by d."""
    return {d: logical_basis(build_patch(d, 1, 1)) for d in (2, 3)}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
