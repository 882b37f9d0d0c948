import numpy as np
import pytest

from gradstate.mesh import Mesh

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def square_mesh(m: int) -> Mesh:
    """Structured right-triangle mesh of [0, 1]^2 with (m - 1)^2 interior nodes."""
    xs = np.linspace(0.0, 1.0, m + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((m + 1) ** 2).reshape(m + 1, m + 1)
    tris = []
    for j in range(m):
        for i in range(m):
            a, b, c, d = idx[j, i], idx[j, i + 1], idx[j + 1, i + 1], idx[j + 1, i]
            tris += [[a, b, c], [a, c, d]]
    on_edge = (nodes[:, 0] == 0) | (nodes[:, 0] == 1) | (nodes[:, 1] == 0) | (nodes[:, 1] == 1)
    return Mesh(nodes, np.array(tris, dtype=np.int64), on_edge, 0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        ok, detail = ACCEPTANCE_LINES[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
