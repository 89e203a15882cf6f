import numpy as np
import pytest

from geokernel import KernelSpec


@pytest.fixture
def laplace1():
    return KernelSpec.laplace(1.0)


@pytest.fixture
def gauss1():
    return KernelSpec.gauss(1.0)


def separated_cloud(rng, m, d, sep=0.1, box=1.0):
    """Uniform points in ``[0, box]^d`` with pairwise distance at least ``sep``."""
    pts = []
    while len(pts) < m:
        p = rng.uniform(0.0, box, d)
        if all(np.linalg.norm(p - q) >= sep for q in pts):
            pts.append(p)
    return np.array(pts)


def fd_gradient(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_jacobian(F, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(F(x + e)) - np.asarray(F(x - e))) / (2 * h))
    return np.column_stack(cols)


# ------------------------------------------------- acceptance summary lines

_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    failed = report.failed or (report.when == "call" and report.outcome != "passed")
    if report.when == "call" or failed:
        _CRITERIA[name] = "FAIL" if failed or _CRITERIA.get(name) == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        number = int(name.split("_")[2])
        label = " ".join(name.split("_")[3:])
        terminalreporter.write_line(f"criterion {number:2d} {_CRITERIA[name]}: {label}")
