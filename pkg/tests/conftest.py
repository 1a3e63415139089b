import pytest

from twistcar.model import TABLE1, DimlessParams, nondimensionalize


@pytest.fixture(scope="session")
def table1():
    return TABLE1


@pytest.fixture(scope="session")
def dp():
    """Table-1 scaling at Omega = 1.72 rad/s (omega = 6.88), A = 1."""
    return nondimensionalize(TABLE1, 1.72)


@pytest.fixture(scope="session")
def dp_round():
    """Rounded reference values alpha = beta = 1/3, delta = 0.1, eta = 0.0118."""
    return DimlessParams(alpha=1 / 3, beta=1 / 3, delta=0.1, eta=0.0118, A=1.0, omega=6.88)


def pytest_terminal_summary(terminalreporter):
    from criteria import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: [int(p) if p.isdigit() else p for p in k.split(".")]):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key:<5s} {detail}")
