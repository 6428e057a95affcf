import pytest

from stadium_spectrum.geometry import graph_squash, squash_from_curvatures, std_stadium, weak_stadium


@pytest.fixture(scope="session")
def std():
    return std_stadium(1.0, 2.0)


@pytest.fixture(scope="session")
def weak():
    return weak_stadium()


@pytest.fixture(scope="session")
def squash():
    return squash_from_curvatures(3.0, 1.0, 0.8)


@pytest.fixture(scope="session")
def graph_table():
    return graph_squash([0.0, 0.0, 0.05, 0.0, 1.0], 0.8, 1.0)


def pytest_terminal_summary(terminalreporter):
    from verdicts import VERDICTS

    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[n])
