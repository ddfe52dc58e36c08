import pytest

from skewfront import env as envmod

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def tree31():
    return envmod.constant_env(3, 1.0, 2000)


@pytest.fixture(scope="session")
def random_env():
    cfg = envmod.EnvConfig(((3, 0.5), (4, 0.5)), None, (0.5, 2.0), 20000, 11)
    return envmod.generate(cfg)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
