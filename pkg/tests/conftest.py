import numpy as np
import pytest

from chbiot.basis import Domain
from chbiot.config import build_model, default_config
from chbiot.material import MaterialModel
from chbiot.model import Model

# acceptance outcomes collected for the terminal summary
ACCEPTANCE = []


def record(criterion: str, passed: bool, detail: str = "") -> None:
    line = f"{'PASS' if passed else 'FAIL'}  criterion {criterion}"
    if detail:
        line += f"  ({detail})"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":").split(".")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def model1d():
    return build_model(default_config(1, k=12))


@pytest.fixture(scope="session")
def model2d():
    return build_model(default_config(2, k=10))


@pytest.fixture(scope="session")
def plain_model1d():
    return Model.build(Domain((1.0,)), 8, MaterialModel(dim=1), eps=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
