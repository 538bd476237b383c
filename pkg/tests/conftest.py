import numpy as np
import pytest

from zwrcool.model import stand_in_model
from zwrcool.spectrum import bound_spectrum


@pytest.fixture(scope="session")
def model():
    return stand_in_model()


@pytest.fixture(scope="session")
def basis(model):
    return bound_spectrum(model, 12)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture(scope="session")
def record():
    """record(number, name, ok, detail) stores one acceptance line."""
    def _record(number: int, name: str, ok: bool, detail: str) -> bool:
        ACCEPTANCE[number] = (name, bool(ok), detail)
        print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {name}: {detail}")
        return bool(ok)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
