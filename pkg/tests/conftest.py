import numpy as np
import pytest
from hypothesis import settings

from tsvf.algebra import Ket, LocalSpace, ProductSpace
from tsvf.twostate import TwoState

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_space(rng, dims):
    return ProductSpace(tuple(LocalSpace(tuple(f"s{k}" for k in range(d))) for d in dims))


def random_vector(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def random_two_state(rng, dims):
    space = random_space(rng, dims)
    d = space.total_dimension
    return TwoState(Ket(space, random_vector(rng, d)), Ket(space, random_vector(rng, d)))


def random_projector(rng, d, rank):
    q, _ = np.linalg.qr(random_vector(rng, d * d).reshape(d, d))
    v = q[:, :rank]
    return v @ v.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(20260214)


# acceptance criteria report one line each at the end of the run

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        prev = _CRITERIA.get(mark.args[0], (mark.args[1], True))
        _CRITERIA[mark.args[0]] = (mark.args[1], prev[1] and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, ok = _CRITERIA[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {num:>2}: {title}")
