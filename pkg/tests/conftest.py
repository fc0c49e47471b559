import numpy as np
import pytest

from schmidt_lrp.haar import RandomStream

_CRITERIA = []


def record_criterion(number, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {name} -- {detail}"
    _CRITERIA.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)


@pytest.fixture
def rs():
    return RandomStream(1234, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def random_matrix(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def random_hermitian(rng, n):
    A = random_matrix(rng, n)
    return (A + A.conj().T) / 2


def random_density(rng, n):
    G = random_matrix(rng, n)
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_ket(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)
