"""Shared oracles and generators.

The dense helpers build operators straight from 2x2 Pauli matrices with Kronecker
products and never touch the bitmask code paths they are used to check.
"""

from __future__ import annotations

from functools import reduce
from pathlib import Path

import numpy as np
import pytest

from cbsest import Observable, PauliString, PauliTerm, StateVector

FIXTURES = Path(__file__).parent / "fixtures"

PAULI_2X2 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_pauli(letters: str) -> np.ndarray:
    """Matrix of a letter string where character ``s`` acts on qubit ``s`` (bit ``s`` of the label)."""
    # the highest qubit is the most significant bit, so it goes first in the product
    return reduce(np.kron, [PAULI_2X2[ch] for ch in reversed(letters)])


def dense_observable(o: Observable) -> np.ndarray:
    mat = np.zeros((o.dim, o.dim), dtype=complex)
    for term in o.terms:
        mat += term.coeff * dense_pauli(term.string.letters)
    return mat


def random_letters(rng: np.random.Generator, n: int) -> str:
    return "".join(rng.choice(list("IXYZ"), size=n))


def random_observable(rng: np.random.Generator, n: int, m: int, *, diagonal: bool = False) -> Observable:
    alphabet = list("IZ") if diagonal else list("IXYZ")
    terms = []
    for _ in range(m):
        letters = "".join(rng.choice(alphabet, size=n))
        terms.append(PauliTerm(float(rng.normal()), PauliString.from_letters(letters)))
    return Observable(n, tuple(terms))


def random_state(rng: np.random.Generator, n: int, *, real: bool = False, support: int | None = None) -> StateVector:
    dim = 1 << n
    amps = rng.normal(size=dim) + (0 if real else 1j * rng.normal(size=dim))
    if support is not None:
        keep = rng.choice(dim, size=support, replace=False)
        mask = np.zeros(dim, dtype=bool)
        mask[keep] = True
        amps = np.where(mask, amps, 0)
    return StateVector(n, amps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def h2_path():
    return FIXTURES / "h2.json"


@pytest.fixture(scope="session")
def lih_path():
    return FIXTURES / "lih.json"


# --- acceptance reporting -------------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion gate")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    failed = report.failed
    if report.when == "call" or failed:
        previous = _ACCEPTANCE.get(number, (title, "PASS"))[1]
        status = "FAIL" if failed or previous == "FAIL" else "PASS"
        if report.skipped and report.when == "call":
            status = "SKIP"
        _ACCEPTANCE[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
