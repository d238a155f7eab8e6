import struct
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbsest import (
    Observable,
    StateVector,
    ab_probabilities,
    basis_probabilities,
    expectation,
    ground_state,
    load_observable,
)
from cbsest.errors import DimensionError, DomainError

from .conftest import dense_observable, random_observable, random_state


def test_normalizes_and_fixes_phase():
    psi = StateVector(1, [1j, 2j])
    assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0)
    # the largest amplitude becomes real and non-negative
    assert psi.amplitudes[1] == pytest.approx(2 / np.sqrt(5))
    assert psi.amplitudes[0] == pytest.approx(1 / np.sqrt(5))
    assert psi.is_real


def test_phase_tie_goes_to_lowest_label():
    psi = StateVector(1, [-1, 1j])
    assert psi.amplitudes[0] == pytest.approx(1 / np.sqrt(2))
    assert psi.amplitudes[1] == pytest.approx(-1j / np.sqrt(2))


def test_amplitudes_are_read_only():
    psi = StateVector.basis(2, 3)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1


@pytest.mark.parametrize("amps", [[0, 0], [1, np.nan]])
def test_rejects_degenerate_vectors(amps):
    with pytest.raises(DomainError):
        StateVector(1, amps)


def test_rejects_wrong_length():
    with pytest.raises(DimensionError):
        StateVector(2, [1, 0, 0])
    with pytest.raises(DimensionError):
        StateVector.from_amplitudes([1, 0, 0])


def test_save_load_roundtrip(tmp_path, rng):
    psi = random_state(rng, 3)
    path = tmp_path / "psi.bin"
    psi.save(path)
    raw = path.read_bytes()
    assert struct.unpack("<I", raw[:4]) == (3,)
    assert len(raw) == 4 + 16 * 8
    back = StateVector.load(path)
    np.testing.assert_array_equal(back.amplitudes, psi.amplitudes)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_expectation_matches_dense(seed, n):
    rng = np.random.default_rng(seed)
    o = random_observable(rng, n, 6)
    psi = random_state(rng, n)
    expected = np.vdot(psi.amplitudes, dense_observable(o) @ psi.amplitudes).real
    assert expectation(o, psi) == pytest.approx(expected, abs=1e-12)


def test_expectation_size_mismatch():
    with pytest.raises(DimensionError):
        expectation(Observable.from_pairs(2, [(1.0, "Z0")]), StateVector.basis(1, 0))


def test_ground_state_dense(rng):
    o = random_observable(rng, 4, 12)
    gs = ground_state(o)
    vals = np.linalg.eigvalsh(dense_observable(o))
    assert gs.energy == pytest.approx(vals[0], abs=1e-12)
    assert gs.gap == pytest.approx(vals[1] - vals[0], abs=1e-10)
    assert gs.residual < 1e-9


def test_ground_state_iterative_matches_dense(h2_path):
    h = load_observable(h2_path)
    dense = ground_state(h)
    sparse = ground_state(h, dense_limit=2)
    assert sparse.energy == pytest.approx(dense.energy, abs=1e-10)
    assert abs(np.vdot(sparse.state.amplitudes, dense.state.amplitudes)) == pytest.approx(1.0, abs=1e-8)


def test_ground_state_is_repeatable(h2_path):
    h = load_observable(h2_path)
    a = ground_state(h, dense_limit=2)
    b = ground_state(h, dense_limit=2)
    np.testing.assert_array_equal(a.state.amplitudes, b.state.amplitudes)


def test_degenerate_ground_space_warns():
    o = Observable.from_pairs(2, [(1.0, "Z0")])
    with pytest.warns(UserWarning, match="degenerate"):
        gs = ground_state(o)
    assert gs.degenerate and gs.energy == pytest.approx(-1.0)


def test_ground_state_cap():
    with pytest.raises(DomainError):
        ground_state(Observable.from_pairs(3, [(1.0, "Z0")]), max_qubits=2)


def test_h2_ground_energy(h2_path):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gs = ground_state(load_observable(h2_path))
    assert gs.energy == pytest.approx(-1.137306, abs=1e-6)
    assert gs.state.is_real


def test_basis_probabilities_prunes():
    psi = StateVector(2, [1, 1e-7, 0, 1])
    probs = basis_probabilities(psi)
    assert set(probs) == {0, 1, 3}
    assert set(basis_probabilities(psi, prune=1e-12)) == {0, 3}


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_interference_probabilities_recover_the_product(seed, n):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, n + 1)
    m, k = rng.choice(psi.dim, size=2, replace=False)
    a, b = ab_probabilities(psi, int(m), int(k))
    am, ak = psi.amplitudes[m], psi.amplitudes[k]
    g = a + 1j * b - 0.5 * (1 + 1j) * (abs(am) ** 2 + abs(ak) ** 2)
    assert g == pytest.approx(am * np.conj(ak), abs=1e-14)
    assert 0 <= a <= 1 and 0 <= b <= 1


def test_interference_probabilities_need_distinct_labels():
    with pytest.raises(DomainError):
        ab_probabilities(StateVector.basis(1, 0), 0, 0)
