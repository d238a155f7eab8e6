"""Dense statevectors, exact ground states and computational-basis probabilities."""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, DomainError
from .pauli import DENSE_QUBIT_LIMIT, QUBIT_CAP, Observable

NORM_TOLERANCE = 1e-10
PRUNE_THRESHOLD = 1e-16
PHASE_TIE_TOLERANCE = 1e-12
DEGENERACY_GAP = 1e-10


def _fix_phase(amps: np.ndarray) -> np.ndarray:
    mod = np.abs(amps)
    # lowest label among the (numerically) largest moduli
    pivot = int(np.flatnonzero(mod >= mod.max() - PHASE_TIE_TOLERANCE)[0])
    if amps[pivot].imag == 0 and amps[pivot].real >= 0:
        return amps
    phase = amps[pivot] / mod[pivot]
    out = amps / phase
    out[pivot] = mod[pivot]
    return out


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitudes over ``2^N`` basis states with a fixed global phase.

    The input is normalized on construction and multiplied by a global phase so the
    largest-modulus amplitude (lowest label on ties) is real and non-negative. A real
    eigenvector therefore ends up with real amplitudes.
    """

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 1 << self.n_qubits:
            raise DimensionError(f"{amps.size} amplitudes do not match {self.n_qubits} qubits")
        norm = np.linalg.norm(amps)
        if norm == 0 or not np.isfinite(norm):
            raise DomainError("cannot build a state from a zero or non-finite vector")
        # already-normalized input is left untouched so save/load is bit exact
        if abs(norm - 1.0) > 4 * np.finfo(float).eps:
            amps = amps / norm
        amps = _fix_phase(amps)
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> StateVector:
        amps = np.asarray(amplitudes)
        n = int(amps.size).bit_length() - 1
        if amps.size != 1 << n:
            raise DimensionError(f"length {amps.size} is not a power of two")
        return cls(n, amps)

    @classmethod
    def basis(cls, n_qubits: int, label: int) -> StateVector:
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[label] = 1.0
        return cls(n_qubits, amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def is_real(self) -> bool:
        return bool(np.max(np.abs(self.amplitudes.imag), initial=0.0) <= NORM_TOLERANCE)

    def amplitude(self, label: int) -> complex:
        return complex(self.amplitudes[label])

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def with_fixed_phase(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes)

    def save(self, path):
        """Binary dump: 4-byte little-endian qubit count then (re, im) little-endian doubles."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<I", self.n_qubits))
            fh.write(np.ascontiguousarray(self.amplitudes, dtype="<c16").tobytes())

    @classmethod
    def load(cls, path) -> StateVector:
        with open(path, "rb") as fh:
            (n,) = struct.unpack("<I", fh.read(4))
            amps = np.frombuffer(fh.read(), dtype="<c16")
        return cls(n, amps)


@dataclass(frozen=True, eq=False)
class GroundStateResult:
    energy: float
    state: StateVector
    residual: float
    degenerate: bool = False
    gap: float = float("nan")


def _check(o: Observable, psi: StateVector):
    if o.n_qubits != psi.n_qubits:
        raise DimensionError(f"observable on {o.n_qubits} qubits, state on {psi.n_qubits}")


def expectation(o: Observable, psi: StateVector) -> float:
    _check(o, psi)
    val = np.vdot(psi.amplitudes, o.apply(psi.amplitudes))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise DomainError(f"expectation has imaginary part {val.imag:.3e}; observable not Hermitian?")
    return float(val.real)


def ground_state(
    h: Observable, tol: float = 1e-9, *, max_qubits: int = QUBIT_CAP, dense_limit: int = DENSE_QUBIT_LIMIT
) -> GroundStateResult:
    """Lowest eigenpair of ``h``.

    Up to ``dense_limit`` qubits the dense matrix is diagonalized; beyond that ARPACK's
    implicitly restarted Lanczos runs on the matrix-free operator from a fixed seeded start
    vector, so repeated calls return the same vector even in a degenerate ground space.
    """
    if h.n_qubits > max_qubits:
        raise DomainError(f"{h.n_qubits} qubits exceeds the solver cap of {max_qubits}")
    if h.n_qubits <= dense_limit:
        vals, vecs = np.linalg.eigh(h.to_dense())
        energy, vec = float(vals[0]), vecs[:, 0]
        gap = float(vals[1] - vals[0]) if vals.size > 1 else float("inf")
    else:
        from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

        op = LinearOperator((h.dim, h.dim), matvec=h.apply, dtype=complex)
        v0 = np.random.default_rng(12345).standard_normal(h.dim).astype(complex)
        try:
            vals, vecs = eigsh(op, k=2, which="SA", tol=0, v0=v0, maxiter=50 * h.dim)
        except ArpackNoConvergence as exc:
            raise ConvergenceError("Lanczos did not converge", residual=float("nan")) from None
        order = np.argsort(vals)
        energy, vec = float(vals[order[0]]), vecs[:, order[0]]
        gap = float(vals[order[1]] - vals[order[0]])
    state = StateVector(h.n_qubits, vec)
    residual = float(np.linalg.norm(h.apply(state.amplitudes) - energy * state.amplitudes))
    if residual > tol:
        raise ConvergenceError(f"ground-state residual {residual:.3e} exceeds tol {tol:.1e}", residual=residual)
    degenerate = gap < DEGENERACY_GAP
    if degenerate:
        warnings.warn(f"ground space is degenerate (gap {gap:.2e}); returning one vector", stacklevel=2)
    return GroundStateResult(energy, state, residual, degenerate, gap)


def basis_probabilities(psi: StateVector, prune: float = PRUNE_THRESHOLD) -> dict[int, float]:
    probs = psi.probabilities()
    keep = np.flatnonzero(probs > prune)
    return {int(n): float(probs[n]) for n in keep}


def ab_probabilities(psi: StateVector, m: int, n: int) -> tuple[float, float]:
    """Outcome-0 probabilities of the two interference circuits for the pair ``(m, n)``.

    ``A = |(<m| + <n|)psi|^2 / 2`` and ``B = |(<m| + i<n|)psi|^2 / 2``, so that
    ``A + iB - (1+i)(f_m + f_n)/2 = <m|psi><psi|n>``.
    """
    if m == n:
        raise DomainError("interference probabilities need two distinct labels")
    for label in (m, n):
        if not 0 <= label < psi.dim:
            raise DomainError(f"basis label {label} out of range")
    am, an = psi.amplitudes[m], psi.amplitudes[n]
    a = abs(am + an) ** 2 / 2
    b = abs(am + 1j * an) ** 2 / 2
    return float(min(a, 1.0)), float(min(b, 1.0))
