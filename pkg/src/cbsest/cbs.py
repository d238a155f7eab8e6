"""Truncated computational-basis-sampling estimator.

The state is truncated to its ``R`` heaviest basis states ``z_1..z_R`` and the
expectation value is assembled as

    <O> ~= N_R^2 * sum_{r,r'} f_r f_r' <z_r|O|z_r'> / G(r, r')

where ``f_r`` are single weights, ``G(r, r') ~= <z_r|psi><psi|z_r'>`` are interference
factors rebuilt from the anchor ``z_1`` (``G(0, r) = g_r``, ``G(r, r') = g_r* g_r' / f_1``),
and ``N_R^2 = 1 / sum_r f_r``. Indices in this module are 0-based: position 0 is the anchor.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import (
    DegenerateAnchorError,
    DimensionError,
    DomainError,
    EmptySupportError,
    IllConditionedFactorError,
    InfeasibleTruncationError,
)
from .pauli import Observable, operator_inf_norm, transition_matrix
from .state import StateVector, ab_probabilities

ANCHOR_GUARD = 1e-12
FACTOR_GUARD = 1e-14


@dataclass(frozen=True, eq=False)
class TruncationResult:
    labels: tuple[int, ...]
    weights: np.ndarray
    norm_factor: float
    infidelity: float

    @classmethod
    def from_weights(cls, labels, weights) -> TruncationResult:
        weights = np.asarray(weights, dtype=float)
        weights.flags.writeable = False
        mass = float(math.fsum(weights))
        return cls(tuple(int(z) for z in labels), weights, 1.0 / math.sqrt(mass), min(max(1.0 - mass, 0.0), 1.0))

    @property
    def R(self) -> int:
        return len(self.labels)

    def to_json(self) -> str:
        return json.dumps(
            {"labels": list(self.labels), "weights": [float(w) for w in self.weights], "infidelity": self.infidelity}
        )


def _ranked(probs: Mapping[int, float]) -> list[tuple[int, float]]:
    items = [(int(z), float(p)) for z, p in probs.items() if p > 0]
    items.sort(key=lambda item: (-item[1], item[0]))
    return items


def truncate(probs: Mapping[int, float], epsilon: float) -> TruncationResult:
    """Keep the fewest heaviest labels whose missing mass is at most ``epsilon``."""
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    total = math.fsum(probs.values())
    if total > 1 + 1e-9:
        raise DomainError(f"probabilities sum to {total}, more than 1")
    ranked = _ranked(probs)
    mass = 0.0
    for count, (_, p) in enumerate(ranked, start=1):
        mass += p
        if 1.0 - mass <= epsilon:
            return TruncationResult.from_weights([z for z, _ in ranked[:count]], [w for _, w in ranked[:count]])
    raise InfeasibleTruncationError(f"total mass {total:.6g} cannot reach infidelity {epsilon:g}")


def truncate_to(probs: Mapping[int, float], r: int) -> TruncationResult:
    """Keep exactly the ``r`` heaviest labels."""
    ranked = _ranked(probs)
    if not 1 <= r <= len(ranked):
        raise DomainError(f"R={r} outside 1..{len(ranked)}")
    return TruncationResult.from_weights([z for z, _ in ranked[:r]], [w for _, w in ranked[:r]])


def truncated_state(psi: StateVector, trunc: TruncationResult) -> StateVector:
    """The normalized state ``|psi_R>`` restricted to the kept labels."""
    amps = np.zeros(psi.dim, dtype=complex)
    idx = list(trunc.labels)
    amps[idx] = psi.amplitudes[idx]
    return StateVector(psi.n_qubits, amps)


def renormalized(psi: StateVector, trunc: TruncationResult) -> tuple[TruncationResult, InterferenceSet]:
    """Weights and interference factors of ``|psi_R>`` itself, so that ``N_R = 1``.

    This is the input the closed-form variances expect; the weights of ``trunc`` are
    replaced by those of the renormalized state and the infidelity is carried over.
    """
    psi_r = truncated_state(psi, trunc)
    weights = psi_r.probabilities()[list(trunc.labels)]
    weights.flags.writeable = False
    new = TruncationResult(trunc.labels, weights, 1.0, trunc.infidelity)
    return new, interference_set(psi_r, new)


@dataclass(frozen=True, eq=False)
class InterferenceSet:
    """Anchor interference factors ``g_r`` (r = 1..R-1) with the weights they pair with.

    ``a`` and ``b`` keep the outcome-0 probabilities the factors were built from.
    """

    weights: np.ndarray
    g: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def R(self) -> int:
        return len(self.weights)

    def G(self, r: int, rp: int) -> complex:
        f = self.weights
        if r == rp:
            return complex(f[r])
        if r == 0:
            return complex(self.g[rp - 1])
        if rp == 0:
            return complex(np.conj(self.g[r - 1]))
        return complex(np.conj(self.g[r - 1]) * self.g[rp - 1] / f[0])

    def matrix(self) -> np.ndarray:
        f = self.weights
        R = self.R
        mat = np.empty((R, R), dtype=complex)
        mat[0, 0] = f[0]
        if R > 1:
            g = self.g
            mat[0, 1:] = g
            mat[1:, 0] = np.conj(g)
            mat[1:, 1:] = np.outer(np.conj(g), g) / f[0]
        mat[np.diag_indices(R)] = f
        return mat


def interference_from_estimates(weights, a, b) -> InterferenceSet:
    """Build ``g_r = A_r + i B_r - (1+i)(f_1 + f_r)/2`` from (estimated) probabilities."""
    weights = np.asarray(weights, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (len(weights) - 1,) or b.shape != a.shape:
        raise DimensionError("need one A and one B value per non-anchor label")
    if weights[0] < ANCHOR_GUARD:
        raise DegenerateAnchorError(f"anchor weight {weights[0]:.3e} below {ANCHOR_GUARD:g}")
    g = a + 1j * b - 0.5 * (1 + 1j) * (weights[0] + weights[1:])
    for arr in (weights, g, a, b):
        arr.flags.writeable = False
    return InterferenceSet(weights, g, a, b)


def interference_set(psi: StateVector, trunc: TruncationResult) -> InterferenceSet:
    """Interference factors from the exact outcome probabilities of the anchor circuits."""
    anchor = trunc.labels[0]
    pairs = [ab_probabilities(psi, anchor, z) for z in trunc.labels[1:]]
    a = [p[0] for p in pairs]
    b = [p[1] for p in pairs]
    return interference_from_estimates(trunc.weights, a, b)


def cbs_expectation(o: Observable, trunc: TruncationResult, intf: InterferenceSet, normalize: bool = True) -> float:
    if intf.R != trunc.R:
        raise DimensionError(f"truncation has R={trunc.R}, interference set R={intf.R}")
    if max(trunc.labels) >= o.dim:
        raise DimensionError("basis labels exceed the observable's dimension")
    f = intf.weights
    omat = transition_matrix(o, trunc.labels)
    gmat = intf.matrix()
    needed = np.abs(omat) > 0
    small = needed & (np.abs(gmat) < FACTOR_GUARD)
    if small.any():
        r, rp = (int(i) for i in np.argwhere(small)[0])
        raise IllConditionedFactorError(f"interference factor G({r},{rp}) below {FACTOR_GUARD:g}", pair=(r, rp))
    terms = np.zeros_like(omat)
    terms[needed] = (np.outer(f, f)[needed] * omat[needed]) / gmat[needed]
    value = terms.sum()
    if abs(value.imag) > 1e-9 * max(1.0, abs(value.real)):
        raise IllConditionedFactorError(f"estimator has imaginary residue {value.imag:.3e}")
    scale = 1.0 / math.fsum(f) if normalize else 1.0
    return float(value.real * scale)


def truncation_bound(o: Observable, infidelity: float, *, inf_norm: float | None = None) -> float:
    """``2 ||O||_inf sqrt(infidelity)``."""
    if not 0 <= infidelity <= 1:
        raise DomainError(f"infidelity must lie in [0, 1], got {infidelity}")
    norm = operator_inf_norm(o) if inf_norm is None else inf_norm
    return 2.0 * norm * math.sqrt(infidelity)


def symmetry_filter(
    probs: Mapping[int, float], particle_number: int, n_qubits: int | None = None
) -> tuple[dict[int, float], float]:
    """Drop labels whose popcount differs from ``particle_number`` and renormalize.

    Returns the filtered map and the rejected probability mass.
    """
    if particle_number < 0 or (n_qubits is not None and particle_number > n_qubits):
        raise DomainError(f"particle number {particle_number} out of range")
    kept = {int(z): float(p) for z, p in probs.items() if int(z).bit_count() == particle_number}
    total = math.fsum(probs.values())
    kept_mass = math.fsum(kept.values())
    if kept_mass <= 0:
        raise EmptySupportError(f"no probability mass has particle number {particle_number}")
    rejected = total - kept_mass
    return {z: p / kept_mass * total for z, p in kept.items()}, rejected
