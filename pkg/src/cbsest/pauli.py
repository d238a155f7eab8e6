"""Pauli strings, real-coefficient observables and their computational-basis matrix elements.

Pauli strings are stored in symplectic form: qubit ``s`` carries an X component iff
bit ``s`` of ``x_mask`` is set and a Z component iff bit ``s`` of ``z_mask`` is set
(I=00, X=10, Z=01, Y=11). Basis labels follow the same convention: bit ``s`` of the
integer label is the state of qubit ``s``.

For a string with masks (x, z) acting on basis state ``|n>``::

    P|n> = i^{|x & z|} (-1)^{|z & n|} |n ^ x>

which is all the transition-element code below relies on.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ConvergenceError, DimensionError, DomainError, ParseError

_TOKEN = re.compile(r"^([XYZ])(\d+)$")
_LETTER_BITS = {"X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_I_POWERS = (1, 1j, -1, -1j)

DROP_TOLERANCE = 1e-14
DENSE_QUBIT_LIMIT = 10
QUBIT_CAP = 16


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Paulis in symplectic bitmask form."""

    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DimensionError(f"n_qubits must be positive, got {self.n_qubits}")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise DimensionError("mask has bits set beyond n_qubits")

    @classmethod
    def from_text(cls, text: str, n_qubits: int) -> PauliString:
        """Parse ``"X0 Y2 Z3"``; the empty string is the identity."""
        x = z = 0
        seen = set()
        for token in text.split():
            match = _TOKEN.match(token)
            if match is None:
                raise ParseError(f"malformed Pauli token {token!r}")
            qubit = int(match.group(2))
            if qubit >= n_qubits:
                raise ParseError(f"qubit index {qubit} out of range for {n_qubits} qubits")
            if qubit in seen:
                raise ParseError(f"duplicate qubit index {qubit} in {text!r}")
            seen.add(qubit)
            bx, bz = _LETTER_BITS[match.group(1)]
            x |= bx << qubit
            z |= bz << qubit
        return cls(n_qubits, x, z)

    @classmethod
    def from_letters(cls, letters: str) -> PauliString:
        """Build from a dense letter string; character ``s`` is qubit ``s`` (``"XIZ"``)."""
        x = z = 0
        for s, ch in enumerate(letters):
            if ch == "I":
                continue
            if ch not in _LETTER_BITS:
                raise ParseError(f"unknown Pauli letter {ch!r}")
            bx, bz = _LETTER_BITS[ch]
            x |= bx << s
            z |= bz << s
        return cls(len(letters), x, z)

    def letter(self, qubit: int) -> str:
        return _BITS_LETTER[((self.x_mask >> qubit) & 1, (self.z_mask >> qubit) & 1)]

    @property
    def letters(self) -> str:
        return "".join(self.letter(s) for s in range(self.n_qubits))

    @property
    def support(self) -> int:
        return self.x_mask | self.z_mask

    @property
    def weight(self) -> int:
        return self.support.bit_count()

    @property
    def is_identity(self) -> bool:
        return self.support == 0

    @property
    def is_diagonal(self) -> bool:
        return self.x_mask == 0

    @property
    def y_count(self) -> int:
        return (self.x_mask & self.z_mask).bit_count()

    def __str__(self) -> str:
        return " ".join(
            f"{self.letter(s)}{s}" for s in range(self.n_qubits) if (self.support >> s) & 1
        )


@dataclass(frozen=True)
class PauliTerm:
    coeff: float
    string: PauliString

    def __post_init__(self):
        if isinstance(self.coeff, complex) or not math.isfinite(self.coeff):
            raise ParseError(f"coefficient must be a finite real number, got {self.coeff!r}")
        object.__setattr__(self, "coeff", float(self.coeff))


@dataclass(frozen=True)
class Observable:
    """Hermitian operator ``sum_i c_i P_i`` with real coefficients.

    Terms sharing a Pauli string are merged by adding coefficients (first occurrence
    fixes the position) and merged terms with ``|c| < 1e-14`` are dropped.
    """

    n_qubits: int
    terms: tuple[PauliTerm, ...] = field(default=())

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DimensionError(f"n_qubits must be positive, got {self.n_qubits}")
        merged: dict[tuple[int, int], float] = {}
        strings: dict[tuple[int, int], PauliString] = {}
        for term in self.terms:
            if term.string.n_qubits != self.n_qubits:
                raise DimensionError(
                    f"term {term.string} has {term.string.n_qubits} qubits, expected {self.n_qubits}"
                )
            key = (term.string.x_mask, term.string.z_mask)
            merged[key] = merged.get(key, 0.0) + term.coeff
            strings.setdefault(key, term.string)
        kept = tuple(
            PauliTerm(c, strings[key]) for key, c in merged.items() if abs(c) >= DROP_TOLERANCE
        )
        object.__setattr__(self, "terms", kept)

    @classmethod
    def from_pairs(cls, n_qubits: int, pairs: Iterable[tuple[float, str]]) -> Observable:
        """Convenience constructor from ``(coeff, "X0 Z1")`` pairs."""
        return cls(n_qubits, tuple(PauliTerm(c, PauliString.from_text(t, n_qubits)) for c, t in pairs))

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms], dtype=float)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def identity_offset(self) -> float:
        return sum(t.coeff for t in self.terms if t.string.is_identity)

    def scaled(self, factor: float) -> Observable:
        return Observable(self.n_qubits, tuple(PauliTerm(factor * t.coeff, t.string) for t in self.terms))

    def subset(self, indices: Sequence[int]) -> Observable:
        return Observable(self.n_qubits, tuple(self.terms[i] for i in indices))

    @cached_property
    def blocks(self) -> tuple[tuple[int, np.ndarray], ...]:
        """Terms collected by X mask: ``(x, d)`` with ``O|n> = sum_x d[n] |n ^ x>``."""
        idx = np.arange(self.dim, dtype=np.int64)
        acc: dict[int, np.ndarray] = {}
        for term in self.terms:
            p = term.string
            sign = 1.0 - 2.0 * (np.bitwise_count(idx & p.z_mask) & 1)
            contrib = term.coeff * _I_POWERS[p.y_count % 4] * sign
            if p.x_mask in acc:
                acc[p.x_mask] = acc[p.x_mask] + contrib
            else:
                acc[p.x_mask] = contrib.astype(complex)
        for d in acc.values():
            d.flags.writeable = False
        return tuple(sorted(acc.items()))

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Matrix-free ``O @ vec`` for a length-``2^N`` vector."""
        vec = np.asarray(vec)
        if vec.shape != (self.dim,):
            raise DimensionError(f"vector of shape {vec.shape} does not match {self.n_qubits} qubits")
        idx = np.arange(self.dim, dtype=np.int64)
        out = np.zeros(self.dim, dtype=complex)
        for x, d in self.blocks:
            prod = d * vec
            out += prod if x == 0 else prod[idx ^ x]
        return out

    def to_dense(self) -> np.ndarray:
        idx = np.arange(self.dim, dtype=np.int64)
        mat = np.zeros((self.dim, self.dim), dtype=complex)
        for x, d in self.blocks:
            mat[idx ^ x, idx] += d
        return mat

    def to_json(self) -> str:
        return json.dumps(
            {"n_qubits": self.n_qubits, "terms": [{"coeff": t.coeff, "pauli": str(t.string)} for t in self.terms]}
        )


def parse_observable(text_or_json: bytes | str) -> Observable:
    """Parse the JSON observable format ``{"n_qubits": N, "terms": [{"coeff": c, "pauli": "X0 Z1"}]}``."""
    if isinstance(text_or_json, bytes):
        try:
            text_or_json = text_or_json.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    try:
        data = json.loads(text_or_json)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict) or "n_qubits" not in data or "terms" not in data:
        raise ParseError('expected an object with "n_qubits" and "terms"')
    n = data["n_qubits"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ParseError(f"n_qubits must be a positive integer, got {n!r}")
    if not isinstance(data["terms"], list):
        raise ParseError('"terms" must be an array')
    terms = []
    for k, raw in enumerate(data["terms"]):
        if not isinstance(raw, dict) or "coeff" not in raw or "pauli" not in raw:
            raise ParseError(f'term {k}: expected object with "coeff" and "pauli"')
        coeff = raw["coeff"]
        if isinstance(coeff, bool) or not isinstance(coeff, (int, float)) or not math.isfinite(coeff):
            raise ParseError(f"term {k}: coefficient must be a finite real number, got {coeff!r}")
        if not isinstance(raw["pauli"], str):
            raise ParseError(f"term {k}: pauli must be a string")
        try:
            string = PauliString.from_text(raw["pauli"], n)
        except ParseError as exc:
            raise ParseError(f"term {k}: {exc}") from None
        terms.append(PauliTerm(float(coeff), string))
    return Observable(n, tuple(terms))


def load_observable(path) -> Observable:
    with open(path, "rb") as fh:
        return parse_observable(fh.read())


def _check_pair(p: PauliString, q: PauliString):
    if p.n_qubits != q.n_qubits:
        raise DimensionError(f"Pauli strings act on {p.n_qubits} and {q.n_qubits} qubits")


def qubit_wise_commutes(p: PauliString, q: PauliString) -> bool:
    _check_pair(p, q)
    clash = p.support & q.support & ((p.x_mask ^ q.x_mask) | (p.z_mask ^ q.z_mask))
    return clash == 0


def generally_commutes(p: PauliString, q: PauliString) -> bool:
    _check_pair(p, q)
    return ((p.x_mask & q.z_mask) ^ (p.z_mask & q.x_mask)).bit_count() % 2 == 0


def _check_label(label: int, n_qubits: int):
    if not 0 <= label < (1 << n_qubits):
        raise DomainError(f"basis label {label} out of range for {n_qubits} qubits")


def pauli_transition(m: int, p: PauliString, n: int) -> complex:
    """``<m|P|n>``; nonzero only when ``m == n ^ x_mask``."""
    _check_label(m, p.n_qubits)
    _check_label(n, p.n_qubits)
    if m != n ^ p.x_mask:
        return 0j
    sign = -1 if (p.z_mask & n).bit_count() & 1 else 1
    return sign * _I_POWERS[p.y_count % 4] * (1 + 0j)


def observable_transition(m: int, o: Observable, n: int) -> complex:
    """``<m|O|n>`` summed term by term in O(M N)."""
    _check_label(m, o.n_qubits)
    _check_label(n, o.n_qubits)
    flip = m ^ n
    total = 0j
    for term in o.terms:
        p = term.string
        if p.x_mask != flip:
            continue
        sign = -1 if (p.z_mask & n).bit_count() & 1 else 1
        total += term.coeff * sign * _I_POWERS[p.y_count % 4]
    if m == n:
        total = complex(total.real, 0.0)
    return total


def transition_matrix(o: Observable, labels: Sequence[int]) -> np.ndarray:
    """Matrix of ``<z_r|O|z_r'>`` over the given labels."""
    labels = list(labels)
    mat = np.empty((len(labels), len(labels)), dtype=complex)
    for r, m in enumerate(labels):
        for rp in range(r, len(labels)):
            val = observable_transition(m, o, labels[rp])
            mat[r, rp] = val
            mat[rp, r] = np.conj(val)
    return mat


def operator_inf_norm(o: Observable, *, max_qubits: int = QUBIT_CAP, tol: float = 1e-8) -> float:
    """Largest absolute eigenvalue of ``O``.

    Dense diagonalization up to 10 qubits, ARPACK Lanczos on the matrix-free operator above.
    """
    if o.n_qubits > max_qubits:
        raise DomainError(f"{o.n_qubits} qubits exceeds the limit of {max_qubits}")
    if not o.terms:
        return 0.0
    if o.n_qubits <= DENSE_QUBIT_LIMIT:
        return float(np.max(np.abs(np.linalg.eigvalsh(o.to_dense()))))
    from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

    op = LinearOperator((o.dim, o.dim), matvec=o.apply, dtype=complex)
    v0 = np.random.default_rng(0).standard_normal(o.dim).astype(complex)
    ends = []
    for which in ("LA", "SA"):
        try:
            ends.append(eigsh(op, k=1, which=which, tol=tol, v0=v0, maxiter=20 * o.dim, return_eigenvectors=False)[0])
        except ArpackNoConvergence as exc:
            vals = np.asarray(exc.eigenvalues).real
            interval = (float(vals.min()), float(vals.max())) if vals.size else None
            raise ConvergenceError("norm iteration did not converge", interval=interval) from None
    return float(max(abs(ends[0].real), abs(ends[1].real)))
