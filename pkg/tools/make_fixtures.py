"""Regenerate the molecular Hamiltonian fixtures under tests/fixtures/.

Requires pyscf (not a package dependency). Spin orbitals are interleaved
(alpha0, beta0, alpha1, beta1, ...) and mapped to qubits with Jordan-Wigner,
qubit p <-> spin orbital p, parity strings on lower-indexed qubits.

    python tools/make_fixtures.py [--out tests/fixtures]
"""

import argparse
import json
from collections import defaultdict
from pathlib import Path

import numpy as np
from pyscf import ao2mo, gto, scf

GEOMETRIES = {
    "h2": [("H", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, 0.735))],
    "lih": [("Li", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, 1.548))],
}

CUTOFF = 1e-10


def _mul(a, b):
    """Product of two Pauli operators stored as (x, z, phase) with value i^phase X^x Z^z."""
    xa, za, pa = a
    xb, zb, pb = b
    sign = 2 * (bin(za & xb).count("1") % 2)
    return xa ^ xb, za ^ zb, (pa + pb + sign) % 4


def _ladder(j, dagger):
    # a_j^(dag) = Z_<j (X_j +/- i Y_j)/2 with Y = i X Z
    zs = (1 << j) - 1
    bit = 1 << j
    x_part = (bit, zs, 0)
    # i*Y_j Z_<j = i * i X_j Z_j Z_<j = -X_j Z_j Z_<j
    y_part = (bit, zs | bit, 2)
    sgn = -1 if dagger else 1
    # (X + sgn*iY)/2: the iY contribution is sgn * (-1) * X Z
    return [(x_part, 0.5), (y_part, 0.5 * sgn)]


def _product(ops):
    acc = {(0, 0, 0): 1.0 + 0j}
    for j, dagger in ops:
        nxt = defaultdict(complex)
        for key, c in acc.items():
            for op, d in _ladder(j, dagger):
                nxt[_mul(key, op)] += c * d
        acc = nxt
    return acc


def _accumulate(table, ops, coeff):
    for (x, z, phase), c in _product(ops).items():
        # i^phase X^x Z^z = i^(phase - |x&z|) * (hermitian Pauli string)
        k = (phase - bin(x & z).count("1")) % 4
        table[(x, z)] += coeff * c * (1j ** k)


def _pauli_text(x, z, n):
    tokens = []
    for s in range(n):
        bx, bz = (x >> s) & 1, (z >> s) & 1
        if bx or bz:
            tokens.append({(1, 0): "X", (0, 1): "Z", (1, 1): "Y"}[(bx, bz)] + str(s))
    return " ".join(tokens)


def build(name):
    mol = gto.M(atom=GEOMETRIES[name], basis="sto-3g", symmetry=True, unit="Angstrom")
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    c = mf.mo_coeff
    h1 = c.T @ mf.get_hcore() @ c
    norb = h1.shape[0]
    eri = ao2mo.restore(1, ao2mo.kernel(mol, c), norb)  # chemist (pq|rs)
    n = 2 * norb

    table = defaultdict(complex)
    table[(0, 0)] += mol.energy_nuc()
    for p in range(norb):
        for q in range(norb):
            if abs(h1[p, q]) < CUTOFF:
                continue
            for s in range(2):
                _accumulate(table, [(2 * p + s, True), (2 * q + s, False)], h1[p, q])
    for p in range(norb):
        for q in range(norb):
            for r in range(norb):
                for t in range(norb):
                    v = eri[p, q, r, t]
                    if abs(v) < CUTOFF:
                        continue
                    for s1 in range(2):
                        for s2 in range(2):
                            P, Q, R, T = 2 * p + s1, 2 * q + s1, 2 * r + s2, 2 * t + s2
                            if P == R or Q == T:
                                continue
                            # 1/2 (pq|rt) a+_P a+_R a_T a_Q
                            _accumulate(table, [(P, True), (R, True), (T, False), (Q, False)], 0.5 * v)

    terms = []
    for (x, z), coeff in sorted(table.items(), key=lambda kv: (bin(kv[0][0] | kv[0][1]).count("1"), kv[0])):
        if abs(coeff) < 1e-8:
            continue
        assert abs(coeff.imag) < 1e-10, coeff
        terms.append({"coeff": float(coeff.real), "pauli": _pauli_text(x, z, n)})
    return {"n_qubits": n, "terms": terms}, mf.e_tot


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures"))
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in GEOMETRIES:
        data, e_hf = build(name)
        (out / f"{name}.json").write_text(json.dumps(data, indent=1) + "\n")
        print(f"{name}: {data['n_qubits']} qubits, {len(data['terms'])} terms, E_HF={e_hf:.10f}")


if __name__ == "__main__":
    main()
