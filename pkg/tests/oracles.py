"""Reference constructions that share no code with the package."""

from __future__ import annotations

from functools import reduce

import numpy as np

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])
LETTERS = {"I": I2, "X": X, "Y": Y, "Z": Z}
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|: removes an occupation


def kron_qubits(mats):
    """Operator acting with mats[q] on qubit q; basis index bit q = qubit q."""
    return reduce(np.kron, reversed(list(mats)))


def annihilator(j: int, n: int) -> np.ndarray:
    """Jordan-Wigner a_j built from explicit Kronecker products."""
    return kron_qubits([Z] * j + [LOWER] + [I2] * (n - j - 1))


def fermion_matrix(terms: dict, n: int) -> np.ndarray:
    """Dense matrix of sum_c c * prod(ladder) in the occupation basis."""
    a = [annihilator(j, n) for j in range(n)]
    out = np.zeros((2**n, 2**n), dtype=complex)
    for term, c in terms.items():
        m = np.eye(2**n, dtype=complex)
        for mode, dag in term:
            m = m @ (a[mode].conj().T if dag else a[mode])
        out += c * m
    return out


def pauli_label_matrix(label: str) -> np.ndarray:
    return kron_qubits([LETTERS[ch] for ch in label])


def pauli_sum_matrix(terms: dict[str, complex], constant: complex = 0.0, n: int | None = None) -> np.ndarray:
    n = n if n is not None else len(next(iter(terms)))
    out = constant * np.eye(2**n, dtype=complex)
    for label, c in terms.items():
        out = out + c * pauli_label_matrix(label)
    return out


def spin_orbital_hamiltonian(h: np.ndarray, g: np.ndarray, core: float) -> dict:
    """Second-quantized terms straight from the textbook spin-orbital sums."""
    n = h.shape[0]
    terms: dict = {(): core}
    for p in range(n):
        for q in range(n):
            for s in (0, 1):
                if h[p, q]:
                    key = ((2 * p + s, 1), (2 * q + s, 0))
                    terms[key] = terms.get(key, 0.0) + h[p, q]
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for s_ in range(n):
                    v = g[p, r, q, s_]  # (pr|qs) = <pq|rs>
                    if not v:
                        continue
                    for a in (0, 1):
                        for b in (0, 1):
                            key = ((2 * p + a, 1), (2 * q + b, 1), (2 * s_ + b, 0), (2 * r + a, 0))
                            terms[key] = terms.get(key, 0.0) + 0.5 * v
    return terms


def number_operator(n: int) -> np.ndarray:
    return sum(annihilator(j, n).conj().T @ annihilator(j, n) for j in range(n))


def sz_operator(n: int) -> np.ndarray:
    return sum((0.5 if j % 2 == 0 else -0.5) * annihilator(j, n).conj().T @ annihilator(j, n) for j in range(n))


def sector_ground(m: np.ndarray, n: int, n_elec: int, two_sz: int = 0) -> float:
    """Lowest eigenvalue of m restricted to fixed N and 2*Sz (diagonal in this basis)."""
    idx = np.arange(2**n)
    occ = np.array([bin(i).count("1") for i in idx])
    up = np.array([bin(i & int("01" * n, 2)).count("1") for i in idx])  # even bits
    down = occ - up
    sel = np.flatnonzero((occ == n_elec) & (up - down == two_sz))
    return float(np.linalg.eigvalsh(m[np.ix_(sel, sel)])[0])


def random_symmetric_integrals(n: int, seed: int, scale: float = 1.0):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(n, n)) * scale
    h = (h + h.T) / 2
    g = rng.normal(size=(n, n, n, n)) * scale
    g = g + g.transpose(1, 0, 2, 3)
    g = g + g.transpose(0, 1, 3, 2)
    g = g + g.transpose(2, 3, 0, 1)
    return h, g / 8
