"""Fermion-to-qubit encodings.

Every supported scheme is a linear binary encoding: qubit bits are
``b = A n (mod 2)`` for occupation vector ``n``.  Jordan-Wigner uses the
identity, parity the lower-triangular all-ones matrix, and Bravyi-Kitaev the
Fenwick-tree matrix.  For such an ``A`` the ladder operators are

    a+_j = X_C Z_P (1 + Z_N) / 2,    a_j = X_C Z_P (1 - Z_N) / 2

where ``C`` is column ``j`` of ``A`` (bits flipped by changing ``n_j``),
``P`` the qubits whose parity gives ``sum_{k<j} n_k`` and ``N`` the qubits
whose parity gives ``n_j`` (rows of ``A^{-1}``).  Products are accumulated in
the real ``X^x Z^z`` basis and converted to Hermitian Pauli strings at the
end.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..fermion import FermionOperator
from .pauli import PRUNE_THRESHOLD, PauliSum, combine, popcount

SCHEMES = ("jw", "parity", "bk")
_ALIASES = {
    "jw": "jw", "jordan-wigner": "jw", "jordan_wigner": "jw",
    "parity": "parity",
    "bk": "bk", "bravyi-kitaev": "bk", "bravyi_kitaev": "bk",
}

__all__ = ["SCHEMES", "encode_occupation", "encoding_matrix", "map_to_qubits", "map_to_arrays", "normalize_scheme"]


def normalize_scheme(scheme: str) -> str:
    try:
        return _ALIASES[scheme.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"unsupported encoding scheme {scheme!r}; choose from {SCHEMES}") from None


@lru_cache(maxsize=None)
def encoding_matrix(n: int, scheme: str) -> np.ndarray:
    scheme = normalize_scheme(scheme)
    if scheme == "jw":
        a = np.eye(n, dtype=np.uint8)
    elif scheme == "parity":
        a = np.tril(np.ones((n, n), dtype=np.uint8))
    else:
        a = np.zeros((n, n), dtype=np.uint8)
        for i in range(n):
            low = (i + 1) & -(i + 1)
            a[i, i - low + 1: i + 1] = 1
    a.setflags(write=False)
    return a


def _gf2_inverse(a: np.ndarray) -> np.ndarray:
    n = len(a)
    m = np.concatenate([a.astype(np.uint8) % 2, np.eye(n, dtype=np.uint8)], axis=1)
    for col in range(n):
        pivot = col + int(np.flatnonzero(m[col:, col])[0])
        m[[col, pivot]] = m[[pivot, col]]
        for row in np.flatnonzero(m[:, col]):
            if row != col:
                m[row] ^= m[col]
    return m[:, n:]


def _mask(bits: np.ndarray) -> int:
    return int(sum(1 << int(q) for q in np.flatnonzero(bits)))


@lru_cache(maxsize=None)
def _ladder_tables(n: int, scheme: str):
    """Per mode: x mask, z mask without/with the occupation Z string."""
    a = encoding_matrix(n, scheme)
    ainv = _gf2_inverse(a)
    xs, z0, z1 = [], [], []
    for j in range(n):
        c = _mask(a[:, j])
        p = _mask(ainv[:j].sum(axis=0) % 2)
        nz = _mask(ainv[j])
        xs.append(c)
        z0.append(p)
        z1.append(p ^ nz)
    return (np.array(xs, dtype=np.uint64), np.array(z0, dtype=np.uint64), np.array(z1, dtype=np.uint64))


def encode_occupation(occupied_modes, n: int, scheme: str) -> int:
    """Qubit bitstring (as an int, bit q = qubit q) of an occupation-number state."""
    occ = np.zeros(n, dtype=np.uint8)
    occ[list(occupied_modes)] = 1
    bits = encoding_matrix(n, scheme).astype(np.int64) @ occ % 2
    return _mask(bits)


def _map_group(modes: np.ndarray, daggers: np.ndarray, coeffs: np.ndarray, tables):
    """Map ladder strings of equal length; returns X^x Z^z masks and complex weights."""
    xs, z0, z1 = tables
    t = len(coeffs)
    x = np.zeros((t, 1), dtype=np.uint64)
    z = np.zeros((t, 1), dtype=np.uint64)
    c = coeffs.astype(complex)[:, None]
    for pos in range(modes.shape[1]):
        j = modes[:, pos]
        ox = xs[j][:, None]
        oz = np.stack([z0[j], z1[j]], axis=1)  # (t, 2)
        sign = np.where(daggers[:, pos], 1.0, -1.0)
        oc = np.stack([np.full(t, 0.5), 0.5 * sign], axis=1)
        # (X^x Z^z)(X^ox Z^oz) = (-1)^{|z & ox|} X^{x^ox} Z^{z^oz}
        par = (1 - 2 * (popcount(z & ox) & 1)).astype(float)
        x = np.repeat(x ^ ox, 2, axis=1)
        z = (z[:, :, None] ^ oz[:, None, :]).reshape(t, -1)
        c = ((c * par)[:, :, None] * oc[:, None, :]).reshape(t, -1)
    return x.ravel(), z.ravel(), c.ravel()


def map_to_arrays(op: FermionOperator, scheme: str, chunk: int = 100_000):
    """Map to Hermitian-basis Pauli strings; returns (x, z, complex coeffs), combined."""
    scheme = normalize_scheme(scheme)
    n = op.n_spin_orbitals
    tables = _ladder_tables(n, scheme)
    groups: dict[int, list] = {}
    for term, coeff in op.terms.items():
        groups.setdefault(len(term), []).append((term, coeff))
    px, pz, pc = [np.zeros(0, np.uint64)], [np.zeros(0, np.uint64)], [np.zeros(0, complex)]
    for length, items in sorted(groups.items()):
        for start in range(0, len(items), chunk):
            block = items[start: start + chunk]
            coeffs = np.array([c for _, c in block], dtype=complex)
            if length == 0:
                px.append(np.zeros(1, np.uint64))
                pz.append(np.zeros(1, np.uint64))
                pc.append(np.array([coeffs.sum()]))
                continue
            arr = np.array([t for t, _ in block], dtype=np.int64)  # (T, length, 2)
            x, z, c = _map_group(arr[:, :, 0], arr[:, :, 1].astype(bool), coeffs, tables)
            x, z, c = combine(x, z, c)
            px.append(x)
            pz.append(z)
            pc.append(c)
    x, z, c = combine(np.concatenate(px), np.concatenate(pz), np.concatenate(pc))
    # X^x Z^z = (-i)^{|x&z|} P(x, z)
    k = popcount(x & z) % 4
    c = c * np.take(np.array([1, -1j, -1, 1j]), k)
    return x, z, c


def map_to_qubits(op: FermionOperator, scheme: str = "jw",
                  threshold: float = PRUNE_THRESHOLD) -> PauliSum:
    """Qubit Hamiltonian of a Hermitian fermionic operator (one qubit per spin orbital)."""
    x, z, c = map_to_arrays(op, scheme)
    keep = np.abs(c) >= threshold
    if keep.any() and np.max(np.abs(c[keep].imag)) > 1e-10:
        raise ValueError("mapped operator has imaginary Pauli weights; is the input Hermitian?")
    return PauliSum(op.n_spin_orbitals, x[keep], z[keep], c[keep].real, threshold=threshold)
