"""Exact-diagonalization references (CASCI / FCI) and dense Pauli matrices.

The sector solver works directly on Slater determinants: fermionic terms are
applied to occupation bitstrings with explicit sign counting, so it shares no
code path with the qubit encodings it is used to check.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .encoding.pauli import PauliSum
from .fermion import FermionOperator
from .simulator import GuardrailError

MAX_ACTIVE_SPIN_ORBITALS = 16
MAX_DENSE_QUBITS = 12
DENSE_SOLVER_LIMIT = 2000

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: tuple[float, ...]
    ground_energy_total: float
    dimension: int
    method: str  # "dense" or "iterative"


def sector_determinants(n_spin_orbitals: int, n_up: int, n_down: int) -> np.ndarray:
    """Sorted occupation bitstrings with ``n_up`` even and ``n_down`` odd modes set."""
    n_spatial = n_spin_orbitals // 2
    if not (0 <= n_up <= n_spatial and 0 <= n_down <= n_spatial):
        return np.zeros(0, dtype=np.int64)
    ups = [sum(1 << (2 * p) for p in c) for c in combinations(range(n_spatial), n_up)]
    downs = [sum(1 << (2 * p + 1) for p in c) for c in combinations(range(n_spatial), n_down)]
    dets = np.array([u | d for u in ups for d in downs], dtype=np.int64)
    return np.sort(dets)


def _parity_below(dets: np.ndarray, mode: int) -> np.ndarray:
    below = dets & ((1 << mode) - 1)
    return np.bitwise_count(below.astype(np.uint64)).astype(np.int64) & 1


def sector_matrix(op: FermionOperator, dets: np.ndarray) -> sp.csr_matrix:
    """Matrix of ``op`` on the span of the given determinants (must be closed under ``op``)."""
    dim = len(dets)
    rows, cols, vals = [], [], []
    ar = np.arange(dim)
    for term, coeff in op.terms.items():
        cur = dets.copy()
        sign = np.ones(dim)
        alive = np.ones(dim, dtype=bool)
        for mode, dag in reversed(term):
            bit = (cur >> mode) & 1
            alive &= bit == (0 if dag else 1)
            sign *= 1 - 2 * _parity_below(cur, mode)
            cur = cur ^ (1 << mode)
        if not alive.any():
            continue
        src, tgt, s = ar[alive], cur[alive], sign[alive]
        pos = np.searchsorted(dets, tgt)
        pos = np.minimum(pos, dim - 1)
        inside = dets[pos] == tgt
        if not inside.all():
            raise ValueError("operator leaves the determinant sector (not number/spin conserving)")
        rows.append(pos)
        cols.append(src)
        vals.append(coeff * s)
    if not rows:
        return sp.csr_matrix((dim, dim))
    m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
    m.sum_duplicates()
    return m


def lowest_eigenvalues(m, k: int = 1, method: str | None = None) -> tuple[np.ndarray, str]:
    dim = m.shape[0]
    if method is None:
        method = "dense" if dim <= DENSE_SOLVER_LIMIT else "iterative"
    if method == "dense" or dim <= k + 1:
        dense = m.toarray() if sp.issparse(m) else np.asarray(m)
        if np.allclose(dense.imag, 0.0):
            dense = dense.real
        return np.linalg.eigvalsh(dense)[:k], "dense"
    mat = m.real if np.allclose(m.imag.data if sp.issparse(m) else m.imag, 0.0) else m
    vals = eigsh(mat, k=k, which="SA", tol=1e-12, maxiter=100_000, return_eigenvectors=False)
    return np.sort(vals), "iterative"


def casci_ground(
    op: FermionOperator,
    n_active_electrons: int,
    spin_2ms: int = 0,
    core_shift: float = 0.0,
    n_roots: int = 1,
    method: str | None = None,
) -> SpectrumResult:
    """Lowest eigenvalue(s) in the fixed particle-number / spin-projection sector.

    ``method``: ``None`` picks dense below dimension 2000 and restarted
    Lanczos above; ``"dense"`` or ``"iterative"`` forces one; ``"full"``
    diagonalizes the Jordan-Wigner matrix on all 2^n states and filters the
    sector afterwards.
    """
    n = op.n_spin_orbitals
    if n > MAX_ACTIVE_SPIN_ORBITALS:
        raise GuardrailError(f"{n} spin orbitals exceed the CASCI limit of {MAX_ACTIVE_SPIN_ORBITALS}")
    if (n_active_electrons + spin_2ms) % 2:
        raise ValueError(f"MS2={spin_2ms} is incompatible with {n_active_electrons} electrons")
    n_up, n_down = (n_active_electrons + spin_2ms) // 2, (n_active_electrons - spin_2ms) // 2
    if method == "full":
        return _full_space_ground(op, n_up, n_down, core_shift, n_roots)
    dets = sector_determinants(n, n_up, n_down)
    if len(dets) == 0:
        raise ValueError(f"empty sector: {n_up} up / {n_down} down electrons in {n // 2} orbitals")
    m = sector_matrix(op, dets)
    vals, used = lowest_eigenvalues(m, min(n_roots, len(dets)), method)
    vals = tuple(float(v) for v in vals)
    return SpectrumResult(vals, vals[0] + core_shift, len(dets), used)


def _full_space_ground(op, n_up, n_down, core_shift, n_roots) -> SpectrumResult:
    from .encoding.mappings import map_to_qubits

    n = op.n_spin_orbitals
    h = dense_matrix(map_to_qubits(op, "jw"))
    idx = np.arange(1 << n)
    ups = sum(((idx >> (2 * p)) & 1) for p in range(n // 2))
    downs = sum(((idx >> (2 * p + 1)) & 1) for p in range(n // 2))
    sel = np.flatnonzero((ups == n_up) & (downs == n_down))
    vals = np.linalg.eigvalsh(h[np.ix_(sel, sel)])[:n_roots]
    vals = tuple(float(v) for v in vals)
    return SpectrumResult(vals, vals[0] + core_shift, len(sel), "dense")


def dense_matrix(obs: PauliSum) -> np.ndarray:
    """Dense 2^n matrix built from single-qubit Pauli matrices (real dtype when possible)."""
    n = obs.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise GuardrailError(f"{n} qubits exceed the dense-matrix limit of {MAX_DENSE_QUBITS}")
    dim = 1 << n
    idx = np.arange(dim)
    bits = [(idx >> q) & 1 for q in range(n)]
    out = np.zeros((dim, dim), dtype=complex)
    out[idx, idx] += obs.constant
    for s, c in obs.terms.items():
        label = s.label
        # each Pauli matrix has one non-zero per column: column b -> row r, value v
        row = np.zeros(dim, dtype=np.int64)
        val = np.full(dim, c, dtype=complex)
        for q in range(n):
            m = _PAULI[label[q]]
            r = np.argmax(np.abs(m), axis=0)
            row |= r[bits[q]] << q
            val *= m[r[bits[q]], bits[q]]
        out[row, idx] += val
    if np.allclose(out.imag, 0.0, atol=1e-14):
        return out.real.copy()
    return out
