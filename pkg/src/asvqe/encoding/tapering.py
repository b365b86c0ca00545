"""Two-qubit reduction of parity-encoded Hamiltonians.

With interleaved spin ordering (mode 2p = p up, 2p+1 = p down) the parity
encoding exposes two Z-type symmetries:

* total particle parity, ``Z_{n-1}``;
* spin-up parity, ``Z_0 Z_1 ... Z_{n-2}``.

Each generator ``tau`` is paired with a qubit ``q`` it alone acts on, and the
Clifford ``U = (X_q + tau)/sqrt(2)`` turns ``tau`` into ``X_q``.  After the
rotation every term is I or X on ``q``, which is then replaced by the sector
eigenvalue and dropped.  The same transformation applies to ansatz generators
and reference states so a whole VQE can run on the reduced register.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliString, PauliSum, _product_arrays, _PHASES, popcount

__all__ = ["TaperingError", "Z2Tapering", "parity_symmetries", "two_qubit_reduction"]


class TaperingError(ValueError):
    pass


def parity_symmetries(n_qubits: int) -> list[PauliString]:
    full = (1 << n_qubits) - 1
    return [PauliString(n_qubits, 0, 1 << (n_qubits - 1)), PauliString(n_qubits, 0, full >> 1)]


@dataclass(frozen=True)
class Z2Tapering:
    n_qubits: int
    generators: tuple[PauliString, ...]
    qubits: tuple[int, ...]
    signs: tuple[int, ...]

    @classmethod
    def for_parity(cls, n_qubits: int, n_electrons: int, spin_2ms: int = 0) -> Z2Tapering:
        if n_qubits < 3:
            raise TaperingError("two-qubit reduction needs at least 3 qubits")
        if (n_electrons + spin_2ms) % 2:
            raise TaperingError(f"MS2={spin_2ms} is incompatible with {n_electrons} electrons")
        n_up = (n_electrons + spin_2ms) // 2
        signs = (-1 if n_electrons % 2 else 1, -1 if n_up % 2 else 1)
        return cls(n_qubits, tuple(parity_symmetries(n_qubits)), (n_qubits - 1, n_qubits - 2), signs)

    @property
    def kept_qubits(self) -> list[int]:
        return [q for q in range(self.n_qubits) if q not in self.qubits]

    def check(self, op: PauliSum) -> None:
        for g in self.generators:
            if not op.commutes_with(g):
                raise TaperingError(
                    f"operator does not commute with symmetry {g.label}; two-qubit reduction "
                    "needs a parity-encoded, particle- and spin-conserving operator"
                )

    def _rotate(self, x, z, c):
        for g, q, s in zip(self.generators, self.qubits, self.signs):
            bit = np.uint64(1 << q)
            anti = (z & bit) != 0  # Z or Y on q: anticommutes with X_q
            if anti.any():
                # U P U = -P X_q tau for P anticommuting with X_q
                xa, za, ka = _product_arrays(x[anti], z[anti], bit, np.uint64(0))
                xb, zb, kb = _product_arrays(xa, za, np.uint64(g.x), np.uint64(g.z))
                c = c.astype(complex)
                c[anti] = -c[anti] * np.take(np.array(_PHASES), (ka + kb) % 4)
                x = x.copy()
                z = z.copy()
                x[anti], z[anti] = xb, zb
            if np.any((z & bit) != 0):
                raise TaperingError(f"term left with Z/Y on tapered qubit {q}")
            on = (x & bit) != 0
            c = np.where(on, c * s, c)
            x = x & ~bit
        return x, z, c

    def _compress(self, m: np.ndarray) -> np.ndarray:
        out = np.zeros_like(m)
        for new, old in enumerate(self.kept_qubits):
            out |= ((m >> np.uint64(old)) & np.uint64(1)) << np.uint64(new)
        return out

    def taper(self, op: PauliSum, check: bool = True) -> PauliSum:
        if op.n_qubits != self.n_qubits:
            raise TaperingError(f"expected {self.n_qubits} qubits, got {op.n_qubits}")
        if check:
            self.check(op)
        x, z, c = self._rotate(op.x.copy(), op.z.copy(), op.coeffs.astype(complex))
        return PauliSum(self.n_qubits - len(self.qubits), self._compress(x), self._compress(z), c,
                        constant=op.constant)

    def taper_string(self, s: PauliString) -> tuple[PauliString, float]:
        """Tapered image of one symmetric string as ``(string, sign)``."""
        out = self.taper(PauliSum(self.n_qubits, [s.x], [s.z], [1.0]), check=False)
        if len(out) == 0:
            return PauliString(out.n_qubits), out.constant
        (p, c), = out.terms.items()
        return p, c

    def taper_basis_state(self, bits: int) -> int:
        """Reduced bitstring of a computational basis state lying in the chosen sector."""
        for g, s in zip(self.generators, self.signs):
            if (-1) ** int(popcount(np.uint64(bits) & np.uint64(g.z))) != s:
                raise TaperingError(f"basis state {bits:b} is outside the tapered sector")
        return int(self._compress(np.array([bits], dtype=np.uint64))[0])


def two_qubit_reduction(op: PauliSum, n_active_electrons: int, spin_2ms: int = 0) -> PauliSum:
    """Remove two qubits from a parity-encoded Hamiltonian, keeping the electron-count sector."""
    return Z2Tapering.for_parity(op.n_qubits, n_active_electrons, spin_2ms).taper(op)
