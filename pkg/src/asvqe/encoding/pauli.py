"""Pauli strings and sums in symplectic (x-mask, z-mask) form.

A string with masks ``(x, z)`` is ``i^{|x & z|} X^x Z^z``, so a qubit with
both bits set holds ``Y = iXZ``.  Qubit ``q`` is bit ``q`` of each mask, and
text labels list qubit 0 first: ``"XIZ"`` is ``X_0 Z_2``.

Sums keep their strings in parallel numpy arrays (uint64 masks, float
coefficients), which caps the width at 64 qubits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

PRUNE_THRESHOLD = 1e-12
MAX_QUBITS = 64

_PHASES = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


def popcount(a: np.ndarray | int) -> np.ndarray:
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


@dataclass(frozen=True, order=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if not 0 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"unsupported width {self.n_qubits}")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError(f"masks do not fit in {self.n_qubits} qubits")

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        x = z = 0
        for q, ch in enumerate(label.upper()):
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
            if ch not in "IXYZ":
                raise ValueError(f"bad Pauli letter {ch!r} in {label!r}")
        return cls(len(label), x, z)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> PauliString:
        return cls.from_label("".join(letter if q == qubit else "I" for q in range(n_qubits)))

    @property
    def label(self) -> str:
        return "".join("IXZY"[((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)] for q in range(self.n_qubits))

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def support(self) -> list[int]:
        m = self.x | self.z
        return [q for q in range(self.n_qubits) if (m >> q) & 1]

    def commutes(self, other: PauliString) -> bool:
        return (bin(self.x & other.z).count("1") + bin(self.z & other.x).count("1")) % 2 == 0

    def qubitwise_commutes(self, other: PauliString) -> bool:
        both = (self.x | self.z) & (other.x | other.z)
        return (self.x & both) == (other.x & both) and (self.z & both) == (other.z & both)

    def __mul__(self, other: PauliString) -> tuple[PauliString, complex]:
        return pauli_product(self, other)

    def __str__(self) -> str:
        return self.label


def pauli_product(a: PauliString, b: PauliString) -> tuple[PauliString, complex]:
    """Product ``a * b`` as ``(string, phase)`` with phase in {1, i, -1, -i}."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"width mismatch: {a.n_qubits} vs {b.n_qubits}")
    x, z = a.x ^ b.x, a.z ^ b.z
    k = (
        bin(a.x & a.z).count("1")
        + bin(b.x & b.z).count("1")
        - bin(x & z).count("1")
        + 2 * bin(a.z & b.x).count("1")
    )
    return PauliString(a.n_qubits, x, z), _PHASES[k % 4]


def _product_arrays(x1, z1, x2, z2):
    """Vectorized product of Pauli strings; returns masks and phase exponent (mod 4)."""
    x, z = x1 ^ x2, z1 ^ z2
    k = popcount(x1 & z1) + popcount(x2 & z2) - popcount(x & z) + 2 * popcount(z1 & x2)
    return x, z, k % 4


def combine(x: np.ndarray, z: np.ndarray, c: np.ndarray):
    """Sum coefficients of repeated strings; output sorted by (x, z)."""
    if len(c) == 0:
        return x, z, c
    order = np.lexsort((z, x))
    x, z, c = x[order], z[order], c[order]
    new = np.ones(len(x), dtype=bool)
    new[1:] = (x[1:] != x[:-1]) | (z[1:] != z[:-1])
    start = np.flatnonzero(new)
    return x[start], z[start], np.add.reduceat(c, start)


class PauliSum:
    """Real-weighted sum of Pauli strings plus a constant (the identity weight)."""

    __slots__ = ("n_qubits", "x", "z", "coeffs", "constant", "__dict__")

    def __init__(self, n_qubits: int, x=(), z=(), coeffs=(), constant: float = 0.0,
                 threshold: float = PRUNE_THRESHOLD, imag_tol: float = 1e-10):
        if not 0 <= n_qubits <= MAX_QUBITS:
            raise ValueError(f"unsupported width {n_qubits}")
        x = np.asarray(x, dtype=np.uint64)
        z = np.asarray(z, dtype=np.uint64)
        c = np.asarray(coeffs)
        if np.iscomplexobj(c):
            if len(c) and np.max(np.abs(c.imag)) > imag_tol:
                raise ValueError("Pauli sum has non-negligible imaginary coefficients")
            c = c.real
        c = c.astype(float)
        if n_qubits < MAX_QUBITS and len(x) and (int(np.max(x | z)) >> n_qubits):
            raise ValueError(f"masks do not fit in {n_qubits} qubits")
        x, z, c = combine(x, z, c)
        ident = (x == 0) & (z == 0)
        constant = float(constant) + float(c[ident].sum())
        keep = ~ident & (np.abs(c) >= threshold)
        self.n_qubits = n_qubits
        self.x, self.z, self.coeffs = x[keep], z[keep], c[keep]
        for a in (self.x, self.z, self.coeffs):
            a.setflags(write=False)
        self.constant = constant

    # construction -----------------------------------------------------------
    @classmethod
    def from_terms(cls, n_qubits: int, terms: Mapping[PauliString | str, float] | Iterable,
                   constant: float = 0.0) -> PauliSum:
        items = terms.items() if isinstance(terms, Mapping) else terms
        xs, zs, cs = [], [], []
        for s, c in items:
            if isinstance(s, str):
                s = PauliString.from_label(s)
            if s.n_qubits != n_qubits:
                raise ValueError(f"string {s} has width {s.n_qubits}, expected {n_qubits}")
            xs.append(s.x)
            zs.append(s.z)
            cs.append(c)
        return cls(n_qubits, xs, zs, cs, constant)

    @classmethod
    def identity(cls, n_qubits: int, constant: float) -> PauliSum:
        return cls(n_qubits, constant=constant)

    # views ------------------------------------------------------------------
    @property
    def terms(self) -> dict[PauliString, float]:
        return {PauliString(self.n_qubits, int(a), int(b)): float(c)
                for a, b, c in zip(self.x, self.z, self.coeffs)}

    def __len__(self) -> int:
        return len(self.coeffs)

    @property
    def n_strings(self) -> int:
        """Number of strings including the identity when the constant is non-zero."""
        return len(self) + (self.constant != 0.0)

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, terms={len(self)}, constant={self.constant!r})"

    def dump(self) -> str:
        """One ``coefficient  label`` line per string, sorted by label."""
        rows = [(PauliString(self.n_qubits, int(a), int(b)).label, float(c))
                for a, b, c in zip(self.x, self.z, self.coeffs)]
        if self.constant != 0.0:
            rows.append(("I" * self.n_qubits, float(self.constant)))
        return "\n".join(f"{c!r}  {lab}" for lab, c in sorted(rows))

    @classmethod
    def parse_dump(cls, text: str) -> PauliSum:
        rows = [line.split() for line in text.splitlines() if line.strip()]
        if not rows:
            raise ValueError("empty Pauli dump")
        n = len(rows[0][1])
        return cls.from_terms(n, [(PauliString.from_label(lab), float(c)) for c, lab in rows])

    # algebra ----------------------------------------------------------------
    def _check(self, other: PauliSum):
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"width mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other: PauliSum | float) -> PauliSum:
        if not isinstance(other, PauliSum):
            return PauliSum(self.n_qubits, self.x, self.z, self.coeffs, self.constant + float(other))
        self._check(other)
        return PauliSum(
            self.n_qubits,
            np.concatenate([self.x, other.x]),
            np.concatenate([self.z, other.z]),
            np.concatenate([self.coeffs, other.coeffs]),
            self.constant + other.constant,
        )

    __radd__ = __add__

    def __mul__(self, scalar: float) -> PauliSum:
        return PauliSum(self.n_qubits, self.x, self.z, self.coeffs * scalar, self.constant * scalar)

    __rmul__ = __mul__

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + other * -1.0

    def __neg__(self) -> PauliSum:
        return self * -1.0

    def compose(self, other: PauliSum) -> PauliSum:
        """Operator product; fails unless the result is Hermitian (e.g. commuting factors)."""
        self._check(other)
        ax, az, ac = self._with_identity()
        bx, bz, bc = other._with_identity()
        x, z, k = _product_arrays(ax[:, None], az[:, None], bx[None, :], bz[None, :])
        c = (ac[:, None] * bc[None, :]) * np.take(np.array(_PHASES), k)
        return PauliSum(self.n_qubits, x.ravel(), z.ravel(), c.ravel())

    def _with_identity(self):
        return (np.append(self.x, np.uint64(0)), np.append(self.z, np.uint64(0)),
                np.append(self.coeffs, self.constant))

    def allclose(self, other: PauliSum, atol: float = 1e-10) -> bool:
        diff = self - other
        return abs(diff.constant) <= atol and bool(np.all(np.abs(diff.coeffs) <= atol))

    def commutes_with(self, s: PauliString) -> bool:
        anti = (popcount(self.x & np.uint64(s.z)) + popcount(self.z & np.uint64(s.x))) % 2
        return not bool(np.any(anti))

    # matrix forms -----------------------------------------------------------
    @cached_property
    def _sparse(self) -> sp.csr_matrix:
        return _sparse_matrix(self.n_qubits, self.x, self.z, self.coeffs, self.constant)

    def to_sparse(self) -> sp.csr_matrix:
        """Sparse matrix in the computational basis (basis index bit q = qubit q)."""
        return self._sparse


def _sparse_matrix(n, xs, zs, coeffs, constant) -> sp.csr_matrix:
    dim = 1 << n
    idx = np.arange(dim, dtype=np.uint64)
    rows, cols, vals = [idx.astype(np.int64)], [idx.astype(np.int64)], [np.full(dim, constant, complex)]
    for xm in np.unique(xs):
        sel = xs == xm
        diag = np.zeros(dim, dtype=complex)
        src = idx ^ xm
        for zm, c in zip(zs[sel], coeffs[sel]):
            # <i| P |i ^ x> = i^{|x&z|} (-1)^{|(i^x) & z|}
            phase = _PHASES[int(popcount(xm & zm)) % 4]
            diag += c * phase * (1 - 2 * (popcount(src & zm) & 1))
        rows.append(idx.astype(np.int64))
        cols.append(src.astype(np.int64))
        vals.append(diag)
    m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
    m.sum_duplicates()
    m.eliminate_zeros()
    return m
