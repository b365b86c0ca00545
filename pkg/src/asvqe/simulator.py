"""Dense statevector simulation of perfect qubits, sampling and readout noise.

Basis index ``i`` has qubit ``q`` in bit ``q``; bitstring keys returned by
:func:`sample_counts` list qubit 0 first.  Every rotation gate has the form
``exp(-i angle P / 2)`` for a Pauli string ``P``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .encoding.pauli import PauliString, PauliSum, popcount

MAX_QUBITS = 24

__all__ = [
    "MAX_QUBITS",
    "Gate",
    "GuardrailError",
    "ReadoutNoiseModel",
    "Statevector",
    "apply_circuit",
    "apply_gate",
    "basis_rotation",
    "estimate_energy",
    "expectation",
    "mitigate_readout",
    "qwc_groups",
    "SampledEstimate",
    "sample_counts",
]


class GuardrailError(RuntimeError):
    """A requested computation exceeds a configured size limit."""


class Gate(NamedTuple):
    """``name`` in rx, ry, rz, h, s, sdg, p, x, cx, pauli_exp.

    Rotations and ``p`` read ``angle``; ``pauli_exp`` applies
    ``exp(-i angle pauli / 2)``.
    """

    name: str
    qubits: tuple[int, ...] = ()
    angle: float = 0.0
    pauli: PauliString | None = None


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits > MAX_QUBITS:
            raise GuardrailError(f"{self.n_qubits} qubits exceed the statevector limit of {MAX_QUBITS}")
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got {amp.shape}")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> Statevector:
        if n_qubits > MAX_QUBITS:
            raise GuardrailError(f"{n_qubits} qubits exceed the statevector limit of {MAX_QUBITS}")
        amp = np.zeros(1 << n_qubits, dtype=complex)
        amp[index] = 1.0
        return cls(n_qubits, amp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_bytes(self) -> bytes:
        """Little-endian (real, imag) float64 pairs, basis index order."""
        return self.amplitudes.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, n_qubits: int, data: bytes) -> Statevector:
        return cls(n_qubits, np.frombuffer(data, dtype="<c16").copy())


# --------------------------------------------------------------------------
# gate application (in place on a private copy)

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _single(psi: np.ndarray, n: int, q: int, m: np.ndarray) -> None:
    v = psi.reshape(1 << (n - q - 1), 2, 1 << q)
    v[:] = np.einsum("ab,ibj->iaj", m, v)


def apply_pauli(psi: np.ndarray, n: int, p: PauliString) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint64)
    src = idx ^ np.uint64(p.x)
    phase = (1j) ** (bin(p.x & p.z).count("1") % 4)
    sign = 1 - 2 * (popcount(src & np.uint64(p.z)) & 1)
    return phase * sign * psi[src.astype(np.int64)]


def apply_gate(psi: np.ndarray, n: int, gate: Gate) -> None:
    name = gate.name
    for q in gate.qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")
    if name == "pauli_exp":
        p = gate.pauli
        if p is None or p.n_qubits != n:
            raise ValueError("pauli_exp gate needs a Pauli string of matching width")
        c, s = np.cos(gate.angle / 2), np.sin(gate.angle / 2)
        if p.is_identity:
            psi *= c - 1j * s
            return
        psi[:] = c * psi - 1j * s * apply_pauli(psi, n, p)
        return
    if name in ("rx", "ry", "rz"):
        letter = name[1].upper()
        apply_gate(psi, n, Gate("pauli_exp", (), gate.angle, PauliString.single(n, gate.qubits[0], letter)))
        return
    if name == "cx":
        c, t = gate.qubits
        if c == t:
            raise ValueError("cx needs distinct control and target")
        idx = np.arange(1 << n)
        sel = idx[((idx >> c) & 1 == 1) & ((idx >> t) & 1 == 0)]
        other = sel | (1 << t)
        psi[sel], psi[other] = psi[other].copy(), psi[sel].copy()
        return
    (q,) = gate.qubits
    if name == "h":
        m = _H
    elif name == "x":
        m = np.array([[0, 1], [1, 0]], dtype=complex)
    elif name == "s":
        m = np.diag([1, 1j])
    elif name == "sdg":
        m = np.diag([1, -1j])
    elif name == "p":
        m = np.diag([1, np.exp(1j * gate.angle)])
    else:
        raise ValueError(f"unknown gate {name!r}")
    _single(psi, n, q, m)


def apply_circuit(state: Statevector, circuit: Iterable[Gate]) -> Statevector:
    psi = state.amplitudes.copy()
    for gate in circuit:
        apply_gate(psi, state.n_qubits, gate)
    return Statevector(state.n_qubits, psi)


def expectation(state: Statevector, obs: PauliSum) -> float:
    """Exact <psi|H|psi> including the constant term."""
    if obs.n_qubits != state.n_qubits:
        raise ValueError(f"observable has {obs.n_qubits} qubits, state has {state.n_qubits}")
    psi = state.amplitudes
    if len(obs) == 0:
        return float(obs.constant)
    return float(np.real(np.vdot(psi, obs.to_sparse() @ psi)))


# --------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class ReadoutNoiseModel:
    """Independent per-qubit readout flips: ``p01[q] = P(read 1 | 0)``, ``p10[q] = P(read 0 | 1)``."""

    p01: tuple[float, ...]
    p10: tuple[float, ...]

    def __post_init__(self):
        if len(self.p01) != len(self.p10):
            raise ValueError("flip probability lists differ in length")
        for p in self.p01 + self.p10:
            if not 0.0 <= p < 1.0:
                raise ValueError(f"flip probability {p} outside [0, 1)")

    @classmethod
    def uniform(cls, n_qubits: int, p: float, p10: float | None = None) -> ReadoutNoiseModel:
        return cls((p,) * n_qubits, ((p if p10 is None else p10),) * n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.p01)

    def confusion(self, q: int) -> np.ndarray:
        """Column-stochastic 2x2 matrix ``M[read, true]``."""
        a, b = self.p01[q], self.p10[q]
        return np.array([[1 - a, b], [a, 1 - b]])

    def inverse_confusion(self, q: int) -> np.ndarray:
        if self.p01[q] >= 0.5 or self.p10[q] >= 0.5:
            raise ValueError(f"confusion matrix of qubit {q} is not safely invertible (p >= 0.5)")
        return np.linalg.inv(self.confusion(q))


def _apply_per_qubit(vec: np.ndarray, n: int, mats: Sequence[np.ndarray]) -> np.ndarray:
    v = vec.reshape((2,) * n)  # axis k is qubit n-1-k
    for q, m in enumerate(mats):
        axis = n - 1 - q
        v = np.moveaxis(np.tensordot(m, v, axes=([1], [axis])), 0, axis)
    return v.reshape(-1)


def _bitstring(index: int, n: int) -> str:
    return "".join("1" if (index >> q) & 1 else "0" for q in range(n))


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def sample_counts(
    state: Statevector,
    basis_rotations: Sequence[Gate] = (),
    shots: int = 1024,
    noise: ReadoutNoiseModel | None = None,
    seed: int | None = None,
) -> dict[str, int]:
    """Measure all qubits ``shots`` times; returns bitstring (qubit 0 first) -> count."""
    idx_counts = _sample_indices(state, basis_rotations, shots, noise, _rng(seed))
    n = state.n_qubits
    return {_bitstring(int(i), n): int(idx_counts[i]) for i in np.flatnonzero(idx_counts)}


def _sample_indices(state, rotations, shots, noise, rng) -> np.ndarray:
    if shots < 1:
        raise ValueError("shots must be at least 1")
    rotated = apply_circuit(state, rotations) if rotations else state
    p = rotated.probabilities()
    p = p / p.sum()
    counts = rng.multinomial(shots, p)
    if noise is None:
        return counts
    n = state.n_qubits
    if noise.n_qubits != n:
        raise ValueError(f"noise model covers {noise.n_qubits} qubits, state has {n}")
    outcomes = np.repeat(np.arange(1 << n, dtype=np.int64), counts)
    for q in range(n):
        bit = (outcomes >> q) & 1
        u = rng.random(len(outcomes))
        flip = np.where(bit == 0, u < noise.p01[q], u < noise.p10[q])
        outcomes ^= flip.astype(np.int64) << q
    return np.bincount(outcomes, minlength=1 << n)


def _counts_vector(counts: Mapping[str, int], n: int) -> np.ndarray:
    v = np.zeros(1 << n)
    for key, c in counts.items():
        if len(key) != n:
            raise ValueError(f"bitstring {key!r} does not have {n} bits")
        v[int(key[::-1], 2)] += c
    return v


def mitigate_readout(counts: Mapping[str, int], noise: ReadoutNoiseModel) -> np.ndarray:
    """Quasi-probabilities (basis-index order) after inverting the tensor-product confusion matrix."""
    n = noise.n_qubits
    v = _counts_vector(counts, n)
    total = v.sum()
    if total <= 0:
        raise ValueError("no counts to mitigate")
    inv = [noise.inverse_confusion(q) for q in range(n)]
    return _apply_per_qubit(v / total, n, inv)


# --------------------------------------------------------------------------
# sampled energy estimation


def qwc_groups(obs: PauliSum) -> list[list[int]]:
    """Greedy colouring of terms into qubit-wise commuting groups (largest weights first)."""
    strings = [PauliString(obs.n_qubits, int(x), int(z)) for x, z in zip(obs.x, obs.z)]
    order = sorted(range(len(strings)), key=lambda i: (-abs(obs.coeffs[i]), strings[i].label))
    groups: list[list[int]] = []
    bases: list[dict[int, str]] = []
    for i in order:
        s = strings[i]
        letters = {q: s.label[q] for q in s.support}
        for g, basis in zip(groups, bases):
            if all(basis.get(q, l) == l for q, l in letters.items()):
                g.append(i)
                basis.update(letters)
                break
        else:
            groups.append([i])
            bases.append(dict(letters))
    return groups


def basis_rotation(n_qubits: int, letters: Mapping[int, str]) -> list[Gate]:
    """Gates mapping the X/Y eigenbases onto Z for the given qubits."""
    gates = []
    for q, l in sorted(letters.items()):
        if l == "X":
            gates.append(Gate("h", (q,)))
        elif l == "Y":
            gates.extend([Gate("sdg", (q,)), Gate("h", (q,))])
    return gates


@dataclass(frozen=True)
class SampledEstimate:
    energy: float
    std_error: float
    shots_per_group: int
    n_groups: int
    mitigated: bool


def estimate_energy(
    state: Statevector,
    obs: PauliSum,
    shots: int,
    noise: ReadoutNoiseModel | None = None,
    mitigate: bool = False,
    seed: int | None = None,
) -> SampledEstimate:
    """Shot-based estimate of <H>, ``shots`` per qubit-wise commuting group.

    With ``mitigate`` the per-outcome values are transformed by the transpose
    inverse confusion matrix, which equals evaluating them on the mitigated
    quasi-distribution; the standard error follows from the per-shot values.
    """
    if mitigate and noise is None:
        raise ValueError("mitigation requested without a noise model")
    n = obs.n_qubits
    rng = _rng(seed)
    idx = np.arange(1 << n, dtype=np.uint64)
    energy, var = obs.constant, 0.0
    groups = qwc_groups(obs)
    inv_t = [noise.inverse_confusion(q).T for q in range(n)] if mitigate else None
    for g in groups:
        letters: dict[int, str] = {}
        values = np.zeros(1 << n)
        for i in g:
            s = PauliString(n, int(obs.x[i]), int(obs.z[i]))
            for q in s.support:
                letters[q] = s.label[q]
            mask = np.uint64(s.x | s.z)
            values += obs.coeffs[i] * (1 - 2 * (popcount(idx & mask) & 1))
        if inv_t is not None:
            values = _apply_per_qubit(values, n, inv_t)
        counts = _sample_indices(state, basis_rotation(n, letters), shots, noise, rng)
        p = counts / shots
        mean = float(p @ values)
        energy += mean
        var += float(p @ (values - mean) ** 2) / shots
    return SampledEstimate(float(energy), float(np.sqrt(var)), shots, len(groups), mitigate)


def counts_to_probabilities(counts: Mapping[str, int], n: int) -> np.ndarray:
    v = _counts_vector(counts, n)
    return v / v.sum()

