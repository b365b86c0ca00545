"""Reference states and parameterized circuits (UCCSD, hardware-efficient)."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .encoding.mappings import encode_occupation, map_to_arrays, normalize_scheme
from .encoding.pauli import PauliString
from .encoding.tapering import Z2Tapering
from .fermion import ActiveSpaceSelection, FermionOperator
from .simulator import Gate, Statevector

__all__ = [
    "AnsatzCircuit",
    "TemplateGate",
    "hardware_efficient_ansatz",
    "hf_state",
    "singlet_excitations",
    "uccsd_ansatz",
]


@dataclass(frozen=True)
class TemplateGate:
    """Gate whose angle is ``weight * params[param]`` (or ``weight`` when ``param`` is None)."""

    name: str
    qubits: tuple[int, ...] = ()
    param: int | None = None
    weight: float = 1.0
    pauli: PauliString | None = None

    def bind(self, params: np.ndarray) -> Gate:
        angle = self.weight if self.param is None else self.weight * params[self.param]
        return Gate(self.name, self.qubits, float(angle), self.pauli)


@dataclass(frozen=True)
class AnsatzCircuit:
    n_qubits: int
    kind: str  # "uccsd" or "hardware-efficient"
    labels: tuple[str, ...]
    template: tuple[TemplateGate, ...]
    scheme: str | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_parameters(self) -> int:
        return len(self.labels)

    def bind(self, params) -> list[Gate]:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_parameters,):
            raise ValueError(f"expected {self.n_parameters} parameters, got shape {params.shape}")
        return [g.bind(params) for g in self.template]

    def tapered(self, tapering: Z2Tapering) -> AnsatzCircuit:
        """Same circuit on a register reduced by ``tapering`` (Pauli exponentials only)."""
        gates = []
        for g in self.template:
            if g.name != "pauli_exp":
                raise ValueError("only Pauli-exponential circuits can be tapered")
            p, sign = tapering.taper_string(g.pauli)
            if p.is_identity:
                continue  # global phase
            gates.append(TemplateGate("pauli_exp", (), g.param, g.weight * sign, p))
        n = self.n_qubits - len(tapering.qubits)
        return AnsatzCircuit(n, self.kind, self.labels, tuple(gates), self.scheme, dict(self.meta, tapered=True))


def hf_state(n_qubits: int, n_electrons: int, scheme: str = "jw",
             tapering: Z2Tapering | None = None) -> Statevector:
    """Closed-shell determinant filling the lowest spin orbitals, encoded in ``scheme``."""
    if n_electrons < 0 or n_electrons > n_qubits:
        raise ValueError(f"{n_electrons} electrons do not fit in {n_qubits} spin orbitals")
    bits = encode_occupation(range(n_electrons), n_qubits, scheme)
    if tapering is not None:
        return Statevector.basis(n_qubits - len(tapering.qubits), tapering.taper_basis_state(bits))
    return Statevector.basis(n_qubits, bits)


# --------------------------------------------------------------------------
# UCCSD

Excitation = tuple[tuple[int, ...], tuple[int, ...]]  # (occupied modes, virtual modes)


def _spin_flip(modes: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(m ^ 1 for m in modes)


def _canonical(exc: Excitation) -> Excitation:
    occ, vir = exc
    return tuple(sorted(occ)), tuple(sorted(vir))


def singlet_excitations(n_spatial: int, n_electrons: int) -> tuple[list[Excitation], list[list[Excitation]]]:
    """Spin-conserving singles and doubles over interleaved spin orbitals.

    Returns the singles (one parameter each) and the doubles grouped into
    spin-complement pairs that share a parameter.
    """
    n = 2 * n_spatial
    occ = list(range(n_electrons))
    vir = list(range(n_electrons, n))
    singles = [((i,), (a,)) for i in occ for a in vir if i % 2 == a % 2]
    singles.sort()
    doubles = []
    for i, j in combinations(occ, 2):
        for a, b in combinations(vir, 2):
            if sorted([i % 2, j % 2]) == sorted([a % 2, b % 2]):
                doubles.append(((i, j), (a, b)))
    doubles.sort()
    seen: set[Excitation] = set()
    groups: list[list[Excitation]] = []
    for exc in doubles:
        if exc in seen:
            continue
        partner = _canonical((_spin_flip(exc[0]), _spin_flip(exc[1])))
        group = [exc] if partner == exc else [exc, partner]
        seen.update(group)
        groups.append(group)
    return singles, groups


def _generator(exc: Excitation, n_modes: int) -> FermionOperator:
    """T - T^dagger for T = a+_a ... a_i ... (creators descending, annihilators ascending)."""
    occ, vir = exc
    t = tuple((a, 1) for a in reversed(vir)) + tuple((i, 0) for i in occ)
    t_dag = tuple((m, 1 - d) for m, d in reversed(t))
    return FermionOperator.from_terms({t: 1.0, t_dag: -1.0}, n_modes, threshold=0.0)


def _exponential_gates(exc: Excitation, n_modes: int, scheme: str, param: int) -> list[TemplateGate]:
    # T - T^dagger maps to i * sum_j h_j P_j with commuting P_j, so
    # exp(theta (T - T^dagger)) = prod_j exp(-i (-2 h_j theta) P_j / 2)
    x, z, c = map_to_arrays(_generator(exc, n_modes), scheme)
    keep = np.abs(c) > 1e-12
    if np.max(np.abs(c[keep].real), initial=0.0) > 1e-10:
        raise ValueError("excitation generator is not anti-Hermitian after mapping")
    gates = []
    for xm, zm, h in sorted(zip(x[keep].tolist(), z[keep].tolist(), c[keep].imag.tolist())):
        gates.append(TemplateGate("pauli_exp", (), param, -2.0 * h, PauliString(n_modes, xm, zm)))
    return gates


def uccsd_ansatz(sel: ActiveSpaceSelection | tuple[int, int], scheme: str = "jw") -> AnsatzCircuit:
    """Single-repetition Trotterized UCCSD: singles then doubles, each in index order.

    ``sel`` may be an active-space selection or a ``(n_spatial, n_electrons)``
    pair.  Spin-complement doubles share one parameter.
    """
    scheme = normalize_scheme(scheme)
    if isinstance(sel, ActiveSpaceSelection):
        n_spatial, n_electrons = sel.n_active_orbitals, sel.n_active_electrons
    else:
        n_spatial, n_electrons = sel
    n = 2 * n_spatial
    singles, doubles = singlet_excitations(n_spatial, n_electrons)
    if not singles and not doubles:
        raise ValueError("no excitations: the active space has no virtual orbitals")
    labels, gates = [], []
    for exc in singles:
        gates += _exponential_gates(exc, n, scheme, len(labels))
        labels.append(f"s{exc[0][0]}->{exc[1][0]}")
    for group in doubles:
        k = len(labels)
        for exc in group:
            gates += _exponential_gates(exc, n, scheme, k)
        (i, j), (a, b) = group[0]
        labels.append(f"d{i},{j}->{a},{b}")
    return AnsatzCircuit(n, "uccsd", tuple(labels), tuple(gates), scheme,
                         {"n_electrons": n_electrons, "n_singles": len(singles), "n_doubles": len(doubles)})


# --------------------------------------------------------------------------
# hardware-efficient


def hardware_efficient_ansatz(n_qubits: int, layers: int = 1, reference: int = 0) -> AnsatzCircuit:
    """RY/RZ rotation layers interleaved with all-to-all CX entanglers.

    ``2 * n_qubits * (layers + 1)`` parameters: an initial rotation layer,
    then per layer one entangler (CX on every pair ``i < j``) and a
    rotation layer.  The block is wrapped in X gates on the set bits of
    ``reference`` so that all-zero parameters leave that basis state alone.
    """
    if layers < 1:
        raise ValueError("layers must be at least 1")
    labels, gates = [], []
    flips = [TemplateGate("x", (q,)) for q in range(n_qubits) if reference >> q & 1]

    def rotations(layer):
        for q in range(n_qubits):
            for axis in ("ry", "rz"):
                gates.append(TemplateGate(axis, (q,), len(labels)))
                labels.append(f"L{layer}q{q}{axis[1]}")

    gates += flips
    rotations(0)
    for layer in range(1, layers + 1):
        for i, j in combinations(range(n_qubits), 2):
            gates.append(TemplateGate("cx", (i, j)))
        rotations(layer)
    gates += flips
    return AnsatzCircuit(n_qubits, "hardware-efficient", tuple(labels), tuple(gates), None,
                         {"layers": layers, "reference": reference})
