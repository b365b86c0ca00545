"""Resource accounting for mapped Hamiltonians."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from ..fermion import FermionOperator, count_terms
from .pauli import PauliSum


@dataclass(frozen=True)
class ResourceMetrics:
    """Qubits, term counts and the per-qubit-layer depth model.

    ``n_pauli_terms`` counts single-qubit Pauli factors over the dense string
    representation (``n_strings * n_qubits``, identities included), and
    ``depth_estimate`` packs one factor per qubit per layer, i.e.
    ``ceil(n_pauli_terms / n_qubits)``, which equals the string count.
    """

    n_qubits: int
    n_fermionic_terms: int
    n_pauli_terms: int
    depth_estimate: int
    n_pauli_strings: int

    def as_dict(self) -> dict:
        return asdict(self)


def resource_metrics(fermionic: FermionOperator, qubit_op: PauliSum,
                     convention: str = "expanded") -> ResourceMetrics:
    if qubit_op.n_qubits != fermionic.n_spin_orbitals:
        raise ValueError(
            f"qubit operator has {qubit_op.n_qubits} qubits for {fermionic.n_spin_orbitals} spin orbitals"
        )
    if convention == "expanded" and fermionic.expanded_terms is None:
        convention = "normal_ordered"
    n = qubit_op.n_qubits
    strings = qubit_op.n_strings
    letters = strings * n
    return ResourceMetrics(n, count_terms(fermionic, convention), letters, math.ceil(letters / n) if n else 0,
                           strings)
