"""Fermion-to-qubit encodings, Pauli algebra, tapering and resource counts."""

from .mappings import SCHEMES, encode_occupation, encoding_matrix, map_to_qubits, normalize_scheme
from .pauli import PauliString, PauliSum, pauli_product
from .resources import ResourceMetrics, resource_metrics
from .tapering import TaperingError, Z2Tapering, parity_symmetries, two_qubit_reduction

__all__ = [
    "SCHEMES",
    "PauliString",
    "PauliSum",
    "ResourceMetrics",
    "TaperingError",
    "Z2Tapering",
    "encode_occupation",
    "encoding_matrix",
    "map_to_qubits",
    "normalize_scheme",
    "parity_symmetries",
    "pauli_product",
    "resource_metrics",
    "two_qubit_reduction",
]
