from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asvqe.encoding import (
    PauliString,
    PauliSum,
    TaperingError,
    Z2Tapering,
    encode_occupation,
    map_to_qubits,
    pauli_product,
    resource_metrics,
    two_qubit_reduction,
)
from asvqe.encoding.mappings import map_to_arrays, normalize_scheme
from asvqe.fermion import FermionOperator, apply_active_space, build_hamiltonian, select_active_space
from asvqe.reference import dense_matrix

from . import oracles
from .conftest import CO2MG_DISTANCES, H2_DISTANCES, load

SCHEMES = ("jw", "parity", "bk")
LABELS = "IXYZ"


def strings(n):
    return st.text(alphabet=LABELS, min_size=n, max_size=n).map(PauliString.from_label)


def by_label(s: PauliSum) -> dict[str, float]:
    return {k.label: v for k, v in s.terms.items()}


def parity_sector_spectrum(m, n, n_elec, two_sz=0):
    """Eigenvalues of a JW matrix restricted to the (-1)^N, (-1)^N_up sector."""
    idx = np.arange(2**n)
    occ = np.array([bin(i).count("1") for i in idx])
    up = np.array([bin(i & int("01" * n, 2)).count("1") for i in idx])
    n_up = (n_elec + two_sz) // 2
    sel = np.flatnonzero((occ % 2 == n_elec % 2) & (up % 2 == n_up % 2))
    return np.linalg.eigvalsh(m[np.ix_(sel, sel)])


def complex_sum_matrix(x, z, c, n):
    terms = {}
    for xm, zm, cc in zip(x.tolist(), z.tolist(), c.tolist()):
        terms[PauliString(n, xm, zm).label] = terms.get(PauliString(n, xm, zm).label, 0) + cc
    return oracles.pauli_sum_matrix(terms, n=n) if terms else np.zeros((2**n, 2**n))


# -- Pauli algebra --------------------------------------------------------


def test_x_times_z_is_minus_i_y():
    s, phase = pauli_product(PauliString.from_label("X"), PauliString.from_label("Z"))
    assert s.label == "Y" and phase == -1j


@settings(max_examples=100, deadline=None)
@given(strings(4))
def test_square_is_identity(s):
    p, phase = s * s
    assert p.is_identity and phase == 1


def test_associativity_exhaustive_two_qubits():
    all_strings = [PauliString.from_label("".join(t)) for t in itertools.product(LABELS, repeat=2)]
    for a, b, c in itertools.product(all_strings, repeat=3):
        ab, p1 = a * b
        left, p2 = ab * c
        bc, p3 = b * c
        right, p4 = a * bc
        assert left == right and p1 * p2 == p3 * p4


@settings(max_examples=200, deadline=None)
@given(strings(3), strings(3), strings(3))
def test_associativity_three_qubits(a, b, c):
    ab, p1 = a * b
    left, p2 = ab * c
    bc, p3 = b * c
    right, p4 = a * bc
    assert left == right and p1 * p2 == p3 * p4


@settings(max_examples=100, deadline=None)
@given(strings(3), strings(3))
def test_product_matches_matrices(a, b):
    s, phase = a * b
    lhs = oracles.pauli_label_matrix(a.label) @ oracles.pauli_label_matrix(b.label)
    assert np.allclose(lhs, phase * oracles.pauli_label_matrix(s.label))
    assert a.commutes(b) == np.allclose(lhs, oracles.pauli_label_matrix(b.label) @ oracles.pauli_label_matrix(a.label))


def test_product_width_mismatch():
    with pytest.raises(ValueError):
        pauli_product(PauliString.from_label("XX"), PauliString.from_label("X"))


def test_label_conventions():
    s = PauliString.from_label("XIZY")
    assert s.label == "XIZY" and s.support == [0, 2, 3]
    assert PauliString.single(3, 1, "Y").label == "IYI"


def test_dense_matrix_against_kron_oracle():
    rng = np.random.default_rng(0)
    labels = ["".join(rng.choice(list(LABELS), 3)) for _ in range(8)]
    coeffs = rng.normal(size=8)
    obs = PauliSum.from_terms(3, list(zip(labels, coeffs)), constant=0.3)
    expected = oracles.pauli_sum_matrix(by_label(obs), obs.constant)
    assert np.allclose(dense_matrix(obs), expected)


def test_sum_algebra():
    a = PauliSum.from_terms(2, [("XI", 1.0), ("ZZ", 0.5)], constant=1.0)
    b = PauliSum.from_terms(2, [("XI", -1.0), ("YY", 2.0)])
    assert by_label(a + b) == {"ZZ": 0.5, "YY": 2.0}
    assert (a - a).n_strings == 0
    c = PauliSum.from_terms(2, [("XX", -1.0)], constant=0.5)  # commutes with every term of a
    prod = a.compose(c)
    assert np.allclose(dense_matrix(prod), dense_matrix(a) @ dense_matrix(c))
    with pytest.raises(ValueError, match="imaginary"):
        a.compose(b)


def test_dump_round_trip():
    s = PauliSum.from_terms(3, [("ZIX", -0.25), ("XXY", 0.125), ("IZI", 1.5)], constant=0.75)
    text = s.dump()
    assert text.splitlines() == ["0.75  III", "1.5  IZI", "0.125  XXY", "-0.25  ZIX"]
    assert PauliSum.parse_dump(text).allclose(s, atol=0)


def test_pruning():
    s = PauliSum.from_terms(2, [("XI", 1e-13), ("ZZ", 0.5)])
    assert by_label(s) == {"ZZ": 0.5}


# -- mappings -------------------------------------------------------------


def test_jw_number_operator():
    op = FermionOperator.from_terms({((0, 1), (0, 0)): 1.0}, 1)
    q = map_to_qubits(op, "jw")
    assert q.constant == 0.5 and by_label(q) == {"Z": -0.5}


def test_unsupported_scheme():
    with pytest.raises(ValueError, match="scheme"):
        normalize_scheme("ternary-tree")


def test_imaginary_residue_rejected():
    op = FermionOperator.from_terms({((1, 1), (0, 0)): 1.0}, 2)  # not Hermitian
    with pytest.raises(ValueError, match="imaginary"):
        map_to_qubits(op, "jw")


@pytest.mark.parametrize("scheme", SCHEMES)
def test_ladder_operators_satisfy_anticommutation(scheme):
    n = 5
    mats = []
    for j in range(n):
        x, z, c = map_to_arrays(FermionOperator.from_terms({((j, 0),): 1.0}, n), scheme)
        mats.append(complex_sum_matrix(x, z, c, n))
    eye = np.eye(2**n)
    for i, j in itertools.product(range(n), repeat=2):
        ai, aj = mats[i], mats[j]
        assert np.allclose(ai @ aj.conj().T + aj.conj().T @ ai, eye * (i == j))
        assert np.allclose(ai @ aj + aj @ ai, 0)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_occupation_encoding_is_consistent(scheme):
    n = 6
    ops = []
    for j in range(n):
        x, z, c = map_to_arrays(FermionOperator.from_terms({((j, 1), (j, 0)): 1.0}, n), scheme)
        ops.append(complex_sum_matrix(x, z, c, n))
    for occ in ([0, 1], [1, 4, 5], [2]):
        idx = encode_occupation(occ, n, scheme)
        diag = [ops[j][idx, idx].real for j in range(n)]
        assert diag == [1.0 if j in occ else 0.0 for j in range(n)]


def _spectra_fixtures():
    out = [(f"h2_{d}.fcidump", None) for d in H2_DISTANCES] + [("h_atom.fcidump", None)]
    out += [(f"co2mg_d{d}.fcidump", (1, 1)) for d in CO2MG_DISTANCES[::4]]
    out += [("co2mg_d1.85.fcidump", (2, 2))]
    return out


def _qubit_ops(name, window):
    ints = load(name)
    if window is None:
        op = build_hamiltonian(ints)
    else:
        op, _ = apply_active_space(ints, select_active_space(ints, *window))
    return op, {s: map_to_qubits(op, s) for s in SCHEMES}


@pytest.mark.parametrize("name,window", _spectra_fixtures())
def test_spectra_agree_across_schemes(name, window):
    op, q = _qubit_ops(name, window)
    ref = np.linalg.eigvalsh(dense_matrix(q["jw"]))
    for s in ("parity", "bk"):
        assert q[s].n_qubits == op.n_spin_orbitals
        assert np.max(np.abs(np.linalg.eigvalsh(dense_matrix(q[s])) - ref)) <= 1e-9


def test_jw_matches_fermion_oracle(h2):
    op = build_hamiltonian(h2)
    assert np.allclose(dense_matrix(map_to_qubits(op, "jw")), oracles.fermion_matrix(op.terms, 4), atol=1e-12)


def test_pruning_shift_bound(co2mg):
    op, _ = apply_active_space(co2mg, select_active_space(co2mg, 2, 2))
    tight = map_to_qubits(op, "jw", threshold=0.0)
    pruned = map_to_qubits(op, "jw", threshold=1e-12)
    shift = abs(np.linalg.eigvalsh(dense_matrix(tight))[0] - np.linalg.eigvalsh(dense_matrix(pruned))[0])
    assert shift <= 1e-9 * max(len(tight), 1)


# -- two-qubit reduction ---------------------------------------------------


def test_h2_reduction_keeps_ground(h2):
    q = map_to_qubits(build_hamiltonian(h2), "parity")
    red = two_qubit_reduction(q, 2)
    assert red.n_qubits == 2
    m = dense_matrix(q)
    assert np.linalg.eigvalsh(dense_matrix(red))[0] == pytest.approx(
        oracles.sector_ground(oracles.fermion_matrix(build_hamiltonian(h2).terms, 4), 4, 2), abs=1e-9)
    assert m.shape == (16, 16)


@pytest.mark.parametrize("window", [(1, 1), (2, 2), (3, 1)])
def test_reduction_keeps_sector_ground(co2mg, window):
    sel = select_active_space(co2mg, *window)
    op, _ = apply_active_space(co2mg, sel)
    red = two_qubit_reduction(map_to_qubits(op, "parity"), sel.n_active_electrons)
    assert red.n_qubits == sel.n_spin_orbitals - 2
    n = sel.n_spin_orbitals
    jw = dense_matrix(map_to_qubits(op, "jw"))
    spectrum = np.linalg.eigvalsh(dense_matrix(red))
    # only parities are fixed, so the reduced spectrum is the union of matching N sectors
    assert np.max(np.abs(spectrum - parity_sector_spectrum(jw, n, sel.n_active_electrons))) <= 1e-9
    assert np.min(np.abs(spectrum - oracles.sector_ground(jw, n, sel.n_active_electrons))) <= 1e-9


@pytest.mark.parametrize("n", [3, 4, 7])
def test_reduction_of_identity_keeps_constant(n):
    red = two_qubit_reduction(PauliSum.identity(n, -2.5), 2)
    assert red.n_qubits == n - 2 and red.constant == -2.5 and len(red) == 0


def test_reduction_rejects_bk(co2mg):
    op, _ = apply_active_space(co2mg, select_active_space(co2mg, 2, 2))
    with pytest.raises(TaperingError):
        two_qubit_reduction(map_to_qubits(op, "bk"), 4)


def test_reduction_needs_three_qubits():
    with pytest.raises(TaperingError):
        two_qubit_reduction(PauliSum.identity(2, 1.0), 2)


def test_tapered_basis_state(h2):
    t = Z2Tapering.for_parity(4, 2)
    bits = encode_occupation([0, 1], 4, "parity")
    red = t.taper(map_to_qubits(build_hamiltonian(h2), "parity"))
    from asvqe.simulator import Statevector, expectation

    e = expectation(Statevector.basis(2, t.taper_basis_state(bits)), red)
    assert e == pytest.approx(-1.116998996754004, abs=1e-10)
    with pytest.raises(TaperingError):
        t.taper_basis_state(encode_occupation([0], 4, "parity"))


# -- resources ------------------------------------------------------------


TABLE = {  # window: (qubits, fermionic, pauli, depth)
    (1, 1): (4, 36, 60, 15),
    (2, 2): (8, 564, 1544, 193),
    (3, 3): (12, 2664, 11076, 923),
}


@pytest.mark.parametrize("window", list(TABLE))
def test_resource_rows(window):
    full = load("co2mg_full_d1.85.fcidump.gz", 1e-8)
    op, _ = apply_active_space(full, select_active_space(full, *window))
    m = resource_metrics(op, map_to_qubits(op, "bk", threshold=1e-8))
    assert (m.n_qubits, m.n_fermionic_terms, m.n_pauli_terms, m.depth_estimate) == TABLE[window]


def test_depth_relation_on_published_rows():
    rows = [(60, 4, 15), (1544, 8, 193), (11076, 12, 923), (46608, 16, 2913), (142940, 20, 7147),
            (12207792, 48, 254329)]
    for pauli, qubits, depth in rows:
        assert pauli % qubits == 0 and math.ceil(pauli / qubits) == depth


def test_resource_width_mismatch(h2):
    op = build_hamiltonian(h2)
    with pytest.raises(ValueError):
        resource_metrics(op, PauliSum.identity(3, 0.0))
