from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asvqe.encoding import PauliString, PauliSum, map_to_qubits
from asvqe.fermion import build_hamiltonian
from asvqe.reference import dense_matrix
from asvqe.simulator import (
    Gate,
    GuardrailError,
    ReadoutNoiseModel,
    Statevector,
    apply_circuit,
    basis_rotation,
    estimate_energy,
    expectation,
    mitigate_readout,
    qwc_groups,
    sample_counts,
)

from . import oracles
from .conftest import H2_DISTANCES, load

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
ONE_QUBIT = {
    "h": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "x": X,
    "s": np.diag([1, 1j]),
    "sdg": np.diag([1, -1j]),
}


def gate_matrix(gate: Gate, n: int) -> np.ndarray:
    """Dense unitary built independently of the simulator."""
    if gate.name == "pauli_exp":
        p = oracles.pauli_label_matrix(gate.pauli.label)
        return np.cos(gate.angle / 2) * np.eye(2**n) - 1j * np.sin(gate.angle / 2) * p
    if gate.name == "cx":
        c, t = gate.qubits
        p0 = [I2] * n
        p1 = [I2] * n
        p0[c] = np.diag([1, 0])
        p1[c] = np.diag([0, 1])
        p1[t] = X
        return oracles.kron_qubits(p0) + oracles.kron_qubits(p1)
    (q,) = gate.qubits
    if gate.name in ("rx", "ry", "rz"):
        pm = {"rx": X, "ry": Y, "rz": Z}[gate.name]
        m = np.cos(gate.angle / 2) * I2 - 1j * np.sin(gate.angle / 2) * pm
    elif gate.name == "p":
        m = np.diag([1, np.exp(1j * gate.angle)])
    else:
        m = ONE_QUBIT[gate.name]
    ops = [I2] * n
    ops[q] = m
    return oracles.kron_qubits(ops)


def random_circuit(n: int, depth: int, rng) -> list[Gate]:
    names = ["rx", "ry", "rz", "h", "s", "sdg", "p", "x", "cx", "pauli_exp"]
    out = []
    for _ in range(depth):
        name = names[rng.integers(len(names))]
        if name == "cx":
            c, t = rng.choice(n, 2, replace=False)
            out.append(Gate("cx", (int(c), int(t))))
        elif name == "pauli_exp":
            label = "".join(rng.choice(list("IXYZ"), n))
            out.append(Gate("pauli_exp", (), float(rng.uniform(-4, 4)), PauliString.from_label(label)))
        else:
            out.append(Gate(name, (int(rng.integers(n)),), float(rng.uniform(-4, 4))))
    return out


def random_state(n: int, rng) -> Statevector:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return Statevector(n, v / np.linalg.norm(v))


def random_sum(n: int, k: int, rng, constant=0.0) -> PauliSum:
    labels = ["".join(rng.choice(list("IXYZ"), n)) for _ in range(k)]
    return PauliSum.from_terms(n, list(zip(labels, rng.normal(size=k))), constant=constant)


# -- circuits -------------------------------------------------------------


def test_empty_circuit_is_identity():
    s = random_state(3, np.random.default_rng(1))
    assert np.array_equal(apply_circuit(s, []).amplitudes, s.amplitudes)


def test_z_rotation_on_zero_is_phase_only():
    out = apply_circuit(Statevector.basis(2), [Gate("rz", (0,), 1.3)])
    assert np.allclose(out.probabilities(), [1, 0, 0, 0])
    assert abs(out.amplitudes[0]) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(3))
def test_random_six_qubit_circuit_matches_dense_product(seed):
    rng = np.random.default_rng(seed)
    n = 6
    circ = random_circuit(n, 40, rng)
    state = random_state(n, rng)
    u = np.eye(2**n, dtype=complex)
    for g in circ:
        u = gate_matrix(g, n) @ u
    out = apply_circuit(state, circ)
    assert np.allclose(out.amplitudes, u @ state.amplitudes, atol=1e-10)
    assert abs(out.norm - 1) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 60))
def test_norm_is_preserved(seed, depth):
    rng = np.random.default_rng(seed)
    out = apply_circuit(random_state(5, rng), random_circuit(5, depth, rng))
    assert abs(out.norm - 1) <= 1e-10


def test_qubit_out_of_range():
    with pytest.raises(IndexError):
        apply_circuit(Statevector.basis(2), [Gate("h", (2,))])
    with pytest.raises(IndexError):
        apply_circuit(Statevector.basis(2), [Gate("cx", (0, 5))])


def test_unknown_gate():
    with pytest.raises(ValueError):
        apply_circuit(Statevector.basis(1), [Gate("t", (0,))])


def test_statevector_guardrail():
    with pytest.raises(GuardrailError):
        Statevector.basis(25)


def test_bytes_round_trip():
    s = random_state(4, np.random.default_rng(5))
    raw = s.to_bytes()
    assert len(raw) == 16 * 16
    assert np.array_equal(np.frombuffer(raw[:16], "<f8"), [s.amplitudes[0].real, s.amplitudes[0].imag])
    assert np.array_equal(Statevector.from_bytes(4, raw).amplitudes, s.amplitudes)


# -- expectation ----------------------------------------------------------


def test_z_terms_on_zero_state():
    obs = PauliSum.from_terms(3, [("ZII", 1.0), ("IZI", 1.0), ("IIZ", 1.0)])
    assert expectation(Statevector.basis(3), obs) == 3.0


def test_identity_constant_is_exact():
    assert expectation(random_state(3, np.random.default_rng(0)), PauliSum.identity(3, -1.2345678901234)) == -1.2345678901234


def test_random_eight_qubit_quadratic_form():
    rng = np.random.default_rng(11)
    s = random_state(8, rng)
    obs = random_sum(8, 30, rng, constant=0.25)
    m = oracles.pauli_sum_matrix({k.label: v for k, v in obs.terms.items()}, obs.constant)
    assert expectation(s, obs) == pytest.approx(float(np.real(np.vdot(s.amplitudes, m @ s.amplitudes))), abs=1e-10)


def test_expectation_width_mismatch():
    with pytest.raises(ValueError):
        expectation(Statevector.basis(2), PauliSum.identity(3, 1.0))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_expectation_is_linear(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    s = random_state(4, rng)
    a, b = random_sum(4, 6, rng, 0.5), random_sum(4, 6, rng, -0.25)
    combined = a * alpha + b * beta
    assert expectation(s, combined) == pytest.approx(alpha * expectation(s, a) + beta * expectation(s, b), abs=1e-10)


# -- sampling -------------------------------------------------------------


def test_zero_state_all_zeros():
    assert sample_counts(Statevector.basis(1), shots=1000, seed=1) == {"0": 1000}


def test_bitstrings_list_qubit_zero_first():
    assert sample_counts(Statevector.basis(3, 0b001), shots=10, seed=1) == {"100": 10}


def test_plus_state_is_fair():
    shots = 20000
    counts = sample_counts(apply_circuit(Statevector.basis(1), [Gate("h", (0,))]), shots=shots, seed=3)
    sigma = np.sqrt(0.25 / shots)
    assert abs(counts.get("1", 0) / shots - 0.5) <= 5 * sigma


def test_known_flip_rate():
    shots = 20000
    counts = sample_counts(Statevector.basis(1), shots=shots, noise=ReadoutNoiseModel((0.1,), (0.0,)), seed=4)
    sigma = np.sqrt(0.1 * 0.9 / shots)
    assert abs(counts.get("1", 0) / shots - 0.1) <= 5 * sigma


def test_seeded_sampling_is_reproducible():
    s = random_state(4, np.random.default_rng(2))
    noise = ReadoutNoiseModel.uniform(4, 0.05)
    assert sample_counts(s, shots=500, noise=noise, seed=9) == sample_counts(s, shots=500, noise=noise, seed=9)


def test_shots_must_be_positive():
    with pytest.raises(ValueError):
        sample_counts(Statevector.basis(1), shots=0)


def test_basis_rotation_measures_x_and_y():
    plus_i = apply_circuit(Statevector.basis(2), [Gate("h", (0,)), Gate("s", (0,)), Gate("h", (1,))])
    counts = sample_counts(plus_i, basis_rotation(2, {0: "Y", 1: "X"}), shots=200, seed=1)
    assert counts == {"00": 200}


# -- readout model and mitigation -----------------------------------------


@pytest.mark.parametrize("p01,p10", [(0.5, 0.1), (0.1, 0.6)])
def test_non_invertible_model(p01, p10):
    noise = ReadoutNoiseModel((p01,), (p10,))
    with pytest.raises(ValueError):
        mitigate_readout({"0": 10}, noise)


def test_invalid_probability():
    with pytest.raises(ValueError):
        ReadoutNoiseModel((1.0,), (0.0,))


def test_identity_noise_leaves_counts():
    counts = {"00": 30, "10": 50, "11": 20}
    q = mitigate_readout(counts, ReadoutNoiseModel.uniform(2, 0.0))
    assert np.allclose(q, [0.3, 0.5, 0.0, 0.2])


def test_exact_single_qubit_inversion():
    q = mitigate_readout({"0": 9, "1": 1}, ReadoutNoiseModel((0.1,), (0.0,)))
    assert np.allclose(q, [1.0, 0.0], atol=1e-14)


def test_mitigated_z_on_zero_state():
    noise = ReadoutNoiseModel((0.1,), (0.0,))
    shots = 20000
    counts = sample_counts(Statevector.basis(1), shots=shots, noise=noise, seed=6)
    q = mitigate_readout(counts, noise)
    z = q[0] - q[1]
    est = estimate_energy(Statevector.basis(1), PauliSum.from_terms(1, [("Z", 1.0)]), shots, noise, True, seed=6)
    assert abs(z - 1.0) <= 5 * max(est.std_error, 1 / np.sqrt(shots))
    assert abs(est.energy - 1.0) <= 5 * est.std_error


def test_mitigated_counts_match_estimator():
    rng = np.random.default_rng(3)
    state = random_state(2, rng)
    noise = ReadoutNoiseModel((0.03, 0.08), (0.05, 0.02))
    obs = PauliSum.from_terms(2, [("ZI", 0.7), ("ZZ", -0.4), ("IZ", 0.2)])
    est = estimate_energy(state, obs, 5000, noise, True, seed=12)
    counts = sample_counts(state, shots=5000, noise=noise, seed=12)
    q = mitigate_readout(counts, noise)
    diag = np.real(np.diag(dense_matrix(obs)))
    assert est.energy == pytest.approx(float(q @ diag), abs=1e-12)


def test_mitigated_bias_below_statistical_error():
    rng = np.random.default_rng(8)
    state = random_state(3, rng)
    obs = random_sum(3, 8, rng, 0.1)
    noise = ReadoutNoiseModel((0.02, 0.04, 0.03), (0.05, 0.01, 0.02))
    exact = expectation(state, obs)
    est = estimate_energy(state, obs, 10**6, noise, True, seed=21)
    raw = estimate_energy(state, obs, 10**6, noise, False, seed=21)
    assert abs(est.energy - exact) <= 5 * est.std_error
    assert abs(raw.energy - exact) > 5 * raw.std_error


@pytest.mark.parametrize("d", H2_DISTANCES)
def test_shot_estimate_converges_on_fixtures(d):
    obs = map_to_qubits(build_hamiltonian(load(f"h2_{d}.fcidump")), "jw")
    rng = np.random.default_rng(int(float(d) * 1000))
    state = random_state(4, rng)
    est = estimate_energy(state, obs, 10**6, seed=2)
    assert abs(est.energy - expectation(state, obs)) <= 5 * est.std_error


def test_qwc_groups_partition_and_commute():
    rng = np.random.default_rng(4)
    obs = random_sum(4, 25, rng)
    groups = qwc_groups(obs)
    assert sorted(i for g in groups for i in g) == list(range(len(obs)))
    strings = [PauliString(4, int(x), int(z)) for x, z in zip(obs.x, obs.z)]
    for g in groups:
        for i in g:
            for j in g:
                assert strings[i].qubitwise_commutes(strings[j])


def test_estimator_needs_noise_for_mitigation():
    with pytest.raises(ValueError):
        estimate_energy(Statevector.basis(1), PauliSum.identity(1, 0.0), 10, mitigate=True)
