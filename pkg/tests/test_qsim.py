"""Statevector simulator: ansatz gates, expectations, sampling and RDM estimation."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from solvq.ferm2qubit import QubitOperator, number_operator, sz_operator
from solvq.oracle import fci
from solvq.qsim import (AnsatzCircuit, Statevector, adjoint_gradient, apply_ansatz, expectation, hf_state,
                        measure_rdms, qwc_groups, sample_counts)
from solvq.solver import enumerate_excitations

from conftest import system


def random_circuit(n_qubits, n_electrons, n_gates, kind, rng):
    singles, doubles = enumerate_excitations(n_qubits // 2, n_electrons)
    pool = singles + doubles
    excs = [pool[i] for i in rng.integers(len(pool), size=n_gates)]
    return AnsatzCircuit.from_excitations(n_qubits, excs, kind)


def test_hf_state_blocked_ordering():
    psi = hf_state(6, 1, 1)
    assert psi.bitstring(int(np.argmax(np.abs(psi.amplitudes)))) == "100100"
    assert psi.norm() == 1.0
    with pytest.raises(ValueError):
        hf_state(5, 1, 1)


def test_hf_energy_h3p():
    s = system("h3p")
    assert expectation(hf_state(6, 1, 1), s.h0) == pytest.approx(s.scf.total_energy, abs=1e-10)


@pytest.mark.parametrize("kind", ["givens", "uccsd"])
def test_zero_parameters_leave_reference_unchanged(kind):
    psi = hf_state(8, 2, 2)
    circ = random_circuit(8, 4, 10, kind, np.random.default_rng(0))
    out = apply_ansatz(psi, circ, np.zeros(circ.n_params))
    assert np.array_equal(out.amplitudes, psi.amplitudes)


def test_single_excitation_quarter_turn():
    circ = AnsatzCircuit(2).add("single_excitation", (0, 1))
    out = apply_ansatz(Statevector.basis("10"), circ, [np.pi / 2])
    assert abs(abs(out.overlap(Statevector.basis("01"))) - 1.0) < 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from(["givens", "uccsd"]))
def test_norm_preserved_after_many_gates(seed, kind):
    rng = np.random.default_rng(seed)
    circ = random_circuit(8, 4, 100, kind, rng)
    out = apply_ansatz(hf_state(8, 2, 2), circ, rng.uniform(-np.pi, np.pi, circ.n_params))
    assert abs(out.norm() - 1.0) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_ansatz_conserves_number_and_spin(seed):
    rng = np.random.default_rng(seed)
    circ = random_circuit(6, 2, 8, "uccsd", rng)
    out = apply_ansatz(hf_state(6, 1, 1), circ, rng.normal(size=circ.n_params))
    assert expectation(out, number_operator(3)) == pytest.approx(2.0, abs=1e-12)
    assert expectation(out, sz_operator(3)) == pytest.approx(0.0, abs=1e-12)


def test_uccsd_gate_is_exponential_of_antihermitian_generator():
    n = 4
    # a+_1 a_0 in qubit space; exp(theta (T - T+)) applied densely
    t = (QubitOperator.creation(1, n) * QubitOperator.annihilation(0, n)).to_dense()
    gen = t - t.conj().T
    theta = 0.37
    w, v = np.linalg.eig(gen)
    u = (v * np.exp(theta * w)) @ np.linalg.inv(v)
    psi = hf_state(4, 1, 1)
    circ = AnsatzCircuit(4).add("ucc_single", (0, 1))
    assert np.allclose(apply_ansatz(psi, circ, [theta]).amplitudes, u @ psi.amplitudes, atol=1e-12)


def test_uccsd_double_is_exponential_of_generator():
    n = 4
    c, a = QubitOperator.creation, QubitOperator.annihilation
    t = (c(1, n) * c(3, n) * a(2, n) * a(0, n)).to_dense()
    gen = t - t.conj().T
    theta = -0.61
    w, v = np.linalg.eig(gen)
    u = (v * np.exp(theta * w)) @ np.linalg.inv(v)
    psi = hf_state(4, 1, 1)
    circ = AnsatzCircuit(4).add("ucc_double", (0, 2, 1, 3))
    assert np.allclose(apply_ansatz(psi, circ, [theta]).amplitudes, u @ psi.amplitudes, atol=1e-12)


def test_circuit_validation():
    with pytest.raises(ValueError):
        AnsatzCircuit(4).add("single_excitation", (0, 0))
    with pytest.raises(ValueError):
        AnsatzCircuit(4).add("double_excitation", (0, 1, 2))
    with pytest.raises(ValueError):
        AnsatzCircuit(4).add("single_excitation", (0, 5))
    with pytest.raises(ValueError):
        apply_ansatz(hf_state(4, 1, 1), AnsatzCircuit(4).add("single_excitation", (0, 1)), [0.1, 0.2])


def test_expectation_basics():
    psi = Statevector.basis("0")
    assert expectation(psi, QubitOperator.identity(1, 2.5)) == 2.5
    assert expectation(psi, QubitOperator.from_label("Z")) == 1.0
    with pytest.raises(ValueError):
        expectation(psi, QubitOperator.identity(2))


def test_h0_on_fci_vector():
    s = system("h3p")
    res = fci(s.active)
    assert expectation(Statevector(res.vector, 6), s.h0) == pytest.approx(-1.2744, abs=1e-4)
    assert expectation(Statevector(res.vector, 6), s.h0) == pytest.approx(res.energy, abs=1e-10)


def test_adjoint_gradient_against_finite_difference():
    s = system("h3p")
    rng = np.random.default_rng(5)
    circ = random_circuit(6, 2, 6, "givens", rng)
    theta = rng.normal(size=circ.n_params)
    ref = hf_state(6, 1, 1)
    g = adjoint_gradient(ref, circ, theta, s.h0)
    h = 1e-6
    for k in range(len(theta)):
        e = np.zeros_like(theta)
        e[k] = h
        fd = (expectation(apply_ansatz(ref, circ, theta + e), s.h0)
              - expectation(apply_ansatz(ref, circ, theta - e), s.h0)) / (2 * h)
        assert g[k] == pytest.approx(fd, abs=1e-8)


def test_hf_rdms():
    d, D = (lambda r: (r.d, r.D2))(measure_rdms(hf_state(8, 2, 2), 4))
    assert np.allclose(d, np.diag([2, 2, 0, 0]), atol=1e-14)


@given(st.integers(0, 2**32 - 1))
def test_exact_rdm_identities(seed):
    rng = np.random.default_rng(seed)
    circ = random_circuit(8, 4, 6, "givens", rng)
    psi = apply_ansatz(hf_state(8, 2, 2), circ, rng.normal(size=circ.n_params))
    rdm = measure_rdms(psi, 4)
    n = 4
    assert np.trace(rdm.d) == pytest.approx(n, abs=1e-10)
    assert np.allclose(rdm.d, rdm.d.T, atol=1e-12)
    # sum_pq D_ppqq = <N^2 - N> in the E_pq E_rs - delta_qr E_ps convention
    assert np.einsum("ppqq->", rdm.D2) == pytest.approx(n * (n - 1), abs=1e-10)
    occ = np.linalg.eigvalsh(rdm.d)
    assert occ.min() > -1e-12 and occ.max() < 2 + 1e-12


def test_rdm_energy_matches_expectation():
    s = system("h2o", frozen_core=1)
    rng = np.random.default_rng(2)
    circ = random_circuit(12, 8, 6, "givens", rng)
    psi = apply_ansatz(hf_state(12, 4, 4), circ, rng.normal(size=circ.n_params) * 0.3)
    rdm = measure_rdms(psi, 8)
    a = s.active
    assert rdm.energy(a.h_eff, a.g_active, a.constant) == pytest.approx(expectation(psi, s.h0), abs=1e-10)


def test_shot_rdm_within_binomial_bound():
    rng = np.random.default_rng(9)
    circ = random_circuit(6, 2, 4, "givens", rng)
    psi = apply_ansatz(hf_state(6, 1, 1), circ, rng.normal(size=circ.n_params))
    exact = measure_rdms(psi, 2).d
    shots = measure_rdms(psi, 2, "shots", 8192, seed=3)
    # each entry is a sum of Pauli means with squared weights below 1; variance per string <= 1/n
    sigma = 1.0 / np.sqrt(8192)
    assert np.all(np.abs(shots.d - exact) < 5 * sigma)
    assert np.trace(shots.d) == pytest.approx(2.0, abs=1e-12)
    assert shots.mode == "shots" and shots.n_shots == 8192 and shots.seed == 3


def test_shot_rdm_seeded_determinism():
    psi = apply_ansatz(hf_state(6, 1, 1), AnsatzCircuit(6).add("double_excitation", (0, 3, 1, 4)), [0.2])
    a = measure_rdms(psi, 2, "shots", 1000, seed=42)
    b = measure_rdms(psi, 2, "shots", 1000, seed=42)
    assert np.array_equal(a.d, b.d) and np.array_equal(a.D2, b.D2)


def test_depolarizing_shrinks_off_diagonal_signal():
    psi = apply_ansatz(hf_state(6, 1, 1), AnsatzCircuit(6).add("single_excitation", (0, 1)), [0.5])
    clean = measure_rdms(psi, 2, "shots", 200000, seed=1).d
    noisy = measure_rdms(psi, 2, "shots", 200000, seed=1, depolarizing=0.5).d
    assert abs(noisy[0, 1]) < abs(clean[0, 1])


def test_sample_counts_basics():
    assert sample_counts(Statevector.basis("101"), 500, seed=0) == {"101": 500}
    plus = Statevector(np.array([1, 1]) / np.sqrt(2))
    counts = sample_counts(plus, 10**6, seed=7)
    assert counts["0"] / 1e6 == pytest.approx(0.5, abs=0.002)
    assert sample_counts(plus, 1000, seed=3) == sample_counts(plus, 1000, seed=3)
    with pytest.raises(ValueError):
        sample_counts(plus, 0)


@given(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), min_size=1, max_size=20, unique=True))
def test_qwc_groups_partition(strings):
    groups = qwc_groups(strings)
    flat = [s for g in groups for s in g]
    assert sorted(flat) == sorted(s for s in strings if s != (0, 0))
    for g in groups:
        for x1, z1 in g:
            for x2, z2 in g:
                # qubit-wise commuting: on every qubit the two letters agree or one is identity
                for k in range(4):
                    a = ((x1 >> k) & 1, (z1 >> k) & 1)
                    b = ((x2 >> k) & 1, (z2 >> k) & 1)
                    assert a == (0, 0) or b == (0, 0) or a == b
    assert qwc_groups(strings) == qwc_groups(list(reversed(strings)))


def test_state_csv(tmp_path):
    psi = hf_state(4, 1, 1)
    psi.to_csv(tmp_path / "s.csv")
    data = np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)
    assert data.shape == (16, 3) and data[:, 1].sum() == 1.0
