"""Jordan-Wigner mapping, Pauli algebra and the reaction-field tables."""

import functools
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from solvq.ferm2qubit import (QubitOperator, build_h0, jw_map, number_operator, one_body_operator, pauli_product,
                              sz_operator, x_matrix)
from solvq.qsim import hf_state

from conftest import h2_system, system

PAULI = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
         "Z": np.diag([1.0, -1.0])}


def dense_label(label):
    return functools.reduce(np.kron, [PAULI[c] for c in label])


def kron_annihilation(k, n):
    # Z on qubits before k, |0><1| on k, identity after; qubit 0 is the leftmost factor
    lower = np.array([[0, 1], [0, 0]])
    mats = [PAULI["Z"]] * k + [lower] + [np.eye(2)] * (n - k - 1)
    return functools.reduce(np.kron, mats)


labels = st.integers(1, 4).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


@given(labels, st.data())
def test_pauli_product_matches_matrices(a, data):
    b = data.draw(st.text("IXYZ", min_size=len(a), max_size=len(a)))
    prod = QubitOperator.from_label(a) * QubitOperator.from_label(b)
    assert np.allclose(prod.to_dense(), dense_label(a) @ dense_label(b), atol=1e-14)


def test_pauli_product_phase_exponent():
    # X * Y = iZ on one qubit: masks (x=1,z=0) * (x=1,z=1)
    (x, z), phase = pauli_product(1, 0, 1, 1)
    assert (x, z) == (0, 1)
    assert phase == pytest.approx(1j)


@given(st.integers(2, 4), st.data())
def test_ladder_operators_match_kron_construction(n, data):
    k = data.draw(st.integers(0, n - 1))
    a = QubitOperator.annihilation(k, n).to_dense()
    assert np.allclose(a, kron_annihilation(k, n), atol=1e-14)
    assert np.allclose(QubitOperator.creation(k, n).to_dense(), a.conj().T, atol=1e-14)


@given(st.integers(2, 4), st.data())
def test_canonical_anticommutation(n, data):
    p = data.draw(st.integers(0, n - 1))
    q = data.draw(st.integers(0, n - 1))
    a_p, ad_q = QubitOperator.annihilation(p, n), QubitOperator.creation(q, n)
    anti = (a_p * ad_q + ad_q * a_p).pruned()
    expect = QubitOperator.identity(n) if p == q else QubitOperator(n)
    assert np.allclose(anti.to_dense(), expect.to_dense(), atol=1e-14)


def test_number_operator_single_mode():
    n = 3
    op = (QubitOperator.creation(1, n) * QubitOperator.annihilation(1, n)).pruned()
    ref = 0.5 * QubitOperator.identity(n) - 0.5 * QubitOperator.from_label("IZI")
    assert dict(op.pruned().real().sorted_terms()) == pytest.approx(dict(ref.sorted_terms()))


def test_identity_matrix_maps_to_total_number():
    m = 3
    op = jw_map(np.eye(m))
    assert np.allclose(op.to_dense(), number_operator(m).to_dense())
    assert op.expectation(hf_state(2 * m, 1, 1).amplitudes).real == pytest.approx(2.0)


def test_hermitian_combination_real_coefficients():
    h = np.zeros((3, 3))
    h[0, 2] = h[2, 0] = 1.0
    op = jw_map(h)
    assert op.is_hermitian()
    assert all(abs(c.imag) < 1e-15 for _, c in op.sorted_terms())
    with pytest.raises(ValueError):
        jw_map(np.array([[0.0, 1.0], [0.0, 0.0]]))


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_random_hermitian_against_fermionic_matrix(h00, h11, re, im):
    h = np.array([[h00, re + 1j * im], [re - 1j * im, h11]])
    m, n = 2, 4
    ref = np.zeros((16, 16), complex)
    for p in range(m):
        for q in range(m):
            for s in range(2):
                ad = kron_annihilation(p + s * m, n).conj().T
                ref += h[p, q] * ad @ kron_annihilation(q + s * m, n)
    assert np.allclose(jw_map(h).to_dense(), ref, atol=1e-12)


def test_build_h0_structure_and_hf_energy():
    s = system("h3p")
    h0 = s.h0
    assert h0.n_qubits == 6
    assert h0.is_hermitian()
    labels = [lbl for lbl, _ in h0.sorted_terms()]
    assert len(labels) == len(set(labels))
    assert all(abs(c) >= 1e-12 for _, c in h0.sorted_terms())
    assert h0.expectation(hf_state(6, 1, 1).amplitudes).real == pytest.approx(s.scf.total_energy, abs=1e-10)


@pytest.mark.parametrize("stem, fc", [("h2o", 1), ("beh2", 1)])
def test_build_h0_hf_energy_frozen_core(stem, fc):
    s = system(stem, frozen_core=fc)
    na = s.n_electrons // 2
    e = s.h0.expectation(hf_state(s.n_qubits, na, na).amplitudes).real
    assert e == pytest.approx(s.scf.total_energy, abs=1e-10)


def test_h0_conserves_number_and_sz():
    h0 = system("h3p").h0.to_dense()
    for op in (number_operator(3), sz_operator(3)):
        o = op.to_dense()
        assert np.allclose(h0 @ o, o @ h0, atol=1e-10)


def test_operator_json_roundtrip():
    op = system("h3p").h0
    back = QubitOperator.from_json(op.to_json())
    assert back.sorted_terms() == op.sorted_terms()


def test_tables_vanish_without_response():
    s = system("h3p", epsilon=1 + 1e-9)
    t = s.tables
    d = np.diag([1.9, 0.05, 0.05])
    assert np.abs(t.j).max() < 1e-8 and np.abs(t.y).max() < 1e-8
    assert np.abs(x_matrix(t, d)).max() < 1e-8
    assert abs(t.solvation_energy(d)) < 1e-8


def test_tables_invariants():
    t = system("h2o", frozen_core=1).tables
    assert np.allclose(t.j, t.j.T, atol=1e-12) and np.allclose(t.y, t.y.T, atol=1e-12)
    assert np.allclose(t.q_nuclear, t.Q @ t.v_nuclear, atol=1e-12)


def test_symmetric_response_gives_equal_j_and_y():
    t = system("h3p", symmetrize=True).tables
    assert np.allclose(t.j, t.y, atol=1e-12)


def test_hf_solvation_energy_matches_pcm_rhf():
    s = system("h3p", orbitals="pcm")
    d = np.diag([2.0, 0.0, 0.0])
    assert s.tables.solvation_energy(d) == pytest.approx(s.scf_pcm.solvent_energy, abs=1e-8)
    # electron-own-ASC part: 1/2 sum x_pq d_pq against the AO-side electronic self term
    ints = s.integrals
    ve = np.einsum("ipq,pq->i", ints.tessera_potential, s.scf_pcm.density)
    ve_core = np.einsum("ipq,pq->i", ints.tessera_potential, s.active.core_density_ao)
    ve_act = ve - ve_core
    ref = 0.5 * ve_act @ s.response.Q @ ve_act
    assert 0.5 * np.sum(x_matrix(s.tables, d) * d) == pytest.approx(ref, abs=1e-8)


@given(st.floats(-3, 3))
def test_x_matrix_linear(alpha):
    t = system("h3p").tables
    d = np.diag([1.8, 0.1, 0.1]) + 0.01
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert np.allclose(x_matrix(t, 0 * d, check=False), 0.0)
        assert np.allclose(x_matrix(t, alpha * d, check=False), alpha * x_matrix(t, d, check=False),
                           rtol=1e-12, atol=1e-15)


def test_x_matrix_warns_on_bad_trace():
    t = system("h3p").tables
    with pytest.warns(RuntimeWarning):
        x_matrix(t, np.diag([1.0, 0.0, 0.0]))


def test_effective_operator_is_derivative():
    t = system("h2o", frozen_core=1).tables
    rng = np.random.default_rng(3)
    d = rng.normal(size=(6, 6)) * 0.1
    d = d + d.T + np.diag([2, 2, 2, 2, 0, 0])
    f = t.effective_one_body(d)
    e = rng.normal(size=(6, 6))
    e = e + e.T
    h = 1e-5
    fd = (t.solvation_energy(d + h * e) - t.solvation_energy(d - h * e)) / (2 * h)
    assert fd == pytest.approx(np.sum(f * e), rel=1e-7, abs=1e-10)


def test_one_body_operator_constant():
    op = one_body_operator(np.zeros((2, 2)), constant=2.5)
    assert op.constant() == pytest.approx(2.5)


def test_h2_hamiltonian_spectrum():
    h0 = h2_system()["h0"]
    w = np.linalg.eigvalsh(h0.to_dense())
    assert w[0] == pytest.approx(-1.1373, abs=1e-4)
