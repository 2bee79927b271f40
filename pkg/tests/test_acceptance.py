"""Acceptance suite: one recorded PASS/FAIL line per criterion, printed in the session summary.

Reference numbers below are the published gas-phase FCI energies, solution free energies and solvation
free energies for H3+, BeH2 and H2O in DMSO with STO-3G, plus the published 1-RDMs of H3+.
"""

import time
import warnings

import numpy as np
import pytest

from solvq.cavity import apparent_charges, solvent_response, spheres_cavity
from solvq.config import bundled_config, load_config
from solvq.oracle import fci, pcm_fci
from solvq.pipeline import execute, shot_polarization_energy
from solvq.qsim import AnsatzCircuit
from solvq.solver import VqeConfig, polarization_energy, run_vqe, trace_distance

from conftest import bundled_run, h3p_rdms, system

GAS_REF = {"h3p": -1.2744, "beh2": -15.5952, "h2o": -75.0233}
SOL_REF = {"h3p": -1.4231, "beh2": -15.6144, "h2o": -75.0279}
DG_REF = {"h3p": -0.1487, "beh2": -0.0198, "h2o": -0.0049}
RUNS = {"h3p": "h3p_pcm_vqe", "beh2": "beh2_pcm_vqe", "h2o": "h2o_pcm_vqe"}
FROZEN = {"h3p": 0, "beh2": 1, "h2o": 1}


@pytest.mark.parametrize("stem, tol", [("h3p", 1e-6), ("beh2", 5e-5), ("h2o", 5e-5)])
def test_criterion_1_gas_phase_vqe_matches_fci(stem, tol, acceptance):
    rep = bundled_run(RUNS[stem])
    e_fci = fci(system(stem, frozen_core=FROZEN[stem]).active).energy
    err = abs(rep["vacuum"]["value_Ha"] - e_fci)
    wall = rep["vacuum"]["timing"]["wall_s"]
    ok = err < tol and wall < 120 and rep["vacuum"]["converged"]
    acceptance(f"1 {stem}", ok, f"|E_VQE - E_FCI| = {err:.2e} Ha (< {tol:g}), {wall:.1f} s")
    assert err < tol
    assert wall < 120


@pytest.mark.parametrize("stem", ["h3p", "beh2", "h2o"])
def test_criterion_2_gas_phase_absolute_energies(stem, acceptance):
    e = fci(system(stem, frozen_core=FROZEN[stem]).active).energy
    gap = e - GAS_REF[stem]
    ok = abs(gap) < 2e-3
    acceptance(f"2 {stem}", ok, f"E_FCI = {e:.5f} vs {GAS_REF[stem]} Ha (gap {gap * 1e3:+.2f} mHa, < 2 mHa)")
    assert ok


def test_criterion_3_pcm_vqe_matches_pcm_fci(acceptance):
    s = system("h3p")
    rep = bundled_run("h3p_pcm_vqe")
    g_fci = pcm_fci(s.active, s.tables).energy
    err = abs(rep["value_Ha"] - g_fci)
    ok = err < 1e-6 and rep["converged"]
    acceptance("3 h3p", ok, f"|G_VQE - G_FCI| = {err:.2e} Ha (< 1e-6)")
    assert ok


@pytest.mark.parametrize("stem", ["h3p", "beh2", "h2o"])
def test_criterion_4_solution_free_energies(stem, acceptance):
    rep = bundled_run(RUNS[stem])
    g, dg = rep["value_Ha"], rep["delta_g_Ha"]
    g_err = abs(g - SOL_REF[stem])
    dg_err = abs(dg - DG_REF[stem])
    dg_tol = max(0.1 * abs(DG_REF[stem]), 2e-3)
    ok = g_err < 5e-3 and dg_err < dg_tol
    acceptance(f"4 {stem}", ok, f"G = {g:.5f} vs {SOL_REF[stem]} Ha (|d| {g_err * 1e3:.2f} mHa, < 5); "
                                f"dG = {dg:.5f} vs {DG_REF[stem]} Ha (|d| {dg_err * 1e3:.2f} mHa, < {dg_tol * 1e3:.2f})")
    assert g_err < 5e-3
    assert dg_err < dg_tol


def test_criterion_5_born_ion(acceptance):
    radius, eps = 2.0, 46.7
    cav = spheres_cavity([0, 0, 0], [radius], 4)
    v = 1.0 / np.linalg.norm(cav.points, axis=1)
    q = apparent_charges(solvent_response(cav, eps), v)
    e, exact = 0.5 * q @ v, -(1 - 1 / eps) / (2 * radius)
    gauss = -(eps - 1) / eps
    e_rel, q_rel = abs(e / exact - 1), abs(q.sum() / gauss - 1)
    ok = e_rel < 0.015 and q_rel < 0.02
    acceptance("5 born", ok, f"energy off by {e_rel:.1e} (< 1.5e-2), charge sum off by {q_rel:.1e} (< 2e-2)")
    assert ok


def test_criterion_6_shot_noise_polarization_energy(acceptance):
    s = system("h3p")
    vac = run_vqe(VqeConfig(), s.h0, s.n_electrons, active=s.active)
    circ = AnsatzCircuit.from_excitations(s.n_qubits, vac.excitations)
    exact = polarization_energy(vac.theta, circ, s.tables, s.n_electrons)
    t0 = time.perf_counter()
    u, se = shot_polarization_energy(vac.theta, circ, s.tables, s.n_electrons, n_shots=8192, seed=11, n_samples=50)
    # the full seeded shots study (two optimizations plus the estimator) must also fit the time budget
    full, _ = execute(load_config(bundled_config("h3p_shots")))
    wall = time.perf_counter() - t0
    z = abs(u - exact) / se
    ok = z < 3 and round(exact, 3) == -0.149 and wall < 600 and full["u_pol_stderr_Ha"] > 0
    acceptance("6 h3p", ok, f"U_pol = {u:.6f} +/- {se:.1e} Ha vs noiseless {exact:.6f} ({z:.2f} SE, < 3); "
                            f"shots study {wall:.1f} s")
    assert ok


def test_criterion_7_published_rdm_trace_distance(acceptance):
    ref = h3p_rdms()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # the printed shot matrix is not exactly symmetric
        dist = trace_distance(np.array(ref["exact"]), np.array(ref["shots"]))
    ok = abs(dist - 0.15) < 0.005
    acceptance("7 h3p", ok, f"D = {dist:.4f} (0.15 +/- 0.005)")
    assert ok


@pytest.mark.parametrize("name, qubits, target", [("heh_sto3g", 4, 0.99), ("heh_631g", 8, 0.85)])
def test_criterion_8_heh_uccsd_recovery(name, qubits, target, acceptance):
    rep = bundled_run(name)
    rec = rep["recovery"]
    ok = rep["system"]["n_qubits"] == qubits and rec is not None and rec >= target
    acceptance(f"8 {name}", ok, f"recovery {rec:.6f} (>= {target}), {qubits} qubits, "
                                f"{rep['n_iterations']} iterations")
    assert ok
