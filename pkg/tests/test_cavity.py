"""Cavity tessellation, Calderon matrices and the solvent response."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.transform import Rotation

from solvq.cavity import (Cavity, SingularResponseError, apparent_charges, build_cavity, calderon_matrices,
                          response_matrix, solvent_response, spheres_cavity)
from solvq.config import bundled_molecule
from solvq.molint import ANGSTROM_TO_BOHR, Molecule, read_xyz

from conftest import FIXTURES


def born_energy(level, radius=2.0, eps=46.7):
    cav = spheres_cavity([0, 0, 0], [radius], level)
    resp = solvent_response(cav, eps)
    v = 1.0 / np.linalg.norm(cav.points, axis=1)
    q = apparent_charges(resp, v)
    return 0.5 * q @ v, q.sum()


@pytest.fixture(scope="module")
def h2o():
    return read_xyz(bundled_molecule("h2o"))


@pytest.mark.parametrize("level", [1, 2, 3])
def test_tessera_invariants(h2o, level):
    cav = build_cavity(h2o, None, 1.2, level)
    assert cav.n_tesserae > 0
    assert np.all(cav.areas > 0)
    assert np.allclose(np.linalg.norm(cav.normals, axis=1), 1.0, atol=1e-12)
    on_sphere = np.linalg.norm(cav.points - cav.sphere_centers[cav.sphere_index], axis=1)
    assert np.allclose(on_sphere, cav.sphere_radii[cav.sphere_index], atol=1e-8)


def test_single_sphere_area():
    mol = Molecule.from_atoms([("H", [0, 0, 0]), ("H", [0, 0, 1e-3])])  # two coincident-ish H atoms
    r = 1.2 * 1.2 * ANGSTROM_TO_BOHR
    cav = build_cavity(Molecule.from_atoms([("He", [0, 0, 0])]), {"He": 1.2}, 1.2, 3)
    assert cav.total_area == pytest.approx(4 * np.pi * r**2, rel=0.02)
    # nearly fully overlapping identical spheres expose the area of one
    both = build_cavity(mol, None, 1.2, 3)
    assert both.total_area == pytest.approx(4 * np.pi * r**2, rel=0.02)


def test_coincident_spheres_match_single_sphere():
    one = spheres_cavity([0, 0, 0], [2.0], 3)
    two = spheres_cavity([[0, 0, 0], [0, 0, 0]], [2.0, 2.0], 3)
    assert two.total_area == pytest.approx(one.total_area, rel=0.02)


def test_h2o_golden_snapshot(h2o):
    cav = build_cavity(h2o, None, 1.2, 2)
    golden = Cavity.from_csv(FIXTURES / "h2o_cavity_level2.csv")
    assert cav.n_tesserae == golden.n_tesserae == 566
    assert np.allclose(cav.points, golden.points, atol=1e-10)
    assert np.allclose(cav.areas, golden.areas, atol=1e-10)


def test_cavity_csv_roundtrip(tmp_path, h2o):
    cav = build_cavity(h2o, None, 1.2, 1)
    cav.to_csv(tmp_path / "c.csv")
    back = Cavity.from_csv(tmp_path / "c.csv")
    assert np.allclose(back.points, cav.points, atol=1e-11) and np.allclose(back.normals, cav.normals, atol=1e-11)


def test_calderon_structure(h2o):
    cav = build_cavity(h2o, None, 1.2, 2)
    S, D, A = calderon_matrices(cav)
    a = np.diag(A)
    assert np.all(a > 0) and np.allclose(A, np.diag(a))
    assert np.allclose(S, S.T)
    # off-diagonal S is the bare Coulomb kernel
    d01 = np.linalg.norm(cav.points[0] - cav.points[1])
    assert S[0, 1] == pytest.approx(1.0 / d01, rel=1e-12)
    assert np.allclose(D @ a, -2 * np.pi, atol=1e-9)
    assert np.all(np.isfinite(solvent_response(cav).Q))


def test_two_tesserae_coulomb_kernel():
    cav = Cavity(np.array([[0, 0, 0], [0, 0, 3.0]]), np.array([0.1, 0.1]), np.array([[0, 0, -1.0], [0, 0, 1.0]]),
                 np.array([0, 1]), np.zeros((2, 3)), np.ones(2))
    S, _, _ = calderon_matrices(cav)
    assert S[0, 1] == pytest.approx(1 / 3.0)


@pytest.mark.slow
def test_unit_sphere_level4_spectrum():
    cav = spheres_cavity([0, 0, 0], [1.0], 4)
    _, D, A = calderon_matrices(cav)
    ev = np.linalg.eigvals(2 * np.pi * np.eye(len(A)) - D @ A)
    assert ev.real.min() > 0


def test_response_limits():
    cav = spheres_cavity([0, 0, 0], [2.0], 2)
    S, D, A = calderon_matrices(cav)
    ref = np.linalg.norm(response_matrix(S, D, A, 78.0).Q)
    assert np.linalg.norm(response_matrix(S, D, A, 1 + 1e-9).Q) < 1e-6 * ref
    conductor = -np.linalg.inv(S)
    q_inf = response_matrix(S, D, A, 1e9).Q
    assert np.linalg.norm(q_inf - conductor) < 1e-6 * np.linalg.norm(conductor)
    with pytest.raises(ValueError):
        response_matrix(S, D, A, 1.0)


def test_singular_system_rejected():
    cav = Cavity(np.array([[0, 0, 0], [0, 0, 0.0]]), np.array([0.1, 0.1]), np.array([[0, 0, 1.0], [0, 0, 1.0]]),
                 np.array([0, 0]), np.zeros((1, 3)), np.ones(1))
    with pytest.raises((SingularResponseError, ValueError)):
        solvent_response(cav)


def test_gauss_law_centered_charge():
    _, qsum = born_energy(3)
    assert qsum == pytest.approx(-(46.7 - 1) / 46.7, rel=0.01)


@given(st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3), st.floats(-2, 2))
def test_gauss_law_off_center_charge(pos, charge):
    cav = spheres_cavity([0, 0, 0], [2.0], 3)
    resp = solvent_response(cav, 46.7)
    v = charge / np.linalg.norm(cav.points - np.asarray(pos), axis=1)
    q = apparent_charges(resp, v)
    assert q.sum() == pytest.approx(-charge * (46.7 - 1) / 46.7, rel=0.02, abs=1e-12)


@pytest.mark.slow
def test_born_energy_converges_monotonically():
    exact = -(1 - 1 / 46.7) / (2 * 2.0)
    errors = [abs(born_energy(level)[0] - exact) for level in (2, 3, 4)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.015 * abs(exact)


def test_apparent_charges_linear():
    cav = spheres_cavity([0, 0, 0], [2.0], 2)
    resp = solvent_response(cav)
    v = np.random.default_rng(0).normal(size=cav.n_tesserae)
    assert np.all(apparent_charges(resp, np.zeros_like(v)) == 0)
    assert np.allclose(apparent_charges(resp, 3.5 * v), 3.5 * apparent_charges(resp, v), rtol=1e-13, atol=0)
    with pytest.raises(ValueError):
        apparent_charges(resp, v[:-1])


def test_symmetrize_switch():
    cav = spheres_cavity([[0, 0, 0], [0, 0, 2.5]], [2.0, 1.5], 2)
    resp = solvent_response(cav, 46.7, symmetrize=True)
    assert np.allclose(resp.Q, resp.Q.T, atol=0)


@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
def test_rigid_rotation_invariance(a, b, c):
    mol = read_xyz(bundled_molecule("h2o"))
    rot = Rotation.from_euler("zyx", [a, b, c]).as_matrix()
    cav = build_cavity(mol, None, 1.2, 1)

    def energy(m, cv):
        z, xyz = m.charges, m.coordinates
        v = (z[None, :] / np.linalg.norm(cv.points[:, None] - xyz[None], axis=2)).sum(1)
        return 0.5 * apparent_charges(solvent_response(cv), v) @ v

    e0 = energy(mol, cav)
    e1 = energy(mol.transformed(rot), cav.transformed(rot))
    assert abs(e0 - e1) < 1e-8
