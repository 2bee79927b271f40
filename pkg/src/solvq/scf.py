"""Restricted Hartree-Fock, in gas phase and coupled to the PCM reaction field,
plus the MO transformation / frozen-core reduction consumed by the qubit mapping.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .cavity import SolventResponse
from .molint import IntegralSet

log = logging.getLogger(__name__)


class ScfConvergenceError(RuntimeError):
    def __init__(self, message, last_energy):
        super().__init__(f"{message} (last energy {last_energy:.10f} Ha)")
        self.last_energy = last_energy


@dataclass
class ScfResult:
    mo_coefficients: np.ndarray
    orbital_energies: np.ndarray
    total_energy: float  # free energy when solvated
    converged: bool
    n_iterations: int
    density: np.ndarray  # total AO density (alpha + beta)
    n_occ: int
    solvent_energy: float = 0.0
    charges: np.ndarray | None = None
    energy_trace: list[float] = field(default_factory=list)


@dataclass
class ActiveSpace:
    n_frozen_core: int
    active_orbitals: list[int]
    h_eff: np.ndarray
    g_active: np.ndarray  # (pq|rs) over active MOs
    core_energy: float  # frozen-core electronic energy, e_nuc excluded
    core_density_ao: np.ndarray
    e_nuc: float
    mo_active: np.ndarray  # AO -> active MO coefficients
    n_active_electrons: int

    @property
    def n_orbitals(self) -> int:
        return len(self.active_orbitals)

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_orbitals

    @property
    def constant(self) -> float:
        return self.e_nuc + self.core_energy


def _two_electron(eri, density):
    """G(P) = J(P) - K(P)/2 for a total (closed-shell) density."""
    j = np.einsum("pqrs,rs->pq", eri, density)
    k = np.einsum("prqs,rs->pq", eri, density)
    return j - 0.5 * k


class _Diis:
    def __init__(self, size=8):
        self.size = size
        self.focks: list[np.ndarray] = []
        self.errors: list[np.ndarray] = []

    def extrapolate(self, fock, error):
        self.focks.append(fock)
        self.errors.append(error)
        if len(self.focks) > self.size:
            self.focks.pop(0)
            self.errors.pop(0)
        n = len(self.focks)
        if n < 2:
            return fock
        b = -np.ones((n + 1, n + 1))
        b[n, n] = 0.0
        for i in range(n):
            for j in range(i + 1):
                b[i, j] = b[j, i] = np.vdot(self.errors[i], self.errors[j])
        rhs = np.zeros(n + 1)
        rhs[n] = -1.0
        try:
            c = np.linalg.solve(b, rhs)[:n]
        except np.linalg.LinAlgError:
            return fock
        return sum(ci * fi for ci, fi in zip(c, self.focks))


def _run_scf(integrals: IntegralSet, solvent_fock=None, max_iterations=200, tol=1e-8, diis_size=8):
    s, h, eri = integrals.overlap, integrals.h_core, integrals.eri
    nel = integrals.n_electrons
    if nel % 2:
        raise ValueError("RHF needs an even electron count")
    nocc = nel // 2
    eps, c = eigh(h, s)
    density = 2.0 * c[:, :nocc] @ c[:, :nocc].T
    diis = _Diis(diis_size)
    energy_old = None
    trace = []
    for it in range(1, max_iterations + 1):
        g = _two_electron(eri, density)
        fock = h + g
        e_solv = 0.0
        if solvent_fock is not None:
            # Fock carries the full interaction; the energy keeps the 1/2 through e_solv
            extra, e_solv, _ = solvent_fock(density)
            fock = fock + extra
        energy = np.sum(density * (h + 0.5 * g)) + integrals.e_nuc + e_solv
        trace.append(energy)
        error = fock @ density @ s - s @ density @ fock
        fock_x = diis.extrapolate(fock, error)
        eps, c = eigh(fock_x, s)
        new_density = 2.0 * c[:, :nocc] @ c[:, :nocc].T
        drms = np.sqrt(np.mean((new_density - density) ** 2))
        density = new_density
        if energy_old is not None and drms < tol and abs(energy - energy_old) < 1e-10:
            break
        energy_old = energy
    else:
        raise ScfConvergenceError(f"SCF not converged in {max_iterations} iterations", energy)
    # final energy at the converged density
    g = _two_electron(eri, density)
    fock = h + g
    e_solv, charges = 0.0, None
    if solvent_fock is not None:
        extra, e_solv, charges = solvent_fock(density)
        fock = fock + extra
    eps, c = eigh(fock, s)
    energy = np.sum(density * (h + 0.5 * g)) + integrals.e_nuc + e_solv
    log.debug("SCF converged in %d iterations, E = %.10f", it, energy)
    return ScfResult(c, eps, float(energy), True, it, density, nocc, float(e_solv), charges, trace)


def rhf(integrals: IntegralSet, max_iterations=200, tol=1e-8) -> ScfResult:
    """Closed-shell RHF with DIIS (8 vectors) from a core-Hamiltonian guess."""
    return _run_scf(integrals, None, max_iterations, tol)


def solvent_potential(integrals: IntegralSet, density: np.ndarray) -> np.ndarray:
    """Molecular electrostatic potential on the tesserae for an AO density."""
    return integrals.v_nuc_tess + np.einsum("ipq,pq->i", integrals.tessera_potential, density)


def pcm_rhf(integrals: IntegralSet, response: SolventResponse, max_iterations=200, tol=1e-8) -> ScfResult:
    """RHF in the PCM reaction field.

    The reported ``total_energy`` is the free energy E_HF + 1/2 q.V; the Fock
    operator carries the derivative of the reaction-field energy.
    """
    if integrals.tessera_potential is None:
        raise ValueError("integrals lack tessera potentials; attach them with with_tesserae()")
    vpq = integrals.tessera_potential
    q_pcm = response.Q
    q_sym = q_pcm + q_pcm.T

    def solvent_fock(density):
        v = solvent_potential(integrals, density)
        q = q_pcm @ v
        extra = 0.5 * np.einsum("ipq,i->pq", vpq, q_sym @ v)
        return extra, 0.5 * float(q @ v), q

    return _run_scf(integrals, solvent_fock, max_iterations, tol)


def to_mo_and_freeze(integrals: IntegralSet, scf: ScfResult, n_frozen_core: int = 0) -> ActiveSpace:
    """Transform to the MO basis and fold the lowest ``n_frozen_core`` orbitals into constants."""
    if n_frozen_core < 0 or n_frozen_core >= scf.n_occ:
        raise ValueError(f"n_frozen_core must be in [0, {scf.n_occ - 1}], got {n_frozen_core}")
    c = scf.mo_coefficients
    order = np.argsort(scf.orbital_energies, kind="stable")
    c = c[:, order]
    core = c[:, :n_frozen_core]
    act = c[:, n_frozen_core:]
    p_core = 2.0 * core @ core.T
    h = integrals.h_core
    g_core = _two_electron(integrals.eri, p_core)
    core_energy = float(np.sum(p_core * (h + 0.5 * g_core)))
    h_eff = act.T @ (h + g_core) @ act
    g = np.einsum("pqrs,pi,qj,rk,sl->ijkl", integrals.eri, act, act, act, act, optimize=True)
    active = list(range(n_frozen_core, c.shape[1]))
    return ActiveSpace(
        n_frozen_core, active, h_eff, g, core_energy, p_core, integrals.e_nuc, act,
        integrals.n_electrons - 2 * n_frozen_core,
    )


def write_fcidump(path, active: ActiveSpace, tol=1e-12) -> None:
    """FCIDUMP export of the active-space Hamiltonian (1-based orbital indices)."""
    m = active.n_orbitals
    lines = [
        f"&FCI NORB={m},NELEC={active.n_active_electrons},MS2=0,",
        "  ORBSYM=" + ",".join(["1"] * m) + ",",
        "  ISYM=1,",
        "&END",
    ]
    g, h = active.g_active, active.h_eff
    for i in range(m):
        for j in range(i + 1):
            for k in range(m):
                for l in range(k + 1):
                    if i * (i + 1) // 2 + j < k * (k + 1) // 2 + l:
                        continue
                    if abs(g[i, j, k, l]) > tol:
                        lines.append(f"{g[i, j, k, l]: .16e} {i + 1:4d} {j + 1:4d} {k + 1:4d} {l + 1:4d}")
    for i in range(m):
        for j in range(i + 1):
            if abs(h[i, j]) > tol:
                lines.append(f"{h[i, j]: .16e} {i + 1:4d} {j + 1:4d}    0    0")
    lines.append(f"{active.constant: .16e}    0    0    0    0")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
