"""End-to-end execution of a :class:`RunConfig`: integrals, cavity, SCF, qubit
Hamiltonian, then the requested solver or reference method."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cavity import Cavity, SolventResponse, build_cavity, solvent_response
from .config import RunConfig
from .ferm2qubit import InteractionTables, QubitOperator, build_h0, build_interaction_tables
from .molint import IntegralSet, Molecule, build_basis, compute_integrals, potential_integrals, read_xyz
from .oracle import fci, pcm_fci
from .qsim import AnsatzCircuit, Statevector, apply_ansatz, hf_state, measure_rdms
from .scf import ActiveSpace, ScfResult, pcm_rhf, rhf, to_mo_and_freeze, write_fcidump
from .solver import (FreeEnergy, SolvationReport, VqeConfig, polarization_energy, run_pcm_vqe, run_vqe,
                     solvation_free_energy)

log = logging.getLogger(__name__)

TIMING_KEYS = ("timing",)
U_POL_SAMPLES = 50


@dataclass
class System:
    molecule: Molecule
    integrals: IntegralSet
    scf: ScfResult
    active: ActiveSpace
    h0: QubitOperator
    cavity: Cavity | None = None
    response: SolventResponse | None = None
    tables: InteractionTables | None = None
    scf_pcm: ScfResult | None = None

    @property
    def n_electrons(self) -> int:
        return self.active.n_active_electrons

    @property
    def n_qubits(self) -> int:
        return self.active.n_qubits


def build_system(cfg: RunConfig, solvated: bool | None = None) -> System:
    solvated = cfg.solvated if solvated is None else solvated
    mol = read_xyz(cfg.molecule_path())
    basis = build_basis(mol, cfg.basis)
    ints = compute_integrals(mol, basis)
    cavity = response = scf_pcm = None
    if solvated:
        s = cfg.solvent
        cavity = build_cavity(mol, s.radii, s.scale, s.mesh_level)
        vpq, vnuc = potential_integrals(mol, basis, cavity.points)
        ints = ints.with_tesserae(vpq, vnuc)
        response = solvent_response(cavity, s.epsilon, s.symmetrize)
    scf = rhf(ints)
    orbitals = scf
    if solvated:
        scf_pcm = pcm_rhf(ints, response)
        if cfg.orbitals == "pcm":
            orbitals = scf_pcm
    active = to_mo_and_freeze(ints, orbitals, cfg.frozen_core)
    tables = build_interaction_tables(active, ints, response, mol) if solvated else None
    return System(mol, ints, scf, active, build_h0(active), cavity, response, tables, scf_pcm)


def _system_info(cfg: RunConfig, sysm: System) -> dict:
    info = {
        "molecule": sysm.molecule.name,
        "formula": "".join(sysm.molecule.symbols),
        "charge": sysm.molecule.charge,
        "basis": cfg.basis,
        "frozen_core": cfg.frozen_core,
        "n_qubits": sysm.n_qubits,
        "n_active_electrons": sysm.n_electrons,
        "e_hf_Ha": sysm.scf.total_energy,
    }
    if sysm.cavity is not None:
        info.update(epsilon=cfg.solvent.epsilon, mesh_level=cfg.solvent.mesh_level,
                    n_tesserae=sysm.cavity.n_tesserae, g_pcm_hf_Ha=sysm.scf_pcm.total_energy,
                    symmetrized=cfg.solvent.symmetrize)
    return info


def _u_pol(vac: SolvationReport, sysm: System, vcfg: VqeConfig):
    circ = AnsatzCircuit.from_excitations(sysm.n_qubits, vac.excitations, vcfg.ansatz)
    if not vcfg.shots_mode:
        return polarization_energy(vac.theta, circ, sysm.tables, sysm.n_electrons), None
    return shot_polarization_energy(vac.theta, circ, sysm.tables, sysm.n_electrons, vcfg.shots, vcfg.seed,
                                    vcfg.depolarizing)


def shot_polarization_energy(theta_vac, circuit: AnsatzCircuit, tables: InteractionTables, n_electrons: int,
                             n_shots: int = 8192, seed=None, depolarizing: float = 0.0,
                             n_samples: int = U_POL_SAMPLES) -> tuple[float, float]:
    """U_pol from ``n_samples`` independent shot estimates of the 1-RDM at ``theta_vac``.

    U_pol is quadratic in the 1-RDM, so averaging per-sample values carries a
    bias of order the sampling variance; it is evaluated at the mean 1-RDM
    instead. The standard error is the spread of per-sample values over sqrt(n).
    """
    psi = apply_ansatz(hf_state(circuit.n_qubits, n_electrons // 2, n_electrons // 2), circuit, theta_vac)
    rng = np.random.default_rng(seed)
    ds = [measure_rdms(psi, n_electrons, "shots", n_shots, int(rng.integers(2**63 - 1)), depolarizing,
                       two_body=False).d for _ in range(n_samples)]
    per_sample = [tables.solvation_energy(d) for d in ds]
    return tables.solvation_energy(np.mean(ds, axis=0)), float(np.std(per_sample, ddof=1) / np.sqrt(n_samples))


def _recovery(cost_at_ref: float, value: float, exact: float) -> float | None:
    span = cost_at_ref - exact
    return None if abs(span) < 1e-12 else float((cost_at_ref - value) / span)


def execute(cfg: RunConfig):
    """Run one configuration; returns ``(report_dict, artifacts)`` where artifacts hold the
    final state, trace rows and optional solver reports for the caller to persist."""
    t0 = time.perf_counter()
    sysm = build_system(cfg)
    info = _system_info(cfg, sysm)
    method = cfg.method
    state = None
    trace = []
    extra: dict = {}
    if method in ("hf", "pcm-hf"):
        res = sysm.scf_pcm if method == "pcm-hf" else sysm.scf
        value = res.total_energy
        trace = [(i, e, float("nan")) for i, e in enumerate(res.energy_trace)]
        extra = {"n_iterations": res.n_iterations, "converged": res.converged,
                 "orbital_energies": [float(e) for e in res.orbital_energies],
                 "solvent_energy_Ha": res.solvent_energy,
                 "charges": None if res.charges is None else [float(q) for q in res.charges]}
        if method == "pcm-hf":
            extra["delta_g_Ha"] = res.total_energy - sysm.scf.total_energy
        converged = res.converged
    elif method in ("fci", "pcm-fci"):
        gas = fci(sysm.active)
        if method == "fci":
            res = gas
        else:
            res = pcm_fci(sysm.active, sysm.tables, cfg.oracle.damping)
            extra = {"delta_g_Ha": res.energy - gas.energy, "solvent_energy_Ha": res.solvent_energy,
                     "u_pol_Ha": sysm.tables.solvation_energy(gas.d),
                     "charges": [float(q) for q in res.charges]}
        value = res.energy
        trace = [(i + 1, g, float("nan")) for i, g in enumerate(res.trace)] or [(0, value, float("nan"))]
        extra.update(residual=res.residual, n_iterations=res.n_iterations, converged=True, rdm1=res.d.tolist())
        state = Statevector(res.vector, sysm.n_qubits)
        converged = True
    else:
        vcfg = cfg.vqe_config()
        vac = run_vqe(vcfg, sysm.h0, sysm.n_electrons, active=sysm.active)
        report = vac
        if method == "pcm-vqe":
            report = run_pcm_vqe(vcfg, sysm.h0, sysm.tables, sysm.n_electrons, excitations=vac.excitations,
                                 theta0=vac.theta, active=sysm.active)
            dg, dg_err = solvation_free_energy(report, vac)
            u_pol, u_err = _u_pol(vac, sysm, vcfg)
            report.delta_g, report.u_pol = dg, u_pol
            extra = {"delta_g_stderr_Ha": dg_err, "u_pol_stderr_Ha": u_err,
                     "vacuum": {"value_Ha": vac.value, "theta": [float(t) for t in vac.theta],
                                "converged": vac.converged, "n_iterations": vac.n_iterations,
                                "stderr_Ha": vac.stderr, "timing": vac.timing}}
        if sysm.n_qubits <= 14 and not vcfg.shots_mode:
            exact = pcm_fci(sysm.active, sysm.tables, cfg.oracle.damping).energy if sysm.tables is not None \
                else fci(sysm.active).energy
            ref_cost = FreeEnergy(sysm.h0, AnsatzCircuit(sysm.n_qubits), sysm.n_electrons, sysm.tables,
                                  sysm.active)(np.zeros(0))
            extra.update(reference_exact_Ha=exact, recovery=_recovery(ref_cost, report.value, exact))
        report.system = info
        value = report.value
        trace = report.trace
        converged = report.converged
        circ = AnsatzCircuit.from_excitations(sysm.n_qubits, report.excitations, vcfg.ansatz)
        state = apply_ansatz(hf_state(sysm.n_qubits, sysm.n_electrons // 2, sysm.n_electrons // 2), circ,
                             report.theta)
        out = report.to_dict()
        out.update(extra)
        out["timing"] = {**out["timing"], "total_s": time.perf_counter() - t0}
        out["name"] = cfg.name
        return out, {"state": state, "trace": trace, "system": sysm}
    out = {"schema_version": 1, "name": cfg.name, "method": method, "system": info,
           "n_qubits": sysm.n_qubits, "n_electrons": sysm.n_electrons, "value_Ha": value,
           "converged": converged, **extra, "timing": {"total_s": time.perf_counter() - t0}}
    return out, {"state": state, "trace": trace, "system": sysm}


def write_outputs(cfg: RunConfig, report: dict, artifacts: dict, dump_state=False, dump_hamiltonian=False) -> Path:
    out = cfg.output_path()
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved-config.json").write_text(json.dumps(cfg.resolved(), indent=1, sort_keys=True) + "\n")
    (out / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "value_Ha", "grad_norm"])
        for i, v, g in artifacts["trace"]:
            w.writerow([i, f"{v:.12f}", "" if g != g else f"{g:.6e}"])
    sysm: System = artifacts["system"]
    if sysm.cavity is not None:
        sysm.cavity.to_csv(out / "cavity.csv")
    if dump_state and artifacts["state"] is not None:
        artifacts["state"].to_csv(out / "state.csv")
    if dump_hamiltonian:
        (out / "hamiltonian.json").write_text(sysm.h0.to_json() + "\n")
        write_fcidump(out / "FCIDUMP", sysm.active)
    return out


def strip_timing(report):
    """Copy of a report without wall-clock fields at any depth (for determinism checks)."""
    if isinstance(report, dict):
        return {k: strip_timing(v) for k, v in report.items() if k not in TIMING_KEYS}
    if isinstance(report, list):
        return [strip_timing(v) for v in report]
    return report
