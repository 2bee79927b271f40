import functools
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from solvq.cavity import build_cavity, solvent_response
from solvq.config import RunConfig, bundled_config, load_config
from solvq.ferm2qubit import build_h0, build_interaction_tables
from solvq.molint import Molecule, build_basis, compute_integrals, potential_integrals
from solvq.pipeline import build_system
from solvq.scf import pcm_rhf, rhf, to_mo_and_freeze

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def system(stem: str, frozen_core: int = 0, basis: str = "STO-3G", epsilon: float = 46.7, symmetrize=False,
           orbitals="gas"):
    cfg = RunConfig(molecule=f"{stem}.xyz", basis=basis, method="pcm-vqe", frozen_core=frozen_core,
                    orbitals=orbitals, solvent={"epsilon": epsilon, "symmetrize": symmetrize})
    return build_system(cfg)


def h2_molecule(r=1.4):
    return Molecule.from_atoms([("H", [0, 0, 0]), ("H", [0, 0, r])], name="h2")


@functools.lru_cache(maxsize=None)
def h2_system(r=1.4, epsilon=None):
    """H2/STO-3G in bohr; solvated tables when ``epsilon`` is given."""
    mol = h2_molecule(r)
    basis = build_basis(mol, "STO-3G")
    ints = compute_integrals(mol, basis)
    scf = rhf(ints)
    active = to_mo_and_freeze(ints, scf, 0)
    out = {"molecule": mol, "basis": basis, "integrals": ints, "scf": scf, "active": active,
           "h0": build_h0(active), "tables": None}
    if epsilon is not None:
        cav = build_cavity(mol, None, 1.2, 2)
        vpq, vn = potential_integrals(mol, basis, cav.points)
        ints = ints.with_tesserae(vpq, vn)
        resp = solvent_response(cav, epsilon)
        out.update(integrals=ints, response=resp, tables=build_interaction_tables(active, ints, resp, mol),
                   pcm=pcm_rhf(ints, resp))
    return out


@functools.lru_cache(maxsize=None)
def bundled_run(name: str, **overrides):
    """Execute a bundled config once per session; returns the report dict."""
    from solvq.pipeline import execute

    cfg = load_config(bundled_config(name), overrides or None)
    report, _ = execute(cfg)
    return report


def h3p_rdms():
    return json.loads((FIXTURES / "h3p_rdm.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance ledger printed at the end of every session
ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def acceptance():
    def record(key: str, ok: bool, detail: str):
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[key] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
