"""Gaussian-orbital integral engine."""

from .basis import BasisSet, build_basis, parse_basis_text
from .boys import boys
from .integrals import IntegralSet, compute_integrals, potential_integrals
from .molecule import ANGSTROM_TO_BOHR, Atom, Molecule, parse_xyz, read_xyz

__all__ = [
    "ANGSTROM_TO_BOHR", "Atom", "BasisSet", "IntegralSet", "Molecule", "boys", "build_basis",
    "compute_integrals", "parse_basis_text", "parse_xyz", "potential_integrals", "read_xyz",
]
