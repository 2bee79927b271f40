"""Molecular geometry container and XYZ parsing."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ANGSTROM_TO_BOHR = 1.0 / 0.52917721092

ATOMIC_NUMBERS = {
    "H": 1, "He": 2, "Li": 3, "Be": 4, "B": 5, "C": 6, "N": 7, "O": 8, "F": 9, "Ne": 10,
}


@dataclass(frozen=True)
class Atom:
    symbol: str
    charge: float
    position: np.ndarray  # bohr

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    charge: int = 0
    multiplicity: int = 1
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if self.multiplicity != 1:
            raise ValueError("only closed-shell singlets (multiplicity 1) are supported")
        n = self.n_electrons
        if n <= 0 or n % 2:
            raise ValueError(f"electron count must be even and positive, got {n}")

    @property
    def n_electrons(self) -> int:
        return int(round(sum(a.charge for a in self.atoms))) - self.charge

    @property
    def coordinates(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms])

    @property
    def charges(self) -> np.ndarray:
        return np.array([a.charge for a in self.atoms])

    @property
    def symbols(self) -> list[str]:
        return [a.symbol for a in self.atoms]

    def nuclear_repulsion(self) -> float:
        xyz, z = self.coordinates, self.charges
        e = 0.0
        for i in range(len(z)):
            for j in range(i):
                r = np.linalg.norm(xyz[i] - xyz[j])
                if r < 1e-8:
                    raise ValueError(f"nuclei {j} and {i} coincide")
                e += z[i] * z[j] / r
        return e

    def transformed(self, rotation=None, translation=None) -> "Molecule":
        """Rigidly move the molecule: r -> R r + t."""
        rot = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        t = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        atoms = [Atom(a.symbol, a.charge, rot @ a.position + t) for a in self.atoms]
        return Molecule(tuple(atoms), self.charge, self.multiplicity, self.name)

    @classmethod
    def from_atoms(cls, spec, charge=0, multiplicity=1, unit="bohr", name=""):
        """Build from ``[(symbol, (x, y, z)), ...]``."""
        scale = ANGSTROM_TO_BOHR if unit.lower().startswith("ang") else 1.0
        atoms = []
        for symbol, xyz in spec:
            symbol = _normalize_symbol(symbol)
            atoms.append(Atom(symbol, float(ATOMIC_NUMBERS[symbol]), np.asarray(xyz, float) * scale))
        return cls(tuple(atoms), charge, multiplicity, name)


def _normalize_symbol(symbol: str) -> str:
    s = symbol.strip().capitalize()
    if s not in ATOMIC_NUMBERS:
        raise ValueError(f"unknown element {symbol!r}")
    return s


_KV = re.compile(r"(charge|mult(?:iplicity)?)\s*=\s*([+-]?\d+)", re.IGNORECASE)


def parse_xyz(text: str, name: str = "") -> Molecule:
    """Parse XYZ text (coordinates in angstrom).

    The comment line may carry ``charge=+1 mult=1``; both default to a neutral singlet.
    """
    lines = text.strip("\n").splitlines()
    try:
        natoms = int(lines[0].split()[0])
    except (IndexError, ValueError) as exc:
        raise ValueError("XYZ: first line must hold the atom count") from exc
    comment = lines[1] if len(lines) > 1 else ""
    charge, mult = 0, 1
    for key, value in _KV.findall(comment):
        if key.lower() == "charge":
            charge = int(value)
        else:
            mult = int(value)
    body = [ln for ln in lines[2:] if ln.strip()]
    if len(body) != natoms:
        raise ValueError(f"XYZ: expected {natoms} atom lines, found {len(body)}")
    spec = []
    for ln in body:
        parts = ln.split()
        spec.append((parts[0], [float(v) for v in parts[1:4]]))
    return Molecule.from_atoms(spec, charge=charge, multiplicity=mult, unit="angstrom", name=name)


def read_xyz(path) -> Molecule:
    path = Path(path)
    return parse_xyz(path.read_text(), name=path.stem)
