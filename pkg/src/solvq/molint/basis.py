"""Contracted Gaussian basis sets (s and p shells only).

Basis tables use the Gaussian94 text layout so that new elements are pure data::

    ****
    H     0
    S   3   1.00
          3.42525091             0.15432897
          0.62391373             0.53532814
          0.16885540             0.44463454
    ****
    O     0
    SP   3   1.00
          5.03315130            -0.09996723             0.15591627
    ...

Each block opens with the element symbol, then shells (``S``, ``P`` or ``SP``)
with their primitive count; an ``SP`` line carries the s and the p coefficient.
Blocks are separated by ``****``. Coefficients refer to normalized primitives.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi
from pathlib import Path

import numpy as np

from .molecule import Molecule

_STO3G = """
****
H     0
S   3   1.00
      3.42525091             0.15432897
      0.62391373             0.53532814
      0.16885540             0.44463454
****
He     0
S   3   1.00
      6.36242139             0.15432897
      1.15892300             0.53532814
      0.31364979             0.44463454
****
Be     0
S   3   1.00
     30.16787100             0.15432897
      5.49511530             0.53532814
      1.48719270             0.44463454
SP   3   1.00
      1.31483310            -0.09996723             0.15591627
      0.30553890             0.39951283             0.60768372
      0.09937070             0.70011547             0.39195739
****
O     0
S   3   1.00
    130.70932000             0.15432897
     23.80886100             0.53532814
      6.44360830             0.44463454
SP   3   1.00
      5.03315130            -0.09996723             0.15591627
      1.16959610             0.39951283             0.60768372
      0.38038900             0.70011547             0.39195739
****
"""

_631G = """
****
H     0
S   3   1.00
     18.73113700             0.03349460
      2.82539370             0.23472695
      0.64012170             0.81375733
S   1   1.00
      0.16127780             1.00000000
****
He     0
S   3   1.00
     38.42163400             0.02376600
      5.77803000             0.15467900
      1.24177400             0.46963000
S   1   1.00
      0.29796400             1.00000000
****
Be     0
S   6   1.00
   1264.58570000             0.00194480
    189.93681000             0.01483510
     43.15908900             0.07209060
     12.09866300             0.23715420
      3.80632320             0.46919870
      1.27289030             0.35652020
SP   3   1.00
      3.19646310            -0.11264870             0.05598020
      0.74781330            -0.22950640             0.26155060
      0.21996630             1.18691670             0.79397230
SP   1   1.00
      0.08230990             1.00000000             1.00000000
****
O     0
S   6   1.00
   5484.67170000             0.00183110
    825.23495000             0.01395010
    188.04696000             0.06844510
     52.96450000             0.23271430
     16.89757000             0.47019300
      5.79963530             0.35852090
SP   3   1.00
     15.53961600            -0.11077750             0.07087430
      3.59993360            -0.14802630             0.33975280
      1.01376180             1.13076700             0.72715860
SP   1   1.00
      0.27000580             1.00000000             1.00000000
****
"""

_P_POWERS = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def parse_basis_text(text: str) -> dict[str, list[tuple[int, np.ndarray, np.ndarray]]]:
    """Parse Gaussian94-style text into ``{element: [(l, exponents, coefs), ...]}``."""
    table: dict[str, list] = {}
    lines = [ln.split("!")[0].strip() for ln in text.splitlines()]
    lines = [ln.replace("D", "E").replace("d", "e") if _is_numeric_line(ln) else ln for ln in lines]
    i = 0
    while i < len(lines):
        ln = lines[i]
        if not ln or ln.startswith("****") or ln.startswith("#"):
            i += 1
            continue
        element = ln.split()[0].capitalize()
        shells = table.setdefault(element, [])
        i += 1
        while i < len(lines) and not lines[i].startswith("****"):
            head = lines[i].split()
            if not head:
                i += 1
                continue
            kind, nprim = head[0].upper(), int(head[1])
            rows = np.array([[float(v) for v in lines[i + 1 + k].split()] for k in range(nprim)])
            if kind == "S":
                shells.append((0, rows[:, 0], rows[:, 1]))
            elif kind == "P":
                shells.append((1, rows[:, 0], rows[:, 1]))
            elif kind == "SP":
                shells.append((0, rows[:, 0], rows[:, 1]))
                shells.append((1, rows[:, 0], rows[:, 2]))
            else:
                raise ValueError(f"unsupported shell type {kind!r} for {element} (only S, P, SP)")
            i += 1 + nprim
    return table


def _is_numeric_line(ln: str) -> bool:
    parts = ln.split()
    if not parts:
        return False
    try:
        float(parts[0].replace("D", "E"))
        return "." in parts[0]
    except ValueError:
        return False


BASIS_TABLES = {
    "STO-3G": parse_basis_text(_STO3G),
    "6-31G": parse_basis_text(_631G),
}


def _double_factorial(n: int) -> int:
    return 1 if n <= 0 else n * _double_factorial(n - 2)


def primitive_norm(alpha, powers) -> np.ndarray:
    l, m, n = powers
    lsum = l + m + n
    num = (2.0 * alpha / pi) ** 0.75 * (4.0 * alpha) ** (lsum / 2.0)
    den = np.sqrt(_double_factorial(2 * l - 1) * _double_factorial(2 * m - 1) * _double_factorial(2 * n - 1))
    return num / den


@dataclass(frozen=True)
class Shell:
    center_index: int
    l: int
    exponents: np.ndarray
    coefficients: np.ndarray


@dataclass(frozen=True)
class BasisFunction:
    """Contracted Cartesian Gaussian; ``coefs`` already include primitive and contraction norms."""

    center: np.ndarray
    center_index: int
    powers: tuple[int, int, int]
    exps: np.ndarray
    coefs: np.ndarray


@dataclass(frozen=True)
class BasisSet:
    name: str
    shells: tuple[Shell, ...]
    functions: tuple[BasisFunction, ...]

    @property
    def n_basis(self) -> int:
        return len(self.functions)


def _contracted_self_overlap(exps, coefs, powers) -> float:
    # <g_a|g_b> for same-center Cartesian primitives, summed over the contraction
    l, m, n = powers
    a = exps[:, None] + exps[None, :]
    fac = _double_factorial(2 * l - 1) * _double_factorial(2 * m - 1) * _double_factorial(2 * n - 1)
    lsum = l + m + n
    ov = (pi / a) ** 1.5 * fac / (2.0 * a) ** lsum
    return float(coefs @ ov @ coefs)


def build_basis(molecule: Molecule, basis_name: str = "STO-3G", basis_file=None) -> BasisSet:
    """Assemble the contracted basis for ``molecule``.

    Functions are ordered by atom, then shell (s before p as listed in the
    table), then x, y, z for p shells. ``basis_file`` overrides the embedded
    table with a Gaussian94-format file.
    """
    if basis_file is not None:
        table = parse_basis_text(Path(basis_file).read_text())
    else:
        key = basis_name.upper()
        if key not in BASIS_TABLES:
            raise ValueError(f"unknown basis {basis_name!r}; available: {sorted(BASIS_TABLES)}")
        table = BASIS_TABLES[key]
    shells, functions = [], []
    for ia, atom in enumerate(molecule.atoms):
        if atom.symbol not in table:
            raise ValueError(f"element {atom.symbol} not present in basis {basis_name!r}")
        for l, exps, coefs in table[atom.symbol]:
            shells.append(Shell(ia, l, np.array(exps), np.array(coefs)))
            for powers in ((0, 0, 0),) if l == 0 else _P_POWERS:
                c = np.array(coefs) * primitive_norm(np.array(exps), powers)
                c = c / np.sqrt(_contracted_self_overlap(np.array(exps), c, powers))
                functions.append(BasisFunction(atom.position.copy(), ia, powers, np.array(exps), c))
    return BasisSet(basis_name, tuple(shells), tuple(functions))
