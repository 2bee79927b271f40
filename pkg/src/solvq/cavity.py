"""Molecular cavity tessellation and IEF-PCM solvent response.

The cavity is a union of atom-centred spheres. Each sphere is meshed by a
subdivided icosahedron; tesserae lying inside another sphere are dropped and
partially buried ones keep only their exposed area, estimated by splitting the
tessera into smaller spherical triangles.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import lapack, lu_solve
from scipy.spatial.distance import cdist

from .molint import ANGSTROM_TO_BOHR, Molecule

# Bondi radii in angstrom; Be is not in Bondi's table and is pinned here.
BONDI_RADII = {"H": 1.20, "He": 1.40, "Be": 1.53, "O": 1.52, "C": 1.70, "N": 1.55, "F": 1.47}
DMSO_EPSILON = 46.7
DIAGONAL_FACTOR = 1.0694
_EXPOSURE_SPLITS = 3  # each tessera is sampled by 4**3 sub-triangles


@dataclass(frozen=True)
class Tessera:
    center: np.ndarray
    area: float
    normal: np.ndarray
    sphere: int


@dataclass(frozen=True)
class Cavity:
    points: np.ndarray  # (N, 3) bohr
    areas: np.ndarray  # (N,) bohr^2
    normals: np.ndarray  # (N, 3)
    sphere_index: np.ndarray  # (N,)
    sphere_centers: np.ndarray
    sphere_radii: np.ndarray  # bohr

    @property
    def n_tesserae(self) -> int:
        return len(self.areas)

    @property
    def tesserae(self) -> list[Tessera]:
        return [
            Tessera(self.points[i], float(self.areas[i]), self.normals[i], int(self.sphere_index[i]))
            for i in range(self.n_tesserae)
        ]

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def transformed(self, rotation=None, translation=None) -> "Cavity":
        rot = np.eye(3) if rotation is None else np.asarray(rotation, float)
        t = np.zeros(3) if translation is None else np.asarray(translation, float)
        return Cavity(
            self.points @ rot.T + t, self.areas.copy(), self.normals @ rot.T, self.sphere_index.copy(),
            self.sphere_centers @ rot.T + t, self.sphere_radii.copy(),
        )

    def to_csv(self, path) -> None:
        """Write ``index,x,y,z,area,nx,ny,nz`` rows (bohr)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "x", "y", "z", "area", "nx", "ny", "nz"])
            for i in range(self.n_tesserae):
                w.writerow([i, *(f"{v:.12e}" for v in self.points[i]), f"{self.areas[i]:.12e}",
                            *(f"{v:.12e}" for v in self.normals[i])])

    @classmethod
    def from_csv(cls, path) -> "Cavity":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        pts, areas, normals = data[:, 1:4], data[:, 4], data[:, 5:8]
        return cls(pts, areas, normals, np.zeros(len(areas), int), np.zeros((0, 3)), np.zeros(0))


def _icosahedron():
    phi = (1 + 5**0.5) / 2
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], float)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _split(tri: np.ndarray) -> np.ndarray:
    """Split spherical triangles (T, 3, 3) into four each, projecting midpoints onto the sphere."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]

    def mid(x, y):
        m = x + y
        return m / np.linalg.norm(m, axis=1, keepdims=True)

    ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
    out = np.stack([
        np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
        np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1),
    ], 1)
    return out.reshape(-1, 3, 3)


@lru_cache(maxsize=8)
def _unit_sphere_mesh(level: int):
    v, f = _icosahedron()
    tri = v[f]
    for _ in range(level):
        tri = _split(tri)
    sub = tri
    for _ in range(_EXPOSURE_SPLITS):
        sub = _split(sub)
    nsub = 4**_EXPOSURE_SPLITS
    sub = sub.reshape(len(tri), nsub, 3, 3)
    area = _spherical_area(sub.reshape(-1, 3, 3)).reshape(len(tri), nsub)
    direction = sub.sum(axis=2)
    direction /= np.linalg.norm(direction, axis=2, keepdims=True)
    return area, direction


def _spherical_area(tri: np.ndarray) -> np.ndarray:
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = 1 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def build_cavity(molecule: Molecule, radii=None, scale: float = 1.2, subdivision_level: int = 2) -> Cavity:
    """Tessellate the union of scaled atomic spheres.

    ``radii`` maps element symbols to radii in angstrom (Bondi by default).
    Each sphere starts from an icosahedron whose 20 faces are split into four
    ``subdivision_level`` times, i.e. ``20 * 4**level`` tesserae per sphere.
    """
    radii = dict(BONDI_RADII if radii is None else radii)
    if scale <= 0:
        raise ValueError("scale must be positive")
    if not 1 <= subdivision_level <= 5:
        raise ValueError("subdivision_level must be in [1, 5]")
    centers, rads = [], []
    for atom in molecule.atoms:
        if atom.symbol not in radii:
            raise ValueError(f"no cavity radius for element {atom.symbol}")
        r = radii[atom.symbol] * scale * ANGSTROM_TO_BOHR
        duplicate = any(np.allclose(atom.position, c, atol=1e-10) and abs(r - rr) < 1e-10
                        for c, rr in zip(centers, rads))
        if not duplicate:
            centers.append(atom.position)
            rads.append(r)
    return _tessellate(np.array(centers), np.array(rads), subdivision_level)


def spheres_cavity(centers, radii_bohr, subdivision_level: int = 3) -> Cavity:
    """Cavity from explicit spheres (bohr); handy for analytic checks."""
    return _tessellate(np.atleast_2d(np.asarray(centers, float)), np.atleast_1d(np.asarray(radii_bohr, float)),
                       subdivision_level)


def _tessellate(centers, rads, level) -> Cavity:
    sub_area, sub_dir = _unit_sphere_mesh(level)  # (T, nsub), (T, nsub, 3)
    pts, areas, normals, owner = [], [], [], []
    for k, (c, r) in enumerate(zip(centers, rads)):
        subpts = c + r * sub_dir  # (T, nsub, 3)
        exposed = np.ones(sub_area.shape, bool)
        for j, (cj, rj) in enumerate(zip(centers, rads)):
            if j == k:
                continue
            dist = np.linalg.norm(subpts - cj, axis=2)
            buried = dist < rj - 1e-10
            if j < k:
                buried |= np.abs(dist - rj) <= 1e-10
            exposed &= ~buried
        w = sub_area * exposed
        a = w.sum(axis=1)
        keep = a > 0
        d = np.einsum("tn,tnx->tx", w[keep], sub_dir[keep])
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        pts.append(c + r * d)
        normals.append(d)
        areas.append(a[keep] * r * r)
        owner.append(np.full(int(keep.sum()), k))
    return Cavity(np.concatenate(pts), np.concatenate(areas), np.concatenate(normals), np.concatenate(owner),
                  centers, rads)


def calderon_matrices(cavity: Cavity):
    """Collocation matrices (S, D, A) of the single- and double-layer operators."""
    s_pts, n, a = cavity.points, cavity.normals, cavity.areas
    dist = cdist(s_pts, s_pts)
    np.fill_diagonal(dist, 1.0)
    if np.any(dist < 1e-10):
        i, j = np.argwhere(dist < 1e-10)[0]
        raise ValueError(f"tesserae {i} and {j} have coincident centers")
    S = 1.0 / dist
    np.fill_diagonal(S, DIAGONAL_FACTOR * np.sqrt(4 * np.pi / a))
    # (s_i - s_j) . n_j without materializing the (N, N, 3) difference tensor
    D = (s_pts @ n.T - np.einsum("jx,jx->j", s_pts, n)[None, :]) / dist**3
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -(2 * np.pi + D @ a) / a)
    return S, D, np.diag(a)


@dataclass(frozen=True)
class SolventResponse:
    epsilon: float
    S: np.ndarray
    D: np.ndarray
    A: np.ndarray
    Q: np.ndarray
    symmetrized: bool = False

    @property
    def n_tesserae(self) -> int:
        return self.Q.shape[0]


class SingularResponseError(np.linalg.LinAlgError):
    pass


def response_matrix(S, D, A, epsilon: float, symmetrize: bool = False) -> SolventResponse:
    """Q = -(2pi f S - D A S)^-1 (2pi 1 - D A) with f = (eps+1)/(eps-1)."""
    if epsilon <= 1.0:
        raise ValueError("epsilon must exceed 1")
    f = (epsilon + 1.0) / (epsilon - 1.0)
    da = D * np.diag(A)[None, :]
    lhs = 2 * np.pi * f * S - da @ S
    rhs = 2 * np.pi * np.eye(len(S)) - da
    lu, piv, info = lapack.dgetrf(lhs)
    anorm = np.linalg.norm(lhs, 1)
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    if info > 0 or rcond < 1e-15:
        raise SingularResponseError(f"PCM matrix is singular (1-norm condition number ~ {1 / max(rcond, 1e-300):.3e})")
    Q = -lu_solve((lu, piv), rhs, check_finite=False)
    if symmetrize:
        Q = 0.5 * (Q + Q.T)
    if not np.all(np.isfinite(Q)):
        raise SingularResponseError("non-finite entries in the response matrix")
    return SolventResponse(float(epsilon), S, D, A, Q, symmetrize)


def solvent_response(cavity: Cavity, epsilon: float = DMSO_EPSILON, symmetrize: bool = False) -> SolventResponse:
    return response_matrix(*calderon_matrices(cavity), epsilon, symmetrize)


def apparent_charges(response: SolventResponse, V) -> np.ndarray:
    V = np.asarray(V, float)
    if V.shape != (response.n_tesserae,):
        raise ValueError(f"potential has shape {V.shape}, expected ({response.n_tesserae},)")
    return response.Q @ V
