"""McMurchie-Davidson integrals over contracted Cartesian s/p Gaussians.

All four integral classes (overlap, kinetic, point-charge potential, electron
repulsion) share the Hermite expansion coefficients ``E`` of Gaussian overlap
distributions and the Hermite Coulomb tensor ``R``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .basis import BasisFunction, BasisSet
from .boys import boys
from .molecule import Molecule


@dataclass(frozen=True)
class IntegralSet:
    overlap: np.ndarray
    kinetic: np.ndarray
    nuclear: np.ndarray
    eri: np.ndarray  # chemists' notation (pq|rs)
    e_nuc: float
    n_electrons: int
    tessera_potential: np.ndarray | None = None  # (N_tess, n, n), (v_pq)_i
    v_nuc_tess: np.ndarray | None = None  # (N_tess,), (v_N)_i

    @property
    def h_core(self) -> np.ndarray:
        return self.kinetic + self.nuclear

    @property
    def n_basis(self) -> int:
        return self.overlap.shape[0]

    def with_tesserae(self, tessera_potential, v_nuc_tess) -> "IntegralSet":
        return replace(self, tessera_potential=tessera_potential, v_nuc_tess=v_nuc_tess)


def hermite_expansion(la: int, lb: int, a, b, xab: float) -> np.ndarray:
    """E^{ij}_t for 0<=i<=la, 0<=j<=lb; shape ``(la+1, lb+1, la+lb+1) + a.shape``."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    p = a + b
    xpa = -b / p * xab
    xpb = a / p * xab
    e = np.zeros((la + 1, lb + 1, la + lb + 2) + a.shape)  # one padding slot in t
    e[0, 0, 0] = np.exp(-a * b / p * xab * xab)
    half_p = 0.5 / p
    for i in range(la + 1):
        for j in range(lb + 1):
            if i == 0 and j == 0:
                continue
            if i > 0:
                prev, x = e[i - 1, j], xpa
            else:
                prev, x = e[i, j - 1], xpb
            for t in range(i + j + 1):
                val = x * prev[t] + (t + 1) * prev[t + 1]
                if t > 0:
                    val = val + half_p * prev[t - 1]
                e[i, j, t] = val
    return e[:, :, : la + lb + 1]


def hermite_coulomb(order: int, alpha, pc) -> np.ndarray:
    """Hermite Coulomb integrals R_{tuv}(alpha, PC) for t+u+v <= order.

    ``pc`` has shape ``(..., 3)`` and ``alpha`` broadcasts against ``pc[..., 0]``.
    Returns shape ``(...) + (order+1,)*3`` with zeros beyond the order.
    """
    pc = np.asarray(pc, float)
    x, y, z = pc[..., 0], pc[..., 1], pc[..., 2]
    alpha = np.broadcast_to(np.asarray(alpha, float), x.shape)
    f = boys(order, alpha * (x * x + y * y + z * z))
    L = order
    r = np.zeros((L + 1, L + 1, L + 1, L + 1) + x.shape)
    m2a = -2.0 * alpha
    for n in range(L + 1):
        r[n, 0, 0, 0] = m2a**n * f[..., n]
    for n in range(L - 1, -1, -1):
        for s in range(1, L - n + 1):
            for t in range(s + 1):
                for u in range(s - t + 1):
                    v = s - t - u
                    if t > 0:
                        val = x * r[n + 1, t - 1, u, v]
                        if t > 1:
                            val = val + (t - 1) * r[n + 1, t - 2, u, v]
                    elif u > 0:
                        val = y * r[n + 1, t, u - 1, v]
                        if u > 1:
                            val = val + (u - 1) * r[n + 1, t, u - 2, v]
                    else:
                        val = z * r[n + 1, t, u, v - 1]
                        if v > 1:
                            val = val + (v - 1) * r[n + 1, t, u, v - 2]
                    r[n, t, u, v] = val
    return np.moveaxis(r[0], (0, 1, 2), (-3, -2, -1))


class _PairData:
    """Gaussian-product data for one pair of contracted functions (flattened primitives)."""

    def __init__(self, fa: BasisFunction, fb: BasisFunction):
        a = np.repeat(fa.exps, len(fb.exps))
        b = np.tile(fb.exps, len(fa.exps))
        self.coef = np.repeat(fa.coefs, len(fb.coefs)) * np.tile(fb.coefs, len(fa.coefs))
        self.p = a + b
        self.center = (a[:, None] * fa.center + b[:, None] * fb.center) / self.p[:, None]
        self.lmax = tuple(fa.powers[d] + fb.powers[d] for d in range(3))
        ex = [
            hermite_expansion(fa.powers[d], fb.powers[d], a, b, fa.center[d] - fb.center[d])[
                fa.powers[d], fb.powers[d]
            ]
            for d in range(3)
        ]
        lx, ly, lz = self.lmax
        self.tuv = np.array([(t, u, v) for t in range(lx + 1) for u in range(ly + 1) for v in range(lz + 1)])
        # E_t E_u E_v per primitive pair, shape (K, n_tuv)
        self.e = np.stack([ex[0][t] * ex[1][u] * ex[2][v] for t, u, v in self.tuv], axis=1)
        self.order = lx + ly + lz


def _overlap_kinetic(fa: BasisFunction, fb: BasisFunction) -> tuple[float, float]:
    a = np.repeat(fa.exps, len(fb.exps))
    b = np.tile(fb.exps, len(fa.exps))
    coef = np.repeat(fa.coefs, len(fb.coefs)) * np.tile(fb.coefs, len(fa.coefs))
    p = a + b
    s1, t1 = [], []
    for d in range(3):
        la, lb = fa.powers[d], fb.powers[d]
        e = hermite_expansion(la, lb + 2, a, b, fa.center[d] - fb.center[d])
        root = np.sqrt(np.pi / p)

        def s(j):
            return e[la, j, 0] * root if j >= 0 else 0.0

        s1.append(s(lb))
        # -1/2 d^2/dx^2 acting on x^lb exp(-b x^2)
        t1.append(-0.5 * (lb * (lb - 1) * s(lb - 2) - 2.0 * b * (2 * lb + 1) * s(lb) + 4.0 * b * b * s(lb + 2)))
    sval = np.sum(coef * s1[0] * s1[1] * s1[2])
    tval = np.sum(coef * (t1[0] * s1[1] * s1[2] + s1[0] * t1[1] * s1[2] + s1[0] * s1[1] * t1[2]))
    return float(sval), float(tval)


def _point_potential(pair: _PairData, points: np.ndarray) -> np.ndarray:
    """<a| 1/|r - C| |b> for every point C; shape (N,)."""
    pc = pair.center[:, None, :] - points[None, :, :]
    r = hermite_coulomb(pair.order, pair.p[:, None], pc)
    t, u, v = pair.tuv.T
    rsel = r[:, :, t, u, v]  # (K, N, n_tuv)
    weights = pair.coef * 2.0 * np.pi / pair.p
    return np.einsum("k,kt,knt->n", weights, pair.e, rsel)


def _pairs(basis: BasisSet) -> dict[tuple[int, int], _PairData]:
    fs = basis.functions
    return {(i, j): _PairData(fs[i], fs[j]) for i in range(len(fs)) for j in range(i + 1)}


def _eri_quartet(p1: _PairData, p2: _PairData) -> float:
    pp = p1.p[:, None] * p2.p[None, :]
    psum = p1.p[:, None] + p2.p[None, :]
    alpha = pp / psum
    pq = p1.center[:, None, :] - p2.center[None, :, :]
    r = hermite_coulomb(p1.order + p2.order, alpha, pq)
    sign = (-1.0) ** p2.tuv.sum(axis=1)
    t = p1.tuv[:, 0][:, None] + p2.tuv[:, 0][None, :]
    u = p1.tuv[:, 1][:, None] + p2.tuv[:, 1][None, :]
    v = p1.tuv[:, 2][:, None] + p2.tuv[:, 2][None, :]
    rsel = r[:, :, t, u, v]  # (K1, K2, n1, n2)
    pref = 2.0 * np.pi**2.5 / (pp * np.sqrt(psum)) * p1.coef[:, None] * p2.coef[None, :]
    return float(np.einsum("ab,ai,bj,abij->", pref, p1.e, p2.e * sign, rsel))


def compute_integrals(molecule: Molecule, basis: BasisSet) -> IntegralSet:
    """Overlap, kinetic, nuclear-attraction and electron-repulsion integrals."""
    e_nuc = molecule.nuclear_repulsion()
    fs = basis.functions
    n = len(fs)
    s = np.zeros((n, n))
    t = np.zeros((n, n))
    v = np.zeros((n, n))
    pairs = _pairs(basis)
    xyz, z = molecule.coordinates, molecule.charges
    for (i, j), pair in pairs.items():
        s[i, j], t[i, j] = _overlap_kinetic(fs[i], fs[j])
        v[i, j] = -float(z @ _point_potential(pair, xyz))
        s[j, i], t[j, i], v[j, i] = s[i, j], t[i, j], v[i, j]
    eri = np.zeros((n, n, n, n))
    keys = list(pairs)
    for a, (i, j) in enumerate(keys):
        for k, l in keys[: a + 1]:
            val = _eri_quartet(pairs[(i, j)], pairs[(k, l)])
            for p, q, r_, s_ in _eightfold(i, j, k, l):
                eri[p, q, r_, s_] = val
    return IntegralSet(s, t, v, eri, e_nuc, molecule.n_electrons)


def _eightfold(i, j, k, l):
    return {
        (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
        (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
    }


def potential_integrals(molecule: Molecule, basis: BasisSet, points) -> tuple[np.ndarray, np.ndarray]:
    """Electrostatic potential integrals at surface points.

    Returns ``(v_pq, v_N)`` where ``v_pq[i] = -<p| 1/|r - s_i| |q>`` (the
    potential of the unit negative distribution -p*q at s_i) and
    ``v_N[i] = sum_m Z_m / |R_m - s_i|``.
    """
    points = np.atleast_2d(np.asarray(points, float))
    xyz, z = molecule.coordinates, molecule.charges
    dist = np.linalg.norm(points[:, None, :] - xyz[None, :, :], axis=2)
    if np.any(dist < 1e-8):
        i, m = np.argwhere(dist < 1e-8)[0]
        raise ValueError(f"point {i} coincides with nucleus {m}")
    v_nuc = (z[None, :] / dist).sum(axis=1)
    n = basis.n_basis
    vpq = np.zeros((len(points), n, n))
    for (i, j), pair in _pairs(basis).items():
        vpq[:, i, j] = -_point_potential(pair, points)
        vpq[:, j, i] = vpq[:, i, j]
    return vpq, v_nuc

