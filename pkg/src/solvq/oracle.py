"""Exact-diagonalization references: gas-phase FCI and the self-consistent
PCM-FCI fixed point.

The determinant-space route builds the spin-summed excitation operators
``E_pq`` directly on occupation-number strings, independently of the qubit
mapping; determinants are ordered products of creation operators in
increasing spin-orbital index (alpha block first), which coincides with the
Jordan-Wigner basis state with the same occupations.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .ferm2qubit import InteractionTables, QubitOperator
from .scf import ActiveSpace

log = logging.getLogger(__name__)

MAX_QUBITS = 14
_DENSE_LIMIT = 4096


class OracleError(RuntimeError):
    pass


@dataclass
class FciResult:
    energy: float  # E, or the free energy G in PCM mode
    vector: np.ndarray  # over the full 2**n register
    d: np.ndarray
    D2: np.ndarray
    n_iterations: int = 0
    residual: float = 0.0
    solvent_energy: float = 0.0
    charges: np.ndarray | None = None
    trace: list[float] = field(default_factory=list)

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(len(self.vector))))


class DeterminantSpace:
    """Fixed-N, S_z = 0 determinant basis over ``m`` spatial orbitals."""

    def __init__(self, m: int, n_alpha: int, n_beta: int):
        if 2 * m > MAX_QUBITS:
            raise OracleError(f"{2 * m} spin orbitals exceed the oracle limit of {MAX_QUBITS}")
        self.m, self.n_alpha, self.n_beta = m, n_alpha, n_beta
        alpha = [sum(1 << p for p in occ) for occ in itertools.combinations(range(m), n_alpha)]
        beta = [sum(1 << p for p in occ) for occ in itertools.combinations(range(m), n_beta)]
        # spin-orbital occupation: bit P set <=> spin orbital P occupied, P = p + m * spin
        self.dets = [a | (b << m) for a in alpha for b in beta]
        self.index = {d: i for i, d in enumerate(self.dets)}
        self._e = None

    @property
    def dim(self) -> int:
        return len(self.dets)

    def _excite(self, det, P, Q):
        """a+_P a_Q |det>, returning (sign, new_det) or None."""
        if not det >> Q & 1:
            return None
        sign = -1 if bin(det & ((1 << Q) - 1)).count("1") % 2 else 1
        det ^= 1 << Q
        if det >> P & 1:
            return None
        if bin(det & ((1 << P) - 1)).count("1") % 2:
            sign = -sign
        return sign, det | (1 << P)

    def excitation_operators(self) -> np.ndarray:
        """Dense ``E[p, q]`` matrices in the determinant basis, shape (m, m, dim, dim)."""
        if self._e is None:
            m, dim = self.m, self.dim
            e = np.zeros((m, m, dim, dim))
            for j, det in enumerate(self.dets):
                for p in range(m):
                    for q in range(m):
                        for s in (0, 1):
                            res = self._excite(det, p + s * m, q + s * m)
                            if res is not None:
                                e[p, q, self.index[res[1]], j] += res[0]
            self._e = e
        return self._e

    def hamiltonian(self, h: np.ndarray, g: np.ndarray, constant: float = 0.0) -> np.ndarray:
        """``const + sum h_pq E_pq + 1/2 sum g_pqrs (E_pq E_rs - delta_qr E_ps)``."""
        e = self.excitation_operators()
        m = self.m
        h_mod = h - 0.5 * np.einsum("prrs->ps", g)
        mat = constant * np.eye(self.dim) + np.einsum("pq,pqij->ij", h_mod, e)
        for r in range(m):
            for s in range(m):
                w = np.einsum("pq,pqij->ij", g[:, :, r, s], e)
                mat += 0.5 * w @ e[r, s]
        return mat

    def one_body(self, f: np.ndarray) -> np.ndarray:
        return np.einsum("pq,pqij->ij", f, self.excitation_operators())

    def rdms(self, c: np.ndarray):
        e = self.excitation_operators()
        ec = np.einsum("pqij,j->pqi", e, c)  # E_pq c
        d = np.einsum("i,pqi->pq", c, ec)
        # <E_pq E_rs> = (E_qp c) . (E_rs c)
        epq_ers = np.einsum("qpi,rsi->pqrs", ec, ec)
        D = epq_ers - np.einsum("qr,ps->pqrs", np.eye(self.m), d)
        return d, D

    def to_register(self, c: np.ndarray) -> np.ndarray:
        """Embed CI coefficients into the 2**(2m) qubit register (qubit k <-> bit 2m-1-k)."""
        n = 2 * self.m
        out = np.zeros(1 << n, complex)
        for coef, det in zip(c, self.dets):
            idx = sum(1 << (n - 1 - k) for k in range(n) if det >> k & 1)
            out[idx] = coef
        return out


def _lowest(mat):
    w, v = np.linalg.eigh(mat)
    return w[0], v[:, 0]


def fci(source, n_electrons: int | None = None) -> FciResult:
    """Ground state in the N-electron, S_z = 0 sector.

    ``source`` is an :class:`ActiveSpace` (determinant route) or a
    :class:`QubitOperator` (sector-restricted matrix diagonalization).
    """
    if isinstance(source, ActiveSpace):
        space = DeterminantSpace(source.n_orbitals, source.n_active_electrons // 2,
                                 source.n_active_electrons // 2)
        mat = space.hamiltonian(source.h_eff, source.g_active, source.constant)
        e, c = _lowest(mat)
        d, D = space.rdms(c)
        res = float(np.linalg.norm(mat @ c - e * c))
        return FciResult(float(e), space.to_register(c), d, D, residual=res)
    if isinstance(source, QubitOperator):
        return _fci_qubit(source, n_electrons)
    raise TypeError("fci expects an ActiveSpace or a QubitOperator")


def _sector_indices(n, n_alpha, n_beta):
    m = n // 2
    idx = np.arange(1 << n)
    alpha_mask = ((1 << m) - 1) << m  # qubits 0..m-1 are the high bits
    na = np.bitwise_count(idx & alpha_mask).astype(int)
    nb = np.bitwise_count(idx & ~alpha_mask & ((1 << n) - 1)).astype(int)
    return idx[(na == n_alpha) & (nb == n_beta)]


def _fci_qubit(op: QubitOperator, n_electrons):
    n = op.n_qubits
    if n > MAX_QUBITS:
        raise OracleError(f"{n} qubits exceed the oracle limit of {MAX_QUBITS}")
    if n_electrons is None or n_electrons % 2:
        raise ValueError("an even electron count is required for the qubit route")
    sel = _sector_indices(n, n_electrons // 2, n_electrons // 2)
    mat = op.to_sparse()[sel][:, sel]
    if len(sel) <= _DENSE_LIMIT:
        e, c = _lowest(mat.toarray())
    else:
        w, v = spla.eigsh(mat, k=1, which="SA", tol=1e-12)
        e, c = w[0], v[:, 0]
    res = float(np.linalg.norm(mat @ c - e * c))
    vec = np.zeros(1 << n, complex)
    vec[sel] = c
    from .qsim import Statevector, measure_rdms  # local import keeps the oracle importable alone

    rdm = measure_rdms(Statevector(vec, n), n_electrons)
    return FciResult(float(np.real(e)), vec, rdm.d, rdm.D2, residual=res)


def pcm_fci(active: ActiveSpace, tables: InteractionTables, damping: float = 0.8, tol: float = 1e-10,
            max_iterations: int = 200, residual_tol: float = 1e-9) -> FciResult:
    """Self-consistent free-energy minimum of ``H0 + V_sigma`` in the determinant space.

    Each cycle diagonalizes ``H0 + F(d)`` with ``F`` the derivative of the
    solvation energy at the current 1-RDM, then mixes the new operator into
    the previous one with weight ``damping``. Converged when G changes by less
    than ``tol`` and the state is an eigenvector of ``H0 + F(d)`` at its own
    density to within ``residual_tol``.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    space = DeterminantSpace(active.n_orbitals, active.n_active_electrons // 2, active.n_active_electrons // 2)
    h0 = space.hamiltonian(active.h_eff, active.g_active, active.constant)
    _, c = _lowest(h0)
    d, _ = space.rdms(c)
    f_mix = tables.effective_one_body(d)
    g_old = None
    trace = []
    res = np.inf
    for it in range(1, max_iterations + 1):
        _, c = _lowest(h0 + space.one_body(f_mix))
        d, D = space.rdms(c)
        g_val = float(c @ h0 @ c) + tables.solvation_energy(d)
        trace.append(g_val)
        f_new = tables.effective_one_body(d)
        h_self = h0 + space.one_body(f_new)
        lam = float(c @ h_self @ c)
        res = float(np.linalg.norm(h_self @ c - lam * c))
        if g_old is not None and abs(g_val - g_old) < tol and res < residual_tol:
            break
        g_old = g_val
        f_mix = damping * f_new + (1.0 - damping) * f_mix
    else:
        raise OracleError(f"PCM-FCI fixed point not reached in {max_iterations} iterations; "
                          f"last values {trace[-3:]}, residual {res:.2e}")
    log.debug("PCM-FCI converged in %d cycles, G = %.10f", it, g_val)
    return FciResult(g_val, space.to_register(c), d, D, it, res, tables.solvation_energy(d),
                     tables.charges(d), trace)
