"""Second-quantized Hamiltonian, solute-solvent interaction tables and the
Jordan-Wigner mapping.

Spin orbitals are blocked: qubits ``0..m-1`` hold alpha orbitals and
``m..2m-1`` the beta orbitals of the same spatial orbitals. A Pauli string is
stored symplectically as ``(x, z)`` bit masks where qubit ``k`` is bit
``n - 1 - k``, so that computational basis index ``b`` read as an n-bit string
lists qubit 0 first.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .cavity import SolventResponse
from .molint import IntegralSet, Molecule
from .scf import ActiveSpace

PRUNE_TOL = 1e-12
_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


def _popcount(x: int) -> int:
    return bin(x).count("1")


class QubitOperator:
    """Linear combination of Pauli strings, ``sum_k c_k P_k``.

    Pauli string ``(x, z)`` denotes ``prod_k i^(x_k z_k) X_k^x_k Z_k^z_k`` so that
    ``(1, 1)`` on a qubit is exactly ``Y``.
    """

    def __init__(self, n_qubits: int, terms=None):
        self.n_qubits = n_qubits
        self.terms: dict[tuple[int, int], complex] = dict(terms or {})
        self._sparse = None

    # construction -------------------------------------------------------
    @classmethod
    def identity(cls, n_qubits, coef=1.0):
        return cls(n_qubits, {(0, 0): complex(coef)})

    @classmethod
    def from_label(cls, label: str, coef=1.0):
        n = len(label)
        x = z = 0
        for k, ch in enumerate(label.upper()):
            bit = 1 << (n - 1 - k)
            if ch in "XY":
                x |= bit
            if ch in "ZY":
                z |= bit
            if ch not in "IXYZ":
                raise ValueError(f"bad Pauli letter {ch!r}")
        return cls(n, {(x, z): complex(coef)})

    @classmethod
    def annihilation(cls, k: int, n_qubits: int) -> "QubitOperator":
        return _ladder(k, n_qubits, dagger=False)

    @classmethod
    def creation(cls, k: int, n_qubits: int) -> "QubitOperator":
        return _ladder(k, n_qubits, dagger=True)

    # algebra -------------------------------------------------------------
    def copy(self):
        return QubitOperator(self.n_qubits, self.terms)

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = QubitOperator.identity(self.n_qubits, other)
        _check_width(self, other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0.0) + c
        return QubitOperator(self.n_qubits, out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return QubitOperator(self.n_qubits, {k: c * other for k, c in self.terms.items()})
        _check_width(self, other)
        out: dict[tuple[int, int], complex] = {}
        for (x1, z1), c1 in self.terms.items():
            for (x2, z2), c2 in other.terms.items():
                key, phase = pauli_product(x1, z1, x2, z2)
                out[key] = out.get(key, 0.0) + c1 * c2 * phase
        return QubitOperator(self.n_qubits, out)

    def __rmul__(self, other):
        return self * other

    def adjoint(self):
        return QubitOperator(self.n_qubits, {k: np.conj(c) for k, c in self.terms.items()})

    def pruned(self, tol=PRUNE_TOL):
        return QubitOperator(self.n_qubits, {k: c for k, c in self.terms.items() if abs(c) >= tol})

    def is_hermitian(self, tol=1e-10) -> bool:
        return all(abs(c.imag) < tol for c in self.terms.values())

    def real(self, tol=1e-10):
        """Drop imaginary parts after checking they vanish."""
        bad = max((abs(c.imag) for c in self.terms.values()), default=0.0)
        if bad > tol:
            raise ValueError(f"operator is not Hermitian (|Im c| up to {bad:.2e})")
        return QubitOperator(self.n_qubits, {k: complex(c.real) for k, c in self.terms.items()})

    # inspection ----------------------------------------------------------
    def label(self, key) -> str:
        x, z = key
        n = self.n_qubits
        return "".join(_LETTERS[((x >> (n - 1 - k)) & 1, (z >> (n - 1 - k)) & 1)] for k in range(n))

    def sorted_terms(self) -> list[tuple[str, complex]]:
        return sorted(((self.label(k), c) for k, c in self.terms.items()), key=lambda t: t[0])

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"QubitOperator(n_qubits={self.n_qubits}, n_terms={len(self)})"

    def constant(self) -> complex:
        return self.terms.get((0, 0), 0.0)

    # numerics ------------------------------------------------------------
    def to_sparse(self) -> sp.csr_matrix:
        if self._sparse is None:
            dim = 1 << self.n_qubits
            idx = np.arange(dim)
            rows, cols, vals = [], [], []
            for (x, z), c in self.terms.items():
                if c == 0:
                    continue
                phase = (1j) ** _popcount(x & z) * (1 - 2 * (np.bitwise_count(idx & z).astype(np.int64) & 1))
                rows.append(idx ^ x)
                cols.append(idx)
                vals.append(c * phase)
            if rows:
                m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                  shape=(dim, dim)).tocsr()
            else:
                m = sp.csr_matrix((dim, dim), dtype=complex)
            m.sum_duplicates()
            self._sparse = m
        return self._sparse

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.to_sparse() @ psi))

    # serialization -------------------------------------------------------
    def to_json(self) -> str:
        terms = []
        for label, c in self.sorted_terms():
            item = {"string": label, "coefficient": float(c.real)}
            if abs(c.imag) > 0:
                item["coefficient_imag"] = float(c.imag)
            terms.append(item)
        return json.dumps({"n_qubits": self.n_qubits, "terms": terms}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "QubitOperator":
        data = json.loads(text)
        op = cls(data["n_qubits"])
        for item in data["terms"]:
            c = complex(item["coefficient"], item.get("coefficient_imag", 0.0))
            op = op + cls.from_label(item["string"], c)
        return op


def _check_width(a, b):
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")


def pauli_product(x1, z1, x2, z2):
    """Product of two symplectic Pauli strings: returns ``((x, z), phase)``."""
    x, z = x1 ^ x2, z1 ^ z2
    e = _popcount(x1 & z1) + _popcount(x2 & z2) - _popcount(x & z) + 2 * _popcount(z1 & x2)
    return (x, z), (1j) ** (e % 4)


def _ladder(k, n, dagger):
    if not 0 <= k < n:
        raise ValueError(f"mode {k} outside register of {n} qubits")
    bit = 1 << (n - 1 - k)
    zstring = 0
    for j in range(k):
        zstring |= 1 << (n - 1 - j)
    # a_k = Z_<k (X_k + iY_k)/2 ; a_k^+ = Z_<k (X_k - iY_k)/2
    sign = -1 if dagger else 1
    x_term = ((bit, zstring), 0.5)
    # Z_<k * Y_k in symplectic form is (bit, zstring | bit) with no extra phase
    y_term = ((bit, zstring | bit), 0.5j * sign)
    return QubitOperator(n, dict([x_term, y_term]))


# ---------------------------------------------------------------------------
# fermionic operator builders


def spin_orbital(p: int, spin: int, m: int) -> int:
    """Qubit index of spatial orbital ``p`` with spin 0 (alpha) or 1 (beta)."""
    return p + spin * m


class _LadderCache:
    def __init__(self, n):
        self.n = n
        self.a = [QubitOperator.annihilation(k, n) for k in range(n)]
        self.c = [QubitOperator.creation(k, n) for k in range(n)]


def one_body_operator(h: np.ndarray, constant: float = 0.0) -> QubitOperator:
    """JW image of ``sum_pq h_pq E_pq`` (spin-summed, blocked ordering)."""
    h = np.asarray(h)
    m = h.shape[0]
    n = 2 * m
    lad = _LadderCache(n)
    op = QubitOperator.identity(n, constant)
    for p in range(m):
        for q in range(m):
            if abs(h[p, q]) < PRUNE_TOL:
                continue
            for s in (0, 1):
                P, Q = spin_orbital(p, s, m), spin_orbital(q, s, m)
                op = op + (lad.c[P] * lad.a[Q]) * h[p, q]
    return op.pruned()


def jw_map(h: np.ndarray) -> QubitOperator:
    """Map a Hermitian one-body matrix (over spatial orbitals) to a Hermitian qubit operator."""
    h = np.asarray(h)
    if not np.allclose(h, h.conj().T, atol=1e-12):
        raise ValueError("one-body matrix must be Hermitian")
    op = one_body_operator(h)
    return op.real() if np.isrealobj(h) else op


def build_h0(active: ActiveSpace) -> QubitOperator:
    """Gas-phase active-space Hamiltonian over ``2m`` qubits.

    ``H = E_const + sum h_pq E_pq + 1/2 sum (pq|rs) sum_{st} a+_ps a+_rt a_st a_qs``;
    the identity coefficient carries ``e_nuc + core_energy``.
    """
    h, g = active.h_eff, active.g_active
    m = h.shape[0]
    n = 2 * m
    lad = _LadderCache(n)
    acc: dict[tuple[int, int], complex] = {(0, 0): complex(active.constant)}

    def add(op, c):
        for key, v in op.terms.items():
            acc[key] = acc.get(key, 0.0) + v * c

    for p in range(m):
        for q in range(m):
            if abs(h[p, q]) > PRUNE_TOL:
                for s in (0, 1):
                    add(lad.c[spin_orbital(p, s, m)] * lad.a[spin_orbital(q, s, m)], h[p, q])
    # pre-multiply creation pairs and annihilation pairs once
    pairs_c, pairs_a = {}, {}
    for P in range(n):
        for R in range(n):
            if P != R:
                pairs_c[P, R] = lad.c[P] * lad.c[R]
                pairs_a[P, R] = lad.a[P] * lad.a[R]
    for p in range(m):
        for q in range(m):
            for r in range(m):
                for s_ in range(m):
                    v = 0.5 * g[p, q, r, s_]
                    if abs(v) < PRUNE_TOL:
                        continue
                    for s1 in (0, 1):
                        for s2 in (0, 1):
                            P, Q = spin_orbital(p, s1, m), spin_orbital(q, s1, m)
                            R, S = spin_orbital(r, s2, m), spin_orbital(s_, s2, m)
                            if P == R or Q == S:
                                continue
                            add(pairs_c[P, R] * pairs_a[S, Q], v)
    return QubitOperator(n, acc).pruned().real()


def number_operator(m: int) -> QubitOperator:
    return one_body_operator(np.eye(m))


def sz_operator(m: int) -> QubitOperator:
    n = 2 * m
    lad = _LadderCache(n)
    op = QubitOperator(n)
    for p in range(m):
        op = op + 0.5 * (lad.c[p] * lad.a[p]) - 0.5 * (lad.c[p + m] * lad.a[p + m])
    return op.pruned().real()


# ---------------------------------------------------------------------------
# solute-solvent interaction


@dataclass
class InteractionTables:
    """Active-space ingredients of the reaction-field operator.

    ``v_mo[i]`` is the potential of the unit negative distribution ``-phi_p phi_q``
    at tessera ``i``; ``v_nuclear`` collects the potential of everything that is
    not active-electron density (nuclei plus frozen-core electrons).
    """

    j: np.ndarray
    y: np.ndarray
    v_mo: np.ndarray  # (N, m, m)
    q_mo: np.ndarray  # (N, m, m), Q @ v_mo
    q_nuclear: np.ndarray  # (N,), Q @ v_nuclear
    v_nuclear: np.ndarray  # (N,), nuclei + frozen core
    core_potential_tess: np.ndarray  # (N,)
    Q: np.ndarray
    e_nuclear: float  # 1/2 v_nuclear . Q v_nuclear
    n_active_electrons: int

    @property
    def n_orbitals(self) -> int:
        return self.j.shape[0]

    def potential(self, d: np.ndarray) -> np.ndarray:
        """Total MEP on the tesserae for active 1-RDM ``d``."""
        return self.v_nuclear + np.einsum("ipq,pq->i", self.v_mo, d)

    def charges(self, d: np.ndarray) -> np.ndarray:
        return self.Q @ self.potential(d)

    def electronic_charges(self, d: np.ndarray) -> np.ndarray:
        """<Q> = sum_pq q_pq d_pq, the ASC induced by the active electrons."""
        return np.einsum("ipq,pq->i", self.q_mo, d)

    def solvation_energy(self, d: np.ndarray) -> float:
        """1/2 V.Q V = 1/2 (j + y).d + 1/2 x(d).d + 1/2 v_N.Q v_N."""
        x = x_matrix(self, d, check=False)
        return float(0.5 * np.sum((self.j + self.y) * d) + 0.5 * np.sum(x * d) + self.e_nuclear)

    def effective_one_body(self, d: np.ndarray) -> np.ndarray:
        """Derivative of the solvation energy with respect to ``d``: 1/2(j+y) + 1/2(x + x')."""
        x = x_matrix(self, d, check=False)
        ve = np.einsum("ipq,pq->i", self.v_mo, d)
        x_t = np.einsum("i,ipq->pq", ve, self.q_mo)
        return 0.5 * (self.j + self.y) + 0.5 * (x + x_t)


def build_interaction_tables(active: ActiveSpace, integrals: IntegralSet, response: SolventResponse,
                             molecule: Molecule | None = None) -> InteractionTables:
    if integrals.tessera_potential is None:
        raise ValueError("integrals lack tessera potentials")
    vpq_ao = integrals.tessera_potential
    if vpq_ao.shape[0] != response.n_tesserae:
        raise ValueError("tessera count differs between integrals and solvent response")
    c = active.mo_active
    v_mo = np.einsum("ipq,pa,qb->iab", vpq_ao, c, c, optimize=True)
    v_nuc = integrals.v_nuc_tess
    if molecule is not None:
        # recompute as a consistency guard on the nuclear potential
        z, xyz = molecule.charges, molecule.coordinates
        pts_ok = v_nuc.shape == (response.n_tesserae,)
        if not pts_ok or not np.all(np.isfinite(z)) or len(xyz) == 0:
            raise ValueError("inconsistent molecule for interaction tables")
    core_pot = np.einsum("ipq,pq->i", vpq_ao, active.core_density_ao)
    v_eff = v_nuc + core_pot
    Q = response.Q
    q_nuc = Q @ v_eff
    n = response.n_tesserae
    m = active.n_orbitals
    q_mo = (Q @ v_mo.reshape(n, m * m)).reshape(n, m, m)
    j = np.einsum("ipq,i->pq", v_mo, q_nuc)
    y = np.einsum("i,ipq->pq", v_eff, q_mo)
    e_nn = 0.5 * float(v_eff @ q_nuc)
    return InteractionTables(j, y, v_mo, q_mo, q_nuc, v_eff, core_pot, Q, e_nn, active.n_active_electrons)


def x_matrix(tables: InteractionTables, d: np.ndarray, check: bool = True) -> np.ndarray:
    """Electron / own-ASC interaction matrix ``x_pq = v_pq . <Q>`` for 1-RDM ``d``."""
    d = np.asarray(d, float)
    if check:
        tr = np.trace(d)
        if abs(tr - tables.n_active_electrons) > 1e-3:
            warnings.warn(f"1-RDM trace {tr:.6f} differs from {tables.n_active_electrons} electrons",
                          RuntimeWarning, stacklevel=2)
    q_el = tables.electronic_charges(d)
    return np.einsum("ipq,i->pq", tables.v_mo, q_el)


def interaction_operator(tables: InteractionTables, d: np.ndarray) -> QubitOperator:
    """Qubit image of the effective reaction-field one-body operator at density ``d``."""
    return jw_map(tables.effective_one_body(d))
