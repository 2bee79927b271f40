"""Dense statevector simulator with particle-conserving excitation gates,
Pauli expectation values and exact or shot-sampled reduced density matrices.

Qubit ``k`` of an ``n``-qubit register is bit ``n - 1 - k`` of the basis index,
so basis states print with qubit 0 leftmost. Spin orbitals are blocked:
qubits ``0..m-1`` are alpha, ``m..2m-1`` beta.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .ferm2qubit import QubitOperator

GATE_KINDS = ("single_excitation", "double_excitation", "ucc_single", "ucc_double")


class Statevector:
    """Normalized complex amplitude vector over ``n_qubits``."""

    def __init__(self, amplitudes, n_qubits: int | None = None, check: bool = True):
        amp = np.asarray(amplitudes, dtype=complex)
        n = int(round(np.log2(len(amp)))) if n_qubits is None else n_qubits
        if amp.shape != (1 << n,):
            raise ValueError(f"expected {1 << n} amplitudes, got {amp.shape}")
        if check and abs(np.linalg.norm(amp) - 1.0) > 1e-10:
            raise ValueError("state is not normalized")
        self.amplitudes = amp
        self.n_qubits = n

    def copy(self) -> "Statevector":
        return Statevector(self.amplitudes.copy(), self.n_qubits, check=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def overlap(self, other: "Statevector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def bitstring(self, index: int) -> str:
        return format(index, f"0{self.n_qubits}b")

    @classmethod
    def basis(cls, bits: str) -> "Statevector":
        amp = np.zeros(1 << len(bits), complex)
        amp[int(bits, 2)] = 1.0
        return cls(amp, len(bits))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "re", "im"])
            for i, a in enumerate(self.amplitudes):
                w.writerow([i, f"{a.real:.16e}", f"{a.imag:.16e}"])

    def __repr__(self):
        return f"Statevector(n_qubits={self.n_qubits})"


def qubit_bit(k: int, n: int) -> int:
    return 1 << (n - 1 - k)


def hf_state(n_qubits: int, n_alpha: int, n_beta: int) -> Statevector:
    """Closed-shell reference: the lowest ``n_alpha`` alpha and ``n_beta`` beta orbitals filled."""
    if n_qubits % 2:
        raise ValueError("blocked spin ordering needs an even qubit count")
    m = n_qubits // 2
    if not (0 <= n_alpha <= m and 0 <= n_beta <= m):
        raise ValueError(f"occupation ({n_alpha}, {n_beta}) exceeds {m} spatial orbitals")
    bits = ["0"] * n_qubits
    for p in range(n_alpha):
        bits[p] = "1"
    for p in range(n_beta):
        bits[m + p] = "1"
    return Statevector.basis("".join(bits))


# ---------------------------------------------------------------------------
# circuits


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]  # (i, a) or (i, j, a, b): electrons move from i[,j] to a[,b]
    param: int


@dataclass
class AnsatzCircuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    n_params: int = 0

    def __post_init__(self):
        for g in self.gates:
            self._validate(g)
        if self.gates:
            self.n_params = max(self.n_params, max(g.param for g in self.gates) + 1)

    def _validate(self, g: Gate):
        if g.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {g.kind!r}")
        want = 2 if g.kind in ("single_excitation", "ucc_single") else 4
        if len(g.qubits) != want:
            raise ValueError(f"{g.kind} takes {want} qubits")
        if len(set(g.qubits)) != want or not all(0 <= q < self.n_qubits for q in g.qubits):
            raise ValueError(f"invalid qubits {g.qubits} for a {self.n_qubits}-qubit register")
        if g.param < 0:
            raise ValueError("negative parameter index")

    def add(self, kind: str, qubits, param: int | None = None) -> "AnsatzCircuit":
        g = Gate(kind, tuple(int(q) for q in qubits), self.n_params if param is None else param)
        self._validate(g)
        self.gates.append(g)
        self.n_params = max(self.n_params, g.param + 1)
        return self

    @classmethod
    def from_excitations(cls, n_qubits: int, excitations, kind: str = "givens") -> "AnsatzCircuit":
        """One gate and one parameter per excitation ``(i, a)`` or ``(i, j, a, b)``."""
        if kind not in ("givens", "uccsd"):
            raise ValueError(f"unknown ansatz kind {kind!r}")
        circ = cls(n_qubits)
        for exc in excitations:
            single = len(exc) == 2
            if kind == "givens":
                circ.add("single_excitation" if single else "double_excitation", exc)
            else:
                circ.add("ucc_single" if single else "ucc_double", exc)
        return circ

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits, "n_params": self.n_params,
                           "gates": [{"kind": g.kind, "qubits": list(g.qubits), "param": g.param}
                                     for g in self.gates]})


@lru_cache(maxsize=4096)
def _transition(kind: str, qubits: tuple[int, ...], n: int):
    """Basis index pairs (src, dst) connected by the gate, and the sign of dst<-src."""
    idx = np.arange(1 << n)
    if len(qubits) == 2:
        occ, virt = qubits[:1], qubits[1:]
    else:
        occ, virt = qubits[:2], qubits[2:]
    occ_mask = sum(qubit_bit(q, n) for q in occ)
    virt_mask = sum(qubit_bit(q, n) for q in virt)
    src = idx[((idx & occ_mask) == occ_mask) & ((idx & virt_mask) == 0)]
    dst = src ^ (occ_mask | virt_mask)
    sign = _fermion_sign(src, occ, virt, n) if kind.startswith("ucc") else None
    return src, dst, sign


def _parity_below(state, k, n):
    """(-1)^(number of occupied qubits j < k) for each basis index in ``state``."""
    high = state >> (n - k)
    return 1 - 2 * (np.bitwise_count(high).astype(np.int64) & 1)


def _fermion_sign(src, occ, virt, n):
    """Sign of a+_virt... a_occ... acting on each source determinant."""
    state = src.copy()
    sign = np.ones(len(src))
    # a+_a a_i (single) or a+_a a+_b a_j a_i (double): annihilate i then j, create b then a
    if len(occ) == 1:
        ops = [("a", occ[0]), ("c", virt[0])]
    else:
        ops = [("a", occ[0]), ("a", occ[1]), ("c", virt[1]), ("c", virt[0])]
    for op, k in ops:
        sign *= _parity_below(state, k, n)
        state = state ^ qubit_bit(k, n)
    return sign


def _rotate(amp, kind, qubits, theta, n, derivative=False, inverse=False):
    src, dst, sign = _transition(kind, qubits, n)
    c, s = math.cos(theta), math.sin(theta)
    if inverse:
        s = -s
    a_s, a_d = amp[src], amp[dst]
    # sign-weighted copies; Givens gates carry no fermionic sign
    sa_s, sa_d = (a_s * sign, a_d * sign) if sign is not None else (a_s, a_d)
    if derivative:
        # d/dtheta of the rotation; only the connected subspace survives
        out = np.zeros_like(amp)
        out[dst] = c * sa_s - s * a_d
        out[src] = -s * a_s - c * sa_d
        return out
    amp[dst] = c * a_d + s * sa_s
    amp[src] = c * a_s - s * sa_d
    return amp


def apply_ansatz(state: Statevector, circuit: AnsatzCircuit, theta) -> Statevector:
    """Apply the circuit gate by gate; every gate is exp(theta * (T - T^dagger)) on its subspace."""
    theta = np.asarray(theta, float)
    if theta.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {theta.shape}")
    if state.n_qubits != circuit.n_qubits:
        raise ValueError("circuit and state qubit counts differ")
    amp = state.amplitudes.copy()
    for g in circuit.gates:
        _rotate(amp, g.kind, g.qubits, theta[g.param], circuit.n_qubits)
    return Statevector(amp, state.n_qubits, check=False)


def adjoint_gradient(state: Statevector, circuit: AnsatzCircuit, theta, operator) -> np.ndarray:
    """d<psi(theta)|H|psi(theta)>/dtheta by reverse-mode propagation through the circuit.

    ``operator`` is a sparse matrix or a :class:`QubitOperator`.
    """
    mat = operator.to_sparse() if isinstance(operator, QubitOperator) else operator
    theta = np.asarray(theta, float)
    n = circuit.n_qubits
    psi = apply_ansatz(state, circuit, theta).amplitudes
    lam = mat @ psi
    grad = np.zeros(circuit.n_params)
    for g in reversed(circuit.gates):
        psi = _rotate(psi, g.kind, g.qubits, theta[g.param], n, inverse=True)
        mu = _rotate(psi, g.kind, g.qubits, theta[g.param], n, derivative=True)
        grad[g.param] += 2.0 * np.vdot(lam, mu).real
        lam = _rotate(lam, g.kind, g.qubits, theta[g.param], n, inverse=True)
    return grad


def appended_gate_gradients(state: Statevector, h_state: np.ndarray, gates) -> np.ndarray:
    """d/dtheta at theta = 0 of <H> after appending each gate ``(kind, qubits)`` to the circuit
    that produced ``state``; ``h_state`` is H applied to that state."""
    n = state.n_qubits
    psi = state.amplitudes
    return np.array([2.0 * np.vdot(h_state, _rotate(psi, kind, tuple(q), 0.0, n, derivative=True)).real
                     for kind, q in gates])


# ---------------------------------------------------------------------------
# expectation values


def expectation(state: Statevector, op: QubitOperator) -> float:
    if op.n_qubits != state.n_qubits:
        raise ValueError(f"operator acts on {op.n_qubits} qubits, state has {state.n_qubits}")
    val = op.expectation(state.amplitudes)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation value has imaginary part {val.imag:.3e}")
    return float(val.real)


def pauli_expectation(amp: np.ndarray, x: int, z: int) -> complex:
    """<psi| P(x, z) |psi> without building a matrix."""
    idx = np.arange(len(amp))
    phase = (1j) ** bin(x & z).count("1") * (1 - 2 * (np.bitwise_count(idx & z).astype(np.int64) & 1))
    return complex(np.vdot(amp[idx ^ x], phase * amp))


# ---------------------------------------------------------------------------
# sampling


def sample_counts(state: Statevector, n_shots: int, seed=None) -> dict[str, int]:
    """Multinomial sample of computational-basis outcomes, keyed by bitstring."""
    if n_shots <= 0:
        raise ValueError("n_shots must be positive")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n_shots, state.probabilities())
    return {state.bitstring(i): int(c) for i, c in enumerate(counts) if c}


def counts_to_json(counts: dict[str, int]) -> str:
    return json.dumps(dict(sorted(counts.items())), indent=1)


_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
_HSDG = _H @ np.diag([1, -1j])  # maps Y eigenbasis to Z


def _apply_1q(amp, u, k, n):
    psi = amp.reshape((2,) * n)
    psi = np.moveaxis(np.tensordot(u, psi, axes=([1], [k])), 0, k)
    return psi.reshape(-1)


def qwc_groups(strings) -> list[list[tuple[int, int]]]:
    """Greedy qubit-wise-commuting grouping.

    Strings are visited in descending support size, ties broken by ``(x, z)``;
    each joins the first group whose every member agrees with it letter by
    letter wherever both act non-trivially. The identity needs no measurement
    and is dropped.
    """
    order = sorted(set(strings), key=lambda s: (-bin(s[0] | s[1]).count("1"), s))
    groups: list[list[tuple[int, int]]] = []
    bases: list[tuple[int, int]] = []  # accumulated (x, z) letters per group
    for x, z in order:
        if x == 0 and z == 0:
            continue
        supp = x | z
        for gi, (bx, bz) in enumerate(bases):
            common = supp & (bx | bz)
            if (x & common) == (bx & common) and (z & common) == (bz & common):
                groups[gi].append((x, z))
                bases[gi] = (bx | x, bz | z)
                break
        else:
            groups.append([(x, z)])
            bases.append((x, z))
    return groups


def _group_basis(group):
    bx = bz = 0
    for x, z in group:
        bx |= x
        bz |= z
    return bx, bz


def estimate_paulis(state: Statevector, strings, n_shots: int, rng, depolarizing: float = 0.0):
    """Shot estimates ``{(x, z): (mean, variance_of_mean)}`` with one sampled circuit per QWC group."""
    n = state.n_qubits
    out = {}
    idx = np.arange(1 << n)
    for group in qwc_groups(strings):
        bx, bz = _group_basis(group)
        amp = state.amplitudes
        for k in range(n):
            b = qubit_bit(k, n)
            if bx & b:
                amp = _apply_1q(amp, _HSDG if bz & b else _H, k, n)
        p = np.abs(amp) ** 2
        counts = rng.multinomial(n_shots, p / p.sum())
        for x, z in group:
            ev = 1 - 2 * (np.bitwise_count(idx & (x | z)).astype(np.int64) & 1)
            mean = float(counts @ ev) / n_shots
            var = max(1.0 - mean * mean, 0.0) / n_shots
            f = 1.0 - depolarizing
            out[(x, z)] = (f * mean, f * f * var)
    out[(0, 0)] = (1.0, 0.0)
    return out


# ---------------------------------------------------------------------------
# reduced density matrices


@dataclass
class RdmPair:
    """Spin-summed 1-RDM ``d_pq = <E_pq>`` and 2-RDM ``D_pqrs = <E_pq E_rs - delta_qr E_ps>``."""

    d: np.ndarray
    D2: np.ndarray | None
    mode: str = "exact"
    n_shots: int | None = None
    seed: int | None = None
    d_std: np.ndarray | None = None  # per-element standard error in shots mode
    metadata: dict = field(default_factory=dict)

    @property
    def n_orbitals(self) -> int:
        return self.d.shape[0]

    def energy(self, h: np.ndarray, g: np.ndarray, constant: float = 0.0) -> float:
        if self.D2 is None:
            raise ValueError("2-RDM not available")
        return float(constant + np.sum(h * self.d) + 0.5 * np.einsum("pqrs,pqrs->", g, self.D2))


def annihilate(amp: np.ndarray, k: int, n: int) -> np.ndarray:
    """a_k |psi> under the Jordan-Wigner convention (sign from occupied qubits j < k)."""
    bit = qubit_bit(k, n)
    idx = np.arange(len(amp))
    occ = (idx & bit) != 0
    out = np.zeros_like(amp)
    src = idx[occ]
    out[src ^ bit] = _parity_below(src, k, n) * amp[src]
    return out


def _exact_rdms(amp, m, two_body=True):
    n = 2 * m
    phi = np.array([annihilate(amp, k, n) for k in range(n)])  # (2m, dim)
    gamma = (phi.conj() @ phi.T).real  # gamma[P, Q] = <a+_P a_Q>
    d = gamma[:m, :m] + gamma[m:, m:]
    if not two_body:
        return d, None
    # chi[P, R] = a_R a_P psi ; <a+_P a+_R a_S a_Q> = <chi[P, R] | chi[Q, S]>
    chi = np.zeros((n, n, len(amp)), complex)
    for P in range(n):
        for R in range(n):
            if P != R:
                chi[P, R] = annihilate(phi[P], R, n)
    flat = chi.reshape(n * n, -1)
    g2 = (flat.conj() @ flat.T).real.reshape(n, n, n, n)  # [P, R, Q, S]
    D = np.zeros((m, m, m, m))
    for s1 in (0, 1):
        for s2 in (0, 1):
            a, b = slice(s1 * m, (s1 + 1) * m), slice(s2 * m, (s2 + 1) * m)
            # D_pqrs += <a+_{p s1} a+_{r s2} a_{s s2} a_{q s1}>
            D += g2[a, b, a, b].transpose(0, 2, 1, 3)
    return d, D


@lru_cache(maxsize=16)
def _rdm_pauli_maps(m: int, two_body: bool):
    """Pauli decompositions of the spin-summed RDM elements."""
    n = 2 * m
    a = [QubitOperator.annihilation(k, n) for k in range(n)]
    c = [QubitOperator.creation(k, n) for k in range(n)]
    one = {}
    for p in range(m):
        for q in range(p, m):
            op = c[p] * a[q] + c[p + m] * a[q + m]
            one[p, q] = (op + op.adjoint()) * 0.5 if p != q else op
            one[p, q] = one[p, q].pruned()
    two = {}
    if two_body:
        for p in range(m):
            for q in range(m):
                for r in range(m):
                    for s in range(m):
                        op = QubitOperator(n)
                        for s1 in (0, 1):
                            for s2 in (0, 1):
                                P, Q, R, S = p + s1 * m, q + s1 * m, r + s2 * m, s + s2 * m
                                if P == R or Q == S:
                                    continue
                                op = op + c[P] * c[R] * a[S] * a[Q]
                        two[p, q, r, s] = ((op + op.adjoint()) * 0.5).pruned()
    return one, two


def _shots_rdms(state, m, n_shots, seed, depolarizing, two_body):
    rng = np.random.default_rng(seed)
    one, two = _rdm_pauli_maps(m, two_body)
    strings = set()
    for op in list(one.values()) + list(two.values()):
        strings.update(op.terms)
    est = estimate_paulis(state, strings, n_shots, rng, depolarizing)

    def value(op):
        mean = sum((c * est[k][0] for k, c in op.terms.items()), 0.0)
        var = sum(abs(c) ** 2 * est[k][1] for k, c in op.terms.items())
        return float(np.real(mean)), float(var)

    d = np.zeros((m, m))
    dvar = np.zeros((m, m))
    for (p, q), op in one.items():
        d[p, q], dvar[p, q] = value(op)
        d[q, p], dvar[q, p] = d[p, q], dvar[p, q]
    D = None
    if two_body:
        D = np.zeros((m, m, m, m))
        for key, op in two.items():
            D[key] = value(op)[0]
    return d, D, np.sqrt(dvar), len(qwc_groups(strings))


def measure_rdms(state: Statevector, n_active_electrons: int, mode: str = "exact", n_shots: int = 8192,
                 seed=None, depolarizing: float = 0.0, two_body: bool = True) -> RdmPair:
    """Spin-summed RDMs of ``state``.

    ``mode="shots"`` estimates every required Pauli string from ``n_shots``
    samples per qubit-wise-commuting group and rescales the 1-RDM to trace
    ``n_active_electrons``; an optional global depolarizing strength damps
    all non-identity expectation values by ``1 - depolarizing``.
    """
    n = state.n_qubits
    if n % 2:
        raise ValueError("blocked spin ordering needs an even qubit count")
    m = n // 2
    if mode == "exact":
        d, D = _exact_rdms(state.amplitudes, m, two_body)
        return RdmPair(d, D, "exact")
    if mode != "shots":
        raise ValueError(f"unknown RDM mode {mode!r}")
    if not 0.0 <= depolarizing < 1.0:
        raise ValueError("depolarizing strength must lie in [0, 1)")
    d, D, dstd, n_groups = _shots_rdms(state, m, int(n_shots), seed, depolarizing, two_body)
    tr = np.trace(d)
    scale = n_active_electrons / tr if abs(tr) > 1e-12 else 1.0
    meta = {"raw_trace": float(tr), "n_groups": n_groups, "depolarizing": depolarizing}
    return RdmPair(d * scale, D, "shots", int(n_shots), seed, dstd * abs(scale), meta)
