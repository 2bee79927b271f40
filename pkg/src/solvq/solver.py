"""Variational drivers: gas-phase VQE, PCM-VQE on the free energy in solution,
adaptive excitation selection, gradients and derived solvation observables.

The free energy of a state with active 1-RDM ``d`` is

    G = <H0> + 1/2 V(d).Q V(d),   V(d) = v_nuc' + sum_pq d_pq v_pq

which is evaluated with the charges refreshed at every call, so G is a
function of the circuit parameters alone. Its gradient follows from freezing
the reaction-field operator ``F(d) = dG_solv/dd`` at the current density and
differentiating ``<H0 + F>``: by the chain rule this is the exact total
derivative at every point, not only at self-consistency.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize, minimize_scalar

from .ferm2qubit import InteractionTables, QubitOperator, one_body_operator
from .qsim import (AnsatzCircuit, RdmPair, Statevector, adjoint_gradient, appended_gate_gradients, apply_ansatz,
                   hf_state, measure_rdms)

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
_SHIFT_C1 = (np.sqrt(2) + 2) / 2
_SHIFT_C2 = (np.sqrt(2) - 2) / 2


@dataclass
class VqeConfig:
    ansatz: str = "givens"  # givens | uccsd
    selection: str = "adaptive"  # all | adaptive | adapt
    threshold: float = 1e-5
    max_operators: int = 80
    optimizer: str = "gradient_descent"  # gradient_descent | rotosolve
    step: float = 0.5
    adaptive_step: bool = True
    max_iterations: int = 500
    tolerance: float = 1e-8
    window: int = 3
    gradient: str = "adjoint"  # adjoint | parameter_shift | finite_difference
    fd_step: float = 1e-3
    shots: int | None = None  # None = exact expectation values
    depolarizing: float = 0.0
    seed: int | None = None
    init: str = "zeros"  # zeros | random

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")
        for name, value, allowed in [
            ("ansatz", self.ansatz, ("givens", "uccsd")),
            ("selection", self.selection, ("all", "adaptive", "adapt")),
            ("optimizer", self.optimizer, ("gradient_descent", "rotosolve")),
            ("gradient", self.gradient, ("adjoint", "parameter_shift", "finite_difference")),
            ("init", self.init, ("zeros", "random")),
        ]:
            if value not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {value!r}")
        if self.shots is not None and self.shots <= 0:
            raise ValueError("shots must be positive")

    @property
    def shots_mode(self) -> bool:
        return self.shots is not None


# ---------------------------------------------------------------------------
# excitations


def enumerate_excitations(n_orbitals: int, n_electrons: int):
    """Spin- and particle-conserving singles ``(i, a)`` and doubles ``(i, j, a, b)`` from the reference."""
    m = n_orbitals
    na = nb = n_electrons // 2
    occ = [p for p in range(na)] + [m + p for p in range(nb)]
    virt = [p for p in range(na, m)] + [m + p for p in range(nb, m)]

    def spin(k):
        return int(k >= m)

    singles = [(i, a) for i in occ for a in virt if spin(i) == spin(a)]
    doubles = [
        (i, j, a, b)
        for i, j in itertools.combinations(occ, 2)
        for a, b in itertools.combinations(virt, 2)
        if spin(i) + spin(j) == spin(a) + spin(b)
    ]
    return singles, doubles


# ---------------------------------------------------------------------------
# cost function


@dataclass
class Evaluation:
    value: float  # G (or E in gas phase)
    rdm: RdmPair | None
    charges: np.ndarray | None
    energy_h0: float
    solvent_energy: float = 0.0
    stderr: float = 0.0


class FreeEnergy:
    """Free energy (or gas-phase energy when ``tables`` is None) as a function of circuit parameters."""

    def __init__(self, h0: QubitOperator, circuit: AnsatzCircuit, n_electrons: int,
                 tables: InteractionTables | None = None, active=None, config: VqeConfig | None = None):
        self.h0 = h0
        self.h0_sparse = h0.to_sparse()
        self.circuit = circuit
        self.n_electrons = n_electrons
        self.tables = tables
        self.active = active
        self.config = config or VqeConfig()
        self.n_qubits = h0.n_qubits
        self.m = self.n_qubits // 2
        self.reference = hf_state(self.n_qubits, n_electrons // 2, n_electrons // 2)
        self._rng = np.random.default_rng(self.config.seed)
        self._epq = None
        self.n_evaluations = 0
        if self.config.shots_mode and active is None:
            raise ValueError("shots mode needs the active-space integrals to rebuild energies from RDMs")

    def with_circuit(self, circuit: AnsatzCircuit) -> "FreeEnergy":
        other = FreeEnergy.__new__(FreeEnergy)
        other.__dict__.update(self.__dict__)
        other.circuit = circuit
        return other

    def state(self, theta) -> Statevector:
        return apply_ansatz(self.reference, self.circuit, theta)

    def _next_seed(self):
        return int(self._rng.integers(2**63 - 1))

    def evaluate(self, theta, two_body: bool = False, seed=None, need_rdm: bool = False) -> Evaluation:
        """Prepare the state, measure RDMs, refresh the charges and evaluate G.

        Exact gas-phase evaluations skip the RDMs unless ``need_rdm`` or ``two_body`` is set.
        """
        need_rdm = need_rdm or two_body
        self.n_evaluations += 1
        psi = self.state(theta)
        cfg = self.config
        if cfg.shots_mode:
            seed = self._next_seed() if seed is None else seed
            rdm = measure_rdms(psi, self.n_electrons, "shots", cfg.shots, seed, cfg.depolarizing, two_body=True)
            a = self.active
            e0 = rdm.energy(a.h_eff, a.g_active, a.constant)
        else:
            e0 = float(np.vdot(psi.amplitudes, self.h0_sparse @ psi.amplitudes).real)
            if self.tables is None and not need_rdm:
                return Evaluation(e0, None, None, e0)
            rdm = measure_rdms(psi, self.n_electrons, "exact", two_body=two_body)
        if self.tables is None:
            return Evaluation(e0, rdm, None, e0)
        e_solv = self.tables.solvation_energy(rdm.d)
        return Evaluation(e0 + e_solv, rdm, self.tables.charges(rdm.d), e0, e_solv)

    def __call__(self, theta) -> float:
        return self.evaluate(theta).value

    # gradients -----------------------------------------------------------
    def _excitation_sparse(self):
        if self._epq is None:
            m = self.m
            self._epq = {}
            for p in range(m):
                for q in range(m):
                    h = np.zeros((m, m))
                    h[p, q] = 1.0
                    self._epq[p, q] = one_body_operator(h).to_sparse()
        return self._epq

    def linearized_operator(self, d) -> sp.csr_matrix:
        """Sparse ``H0 + sum F_pq E_pq`` with the reaction-field operator frozen at ``d``."""
        if self.tables is None:
            return self.h0_sparse
        f = self.tables.effective_one_body(d)
        mat = self.h0_sparse.copy()
        for (p, q), e in self._excitation_sparse().items():
            if abs(f[p, q]) > 0:
                mat = mat + f[p, q] * e
        return mat

    def gradient(self, theta, method: str | None = None) -> np.ndarray:
        method = method or self.config.gradient
        theta = np.asarray(theta, float)
        if self.config.shots_mode and method != "finite_difference":
            raise ValueError("shots mode supports only finite-difference gradients")
        if method == "finite_difference":
            return self.finite_difference(theta, self.config.fd_step if self.config.shots_mode else 1e-5)
        d = self.evaluate(theta).rdm.d if self.tables is not None else None
        op = self.linearized_operator(d)
        if method == "adjoint":
            return adjoint_gradient(self.reference, self.circuit, theta, op)
        if method == "parameter_shift":
            return self._parameter_shift(theta, op)
        raise ValueError(f"unknown gradient method {method!r}")

    def _parameter_shift(self, theta, op):
        uses = np.bincount([g.param for g in self.circuit.gates], minlength=len(theta))
        if np.any(uses > 1):
            raise ValueError("parameter-shift rule needs one gate per parameter")

        def f(t):
            amp = self.state(t).amplitudes
            return float(np.vdot(amp, op @ amp).real)

        grad = np.zeros(len(theta))
        for k in range(len(theta)):
            e = np.zeros(len(theta))
            e[k] = 1.0
            d1 = f(theta + np.pi / 4 * e) - f(theta - np.pi / 4 * e)
            d2 = f(theta + 3 * np.pi / 4 * e) - f(theta - 3 * np.pi / 4 * e)
            grad[k] = 0.5 * (_SHIFT_C1 * d1 + _SHIFT_C2 * d2)
        return grad

    def finite_difference(self, theta, h=1e-5) -> np.ndarray:
        grad = np.zeros(len(theta))
        for k in range(len(theta)):
            e = np.zeros(len(theta))
            e[k] = h
            seed = self._next_seed() if self.config.shots_mode else None
            # common random numbers keep the shot-noise difference small
            grad[k] = (self.evaluate(theta + e, seed=seed).value - self.evaluate(theta - e, seed=seed).value) / (2 * h)
        return grad


def free_energy(theta, circuit: AnsatzCircuit, h0: QubitOperator, tables: InteractionTables | None,
                n_electrons: int, active=None, config: VqeConfig | None = None):
    """One pass of state preparation, RDM measurement, charge update and G evaluation.

    Returns ``(G, RdmPair, q)``; ``q`` is None in gas phase.
    """
    ev = FreeEnergy(h0, circuit, n_electrons, tables, active, config).evaluate(theta, two_body=True)
    return ev.value, ev.rdm, ev.charges


# ---------------------------------------------------------------------------
# selection


def select_excitations(h0: QubitOperator, n_electrons: int, mode: str = "adaptive", threshold: float = 1e-5,
                       tables: InteractionTables | None = None, kind: str = "givens", active=None,
                       config: VqeConfig | None = None, max_operators: int = 80, return_theta: bool = False):
    """Choose the excitations of the ansatz.

    ``"all"`` returns every singly and doubly excited configuration. The
    adaptive mode screens doubles by the magnitude of their one-gate gradient
    at the reference, optimizes the kept doubles, then screens singles by
    their one-gate gradient appended after the optimized doubles. Returned
    order: doubles, then singles. ``"adapt"`` grows the circuit one
    excitation at a time (largest gradient first, repeats allowed),
    re-optimizing after each addition. With ``return_theta`` the optimized
    parameters of the selection stage are returned alongside (zeros for the
    non-growing modes).
    """
    m = h0.n_qubits // 2
    singles, doubles = enumerate_excitations(m, n_electrons)
    if mode == "all":
        chosen = doubles + singles
        return (chosen, np.zeros(len(chosen))) if return_theta else chosen
    if mode not in ("adaptive", "adapt"):
        raise ValueError(f"unknown selection mode {mode!r}")
    exact = VqeConfig(**{**asdict(config or VqeConfig()), "shots": None, "gradient": "adjoint",
                         "optimizer": "gradient_descent", "selection": "all", "init": "zeros"})
    base = FreeEnergy(h0, AnsatzCircuit(h0.n_qubits), n_electrons, tables, active, exact)
    if mode == "adapt":
        chosen, theta = _grow(base, doubles + singles, threshold, kind, exact, max_operators)
        return (chosen, theta) if return_theta else chosen

    def screen(candidates, prefix, theta_prefix):
        cost = base.with_circuit(AnsatzCircuit.from_excitations(h0.n_qubits, prefix, kind))
        psi = cost.state(theta_prefix)
        d = cost.evaluate(theta_prefix).rdm.d if tables is not None else None
        gates = [(_gate_kind(exc, kind), exc) for exc in candidates]
        grads = appended_gate_gradients(psi, cost.linearized_operator(d) @ psi.amplitudes, gates)
        return [exc for exc, g in zip(candidates, grads) if abs(g) >= threshold]

    chosen = screen(doubles, [], np.zeros(0))
    theta = np.zeros(len(chosen))
    if chosen:
        circ = AnsatzCircuit.from_excitations(h0.n_qubits, chosen, kind)
        theta = _gradient_descent(base.with_circuit(circ), theta, exact).theta
    chosen += screen(singles, chosen, theta)
    if not chosen:
        warnings.warn("adaptive selection kept no excitation; using all of them", RuntimeWarning, stacklevel=2)
        chosen = doubles + singles
    return (chosen, np.zeros(len(chosen))) if return_theta else chosen


def _gate_kind(exc, kind):
    if kind == "givens":
        return "single_excitation" if len(exc) == 2 else "double_excitation"
    return "ucc_single" if len(exc) == 2 else "ucc_double"


def _grow(base: FreeEnergy, pool, threshold, kind, cfg, max_operators):
    """Append the pool excitation with the largest gradient and re-optimize until all fall below threshold.

    Excitations may recur, which lets a product of Givens rotations reach
    states a single ordered pass over the pool cannot.
    """
    n = base.n_qubits
    gate_kinds = [(_gate_kind(exc, kind), exc) for exc in pool]
    chosen: list = []
    theta = np.zeros(0)
    while len(chosen) < max_operators:
        cost = base.with_circuit(AnsatzCircuit.from_excitations(n, chosen, kind))
        psi = cost.state(theta)
        d = cost.evaluate(theta).rdm.d if base.tables is not None else None
        grads = np.abs(appended_gate_gradients(psi, cost.linearized_operator(d) @ psi.amplitudes, gate_kinds))
        k = int(np.argmax(grads))
        if grads[k] < max(threshold, 1e-12):
            break
        chosen.append(pool[k])
        cost = base.with_circuit(AnsatzCircuit.from_excitations(n, chosen, kind))
        # tight quasi-Newton solves: loosely converged parameters leave residual
        # gradients that would be mistaken for new directions
        theta = minimize(cost, np.append(theta, 0.0), jac=cost.gradient, method="BFGS",
                         options={"gtol": min(1e-7, 0.1 * threshold) if threshold > 0 else 1e-9}).x
        log.debug("adapt: %d operators, |g|max %.2e", len(chosen), grads[k])
    else:
        warnings.warn(f"adapt selection stopped at {max_operators} operators", RuntimeWarning, stacklevel=3)
    if not chosen:
        warnings.warn("adapt selection found no excitation above threshold; using all of them",
                      RuntimeWarning, stacklevel=3)
        return list(pool), np.zeros(len(pool))
    return chosen, theta


# ---------------------------------------------------------------------------
# optimizers


@dataclass
class _OptResult:
    theta: np.ndarray
    value: float
    converged: bool
    n_iterations: int
    trace: list


def _gradient_descent(cost: FreeEnergy, theta0, cfg: VqeConfig) -> _OptResult:
    """Steepest descent with reject-and-shrink (x0.5) and grow-on-success (x1.2) step control."""
    theta = np.asarray(theta0, float).copy()
    value = cost(theta)
    grad = cost.gradient(theta)
    step = cfg.step
    trace = [(0, value, float(np.linalg.norm(grad)))]
    history = [value]
    converged = len(theta) == 0 or np.linalg.norm(grad) < 1e-10
    it = 0
    while not converged and it < cfg.max_iterations:
        it += 1
        trial = theta - step * grad
        trial_value = cost(trial)
        if trial_value <= value:
            theta, value = trial, trial_value
            grad = cost.gradient(theta)
            history.append(value)
            if cfg.adaptive_step:
                step *= 1.2
        elif cfg.adaptive_step:
            step *= 0.5
        trace.append((it, value, float(np.linalg.norm(grad))))
        # only accepted steps enter the convergence window
        window = history[-(cfg.window + 1):]
        if len(window) == cfg.window + 1 and max(abs(np.diff(window))) < cfg.tolerance:
            converged = True
        if np.linalg.norm(grad) < 1e-10 or step < 1e-14:
            converged = True
    return _OptResult(theta, value, converged, it, trace)


def _fit_and_minimize(shifts, values, degree):
    """Least-squares trigonometric fit of the given degree, minimized on a fine grid."""
    cols = [np.ones_like(shifts)]
    for k in range(1, degree + 1):
        cols += [np.cos(k * shifts), np.sin(k * shifts)]
    coef, *_ = np.linalg.lstsq(np.stack(cols, 1), values, rcond=None)

    def model(t):
        t = np.atleast_1d(t)
        basis = [np.ones_like(t)]
        for k in range(1, degree + 1):
            basis += [np.cos(k * t), np.sin(k * t)]
        return np.stack(basis, 1) @ coef

    grid = np.linspace(-np.pi, np.pi, 513)
    i = int(np.argmin(model(grid)))
    h = grid[1] - grid[0]
    # polish the coarse grid minimum on the analytic model
    res = minimize_scalar(lambda t: float(model(t)[0]), bounds=(grid[i] - h, grid[i] + h), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x), float(res.fun)


def _rotosolve(cost: FreeEnergy, theta0, cfg: VqeConfig) -> _OptResult:
    """Sequential single-parameter sinusoid fits (degree 2 in gas phase, 4 with the reaction field)."""
    theta = np.asarray(theta0, float).copy()
    degree = 2 if cost.tables is None else 4
    shifts = np.linspace(-np.pi, np.pi, 2 * degree + 2)[:-1]
    value = cost(theta)
    trace = [(0, value, float("nan"))]
    history = [value]
    converged = len(theta) == 0
    it = 0
    while not converged and it < cfg.max_iterations:
        it += 1
        for k in range(len(theta)):
            vals = []
            for s in shifts:
                t = theta.copy()
                t[k] = theta[k] + s
                vals.append(cost(t))
            best, _ = _fit_and_minimize(shifts, np.array(vals), degree)
            theta[k] = theta[k] + best
        value = cost(theta)
        history.append(value)
        trace.append((it, value, float("nan")))
        window = history[-(cfg.window + 1):]
        if len(window) == cfg.window + 1 and max(abs(np.diff(window))) < cfg.tolerance:
            converged = True
    return _OptResult(theta, value, converged, it, trace)


# ---------------------------------------------------------------------------
# reports


@dataclass
class SolvationReport:
    method: str
    value: float  # E (gas phase) or G (solution), Ha
    energy_h0: float  # <H0> at the final state
    theta: np.ndarray
    excitations: list
    converged: bool
    n_iterations: int
    trace: list  # (iteration, value, grad_norm)
    rdm: RdmPair | None = None
    charges: np.ndarray | None = None
    solvent_energy: float = 0.0
    delta_g: float | None = None
    u_pol: float | None = None
    stderr: float | None = None
    n_qubits: int = 0
    n_electrons: int = 0
    system: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "method": self.method,
            "system": self.system,
            "n_qubits": self.n_qubits,
            "n_electrons": self.n_electrons,
            "value_Ha": self.value,
            "energy_h0_Ha": self.energy_h0,
            "solvent_energy_Ha": self.solvent_energy,
            "delta_g_Ha": self.delta_g,
            "u_pol_Ha": self.u_pol,
            "stderr_Ha": self.stderr,
            "converged": self.converged,
            "n_iterations": self.n_iterations,
            "theta": [float(t) for t in self.theta],
            "excitations": [list(map(int, e)) for e in self.excitations],
            "rdm1": None if self.rdm is None else self.rdm.d.tolist(),
            "rdm_mode": None if self.rdm is None else self.rdm.mode,
            "charges": None if self.charges is None else [float(q) for q in self.charges],
            "trace": [{"iteration": i, "value_Ha": v, "grad_norm": None if g != g else g} for i, v, g in self.trace],
            "timing": self.timing,
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "value_Ha", "grad_norm"])
            for i, v, g in self.trace:
                w.writerow([i, f"{v:.12f}", "" if g != g else f"{g:.6e}"])


def _initial_theta(n, cfg):
    if cfg.init == "random":
        return np.random.default_rng(cfg.seed).uniform(-0.1, 0.1, n)
    return np.zeros(n)


def _run(method, h0, n_electrons, tables, cfg, excitations, theta0, active):
    t0 = time.perf_counter()
    if excitations is None:
        excitations, grown = select_excitations(h0, n_electrons, cfg.selection, cfg.threshold, None, cfg.ansatz,
                                                active, cfg, cfg.max_operators, return_theta=True)
        if cfg.selection == "adapt" and theta0 is None:
            # the growth stage already optimized its circuit; continue from there
            theta0 = grown
    circuit = AnsatzCircuit.from_excitations(h0.n_qubits, excitations, cfg.ansatz)
    cost = FreeEnergy(h0, circuit, n_electrons, tables, active, cfg)
    theta0 = _initial_theta(circuit.n_params, cfg) if theta0 is None else np.asarray(theta0, float)
    if cfg.optimizer == "rotosolve":
        res = _rotosolve(cost, theta0, cfg)
    else:
        if cfg.shots_mode and cfg.gradient != "finite_difference":
            cfg = VqeConfig(**{**asdict(cfg), "gradient": "finite_difference"})
            cost.config = cfg
        res = _gradient_descent(cost, theta0, cfg)
    if not res.converged:
        log.warning("%s: not converged after %d iterations", method, res.n_iterations)
    final = cost.evaluate(res.theta, two_body=True)
    stderr = None
    if cfg.shots_mode:
        stderr = float(np.std([v for _, v, _ in res.trace[-50:]], ddof=1) / np.sqrt(len(res.trace[-50:]))) \
            if len(res.trace) > 2 else None
    return SolvationReport(
        method, final.value, final.energy_h0, res.theta, list(excitations), res.converged, res.n_iterations,
        res.trace, final.rdm, final.charges, final.solvent_energy, stderr=stderr, n_qubits=h0.n_qubits,
        n_electrons=n_electrons, timing={"wall_s": time.perf_counter() - t0, "n_evaluations": cost.n_evaluations},
    )


def run_vqe(config: VqeConfig, h0: QubitOperator, n_electrons: int, excitations=None, theta0=None,
            active=None) -> SolvationReport:
    """Gas-phase VQE from the Hartree-Fock reference."""
    return _run("vqe", h0, n_electrons, None, config, excitations, theta0, active)


def run_pcm_vqe(config: VqeConfig, h0: QubitOperator, tables: InteractionTables, n_electrons: int,
                excitations=None, theta0=None, active=None) -> SolvationReport:
    """Minimize the free energy in solution with the charges refreshed at every evaluation.

    Without an explicit excitation list the adaptive screen runs on the
    gas-phase Hamiltonian, so vacuum and solution runs share one ansatz.
    """
    return _run("pcm-vqe", h0, n_electrons, tables, config, excitations, theta0, active)


def solvation_free_energy(report_solution: SolvationReport, report_vacuum: SolvationReport) -> tuple[float, float | None]:
    """G[theta_sol] - E[theta_vac] and its root-sum-square uncertainty (None when both runs are exact)."""
    if report_solution.n_qubits != report_vacuum.n_qubits or report_solution.n_electrons != report_vacuum.n_electrons:
        raise ValueError("reports describe different systems")
    if report_solution.system and report_vacuum.system and \
            report_solution.system.get("molecule") != report_vacuum.system.get("molecule"):
        raise ValueError("reports describe different molecules")
    dg = report_solution.value - report_vacuum.value
    errs = [e for e in (report_solution.stderr, report_vacuum.stderr) if e is not None]
    return dg, (float(np.sqrt(sum(e * e for e in errs))) if errs else None)


def polarization_energy(theta_vac, circuit: AnsatzCircuit, tables: InteractionTables, n_electrons: int,
                        mode: str = "exact", n_shots: int = 8192, seed=None, depolarizing: float = 0.0) -> float:
    """Solvent interaction 1/2 V.Q V of the frozen gas-phase state (charges solved at its density)."""
    psi = apply_ansatz(hf_state(circuit.n_qubits, n_electrons // 2, n_electrons // 2), circuit, theta_vac)
    rdm = measure_rdms(psi, n_electrons, mode, n_shots, seed, depolarizing, two_body=False)
    return tables.solvation_energy(rdm.d)


def trace_distance(d_a, d_b) -> float:
    """Half the trace norm of the difference of two trace-normalized 1-RDMs."""
    a, b = np.asarray(d_a, float), np.asarray(d_b, float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("1-RDMs must be square matrices of equal size")
    out = []
    for x in (a, b):
        if not np.allclose(x, x.T, atol=1e-12):
            warnings.warn("non-symmetric 1-RDM symmetrized", RuntimeWarning, stacklevel=2)
            x = 0.5 * (x + x.T)
        out.append(x / np.trace(x))
    return float(0.5 * np.abs(np.linalg.eigvalsh(out[0] - out[1])).sum())
