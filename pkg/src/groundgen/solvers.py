"""Ground-state protocols: Trotterized adiabatic evolution, variational
ansatz optimization, and Grover amplitude amplification.

Every solver starts (by default) from the uniform superposition, the
ground state of the transverse-field mixer H0 = -sum X, and returns a
final state plus a per-step SolveTrace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import statevec as sv
from ._kernels import rotate_all_inplace, single_qubit_inplace
from .errors import CapacityError, InfeasibleModelError, ValidationError
from .hamiltonian import (DiagonalHamiltonian, diagonal_spectrum, mixer,
                          ENUM_MAX_QUBITS)
from .patterns import Window
from .statevec import MAX_QUBITS, StateVector, init_uniform

_CHUNK = 1 << 20


@dataclass
class SolveTrace:
    """Per-step record of a solve; serializable to CSV."""

    columns: tuple
    rows: list = field(default_factory=list)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValidationError(
                f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def final(self, column: str):
        return self.rows[-1][self.columns.index(column)]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_csv_cell(v) for v in row))
        return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format(v, ".12g")
    return str(v)


def _overlap_or_nan(amps: np.ndarray, ground_set) -> float:
    if ground_set is None:
        return math.nan
    indices = np.asarray(ground_set, dtype=np.int64)
    block = amps[indices]
    return float(np.real(block @ block.conj()))


def _ground_info(h: DiagonalHamiltonian, ground_set, ground_energy):
    """Fill in missing ground data from the spectrum when cheap to get."""
    if ground_set is None and h.num_qubits <= ENUM_MAX_QUBITS:
        report = diagonal_spectrum(h)
        ground_set = report.ground_set
        if ground_energy is None:
            ground_energy = report.ground_energy
    elif ground_energy is None:
        ground_energy = diagonal_spectrum(h).ground_energy
    return ground_set, ground_energy


@dataclass
class AdiabaticConfig:
    """Linear-schedule annealing: H(s) = (1-s) H0 + s Hf, s = t/T."""

    total_time: float
    steps: int = 200
    order: int = 1  # Trotter order (1 or 2)
    record_every: int = 1

    def __post_init__(self):
        if self.total_time <= 0:
            raise ValidationError(f"total_time must be > 0, got {self.total_time}")
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.order not in (1, 2):
            raise ValidationError(f"Trotter order must be 1 or 2, got {self.order}")
        if self.record_every < 1:
            raise ValidationError("record_every must be >= 1")


def mixer_excited_state(num_qubits: int, flipped) -> StateVector:
    """Eigenstate of H0 = -sum X with |-> on the flipped qubits.

    Energy -(n - 2*len(flipped)); an exact mixer excited state for
    nonempty `flipped`.
    """
    state = init_uniform(num_qubits)
    z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    for q in set(flipped):
        single_qubit_inplace(state.amplitudes, num_qubits, int(q), z)
    return state


def adiabatic_solve(h_f: DiagonalHamiltonian, cfg: AdiabaticConfig,
                    initial: StateVector | None = None,
                    ground_set=None) -> tuple[StateVector, SolveTrace]:
    """First-order Trotterized annealing from the mixer ground state.

    Each step applies the mixer rotation exp(+i dt (1-s) X) on every
    qubit, then the diagonal phase exp(-i dt s Hf). The trace records
    <H(s)> = (1-s) <H0> + s <Hf> and the ground-manifold overlap.
    """
    n = h_f.num_qubits
    state = init_uniform(n) if initial is None else initial.copy()
    if state.num_qubits != n:
        raise ValidationError(
            f"initial state has {state.num_qubits} qubits, Hamiltonian {n}")
    ground_set, _ = _ground_info(h_f, ground_set, 0.0)
    amps = state.amplitudes
    h_0 = mixer(n)
    dt = cfg.total_time / cfg.steps
    trace = SolveTrace(("step", "s", "energy", "overlap"))

    def record(step, s):
        energy = ((1.0 - s) * sv.expectation_pauli(state, h_0)
                  + s * h_f.expectation_from_amps(amps))
        trace.add(step, s, energy, _overlap_or_nan(amps, ground_set))

    for step in range(1, cfg.steps + 1):
        s = (step - 0.5) / cfg.steps
        if cfg.order == 1:
            _mixer_rotation(amps, n, dt * (1.0 - s))
            h_f.apply_phase_inplace(amps, dt * s)
        else:
            _mixer_rotation(amps, n, 0.5 * dt * (1.0 - s))
            h_f.apply_phase_inplace(amps, dt * s)
            _mixer_rotation(amps, n, 0.5 * dt * (1.0 - s))
        if step % cfg.record_every == 0 or step == cfg.steps:
            record(step, s)
    return state, trace


def _mixer_rotation(amps: np.ndarray, n: int, phi: float) -> None:
    """exp(+i phi X) on every qubit: [[cos phi, i sin phi], [i sin phi, cos phi]]."""
    rotate_all_inplace(amps, n, math.cos(phi), 1j * math.sin(phi))


@dataclass
class VariationalConfig:
    """Hardware-style ansatz: p layers of per-qubit Ry rotations followed
    by a ring of controlled-Z entanglers, applied to the uniform state."""

    layers: int
    max_evals: int = 2000
    seed: int = 0
    optimizer: str = "rotosolve"  # or "parameter-shift"
    tol: float = 1e-3
    learning_rate: float = 0.1

    def __post_init__(self):
        if self.layers < 0:
            raise ValidationError(f"layers must be >= 0, got {self.layers}")
        if self.optimizer not in ("rotosolve", "parameter-shift"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")
        if self.max_evals < 1:
            raise ValidationError("max_evals must be >= 1")


@dataclass
class VariationalResult:
    state: StateVector
    trace: SolveTrace
    converged: bool
    best_cost: float
    evals_used: int
    params: np.ndarray


def _cz_ring(n: int) -> list:
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    return [(q, (q + 1) % n) for q in range(n)]


def _ansatz_state(n: int, layers: int, params: np.ndarray) -> np.ndarray:
    amps = init_uniform(n).amplitudes
    ring = _cz_ring(n)
    for l in range(layers):
        for q in range(n):
            theta = params[l * n + q]
            c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
            ry = np.array([[c, -s], [s, c]], dtype=np.complex128)
            single_qubit_inplace(amps, n, q, ry)
        for i, j in ring:
            sv._controlled_phase_inplace(amps, n, ((i, 1), (j, 1)), math.pi)
    return amps


def variational_solve(h_f: DiagonalHamiltonian, cfg: VariationalConfig,
                      ground_set=None,
                      ground_energy=None) -> VariationalResult:
    """Minimize <Hf> over the ansatz parameters.

    Default optimizer is sinusoidal coordinate descent: the cost is an
    exact sinusoid in each single angle, so three evaluations per
    coordinate locate its exact minimum. "parameter-shift" runs plain
    gradient descent with shift-rule gradients instead. Returns the best
    state found; converged means the cost reached the known ground energy
    within cfg.tol before the evaluation budget expired.
    """
    n = h_f.num_qubits
    ground_set, ground_energy = _ground_info(h_f, ground_set, ground_energy)
    rng = np.random.default_rng(cfg.seed)
    num_params = cfg.layers * n
    params = rng.uniform(-0.1, 0.1, size=num_params)
    evals = 0

    def cost(p) -> float:
        nonlocal evals
        evals += 1
        return h_f.expectation_from_amps(_ansatz_state(n, cfg.layers, p))

    trace = SolveTrace(("step", "s", "energy", "overlap"))
    best_cost = cost(params)
    best_params = params.copy()

    def record(iteration):
        amps = _ansatz_state(n, cfg.layers, best_params)
        trace.add(iteration, evals, best_cost, _overlap_or_nan(amps, ground_set))

    def done() -> bool:
        return (ground_energy is not None
                and best_cost <= ground_energy + cfg.tol)

    record(0)
    iteration = 0
    f_current = best_cost  # exact cost at the current parameter vector
    while evals < cfg.max_evals and num_params and not done():
        iteration += 1
        if cfg.optimizer == "rotosolve":
            for i in range(num_params):
                if evals + 3 > cfg.max_evals:
                    break
                theta = params[i]
                params[i] = theta + math.pi / 2.0
                f_plus = cost(params)
                params[i] = theta - math.pi / 2.0
                f_minus = cost(params)
                # cost(theta + d) = a + r*cos(d + phi); exact minimum at
                # d = pi - phi since each Ry angle enters sinusoidally
                a = 0.5 * (f_plus + f_minus)
                r_sin = 0.5 * (f_minus - f_plus)
                r_cos = f_current - a
                phi = math.atan2(r_sin, r_cos)
                params[i] = _wrap_angle(theta + math.pi - phi)
                f_current = a - math.hypot(r_sin, r_cos)
            current = cost(params)  # re-evaluate to guard against drift
        else:
            grad = np.zeros(num_params)
            for i in range(num_params):
                if evals + 3 > cfg.max_evals:
                    break
                theta = params[i]
                params[i] = theta + math.pi / 2.0
                f_plus = cost(params)
                params[i] = theta - math.pi / 2.0
                f_minus = cost(params)
                params[i] = theta
                grad[i] = 0.5 * (f_plus - f_minus)
            params -= cfg.learning_rate * grad
            current = cost(params)
        f_current = current
        if current < best_cost:
            best_cost = current
            best_params = params.copy()
        record(iteration)

    state = StateVector(n, _ansatz_state(n, cfg.layers, best_params))
    return VariationalResult(state, trace, done(), best_cost, evals, best_params)


def _wrap_angle(theta: float) -> float:
    return math.remainder(theta, 2.0 * math.pi)


@dataclass(frozen=True)
class OracleConstraint:
    """One conjunct of the verification predicate: the window's local code
    must be in the allowed set."""

    window: Window
    allowed: tuple

    def __post_init__(self):
        allowed = tuple(sorted(set(int(a) for a in self.allowed)))
        size = 1 << len(self.window.support)
        if allowed and not 0 <= allowed[0] <= allowed[-1] < size:
            raise ValidationError("allowed code outside window")
        object.__setattr__(self, "allowed", allowed)


def _marked_indices(constraints, num_qubits: int) -> np.ndarray:
    ok = np.ones(1 << num_qubits, dtype=bool)
    idx = np.arange(1 << num_qubits, dtype=np.int64)
    for c in constraints:
        table = np.zeros(1 << len(c.window.support), dtype=bool)
        table[list(c.allowed)] = True
        codes = np.zeros(idx.size, dtype=np.int64)
        for j, q in enumerate(c.window.support):
            codes |= ((idx >> q) & 1) << j
        ok &= table[codes]
    return idx[ok]


class PredicateOracle:
    """Classical boolean over basis bits, used directly as a phase flip."""

    def __init__(self, constraints, num_qubits: int):
        self.constraints = tuple(constraints)
        self.num_qubits = int(num_qubits)
        self.total_qubits = self.num_qubits
        self.marked = _marked_indices(self.constraints, self.num_qubits)

    @property
    def num_marked(self) -> int:
        return int(self.marked.size)

    def apply_inplace(self, amps: np.ndarray) -> None:
        amps[self.marked] *= -1.0


class GateOracle:
    """Compute/phase/uncompute oracle from multi-controlled gates.

    Each constraint gets a scratch qubit toggled by one pattern detector
    per allowed code (a multi-controlled X whose control polarities select
    the code; allowed codes are mutually exclusive, so the XOR of the
    detectors is their disjunction). A phase flip controlled on all
    scratch qubits marks the conjunction, then the detectors run in
    reverse to restore the scratch register.
    """

    def __init__(self, constraints, num_qubits: int):
        self.constraints = tuple(constraints)
        self.num_qubits = int(num_qubits)
        self.total_qubits = self.num_qubits + len(self.constraints)
        if self.total_qubits > MAX_QUBITS:
            raise CapacityError(
                f"gate oracle needs {self.total_qubits} qubits including scratch "
                f"(max {MAX_QUBITS})")
        self._detectors = []
        for k, c in enumerate(self.constraints):
            scratch = self.num_qubits + k
            for code in c.allowed:
                controls = tuple((q, (code >> j) & 1)
                                 for j, q in enumerate(c.window.support))
                self._detectors.append((controls, scratch))
        self._phase_controls = tuple(
            (self.num_qubits + k, 1) for k in range(len(self.constraints)))

    @property
    def num_marked(self) -> int:
        return int(_marked_indices(self.constraints, self.num_qubits).size)

    def apply_inplace(self, amps: np.ndarray) -> None:
        for controls, target in self._detectors:
            sv._mcx_inplace(amps, self.total_qubits, controls, target)
        sv._controlled_phase_inplace(amps, self.total_qubits,
                                     self._phase_controls, math.pi)
        for controls, target in reversed(self._detectors):
            sv._mcx_inplace(amps, self.total_qubits, controls, target)


def build_grover_oracle(constraints, num_qubits: int,
                        backend: str = "predicate"):
    """Verification oracle from per-window allowed-code sets.

    A basis state is marked iff every constraint accepts its window code.
    Backends agree on every basis state; "predicate" flips phases from a
    classical membership table, "gate" simulates the multi-controlled
    construction with scratch qubits.
    """
    if backend == "predicate":
        return PredicateOracle(constraints, num_qubits)
    if backend == "gate":
        return GateOracle(constraints, num_qubits)
    raise ValidationError(f"unknown oracle backend {backend!r}")


@dataclass
class GroverConfig:
    """Iteration policy: fixed k, optimal-from-count, or energy-stop."""

    policy: str = "optimal"  # fixed | optimal | energy-stop
    iterations: int = 0
    max_iterations: int = 64
    energy_tol: float = 1e-6

    def __post_init__(self):
        if self.policy not in ("fixed", "optimal", "energy-stop"):
            raise ValidationError(f"unknown Grover policy {self.policy!r}")
        if self.policy == "fixed" and self.iterations < 0:
            raise ValidationError("fixed iteration count must be >= 0")


def optimal_grover_iterations(num_qubits: int, num_marked: int) -> int:
    """k* = round((pi/4) sqrt(2^n / M))."""
    if num_marked < 1:
        raise InfeasibleModelError("no marked states")
    return int(round(math.pi / 4.0 * math.sqrt((1 << num_qubits) / num_marked)))


def grover_solve(oracle, cfg: GroverConfig,
                 monitor: DiagonalHamiltonian | None = None,
                 ground_set=None,
                 ground_energy=None) -> tuple[StateVector, SolveTrace]:
    """Oracle phase flip + inversion about the mean, from the uniform state.

    The trace records <monitor> after each iteration. Restricted to the
    marked states the iterate stays exactly uniform, so the final state is
    an equal-weight superposition of every accepted configuration.
    """
    n = oracle.num_qubits
    m = oracle.num_marked
    if m == 0:
        raise InfeasibleModelError("oracle marks no states; model is unsatisfiable")
    if monitor is not None and (ground_set is None or ground_energy is None):
        ground_set, ground_energy = _ground_info(monitor, ground_set, ground_energy)

    if cfg.policy == "fixed":
        limit = cfg.iterations
    elif cfg.policy == "optimal":
        limit = optimal_grover_iterations(n, m)
    else:
        limit = cfg.max_iterations

    amps = np.zeros(1 << oracle.total_qubits, dtype=np.complex128)
    block = amps[:1 << n]
    block[:] = 2.0 ** (-n / 2.0)
    trace = SolveTrace(("iter", "energy", "overlap"))

    def record(k):
        energy = (monitor.expectation_from_amps(block)
                  if monitor is not None else math.nan)
        trace.add(k, energy, _overlap_or_nan(block, ground_set))
        return energy

    record(0)
    for k in range(1, limit + 1):
        oracle.apply_inplace(amps)
        mean = block.mean()
        np.subtract(2.0 * mean, block, out=block)
        energy = record(k)
        if (cfg.policy == "energy-stop" and ground_energy is not None
                and abs(energy - ground_energy) <= cfg.energy_tol):
            break
    return StateVector(n, block.copy()), trace
