"""Dense statevector engine with a fast path for diagonal operators.

Bit convention throughout the toolkit: qubit q is bit q of the basis
index, qubit 0 least significant. Supports up to MAX_QUBITS = 25 qubits
in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import single_qubit_inplace
from .errors import CapacityError, LayoutError, ValidationError
from .hamiltonian import DiagonalHamiltonian, PauliHamiltonian, PhaseGate, _popcount

MAX_QUBITS = 25
_CHUNK = 1 << 20
_UNITARY_ATOL = 1e-10


@dataclass
class StateVector:
    """2^n complex amplitudes over computational basis states."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise CapacityError(
                f"qubit count must be in 1..{MAX_QUBITS}, got {self.num_qubits}")
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValidationError(
                f"expected {1 << self.num_qubits} amplitudes, got {self.amplitudes.shape}")

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm_sq(self) -> float:
        total = 0.0
        for lo in range(0, self.dim, _CHUNK):
            block = self.amplitudes[lo:lo + _CHUNK]
            total += float(np.real(block @ block.conj()))
        return total

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def init_uniform(num_qubits: int) -> StateVector:
    """Uniform superposition |+>^n, the mixer ground state."""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise CapacityError(
            f"qubit count must be in 1..{MAX_QUBITS}, got {num_qubits}")
    amp = 2.0 ** (-num_qubits / 2.0)
    return StateVector(num_qubits, np.full(1 << num_qubits, amp, dtype=np.complex128))


def basis_state(num_qubits: int, index: int) -> StateVector:
    """Computational basis state |index>."""
    if not 0 <= index < (1 << num_qubits):
        raise ValidationError(f"basis index {index} outside {num_qubits} qubits")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


def superposition(num_qubits: int, indices) -> StateVector:
    """Equal superposition over the given basis indices."""
    indices = np.asarray(sorted(set(int(i) for i in indices)), dtype=np.int64)
    if indices.size == 0:
        raise ValidationError("superposition needs at least one basis index")
    if indices[0] < 0 or indices[-1] >= (1 << num_qubits):
        raise ValidationError("basis index outside register")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[indices] = 1.0 / np.sqrt(indices.size)
    return StateVector(num_qubits, amps)


def _check_support(state: StateVector, h) -> None:
    qubits = h.support() if isinstance(h, PauliHamiltonian) else [
        q for w in h.windows for q in w.support]
    for q in qubits:
        if q >= state.num_qubits:
            raise LayoutError(
                f"operator acts on qubit {q}, state has {state.num_qubits}")


def apply_diagonal_phase(state: StateVector, h: DiagonalHamiltonian,
                         theta: float) -> StateVector:
    """amplitude(x) *= exp(-i * theta * E(x)); norm preserved exactly."""
    _check_support(state, h)
    out = state.copy()
    h.apply_phase_inplace(out.amplitudes, theta)
    return out


def apply_single_qubit(state: StateVector, q: int, u: np.ndarray) -> StateVector:
    """Tensor-product action of a 2x2 unitary on qubit q."""
    if not 0 <= q < state.num_qubits:
        raise LayoutError(f"qubit {q} outside {state.num_qubits}-qubit state")
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        raise ValidationError(f"expected 2x2 matrix, got {u.shape}")
    if not np.allclose(u @ u.conj().T, np.eye(2), atol=_UNITARY_ATOL):
        raise ValidationError("matrix is not unitary within 1e-10")
    out = state.copy()
    single_qubit_inplace(out.amplitudes, state.num_qubits, q, u)
    return out


def _control_mask(controls, num_qubits: int):
    mask = value = 0
    seen = set()
    for q, bit in controls:
        q, bit = int(q), int(bit)
        if q in seen:
            raise ValidationError(f"duplicate control qubit {q}")
        seen.add(q)
        if not 0 <= q < num_qubits:
            raise LayoutError(f"control qubit {q} outside {num_qubits}-qubit state")
        if bit not in (0, 1):
            raise ValidationError(f"control bit must be 0 or 1, got {bit}")
        mask |= 1 << q
        value |= bit << q
    return mask, value


def _controlled_phase_inplace(amps: np.ndarray, num_qubits: int,
                              controls, phase: float) -> None:
    mask, value = _control_mask(controls, num_qubits)
    factor = np.exp(1j * phase)
    if mask == 0:
        amps *= factor
        return
    for lo in range(0, amps.size, _CHUNK):
        hi = min(lo + _CHUNK, amps.size)
        idx = np.arange(lo, hi, dtype=np.int64)
        sel = (idx & mask) == value
        amps[lo:hi][sel] *= factor


def apply_controlled_phase(state: StateVector, controls, phase: float) -> StateVector:
    """Multiply by e^{i*phase} on every index whose control bits all match.

    An empty control list is a global phase. One such gate per ground
    state realizes a diag(1, ..., e^{i*phase}, ..., 1) factor of the
    compiled diagonal evolution.
    """
    out = state.copy()
    _controlled_phase_inplace(out.amplitudes, state.num_qubits, controls, phase)
    return out


def _mcx_inplace(amps: np.ndarray, num_qubits: int, controls, target: int) -> None:
    mask, value = _control_mask(controls, num_qubits)
    if not 0 <= target < num_qubits:
        raise LayoutError(f"target qubit {target} outside {num_qubits}-qubit state")
    if mask & (1 << target):
        raise ValidationError(f"target qubit {target} is also a control")
    tmask = 1 << target
    idx = np.arange(amps.size, dtype=np.int64)
    sel = ((idx & mask) == value) & ((idx & tmask) == 0)
    src = idx[sel]
    dst = src | tmask
    tmp = amps[src].copy()
    amps[src] = amps[dst]
    amps[dst] = tmp


def apply_multi_controlled_x(state: StateVector, controls, target: int) -> StateVector:
    """Flip the target qubit wherever all control bits match."""
    out = state.copy()
    _mcx_inplace(out.amplitudes, state.num_qubits, controls, target)
    return out


def apply_phase_gates(state: StateVector, gates: list[PhaseGate]) -> StateVector:
    """Apply a compiled controlled-phase sequence."""
    out = state.copy()
    for g in gates:
        _controlled_phase_inplace(out.amplitudes, state.num_qubits, g.controls, g.phase)
    return out


def expectation_diagonal(state: StateVector, h: DiagonalHamiltonian) -> float:
    """<H> = sum_x |amplitude(x)|^2 E(x)."""
    _check_support(state, h)
    return h.expectation_from_amps(state.amplitudes)


def expectation_pauli(state: StateVector, h: PauliHamiltonian) -> float:
    """<H> for a general Pauli-string Hamiltonian."""
    _check_support(state, h)
    amps = state.amplitudes
    total = 0.0
    for coeff, string in h.terms:
        if len(string) == 1 and string[0][1] == "X":
            # single-X fast path (the transverse-field mixer)
            q = string[0][0]
            view = amps.reshape(-1, 2, 1 << q)
            total += coeff * 2.0 * float(
                np.real(np.sum(view[:, 0, :].conj() * view[:, 1, :])))
            continue
        xmask = ymask = zmask = 0
        for q, p in string:
            if p == "X":
                xmask |= 1 << q
            elif p == "Y":
                ymask |= 1 << q
            else:
                zmask |= 1 << q
        flip = xmask | ymask
        ny = bin(ymask).count("1")
        acc = 0.0 + 0.0j
        for lo in range(0, amps.size, _CHUNK):
            hi = min(lo + _CHUNK, amps.size)
            idx = np.arange(lo, hi, dtype=np.int64)
            sign = 1.0 - 2.0 * (_popcount(idx & (ymask | zmask)) & 1)
            acc += np.sum(amps[idx ^ flip].conj() * sign * amps[lo:hi])
        total += coeff * float(np.real((1j) ** ny * acc))
    return total


@dataclass
class MeasurementCounts:
    """Shot counts per measured basis index."""

    counts: dict
    total_shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total_shots:
            raise ValidationError("counts do not sum to total_shots")


def sample(state: StateVector, shots: int, seed: int) -> MeasurementCounts:
    """Draw basis indices from |amplitude|^2; deterministic for fixed seed."""
    if shots < 1:
        raise ValidationError(f"shots must be >= 1, got {shots}")
    cdf = np.cumsum(state.probabilities())
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    rng = np.random.default_rng(seed)
    draws = np.searchsorted(cdf, rng.random(shots), side="right")
    values, freq = np.unique(draws, return_counts=True)
    counts = {int(v): int(c) for v, c in zip(values, freq)}
    return MeasurementCounts(counts, shots)


def subspace_overlap(state: StateVector, basis_set) -> float:
    """Total probability mass on the given basis indices."""
    indices = np.asarray(sorted(set(int(i) for i in basis_set)), dtype=np.int64)
    if indices.size == 0:
        return 0.0
    if indices[0] < 0 or indices[-1] >= state.dim:
        raise ValidationError("basis index outside register")
    block = state.amplitudes[indices]
    return float(np.real(block @ block.conj()))
