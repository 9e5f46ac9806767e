"""Diagonal parent Hamiltonians over windowed qubit supports.

A catalog of allowed local configurations becomes the degenerate ground
manifold of a projector-sum term (energy -E_g on each allowed state, 0
elsewhere). Local terms over overlapping windows add up to a global
diagonal Hamiltonian whose energy at basis index x is the sum of each
window's lookup table evaluated on x's bits.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._kernels import phase_by_codes_inplace
from .errors import CapacityError, LayoutError, UnsupportedFormError, ValidationError

MAX_QUBITS = 25
# Full 2^n energy arrays are only materialized (and cached) at or below this.
DENSE_MAX_QUBITS = 20
# Exhaustive spectrum enumeration bound; frontier DP above it.
ENUM_MAX_QUBITS = 22
_CHUNK = 1 << 20


@dataclass(frozen=True)
class LocalWindow:
    """One local term: an energy table over the bits of `support`.

    Bit j of the local code is the state of qubit support[j].
    """

    support: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        object.__setattr__(self, "support", support)
        if not support:
            raise ValidationError("window support must be nonempty")
        if len(set(support)) != len(support):
            raise ValidationError(f"window support has duplicate qubits: {support}")
        table = np.ascontiguousarray(self.table, dtype=np.float64)
        if table.shape != (1 << len(support),):
            raise ValidationError(
                f"table length {table.size} does not match support width {len(support)}")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def codes(self, indices: np.ndarray) -> np.ndarray:
        """Local code of each global basis index."""
        codes = np.zeros(indices.shape, dtype=np.int64)
        for j, q in enumerate(self.support):
            codes |= ((indices >> q) & 1) << j
        return codes


class DiagonalHamiltonian:
    """Sum of windowed energy tables over an n-qubit register."""

    def __init__(self, num_qubits: int, windows: list[LocalWindow], energy_scale: float = 1.0):
        if not 1 <= num_qubits <= MAX_QUBITS:
            raise CapacityError(f"num_qubits must be in 1..{MAX_QUBITS}, got {num_qubits}")
        for w in windows:
            if max(w.support) >= num_qubits:
                raise LayoutError(
                    f"window support {w.support} outside {num_qubits}-qubit register")
        self.num_qubits = int(num_qubits)
        self.windows = list(windows)
        self.energy_scale = float(energy_scale)
        self._dense = None
        self._codes = None
        self._values = None

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def with_windows(self, extra: list[LocalWindow]) -> "DiagonalHamiltonian":
        return DiagonalHamiltonian(self.num_qubits, self.windows + list(extra),
                                   self.energy_scale)

    def energy_of(self, index: int) -> float:
        """Energy of a single basis index."""
        e = 0.0
        for w in self.windows:
            code = 0
            for j, q in enumerate(w.support):
                code |= ((index >> q) & 1) << j
            e += w.table[code]
        return float(e)

    def energy_block(self, lo: int, hi: int) -> np.ndarray:
        """Energies of basis indices lo..hi-1 (vectorized)."""
        idx = np.arange(lo, hi, dtype=np.int64)
        e = np.zeros(hi - lo, dtype=np.float64)
        for w in self.windows:
            e += w.table[w.codes(idx)]
        return e

    def energies(self) -> np.ndarray:
        """Full energy array; only for num_qubits <= DENSE_MAX_QUBITS."""
        if self.num_qubits > DENSE_MAX_QUBITS:
            raise CapacityError(
                f"dense energy array gated at {DENSE_MAX_QUBITS} qubits "
                f"(requested {self.num_qubits}); use energy_block")
        if self._dense is None:
            self._dense = self.energy_block(0, self.dim)
            self._dense.setflags(write=False)
        return self._dense

    def _compressed(self):
        """(codes, values) so that energy[i] == values[codes[i]].

        Used above the dense gate; assumes few distinct energies (true for
        projector-sum constructions). Returns None when > 65535 distinct.
        """
        if self._codes is None:
            values = np.empty(0, dtype=np.float64)
            for lo in range(0, self.dim, _CHUNK):
                block = self.energy_block(lo, min(lo + _CHUNK, self.dim))
                values = np.union1d(values, np.unique(block))
                if values.size > 65535:
                    return None
            codes = np.empty(self.dim, dtype=np.uint16)
            for lo in range(0, self.dim, _CHUNK):
                hi = min(lo + _CHUNK, self.dim)
                codes[lo:hi] = np.searchsorted(values, self.energy_block(lo, hi))
            self._codes = codes
            self._values = values
        return self._codes, self._values

    def apply_phase_inplace(self, amps: np.ndarray, theta: float) -> None:
        """amps[x] *= exp(-i * theta * E(x)), in place."""
        if amps.size != self.dim:
            for lo in range(0, amps.size, _CHUNK):
                hi = min(lo + _CHUNK, amps.size)
                amps[lo:hi] *= np.exp(-1j * theta * self.energy_block(lo, hi))
            return
        if self.num_qubits <= DENSE_MAX_QUBITS:
            amps *= np.exp(-1j * theta * self.energies())
            return
        comp = self._compressed()
        if comp is not None:
            codes, values = comp
            phase_by_codes_inplace(amps, self.num_qubits, codes,
                                   np.exp(-1j * theta * values))
        else:
            for lo in range(0, self.dim, _CHUNK):
                hi = min(lo + _CHUNK, self.dim)
                amps[lo:hi] *= np.exp(-1j * theta * self.energy_block(lo, hi))

    def expectation_from_amps(self, amps: np.ndarray) -> float:
        """<H> for the amplitude array (sum of |a|^2 E)."""
        if amps.size == self.dim and self.num_qubits > DENSE_MAX_QUBITS:
            comp = self._compressed()
            if comp is not None:
                codes, values = comp
                probs = np.abs(amps) ** 2
                return float(np.bincount(codes, weights=probs,
                                         minlength=values.size) @ values)
        total = 0.0
        for lo in range(0, amps.size, _CHUNK):
            hi = min(lo + _CHUNK, amps.size)
            block = amps[lo:hi]
            total += float(self.energy_block(lo, hi) @ (np.abs(block) ** 2))
        return total


@dataclass(frozen=True)
class PauliHamiltonian:
    """Weighted sum of Pauli strings: terms of (coefficient, {qubit: 'X'|'Y'|'Z'})."""

    terms: tuple

    def __post_init__(self):
        norm = []
        for coeff, string in self.terms:
            coeff = float(coeff)
            if not np.isfinite(coeff):
                raise ValidationError("non-finite Pauli coefficient")
            ops = {}
            for q, p in dict(string).items():
                if p not in ("X", "Y", "Z"):
                    raise ValidationError(f"unknown Pauli letter {p!r}")
                ops[int(q)] = p
            norm.append((coeff, tuple(sorted(ops.items()))))
        object.__setattr__(self, "terms", tuple(norm))

    def support(self) -> tuple[int, ...]:
        qubits = set()
        for _, string in self.terms:
            qubits.update(q for q, _ in string)
        return tuple(sorted(qubits))

    def mapped(self, qubit_map: dict[int, int]) -> "PauliHamiltonian":
        """Relabel qubits (local window -> global layout)."""
        return PauliHamiltonian(tuple(
            (coeff, tuple((qubit_map[q], p) for q, p in string))
            for coeff, string in self.terms))

    def is_diagonal(self) -> bool:
        return all(p == "Z" for _, string in self.terms for _, p in string)

    def diagonal_table(self, num_qubits: int) -> np.ndarray:
        """Energy table over all 2^n configurations (Z-only strings)."""
        if not self.is_diagonal():
            raise UnsupportedFormError("diagonal_table requires Z-only strings")
        idx = np.arange(1 << num_qubits, dtype=np.int64)
        table = np.zeros(idx.size, dtype=np.float64)
        for coeff, string in self.terms:
            mask = 0
            for q, _ in string:
                if q >= num_qubits:
                    raise LayoutError(f"Pauli term on qubit {q} outside {num_qubits} qubits")
                mask |= 1 << q
            parity = _popcount(idx & mask) & 1
            table += coeff * (1.0 - 2.0 * parity)
        return table


def _popcount(idx: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(idx).astype(np.int64)
    out = np.zeros(idx.shape, dtype=np.int64)
    x = idx.copy()
    while np.any(x):
        out += x & 1
        x >>= 1
    return out


@dataclass(frozen=True)
class PhaseGate:
    """Controlled phase: multiply by e^{i*phase} when every control bit matches."""

    controls: tuple  # ((qubit, required_bit), ...)
    phase: float

    def __post_init__(self):
        controls = tuple((int(q), int(b)) for q, b in self.controls)
        qubits = [q for q, _ in controls]
        if len(set(qubits)) != len(qubits):
            raise ValidationError(f"duplicate control qubit in {qubits}")
        if any(b not in (0, 1) for _, b in controls):
            raise ValidationError("control bits must be 0 or 1")
        object.__setattr__(self, "controls", controls)


@dataclass
class SpectrumReport:
    """Exact spectrum summary of a diagonal Hamiltonian."""

    ground_energy: float
    gap: float
    ground_set: np.ndarray | None
    ground_count: int
    description: str = ""


def spectral_parent(states, width: int, e_g: float = 1.0) -> np.ndarray:
    """Energy table with -e_g on each listed local state, 0 elsewhere.

    The listed states span the ground manifold; everything orthogonal sits
    at 0, so the gap is exactly e_g.
    """
    if e_g <= 0:
        raise ValidationError(f"energy scale must be positive, got {e_g}")
    states = sorted(int(s) for s in states)
    if not states:
        raise ValidationError("spectral parent needs at least one ground state")
    size = 1 << width
    if states[0] < 0 or states[-1] >= size:
        raise ValidationError(f"state outside {width}-bit window")
    table = np.zeros(size, dtype=np.float64)
    table[states] = -e_g
    if len(set(states)) == size:
        warnings.warn("all window states are ground states; gap is 0")
    return table


def pauli_case(case: int) -> PauliHamiltonian:
    """Built-in 4-pixel patch Hamiltonians in explicit Pauli form.

    Window qubits are ordered (NW, NE, SW, SE) = (0, 1, 2, 3). Ground
    manifolds: 1 = the four diagonal-stripe patches, 2 = the four
    single-black-pixel patches, 3 = every non-uniform patch.
    """
    nw, ne, sw, se = 0, 1, 2, 3
    if case == 1:
        terms = [(1.0, {nw: "Z", se: "Z"}), (1.0, {ne: "Z", sw: "Z"})]
    elif case == 2:
        terms = [(-1.0, {q: "Z"}) for q in range(4)]
        for i in range(4):
            for j in range(i + 1, 4):
                for k in range(j + 1, 4):
                    terms.append((1.0, {i: "Z", j: "Z", k: "Z"}))
    elif case == 3:
        # sum over the 6 unordered pairs plus the 4-body term
        terms = [(1.0, {i: "Z", j: "Z"}) for i in range(4) for j in range(i + 1, 4)]
        terms.append((1.0, {q: "Z" for q in range(4)}))
    else:
        raise ValidationError(f"case must be 1, 2 or 3, got {case}")
    return PauliHamiltonian(tuple(terms))


def case_pattern_states(case: int) -> list[int]:
    """Ground set of pauli_case(case) as 4-bit window codes, by enumeration."""
    table = pauli_case(case).diagonal_table(4)
    return [int(i) for i in np.flatnonzero(table == table.min())]


def mixer(num_qubits: int) -> PauliHamiltonian:
    """Transverse-field start Hamiltonian -sum_q X_q (ground = uniform state)."""
    return PauliHamiltonian(tuple((-1.0, {q: "X"}) for q in range(num_qubits)))


def assemble_global(tables, windows, num_qubits: int,
                    energy_scale: float = 1.0) -> DiagonalHamiltonian:
    """Sum per-window tables into a global diagonal Hamiltonian.

    `tables` is either one table shared by every window or a sequence
    aligned with `windows`. Overlapping supports simply add.
    """
    if isinstance(tables, np.ndarray):
        tables = [tables] * len(windows)
    tables = list(tables)
    if len(tables) != len(windows):
        raise ValidationError(
            f"{len(tables)} tables for {len(windows)} windows")
    local = [LocalWindow(tuple(w.support), t) for w, t in zip(windows, tables)]
    return DiagonalHamiltonian(num_qubits, local, energy_scale)


def assemble_global_pauli(local: PauliHamiltonian, windows) -> PauliHamiltonian:
    """Map a window-local Pauli Hamiltonian onto every window's support."""
    terms = []
    for w in windows:
        qubit_map = {j: q for j, q in enumerate(w.support)}
        terms.extend(local.mapped(qubit_map).terms)
    return PauliHamiltonian(tuple(terms))


def smoothing_terms(layout, e_g: float = 1.0) -> list[LocalWindow]:
    """Reward term per weight register: -e_g exactly when the register is 0.

    Admits any token combination carrying the zero-weight label into the
    ground manifold (add-one style generalization).
    """
    if e_g <= 0:
        raise ValidationError(f"energy scale must be positive, got {e_g}")
    terms = []
    for reg in layout.registers:
        if reg.kind != "weight":
            continue
        table = np.zeros(1 << reg.width, dtype=np.float64)
        table[0] = -e_g
        terms.append(LocalWindow(tuple(reg.qubits), table))
    if not terms:
        raise LayoutError("layout has no weight registers to smooth")
    return terms


def pruning_terms(layout, penalty: float, threshold, window_size: int = 2,
                  exempt_zero: bool = False) -> list[LocalWindow]:
    """Penalty +penalty on weight configurations with a low window product.

    Sliding windows of `window_size` adjacent weight registers (stride 1,
    partial overlap). A configuration is penalized when the product of its
    register values inside the window is < threshold. With exempt_zero,
    zero-valued registers are skipped in the product (an empty product
    counts as 1), so smoothed labels escape pruning.
    """
    if penalty <= 0:
        raise ValidationError(f"penalty must be positive, got {penalty}")
    weight_regs = [r for r in layout.registers if r.kind == "weight"]
    if len(weight_regs) < window_size:
        raise LayoutError(
            f"need at least {window_size} weight registers, have {len(weight_regs)}")
    num_windows = len(weight_regs) - window_size + 1
    thresholds = list(threshold) if np.iterable(threshold) else [threshold] * num_windows
    if len(thresholds) != num_windows:
        raise ValidationError(
            f"{len(thresholds)} thresholds for {num_windows} pruning windows")
    if any(t <= 0 for t in thresholds):
        raise ValidationError(f"thresholds must be positive, got {thresholds}")

    terms = []
    for l in range(num_windows):
        regs = weight_regs[l:l + window_size]
        support = tuple(q for r in regs for q in r.qubits)
        widths = [r.width for r in regs]
        size = 1 << sum(widths)
        table = np.zeros(size, dtype=np.float64)
        for code in range(size):
            product, rest = 1, code
            for width in widths:
                value = rest & ((1 << width) - 1)
                rest >>= width
                if exempt_zero and value == 0:
                    continue
                product *= value
            if product < thresholds[l]:
                table[code] = penalty
        terms.append(LocalWindow(support, table))
    return terms


def compile_evolution(h: DiagonalHamiltonian, theta: float) -> list[PhaseGate]:
    """Controlled-phase sequence equal to exp(-i H theta) for projector sums.

    One gate per ground state per window: controls select the state's bit
    pattern, phase +e_g*theta (the sign that evolution under energy -e_g
    imprints). Diagonal gates commute, so composition is exact.
    """
    if theta == 0.0:
        return []
    gates = []
    for w in h.windows:
        values = np.unique(w.table)
        if values.size == 1 and values[0] == 0.0:
            continue
        if values.size != 2 or values[1] != 0.0 or values[0] >= 0.0:
            raise UnsupportedFormError(
                f"window table spectrum {values} is not a projector sum")
        e_g = -values[0]
        for code in np.flatnonzero(w.table == values[0]):
            controls = tuple((q, (int(code) >> j) & 1) for j, q in enumerate(w.support))
            gates.append(PhaseGate(controls, e_g * theta))
    return gates


def diagonal_spectrum(h: DiagonalHamiltonian) -> SpectrumReport:
    """Exact ground energy, gap and ground set of a diagonal Hamiltonian.

    Exhaustive at <= ENUM_MAX_QUBITS; above that a frontier dynamic
    program sweeps qubit by qubit and the ground set is reported by count
    only (ground_set is None).
    """
    if h.num_qubits <= ENUM_MAX_QUBITS:
        emin = np.inf
        for lo in range(0, h.dim, _CHUNK):
            block = h.energy_block(lo, min(lo + _CHUNK, h.dim))
            emin = min(emin, float(block.min()))
        ground = []
        second = np.inf
        for lo in range(0, h.dim, _CHUNK):
            block = h.energy_block(lo, min(lo + _CHUNK, h.dim))
            ground.append(np.flatnonzero(block == emin) + lo)
            above = block[block > emin]
            if above.size:
                second = min(second, float(above.min()))
        ground_set = np.concatenate(ground)
        if not np.isfinite(second):
            warnings.warn("all basis states are degenerate ground states; gap is 0")
            gap = 0.0
        else:
            gap = second - emin
        return SpectrumReport(emin, gap, ground_set, ground_set.size)

    emin, count, second = _frontier_spectrum(h)
    if not np.isfinite(second):
        warnings.warn("all basis states are degenerate ground states; gap is 0")
        gap = 0.0
    else:
        gap = second - emin
    return SpectrumReport(emin, gap, None, count,
                          description=f"{count} ground states over "
                                      f"{h.num_qubits} qubits (set not materialized)")


def _frontier_spectrum(h: DiagonalHamiltonian):
    """Sweep qubits in index order, tracking (min, count, second-min) per
    assignment of the still-live qubits."""
    n = h.num_qubits
    completing = {q: [] for q in range(n)}
    for w in h.windows:
        completing[max(w.support)].append(w)
    live: list[int] = []
    # state key: bits of live qubits in list order -> (emin, count, second)
    states = {0: (0.0, 1, np.inf)}
    for q in range(n):
        alive_after = sorted({p for w in h.windows for p in w.support
                              if p <= q and max(w.support) > q})
        new_states: dict[int, tuple] = {}
        for key, (emin, count, second) in states.items():
            bits = {p: (key >> i) & 1 for i, p in enumerate(live)}
            for b in (0, 1):
                bits[q] = b
                delta = 0.0
                for w in completing[q]:
                    code = 0
                    for j, p in enumerate(w.support):
                        code |= bits[p] << j
                    delta += w.table[code]
                new_key = 0
                for i, p in enumerate(alive_after):
                    new_key |= bits[p] << i
                cand = (emin + delta, count, second + delta if np.isfinite(second) else np.inf)
                if new_key in new_states:
                    new_states[new_key] = _merge_levels(new_states[new_key], cand)
                else:
                    new_states[new_key] = cand
        states = new_states
        live = alive_after
    total = (np.inf, 0, np.inf)
    for level in states.values():
        total = _merge_levels(total, level)
    return total


def _merge_levels(a, b):
    """Merge two (min, count_at_min, second_distinct) summaries."""
    amin, acount, asecond = a
    bmin, bcount, bsecond = b
    if amin < bmin:
        return (amin, acount, min(asecond, bmin))
    if bmin < amin:
        return (bmin, bcount, min(bsecond, amin))
    return (amin, acount + bcount, min(asecond, bsecond))


def hamiltonian_to_json(h: DiagonalHamiltonian,
                        pauli: PauliHamiltonian | None = None) -> str:
    """Structured-text dump consumed by the CLI solve stage."""
    doc = {
        "num_qubits": h.num_qubits,
        "energy_scale": h.energy_scale,
        "windows": [{"support": list(w.support), "table": w.table.tolist()}
                    for w in h.windows],
    }
    if pauli is not None:
        doc["pauli_terms"] = [[coeff, {str(q): p for q, p in string}]
                              for coeff, string in pauli.terms]
    return json.dumps(doc, indent=2, sort_keys=True)


def hamiltonian_from_json(text: str):
    """Inverse of hamiltonian_to_json: (DiagonalHamiltonian, PauliHamiltonian|None)."""
    doc = json.loads(text)
    windows = [LocalWindow(tuple(w["support"]), np.asarray(w["table"], dtype=np.float64))
               for w in doc["windows"]]
    h = DiagonalHamiltonian(doc["num_qubits"], windows,
                            doc.get("energy_scale", 1.0))
    pauli = None
    if "pauli_terms" in doc:
        pauli = PauliHamiltonian(tuple(
            (coeff, {int(q): p for q, p in string.items()})
            for coeff, string in doc["pauli_terms"]))
    return h, pauli
