"""Statevector engine correctness tests."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from groundgen.errors import CapacityError, LayoutError, ValidationError
from groundgen.hamiltonian import (DiagonalHamiltonian, LocalWindow, mixer,
                                   pauli_case, PauliHamiltonian,
                                   assemble_global, spectral_parent)
from groundgen.patterns import image_windows
from groundgen.statevec import (MeasurementCounts, StateVector,
                                apply_controlled_phase, apply_diagonal_phase,
                                apply_multi_controlled_x, apply_single_qubit,
                                basis_state, expectation_diagonal,
                                expectation_pauli, init_uniform, sample,
                                subspace_overlap, superposition)

S2 = 1.0 / math.sqrt(2.0)
X = np.array([[0, 1], [1, 0]], dtype=complex)
H = np.array([[S2, S2], [S2, -S2]], dtype=complex)


def single_window(table, support=None):
    support = tuple(range(int(math.log2(len(table))))) if support is None else support
    return DiagonalHamiltonian(len(support), [LocalWindow(support, np.asarray(table, float))])


def dense_diagonal(h, n):
    return np.diag(h.energy_block(0, 1 << n))


class TestInitUniform:
    def test_single_qubit_plus(self):
        state = init_uniform(1)
        np.testing.assert_allclose(state.amplitudes, [S2, S2], atol=1e-12)

    def test_two_qubits(self):
        np.testing.assert_allclose(init_uniform(2).amplitudes, [0.5] * 4, atol=1e-12)

    def test_mixer_ground_energy_21_qubits(self):
        state = init_uniform(21)
        assert abs(expectation_pauli(state, mixer(21)) + 21.0) < 1e-9

    @pytest.mark.parametrize("n", [0, 26])
    def test_capacity(self, n):
        with pytest.raises(CapacityError):
            init_uniform(n)


class TestApplyDiagonalPhase:
    def test_theta_zero_is_identity(self):
        h = single_window([-1.0, 0.0, 0.0, -1.0])
        state = init_uniform(2)
        out = apply_diagonal_phase(state, h, 0.0)
        np.testing.assert_array_equal(out.amplitudes, state.amplitudes)

    def test_constant_energy_is_global_phase(self):
        h = single_window([-1.0] * 4)
        out = apply_diagonal_phase(init_uniform(2), h, math.pi)
        np.testing.assert_allclose(out.amplitudes, -init_uniform(2).amplitudes,
                                   atol=1e-12)
        np.testing.assert_allclose(out.probabilities(), [0.25] * 4, atol=1e-12)

    def test_single_projector_matches_dense_exponential(self):
        # H = -|11><11| on 2 qubits, theta = pi/2
        h = single_window([0.0, 0.0, 0.0, -1.0])
        theta = math.pi / 2.0
        out = apply_diagonal_phase(init_uniform(2), h, theta)
        u = expm(-1j * theta * dense_diagonal(h, 2))
        np.testing.assert_allclose(out.amplitudes, u @ init_uniform(2).amplitudes,
                                   atol=1e-12)
        # index 3 rotated by e^{i pi/2}, others untouched
        np.testing.assert_allclose(out.amplitudes[3], 0.5j, atol=1e-12)
        np.testing.assert_allclose(out.amplitudes[:3], [0.5] * 3, atol=1e-12)

    def test_composition_adds_angles(self):
        rng = np.random.default_rng(5)
        h = single_window(rng.normal(size=8), support=(0, 1, 2))
        state = StateVector(3, _random_state(rng, 3))
        a = apply_diagonal_phase(apply_diagonal_phase(state, h, 0.3), h, 0.9)
        b = apply_diagonal_phase(state, h, 1.2)
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-12)

    def test_support_outside_state_raises(self):
        h = DiagonalHamiltonian(4, [LocalWindow((3,), np.array([0.0, -1.0]))])
        with pytest.raises(LayoutError):
            apply_diagonal_phase(init_uniform(2), h, 0.1)


def _random_state(rng, n):
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return amps / np.linalg.norm(amps)


class TestApplySingleQubit:
    def test_identity(self):
        state = init_uniform(3)
        out = apply_single_qubit(state, 1, np.eye(2))
        np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-15)

    def test_x_flips_qubit_zero(self):
        out = apply_single_qubit(basis_state(3, 0), 0, X)
        assert abs(out.amplitudes[1] - 1.0) < 1e-15

    def test_rx_pi_gives_minus_i_one(self):
        # Rx(pi) = [[0, -i], [-i, 0]]
        rx = np.array([[0, -1j], [-1j, 0]])
        out = apply_single_qubit(basis_state(1, 0), 0, rx)
        np.testing.assert_allclose(out.amplitudes, [0.0, -1j], atol=1e-15)

    def test_matches_kron_on_random_states(self):
        rng = np.random.default_rng(7)
        for n in (2, 3, 4):
            amps = _random_state(rng, n)
            for q in range(n):
                u = _random_unitary(rng)
                out = apply_single_qubit(StateVector(n, amps.copy()), q, u)
                ops = [np.eye(2)] * n
                ops[q] = u
                dense = ops[-1]
                for op in ops[-2::-1]:
                    dense = np.kron(dense, op)  # qubit 0 least significant
                np.testing.assert_allclose(out.amplitudes, dense @ amps, atol=1e-10)

    def test_non_unitary_rejected(self):
        with pytest.raises(ValidationError):
            apply_single_qubit(init_uniform(1), 0, np.array([[1, 0], [0, 2.0]]))

    def test_norm_preserved(self):
        rng = np.random.default_rng(3)
        state = StateVector(4, _random_state(rng, 4))
        for q in range(4):
            state = apply_single_qubit(state, q, _random_unitary(rng))
            assert abs(state.norm_sq() - 1.0) < 1e-10


def _random_unitary(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, _ = np.linalg.qr(a)
    return q


class TestControlledPhase:
    def test_empty_controls_global_phase(self):
        out = apply_controlled_phase(init_uniform(2), (), 0.7)
        np.testing.assert_allclose(out.amplitudes,
                                   np.exp(0.7j) * init_uniform(2).amplitudes,
                                   atol=1e-12)

    def test_two_controls_negate_index_three(self):
        out = apply_controlled_phase(init_uniform(2), ((0, 1), (1, 1)), math.pi)
        np.testing.assert_allclose(out.amplitudes, [0.5, 0.5, 0.5, -0.5], atol=1e-12)

    def test_duplicate_control_rejected(self):
        with pytest.raises(ValidationError):
            apply_controlled_phase(init_uniform(2), ((0, 1), (0, 0)), 1.0)

    def test_projector_gates_compose_to_dense_exponential(self):
        # one controlled-phase per ground state == exp(-i H theta), <= 8 qubits
        rng = np.random.default_rng(11)
        for n in (2, 4, 6, 8):
            states = rng.choice(1 << n, size=rng.integers(1, 5), replace=False)
            h = single_window(spectral_parent(states, n, 1.0),
                              support=tuple(range(n)))
            theta = float(rng.uniform(0, 2 * math.pi))
            psi = StateVector(n, _random_state(rng, n))
            out = psi
            for s in states:
                controls = tuple((q, (int(s) >> q) & 1) for q in range(n))
                out = apply_controlled_phase(out, controls, theta)
            expected = expm(-1j * theta * dense_diagonal(h, n)) @ psi.amplitudes
            np.testing.assert_allclose(out.amplitudes, expected, atol=1e-8)


class TestMultiControlledX:
    def test_flips_only_matching(self):
        state = superposition(3, [0, 3])
        out = apply_multi_controlled_x(state, ((0, 1), (1, 1)), 2)
        # |011> -> |111>, |000> untouched
        np.testing.assert_allclose(out.amplitudes[7], S2, atol=1e-12)
        np.testing.assert_allclose(out.amplitudes[0], S2, atol=1e-12)
        assert abs(out.amplitudes[3]) < 1e-12

    def test_target_in_controls_rejected(self):
        with pytest.raises(ValidationError):
            apply_multi_controlled_x(init_uniform(2), ((0, 1),), 0)


class TestExpectationDiagonal:
    def test_basis_eigenstate(self):
        h = single_window([0.0, -4.0, 0.0, 0.0])
        assert expectation_diagonal(basis_state(2, 1), h) == -4.0

    def test_uniform_under_global_patch_hamiltonian(self):
        # enumeration oracle: mean of the 16 windowed energies
        table = pauli_case(2).diagonal_table(4)
        expected = float(table.mean())
        assert expected == 0.0  # traceless Pauli strings average to zero
        h = single_window(table, support=(0, 1, 2, 3))
        assert abs(expectation_diagonal(init_uniform(4), h) - expected) < 1e-12

    def test_degenerate_superposition_gives_ground_energy(self):
        table = spectral_parent([1, 2, 4, 8], 4, 3.0)
        h = single_window(table, support=(0, 1, 2, 3))
        state = superposition(4, [1, 8])
        assert abs(expectation_diagonal(state, h) + 3.0) < 1e-12


class TestExpectationPauli:
    def test_x_on_plus(self):
        h = PauliHamiltonian(((1.0, {0: "X"}),))
        assert abs(expectation_pauli(init_uniform(1), h) - 1.0) < 1e-12

    def test_stripe_term_on_basis_states(self):
        # Z_NW Z_SE + Z_NE Z_SW with (NW,NE,SW,SE) = qubits (0,1,2,3)
        h = pauli_case(1)
        # (1,0,0,1): both products are (-1)(-1) and (+1)(+1) -> +2
        state = basis_state(4, 0b1001)
        assert abs(expectation_pauli(state, h) - 2.0) < 1e-12
        # (1,0,1,0): NW != SE and NE != SW -> ground, -2
        state = basis_state(4, 0b0101)
        assert abs(expectation_pauli(state, h) + 2.0) < 1e-12

    def test_matches_diagonal_table_on_random_states(self):
        rng = np.random.default_rng(2)
        for case in (1, 2, 3):
            h = pauli_case(case)
            table = h.diagonal_table(4)
            amps = _random_state(rng, 4)
            expected = float(table @ (np.abs(amps) ** 2))
            got = expectation_pauli(StateVector(4, amps), h)
            assert abs(got - expected) < 1e-10

    def test_xyz_string_matches_dense(self):
        rng = np.random.default_rng(4)
        paulis = {"X": X, "Y": np.array([[0, -1j], [1j, 0]]),
                  "Z": np.array([[1, 0], [0, -1.0]])}
        for _ in range(10):
            n = 3
            string = {q: rng.choice(list("XYZ")) for q in
                      rng.choice(n, size=rng.integers(1, n + 1), replace=False)}
            h = PauliHamiltonian(((0.7, string),))
            dense = np.eye(1)
            for q in range(n - 1, -1, -1):
                factor = paulis[str(string[q])] if q in string else np.eye(2)
                dense = np.kron(dense, factor)
            amps = _random_state(rng, n)
            expected = 0.7 * float(np.real(amps.conj() @ dense @ amps))
            assert abs(expectation_pauli(StateVector(n, amps), h) - expected) < 1e-10

    def test_mixer_on_uniform(self):
        for n in (1, 5, 12):
            assert abs(expectation_pauli(init_uniform(n), mixer(n)) + n) < 1e-9


class TestSample:
    def test_basis_state_all_counts(self):
        counts = sample(basis_state(3, 5), 1000, seed=0)
        assert counts.counts == {5: 1000}
        assert counts.total_shots == 1000

    def test_uniform_frequencies(self):
        counts = sample(init_uniform(2), 100000, seed=42)
        for idx in range(4):
            assert abs(counts.counts[idx] / 1e5 - 0.25) < 0.01

    def test_support_restricted_to_superposition(self):
        state = superposition(4, [1, 2, 4, 8])
        counts = sample(state, 5000, seed=1)
        assert set(counts.counts) == {1, 2, 4, 8}

    def test_deterministic_for_fixed_seed(self):
        state = init_uniform(5)
        a = sample(state, 1000, seed=9)
        b = sample(state, 1000, seed=9)
        assert a.counts == b.counts

    def test_counts_invariant(self):
        with pytest.raises(ValidationError):
            MeasurementCounts({0: 3}, 4)


class TestSubspaceOverlap:
    def test_full_set_is_one(self):
        state = init_uniform(3)
        assert abs(subspace_overlap(state, range(8)) - 1.0) < 1e-12

    def test_basis_membership(self):
        state = basis_state(3, 6)
        assert abs(subspace_overlap(state, {6, 1}) - 1.0) < 1e-12
        assert subspace_overlap(state, {0, 1}) < 1e-15

    def test_partial_mass(self):
        state = superposition(2, [0, 3])
        assert abs(subspace_overlap(state, [3]) - 0.5) < 1e-12


class TestNormPreservation:
    def test_random_operation_sequences(self):
        rng = np.random.default_rng(13)
        windows = image_windows(2, 2)
        h = assemble_global(spectral_parent([1, 2], 4, 1.0), windows, 4)
        state = init_uniform(4)
        for _ in range(30):
            op = rng.integers(3)
            if op == 0:
                state = apply_single_qubit(state, int(rng.integers(4)),
                                           _random_unitary(rng))
            elif op == 1:
                state = apply_diagonal_phase(state, h, float(rng.uniform(0, 3)))
            else:
                state = apply_controlled_phase(
                    state, ((int(rng.integers(2)), 1), (3, 0)),
                    float(rng.uniform(0, 3)))
            assert abs(state.norm_sq() - 1.0) < 1e-10
