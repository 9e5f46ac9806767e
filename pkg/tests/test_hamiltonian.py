"""Parent Hamiltonian construction, assembly, compilation and spectra."""

import math
import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from groundgen.encoding import ngram_layout
from groundgen.errors import (LayoutError, UnsupportedFormError,
                              ValidationError)
from groundgen.hamiltonian import (DiagonalHamiltonian, LocalWindow,
                                   PauliHamiltonian, assemble_global,
                                   assemble_global_pauli, case_pattern_states,
                                   compile_evolution, diagonal_spectrum,
                                   hamiltonian_from_json, hamiltonian_to_json,
                                   mixer, pauli_case, pruning_terms,
                                   smoothing_terms, spectral_parent,
                                   _frontier_spectrum)
from groundgen.patterns import image_windows
from groundgen.statevec import StateVector, apply_phase_gates, init_uniform


class TestSpectralParent:
    def test_single_state(self):
        np.testing.assert_array_equal(spectral_parent([0], 2, 1.0),
                                      [-1.0, 0.0, 0.0, 0.0])

    def test_all_states_constant_with_warning(self):
        with pytest.warns(UserWarning):
            table = spectral_parent(range(4), 2, 2.0)
        np.testing.assert_array_equal(table, [-2.0] * 4)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            spectral_parent([], 2, 1.0)

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ValidationError):
            spectral_parent([0], 2, 0.0)

    def test_ground_manifold_matches_patch_hamiltonian(self):
        # same ground set as the explicit Pauli form, enumerated over all 16
        for case in (1, 2, 3):
            states = case_pattern_states(case)
            table = spectral_parent(states, 4, 4.0)
            spectral_ground = np.flatnonzero(table == table.min())
            pauli_table = pauli_case(case).diagonal_table(4)
            pauli_ground = np.flatnonzero(pauli_table == pauli_table.min())
            np.testing.assert_array_equal(spectral_ground, pauli_ground)


class TestPauliCases:
    def test_ground_sets(self):
        expected = {1: (4, -2.0), 2: (4, -4.0), 3: (14, -1.0)}
        for case, (count, energy) in expected.items():
            table = pauli_case(case).diagonal_table(4)
            ground = np.flatnonzero(table == table.min())
            assert table.min() == energy
            assert ground.size == count

    def test_case1_grounds_are_stripes(self):
        # NW != SE and NE != SW
        for code in case_pattern_states(1):
            nw, ne, sw, se = [(code >> j) & 1 for j in range(4)]
            assert nw != se and ne != sw

    def test_case2_grounds_are_single_black(self):
        assert case_pattern_states(2) == [1, 2, 4, 8]

    def test_case3_grounds_exclude_uniform(self):
        assert case_pattern_states(3) == list(range(1, 15))

    def test_unknown_case(self):
        with pytest.raises(ValidationError):
            pauli_case(4)

    def test_term_counts(self):
        assert len(pauli_case(1).terms) == 2
        assert len(pauli_case(2).terms) == 8   # 4 one-body + 4 three-body
        assert len(pauli_case(3).terms) == 7   # 6 pairs + 1 four-body


class TestAssembleGlobal:
    def test_single_window_equals_local(self):
        table = spectral_parent([3], 4, 1.0)
        h = assemble_global(table, image_windows(2, 2), 4)
        np.testing.assert_array_equal(h.energy_block(0, 16), table)

    def test_3x3_one_black_corner(self):
        # enumeration oracle: per-window table sums
        table = pauli_case(2).diagonal_table(4)
        h = assemble_global(table, image_windows(3, 3), 9)
        assert h.energy_of(0) == 0.0            # all white: every window at 0
        assert h.energy_of(1) == -4.0           # corner black satisfies 1 window
        assert h.energy_of(1 << 4) == -16.0     # center black satisfies all 4

    def test_matches_pauli_assembly_everywhere(self):
        windows = image_windows(3, 3)
        table = pauli_case(1).diagonal_table(4)
        h_diag = assemble_global(table, windows, 9)
        h_pauli = assemble_global_pauli(pauli_case(1), windows)
        np.testing.assert_allclose(h_diag.energy_block(0, 512),
                                   h_pauli.diagonal_table(9), atol=1e-12)

    def test_two_window_bigram_sum(self):
        layout = ngram_layout(3, 2, 4, 4)  # 10 qubits
        from groundgen.patterns import ngram_windows
        windows = ngram_windows(layout, 2)
        # window supports: tokens (t1,t2,w1) then (t2,t3,w2)
        assert windows[0].support == tuple(range(0, 6))
        assert windows[1].support == (2, 3) + tuple(range(6, 10))
        # pattern (1,1) with k=1 on both windows: local code 1|(1<<2)|(1<<4)
        table = spectral_parent([21], 6, 1.0)
        h = assemble_global([table, table], windows, 10)
        index = 1 | (1 << 2) | (1 << 4) | (1 << 6) | (1 << 8)  # t=(1,1,1) w=(1,1)
        assert h.energy_of(index) == -2.0
        assert h.energy_of(index ^ (1 << 4)) == -1.0  # clearing w1 breaks only H1

    def test_mismatched_counts(self):
        with pytest.raises(ValidationError):
            assemble_global([np.zeros(16)], image_windows(3, 3), 9)

    def test_window_outside_layout(self):
        with pytest.raises(LayoutError):
            assemble_global(np.zeros(16), image_windows(3, 3), 8)


class TestSmoothing:
    def test_rewards_zero_weight_only(self):
        layout = ngram_layout(3, 2, 4, 4)
        terms = smoothing_terms(layout, 1.0)
        assert len(terms) == 2
        for term in terms:
            assert term.table[0] == -1.0
            assert all(term.table[1:] == 0.0)

    def test_layout_without_weights(self):
        from groundgen.encoding import image_layout
        with pytest.raises(LayoutError):
            smoothing_terms(image_layout(2, 2), 1.0)

    def test_union_ground_space_on_single_window(self):
        # H + L on one window: ground set = weighted patterns union the
        # zero-weight label on every token combination (enumeration)
        layout = ngram_layout(2, 2, 2, 4)  # t1 t2 (1 bit each), w1 (2 bits)
        from groundgen.patterns import ngram_windows
        windows = ngram_windows(layout, 2)
        pattern_codes = [1 | (k << 2) for k in (1, 2)]  # pair (1,0), w=2
        table = spectral_parent(pattern_codes, 4, 1.0)
        h = assemble_global(table, windows, 4).with_windows(
            smoothing_terms(layout, 1.0))
        report = diagonal_spectrum(h)
        expected = sorted(pattern_codes + [t for t in range(4)])
        assert report.ground_energy == -1.0
        assert sorted(report.ground_set.tolist()) == expected


class TestPruning:
    def _layout(self):
        return ngram_layout(3, 2, 4, 4)

    def test_high_product_unpenalized(self):
        terms = pruning_terms(self._layout(), penalty=2.0, threshold=4.0)
        term = terms[0]
        code = 3 | (2 << 2)  # weights (3, 2): product 6 >= 4
        assert term.table[code] == 0.0

    def test_low_product_penalized(self):
        terms = pruning_terms(self._layout(), penalty=2.0, threshold=4.0)
        code = 1 | (2 << 2)  # weights (1, 2): product 2 < 4
        assert terms[0].table[code] == 2.0

    def test_zero_weight_product_penalized(self):
        # weights (0, 5): product 0 < 1, so the smoothed label is pruned
        layout = ngram_layout(3, 2, 4, 8)  # 3-bit weight registers
        terms = pruning_terms(layout, penalty=2.0, threshold=1.0)
        assert terms[0].table[0 | (5 << 3)] == 2.0

    def test_exempt_zero_skips_smoothed_registers(self):
        terms = pruning_terms(self._layout(), penalty=2.0, threshold=2.0,
                              exempt_zero=True)
        assert terms[0].table[0 | (3 << 2)] == 0.0   # (0,3) -> product 3 >= 2
        assert terms[0].table[0] == 2.0              # (0,0) -> empty product 1 < 2
        terms = pruning_terms(self._layout(), penalty=2.0, threshold=1.0,
                              exempt_zero=True)
        assert terms[0].table[0] == 0.0              # empty product 1 >= 1

    def test_invalid_threshold(self):
        with pytest.raises(ValidationError):
            pruning_terms(self._layout(), penalty=2.0, threshold=0.0)

    def test_invalid_penalty(self):
        with pytest.raises(ValidationError):
            pruning_terms(self._layout(), penalty=0.0, threshold=1.0)

    def test_overlapping_windows_on_three_registers(self):
        layout = ngram_layout(4, 2, 2, 4)  # 3 weight registers -> 2 windows
        terms = pruning_terms(layout, penalty=2.0, threshold=2.0)
        assert len(terms) == 2
        supports = [t.support for t in terms]
        assert supports[0][2:] == supports[1][:2]  # shared middle register


class TestCompileEvolution:
    def test_theta_zero_empty(self):
        h = assemble_global(spectral_parent([3], 4, 1.0), image_windows(2, 2), 4)
        assert compile_evolution(h, 0.0) == []

    def test_single_pattern_full_control(self):
        h = DiagonalHamiltonian(2, [LocalWindow((0, 1),
                                                spectral_parent([3], 2, 1.0))])
        gates = compile_evolution(h, math.pi)
        assert len(gates) == 1
        assert gates[0].controls == ((0, 1), (1, 1))
        assert gates[0].phase == math.pi
        state = apply_phase_gates(init_uniform(2), gates)
        dense = expm(-1j * math.pi * np.diag(h.energy_block(0, 4)))
        np.testing.assert_allclose(state.amplitudes,
                                   dense @ init_uniform(2).amplitudes, atol=1e-10)

    @pytest.mark.parametrize("case", [1, 2, 3])
    def test_case_terms_match_dense_exponential(self, case):
        states = case_pattern_states(case)
        h = DiagonalHamiltonian(4, [LocalWindow(tuple(range(4)),
                                                spectral_parent(states, 4, 1.0))])
        rng = np.random.default_rng(case)
        for theta in rng.uniform(0, 2 * math.pi, size=5):
            gates = compile_evolution(h, float(theta))
            assert len(gates) == len(states)
            out = apply_phase_gates(init_uniform(4), gates)
            dense = expm(-1j * theta * np.diag(h.energy_block(0, 16)))
            np.testing.assert_allclose(out.amplitudes,
                                       dense @ init_uniform(4).amplitudes,
                                       atol=1e-10)

    def test_multi_window_composition(self):
        windows = image_windows(2, 3)
        h = assemble_global(spectral_parent([1, 2], 4, 2.0), windows, 6)
        theta = 0.37
        gates = compile_evolution(h, theta)
        out = apply_phase_gates(init_uniform(6), gates)
        dense = expm(-1j * theta * np.diag(h.energy_block(0, 64)))
        np.testing.assert_allclose(out.amplitudes,
                                   dense @ init_uniform(6).amplitudes, atol=1e-10)

    def test_non_spectral_rejected(self):
        h = DiagonalHamiltonian(4, [LocalWindow(tuple(range(4)),
                                                pauli_case(1).diagonal_table(4))])
        with pytest.raises(UnsupportedFormError):
            compile_evolution(h, 1.0)


class TestDiagonalSpectrum:
    def test_single_spectral_window(self):
        h = DiagonalHamiltonian(3, [LocalWindow((0, 1, 2),
                                                spectral_parent([5], 3, 1.0))])
        report = diagonal_spectrum(h)
        assert report.ground_energy == -1.0
        assert report.gap == 1.0
        np.testing.assert_array_equal(report.ground_set, [5])

    def test_stripe_patch_on_2x2(self):
        h = assemble_global(pauli_case(1).diagonal_table(4),
                            image_windows(2, 2), 4)
        report = diagonal_spectrum(h)
        assert report.ground_energy == -2.0
        assert report.ground_count == 4

    def test_4x4_single_black_grounds_match_oracle(self):
        from groundgen.oracle import enumerate_valid_images
        from groundgen.patterns import ImagePattern, PatternSet
        h = assemble_global(pauli_case(2).diagonal_table(4),
                            image_windows(4, 4), 16)
        report = diagonal_spectrum(h)
        assert report.ground_energy == -36.0
        catalog = PatternSet(frozenset({ImagePattern(1, 0, 0, 0)}), "rotations")
        valid = enumerate_valid_images(4, 4, catalog)
        np.testing.assert_array_equal(report.ground_set, valid.members)

    def test_degenerate_constant_warns(self):
        h = DiagonalHamiltonian(2, [LocalWindow((0, 1), np.full(4, -1.0))])
        with pytest.warns(UserWarning):
            report = diagonal_spectrum(h)
        assert report.gap == 0.0
        assert report.ground_count == 4

    def test_frontier_dp_matches_enumeration(self):
        rng = np.random.default_rng(41)
        for trial in range(10):
            n = 8
            windows = []
            for _ in range(3):
                support = tuple(sorted(rng.choice(n, size=3, replace=False).tolist()))
                table = rng.choice([-1.0, 0.0, 0.5], size=8)
                windows.append(LocalWindow(support, table))
            h = DiagonalHamiltonian(n, windows)
            emin, count, second = _frontier_spectrum(h)
            energies = h.energy_block(0, 1 << n)
            assert emin == energies.min()
            assert count == int((energies == energies.min()).sum())
            above = energies[energies > energies.min()]
            if above.size:
                assert second == above.min()


class TestRandomizedSpectralGap:
    def test_eigenvalues_and_gap(self):
        # window sizes 2..6, random pattern subsets, exact {-E_g, 0} spectrum
        rng = np.random.default_rng(101)
        for _ in range(50):
            width = int(rng.integers(2, 7))
            size = 1 << width
            count = int(rng.integers(1, size))
            states = rng.choice(size, size=count, replace=False)
            e_g = float(rng.uniform(0.5, 3.0))
            h = DiagonalHamiltonian(width, [LocalWindow(
                tuple(range(width)), spectral_parent(states, width, e_g))])
            report = diagonal_spectrum(h)
            assert report.ground_energy == -e_g
            assert report.gap == e_g
            assert sorted(report.ground_set.tolist()) == sorted(states.tolist())


class TestJsonRoundtrip:
    def test_diagonal_and_pauli(self):
        h = assemble_global(spectral_parent([1, 2, 4, 8], 4, 1.5),
                            image_windows(3, 3), 9, energy_scale=1.5)
        p = assemble_global_pauli(pauli_case(2), image_windows(3, 3))
        text = hamiltonian_to_json(h, p)
        h2, p2 = hamiltonian_from_json(text)
        assert h2.num_qubits == 9 and h2.energy_scale == 1.5
        np.testing.assert_array_equal(h2.energy_block(0, 512),
                                      h.energy_block(0, 512))
        assert p2.terms == p.terms

    def test_mixer_support(self):
        assert mixer(4).support() == (0, 1, 2, 3)
