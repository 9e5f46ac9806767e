"""groundgen: pattern-constrained generation via ground states of diagonal
parent Hamiltonians.

Local patterns extracted from an input (2x2 image patches or n-grams with
quantized frequency weights) define the degenerate ground manifold of a
diagonal Hamiltonian assembled over overlapping windows. Valid outputs
are read off the ground state, found by simulated adiabatic evolution,
variational optimization, or Grover search, and certified against a
classical brute-force enumeration.
"""

from .encoding import (RegisterLayout, Register, Vocabulary, decode_basis,
                       encode_basis, image_layout, load_vocabulary,
                       ngram_layout, pixel_qubit)
from .errors import (CapacityError, GroundgenError, InfeasibleModelError,
                     LayoutError, ResolutionError, UnsupportedFormError,
                     ValidationError)
from .hamiltonian import (DiagonalHamiltonian, LocalWindow, PauliHamiltonian,
                          PhaseGate, SpectrumReport, assemble_global,
                          assemble_global_pauli, case_pattern_states,
                          compile_evolution, diagonal_spectrum,
                          hamiltonian_from_json, hamiltonian_to_json, mixer,
                          pauli_case, pruning_terms, smoothing_terms,
                          spectral_parent)
from .oracle import (SequenceResult, ValidSet, enumerate_valid_images,
                     enumerate_valid_sequences, max_probability_sequence,
                     max_weight_sequence)
from .patterns import (ImagePattern, NgramModel, PatternSet, WeightedNgram,
                       Window, build_ngram_model, extract_image_patterns,
                       image_pattern_density, image_windows, load_corpus,
                       load_pbm, ngram_pattern_density, ngram_windows,
                       pattern_states, patch_code, save_pbm,
                       weighted_pattern_states)
from .solvers import (AdiabaticConfig, GroverConfig, OracleConstraint,
                      SolveTrace, VariationalConfig, VariationalResult,
                      adiabatic_solve, build_grover_oracle, grover_solve,
                      mixer_excited_state, optimal_grover_iterations,
                      variational_solve)
from .statevec import (MeasurementCounts, StateVector, apply_controlled_phase,
                       apply_diagonal_phase, apply_multi_controlled_x,
                       apply_phase_gates, apply_single_qubit, basis_state,
                       expectation_diagonal, expectation_pauli, init_uniform,
                       sample, subspace_overlap, superposition)

__version__ = "0.1.0"
