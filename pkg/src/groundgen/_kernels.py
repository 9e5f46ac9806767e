"""Inner loops for large statevectors.

Numba-compiled when available, with pure-numpy fallbacks. All kernels are
elementwise (no reductions), so parallel execution is bit-for-bit
deterministic. The numpy paths compute the same expressions in the same
per-element order, so both backends agree exactly.
"""

import numpy as np

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

# Below this many qubits the numpy reshape path beats kernel dispatch.
KERNEL_MIN_QUBITS = 18


def _single_qubit_numpy(amps, q, u00, u01, u10, u11):
    view = amps.reshape(-1, 2, 1 << q)
    a = view[:, 0, :].copy()
    b = view[:, 1, :]
    view[:, 0, :] = u00 * a + u01 * b
    view[:, 1, :] = u10 * a + u11 * b


def _phase_by_codes_numpy(amps, codes, table):
    amps *= table[codes]


if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _single_qubit_numba(amps, q, u00, u01, u10, u11):
        mask = 1 << q
        half = amps.shape[0] >> 1
        for k in prange(half):
            i0 = ((k >> q) << (q + 1)) | (k & (mask - 1))
            i1 = i0 | mask
            a = amps[i0]
            b = amps[i1]
            amps[i0] = u00 * a + u01 * b
            amps[i1] = u10 * a + u11 * b

    @njit(parallel=True, cache=True)
    def _rotate_all_numba(amps, n, c, s):
        # same symmetric 2x2 [[c, s], [s, c]] on every qubit in sequence
        half = amps.shape[0] >> 1
        for q in range(n):
            mask = 1 << q
            for k in prange(half):
                i0 = ((k >> q) << (q + 1)) | (k & (mask - 1))
                i1 = i0 | mask
                a = amps[i0]
                b = amps[i1]
                amps[i0] = c * a + s * b
                amps[i1] = s * a + c * b

    @njit(parallel=True, cache=True)
    def _phase_by_codes_numba(amps, codes, table):
        for i in prange(amps.shape[0]):
            amps[i] = amps[i] * table[codes[i]]


def single_qubit_inplace(amps, num_qubits, q, u):
    """Apply a 2x2 matrix to qubit q of amps, in place."""
    u00, u01, u10, u11 = (np.complex128(u[0, 0]), np.complex128(u[0, 1]),
                          np.complex128(u[1, 0]), np.complex128(u[1, 1]))
    if HAVE_NUMBA and num_qubits >= KERNEL_MIN_QUBITS:
        _single_qubit_numba(amps, q, u00, u01, u10, u11)
    else:
        _single_qubit_numpy(amps, q, u00, u01, u10, u11)


def rotate_all_inplace(amps, num_qubits, c, s):
    """Apply [[c, s], [s, c]] to every qubit (the transverse-field step)."""
    c = np.complex128(c)
    s = np.complex128(s)
    if HAVE_NUMBA and num_qubits >= KERNEL_MIN_QUBITS:
        _rotate_all_numba(amps, num_qubits, c, s)
    else:
        for q in range(num_qubits):
            _single_qubit_numpy(amps, q, c, s, s, c)


def phase_by_codes_inplace(amps, num_qubits, codes, table):
    """amps[i] *= table[codes[i]], in place."""
    if HAVE_NUMBA and num_qubits >= KERNEL_MIN_QUBITS:
        _phase_by_codes_numba(amps, codes, table)
    else:
        _phase_by_codes_numpy(amps, codes, table)
