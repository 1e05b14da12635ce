# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels. Both mutate ``state`` in place."""
from cython.parallel import parallel, prange
from libc.math cimport cos, sin
from libc.stdlib cimport free, malloc

cdef Py_ssize_t PARALLEL_MIN_DIM = 1 << 15


def apply_mcry(double complex[::1] state, Py_ssize_t target, Py_ssize_t mask,
               Py_ssize_t values, double angle, int threads=1):
    cdef Py_ssize_t half = state.shape[0] >> 1
    cdef Py_ssize_t tbit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t low = tbit - 1
    cdef Py_ssize_t j, i0, i1, open_bits
    cdef double c = cos(0.5 * angle)
    cdef double s = sin(0.5 * angle)
    cdef double complex a0, a1
    if threads > 1 and state.shape[0] >= PARALLEL_MIN_DIM:
        for j in prange(half, nogil=True, num_threads=threads, schedule="static"):
            i0 = ((j & ~low) << 1) | (j & low)
            if (i0 & mask) == values:
                i1 = i0 | tbit
                a0 = state[i0]
                a1 = state[i1]
                state[i0] = c * a0 - s * a1
                state[i1] = s * a0 + c * a1
    else:
        # walk the submasks of the uncontrolled bits; each one plus ``values`` is a matching i0
        open_bits = (state.shape[0] - 1) & ~(mask | tbit)
        j = 0
        with nogil:
            while True:
                i0 = j | values
                i1 = i0 | tbit
                a0 = state[i0]
                a1 = state[i1]
                state[i0] = c * a0 - s * a1
                state[i1] = s * a0 + c * a1
                if j == open_bits:
                    break
                j = ((j | ~open_bits) + 1) & open_bits


cdef void _block_matvec(const double* ur, const double* ui, const double complex* x,
                       double complex* y, double* acc_r, double* acc_i, Py_ssize_t S) noexcept nogil:
    """``y = U x`` for one block; ``ur``/``ui`` hold ``U.T`` split into real and imaginary parts."""
    cdef Py_ssize_t r, col
    cdef double xr, xi
    cdef const double* cr
    cdef const double* ci
    for r in range(S):
        acc_r[r] = 0.0
        acc_i[r] = 0.0
    for col in range(S):
        xr = x[col].real
        xi = x[col].imag
        cr = ur + col * S
        ci = ui + col * S
        # contiguous in r, so the compiler can vectorize this update
        for r in range(S):
            acc_r[r] += xr * cr[r] - xi * ci[r]
            acc_i[r] += xr * ci[r] + xi * cr[r]
    for r in range(S):
        y[r] = acc_r[r] + 1j * acc_i[r]


def apply_system(double complex[::1] state, const double complex[:, ::1] U,
                 double complex[::1] scratch, int threads=1):
    """Apply ``U`` to the low ``log2(U.shape[0])`` qubits; ``scratch`` has the size of ``state``."""
    cdef Py_ssize_t S = U.shape[0]
    cdef Py_ssize_t blocks = state.shape[0] // S
    cdef Py_ssize_t b, r, col
    cdef double* split = <double*> malloc(2 * S * S * sizeof(double))
    cdef double* ur = split
    cdef double* ui = split + S * S
    cdef double* acc
    if split == NULL:
        raise MemoryError()
    for r in range(S):
        for col in range(S):
            ur[col * S + r] = U[r, col].real
            ui[col * S + r] = U[r, col].imag
    if threads > 1 and state.shape[0] >= PARALLEL_MIN_DIM:
        with nogil, parallel(num_threads=threads):
            acc = <double*> malloc(2 * S * sizeof(double))
            for b in prange(blocks, schedule="static"):
                _block_matvec(ur, ui, &state[b * S], &scratch[b * S], acc, acc + S, S)
            free(acc)
    else:
        acc = <double*> malloc(2 * S * sizeof(double))
        if acc == NULL:
            free(split)
            raise MemoryError()
        with nogil:
            for b in range(blocks):
                _block_matvec(ur, ui, &state[b * S], &scratch[b * S], acc, acc + S, S)
        free(acc)
    free(split)
    state[:] = scratch
