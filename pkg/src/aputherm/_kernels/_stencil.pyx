# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stencil assembly kernel. Mirrors _kernels.pure exactly."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

COMPILED = True


def assemble_stencil(int nx, int ny, double dx, double dy,
                     double[::1] thickness, double[::1] conductivity,
                     cnp.uint8_t[:, :, ::1] active,
                     double h_top, double h_natural):
    """COO triplets + convective sink for the layered conduction operator.

    See the pure-Python reference for the full contract; both
    implementations must produce the same matrix (entry order may differ
    only in ways that sum identically).
    """
    cdef int n_layers = thickness.shape[0]
    cdef long n = <long> n_layers * ny * nx
    cdef double cell_area = dx * dy
    # worst case: 6 off-diagonal entries per cell + n diagonals
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rows = np.empty(7 * n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cols = np.empty(7 * n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.empty(7 * n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] diag = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sink = np.zeros(n, dtype=np.float64)
    cdef long[::1] rows_v = rows
    cdef long[::1] cols_v = cols
    cdef double[::1] vals_v = vals
    cdef double[::1] diag_v = diag
    cdef double[::1] sink_v = sink

    cdef long m = 0
    cdef long u, v
    cdef int l, i, j
    cdef double k_l, t_l, gx, gy, gz

    for l in range(n_layers):
        k_l = conductivity[l]
        t_l = thickness[l]
        gx = k_l * t_l * dy / dx
        gy = k_l * t_l * dx / dy
        for i in range(ny):
            for j in range(nx):
                u = (<long> l * ny + i) * nx + j
                if not active[l, i, j]:
                    diag_v[u] = 1.0
                    continue
                if j + 1 < nx and active[l, i, j + 1]:
                    v = u + 1
                    diag_v[u] += gx
                    diag_v[v] += gx
                    rows_v[m] = u; cols_v[m] = v; vals_v[m] = -gx; m += 1
                    rows_v[m] = v; cols_v[m] = u; vals_v[m] = -gx; m += 1
                else:
                    sink_v[u] += h_natural * t_l * dy
                if j == 0 or not active[l, i, j - 1]:
                    sink_v[u] += h_natural * t_l * dy
                if i + 1 < ny and active[l, i + 1, j]:
                    v = u + nx
                    diag_v[u] += gy
                    diag_v[v] += gy
                    rows_v[m] = u; cols_v[m] = v; vals_v[m] = -gy; m += 1
                    rows_v[m] = v; cols_v[m] = u; vals_v[m] = -gy; m += 1
                else:
                    sink_v[u] += h_natural * t_l * dx
                if i == 0 or not active[l, i - 1, j]:
                    sink_v[u] += h_natural * t_l * dx
                if l + 1 < n_layers and active[l + 1, i, j]:
                    v = u + <long> ny * nx
                    gz = cell_area / (0.5 * t_l / k_l
                                      + 0.5 * thickness[l + 1] / conductivity[l + 1])
                    diag_v[u] += gz
                    diag_v[v] += gz
                    rows_v[m] = u; cols_v[m] = v; vals_v[m] = -gz; m += 1
                    rows_v[m] = v; cols_v[m] = u; vals_v[m] = -gz; m += 1
                elif l + 1 == n_layers:
                    sink_v[u] += h_top * cell_area
                else:
                    sink_v[u] += h_natural * cell_area
                if l == 0 or not active[l - 1, i, j]:
                    sink_v[u] += h_natural * cell_area

    for u in range(n):
        diag_v[u] += sink_v[u]
        rows_v[m] = u; cols_v[m] = u; vals_v[m] = diag_v[u]; m += 1

    return rows[:m], cols[:m], vals[:m], sink
