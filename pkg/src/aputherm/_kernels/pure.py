"""Pure-Python reference implementation of the stencil assembly kernel.

Used when the compiled extension is unavailable (or forced via
``APUTHERM_PURE=1``). Semantics are identical to ``_stencil.pyx``; this
version is the readable reference and runs one to two orders of magnitude
slower on large grids.
"""

import numpy as np

COMPILED = False


def assemble_stencil(nx, ny, dx, dy, thickness, conductivity, active, h_top, h_natural):
    """Build the finite-volume conduction operator in COO triplet form.

    The domain is a stack of layers, each discretized into ``ny x nx`` cells
    of size ``dx x dy`` with one cell through the layer thickness. Layer 0 is
    the bottom of the stack. ``active[l, i, j]`` marks cells that exist
    physically; void cells are pinned with a unit diagonal. Lateral coupling
    uses face conductance k*t*len/dist, vertical coupling the series
    conductance of the two half-thicknesses. Exterior faces get Robin sinks:
    ``h_top`` on the top face of the topmost layer, ``h_natural`` on every
    other exposed face.

    Returns ``(rows, cols, vals, sink)`` where sink[c] is the total
    convective conductance h*A of cell c (already folded into the diagonal).
    """
    n_layers = len(thickness)
    n = n_layers * ny * nx
    cell_area = dx * dy
    diag = np.zeros(n)
    sink = np.zeros(n)
    rows = []
    cols = []
    vals = []

    def idx(l, i, j):
        return (l * ny + i) * nx + j

    for l in range(n_layers):
        k_l = conductivity[l]
        t_l = thickness[l]
        gx = k_l * t_l * dy / dx
        gy = k_l * t_l * dx / dy
        for i in range(ny):
            for j in range(nx):
                u = idx(l, i, j)
                if not active[l, i, j]:
                    diag[u] = 1.0
                    continue
                # lateral faces; couple to higher-index neighbors only,
                # exposed faces (void neighbor or domain edge) convect
                if j + 1 < nx and active[l, i, j + 1]:
                    v = idx(l, i, j + 1)
                    diag[u] += gx
                    diag[v] += gx
                    rows.append(u)
                    cols.append(v)
                    vals.append(-gx)
                    rows.append(v)
                    cols.append(u)
                    vals.append(-gx)
                else:
                    sink[u] += h_natural * t_l * dy
                if j == 0 or not active[l, i, j - 1]:
                    sink[u] += h_natural * t_l * dy
                if i + 1 < ny and active[l, i + 1, j]:
                    v = idx(l, i + 1, j)
                    diag[u] += gy
                    diag[v] += gy
                    rows.append(u)
                    cols.append(v)
                    vals.append(-gy)
                    rows.append(v)
                    cols.append(u)
                    vals.append(-gy)
                else:
                    sink[u] += h_natural * t_l * dx
                if i == 0 or not active[l, i - 1, j]:
                    sink[u] += h_natural * t_l * dx
                # vertical face up
                if l + 1 < n_layers and active[l + 1, i, j]:
                    v = idx(l + 1, i, j)
                    gz = cell_area / (
                        0.5 * t_l / k_l + 0.5 * thickness[l + 1] / conductivity[l + 1]
                    )
                    diag[u] += gz
                    diag[v] += gz
                    rows.append(u)
                    cols.append(v)
                    vals.append(-gz)
                    rows.append(v)
                    cols.append(u)
                    vals.append(-gz)
                elif l + 1 == n_layers:
                    sink[u] += h_top * cell_area
                else:
                    sink[u] += h_natural * cell_area
                # vertical face down (coupling already emitted by the cell below)
                if l == 0 or not active[l - 1, i, j]:
                    sink[u] += h_natural * cell_area

    diag += sink
    all_rows = np.concatenate([np.asarray(rows, dtype=np.int64), np.arange(n, dtype=np.int64)])
    all_cols = np.concatenate([np.asarray(cols, dtype=np.int64), np.arange(n, dtype=np.int64)])
    all_vals = np.concatenate([np.asarray(vals, dtype=float), diag])
    return all_rows, all_cols, all_vals, sink
