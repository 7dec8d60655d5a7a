"""Steady-state conduction model of the die + window stack.

The stack is die silicon (bottom), a thin thermal-interface film, and a
sapphire window that overhangs the die and convects into the coolant
through an effective top-surface coefficient. Each layer is one cell thick
(2.5D finite volumes); power enters uniformly over a block's die cells and
the reported temperature of a block is the mean of its die cells.

Everything internal works in kelvin RISE above the coolant inlet
temperature, which makes the discrete model exactly linear: the response
matrix R maps per-block watts to per-block K-rise, and absolute Celsius
values appear only at the API boundary.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import ResolutionError, SolverError
from .floorplan import Floorplan

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class MaterialProperties:
    """Bulk material constants. rho and cp are carried for fidelity to the
    source datasheet (a future transient mode would need them); steady-state
    conduction uses only k. mu is recorded for fluids and unused."""

    rho: float  # kg/m^3
    k: float  # W/(m K)
    cp: float  # J/(kg K)
    mu: float = None  # Pa s, fluids only

    def __post_init__(self):
        if self.rho <= 0 or self.k <= 0 or self.cp <= 0:
            raise ValueError("material properties must be strictly positive")


SILICON = MaterialProperties(rho=2330.0, k=148.0, cp=703.0)
SAPPHIRE = MaterialProperties(rho=4050.0, k=35.0, cp=761.0)
MINERAL_OIL = MaterialProperties(rho=838.0, k=0.138, cp=1670.0, mu=14.246e-3)


@dataclass(frozen=True)
class BoundaryConditions:
    """Convective boundary data.

    ``effective_h_top`` stands in for the coolant channel above the window;
    all other exterior walls use natural convection ``h_natural``. Flow rate
    and pressure are provenance-only records of the measured rig settings.
    """

    inlet_temperature_c: float = 12.1
    effective_h_top: float = 3500.0
    h_natural: float = 5.0
    recorded_flow_rate_gpm: float = 1.4
    recorded_pressure_psi: float = 28.0

    def __post_init__(self):
        if not (self.effective_h_top > self.h_natural > 0.0):
            raise ValueError("require effective_h_top > h_natural > 0")
        if not math.isfinite(self.inlet_temperature_c):
            raise ValueError("inlet temperature must be finite")


@dataclass(frozen=True)
class StackOptions:
    """Geometry of the interface film and window layers above the die.

    The die sits centered in the window plus ``die_offset_(x|y)_m``; a
    nonzero offset models an asymmetric overhang of the window over the
    socket.
    """

    tim_thickness_m: float = 2e-6
    sapphire_thickness_m: float = 0.5e-3
    window_width_m: float = 0.040
    window_height_m: float = 0.040
    die_offset_x_m: float = 0.0
    die_offset_y_m: float = 0.0
    tim_material: MaterialProperties = MINERAL_OIL
    window_material: MaterialProperties = SAPPHIRE
    die_material: MaterialProperties = SILICON


class Provenance(Enum):
    SYNTHETIC = "synthetic"
    RECONSTRUCTED = "reconstructed"
    FORWARD = "forward"


@dataclass(frozen=True)
class PowerMap:
    """Per-block power in watts, canonical block order."""

    values: np.ndarray
    provenance: Provenance = Provenance.SYNTHETIC

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1:
            raise ValueError("power map must be a vector")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("power map entries must be finite and >= 0")

    @property
    def total(self):
        return float(self.values.sum())


@dataclass(frozen=True)
class ThermalMap:
    """Per-block temperatures, either absolute Celsius or kelvin rise."""

    values: np.ndarray
    kind: str = "celsius"  # "celsius" | "rise"
    provenance: Provenance = Provenance.FORWARD

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if self.kind not in ("celsius", "rise"):
            raise ValueError("kind must be 'celsius' or 'rise'")

    def to_rise(self, inlet_c):
        if self.kind == "rise":
            return self
        return ThermalMap(self.values - inlet_c, kind="rise", provenance=self.provenance)

    def to_celsius(self, inlet_c):
        if self.kind == "celsius":
            return self
        return ThermalMap(self.values + inlet_c, kind="celsius", provenance=self.provenance)


def _power_values(p, n_blocks):
    vals = p.values if isinstance(p, PowerMap) else np.asarray(p, dtype=float)
    if vals.shape != (n_blocks,):
        raise ValueError(f"power map has length {vals.shape}, expected ({n_blocks},)")
    if not np.all(np.isfinite(vals)) or np.any(vals < 0):
        raise ValueError("power map entries must be finite and >= 0")
    return vals


class ThermalGrid:
    """Assembled finite-volume operator plus cell/block bookkeeping.

    Construct through :func:`build_grid`. The factorization is computed
    lazily on first solve and reused for every subsequent right-hand side
    (unit pulses for the response matrix, arbitrary power maps).
    """

    def __init__(self, fp, nx, ny, bc, stack, lumped, matrix, sink, cell_block, die_active):
        self.floorplan = fp
        self.nx = nx
        self.ny = ny
        self.bc = bc
        self.stack = stack
        self.lumped = lumped
        self.matrix = matrix
        self.sink = sink
        self.cell_block = cell_block  # (ny, nx) int32, -1 = background/void
        self.die_active = die_active  # (ny, nx) bool
        counts = np.zeros(fp.n_blocks, dtype=np.int64)
        flat = cell_block.ravel()
        inside = flat >= 0
        np.add.at(counts, flat[inside], 1)
        self.block_cell_counts = counts
        self._lu = None
        self._response = None

    @property
    def n_blocks(self):
        return self.floorplan.n_blocks

    @property
    def n_cells(self):
        return self.matrix.shape[0]

    @property
    def cells_per_layer(self):
        return self.nx * self.ny

    def metadata_hash(self):
        return grid_metadata_hash(self.floorplan, self.nx, self.ny, self.bc, self.stack, self.lumped)

    def _factorization(self):
        if self._lu is None:
            self._lu = spla.splu(self.matrix.tocsc())
        return self._lu

    def _source_vector(self, p_watts):
        q = np.zeros(self.n_cells)
        flat = self.cell_block.ravel()
        inside = flat >= 0
        per_cell = np.zeros(self.floorplan.n_blocks)
        nonzero = self.block_cell_counts > 0
        per_cell[nonzero] = p_watts[nonzero] / self.block_cell_counts[nonzero]
        q[: self.cells_per_layer][inside] = per_cell[flat[inside]]
        return q

    def solve_rise_cells(self, p_watts):
        """Cell temperature rises (flat vector over all layers) for a per-block
        power vector; checks the linear-system residual."""
        q = self._source_vector(p_watts)
        if not q.any():
            return np.zeros(self.n_cells)
        theta = self._factorization().solve(q)
        qn = np.linalg.norm(q)
        rn = np.linalg.norm(self.matrix @ theta - q)
        if rn > RESIDUAL_TOL * qn:
            theta = theta + self._factorization().solve(q - self.matrix @ theta)
            rn = np.linalg.norm(self.matrix @ theta - q)
            if rn > RESIDUAL_TOL * qn:
                raise SolverError(
                    f"steady solve residual {rn / qn:.3e} exceeds {RESIDUAL_TOL:.0e}"
                )
        return theta

    def block_rises(self, theta):
        """Mean die-layer rise per block, canonical order."""
        die = theta[: self.cells_per_layer]
        flat = self.cell_block.ravel()
        inside = flat >= 0
        sums = np.bincount(flat[inside], weights=die[inside], minlength=self.n_blocks)
        out = np.zeros(self.n_blocks)
        nonzero = self.block_cell_counts > 0
        out[nonzero] = sums[nonzero] / self.block_cell_counts[nonzero]
        return out

    def convective_outflow(self, theta):
        """Total heat leaving through every Robin boundary face, in watts."""
        return float(self.sink @ theta)

    def response_matrix(self):
        """Learned response matrix (cached); see :func:`build_response_matrix`."""
        if self._response is None:
            self._response = build_response_matrix(self)
        return self._response


def build_grid(fp: Floorplan, nx, ny, bc=None, stack=None, lumped=False):
    """Discretize the die + window stack and assemble the conduction operator.

    ``nx x ny`` cells span the window extent (the die sits centered inside;
    die and film cells outside the die footprint are void). Every block must
    cover at least one cell center or a ResolutionError names it.

    ``lumped`` builds a conduction-free sanity model instead: a single die
    layer over the die extent only, each cell convecting through
    ``effective_h_top``; a block heated with Q watts then sits exactly at
    inlet + Q / (h_top * A_block).
    """
    bc = bc or BoundaryConditions()
    stack = stack or StackOptions()
    if nx < 4 or ny < 4:
        raise ValueError("grid resolution must be at least 4x4")
    if not lumped and (stack.window_width_m < fp.die_width or stack.window_height_m < fp.die_height):
        raise ValueError("window must be at least as large as the die")

    if lumped:
        dom_w, dom_h = fp.die_width, fp.die_height
        off_x = off_y = 0.0
    else:
        dom_w, dom_h = stack.window_width_m, stack.window_height_m
        off_x = 0.5 * (dom_w - fp.die_width) + stack.die_offset_x_m
        off_y = 0.5 * (dom_h - fp.die_height) + stack.die_offset_y_m
        if off_x < 0 or off_y < 0 or off_x + fp.die_width > dom_w or off_y + fp.die_height > dom_h:
            raise ValueError("die offset places the die outside the window")
    dx = dom_w / nx
    dy = dom_h / ny

    # die-local cell center coordinates
    xc = (np.arange(nx) + 0.5) * dx - off_x
    yc = (np.arange(ny) + 0.5) * dy - off_y
    on_die = (
        (xc[None, :] >= 0.0)
        & (xc[None, :] <= fp.die_width)
        & (yc[:, None] >= 0.0)
        & (yc[:, None] <= fp.die_height)
    )

    cell_block = np.full((ny, nx), -1, dtype=np.int32)
    for b_idx, b in enumerate(fp.blocks):
        cover = (
            (xc[None, :] >= b.x)
            & (xc[None, :] < b.x + b.w)
            & (yc[:, None] >= b.y)
            & (yc[:, None] < b.y + b.h)
        )
        if not cover.any():
            raise ResolutionError(
                f"block {b.name!r} covers no cell at {nx}x{ny}; increase the resolution"
            )
        cell_block[cover] = b_idx

    if lumped:
        n = nx * ny
        sink = np.full(n, bc.effective_h_top * dx * dy)
        matrix = sp.diags(sink).tocsr()
        return ThermalGrid(fp, nx, ny, bc, stack, True, matrix, sink, cell_block, on_die)

    thickness = np.array([fp.die_thickness, stack.tim_thickness_m, stack.sapphire_thickness_m])
    conductivity = np.array(
        [stack.die_material.k, stack.tim_material.k, stack.window_material.k]
    )
    active = np.empty((3, ny, nx), dtype=np.uint8)
    active[0] = on_die
    active[1] = on_die
    active[2] = 1  # window overhangs the die
    rows, cols, vals, sink = _kernels.assemble_stencil(
        nx, ny, dx, dy, thickness, conductivity, active, bc.effective_h_top, bc.h_natural
    )
    n = 3 * nx * ny
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return ThermalGrid(fp, nx, ny, bc, stack, False, matrix, sink, cell_block, on_die)


def solve_steady(grid: ThermalGrid, p) -> ThermalMap:
    """Per-block mean die temperature, absolute Celsius, for a power map.

    Deterministic: the same inputs produce bit-identical output. The linear
    residual is verified against RESIDUAL_TOL.
    """
    vals = _power_values(p, grid.n_blocks)
    theta = grid.solve_rise_cells(vals)
    rises = grid.block_rises(theta)
    return ThermalMap(
        rises + grid.bc.inlet_temperature_c, kind="celsius", provenance=Provenance.FORWARD
    )


@dataclass(frozen=True)
class ResponseMatrix:
    """Linear map from per-block watts to per-block kelvin rise.

    Column i is the block-rise profile from one watt in block i. Entries are
    strictly positive on any connected grid; the matrix is generally not
    symmetric because block areas differ.
    """

    r: np.ndarray
    inlet_c: float
    block_names: tuple
    meta_hash: str
    meta: dict = field(default_factory=dict)

    @property
    def n_blocks(self):
        return self.r.shape[0]


def build_response_matrix(grid: ThermalGrid) -> ResponseMatrix:
    """Learn R column by column with unit power pulses, one block at a time."""
    n = grid.n_blocks
    r = np.empty((n, n))
    for i in range(n):
        pulse = np.zeros(n)
        pulse[i] = 1.0
        try:
            theta = grid.solve_rise_cells(pulse)
        except SolverError as exc:
            raise SolverError(f"unit-pulse solve failed for block index {i}: {exc}") from exc
        r[:, i] = grid.block_rises(theta)
    meta = {
        "nx": grid.nx,
        "ny": grid.ny,
        "inlet_c": grid.bc.inlet_temperature_c,
        "block_names": list(grid.floorplan.block_names),
        "lumped": grid.lumped,
    }
    return ResponseMatrix(
        r=r,
        inlet_c=grid.bc.inlet_temperature_c,
        block_names=tuple(grid.floorplan.block_names),
        meta_hash=grid.metadata_hash(),
        meta=meta,
    )


def forward(rm: ResponseMatrix, p) -> ThermalMap:
    """t = R p, in kelvin rise. Add the inlet temperature for Celsius."""
    vals = _power_values(p, rm.n_blocks)
    return ThermalMap(rm.r @ vals, kind="rise", provenance=Provenance.FORWARD)


def validate_model(grid: ThermalGrid, base_p, delta_block, delta_w):
    """Perturb one block and compare the full solve against R * delta-p.

    Returns the max-norm relative error between the temperature difference
    of two steady solves and the response-matrix prediction. For this
    discrete model the result is zero to solver precision; with leakage
    coupling layered on upstream, the same comparison measures how far the
    operating point departs from linearity.
    """
    n = grid.n_blocks
    base = _power_values(base_p, n)
    delta = np.zeros(n)
    delta[delta_block] = delta_w
    if np.any(base + delta < 0):
        raise ValueError("base_p + delta must stay non-negative")
    t_full = solve_steady(grid, base + delta).values
    t_base = solve_steady(grid, base).values
    measured = t_full - t_base
    predicted = forward(grid.response_matrix(), np.abs(delta)).values * np.sign(delta_w)
    scale = np.max(np.abs(predicted))
    if scale == 0.0:
        return float(np.max(np.abs(measured)))
    return float(np.max(np.abs(measured - predicted)) / scale)


# ---------------------------------------------------------------------------
# Response-matrix cache file: '#'-prefixed header (format tag, metadata hash,
# JSON metadata) followed by the matrix in text form.
# ---------------------------------------------------------------------------

CACHE_FORMAT = "aputherm-response-matrix-v1"


def grid_metadata_hash(fp, nx, ny, bc, stack, lumped=False):
    """Stable digest of everything that determines R."""
    doc = {
        "format": CACHE_FORMAT,
        "nx": nx,
        "ny": ny,
        "lumped": lumped,
        "die": [fp.die_width, fp.die_height, fp.die_thickness],
        "blocks": [
            [b.name, b.x, b.y, b.w, b.h, b.device_class.value, b.host_capable]
            for b in fp.blocks
        ],
        "bc": [bc.inlet_temperature_c, bc.effective_h_top, bc.h_natural],
        "stack": [
            stack.tim_thickness_m,
            stack.sapphire_thickness_m,
            stack.window_width_m,
            stack.window_height_m,
            stack.die_offset_x_m,
            stack.die_offset_y_m,
            stack.tim_material.k,
            stack.window_material.k,
            stack.die_material.k,
        ],
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def save_response_matrix(rm: ResponseMatrix, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {CACHE_FORMAT}\n")
        fh.write(f"# hash: {rm.meta_hash}\n")
        fh.write(f"# meta: {json.dumps(rm.meta, sort_keys=True)}\n")
        np.savetxt(fh, rm.r, fmt="%.17e")


def load_response_matrix(path, expected_hash=None):
    """Read a cached R; returns None if the file is unreadable, corrupt, or
    carries a different metadata hash than expected."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            tag = fh.readline().strip()
            hline = fh.readline().strip()
            mline = fh.readline().strip()
            if tag != f"# {CACHE_FORMAT}":
                return None
            if not hline.startswith("# hash: ") or not mline.startswith("# meta: "):
                return None
            meta_hash = hline[len("# hash: ") :]
            meta = json.loads(mline[len("# meta: ") :])
            r = np.loadtxt(fh, ndmin=2)
    except (OSError, ValueError, json.JSONDecodeError):
        return None
    if expected_hash is not None and meta_hash != expected_hash:
        return None
    names = tuple(meta.get("block_names", []))
    if r.shape != (len(names), len(names)):
        return None
    return ResponseMatrix(
        r=r, inlet_c=float(meta["inlet_c"]), block_names=names, meta_hash=meta_hash, meta=meta
    )
