"""CSV readers/writers and grayscale heatmap rasters.

All CSV output uses comma delimiters with a units-bearing header row and a
fixed float format, so identical inputs produce byte-identical files.
Heatmaps are binary PGM (P5): block temperatures painted onto the die cell
raster on a fixed scale from the inlet temperature to 100 C, making panels
from one run visually comparable.
"""

import csv
import io

import numpy as np

from .errors import ConfigError
from .thermal import Provenance, ThermalMap

HEATMAP_TMAX_C = 100.0


def _fmt(x):
    return f"{x:.9g}"


# ---------------------------------------------------------------------------
# thermal / power CSVs (block granularity)
# ---------------------------------------------------------------------------

def thermal_map_csv(fp, tmap: ThermalMap):
    if tmap.kind != "celsius":
        raise ValueError("thermal CSV stores absolute Celsius maps")
    buf = io.StringIO()
    buf.write("block,temperature_c\n")
    for b, v in zip(fp.blocks, tmap.values):
        buf.write(f"{b.name},{_fmt(v)}\n")
    return buf.getvalue()


def parse_thermal_csv(text, fp):
    """Reads (block, celsius) rows; block set must match the floorplan."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("thermal CSV is empty") from None
    if [h.strip().lower() for h in header[:2]] != ["block", "temperature_c"]:
        raise ConfigError("thermal CSV must start with header 'block,temperature_c'")
    seen = {}
    for row in reader:
        if not row or not "".join(row).strip():
            continue
        if len(row) < 2:
            raise ConfigError(f"malformed thermal CSV row: {row}")
        try:
            seen[row[0].strip()] = float(row[1])
        except ValueError as exc:
            raise ConfigError(f"bad temperature in row {row}: {exc}") from exc
    names = fp.block_names
    missing = [n for n in names if n not in seen]
    extra = [n for n in seen if n not in names]
    if missing or extra or len(seen) != fp.n_blocks:
        raise ConfigError(
            f"thermal CSV blocks do not match the floorplan "
            f"(missing {missing or 'none'}, unknown {extra or 'none'})"
        )
    vals = np.array([seen[n] for n in names])
    return ThermalMap(vals, kind="celsius", provenance=Provenance.SYNTHETIC)


def power_map_csv(fp, pmap, shares=True):
    total = float(np.sum(pmap.values))
    buf = io.StringIO()
    buf.write("block,power_w,share_pct\n" if shares else "block,power_w\n")
    for b, v in zip(fp.blocks, pmap.values):
        if shares:
            pct = 100.0 * v / total if total > 0 else 0.0
            buf.write(f"{b.name},{_fmt(v)},{_fmt(pct)}\n")
        else:
            buf.write(f"{b.name},{_fmt(v)}\n")
    return buf.getvalue()


def parse_power_csv(text, fp):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("power CSV is empty") from None
    if [h.strip().lower() for h in header[:2]] != ["block", "power_w"]:
        raise ConfigError("power CSV must start with header 'block,power_w'")
    seen = {}
    for row in reader:
        if not row or not "".join(row).strip():
            continue
        try:
            seen[row[0].strip()] = float(row[1])
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"malformed power CSV row {row}: {exc}") from exc
    names = fp.block_names
    if sorted(seen) != sorted(names):
        raise ConfigError("power CSV blocks do not match the floorplan")
    from .thermal import PowerMap

    return PowerMap(np.array([seen[n] for n in names]), provenance=Provenance.SYNTHETIC)


# ---------------------------------------------------------------------------
# evaluation CSVs
# ---------------------------------------------------------------------------

EVAL_HEADER = (
    "workload,device,cpu_freq_ghz,host_core,runtime_s,total_power_w,"
    "energy_j,peak_temp_c,hotspot_block\n"
)


def eval_results_csv(workload_name, results):
    buf = io.StringIO()
    buf.write(EVAL_HEADER)
    for r in results:
        d = r.decision
        buf.write(
            f"{workload_name},{d.device.value},{_fmt(d.dvfs.cpu_freq_ghz)},"
            f"{d.host_core},{_fmt(r.runtime_s)},{_fmt(r.total_power_w)},"
            f"{_fmt(r.energy_j)},{_fmt(r.peak_temp_c)},{r.hotspot_block}\n"
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# PGM heatmaps
# ---------------------------------------------------------------------------

def write_pgm(path, gray):
    """Binary PGM (P5), 8-bit. gray is a (rows, cols) uint8 array, row 0 at
    the top of the image."""
    gray = np.asarray(gray, dtype=np.uint8)
    rows, cols = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode())
        fh.write(gray.tobytes())


def render_heatmap(grid, tmap: ThermalMap, path, t_max_c=HEATMAP_TMAX_C):
    """Paint block temperatures onto the die cell raster.

    Background (non-block) cells sit at the inlet temperature; the gray
    scale runs from inlet (black) to ``t_max_c`` (white) so every panel of a
    run shares one scale.
    """
    inlet = grid.bc.inlet_temperature_c
    t = tmap.to_celsius(inlet).values
    cells = np.full(grid.cell_block.shape, inlet)
    mask = grid.cell_block >= 0
    cells[mask] = t[grid.cell_block[mask]]
    norm = np.clip((cells - inlet) / (t_max_c - inlet), 0.0, 1.0)
    gray = np.round(norm * 255.0).astype(np.uint8)
    write_pgm(path, gray[::-1, :])  # row 0 is the die bottom; flip for image
