"""Die floorplans: named rectangular blocks with device classes.

A floorplan is an ordered list of non-overlapping rectangles on the die
plane. The list order is the canonical block index order used by every
downstream vector and matrix (power maps, thermal maps, response matrix).
All dimensions are SI meters.
"""

import importlib.resources
import sys
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import FloorplanSyntaxError, FloorplanValidationError

DEFAULT_DIE_THICKNESS_M = 750e-6


class DeviceClass(Enum):
    CPU_CORE = "cpu_core"
    L2_CACHE = "l2_cache"
    GPU_SIMD = "gpu_simd"
    GPU_AUX = "gpu_aux"
    UNB = "unb"
    GMC = "gmc"
    OTHER = "other"


#: Classes summed as "CPU device" / "GPU device" power in reports.
CPU_DEVICE_CLASSES = frozenset({DeviceClass.CPU_CORE, DeviceClass.L2_CACHE})
GPU_DEVICE_CLASSES = frozenset({DeviceClass.GPU_SIMD, DeviceClass.GPU_AUX, DeviceClass.GMC})
#: Classes that define "the GPU region" geometrically (compute area, not GMC).
GPU_REGION_CLASSES = frozenset({DeviceClass.GPU_SIMD, DeviceClass.GPU_AUX})


@dataclass(frozen=True)
class Block:
    """A named rectangle on the die plane.

    ``x, y`` is the lower-left corner in meters; ``host_capable`` marks CPU
    cores that may run the sequential part of a GPU-scheduled workload.
    """

    name: str
    x: float
    y: float
    w: float
    h: float
    device_class: DeviceClass
    host_capable: bool = False

    @property
    def area(self):
        return self.w * self.h

    @property
    def centroid(self):
        return (self.x + 0.5 * self.w, self.y + 0.5 * self.h)

    def overlaps(self, other, eps=1e-9):
        """True if the two rectangle interiors intersect by more than eps
        (meters); blocks sharing an edge do not overlap."""
        return (
            self.x + eps < other.x + other.w
            and other.x + eps < self.x + self.w
            and self.y + eps < other.y + other.h
            and other.y + eps < self.y + self.h
        )


@dataclass(frozen=True)
class Floorplan:
    """Validated die geometry. Immutable; safe to share across threads."""

    die_width: float
    die_height: float
    die_thickness: float = DEFAULT_DIE_THICKNESS_M
    blocks: tuple = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        _validate(self)

    @property
    def n_blocks(self):
        return len(self.blocks)

    @property
    def block_names(self):
        return [b.name for b in self.blocks]

    def index_of(self, name):
        for i, b in enumerate(self.blocks):
            if b.name == name:
                return i
        raise KeyError(f"no block named {name!r}")

    def blocks_of_class(self, device_class):
        return [i for i, b in enumerate(self.blocks) if b.device_class is device_class]

    @property
    def host_capable_indices(self):
        return [i for i, b in enumerate(self.blocks) if b.host_capable]


def _validate(fp):
    if fp.die_width <= 0 or fp.die_height <= 0 or fp.die_thickness <= 0:
        raise FloorplanValidationError("die dimensions must be strictly positive")
    seen = set()
    for b in fp.blocks:
        if b.w <= 0 or b.h <= 0:
            raise FloorplanValidationError(f"block {b.name!r} has non-positive size")
        if b.x < -1e-9 or b.y < -1e-9 or b.x + b.w > fp.die_width + 1e-9 or b.y + b.h > fp.die_height + 1e-9:
            raise FloorplanValidationError(f"block {b.name!r} lies outside the die bounds")
        if b.name in seen:
            raise FloorplanValidationError(f"duplicate block name {b.name!r}")
        if b.host_capable and b.device_class is not DeviceClass.CPU_CORE:
            raise FloorplanValidationError(f"block {b.name!r} is host_capable but not a CPU core")
        seen.add(b.name)
    for i, a in enumerate(fp.blocks):
        for b in fp.blocks[i + 1 :]:
            if a.overlaps(b):
                raise FloorplanValidationError(f"blocks {a.name!r} and {b.name!r} overlap")
    if fp.blocks and not any(b.host_capable for b in fp.blocks):
        raise FloorplanValidationError("floorplan has no host-capable block")


def block_areas(fp):
    """Per-block areas in m^2, in canonical block order."""
    return np.array([b.area for b in fp.blocks], dtype=float)


def gpu_region_centroid(fp):
    """Area-weighted centroid of the GPU compute array (SIMD blocks)."""
    gx = gy = ga = 0.0
    for b in fp.blocks:
        if b.device_class is DeviceClass.GPU_SIMD:
            cx, cy = b.centroid
            gx += cx * b.area
            gy += cy * b.area
            ga += b.area
    if ga == 0.0:
        raise FloorplanValidationError("floorplan has no GPU region blocks")
    return (gx / ga, gy / ga)


def distance_to_gpu(fp, block_name):
    """Centroid distance from a named block to the GPU region centroid."""
    b = fp.blocks[fp.index_of(block_name)]
    gx, gy = gpu_region_centroid(fp)
    cx, cy = b.centroid
    return ((cx - gx) ** 2 + (cy - gy) ** 2) ** 0.5


# ---------------------------------------------------------------------------
# File format (TOML)
#
#   [die]
#   width_m = 0.01625
#   height_m = 0.015
#   thickness_m = 750e-6
#
#   [[blocks]]
#   name = "Core0"
#   x_m = 0.000625
#   y_m = 0.01125
#   w_m = 0.00375
#   h_m = 0.0025
#   class = "cpu_core"
#   host_capable = true
#
# Block order in the file is the canonical index order.
# ---------------------------------------------------------------------------


def parse_floorplan(text):
    """Parse and validate a floorplan document.

    Raises FloorplanSyntaxError for malformed documents and
    FloorplanValidationError for geometric violations (the message names the
    offending block).
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise FloorplanSyntaxError(f"malformed floorplan document: {exc}") from exc
    try:
        die = doc["die"]
        width = float(die["width_m"])
        height = float(die["height_m"])
        thickness = float(die.get("thickness_m", DEFAULT_DIE_THICKNESS_M))
        raw_blocks = doc.get("blocks", [])
        blocks = []
        for rb in raw_blocks:
            blocks.append(
                Block(
                    name=str(rb["name"]),
                    x=float(rb["x_m"]),
                    y=float(rb["y_m"]),
                    w=float(rb["w_m"]),
                    h=float(rb["h_m"]),
                    device_class=DeviceClass(rb["class"]),
                    host_capable=bool(rb.get("host_capable", False)),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise FloorplanSyntaxError(f"floorplan document missing or invalid field: {exc}") from exc
    metadata = dict(doc.get("metadata", {}))
    return Floorplan(
        die_width=width,
        die_height=height,
        die_thickness=thickness,
        blocks=tuple(blocks),
        metadata=metadata,
    )


def load_floorplan(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_floorplan(fh.read())


def dump_floorplan(fp):
    """Serialize a floorplan to the documented TOML format (round-trips)."""
    lines = []
    if fp.metadata:
        lines.append("[metadata]")
        for key, val in fp.metadata.items():
            lines.append(f"{key} = {_toml_value(val)}")
        lines.append("")
    lines.append("[die]")
    lines.append(f"width_m = {float(fp.die_width)!r}")
    lines.append(f"height_m = {float(fp.die_height)!r}")
    lines.append(f"thickness_m = {float(fp.die_thickness)!r}")
    for b in fp.blocks:
        lines.append("")
        lines.append("[[blocks]]")
        lines.append(f'name = "{b.name}"')
        lines.append(f"x_m = {float(b.x)!r}")
        lines.append(f"y_m = {float(b.y)!r}")
        lines.append(f"w_m = {float(b.w)!r}")
        lines.append(f"h_m = {float(b.h)!r}")
        lines.append(f'class = "{b.device_class.value}"')
        lines.append(f"host_capable = {'true' if b.host_capable else 'false'}")
    return "\n".join(lines) + "\n"


def _toml_value(val):
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, (int, float)):
        return repr(val)
    return '"' + str(val).replace('"', '\\"') + '"'


def builtin_apu_floorplan(merge_gpu=False):
    """Approximate floorplan of a quad-core x86 + 6-SIMD GPU die.

    No block dimensions are documented for the real die, so the coordinates are
    invented on a 0.625 mm lattice while preserving the layout facts the
    experiments rely on: two x86 modules on the left edge with the unified
    north bridge between their L2 caches, the GPU on the opposite side with
    at least 1.5x the core area, and Core3 nearest the GPU region.

    With ``merge_gpu`` the SIMD and auxiliary blocks are fused into a single
    GPU block (coarser pie-chart granularity).
    """
    text = importlib.resources.files("aputherm.data").joinpath("floorplan_apu.toml").read_text()
    fp = parse_floorplan(text)
    if not merge_gpu:
        return fp
    keep = []
    gpu = [b for b in fp.blocks if b.device_class in GPU_REGION_CLASSES]
    x0 = min(b.x for b in gpu)
    y0 = min(b.y for b in gpu)
    x1 = max(b.x + b.w for b in gpu)
    y1 = max(b.y + b.h for b in gpu)
    merged = Block("GPU", x0, y0, x1 - x0, y1 - y0, DeviceClass.GPU_SIMD)
    inserted = False
    for b in fp.blocks:
        if b.device_class in GPU_REGION_CLASSES:
            if not inserted:
                keep.append(merged)
                inserted = True
            continue
        keep.append(b)
    return Floorplan(
        die_width=fp.die_width,
        die_height=fp.die_height,
        die_thickness=fp.die_thickness,
        blocks=tuple(keep),
        metadata={**fp.metadata, "merged_gpu": True},
    )
