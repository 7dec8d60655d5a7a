"""Floorplan-level electro-thermal modeling of heterogeneous CPU-GPU dies.

Pipeline: floorplan -> conduction grid -> response matrix -> forward solves,
non-negative power-map inversion, and DVFS/scheduling evaluation with
temperature-dependent leakage.
"""

from .config import (
    Calibration,
    RunConfig,
    builtin_calibration,
    builtin_workloads,
    load_run_config,
    parse_calibration,
    parse_workloads,
)
from .electrothermal import (
    Device,
    DvfsState,
    LeakageModel,
    ScheduleDecision,
    WorkloadProfile,
    dynamic_power,
    energy,
    fixed_point,
    leakage_power,
    runtime_model,
)
from .floorplan import (
    Block,
    DeviceClass,
    Floorplan,
    block_areas,
    builtin_apu_floorplan,
    dump_floorplan,
    load_floorplan,
    parse_floorplan,
)
from .inverse import (
    InversionOptions,
    InversionResult,
    kkt_check,
    nnls,
    reconstruct,
    total_power_error,
)
from .schedule import (
    EvalResult,
    ModelContext,
    Objective,
    affinity_sweep,
    enumerate_decisions,
    evaluate,
    rank,
    summary_table,
)
from .thermal import (
    BoundaryConditions,
    MaterialProperties,
    PowerMap,
    Provenance,
    ResponseMatrix,
    StackOptions,
    ThermalGrid,
    ThermalMap,
    build_grid,
    build_response_matrix,
    forward,
    load_response_matrix,
    save_response_matrix,
    solve_steady,
    validate_model,
)

__version__ = "0.1.0"
