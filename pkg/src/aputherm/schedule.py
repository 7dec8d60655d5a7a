"""Enumerate, evaluate, and rank DVFS x device x host-core decisions."""

import io
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .electrothermal import (
    Device,
    ScheduleDecision,
    dynamic_power,
    energy,
    fixed_point,
    runtime_model,
)
from .errors import ApuThermError, ConfigError
from .thermal import PowerMap


class Objective(Enum):
    MIN_POWER = "power"
    MIN_PEAK_TEMP = "temp"
    MIN_RUNTIME = "runtime"
    MIN_ENERGY = "energy"


_OBJECTIVE_FIELD = {
    Objective.MIN_POWER: "total_power_w",
    Objective.MIN_PEAK_TEMP: "peak_temp_c",
    Objective.MIN_RUNTIME: "runtime_s",
    Objective.MIN_ENERGY: "energy_j",
}


@dataclass(frozen=True)
class EvalResult:
    decision: ScheduleDecision
    runtime_s: float
    total_power_w: float
    energy_j: float
    peak_temp_c: float
    hotspot_block: str
    power_breakdown: PowerMap


@dataclass(frozen=True)
class ModelContext:
    """Calibrated evaluation context: floorplan, learned R, constants."""

    floorplan: object
    response: object  # ResponseMatrix
    calibration: object  # Calibration

    @property
    def inlet_c(self):
        return self.response.inlet_c

    def leakage_models(self):
        return self.calibration.leakage_models(self.floorplan)


def enumerate_decisions(ctx, host_affinity=True, cpu_freqs_ghz=None, devices=None):
    """Deterministic decision list: CPU device first, frequencies ascending,
    host cores ascending. Without host affinity the GPU device always
    launches from the canonical (first host-capable) core, giving the
    classic four device x frequency combinations. ``devices`` restricts the
    scheduling choices (default: both)."""
    cal = ctx.calibration
    freqs = sorted(cpu_freqs_ghz) if cpu_freqs_ghz is not None else cal.cpu_freqs_ghz
    if not freqs:
        raise ConfigError("empty CPU frequency list")
    devices = tuple(devices) if devices is not None else (Device.CPU, Device.GPU)
    hosts = ctx.floorplan.host_capable_indices
    if not hosts:
        raise ConfigError("floorplan has no host-capable core")
    canonical = hosts[0]
    out = []
    if Device.CPU in devices:
        for f in freqs:
            out.append(ScheduleDecision(Device.CPU, cal.dvfs_for(f), host_core=canonical))
    if Device.GPU in devices:
        gpu_hosts = hosts if host_affinity else [canonical]
        for f in freqs:
            for h in gpu_hosts:
                out.append(ScheduleDecision(Device.GPU, cal.dvfs_for(f), host_core=h))
    if not out:
        raise ConfigError("empty device list")
    return out


def evaluate(w, d: ScheduleDecision, ctx: ModelContext) -> EvalResult:
    """Run the full pipeline for one decision: dynamic power, coupled
    fixed point, runtime, energy."""
    fp = ctx.floorplan
    if not fp.blocks[d.host_core].host_capable:
        raise ConfigError(f"host core index {d.host_core} is not host-capable")
    cal = ctx.calibration
    p_dyn = dynamic_power(w, d, fp, cal.capacitance)
    t_map, p_map = fixed_point(
        ctx.response,
        p_dyn,
        ctx.leakage_models(),
        ctx.inlet_c,
        damping=cal.damping,
        tol_k=cal.tol_k,
        max_iter=cal.max_iter,
        hard_cap_c=cal.hard_cap_c,
    )
    rt = runtime_model(w, d, f_ref_ghz=cal.f_ref_ghz, f_ref_gpu_ghz=cal.gpu_freq_ghz)
    total = p_map.total
    hot = int(np.argmax(t_map.values))
    return EvalResult(
        decision=d,
        runtime_s=rt,
        total_power_w=total,
        energy_j=energy(rt, total),
        peak_temp_c=float(t_map.values[hot]),
        hotspot_block=fp.blocks[hot].name,
        power_breakdown=p_map,
    )


def rank(results, objective: Objective):
    """Stable sort, best first; ties keep enumeration order."""
    results = list(results)
    if not results:
        raise ValueError("rank() needs at least one result")
    key = _OBJECTIVE_FIELD[objective]
    return sorted(results, key=lambda r: getattr(r, key))


def affinity_sweep(w, cores, ctx, cpu_freq_ghz=None):
    """Evaluate a GPU-device run launched from each listed host core at a
    fixed DVFS setting (highest CPU frequency by default)."""
    fp = ctx.floorplan
    for c in cores:
        if not fp.blocks[c].host_capable:
            raise ConfigError(f"core index {c} ({fp.blocks[c].name}) is not host-capable")
    cal = ctx.calibration
    f = cpu_freq_ghz if cpu_freq_ghz is not None else max(cal.cpu_freqs_ghz)
    out = []
    for c in sorted(cores):
        d = ScheduleDecision(Device.GPU, cal.dvfs_for(f), host_core=c)
        out.append(evaluate(w, d, ctx))
    return out


@dataclass(frozen=True)
class SummaryTable:
    """Optimal decision per (workload, objective), plus serializers."""

    workload_names: tuple
    objectives: tuple
    cells: dict  # (workload, objective) -> label string or "failed: ..."

    def to_csv(self):
        buf = io.StringIO()
        heads = ["workload"] + [f"min_{o.value}" for o in self.objectives]
        buf.write(",".join(heads) + "\n")
        for wn in self.workload_names:
            row = [wn] + [f'"{self.cells[(wn, o)]}"' for o in self.objectives]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_text(self):
        heads = ["Workload"] + [f"Minimum {o.value.capitalize()}" for o in self.objectives]
        rows = [[wn] + [self.cells[(wn, o)] for o in self.objectives] for wn in self.workload_names]
        widths = [max(len(str(r[i])) for r in [heads] + rows) for i in range(len(heads))]
        lines = ["  ".join(str(v).ljust(widths[i]) for i, v in enumerate(row)) for row in [heads] + rows]
        return "\n".join(lines) + "\n"


def summary_table(workloads, objectives, ctx, host_affinity=False) -> SummaryTable:
    """Winning decision for each workload x objective over the canonical
    decision set. Evaluation failures mark the affected cells instead of
    aborting the table."""
    objectives = tuple(objectives)
    names = []
    cells = {}
    for w in workloads:
        names.append(w.name)
        try:
            results = [evaluate(w, d, ctx) for d in enumerate_decisions(ctx, host_affinity=host_affinity)]
            for obj in objectives:
                cells[(w.name, obj)] = rank(results, obj)[0].decision.label()
        except ApuThermError as exc:
            for obj in objectives:
                cells[(w.name, obj)] = f"failed: {exc}"
    return SummaryTable(tuple(names), objectives, cells)
