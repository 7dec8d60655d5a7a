"""Workload power models and the power-temperature fixed point.

Dynamic power follows the switching law c * activity * f * V^2 per block,
with per-device-class capacitance constants from the calibration file.
Static (leakage) power is exponential in local block temperature with a
configurable doubling interval, and the two couple through the response
matrix: hot blocks leak more, leaking blocks heat further. A damped Picard
iteration finds the consistent operating point.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, ThermalRunawayError
from .floorplan import DeviceClass
from .thermal import PowerMap, Provenance, ThermalMap

REFERENCE_CPU_FREQ_GHZ = 3.0
DEFAULT_GPU_FREQ_GHZ = 0.8
DEFAULT_GPU_VOLT_V = 1.0
#: Default CPU operating points: frequency (GHz) -> core voltage (V).
DEFAULT_CPU_VOLTAGE_TABLE = {1.4: 0.9, 3.0: 1.2}


class Device(Enum):
    CPU = "cpu"
    GPU = "gpu"


@dataclass(frozen=True)
class DvfsState:
    """One operating point. GPU frequency is fixed by default (the studied
    part only supports CPU-side DVFS)."""

    cpu_freq_ghz: float
    cpu_volt_v: float
    gpu_freq_ghz: float = DEFAULT_GPU_FREQ_GHZ
    gpu_volt_v: float = DEFAULT_GPU_VOLT_V

    @classmethod
    def from_table(cls, cpu_freq_ghz, table=None, gpu_freq_ghz=DEFAULT_GPU_FREQ_GHZ,
                   gpu_volt_v=DEFAULT_GPU_VOLT_V):
        table = table if table is not None else DEFAULT_CPU_VOLTAGE_TABLE
        if cpu_freq_ghz not in table:
            raise ConfigError(
                f"cpu frequency {cpu_freq_ghz} GHz not in voltage table {sorted(table)}"
            )
        return cls(cpu_freq_ghz, table[cpu_freq_ghz], gpu_freq_ghz, gpu_volt_v)


@dataclass(frozen=True)
class WorkloadProfile:
    """Parameterized workload characteristics.

    ``cpu_load`` is the fraction of runtime spent on the host CPU when the
    workload is launched on the GPU; ``divergence_penalty`` slows the GPU
    path for branch-divergent kernels; ``activity`` holds per-device-class
    switching activity factors in [0, 1].
    """

    name: str
    cpu_load: float
    divergence_penalty: float
    parallel_fraction: float
    base_work_s: float
    activity: dict = field(default_factory=dict)
    speedup_gpu: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.cpu_load <= 1.0:
            raise ConfigError(f"{self.name}: cpu_load must be in [0,1]")
        if not 0.0 <= self.parallel_fraction <= 1.0:
            raise ConfigError(f"{self.name}: parallel_fraction must be in [0,1]")
        if self.divergence_penalty < 1.0:
            raise ConfigError(f"{self.name}: divergence_penalty must be >= 1")
        if self.base_work_s < 0 or self.speedup_gpu <= 0:
            raise ConfigError(f"{self.name}: base_work_s >= 0 and speedup_gpu > 0 required")
        for cls_, a in self.activity.items():
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"{self.name}: activity[{cls_}] outside [0,1]")

    def activity_of(self, device_class):
        return float(self.activity.get(device_class, self.activity.get(device_class.value, 0.0)))


@dataclass(frozen=True)
class ScheduleDecision:
    """(device, DVFS, host core) choice. For CPU-device runs the host core is
    the canonical core and has no effect on the result."""

    device: Device
    dvfs: DvfsState
    host_core: int = 0

    def label(self):
        dev = "CPU" if self.device is Device.CPU else "CPU-GPU"
        return f"{self.dvfs.cpu_freq_ghz:.1f} GHz, {dev}"


@dataclass(frozen=True)
class LeakageModel:
    """Static power p0 at reference temperature t0, doubling every
    ``doubling_interval_k`` kelvin."""

    p0_w: float
    t0_c: float
    doubling_interval_k: float = 25.0

    def __post_init__(self):
        if self.p0_w < 0 or self.doubling_interval_k <= 0:
            raise ConfigError("leakage requires p0 >= 0 and doubling interval > 0")


def leakage_power(model: LeakageModel, t_c):
    """Static power in watts at block temperature t_c (Celsius)."""
    if not math.isfinite(t_c):
        raise ValueError("temperature must be finite")
    return model.p0_w * 2.0 ** ((t_c - model.t0_c) / model.doubling_interval_k)


def _leakage_vector(models, t_c):
    out = np.empty(len(models))
    for i, m in enumerate(models):
        out[i] = m.p0_w * 2.0 ** ((t_c[i] - m.t0_c) / m.doubling_interval_k)
    return out


#: Block classes that draw dynamic power for each scheduling device.
#: The UNB serves memory traffic for both devices and clocks with the CPU.
_CPU_ACTIVE = (DeviceClass.CPU_CORE, DeviceClass.L2_CACHE, DeviceClass.UNB)
_GPU_ACTIVE = (DeviceClass.GPU_SIMD, DeviceClass.GPU_AUX, DeviceClass.GMC, DeviceClass.UNB)


def dynamic_power(w: WorkloadProfile, d: ScheduleDecision, fp, capacitance) -> PowerMap:
    """Per-block switching power for a workload under a scheduling decision.

    ``capacitance`` maps device class -> effective capacitance constant in
    W/(GHz V^2) per block. CPU-device runs activate all cores plus L2 and
    UNB; GPU-device runs activate the GPU blocks, the UNB, and the host core
    scaled by cpu_load (the other cores stay at leakage only).
    """
    f_cpu, v_cpu = d.dvfs.cpu_freq_ghz, d.dvfs.cpu_volt_v
    f_gpu, v_gpu = d.dvfs.gpu_freq_ghz, d.dvfs.gpu_volt_v
    cpu_fv2 = f_cpu * v_cpu * v_cpu
    gpu_fv2 = f_gpu * v_gpu * v_gpu

    def cap(device_class):
        key = device_class if device_class in capacitance else device_class.value
        if key not in capacitance:
            raise ConfigError(f"no capacitance constant for activated class {device_class.value}")
        return float(capacitance[key])

    p = np.zeros(fp.n_blocks)
    if d.device is Device.CPU:
        for i, b in enumerate(fp.blocks):
            if b.device_class in _CPU_ACTIVE:
                a = w.activity_of(b.device_class)
                if a > 0.0:
                    p[i] = a * cap(b.device_class) * cpu_fv2
    else:
        for i, b in enumerate(fp.blocks):
            a = w.activity_of(b.device_class)
            if a <= 0.0:
                continue
            if b.device_class in (DeviceClass.GPU_SIMD, DeviceClass.GPU_AUX, DeviceClass.GMC):
                p[i] = a * cap(b.device_class) * gpu_fv2
            elif b.device_class is DeviceClass.UNB:
                p[i] = a * cap(b.device_class) * cpu_fv2
            elif b.device_class is DeviceClass.CPU_CORE and i == d.host_core:
                p[i] = w.cpu_load * a * cap(b.device_class) * cpu_fv2
    return PowerMap(p, provenance=Provenance.SYNTHETIC)


def fixed_point(rm, p_dyn, leak_models, inlet_c, damping=0.5, tol_k=0.01,
                max_iter=100, hard_cap_c=150.0, t_init=None):
    """Iterate power <-> temperature to the coupled operating point.

    Damped Picard update t <- (1-d) t + d (inlet + R (p_dyn + leak(t))),
    converged when every block moves less than tol_k in one step. Returns
    (ThermalMap Celsius, PowerMap) with the power self-consistent against
    the returned temperatures. Raises ThermalRunawayError when the iteration
    budget is exhausted or any block passes hard_cap_c.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must be in (0, 1]")
    if tol_k <= 0.0:
        raise ValueError("tol_k must be positive")
    p_dyn_vals = p_dyn.values if isinstance(p_dyn, PowerMap) else np.asarray(p_dyn, dtype=float)
    if len(leak_models) != rm.n_blocks or p_dyn_vals.shape != (rm.n_blocks,):
        raise ValueError("dimension mismatch between R, p_dyn, and leakage models")

    t = np.asarray(t_init, dtype=float).copy() if t_init is not None \
        else inlet_c + rm.r @ p_dyn_vals
    for _ in range(max_iter):
        p = p_dyn_vals + _leakage_vector(leak_models, t)
        t_next = (1.0 - damping) * t + damping * (inlet_c + rm.r @ p)
        if np.any(t_next > hard_cap_c) or not np.all(np.isfinite(t_next)):
            raise ThermalRunawayError(
                f"fixed point exceeded hard cap {hard_cap_c} C (peak "
                f"{np.max(t_next):.1f} C)"
            )
        delta = float(np.max(np.abs(t_next - t)))
        t = t_next
        if delta <= tol_k:
            p_final = p_dyn_vals + _leakage_vector(leak_models, t)
            return (
                ThermalMap(t, kind="celsius", provenance=Provenance.FORWARD),
                PowerMap(p_final, provenance=Provenance.SYNTHETIC),
            )
    raise ThermalRunawayError(f"fixed point did not converge within {max_iter} iterations")


def runtime_model(w: WorkloadProfile, d: ScheduleDecision,
                  f_ref_ghz=REFERENCE_CPU_FREQ_GHZ, f_ref_gpu_ghz=DEFAULT_GPU_FREQ_GHZ):
    """Deterministic runtime in seconds.

    CPU device: Amdahl over the four cores, scaled by frequency.
    GPU device: host share scales with CPU frequency; kernel share runs at
    the GPU clock slowed by branch divergence and sped by the per-workload
    GPU speedup.
    """
    f_cpu = d.dvfs.cpu_freq_ghz
    if d.device is Device.CPU:
        amdahl = (1.0 - w.parallel_fraction) + w.parallel_fraction / 4.0
        return w.base_work_s * amdahl * (f_ref_ghz / f_cpu)
    host = w.cpu_load * (f_ref_ghz / f_cpu)
    kernel = (
        (1.0 - w.cpu_load)
        * w.divergence_penalty
        * (f_ref_gpu_ghz / d.dvfs.gpu_freq_ghz)
        / w.speedup_gpu
    )
    return w.base_work_s * (host + kernel)


def energy(runtime_s, total_power_w):
    """Joules consumed over the run."""
    if runtime_s < 0 or total_power_w < 0:
        raise ValueError("runtime and power must be non-negative")
    return runtime_s * total_power_w
