"""Calibration and workload-profile files (TOML), plus run configuration.

The shipped calibration maps the six benchmark-derived profiles and the
microkernel onto capacitance, leakage, and DVFS constants that reproduce
the reference comparative behavior; the acceptance suite runs against
exactly these files.
"""

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import importlib.resources

import numpy as np

from .electrothermal import (
    DEFAULT_GPU_FREQ_GHZ,
    DEFAULT_GPU_VOLT_V,
    REFERENCE_CPU_FREQ_GHZ,
    DvfsState,
    LeakageModel,
    WorkloadProfile,
)
from .errors import ConfigError
from .floorplan import DeviceClass
from .thermal import PowerMap, Provenance


def _read_toml(source):
    """Accepts a path or raw TOML text."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and source.endswith(".toml")):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {source}: {exc}") from exc
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML: {exc}") from exc


def _class_map(raw, what):
    out = {}
    for key, val in raw.items():
        try:
            cls_ = DeviceClass(key)
        except ValueError as exc:
            raise ConfigError(f"unknown device class {key!r} in {what}") from exc
        out[cls_] = float(val)
    return out


@dataclass(frozen=True)
class Calibration:
    """Everything the power/leakage models need, in one place."""

    capacitance: dict  # DeviceClass -> W/(GHz V^2) per block
    leakage_density: dict  # DeviceClass -> W/m^2 at t0
    leakage_t0_c: float
    leakage_doubling_k: dict  # DeviceClass -> K (doubling interval)
    cpu_voltage_table: dict  # GHz -> V
    gpu_freq_ghz: float = DEFAULT_GPU_FREQ_GHZ
    gpu_volt_v: float = DEFAULT_GPU_VOLT_V
    f_ref_ghz: float = REFERENCE_CPU_FREQ_GHZ
    damping: float = 0.5
    tol_k: float = 0.01
    max_iter: int = 100
    hard_cap_c: float = 150.0
    reference_power: dict = field(default_factory=dict)  # DeviceClass -> W per block

    @property
    def cpu_freqs_ghz(self):
        return sorted(self.cpu_voltage_table)

    def dvfs_for(self, cpu_freq_ghz):
        return DvfsState.from_table(
            cpu_freq_ghz,
            self.cpu_voltage_table,
            gpu_freq_ghz=self.gpu_freq_ghz,
            gpu_volt_v=self.gpu_volt_v,
        )

    def leakage_models(self, fp):
        """Per-block leakage models: density x block area at the shared
        reference temperature, per-class doubling interval."""
        models = []
        for b in fp.blocks:
            density = self.leakage_density.get(b.device_class, 0.0)
            models.append(
                LeakageModel(
                    p0_w=density * b.area,
                    t0_c=self.leakage_t0_c,
                    doubling_interval_k=self.leakage_doubling_k.get(b.device_class, 25.0),
                )
            )
        return models

    def reference_power_map(self, fp):
        """Documented mixed CPU+GPU power map used by refinement and
        reconstruction tests."""
        vals = np.array([self.reference_power.get(b.device_class, 0.0) for b in fp.blocks])
        return PowerMap(vals, provenance=Provenance.SYNTHETIC)


def parse_calibration(source) -> Calibration:
    doc = _read_toml(source)
    try:
        caps = _class_map(doc["capacitance_w_per_ghz_v2"], "capacitance table")
        leak = doc["leakage"]
        density = _class_map(leak["p0_w_per_m2"], "leakage density table")
        doubling_raw = leak["doubling_interval_k"]
        if isinstance(doubling_raw, dict):
            doubling = _class_map(doubling_raw, "leakage doubling table")
        else:
            doubling = {cls_: float(doubling_raw) for cls_ in DeviceClass}
        dvfs = doc.get("dvfs", {})
        volt_raw = dvfs.get("cpu_voltage_v", {"1.4": 0.9, "3.0": 1.2})
        volt = {float(k): float(v) for k, v in volt_raw.items()}
        fx = doc.get("fixed_point", {})
        ref = _class_map(doc.get("reference_power_w", {}), "reference power table")
        return Calibration(
            capacitance=caps,
            leakage_density=density,
            leakage_t0_c=float(leak["t0_c"]),
            leakage_doubling_k=doubling,
            cpu_voltage_table=volt,
            gpu_freq_ghz=float(dvfs.get("gpu_freq_ghz", DEFAULT_GPU_FREQ_GHZ)),
            gpu_volt_v=float(dvfs.get("gpu_volt_v", DEFAULT_GPU_VOLT_V)),
            f_ref_ghz=float(dvfs.get("f_ref_ghz", REFERENCE_CPU_FREQ_GHZ)),
            damping=float(fx.get("damping", 0.5)),
            tol_k=float(fx.get("tol_k", 0.01)),
            max_iter=int(fx.get("max_iter", 100)),
            hard_cap_c=float(fx.get("hard_cap_c", 150.0)),
            reference_power=ref,
        )
    except KeyError as exc:
        raise ConfigError(f"calibration file missing required key: {exc}") from exc


def parse_workloads(source):
    """Returns an ordered dict name -> WorkloadProfile."""
    doc = _read_toml(source)
    out = {}
    for raw in doc.get("workloads", []):
        try:
            activity = {DeviceClass(k): float(v) for k, v in raw.get("activity", {}).items()}
            w = WorkloadProfile(
                name=str(raw["name"]),
                cpu_load=float(raw["cpu_load"]),
                divergence_penalty=float(raw.get("divergence_penalty", 1.0)),
                parallel_fraction=float(raw.get("parallel_fraction", 0.0)),
                base_work_s=float(raw["base_work_s"]),
                activity=activity,
                speedup_gpu=float(raw.get("speedup_gpu", 1.0)),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad workload record: {exc}") from exc
        if w.name in out:
            raise ConfigError(f"duplicate workload name {w.name!r}")
        out[w.name] = w
    if not out:
        raise ConfigError("workload file defines no workloads")
    return out


def builtin_calibration() -> Calibration:
    text = importlib.resources.files("aputherm.data").joinpath("calibration.toml").read_text()
    return parse_calibration(text)


def builtin_workloads():
    text = importlib.resources.files("aputherm.data").joinpath("workloads.toml").read_text()
    return parse_workloads(text)


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration: parsed inputs plus output location.

    Paths may be omitted in the config file, in which case the builtin
    floorplan, workload set, and calibration apply.
    """

    floorplan: object
    workloads: dict
    calibration: Calibration
    bc: object  # BoundaryConditions
    stack: object  # StackOptions
    nx: int = 64
    ny: int = 64
    output_dir: Path = Path("out")


def load_run_config(path=None, resolution=None, output_dir=None):
    """Build a RunConfig from an optional TOML file plus CLI overrides.

    File schema (all keys optional):

        [run]
        floorplan = "my_floorplan.toml"
        workloads = "my_workloads.toml"
        calibration = "my_calibration.toml"
        resolution = [64, 64]
        output_dir = "out"

        [boundary]
        inlet_c = 12.1
        effective_h_top = 3500.0
        h_natural = 5.0
    """
    from .floorplan import builtin_apu_floorplan, load_floorplan
    from .thermal import BoundaryConditions, StackOptions

    doc = {}
    base = Path(".")
    if path is not None:
        doc = _read_toml(Path(path))
        base = Path(path).parent
    run = doc.get("run", {})

    fp_path = run.get("floorplan")
    fp = load_floorplan(base / fp_path) if fp_path else builtin_apu_floorplan()
    wl_path = run.get("workloads")
    workloads = parse_workloads(base / wl_path) if wl_path else builtin_workloads()
    cal_path = run.get("calibration")
    calibration = parse_calibration(base / cal_path) if cal_path else builtin_calibration()

    bnd = doc.get("boundary", {})
    try:
        bc = BoundaryConditions(
            inlet_temperature_c=float(bnd.get("inlet_c", 12.1)),
            effective_h_top=float(bnd.get("effective_h_top", BoundaryConditions().effective_h_top)),
            h_natural=float(bnd.get("h_natural", 5.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"bad boundary conditions: {exc}") from exc

    res = resolution or tuple(run.get("resolution", (64, 64)))
    if len(res) != 2 or int(res[0]) < 4 or int(res[1]) < 4:
        raise ConfigError(f"bad resolution {res}; need NxN with N >= 4")
    out = Path(output_dir or run.get("output_dir", "out"))
    return RunConfig(
        floorplan=fp,
        workloads=workloads,
        calibration=calibration,
        bc=bc,
        stack=StackOptions(),
        nx=int(res[0]),
        ny=int(res[1]),
        output_dir=out,
    )
