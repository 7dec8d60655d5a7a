import numpy as np
import pytest

import aputherm as at
from aputherm.electrothermal import (
    DEFAULT_CPU_VOLTAGE_TABLE,
    Device,
    DvfsState,
    LeakageModel,
    ScheduleDecision,
)
from aputherm.errors import ConfigError, ThermalRunawayError
from aputherm.floorplan import CPU_DEVICE_CLASSES, GPU_DEVICE_CLASSES, DeviceClass


def _decision(cal, device, freq, host=0):
    return ScheduleDecision(device, cal.dvfs_for(freq), host_core=host)


# --- DVFS ------------------------------------------------------------------

def test_dvfs_from_table():
    d = DvfsState.from_table(1.4)
    assert d.cpu_volt_v == DEFAULT_CPU_VOLTAGE_TABLE[1.4]
    assert d.gpu_freq_ghz == 0.8
    with pytest.raises(ConfigError):
        DvfsState.from_table(2.2)


# --- dynamic power ---------------------------------------------------------

def test_zero_activity_zero_power(apu, calibration, workloads):
    w = workloads["CFD"]
    quiet = at.WorkloadProfile(
        name="quiet", cpu_load=w.cpu_load, divergence_penalty=1.0,
        parallel_fraction=0.5, base_work_s=10.0, activity={},
    )
    for dev in (Device.CPU, Device.GPU):
        p = at.dynamic_power(quiet, _decision(calibration, dev, 3.0), apu, calibration.capacitance)
        assert np.all(p.values == 0.0)


def test_fv2_scaling_ratio(apu, calibration, workloads):
    """3.0 GHz @ 1.2 V vs 1.4 GHz @ 0.9 V on active CPU blocks: (3.0*1.2^2)/(1.4*0.9^2)."""
    w = workloads["uKern"]
    hi = at.dynamic_power(w, _decision(calibration, Device.CPU, 3.0), apu, calibration.capacitance)
    lo = at.dynamic_power(w, _decision(calibration, Device.CPU, 1.4), apu, calibration.capacitance)
    active = hi.values > 0
    expected = (3.0 * 1.2**2) / (1.4 * 0.9**2)
    assert np.allclose(hi.values[active] / lo.values[active], expected)


def test_activity_homogeneity(apu, calibration, workloads):
    w = workloads["CFD"]
    half = at.WorkloadProfile(
        name="half", cpu_load=w.cpu_load, divergence_penalty=w.divergence_penalty,
        parallel_fraction=w.parallel_fraction, base_work_s=w.base_work_s,
        activity={k: v / 2 for k, v in w.activity.items()}, speedup_gpu=w.speedup_gpu,
    )
    d = _decision(calibration, Device.CPU, 3.0)
    p_full = at.dynamic_power(w, d, apu, calibration.capacitance).values
    p_half = at.dynamic_power(half, d, apu, calibration.capacitance).values
    assert np.allclose(p_half, p_full / 2)


def test_ukern_device_fixtures(apu, calibration, workloads):
    """Calibration fixture: microkernel device totals ~20.5 W (CPU) / ~19 W (GPU)."""
    uk = workloads["uKern"]
    p_cpu = at.dynamic_power(uk, _decision(calibration, Device.CPU, 3.0), apu, calibration.capacitance)
    p_gpu = at.dynamic_power(uk, _decision(calibration, Device.GPU, 3.0), apu, calibration.capacitance)
    cpu_dev = sum(v for v, b in zip(p_cpu.values, apu.blocks) if b.device_class in CPU_DEVICE_CLASSES)
    gpu_dev = sum(v for v, b in zip(p_gpu.values, apu.blocks) if b.device_class in GPU_DEVICE_CLASSES)
    assert cpu_dev == pytest.approx(20.5, abs=0.05)
    assert gpu_dev == pytest.approx(19.0, abs=0.05)


def test_gpu_device_power_layout(apu, calibration, workloads):
    """GPU-device runs: GPU blocks + UNB + host core only; host scaled by cpu_load."""
    sc = workloads["SC"]
    d = _decision(calibration, Device.GPU, 3.0, host=2)
    p = at.dynamic_power(sc, d, apu, calibration.capacitance).values
    for i, b in enumerate(apu.blocks):
        if b.device_class is DeviceClass.CPU_CORE and i != 2:
            assert p[i] == 0.0
        if b.device_class is DeviceClass.L2_CACHE:
            assert p[i] == 0.0
    host_expected = (
        sc.cpu_load * sc.activity_of(DeviceClass.CPU_CORE)
        * calibration.capacitance[DeviceClass.CPU_CORE] * 3.0 * 1.2**2
    )
    assert p[2] == pytest.approx(host_expected)
    assert p[apu.index_of("GpuSimd")] > 0


def test_missing_capacitance_errors(apu, workloads):
    w = workloads["uKern"]
    d = ScheduleDecision(Device.CPU, DvfsState.from_table(3.0))
    with pytest.raises(ConfigError):
        at.dynamic_power(w, d, apu, {DeviceClass.L2_CACHE: 0.8})


# --- leakage ---------------------------------------------------------------

def test_leakage_definition_points():
    m = LeakageModel(p0_w=2.0, t0_c=50.0)
    assert at.leakage_power(m, 50.0) == pytest.approx(2.0)
    assert at.leakage_power(m, 75.0) == pytest.approx(4.0)
    assert at.leakage_power(m, 25.0) == pytest.approx(1.0)
    assert m.doubling_interval_k == 25.0  # default interval


def test_leakage_validation():
    with pytest.raises(ConfigError):
        LeakageModel(p0_w=-0.1, t0_c=20.0)
    with pytest.raises(ConfigError):
        LeakageModel(p0_w=0.1, t0_c=20.0, doubling_interval_k=0.0)
    with pytest.raises(ValueError):
        at.leakage_power(LeakageModel(1.0, 20.0), float("nan"))


# --- fixed point -----------------------------------------------------------

def test_fixed_point_decoupled_one_step(response64, apu, calibration):
    models = [LeakageModel(0.0, 50.0) for _ in range(apu.n_blocks)]
    p_dyn = np.linspace(0.5, 3.0, apu.n_blocks)
    t, p = at.fixed_point(response64, p_dyn, models, inlet_c=12.1)
    assert np.allclose(t.values, 12.1 + response64.r @ p_dyn, atol=1e-12)
    assert np.allclose(p.values, p_dyn)


def test_fixed_point_scalar_bisection_oracle():
    """1-block case against a bisection root-finder on
    t = inlet + r*(p_dyn + p0*2^((t-t0)/interval))."""
    r, inlet, p_dyn, p0, t0, interval = 2.0, 12.1, 5.0, 0.5, 50.0, 20.0
    rm = at.ResponseMatrix(
        r=np.array([[r]]), inlet_c=inlet, block_names=("b",), meta_hash="x"
    )
    model = LeakageModel(p0, t0, interval)

    def g(t):
        return inlet + r * (p_dyn + p0 * 2.0 ** ((t - t0) / interval)) - t

    lo, hi = inlet, 150.0
    assert g(lo) > 0 > g(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    t_star = 0.5 * (lo + hi)
    t, p = at.fixed_point(rm, np.array([p_dyn]), [model], inlet_c=inlet, tol_k=1e-6)
    assert t.values[0] == pytest.approx(t_star, abs=1e-4)
    assert p.values[0] == pytest.approx(p_dyn + at.leakage_power(model, t.values[0]), abs=1e-12)


def test_fixed_point_runaway():
    rm = at.ResponseMatrix(
        r=np.array([[3.0]]), inlet_c=12.1, block_names=("b",), meta_hash="x"
    )
    with pytest.raises(ThermalRunawayError):
        at.fixed_point(rm, np.array([5.0]), [LeakageModel(50.0, 20.0, 10.0)], inlet_c=12.1)


def test_fixed_point_initial_guess_independence(response64, apu, calibration):
    models = calibration.leakage_models(apu)
    p_dyn = np.linspace(0.2, 2.0, apu.n_blocks)
    tol = 0.01
    base, _ = at.fixed_point(response64, p_dyn, models, 12.1, tol_k=tol)
    for seed in (1, 2):
        rng = np.random.default_rng(seed)
        init = rng.uniform(12.1, 80.0, size=apu.n_blocks)
        t, _ = at.fixed_point(response64, p_dyn, models, 12.1, tol_k=tol, t_init=init)
        assert np.max(np.abs(t.values - base.values)) <= 2 * tol


def test_fixed_point_inlet_monotonicity(response64, apu, calibration):
    models = calibration.leakage_models(apu)
    p_dyn = np.linspace(0.2, 2.0, apu.n_blocks)
    t1, p1 = at.fixed_point(response64, p_dyn, models, 12.1, tol_k=1e-4)
    t2, p2 = at.fixed_point(response64, p_dyn, models, 15.1, tol_k=1e-4)
    assert np.all(t2.values >= t1.values - 1e-6)
    assert p2.total >= p1.total - 1e-9


def test_fixed_point_self_consistency(response64, apu, calibration):
    models = calibration.leakage_models(apu)
    p_dyn = np.linspace(0.2, 2.5, apu.n_blocks)
    t, p = at.fixed_point(response64, p_dyn, models, 12.1)
    leak = np.array([at.leakage_power(m, tc) for m, tc in zip(models, t.values)])
    assert np.max(np.abs(p.values - p_dyn - leak)) <= 1e-9


def test_leakage_breaks_linear_model(grid64, response64, apu, calibration):
    """With leakage coupling on, the temperature change from a one-block
    power perturbation departs from the linear prediction R * delta-p: the
    linear model is an approximation of the coupled system."""
    models = calibration.leakage_models(apu)
    base = np.linspace(0.5, 2.0, apu.n_blocks)
    delta = np.zeros(apu.n_blocks)
    delta[2] = 3.0
    t_base, _ = at.fixed_point(response64, base, models, 12.1, tol_k=1e-6)
    t_pert, _ = at.fixed_point(response64, base + delta, models, 12.1, tol_k=1e-6)
    measured = t_pert.values - t_base.values
    predicted = response64.r @ delta
    err = np.max(np.abs(measured - predicted)) / np.max(np.abs(predicted))
    assert err > 1e-3  # far above the 1e-9 linear-regime bound
    # while the purely conductive model stays linear on the same perturbation
    assert at.validate_model(grid64, base, delta_block=2, delta_w=3.0) < 1e-9


def test_fixed_point_parameter_validation(response64, apu):
    models = [LeakageModel(0.0, 50.0) for _ in range(apu.n_blocks)]
    with pytest.raises(ValueError):
        at.fixed_point(response64, np.zeros(apu.n_blocks), models, 12.1, damping=0.0)
    with pytest.raises(ValueError):
        at.fixed_point(response64, np.zeros(apu.n_blocks), models, 12.1, tol_k=-1.0)
    with pytest.raises(ValueError):
        at.fixed_point(response64, np.zeros(3), models, 12.1)


# --- runtime & energy ------------------------------------------------------

def test_runtime_cpu_frequency_scaling(calibration, workloads):
    serial = at.WorkloadProfile(
        name="serial", cpu_load=0.0, divergence_penalty=1.0,
        parallel_fraction=0.0, base_work_s=30.0,
    )
    r3 = at.runtime_model(serial, _decision(calibration, Device.CPU, 3.0))
    r14 = at.runtime_model(serial, _decision(calibration, Device.CPU, 1.4))
    assert r3 == pytest.approx(30.0)
    assert r14 / r3 == pytest.approx(3.0 / 1.4)


def test_runtime_cpu_ignores_host_core(calibration, workloads):
    w = workloads["SC"]
    runs = {
        at.runtime_model(w, _decision(calibration, Device.CPU, 3.0, host=h))
        for h in range(4)
    }
    assert len(runs) == 1


def test_runtime_nw_fixture(calibration, workloads):
    nw = workloads["NW"]
    rt_cpu = at.runtime_model(nw, _decision(calibration, Device.CPU, 3.0))
    rt_gpu = at.runtime_model(nw, _decision(calibration, Device.GPU, 3.0))
    assert rt_cpu == pytest.approx(130.0, abs=1.0)
    assert rt_gpu == pytest.approx(70.0, abs=1.0)


def test_runtime_cfd_spread_fixture(calibration, workloads):
    cfd = workloads["CFD"]
    rts = [
        at.runtime_model(cfd, _decision(calibration, dev, f))
        for dev in (Device.CPU, Device.GPU)
        for f in (1.4, 3.0)
    ]
    assert max(rts) / min(rts) == pytest.approx(10.5, rel=0.2)


def test_energy():
    assert at.energy(10.0, 50.0) == 500.0
    assert at.energy(0.0, 50.0) == 0.0
    assert at.energy(70.0, 40.0) == 2800.0
    with pytest.raises(ValueError):
        at.energy(-1.0, 5.0)


def test_workload_validation():
    with pytest.raises(ConfigError):
        at.WorkloadProfile("bad", cpu_load=1.5, divergence_penalty=1.0,
                           parallel_fraction=0.0, base_work_s=1.0)
    with pytest.raises(ConfigError):
        at.WorkloadProfile("bad", cpu_load=0.5, divergence_penalty=0.5,
                           parallel_fraction=0.0, base_work_s=1.0)
