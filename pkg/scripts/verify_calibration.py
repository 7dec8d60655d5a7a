"""Quick standalone check that the shipped floorplan + calibration +
workload files reproduce every calibrated target. The full gate lives in
tests/test_acceptance.py; this script is the fast human-readable version.

    python scripts/verify_calibration.py
"""

import numpy as np

import aputherm as at
from aputherm.config import builtin_calibration, builtin_workloads
from aputherm.electrothermal import Device, ScheduleDecision
from aputherm.floorplan import CPU_DEVICE_CLASSES, GPU_DEVICE_CLASSES
from aputherm.schedule import ModelContext, Objective, affinity_sweep, enumerate_decisions, evaluate, rank

EXPECTED = {
    "CFD": ("1.4 GHz, CPU", "3.0 GHz, CPU-GPU", "1.4 GHz, CPU-GPU"),
    "BFS": ("1.4 GHz, CPU", "3.0 GHz, CPU", "3.0 GHz, CPU"),
    "NW": ("1.4 GHz, CPU", "3.0 GHz, CPU-GPU", "3.0 GHz, CPU-GPU"),
    "GE": ("1.4 GHz, CPU", "3.0 GHz, CPU-GPU", "1.4 GHz, CPU-GPU"),
    "SC": ("1.4 GHz, CPU", "3.0 GHz, CPU-GPU", "3.0 GHz, CPU-GPU"),
    "PF": ("1.4 GHz, CPU", "3.0 GHz, CPU", "3.0 GHz, CPU"),
}


def check(label, ok, detail=""):
    print(("PASS " if ok else "FAIL ") + label + ("  | " + detail if detail else ""))
    return bool(ok)


def main():
    fp = at.builtin_apu_floorplan()
    cal = builtin_calibration()
    wl = builtin_workloads()
    grid = at.build_grid(fp, 64, 64)
    rm = grid.response_matrix()
    ctx = ModelContext(fp, rm, cal)
    ok = True

    r = rm.r
    ok &= check("response entries positive", np.all(r > 0), f"min {r.min():.3f} K/W")
    ok &= check("self-heating dominates rows",
                all(r[i, i] >= r[i, j] for i in range(11) for j in range(11)))

    uk = wl["uKern"]
    d_c = ScheduleDecision(Device.CPU, cal.dvfs_for(3.0))
    d_g = ScheduleDecision(Device.GPU, cal.dvfs_for(3.0))
    p_c = at.dynamic_power(uk, d_c, fp, cal.capacitance).values
    p_g = at.dynamic_power(uk, d_g, fp, cal.capacitance).values
    cpu_dev = sum(p_c[i] for i, b in enumerate(fp.blocks) if b.device_class in CPU_DEVICE_CLASSES)
    gpu_dev = sum(p_g[i] for i, b in enumerate(fp.blocks) if b.device_class in GPU_DEVICE_CLASSES)
    ok &= check("uKern device fixtures 20.5/19 W",
                abs(cpu_dev - 20.5) < 0.1 and abs(gpu_dev - 19.0) < 0.1,
                f"{cpu_dev:.2f}/{gpu_dev:.2f} W")
    r_c, r_g = evaluate(uk, d_c, ctx), evaluate(uk, d_g, ctx)
    ratio = (r_c.peak_temp_c - ctx.inlet_c) / (r_g.peak_temp_c - ctx.inlet_c)
    ok &= check("uKern peak-rise ratio >= 1.5", ratio >= 1.5, f"{ratio:.3f}")

    cells_ok = True
    for name, want in EXPECTED.items():
        res = [evaluate(wl[name], d, ctx) for d in enumerate_decisions(ctx, host_affinity=False)]
        got = tuple(rank(res, o)[0].decision.label()
                    for o in (Objective.MIN_POWER, Objective.MIN_RUNTIME, Objective.MIN_ENERGY))
        if got != want:
            print(f"     {name}: got {got}, want {want}")
            cells_ok = False
        if name == "CFD":
            pw = [x.total_power_w for x in res]
            tp = [x.peak_temp_c for x in res]
            rt = [x.runtime_s for x in res]
    ok &= check("optimal-decision table (18 cells)", cells_ok)
    ok &= check("CFD spreads", 18.72 <= max(pw) - min(pw) <= 28.08
                and 32.4 <= max(tp) - min(tp) <= 48.6
                and 8.4 <= max(rt) / min(rt) <= 12.6,
                f"dP {max(pw)-min(pw):.1f} W, dT {max(tp)-min(tp):.1f} K, "
                f"rt ratio {max(rt)/min(rt):.2f}")

    sweep = affinity_sweep(wl["SC"], [0, 1, 2, 3], ctx)
    pw = [x.total_power_w for x in sweep]
    tp = [x.peak_temp_c for x in sweep]
    ok &= check("affinity power strictly increasing",
                all(a < b for a, b in zip(pw, pw[1:])),
                " ".join(f"{v:.2f}" for v in pw))
    ok &= check("affinity C3-C0 deltas", 2.87 <= pw[3] - pw[0] <= 5.33
                and 7.7 <= tp[3] - tp[0] <= 14.3,
                f"+{pw[3]-pw[0]:.2f} W, +{tp[3]-tp[0]:.2f} K")
    print("\nall targets met" if ok else "\nTARGETS MISSED")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
