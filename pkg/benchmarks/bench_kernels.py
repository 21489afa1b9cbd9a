#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the per-call kernel primitives (FK, FK+Jacobian, pose error, joint
integration) and a full closed-loop rollout (PID -> diff-IK -> sim) on the
7-DOF model. Run after building the extension:

    python3 benchmarks/bench_kernels.py [--ticks 2500]
"""

import argparse
import time

import numpy as np

from cobotkit._backend import available_backends
from cobotkit.controllers import ControllerConfig, PidState, pid_step, pose_error, select_mode
from cobotkit.kinematics import diff_ik, ee_pose
from cobotkit.robot import HOME_SEVEN_DOF, default_seven_dof
from cobotkit.sim import SimWorld


def time_fn(fn, n):
    fn()  # warm-up
    t0 = time.perf_counter()
    for _ in range(n):
        fn()
    return (time.perf_counter() - t0) / n


def bench_kernels(kernels, model, n=20_000):
    p = model.packed
    rng = np.random.default_rng(0)
    q = rng.uniform(p["lo"], p["hi"])
    qc, tc = np.array([1.0, 0, 0, 0]), np.zeros(3)
    dq = rng.uniform(-1, 1, model.n)
    return {
        "fk_ee": time_fn(lambda: kernels.fk_ee(p["types"], p["axes"], p["oq"], p["ot"], p["eq"], p["et"], q), n),
        "fk_jacobian": time_fn(
            lambda: kernels.fk_jacobian(p["types"], p["axes"], p["oq"], p["ot"], p["eq"], p["et"], q), n
        ),
        "pose_error6": time_fn(lambda: kernels.pose_error6(qc, tc, qc, tc), n),
        "integrate": time_fn(lambda: kernels.integrate_joints(q, dq, 0.004, p["lo"], p["hi"], p["vel"]), n),
    }


def bench_closed_loop(model, ticks):
    """Full rollout against one fixed target; uses whatever backend is active."""
    target = ee_pose(model, HOME_SEVEN_DOF + 0.3)
    world = SimWorld(model, q0=HOME_SEVEN_DOF)
    cfg = ControllerConfig()
    pid = PidState.initial()
    t0 = time.perf_counter()
    for _ in range(ticks):
        e = pose_error(target, world.ee_pose())
        mode = select_mode(e, cfg.scheduler, pid.mode)
        if mode != pid.mode:
            pid = PidState.initial(mode)
        twist, pid = pid_step(pid, e, world.dt, cfg.scheduler.gains(mode), cfg)
        world.step(diff_ik(model, world.joints.positions, twist).dq)
    return (time.perf_counter() - t0) / ticks


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--ticks", type=int, default=2500, help="closed-loop rollout length")
    parser.add_argument("--calls", type=int, default=20_000, help="per-kernel call count")
    args = parser.parse_args()

    model = default_seven_dof()
    backends = available_backends()
    names = [b.BACKEND_NAME for b in backends]
    print(f"backends available: {', '.join(names)}\n")

    rows = {}
    for backend in backends:
        rows[backend.BACKEND_NAME] = bench_kernels(backend, model, args.calls)

    keys = list(next(iter(rows.values())).keys())
    header = f"{'kernel':<14}" + "".join(f"{n:>14}" for n in names)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for key in keys:
        line = f"{key:<14}" + "".join(f"{rows[n][key]*1e6:>11.2f} us" for n in names)
        if len(backends) > 1:
            line += f"{rows[names[1]][key] / rows[names[0]][key]:>9.1f}x"
        print(line)

    # closed loop: one subprocess per backend so the import-time dispatch
    # actually selects the kernel set
    import os
    import subprocess
    import sys

    print(f"\nclosed loop ({args.ticks} ticks, PID -> diff-IK -> sim):")
    results = {}
    for name in names:
        env = dict(os.environ)
        if name == "python":
            env["COBOTKIT_PURE_PYTHON"] = "1"
        else:
            env.pop("COBOTKIT_PURE_PYTHON", None)
        out = subprocess.run(
            [sys.executable, __file__, "--closed-loop-only", "--ticks", str(args.ticks)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        per_tick = float(out.stdout.strip())
        results[name] = per_tick
        print(f"  {name:<10} {per_tick*1e6:>9.1f} us/tick  ({1.0/per_tick:,.0f} Hz capacity)")
    if len(results) == 2:
        print(f"  speedup    {results['python']/results['compiled']:.1f}x")


if __name__ == "__main__":
    import sys

    if "--closed-loop-only" in sys.argv:
        ticks = int(sys.argv[sys.argv.index("--ticks") + 1]) if "--ticks" in sys.argv else 2500
        print(bench_closed_loop(default_seven_dof(), ticks))
    else:
        main()
