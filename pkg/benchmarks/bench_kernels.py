"""Compiled vs interpreted kernels on the same integration workload.

Each mode runs in a fresh interpreter so the TRISHLAB_NUMBA flag takes
effect at import time. Compile time is measured separately from the
steady-state run.

    python benchmarks/bench_kernels.py [--t-end 1e4] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from trishlab import DynamicsSpec, F2, IntegratorConfig, PowerSchedule, State, Variant
from trishlab import integrate_second_order
from trishlab._accel import USE_NUMBA

t_end, repeat = float(sys.argv[1]), int(sys.argv[2])
spec = DynamicsSpec(Variant.TRISH, 3.0, 1.0)
cfg = IntegratorConfig(t_end=t_end, per_decade=50)
run = lambda: integrate_second_order(spec, F2(), PowerSchedule(1.5), State(1.0, [3.0, -2.0]), cfg,
                                     diagnostics=False)
t = time.perf_counter(); tr = run(); first = time.perf_counter() - t
times = []
for _ in range(repeat):
    t = time.perf_counter(); tr = run(); times.append(time.perf_counter() - t)
print(json.dumps({"numba": USE_NUMBA, "first": first, "best": min(times), "steps": tr.n_steps,
                  "x_end": tr.x[-1].tolist()}))
"""


def run_mode(flag, t_end, repeat):
    env = dict(os.environ, TRISHLAB_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKER, str(t_end), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=1e4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast = run_mode("1", args.t_end, args.repeat)
    slow = run_mode("0", args.t_end, args.repeat)
    print(f"workload: F2, trish, r=1.5, t in [1, {args.t_end:g}], {fast['steps']} accepted+rejected steps")
    print(f"{'mode':<12}{'first call [s]':>16}{'best of ' + str(args.repeat) + ' [s]':>16}")
    for name, r in (("numba", fast), ("numpy", slow)):
        print(f"{name:<12}{r['first']:>16.3f}{r['best']:>16.3f}")
    if fast["numba"]:
        print(f"speedup (steady state): {slow['best'] / fast['best']:.1f}x")
    else:
        print("numba unavailable; both rows ran interpreted")
    same = fast["x_end"] == slow["x_end"]
    print(f"endpoints bitwise identical: {same}")


if __name__ == "__main__":
    main()
