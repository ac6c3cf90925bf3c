"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_backends.py [--repeat 3] [--size 200000]

Each backend runs in its own interpreter because the choice is made at
import time (ORBITHERM_NO_NUMBA=1 selects numpy).  Prints one line per
kernel with the best-of-N wall time for both backends and the speedup.
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from orbitherm import kernels
from orbitherm._accel import backend
from orbitherm.geometry import flow_array
from orbitherm.groups import SchottkyGroup, hyperbolic_from_axis, reduce_array
from orbitherm.potentials import Bump, ClosedOrbit, Sampler
from orbitherm.thermo import PeriodicOrbitTable, flow_pressure

size, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
G = SchottkyGroup([hyperbolic_from_axis(-3, -1, 3.0), hyperbolic_from_axis(1, 3, 3.0)])

def best(fn):
    fn()  # warm-up (jit compile, caches)
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter(); fn(); ts.append(time.perf_counter() - t0)
    return min(ts)

z = rng.uniform(-4, 4, size) + 1j * np.exp(rng.uniform(-6, 1, size))
th = rng.uniform(0, 2 * np.pi, size)

def windows(n):
    a = rng.uniform(-4, 4, n) + 1j * np.exp(rng.uniform(-4, 2, n))
    b, _ = flow_array(a, rng.uniform(0, 2 * np.pi, n), 1.0)
    return a, b

c0, c1 = windows(size // 10)
q0, q1 = windows(size // 10)
idx = kernels.CandidateIndex(c0, c1)

def table():
    t = PeriodicOrbitTable(G, 7, Sampler(G, step=0.05), n_min=1)
    phi = Bump(ClosedOrbit("a"))
    t.populate(phi)
    flow_pressure(t, phi, 1.0)

out = {"backend": backend(),
       "reduce_points": best(lambda: reduce_array(z, G)),
       "flow_array": best(lambda: flow_array(z, th, 0.7)),
       "nearest_q": best(lambda: kernels.nearest_q(q0, q1, idx)),
       "orbit_table_n7": best(table)}
print(json.dumps(out))
"""


def run(no_numba, size, repeat):
    env = dict(os.environ)
    env.pop("ORBITHERM_NO_NUMBA", None)
    if no_numba:
        env["ORBITHERM_NO_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKER, str(size), str(repeat)],
                          capture_output=True, text=True, env=env, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", type=int, default=200_000)
    args = ap.parse_args()
    nb = run(False, args.size, args.repeat)
    np_ = run(True, args.size, args.repeat)
    print(f"{'kernel':<16}{nb['backend']:>12}{np_['backend']:>12}{'speedup':>10}")
    for k in nb:
        if k == "backend":
            continue
        print(f"{k:<16}{nb[k]:>11.4f}s{np_[k]:>11.4f}s{np_[k] / nb[k]:>9.1f}x")


if __name__ == "__main__":
    main()
