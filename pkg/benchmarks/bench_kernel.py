"""Benchmark: compiled swing kernel vs the NumPy fallback.

Times the dominant workload (fixed-step RK4 over the reduced network) for a
few system sizes and horizons, then a full simulate() call on the shipped
four-machine fixture.  Run from the repository root:

    python3 benchmarks/bench_kernel.py [--repeats N]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from lyapstab import _swing_numpy  # noqa: E402
from lyapstab.network import FaultSpec, load_network_file  # noqa: E402
from lyapstab.simulator import simulate  # noqa: E402

try:
    from lyapstab import _swing_core
except ImportError:
    _swing_core = None

NETWORKS = Path(__file__).resolve().parent.parent / "networks"


def synthetic_system(n, seed=0):
    rng = np.random.default_rng(seed)
    delta = rng.normal(0.0, 0.3, n)
    omega = np.zeros(n)
    minv = 1.0 / rng.uniform(0.01, 0.1, n)
    damp = rng.uniform(0.01, 0.08, n)
    pm = rng.normal(0.0, 0.4, n)
    emf = rng.uniform(1.0, 1.1, n)
    b = rng.uniform(0.5, 2.0, (n, n))
    B = -(b + b.T) / 2.0
    np.fill_diagonal(B, -B.sum(axis=1) + np.diag(B))
    G = np.zeros((n, n))
    return delta, omega, minv, damp, pm, emf, G, B


def time_kernel(backend, n, seconds, repeats):
    h = 1.0 / 1200.0
    n_blocks = int(seconds * 120)
    best = np.inf
    for _ in range(repeats):
        delta, omega, minv, damp, pm, emf, G, B = synthetic_system(n)
        out_d = np.empty((n_blocks, n))
        out_w = np.empty((n_blocks, n))
        start = time.perf_counter()
        backend.rk4_swing(delta, omega, minv, damp, pm, emf, G, B, h,
                          n_blocks, 10, out_d, out_w)
        best = min(best, time.perf_counter() - start)
    return best


def time_simulate(repeats):
    model = load_network_file(NETWORKS / "fourmachine.net")
    fault = FaultSpec(bus="6", t_fault=0.1, t_clear=0.2,
                      removed_branches=("T56B",))
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        simulate(model, fault, dt=1.0 / 120.0, horizon=12.0)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _swing_core is None:
        print("compiled kernel not available; showing the fallback only")
    backends = [("numpy", _swing_numpy)]
    if _swing_core is not None:
        backends.insert(0, ("compiled", _swing_core))

    print(f"{'workload':<28}" + "".join(f"{name:>12}" for name, _ in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for n, seconds in ((2, 10.0), (4, 10.0), (10, 10.0), (4, 60.0)):
        label = f"rk4 n={n}, {seconds:.0f} s horizon"
        times = [time_kernel(be, n, seconds, args.repeats)
                 for _, be in backends]
        row = f"{label:<28}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>11.1f}x"
        print(row)

    print()
    active = "compiled" if _swing_core is not None else "numpy"
    t = time_simulate(args.repeats)
    print(f"simulate() four-machine 12 s with the active kernel "
          f"({active}): {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
