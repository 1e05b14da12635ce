"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--qubits 10 14 18] [--repeat 5] [--threads 1]

Prints the median time per call for each kernel and register size, then the
same for complete term circuits, with the speedup of the compiled kernels
over the fallback.
"""
import argparse
import statistics
import time

import numpy as np

from ptq import sim
from ptq.builders import build_term_circuit
from ptq.system import random_system


def random_state(nq, rng):
    psi = rng.normal(size=2 ** nq) + 1j * rng.normal(size=2 ** nq)
    return psi / np.linalg.norm(psi)


def time_call(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def bench(nq, n_system, repeat, threads, rng):
    target = nq - 1
    mask = (1 << n_system) - 1           # fully controlled on the system register
    values = mask & 0b1010101010101010
    Q, _ = np.linalg.qr(rng.normal(size=(2 ** n_system,) * 2) + 1j * rng.normal(size=(2 ** n_system,) * 2))
    Q = np.ascontiguousarray(Q)
    psi = random_state(nq, rng)
    rows = {}
    for name, k in sorted(sim.KERNELS.items()):
        state = psi.copy()
        scratch = np.empty_like(state)
        # warm the fallback's index cache so steady-state cost is measured
        k.apply_mcry(state, target, mask, values, 0.3, threads)
        rows[name] = {
            "mcry": time_call(lambda: k.apply_mcry(state, target, mask, values, 0.3, threads), repeat),
            "mcry0": time_call(lambda: k.apply_mcry(state, target, 0, 0, 0.3, threads), repeat),
            "system": time_call(lambda: k.apply_system(state, Q, scratch, threads), repeat),
        }
    return rows


def bench_circuits(repeat):
    """Whole term circuits, the workload the estimators actually run."""
    print(f"\n{'circuit':>14} " + " ".join(f"{n:>12}" for n in sorted(sim.KERNELS)) + "  speedup")
    for N, term in ((2, "eps3"), (3, "eps4"), (4, "eps4"), (4, "m_a")):
        tc = build_term_circuit(random_system(N, 0), term)
        start = tc.layout.index(tc.target_level)
        t = {name: time_call(lambda: sim.run(tc.circuit, start, k, check=False), repeat)
             for name, k in sorted(sim.KERNELS.items())}
        cells = " ".join(f"{t[n] * 1e6:10.1f}us" for n in sorted(t))
        speed = f"{t['python'] / t['cython']:7.2f}x" if "cython" in t else ""
        print(f"{f'N={N} {term}':>14} {cells}  {speed}")


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--qubits", type=int, nargs="+", default=[8, 12, 16, 20])
    p.add_argument("--system", type=int, default=4, help="system register size N")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()
    rng = np.random.default_rng(0)
    print(f"kernels available: {sorted(sim.KERNELS)}  (default: {sim.BACKEND})")
    print(f"{'qubits':>6} {'op':>7} " + " ".join(f"{n:>12}" for n in sorted(sim.KERNELS)) + "  speedup")
    for nq in args.qubits:
        rows = bench(nq, min(args.system, nq - 1), args.repeat, args.threads, rng)
        for op in ("mcry", "mcry0", "system"):
            cells = " ".join(f"{rows[n][op] * 1e6:10.1f}us" for n in sorted(rows))
            speed = ""
            if "cython" in rows:
                speed = f"{rows['python'][op] / rows['cython'][op]:7.2f}x"
            print(f"{nq:>6} {op:>7} {cells}  {speed}")
    bench_circuits(args.repeat)


if __name__ == "__main__":
    main()
