"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the same workloads through both backends and prints a timing table:
per-gate statevector updates, batched Pauli-sum expectations, and a full
shot-sampling workload on the compiled 3x3 program. Invoke with

    python benchmarks/bench_kernels.py [--shots 2000] [--repeats 5]

The selected default backend (PEPSQC_PURE_NUMPY aware) is restored on exit.
"""

import argparse
import time

import numpy as np

from pepsqc import LatticeShape, boundary_loop, compile_parameterized, estimate_observable
from pepsqc import kernels
from pepsqc.pauli import expectation, wen_hamiltonian, magnetic_term
from pepsqc.variational import energy


def time_call(fn, repeats):
    fn()  # warm up (numba compilation, einsum paths)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_apply_gate(n=5, k=3, iters=20000):
    rng = np.random.default_rng(0)
    state = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    state /= np.linalg.norm(state)
    q, _ = np.linalg.qr(rng.normal(size=(1 << k, 1 << k)) + 1j * rng.normal(size=(1 << k, 1 << k)))
    qubits = (4, 1, 3)[:k]

    def work():
        s = state.copy()
        for _ in range(iters):
            kernels.apply_gate(s, q, qubits, n)

    return work


def bench_pauli_sum(iters=3000):
    rng = np.random.default_rng(1)
    state = rng.normal(size=512) + 1j * rng.normal(size=512)
    state /= np.linalg.norm(state)
    h = wen_hamiltonian(3, 3) + magnetic_term(3, 3, 0.4)

    def work():
        for _ in range(iters):
            expectation(state, h)

    return work


def bench_energy(iters=200):
    theta = np.random.default_rng(2).uniform(-np.pi, np.pi, 144)

    def work():
        for _ in range(iters):
            energy(theta, 0.4)

    return work


def bench_shots(shots):
    theta = np.random.default_rng(3).uniform(-np.pi, np.pi, 144)
    prog = compile_parameterized(LatticeShape(3, 3, 1), theta)
    obs = boundary_loop()

    def work():
        estimate_observable(prog, obs, shots, 0)

    return work


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--shots", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    workloads = [
        ("apply_gate 3q x20k (n=5)", bench_apply_gate()),
        ("pauli_sum 31 terms x3k (n=9)", bench_pauli_sum()),
        ("energy objective x200", bench_energy()),
        (f"estimate_observable {args.shots} shots", bench_shots(args.shots)),
    ]

    default = kernels.BACKEND
    backends = [b for b in ("numba", "numpy") if b in kernels.IMPLEMENTATIONS]
    results = {}
    try:
        for backend in backends:
            kernels.select_backend(backend)
            for name, work in workloads:
                results[(backend, name)] = time_call(work, args.repeats)
    finally:
        kernels.select_backend(default)

    width = max(len(name) for name, _ in workloads)
    header = f"{'workload':<{width}}  " + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, _ in workloads:
        row = f"{name:<{width}}  "
        times = [results[(b, name)] for b in backends]
        row += "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(backends) == 2:
            row += f"{times[1] / times[0]:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
