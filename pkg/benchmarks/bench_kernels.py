"""Compare the compiled and pure-numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times the simplex least-squares solver and the bootstrap refit kernel on
both backends, checks that they agree, and prints a small table.
"""

import argparse
import time

import numpy as np

from postshock import kernels
from postshock.bootstrap import _DonorModel
from postshock.panel import fit_donor
from postshock.simulate import SimConfig, simulate_pool


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def simplex_case(backend, problems):
    return [kernels.simplex_lsq(A, b, backend=backend)[0] for A, b in problems]


def bootstrap_case(backend, model, draws):
    return model.replicate(draws, backend=backend)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    g = np.random.default_rng(args.seed)
    problems = [(g.normal(size=(25, 10)), g.normal(size=25)) for _ in range(200)]

    pool = simulate_pool(SimConfig(n=1, k=1, seed=args.seed), 0)
    donor = pool.donors[0]
    model = _DonorModel(donor, fit_donor(donor))
    draws = g.integers(0, model.pool.size, size=(500, model.F.shape[0]))

    cases = {
        "simplex_lsq (200 problems, n=10, p=25)": lambda b: simplex_case(b, problems),
        f"bootstrap_alpha (500 replicates, T={model.F.shape[0]})": lambda b: bootstrap_case(b, model, draws),
    }
    print(f"backends available: {', '.join(backends)}")
    print(f"{'kernel':<44} " + " ".join(f"{b:>10}" for b in backends) + "   speedup   max |diff|")
    for name, fn in cases.items():
        timings, outs = {}, {}
        for b in backends:
            timings[b], outs[b] = best_of(lambda: fn(b), args.repeat)
        row = f"{name:<44} " + " ".join(f"{timings[b] * 1e3:>8.1f}ms" for b in backends)
        if len(backends) == 2:
            a, c = (np.asarray(outs[b], dtype=float) for b in backends)
            speed = timings["python"] / timings["cython"]
            row += f"   {speed:>6.1f}x   {np.max(np.abs(a - c)):.1e}"
        print(row)


if __name__ == "__main__":
    main()
