"""Compare the compiled and numpy Monte Carlo kernels.

Usage: ``python3 benchmarks/bench_kernels.py [--T 900] [--D 1] [--sims 5000] [--repeat 3]``
"""

import argparse
import math
import timeit

import numpy as np

from dgcm import kernels


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=int, default=900, help="path length")
    ap.add_argument("--D", type=int, nargs="+", default=[1, 3])
    ap.add_argument("--sims", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    rng = np.random.default_rng(0)
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(backends)}")
    print(f"{'D':>3} {'stat':>18} " + " ".join(f"{b:>12}" for b in backends) + "   speedup")
    for D in args.D:
        gen = rng.standard_normal((args.T, D))
        normals = rng.standard_normal((args.sims, args.T))
        for p_inf in (False, True):
            for full in (False, True):
                times, outs = {}, {}
                for b in backends:
                    fn = lambda: kernels.mc_statistics(gen, normals, p_inf, full, b)  # noqa: E731
                    outs[b] = fn()
                    times[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
                if len(outs) == 2:
                    assert np.allclose(outs["compiled"], outs["python"], rtol=1e-10, atol=1e-12)
                label = f"{'full' if full else 'max'}/{'inf' if p_inf else '2'}"
                speed = times["python"] / times["compiled"] if "compiled" in times else math.nan
                print(f"{D:>3} {label:>18} " + " ".join(f"{times[b]:>11.4f}s" for b in backends)
                      + f"   {speed:6.1f}x")


if __name__ == "__main__":
    main()
