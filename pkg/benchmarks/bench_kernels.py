"""Time the compiled kernels against the numpy fallback on identical inputs.

    python3 benchmarks/bench_kernels.py [--rows 20000] [--nodes 100] [--levels 16] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from byzinf import kernels


def _inputs(rows, n, m, seed=0):
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(rng.dirichlet(np.ones(m), size=rows), axis=1)
    cdf[:, -1] = 1.0
    attack = np.cumsum(rng.dirichlet(np.ones(m), size=m), axis=1)
    attack[:, -1] = 1.0
    byz = rng.random(n) < 0.2
    return rng.random((rows, n)), cdf, byz, rng.random((rows, n)), attack


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--nodes", type=int, default=100)
    ap.add_argument("--levels", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if kernels.compiled_backend is None:
        print("compiled kernels not built; only the numpy fallback is available")
    backends = {"python": kernels.python_backend}
    if kernels.compiled_backend is not None:
        backends["cython"] = kernels.compiled_backend

    u_obs, cdf, byz, u_flip, attack = _inputs(args.rows, args.nodes, args.levels)
    centroids = np.linspace(-1.0, 1.0, args.levels)
    predicted = np.random.default_rng(1).normal(size=args.rows)
    results = {}
    print(f"rows={args.rows} nodes={args.nodes} levels={args.levels}, best of {args.repeat}")
    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name in ("draw_symbols", "symbol_counts", "cumulative_deviations"):
        times = {}
        for bname, b in backends.items():
            sym = b.draw_symbols(u_obs, cdf, byz, u_flip, attack)
            calls = {
                "draw_symbols": lambda: b.draw_symbols(u_obs, cdf, byz, u_flip, attack),
                "symbol_counts": lambda: b.symbol_counts(sym, args.levels),
                "cumulative_deviations": lambda: b.cumulative_deviations(sym, centroids, predicted),
            }
            times[bname] = min(timeit.repeat(calls[name], number=1, repeat=args.repeat))
            results[(name, bname)] = calls[name]()
        row = f"{name:<24}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) > 1:
            row += f"{times['python'] / times['cython']:>11.1f}x"
        print(row)
    if len(backends) > 1:
        same = all(
            np.array_equal(results[(k, "python")], results[(k, "cython")])
            for k in ("draw_symbols", "symbol_counts", "cumulative_deviations")
        )
        print("outputs bit-identical:", same)


if __name__ == "__main__":
    main()
