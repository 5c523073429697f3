"""Compiled kernels versus the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times the normal-variate stream, a single 49-asset long-only solve, and one
full split-sample experiment per backend, and checks that both backends give
the same answer.
"""
import argparse
import timeit

import numpy as np

from rmtfof import _backend
from rmtfof.portfolio import frontier, min_variance_weights, split_experiment
from rmtfof.synthetic import factor_panel, taxonomy_spec


def problem(seed=0, n=49, t=53):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, t))
    S = g @ g.T / t
    m = rng.normal(0.01, 0.02, n)
    return S, m


def cases():
    S, m = problem()
    target = float(np.quantile(m, 0.6))
    panel, _ = factor_panel(taxonomy_spec(seed=1))
    return {
        "normals (1e6 draws)": lambda k: k.normals(0, 0, 1_000_000),
        "QP, N=49, one target": lambda k: min_variance_weights(S, m, target).weights,
        "frontier, N=49, 50 targets": lambda k: np.array([p.risk for p in frontier(S, m, 50)]),
        "split experiment, N=49, T=105": lambda k: split_experiment(panel, with_alternate=False).rp_cleaned_mean,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = _backend.available_backends()
    if "cython" not in backends:
        print("compiled kernels are not built; only the fallback is timed")
    original = _backend.kernels
    rows = []
    try:
        for name, fn in cases().items():
            timings, results = {}, {}
            for label, kernels in sorted(backends.items()):
                _backend.kernels = kernels
                results[label] = fn(kernels)
                timings[label] = min(timeit.repeat(lambda: fn(kernels), number=1, repeat=args.repeat))
            same = ""
            if len(results) == 2:
                a, b = (np.asarray(v, dtype=float) for v in results.values())
                same = "identical" if np.array_equal(a, b) else f"max diff {np.max(np.abs(a - b)):.1e}"
            rows.append((name, timings, same))
    finally:
        _backend.kernels = original

    labels = sorted(backends)
    print(f"{'case':32s}" + "".join(f"{l:>12s}" for l in labels) + f"{'speedup':>10s}  agreement")
    for name, t, same in rows:
        speed = f"{t['python'] / t['cython']:9.1f}x" if len(t) == 2 else f"{'-':>10s}"
        print(f"{name:32s}" + "".join(f"{t[l] * 1e3:10.2f}ms" for l in labels) + f"{speed}  {same}")


if __name__ == "__main__":
    main()
