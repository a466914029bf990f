"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--reps 20000] [--repeat 3]

Times the run-length simulator and the noncentral chi-square fill of an
m = 30 transition matrix on each available backend and checks that both
produce the same numbers.
"""

import argparse
import time

import numpy as np

from codachart.kernels import compiled_available, get_backend


def _best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_simulation(impl, reps, repeat):
    # in-control VSI chart, p = 3: ~200 samples per run
    args = (2, 0.2, 9.6556, 2.0, 0.1, 1.52, 0.0, 7, 0, reps, 10 ** 7)
    return _best_of(lambda: impl.simulate_runs(*args), repeat)


def bench_ncx2(impl, repeat):
    m, r, ucl = 30, 0.2, 0.4
    g = 2 * ucl / (2 * m + 1)
    idx = np.arange(m + 1)
    lam = ((1 - r) * idx * g / r) ** 2
    edges = ((idx + 0.5) * g / r) ** 2

    def fill():
        return impl.ncx2_cdf(edges[None, :], 2.0, lam[:, None])[0]

    return _best_of(fill, max(repeat, 20))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = ["python"] + (["compiled"] if compiled_available() else [])
    results = {}
    for name in names:
        impl = get_backend(name)
        t_sim, sim = bench_simulation(impl, args.reps, args.repeat)
        t_chi, chi = bench_ncx2(impl, args.repeat)
        results[name] = (t_sim, t_chi, sim, chi)
        samples = int(sim[1].sum())
        print(f"{name:>9}  simulate {args.reps} runs ({samples} samples): {t_sim:8.3f} s "
              f"({samples / t_sim / 1e6:6.2f} M samples/s)   ncx2 31x31 fill: {t_chi * 1e3:7.2f} ms")
    if len(results) == 2:
        py, cc = results["python"], results["compiled"]
        same = all(np.array_equal(a, b) for a, b in zip(py[2], cc[2]))
        chi_diff = float(np.abs(py[3] - cc[3]).max())
        print(f"speedup   simulate x{py[0] / cc[0]:.1f}   ncx2 x{py[1] / cc[1]:.1f}")
        print(f"agreement run lengths bit-identical={same}   ncx2 max |diff| {chi_diff:.1e}")
    else:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
