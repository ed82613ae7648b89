"""Compare the compiled and pure-Python graph kernels on random graphs.

    python3 benchmarks/bench_kernels.py --n 200 400 --p 0.02 0.1 --repeat 3

Each kernel runs through the public graph_metrics functions with the backend
swapped in, so the numbers include the same CSR plumbing real callers pay.
Results are checked for equality across backends before timing.
"""

import argparse
import timeit

from txconflict import kernels, synth
from txconflict import graph_metrics as gm

KERNELS = {
    "dsatur": lambda g, a: gm.dsatur_coloring(g)[0],
    "max_clique": lambda g, a: gm.clique_number(g),
    "longest_path_mc": lambda g, a: gm.longest_path_mc(g, a.mc_starts, seed=1),
    "components": lambda g, a: tuple(gm.connected_components(g)),
    "diameter": lambda g, a: gm.diameter(g),
}


def run_with(impl, fn, *args):
    saved = kernels._impl
    kernels._impl = impl
    try:
        return fn(*args)
    finally:
        kernels._impl = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[100, 300])
    ap.add_argument("--p", type=float, nargs="+", default=[0.02, 0.1])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--mc-starts", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--kernels", nargs="+", choices=sorted(KERNELS), default=sorted(KERNELS))
    args = ap.parse_args(argv)

    impls = kernels.backends()
    if "cython" not in impls:
        print("compiled backend not built; timing the pure-Python kernels only")
    names = sorted(impls)
    print(f"{'kernel':<16} {'n':>5} {'p':>6} " + " ".join(f"{b + ' s':>12}" for b in names) + f" {'speedup':>9}")
    for n in args.n:
        for p in args.p:
            g = synth.gnp(n, p, seed=args.seed)
            for name in args.kernels:
                fn = KERNELS[name]
                results = {b: run_with(impls[b], fn, g, args) for b in names}
                if len(set(results.values())) != 1:
                    raise SystemExit(f"backends disagree on {name} n={n} p={p}: {results}")
                times = {
                    b: min(timeit.repeat(lambda: run_with(impls[b], fn, g, args), number=1, repeat=args.repeat))
                    for b in names
                }
                speed = f"{times['python'] / times['cython']:8.1f}x" if "cython" in times else f"{'-':>9}"
                print(f"{name:<16} {n:>5} {p:>6.3f} " + " ".join(f"{times[b]:12.5f}" for b in names) + f" {speed}")


if __name__ == "__main__":
    main()
