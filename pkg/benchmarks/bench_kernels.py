"""Compare the compiled and pure-Python search kernels.

    python3 benchmarks/bench_kernels.py --sizes 50 100 200 --repeat 3

Three workloads per instance size: a short fixed-iteration ITS run, then
single move evaluations and neighborhood scans on its result. Both backends must
return the same search result, which the script checks.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from reevrp.harness import GeneratorConfig, generate_instance
from reevrp.its import ItsParams, kernels, solve_its
from reevrp.its.routeops import NEIGHBORHOODS, enumerate_moves
from reevrp.its.state import SearchState
from reevrp.model import MeritParams, solution_to_dict


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(inst, repeat, evals):
    mp = MeritParams.default(inst)
    t0 = time.perf_counter()
    sol, _ = solve_its(inst, ItsParams(time_limit=None, max_iterations=2, maxiter=20, rng_seed=0))
    its_s = time.perf_counter() - t0

    # near a local optimum most scans find nothing to improve and sweep the whole neighborhood
    st = SearchState.from_solution(sol, inst, mp)
    lens = st.lens.tolist()
    moves = [(k, m) for k in NEIGHBORHOODS for m in enumerate_moves(k, lens, st.n_routes, st.n_slots)]
    pick = np.random.default_rng(1).integers(len(moves), size=evals)
    sample = [moves[p] for p in pick]

    def evaluate():
        for kind, (a, i, b, j) in sample:
            kernels.move_delta(st, kind, a, i, b, j)

    def scan():
        for kind in NEIGHBORHOODS:
            kernels.scan(st, kind, [], -(2**62))

    return {
        "move_eval_us": best_of(evaluate, repeat) / evals * 1e6,
        "scan_ms": best_of(scan, repeat) * 1e3,
        "its_s": its_s,
        "moves_in_scan": len(moves),
    }, solution_to_dict(sol, inst)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--evals", type=int, default=20_000, help="move evaluations per timing")
    ap.add_argument("--json", help="also write the raw numbers here")
    args = ap.parse_args(argv)

    if kernels.compiled_backend is None:
        print("compiled kernels are not built; only the Python backend is timed", file=sys.stderr)
    backends = ["python"] + (["cython"] if kernels.compiled_backend is not None else [])
    start = kernels.BACKEND
    rows = []
    try:
        for n in args.sizes:
            inst = generate_instance(GeneratorConfig(n_superlocations=n, rng_seed=n))
            per = {}
            solutions = {}
            for name in backends:
                kernels.use(name)
                per[name], solutions[name] = workloads(inst, args.repeat, args.evals)
            if len({json.dumps(s) for s in solutions.values()}) != 1:
                raise SystemExit(f"backends disagree on the search result for n={n}")
            rows.append({"n": n, **{f"{b}_{k}": v for b, d in per.items() for k, v in d.items()}})
    finally:
        kernels.use(start)

    head = f"{'n':>5} {'backend':>8} {'eval (us)':>10} {'scan (ms)':>10} {'ITS (s)':>8}"
    print(head)
    print("-" * len(head))
    for row in rows:
        for b in backends:
            print(f"{row['n']:>5} {b:>8} {row[b + '_move_eval_us']:>10.2f} {row[b + '_scan_ms']:>10.1f} "
                  f"{row[b + '_its_s']:>8.2f}")
        if "cython" in backends:
            print(f"{'':>5} {'speedup':>8} {row['python_move_eval_us'] / row['cython_move_eval_us']:>9.1f}x "
                  f"{row['python_scan_ms'] / row['cython_scan_ms']:>9.1f}x {row['python_its_s'] / row['cython_its_s']:>7.1f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
