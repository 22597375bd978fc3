"""Command line entry point.

Exit codes: 0 success, 2 infeasible, 3 invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys
from decimal import Decimal
from dataclasses import replace
from pathlib import Path

from .model import (
    InvalidInstance,
    ReevrpError,
    check_feasibility,
    dumps_instance,
    load_instance,
    metrics,
    micro_usd,
    solution_cost,
    solution_from_dict,
    solution_to_dict,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INVALID = 3


class InvalidInput(Exception):
    pass


def _emit(doc, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc


def _instance(path: str):
    try:
        return load_instance(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc


def _usd(cost_units) -> str:
    # cost units are 1e-8 USD, so eight decimals are exact
    return f"{Decimal(int(cost_units)).scaleb(-8):.8f}"


# -- generate -----------------------------------------------------------------

def cmd_generate(args) -> int:
    from .harness import GeneratorConfig, generate_instance

    cfg = GeneratorConfig(
        n_superlocations=None if args.customers else args.n,
        n_customers=args.n if args.customers else None,
        area=args.area,
        sigma=args.sigma,
        max_cluster=args.max_cluster,
        rng_seed=args.seed,
        m_hybrid=args.m_hybrid,
        m_conventional=args.m_conventional,
        capacity=args.capacity,
        max_duration_h=args.max_duration_h,
        ev_range_mi=args.ev_range_mi,
        bev_mode=args.bev,
    )
    inst = generate_instance(cfg)
    text = dumps_instance(inst)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


# -- solve --------------------------------------------------------------------

def _its_params(args):
    from .its import ItsParams

    block = _read_json(args.params) if args.params else {}
    allowed = {"rcl", "tenure", "maxiter", "restart", "perturb_mi"}
    unknown = set(block) - allowed
    if unknown:
        raise InvalidInput(f"unknown ITS parameters: {sorted(unknown)}")
    perturb = block.get("perturb_mi")
    return ItsParams(
        rcl=int(block.get("rcl", 3)),
        tenure=int(block.get("tenure", 20)),
        maxiter=int(block.get("maxiter", 100)),
        restart=int(block.get("restart", 5)),
        perturb=None if perturb is None else int(round(float(perturb) * 100)),
        time_limit=args.time_limit,
        max_iterations=args.max_iterations,
        rng_seed=args.seed,
    )


def cmd_solve(args) -> int:
    inst = _instance(args.instance)
    if args.algorithm == "exact":
        from .exact import Infeasible, solve_exact

        try:
            sol, value = solve_exact(inst, max_n=args.max_n)
        except Infeasible as exc:
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        _emit(solution_to_dict(sol, inst, certified=True), args.out)
        return EXIT_OK

    from .its import NoFeasibleSolutionFound, solve_its

    base = _its_params(args)
    best = None
    traces = []
    for k in range(args.seeds):
        params = replace(base, rng_seed=base.rng_seed + k)
        try:
            sol, trace = solve_its(inst, params)
        except NoFeasibleSolutionFound:
            traces.append(None)
            continue
        traces.append(trace)
        value = solution_cost(sol, inst)
        if best is None or value < best[0]:
            best = (value, sol, params.rng_seed)
    if args.trace:
        lines = ["seed," + "iteration,best_merit_micro_usd,feasible"]
        for k, tr in enumerate(traces):
            if tr is None:
                continue
            for row in tr.to_csv().splitlines()[1:]:
                lines.append(f"{base.rng_seed + k},{row}")
        Path(args.trace).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if best is None:
        print("infeasible: no feasible solution found", file=sys.stderr)
        return EXIT_INFEASIBLE
    value, sol, seed = best
    _emit(solution_to_dict(sol, inst, certified=False, seed=seed), args.out)
    return EXIT_OK


# -- evaluate -----------------------------------------------------------------

def cmd_evaluate(args) -> int:
    inst = _instance(args.instance)
    sol = solution_from_dict(_read_json(args.solution), inst)
    report = check_feasibility(sol, inst)
    doc = {
        "feasible": report.feasible,
        "objective_micro_usd": micro_usd(solution_cost(sol, inst)),
        "violations": report.describe(),
    }
    if report.feasible:
        m = metrics(sol, inst)
        doc["metrics"] = {
            "vmt_centimiles": m.vmt,
            "vht_s": m.vht,
            "ev_centimiles": m.ev_miles,
            "extender_centimiles": m.extender_miles,
            "cv_centimiles": m.cv_miles,
            "n_hybrid": m.n_hybrid,
            "n_conventional": m.n_conventional,
            "packages": m.packages,
            "capacity_utilization": m.capacity_utilization,
        }
    _emit(doc, args.out)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


# -- price / separate ---------------------------------------------------------

def cmd_price(args) -> int:
    from .model import Subtype
    from .pricing import InvalidDuals, NgSets, duals_from_dict, price

    inst = _instance(args.instance)
    try:
        duals = duals_from_dict(_read_json(args.duals), inst.n)
    except (InvalidDuals, ValueError) as exc:
        raise InvalidInput(str(exc)) from exc
    ng = NgSets.full(inst) if args.ng_size == 0 else NgSets.nearest(inst, args.ng_size)
    subtypes = [Subtype[s] for s in args.subtype]
    doc = {}
    for k in subtypes:
        routes = price(inst, k, duals, ng, mode=args.mode)
        doc[k.name] = [
            {"route": list(p.route.customers), "reduced_cost_usd": _usd(p.reduced_cost)}
            for p in routes[: args.limit]
        ]
    _emit(doc, args.out)
    return EXIT_OK


def cmd_separate(args) -> int:
    from .model import Subtype
    from .pricing import FlowGraph, fractional_from_list, separate_ipec, separate_rci

    inst = _instance(args.instance)
    try:
        cols = fractional_from_list(_read_json(args.fractional))
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidInput(f"malformed fractional solution: {exc}") from exc
    for c in cols:
        if any(not 1 <= v <= inst.n for v in c.customers):
            raise InvalidInput("fractional column refers to nodes that are not customers")
    doc = {}
    if "ipec" in args.cuts:
        res = separate_ipec(FlowGraph.from_columns(cols, inst.n), inst)
        doc["ipec"] = {
            "paths": [{"route": list(p.customers), "violation": str(p.violation)} for p in res.paths],
            "extensions": res.extensions,
            "cap_hit": res.cap_hit,
        }
    if "rci" in args.cuts:
        flow_all = FlowGraph.from_columns(cols, inst.n, subtypes=tuple(Subtype))
        doc["rci"] = [{"set": sorted(S), "violation": str(v)} for S, v in separate_rci(flow_all, inst)]
    _emit(doc, args.out)
    return EXIT_OK


# -- sweep --------------------------------------------------------------------

def cmd_sweep(args) -> int:
    from .harness import GeneratorConfig, load_grid, run_sweep

    overrides = {}
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    if args.time_limit is not None:
        overrides["time_limit"] = args.time_limit
    if args.max_iterations is not None:
        overrides["max_iterations"] = args.max_iterations
        if args.time_limit is None:
            overrides["time_limit"] = None
    if args.algorithm:
        overrides["algorithm"] = args.algorithm
    try:
        grid = load_grid(args.grid, **overrides)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise InvalidInput(f"cannot load grid {args.grid}: {exc}") from exc
    if args.instance:
        source = _instance(args.instance)
    else:
        source = GeneratorConfig(n_superlocations=args.n, rng_seed=args.gen_seed, area=args.area)
    report = run_sweep(grid, source, jobs=args.jobs, with_bound=args.with_bound, base_seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write(out / "report.csv")
    print(out / "report.csv")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reevrp", description="Routing of mixed hybrid and conventional fleets.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance document")
    g.add_argument("--n", type=int, required=True, help="superlocations (or customers with --customers)")
    g.add_argument("--customers", action="store_true", help="scatter N customers instead of N superlocations")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--area", type=float, default=8.0, help="side of the square region in miles")
    g.add_argument("--sigma", type=float, default=4.0, help="drop time per package in minutes")
    g.add_argument("--max-cluster", type=int, default=12)
    g.add_argument("--m-hybrid", type=int, default=25)
    g.add_argument("--m-conventional", type=int, default=None)
    g.add_argument("--capacity", type=int, default=120)
    g.add_argument("--max-duration-h", type=float, default=10.0)
    g.add_argument("--ev-range-mi", type=float, default=33.0)
    g.add_argument("--bev", action="store_true")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--algorithm", choices=("its", "exact"), default="its")
    s.add_argument("--seeds", type=int, default=1)
    s.add_argument("--seed", type=int, default=0, help="first RNG seed")
    s.add_argument("--time-limit", type=float, default=None, help="seconds per seed")
    s.add_argument("--max-iterations", type=int, default=None, help="tabu-search runs per seed")
    s.add_argument("--params", help="JSON file with rcl, tenure, maxiter, restart, perturb_mi")
    s.add_argument("--max-n", type=int, default=12, help="size guard for the exact solver")
    s.add_argument("--trace", help="write per-seed search traces as CSV")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="check and measure a solution")
    e.add_argument("--instance", required=True)
    e.add_argument("--solution", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("price", help="negative reduced-cost routes for given duals")
    pr.add_argument("--instance", required=True)
    pr.add_argument("--duals", required=True)
    pr.add_argument("--subtype", nargs="+", choices=("E", "G", "C"), default=["E", "G", "C"])
    pr.add_argument("--ng-size", type=int, default=8, help="0 for full ng-sets")
    pr.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
    pr.add_argument("--limit", type=int, default=50)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_price)

    se = sub.add_parser("separate", help="violated cuts at a fractional point")
    se.add_argument("--instance", required=True)
    se.add_argument("--fractional", required=True)
    se.add_argument("--cuts", nargs="+", choices=("ipec", "rci"), default=["ipec", "rci"])
    se.add_argument("--out")
    se.set_defaults(func=cmd_separate)

    w = sub.add_parser("sweep", help="run a scenario grid and write report.csv")
    w.add_argument("--grid", required=True, help="built-in grid name or JSON file")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--out", required=True, help="output directory")
    w.add_argument("--instance", help="instance document (default: generate one)")
    w.add_argument("--n", type=int, default=50, help="superlocations of the generated instance")
    w.add_argument("--area", type=float, default=8.0)
    w.add_argument("--gen-seed", type=int, default=0)
    w.add_argument("--seed", type=int, default=0, help="first solver seed")
    w.add_argument("--seeds", type=int, default=None)
    w.add_argument("--time-limit", type=float, default=None)
    w.add_argument("--max-iterations", type=int, default=None)
    w.add_argument("--algorithm", choices=("its", "exact"), default=None)
    w.add_argument("--with-bound", action="store_true", help="exact optimum as lower bound (small n)")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is cmd_solve and args.time_limit is None and args.max_iterations is None:
        args.time_limit = 600.0
    try:
        return args.func(args)
    except (InvalidInput, InvalidInstance) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ReevrpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
