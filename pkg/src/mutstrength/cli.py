"""Command-line entry point: ``mutstrength <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .dp import StrengthDistribution, expected_runtime
from .operators import make_baseline, parse_baseline
from .sepcmaes import CmaConfig
from .simulate import simulate_runtime

log = logging.getLogger("mutstrength")


class UsageError(Exception):
    """Bad arguments detected after parsing; exits with status 2."""


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {v}")
    return v


def load_distribution(path: str | Path) -> StrengthDistribution:
    """Read ``{"n": int, "weights": [w0..wn]}``; weights are renormalized
    if they sum to 1 within 1e-9 and rejected otherwise."""
    try:
        doc = json.loads(Path(path).read_text())
        n = int(doc["n"])
        w = np.asarray(doc["weights"], dtype=np.float64)
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise UsageError(f"cannot read distribution file {path}: {e}") from None
    if w.shape != (n + 1,):
        raise UsageError(f"{path}: expected {n + 1} weights, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise UsageError(f"{path}: weights must be finite and non-negative")
    total = math.fsum(w)
    if abs(total - 1.0) > 1e-9:
        raise UsageError(f"{path}: weights sum to {total!r}")
    return StrengthDistribution(n, w / total)


def _distribution(args, n: int) -> StrengthDistribution:
    if getattr(args, "dist_file", None):
        d = load_distribution(args.dist_file)
        if d.n != n:
            raise UsageError(f"distribution file is for n={d.n}, but --n is {n}")
        return d
    try:
        return make_baseline(parse_baseline(args.dist), n)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _show(x: float, decimals: int | None) -> str:
    if decimals is None:
        return format(float(x), ".15g")
    return f"{x:.{decimals}f}"


def _effective_seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().generate_state(1)[0])
    print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def cmd_evaluate(args) -> None:
    d = _distribution(args, args.n)
    rt = expected_runtime(args.n, args.lam, d)
    if args.format == "json":
        doc = {"n": args.n, "lambda": args.lam, "runtime": rt}
        print(json.dumps(doc))
    else:
        print(_show(rt, args.decimals))


def cmd_optimize(args) -> None:
    seed = _effective_seed(args)
    template = CmaConfig(population_size=args.popsize, initial_step=args.sigma0,
                         budget=args.budget, seed=0)
    grid = ex.GridSpec([args.n], [args.lam], args.runs, seed)
    cell = ex.run_grid(grid, template, workers=args.threads)[0]
    best = cell.best_run
    doc = {
        "n": args.n,
        "lambda": args.lam,
        "seed": seed,
        "runtime": best.best_runtime,
        "weights": [float(x) for x in best.best_distribution.weights],
        "runs": [r.to_dict() for r in cell.runs],
    }
    if args.out:
        _write_json(args.out, doc)
    print(_show(best.best_runtime, args.decimals))


def cmd_grid(args) -> None:
    seed = _effective_seed(args)
    template = CmaConfig(population_size=args.popsize, initial_step=args.sigma0, budget=args.budget)
    grid = ex.GridSpec(args.ns, args.lambdas, args.runs, seed)
    cells = ex.run_grid(grid, template, workers=args.threads)
    ex.write_grid(cells, grid, Path(args.out), args.threshold)
    for c in cells:
        print(f"{c.n}\t{c.lam}\t{c.best_runtime:.2f}")


def cmd_simulate(args) -> None:
    seed = _effective_seed(args)
    d = _distribution(args, args.n)
    if math.isinf(expected_runtime(args.n, args.lam, d)):
        raise UsageError("the optimum is unreachable with this distribution")
    est = simulate_runtime(args.n, args.lam, d, args.trials, seed)
    if args.format == "json":
        print(json.dumps({"n": args.n, "lambda": args.lam, "trials": est.trials, "mean": est.mean,
                          "std_error": est.std_error, "hits_at_init": est.hits_at_init, "seed": seed}))
    else:
        print(f"{_show(est.mean, args.decimals)} +- {_show(est.std_error, args.decimals)}")


def cmd_compare(args) -> None:
    try:
        specs = [parse_baseline(t) for t in args.baselines.split(",") if t.strip()]
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.optimal == "paper":
        try:
            optimal = {lam: ex.published_optimum(args.n, lam) for lam in args.lambdas}
        except ValueError as e:
            raise UsageError(str(e)) from None
    elif args.grid_dir:
        table = ex.read_runtimes_csv(Path(args.grid_dir) / "runtimes.csv")
        missing = [lam for lam in args.lambdas if (args.n, lam) not in table]
        if missing:
            raise UsageError(f"grid results lack n={args.n}, lambda={missing}")
        optimal = {lam: table[(args.n, lam)] for lam in args.lambdas}
    else:
        seed = _effective_seed(args)
        grid = ex.GridSpec([args.n], args.lambdas, args.runs, seed)
        cells = ex.run_grid(grid, CmaConfig(), workers=args.threads)
        optimal = {c.lam: c.best_runtime for c in cells}
    records = ex.compare_baselines(args.n, args.lambdas, specs, optimal)
    if args.out:
        ex.write_regret_csv(records, Path(args.out))
    if args.format == "json":
        print(json.dumps([{"n": r.n, "lambda": r.lam, "baseline": r.baseline.label,
                           "runtime": r.baseline_runtime, "regret": r.regret} for r in records]))
    else:
        for r in records:
            print(f"{r.lam}\t{r.baseline.label}\t{r.baseline_runtime:.2f}\t{r.regret:.4f}")


def cmd_support(args) -> None:
    try:
        cell = ex.read_cell(args.cell)
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"cannot read cell file {args.cell}: {e}") from None
    count = ex.count_support(cell.mean_distribution(), args.threshold)
    if args.format == "json":
        print(json.dumps({"n": cell.n, "lambda": cell.lam, "threshold": args.threshold, "support_count": count}))
    else:
        print(count)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mutstrength",
        description="Expected runtimes and optimal static mutation strength distributions "
                    "of the (1+lambda) EA on OneMax.",
        epilog="Operator specs: rls, onepoint:K, sbm:P, sbm>0:P, sbm0to1:P, fastga:BETA, "
               "pow:BETA, binpos:P (P may be 'auto' = 1/n).",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False, out=True):
        sp.add_argument("--n", type=_positive_int, required=True)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--decimals", type=int, default=None,
                        help="decimals for printed numbers (default: 15 significant digits)")
        if seed:
            sp.add_argument("--seed", type=int, default=None)
        if out:
            sp.add_argument("--out", default=None)

    def cma_flags(sp):
        sp.add_argument("--budget", type=_positive_int, default=None, help="default 100*n^2")
        sp.add_argument("--popsize", type=_positive_int, default=10)
        sp.add_argument("--sigma0", type=_positive_float, default=1.0)
        sp.add_argument("--threads", type=_positive_int, default=1)

    sp = sub.add_parser("evaluate", help="exact expected runtime of one distribution")
    common(sp, out=False)
    sp.add_argument("--lambda", dest="lam", type=_positive_int, required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--dist")
    g.add_argument("--dist-file")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("optimize", help="search an optimal distribution")
    common(sp, seed=True)
    sp.add_argument("--lambda", dest="lam", type=_positive_int, required=True)
    sp.add_argument("--runs", type=_positive_int, default=1)
    cma_flags(sp)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("grid", help="optimizer runs over an (n, lambda) grid")
    sp.add_argument("--ns", type=_int_list, required=True)
    sp.add_argument("--lambdas", type=_int_list, required=True)
    sp.add_argument("--runs", type=_positive_int, default=50)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.add_argument("--threshold", type=_positive_float, default=ex.DEFAULT_SUPPORT_THRESHOLD)
    cma_flags(sp)
    sp.set_defaults(func=cmd_grid)

    sp = sub.add_parser("simulate", help="Monte Carlo estimate of the runtime")
    common(sp, seed=True, out=False)
    sp.add_argument("--lambda", dest="lam", type=_positive_int, required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--dist")
    g.add_argument("--dist-file")
    sp.add_argument("--trials", type=_positive_int, default=100_000)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="regrets of baseline operators")
    common(sp, seed=True)
    sp.add_argument("--lambdas", type=_int_list, required=True)
    sp.add_argument("--baselines", default=",".join(ex.DEFAULT_BASELINES))
    sp.add_argument("--optimal", choices=("grid", "paper"), default="grid",
                    help="'paper' uses the published table of optimal runtimes")
    sp.add_argument("--grid-dir", default=None, help="read optima from a grid output directory")
    sp.add_argument("--runs", type=_positive_int, default=10)
    sp.add_argument("--threads", type=_positive_int, default=1)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("support", help="count strengths with non-negligible mass in a cell")
    sp.add_argument("--cell", required=True)
    sp.add_argument("--threshold", type=_positive_float, default=ex.DEFAULT_SUPPORT_THRESHOLD)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_support)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"mutstrength: error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        log.debug("command failed", exc_info=True)
        print(f"mutstrength: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
