"""Command-line interface.

Subcommands: spec, sample, project, oracle, experiment, dump, load.
Exit codes: 0 success / all rows pass, 1 validation problem, 2 a
non-informational statistic failed, 3 a sampling budget ran out.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import json
import sys
from pathlib import Path

import numpy as np

from .errors import BudgetError, MGWError, SpecError
from .experiments import EXPERIMENTS
from .offspring import (
    limit_constants,
    load_spec,
    mean_matrix,
    spectral,
)
from .oracle import enumerate_trees
from .projection import project
from .rng import DEFAULT_SEED, resolve_seed, stream
from .sampler import (
    SampleBudget,
    Exhausted,
    Truncated,
    sample_conditioned,
    sample_forest,
    sample_tree,
)
from .trees import TypedForest

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ACCEPTANCE = 2
EXIT_BUDGET = 3


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def _vector(xs) -> str:
    return "(" + ", ".join(_fmt(x) for x in xs) + ")"


def _outfile(path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def _cmd_spec(args) -> int:
    spec = load_spec(args.spec)
    if args.action != "check":
        raise SpecError(f"unknown spec action {args.action!r}")
    M = mean_matrix(spec)
    sp = spectral(spec)
    print(f"name = {spec.name or '(unnamed)'}")
    print(f"d = {spec.d}")
    print("M =")
    for row in M:
        print("  [" + "  ".join(_fmt(x) for x in row) + "]")
    print(f"rho = {_fmt(sp.rho)}")
    print(f"a = {_vector(sp.a)}")
    print(f"b = {_vector(sp.b)}")
    print(f"alpha_min = {_fmt(min(spec.alphas))}")
    try:
        lc = limit_constants(spec)
        print(f"cbar = {_fmt(lc.cbar)}  (per type: {_vector(lc.cbar_per_type)})")
        if lc.Bn_scale is not None:
            print(f"B_n = {_fmt(lc.Bn_scale)} * n^{_fmt(1.0 / lc.alpha_min)}")
    except MGWError as exc:
        print(f"cbar = n/a ({exc})")
    print(f"classification = {sp.classification}, irreducible")
    return EXIT_OK


def _budget_from_args(args) -> SampleBudget:
    return SampleBudget(max_vertices=args.max_vertices, max_tries=args.max_tries)


def _cmd_sample(args) -> int:
    spec = load_spec(args.spec)
    seed = resolve_seed(args.seed)
    rng = stream(seed, 0)
    budget = _budget_from_args(args)
    if args.condition_n is not None:
        j = args.condition_type if args.condition_type is not None else args.root_type
        out = sample_conditioned(
            spec,
            j,
            args.condition_n,
            tolerance=args.condition_tolerance,
            budget=budget,
            root_type=args.root_type,
            rng=rng,
        )
    elif args.n_min is not None:
        out = sample_forest(spec, args.root_type or spec.root_types[0], args.n_min, budget, rng=rng)
    else:
        out = sample_tree(spec, args.root_type or spec.root_types[0], budget, rng=rng)
    if isinstance(out, Truncated):
        print(f"budget exhausted: {out.reason} after {out.placed} vertices", file=sys.stderr)
        return EXIT_BUDGET
    if isinstance(out, Exhausted):
        print(f"budget exhausted: {out.tries} tries without hitting the target", file=sys.stderr)
        return EXIT_BUDGET
    text = out.to_text()
    if args.out:
        _outfile(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_project(args) -> int:
    f = TypedForest.from_text(Path(args.infile).read_text(), d=args.d)
    result = project(f, args.type)
    if args.out:
        _outfile(args.out).write_text(result.reduced.to_text())
    else:
        sys.stdout.write(result.reduced.to_text())
    if args.counters:
        with open(_outfile(args.counters), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex_index", "j", "N_ij"])
            m, d = result.n_counters.shape
            for r in range(m):
                for j in range(1, d + 1):
                    w.writerow([r, j, int(result.n_counters[r, j - 1])])
    if args.nhat:
        with open(_outfile(args.nhat), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["component", "j", "Nhat_ij"])
            ncomp, d = result.nhat_counters.shape
            for c in range(ncomp):
                for j in range(1, d + 1):
                    w.writerow([c + 1, j, int(result.nhat_counters[c, j - 1])])
    return EXIT_OK


def _cmd_oracle(args) -> int:
    if args.action != "enumerate":
        raise SpecError(f"unknown oracle action {args.action!r}")
    spec = load_spec(args.spec)
    law = enumerate_trees(spec, args.root_type, args.max_size)
    rows = [(t.to_text().rstrip("\n"), float(p)) for t, p in law.entries]

    def write_rows(fh) -> None:
        w = csv.writer(fh)
        w.writerow(["tree", "probability"])
        for text, p in rows:
            w.writerow([text, format(p, ".17g")])

    if args.out:
        with open(_outfile(args.out), "w", newline="") as fh:
            write_rows(fh)
    else:
        write_rows(sys.stdout)
    return EXIT_OK


_STRICT_CONFIG_KEYS = {
    "spec", "n", "replicas", "seed", "workers", "out", "csv", "figures",
    "type", "grid", "set",
}


def _load_config(path) -> dict:
    obj = json.loads(Path(path).read_text())
    if not isinstance(obj, dict):
        raise SpecError("config must be a JSON object")
    unknown = set(obj) - _STRICT_CONFIG_KEYS
    if unknown:
        raise SpecError(f"unknown config keys: {sorted(unknown)}")
    if "set" in obj and not isinstance(obj["set"], dict):
        raise SpecError("config key 'set' must map override names to numbers")
    return obj


def _experiment_kwargs(name: str, args, cfg: dict) -> dict:
    fn = EXPERIMENTS[name]
    params = inspect.signature(fn).parameters
    kw: dict = {}

    def put(key, value):
        if value is None:
            return
        if key not in params:
            raise SpecError(f"experiment {name} does not take {key!r}")
        kw[key] = value

    n = args.n if args.n is not None else cfg.get("n")
    replicas = args.replicas if args.replicas is not None else cfg.get("replicas")
    type_arg = args.type if args.type is not None else cfg.get("type")
    if n is not None:
        if "n" in params:
            kw["n"] = int(n)
        elif "sample_size" in params:
            kw["sample_size"] = int(n)
        elif "n_values" in params:
            kw["n_values"] = (1, int(n))
        else:
            raise SpecError(f"experiment {name} has no size parameter")
    if replicas is not None:
        kw["replicas" if "replicas" in params else "reps"] = int(replicas)
    if type_arg is not None:
        put("i" if "i" in params else "j", int(type_arg))
    grid = args.grid if args.grid is not None else cfg.get("grid")
    if grid is not None:
        if isinstance(grid, str):
            grid = [int(g) for g in grid.split(",")]
        put("n_grid", tuple(int(g) for g in grid))

    overrides = dict(cfg.get("set", {}))
    for item in args.set or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise SpecError(f"--set expects key=value, got {item!r}")
        overrides[key] = val
    for key, val in overrides.items():
        if key not in params:
            raise SpecError(f"experiment {name} has no override {key!r}")
        kw[key] = float(val)
    return kw


def _cmd_experiment(args) -> int:
    name = args.name
    if name not in EXPERIMENTS:
        raise SpecError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    cfg = _load_config(args.config) if args.config else {}
    spec_path = args.spec or cfg.get("spec")
    if not spec_path:
        raise SpecError("an experiment needs --spec (or 'spec' in --config)")
    spec = load_spec(spec_path)
    seed = resolve_seed(args.seed if args.seed is not None else cfg.get("seed"))
    workers = int(args.workers if args.workers is not None else cfg.get("workers", 1))
    kw = _experiment_kwargs(name, args, cfg)
    report = EXPERIMENTS[name](spec, seed=seed, workers=workers, **kw)

    out = args.out or cfg.get("out")
    if out:
        _outfile(out).write_text(report.canonical_json() + "\n")
    else:
        sys.stdout.write(report.canonical_json() + "\n")
    csv_path = args.csv or cfg.get("csv")
    if csv_path:
        _outfile(csv_path).write_text(report.to_csv())
    want_figures = cfg.get("figures", True) and not args.no_figures
    if out and want_figures:
        from .figures import render_report_figures

        stem = Path(out)
        render_report_figures(report, stem.with_suffix("") if stem.suffix else stem)
    return EXIT_OK if report.all_passed else EXIT_ACCEPTANCE


def _cmd_dump(args) -> int:
    f = TypedForest.from_text(Path(args.infile).read_text(), d=args.d)
    if args.out:
        _outfile(args.out).write_text(f.to_text())
    else:
        sys.stdout.write(f.to_text())
    return EXIT_OK


def _cmd_load(args) -> int:
    f = TypedForest.from_text(Path(args.infile).read_text(), d=args.d)
    counts = np.bincount(f.types, minlength=f.d + 1)[1:]
    print(f"kind = {f.kind}")
    print(f"vertices = {len(f)}")
    print(f"components = {f.n_components}")
    print(f"d = {f.d}")
    print("type counts = " + _vector(counts))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgw",
        description="Multitype Galton-Watson trees: sampling, projection, "
        "exact oracles, and Monte Carlo verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spec", help="inspect an offspring spec")
    p.add_argument("action", choices=["check"])
    p.add_argument("--spec", required=True)
    p.set_defaults(fn=_cmd_spec)

    p = sub.add_parser("sample", help="sample a tree, forest, or conditioned tree")
    p.add_argument("--spec", required=True)
    p.add_argument("--root-type", type=int, default=None)
    p.add_argument("--n-min", type=int, default=None, help="forest mode: grow components until this many vertices")
    p.add_argument("--condition-n", type=int, default=None, help="conditioned mode: target type count")
    p.add_argument("--condition-type", type=int, default=None)
    p.add_argument("--condition-tolerance", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-vertices", type=int, default=10**7)
    p.add_argument("--max-tries", type=int, default=10**5)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("project", help="delete all but one type and rewire")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--type", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--counters", default=None, help="CSV of per-reduced-vertex deleted counts")
    p.add_argument("--nhat", default=None, help="CSV of per-component unattributed deleted counts")
    p.add_argument("--d", type=int, default=None, help="number of types, if larger than the max type present")
    p.set_defaults(fn=_cmd_project)

    p = sub.add_parser("oracle", help="exact enumeration of small-tree laws")
    p.add_argument("action", choices=["enumerate"])
    p.add_argument("--spec", required=True)
    p.add_argument("--root-type", type=int, default=1)
    p.add_argument("--max-size", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("experiment", help="run a Monte Carlo verification experiment")
    p.add_argument("name")
    p.add_argument("--spec", default=None)
    p.add_argument("--config", default=None, help="JSON config (strict keys); flags override")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--type", type=int, default=None, help="root/projection type for the experiment")
    p.add_argument("--grid", default=None, help="comma-separated size grid (size_tail_exponent)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None, help="report JSON path")
    p.add_argument("--csv", default=None, help="also write the rows as CSV")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering next to the report")
    p.add_argument("--set", action="append", default=None, metavar="KEY=VALUE", help="tolerance override, repeatable")
    p.set_defaults(fn=_cmd_experiment)

    p = sub.add_parser("dump", help="rewrite a forest file in canonical depth-first text form")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--d", type=int, default=None)
    p.set_defaults(fn=_cmd_dump)

    p = sub.add_parser("load", help="validate a forest file and print a summary")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--d", type=int, default=None)
    p.set_defaults(fn=_cmd_load)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; fold that into the validation code
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    try:
        return args.fn(args)
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except MGWError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"error: bad JSON: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
