"""Command line entry point.

    mrfpreempt run configs/table2_lattice.json --out results/table2.csv
    mrfpreempt bounds configs/bounds_params.json
    mrfpreempt oracle instance.json --format json
    mrfpreempt pij '{"type": "lattice", "rows": 10, "cols": 25}' --seed 3

Global flags may come before or after the subcommand. Exit status is 0 on
success, 2 on a usage or validation error, 3 when the exact solver refuses
an instance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import fields, replace

from .analysis import (BoundParams, bounds_csv, corollary1_min_nd, lemma2_lower, lemma3_upper,
                       measure_delta_route)
from .experiments import (ConfigError, PijParams, TopologyParams, config_from_dict, parse_config,
                          run_experiment)
from .model import PreemptionInstance
from .solvers import GibbsConfig, brute_force_optimal
from .traffic import RouteTrafficSpec

EXIT_USAGE = 2
EXIT_REFUSED = 3


def _globals(suppress: bool) -> argparse.ArgumentParser:
    d = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d, help="override the seed")
    p.add_argument("--out", default=d, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=d if suppress else "csv")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrfpreempt", parents=[_globals(False)],
                                     description="Distributed preemption experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    g = [_globals(True)]
    p = sub.add_parser("run", parents=g, help="run an experiment config")
    p.add_argument("config")
    p = sub.add_parser("bounds", parents=g, help="closed-form bounds and a measured gap")
    p.add_argument("params", help="JSON file or inline JSON object")
    p = sub.add_parser("oracle", parents=g, help="exact optimum of one instance")
    p.add_argument("instance")
    p = sub.add_parser("pij", parents=g, help="link-dependency estimate on a topology")
    p.add_argument("topology", help="JSON file or inline JSON object")
    return parser


def _load_json(arg: str) -> dict:
    text = arg
    if os.path.exists(arg):
        with open(arg, encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{arg}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{arg}: expected a JSON object")
    return doc


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _take(doc: dict, keys, where: str) -> dict:
    unknown = sorted(set(doc) - set(keys))
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")
    return doc


# -- subcommands ---------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = run_experiment(cfg)
    text = result.to_json() if args.format == "json" else result.to_csv()
    _emit(text, args.out or cfg.output)
    return 0


_BOUND_KEYS = [f.name for f in fields(BoundParams)]
_MEASURE_KEYS = ["trials", "B0", "flows_per_link", "capacity", "free_bw", "max_h"]


def bounds_rows(doc: dict, seed: int) -> list[dict]:
    """Bracketing rows for the dependency lemmas, the measured gap and the neighbourhood rule."""
    _take(doc, _BOUND_KEYS + _MEASURE_KEYS, "bounds params")
    try:
        p = BoundParams(**{k: doc[k] for k in _BOUND_KEYS if k in doc})
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bounds params: {e}") from None
    rows = []
    for h in range(2, min(doc.get("max_h", 6), p.L - 1) + 1):
        lo, hi = lemma2_lower(p.L, p.d0, h), lemma3_upper(p.L, h)
        rows.append({"param_set": f"lemmas;L={p.L};d0={p.d0};h={h}", "value": lo, "bound": hi,
                     "satisfied": lo <= hi})
    trials = doc.get("trials", 200)
    if trials and p.N_d < p.L:
        spec = RouteTrafficSpec(L=p.L, p_c=p.p_c, B0=doc.get("B0", 10.0), eps_B=p.eps_B,
                                flows_per_link=doc.get("flows_per_link", 2.0))
        rep = measure_delta_route(spec, p.c_new, GibbsConfig(N_d=p.N_d, repair=True), trials,
                                  seed, capacity=doc.get("capacity", 30.0),
                                  free_bw=doc.get("free_bw", 0.0))
        rows.append({"param_set": f"theorem1;L={p.L};p_c={p.p_c:.4g};N_d={p.N_d};"
                                  f"c_new={p.c_new:g};eps_B={p.eps_B:g};trials={trials}",
                     "value": rep.mean, "bound": rep.bound, "satisfied": rep.bound_satisfied})
    n_d = corollary1_min_nd(p)
    rows.append({"param_set": f"corollary1;L={p.L};p_c={p.p_c:.4g};epsilon={p.epsilon:g}",
                 "value": -1 if n_d is None else n_d, "bound": p.L - 1,
                 "satisfied": n_d is not None})
    return rows


def cmd_bounds(args) -> int:
    rows = bounds_rows(_load_json(args.params), 0 if args.seed is None else args.seed)
    text = (json.dumps(rows, indent=2) + "\n") if args.format == "json" else bounds_csv(rows)
    _emit(text, args.out)
    return 0


def cmd_oracle(args) -> int:
    with open(args.instance, encoding="utf-8") as fh:
        try:
            inst = PreemptionInstance.from_json(fh.read())
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"{args.instance}: {e}") from None
    try:
        res = brute_force_optimal(inst)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_REFUSED
    if args.format == "json":
        text = res.to_json() + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "class", "bandwidth", "preempted"])
        for f in sorted(inst.flows, key=lambda f: f.k):
            w.writerow([f.k, f.cls, repr(f.bandwidth), res.global_[f.k]])
        text = buf.getvalue()
    _emit(text, args.out)
    return 0


def cmd_pij(args) -> int:
    doc = _load_json(args.topology)
    topo_keys = [f.name for f in fields(TopologyParams)]
    pij_keys = [f.name for f in fields(PijParams)]
    _take(doc, topo_keys + pij_keys + ["runs"], "pij params")
    cfg = config_from_dict({
        "kind": "fig3_pij", "seed": 0 if args.seed is None else args.seed,
        "runs": doc.get("runs", 10),
        "topology": {k: doc[k] for k in topo_keys if k in doc},
        "pij": {k: doc[k] for k in pij_keys if k in doc}})
    result = run_experiment(cfg)
    _emit(result.to_json() if args.format == "json" else result.to_csv(), args.out)
    return 0


_COMMANDS = {"run": cmd_run, "bounds": cmd_bounds, "oracle": cmd_oracle, "pij": cmd_pij}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
