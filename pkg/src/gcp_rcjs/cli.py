"""Command-line front end: ``gen``, ``solve``, ``train`` and ``bench``.

Settings resolve as command-line flag > ``--config`` file > built-in default.
The config file holds flat ``key = value`` lines with ``#`` comments; keys use
the long flag names with dashes or underscores.

Exit codes: 0 success, 1 usage/config error, 2 no solution, 3 IO/parse error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable

from . import bench
from .cp import SolverConfig, Status, build_model, solve
from .gp import GPConfig, default_threads, evolve, write_log_csv
from .instance import (
    GenConfig,
    InstanceError,
    format_rational,
    generate_instance,
    read_instance,
    write_instance,
)
from .selector import SelectorSyntaxError, read_selector_file, write_selector_file

EXIT_OK, EXIT_USAGE, EXIT_NO_SOLUTION, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _opt_float(text: str) -> float | None:
    return None if text in ("", "none", "None") else float(text)


def _opt_str(text: str) -> str | None:
    return None if text in ("", "none", "None") else text


# key -> (converter, default, help)
COMMON: dict[str, tuple[Callable[[str], Any], Any, str]] = {
    "seed": (int, 0, "master random seed"),
    "node_budget": (int, 50_000, "search node budget per solve"),
    "time_budget_ms": (_opt_float, None, "optional wall-clock budget per solve, milliseconds"),
    "threads": (int, None, "evaluation threads (default: $GCP_RCJS_THREADS or CPU count)"),
}

COMMANDS: dict[str, dict[str, tuple[Callable[[str], Any], Any, str]]] = {
    "gen": {
        "count": (int, 1, "number of instances"),
        "machines": (int, 3, "machines per instance"),
        "prec_prob": (float, 0.5, "precedence probability in [0, 1]"),
        "util": (float, 0.5, "resource utilisation in (0, 1]"),
        "out_dir": (str, ".", "output directory"),
    },
    "solve": {
        "instance": (str, None, "instance file"),
        "selector": (_opt_str, None, "selector file (default: constant priorities)"),
        "schedule_out": (_opt_str, None, "write 'start <job> <time>' lines here"),
    },
    "train": {
        "train_dir": (str, None, "training instances directory"),
        "small_dir": (str, None, "pre-selection instances directory"),
        "out_selector": (str, "best_selector.txt", "best selector output file"),
        "log_csv": (str, "training_log.csv", "per-generation log output"),
        "population_size": (int, 50, "population size"),
        "generations": (int, 20, "number of generations"),
        "tournament_size": (int, 5, "tournament size"),
        "crossover_rate": (float, 0.9, "subtree crossover rate"),
        "mutation_rate": (float, 0.1, "subtree mutation rate"),
        "max_depth": (int, 7, "maximum tree depth"),
        "intermediate_factor": (int, 2, "offspring pool size as a multiple of the population"),
        "sample_size": (int, 3, "training instances sampled per generation"),
        "preselect_count": (int, 4, "instances used for pre-selection"),
        "preselect_node_budget": (int, 5_000, "node budget for pre-selection trials"),
    },
    "bench": {
        "instances_dir": (str, None, "instances directory"),
        "methods": (str, "default", "comma-separated: " + ",".join(bench.METHODS)),
        "selector": (_opt_str, None, "selector file for cp/cp-warm/single-pass"),
        "report": (str, "report.csv", "per-run CSV output"),
        "aggregate": (str, "aggregate.csv", "aggregate CSV output"),
    },
}

_ALL_KEYS = set(COMMON) | {k for options in COMMANDS.values() for k in options}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gcp-rcjs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, options in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--print-config", action="store_true", help="print the effective configuration")
        p.add_argument("-v", "--verbose", action="store_true")
        for key, (_, default, help_text) in {**COMMON, **options}.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None, help=f"{help_text} (default: {default})")
    return parser


def read_config_file(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _ALL_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = value
    return out


def resolve_config(command: str, args: argparse.Namespace) -> dict[str, Any]:
    options = {**COMMON, **COMMANDS[command]}
    file_values = read_config_file(args.config) if args.config else {}
    cfg: dict[str, Any] = {}
    for key, (conv, default, _) in options.items():
        raw = getattr(args, key)
        if raw is None:
            raw = file_values.get(key)
        try:
            cfg[key] = default if raw is None else conv(raw)
        except ValueError:
            raise UsageError(f"invalid value for {key}: {raw!r}") from None
    if cfg["threads"] is None:
        cfg["threads"] = default_threads()
    return cfg


def _solver_config(cfg) -> SolverConfig:
    tb = cfg["time_budget_ms"]
    return SolverConfig(node_budget=cfg["node_budget"], time_budget=None if tb is None else tb / 1000.0)


def _instance_files(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"not a directory: {d}")
    files = sorted(d.glob("*.txt"))
    if not files:
        raise UsageError(f"no instance files (*.txt) in {d}")
    return files


def _require(cfg, *keys):
    for key in keys:
        if cfg[key] is None:
            raise UsageError(f"--{key.replace('_', '-')} is required")


def cmd_gen(cfg) -> int:
    try:
        gen_cfgs = [
            GenConfig(machines=cfg["machines"], precedence_probability=cfg["prec_prob"],
                      resource_utilisation=cfg["util"], seed=cfg["seed"] + k)
            for k in range(cfg["count"])
        ]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg["count"] < 1:
        raise UsageError("count must be >= 1")
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    for gc in gen_cfgs:
        name = f"rcjs_m{gc.machines}_p{gc.precedence_probability:g}_u{gc.resource_utilisation:g}_s{gc.seed}.txt"
        write_instance(generate_instance(gc), out / name)
        print(out / name)
    return EXIT_OK


def cmd_solve(cfg) -> int:
    _require(cfg, "instance")
    inst = read_instance(cfg["instance"])
    sc = _solver_config(cfg)
    if cfg["selector"]:
        sc.selector = read_selector_file(cfg["selector"])
    res = solve(build_model(inst), sc)
    obj = "none" if res.best_objective is None else format_rational(res.best_objective)
    print(f"{res.status.value} {obj} {res.stats.nodes} {int(round(res.stats.elapsed * 1000))}")
    if cfg["schedule_out"] and res.best_schedule is not None:
        with open(cfg["schedule_out"], "w", encoding="utf-8") as fh:
            for j, s in enumerate(res.best_schedule.starts):
                fh.write(f"start {j} {s}\n")
    return EXIT_OK if res.status in (Status.OPTIMAL, Status.FEASIBLE) else EXIT_NO_SOLUTION


def cmd_train(cfg) -> int:
    _require(cfg, "train_dir", "small_dir")
    train = [read_instance(f) for f in _instance_files(cfg["train_dir"])]
    small = [read_instance(f) for f in _instance_files(cfg["small_dir"])]
    try:
        gp_cfg = GPConfig(
            population_size=cfg["population_size"],
            generations=cfg["generations"],
            tournament_size=cfg["tournament_size"],
            crossover_rate=cfg["crossover_rate"],
            mutation_rate=cfg["mutation_rate"],
            max_depth=cfg["max_depth"],
            intermediate_factor=cfg["intermediate_factor"],
            sample_size=min(cfg["sample_size"], len(train)),
            preselect_count=min(cfg["preselect_count"], len(small)),
            node_budget=cfg["node_budget"],
            preselect_node_budget=cfg["preselect_node_budget"],
            seed=cfg["seed"],
            threads=cfg["threads"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    state = evolve(gp_cfg, train, small)
    write_selector_file(cfg["out_selector"], state.best.selector, fitness=state.best.full_fitness,
                        generation=state.best.selector.generation, seed=gp_cfg.seed)
    write_log_csv(cfg["log_csv"], state.log)
    print(f"best {state.best.selector} fitness={format_rational(state.best.full_fitness)}")
    return EXIT_OK


def cmd_bench(cfg) -> int:
    _require(cfg, "instances_dir")
    methods = [m.strip() for m in cfg["methods"].split(",") if m.strip()]
    unknown = [m for m in methods if m not in bench.METHODS]
    if unknown or not methods:
        raise UsageError(f"unknown method(s) {unknown}; choose from {', '.join(bench.METHODS)}")
    files = _instance_files(cfg["instances_dir"])
    instances = [(f.stem, read_instance(f)) for f in files]
    selector = read_selector_file(cfg["selector"]) if cfg["selector"] else None
    tb = cfg["time_budget_ms"]
    try:
        report = bench.run_experiment(instances, methods, node_budget=cfg["node_budget"], selector=selector,
                                      time_budget=None if tb is None else tb / 1000.0, threads=cfg["threads"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report.write_csv(cfg["report"], cfg["aggregate"])
    for a in report.aggregates:
        mean = "none" if a.mean_objective is None else format_rational(a.mean_objective)
        print(f"m={a.machines} {a.method}: mean={mean} optimal={format_rational(a.pct_optimal)}% n={a.n}")
    return EXIT_OK


HANDLERS = {"gen": cmd_gen, "solve": cmd_solve, "train": cmd_train, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand (gen, solve, train, bench)")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(asctime)s %(name)s %(message)s")
        cfg = resolve_config(args.command, args)
        if args.print_config:
            for key in sorted(cfg):
                print(f"{key} = {cfg[key]}")
        return HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"gcp-rcjs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, InstanceError, SelectorSyntaxError) as exc:
        print(f"gcp-rcjs: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
