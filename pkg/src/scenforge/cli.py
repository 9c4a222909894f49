"""Command-line entry point.

Exit codes: 0 success, 1 domain failure (violations, failed computation),
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .constraints import ConstraintError, repair, validate
from .criticality import (
    MetricWeights,
    WeightError,
    classify_critical,
    combine_weights,
    compute_metrics,
    entropy_weights,
    fitness,
    to_report_speed,
)
from .objective import ScenarioObjective
from .odd import catalog_scenario
from .ontology import InstantiationError, build_template, export_triples, instantiate, scenario_state
from .openx import EmitterOptions, emit_xodr, emit_xosc
from .optimizers import (
    ALGORITHMS,
    Budget,
    GaConfig,
    Nsga2Config,
    PpoConfig,
    PsoConfig,
    campaign_stats,
    ga,
    normalized_hypervolume,
    nsga2,
    ppo_search,
    pso,
    random_search,
    relative_t_critic,
)
from .pareto import ReferencePointError, hypervolume, spread
from .sim import build_crossroad, simulate

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(args) -> RunConfig:
    cfg = RunConfig.load(getattr(args, "config", None))
    cfg.apply_overrides(getattr(args, "seed", None), getattr(args, "out", None), getattr(args, "scenario", None))
    cfg.check()
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dumps(obj) -> str:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if isinstance(x, np.generic):
            return clean(x.item())
        return x

    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


# -- validate -------------------------------------------------------------


def cmd_validate(args) -> int:
    cfg = _load(args)
    logical = catalog_scenario(cfg.scenario)
    crossroad = build_crossroad(cfg.map_spec())
    state = scenario_state(logical, cfg.parameters, crossroad)
    if getattr(args, "repair", False):
        state = repair(state, thresholds=cfg.constraint_thresholds())
    violations = validate(state, thresholds=cfg.constraint_thresholds())
    for v in violations:
        detail = ", ".join(f"{k}={v_}" for k, v_ in sorted(v.offending_values.items()))
        print(f"{v.rule_id}: {v.message}" + (f" ({detail})" if detail else ""))
    if violations:
        print(f"{len(violations)} violation(s)")
        return EXIT_DOMAIN
    print("ok: no violations")
    return EXIT_OK


# -- export ---------------------------------------------------------------


def cmd_export(args) -> int:
    cfg = _load(args)
    ex = dict(cfg.export)
    if args.fixed_timestamp is not None:
        ex["fixed_timestamp"] = args.fixed_timestamp
    stem = ex.pop("stem", cfg.scenario)
    opts = EmitterOptions(
        xodr_filename=ex.get("xodr_filename", f"{stem}.xodr"),
        author=ex.get("author", "scenforge"),
        fixed_timestamp=ex.get("fixed_timestamp"),
    )
    spec = cfg.map_spec()
    try:
        graph = instantiate(
            build_template(),
            catalog_scenario(cfg.scenario),
            cfg.parameters,
            crossroad=build_crossroad(spec),
            thresholds=cfg.constraint_thresholds(),
            trigger=ex.get("trigger", "time"),
            trigger_distance=float(ex.get("trigger_distance", 30.0)),
        )
    except InstantiationError as exc:
        for v in exc.violations:
            print(f"{v.rule_id}: {v.message}", file=sys.stderr)
        return EXIT_DOMAIN
    out = _out_dir(cfg)
    files = {
        out / opts.xodr_filename: emit_xodr(spec, opts),
        out / f"{stem}.xosc": emit_xosc(graph, opts),
        out / f"{stem}.nt": export_triples(graph),
    }
    for path, text in files.items():
        _write(path, text)
        print(f"wrote {path}")
    return EXIT_OK


# -- simulate -------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _load(args)
    logical = catalog_scenario(cfg.scenario)
    crossroad = build_crossroad(cfg.map_spec())
    try:
        state = repair(scenario_state(logical, cfg.parameters, crossroad), thresholds=cfg.constraint_thresholds())
    except ConstraintError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DOMAIN
    named = dict(cfg.parameters)
    named["ego_speed"] = state.placement("ego").speed
    named["bv_speed"] = state.placement("bv").speed
    trace = simulate(crossroad, logical, named, cfg.sim_config())
    mv = compute_metrics(trace, cfg.metric_config())
    unit = cfg.metrics.get("speed_unit", "m/s")
    result = {
        "scenario": cfg.scenario,
        "parameters": {k: named[k] for k in sorted(named)},
        "metrics": mv.as_dict(),
        "v_d_report": to_report_speed(mv.v_d, unit),
        "speed_unit": unit,
        "fitness": fitness(mv, cfg.weights()),
        "critical": classify_critical(mv, cfg.thresholds()),
        "events": [{"t": t, "kind": k} for t, k in trace.events],
    }
    text = _dumps(result)
    print(text, end="")
    out = _out_dir(cfg)
    _write(out / f"{cfg.scenario}_metrics.json", text)
    _write(out / f"{cfg.scenario}_trace.csv", trace.to_csv())
    return EXIT_OK


# -- campaign -------------------------------------------------------------


def _run_campaign(cfg: RunConfig, block: dict, seed: int, workers: int | None = None):
    algorithm = block.get("algorithm", "rs")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown optimizer {algorithm!r}; expected one of {ALGORITHMS}")
    b = block.get("budget", {})
    budget = Budget(int(b.get("iterations", 25)), int(b.get("population", 40)))
    space = cfg.space()
    mode = block.get("mode", "pareto" if algorithm == "nsga2" else "fitness")
    objective = ScenarioObjective(
        cfg.scenario, space, mode,
        sim=cfg.sim_config(), metric=cfg.metric_config(), weights=cfg.weights(),
        thresholds=cfg.thresholds(), constraints=cfg.constraint_thresholds(), map_spec=cfg.map_spec(),
    )
    opt = dict(block.get("config", {}))
    workers = block.get("workers", 0) if workers is None else workers
    pool = None
    if workers and workers > 1:
        kind = block.get("executor", "thread")
        pool = (ProcessPoolExecutor if kind == "process" else ThreadPoolExecutor)(max_workers=workers)
    try:
        if algorithm == "rs":
            report = random_search(space, objective, budget, seed, executor=pool,
                                   arity=objective.arity)
        elif algorithm == "pso":
            report = pso(space, objective, budget, PsoConfig(**opt), seed, executor=pool)
        elif algorithm == "ga":
            report = ga(space, objective, budget, GaConfig(**opt), seed, executor=pool)
        elif algorithm == "ppo":
            report = ppo_search(space, objective, budget, PpoConfig(**opt), seed, executor=pool)
        else:
            if "objective_bounds" in opt:
                opt["objective_bounds"] = tuple(tuple(v) for v in opt["objective_bounds"])
            if "hv_reference" in opt:
                opt["hv_reference"] = tuple(opt["hv_reference"])
            report = nsga2(space, objective, budget, Nsga2Config(**opt), seed, executor=pool)
    except TypeError as exc:
        raise ConfigError(f"invalid {algorithm} config: {exc}") from None
    finally:
        if pool is not None:
            pool.shutdown()
    report.config = {**report.config, "scenario": cfg.scenario, "mode": mode}
    return report


def _summary(report, stats) -> dict:
    best = report.best_evaluation
    row = {
        "algorithm": report.algorithm,
        "evaluations": stats.n_evaluations,
        "critical": stats.n_critical,
        "r_critic": stats.r_critic,
        "evals_per_critical": stats.evals_per_critical,
        "wall_time_s": stats.wall_time,
    }
    if best is not None:
        row["best_fitness"] = best.value
        row["best_vector"] = dict(zip(report.names, best.vector))
    if report.hypervolume:
        row["hypervolume"] = report.hypervolume
        row["spread"] = report.spread
    return row


def cmd_campaign(args) -> int:
    cfg = _load(args)
    seed = cfg.require_seed()
    blocks = cfg.campaigns or [cfg.optimizer or {"algorithm": "rs"}]
    if args.algorithm:
        blocks = [{**blocks[0], "algorithm": args.algorithm}]
    out = _out_dir(cfg)
    reports, stats = [], []
    for block in blocks:
        report = _run_campaign(cfg, block, seed, args.workers)
        st = campaign_stats(report, cfg.thresholds())
        reports.append(report)
        stats.append(st)
        name = f"{cfg.scenario}_{report.algorithm}_seed{seed}"
        _write(out / f"{name}_report.json", report.to_json())
        _write(out / f"{name}_evaluations.csv", report.to_csv())

    rel = relative_t_critic(stats)
    rows = []
    for report, st, t in zip(reports, stats, rel):
        row = _summary(report, st)
        row["t_critic_relative"] = t
        rows.append(row)
    _write(out / f"{cfg.scenario}_seed{seed}_stats.json", _dumps(rows))

    header = f"{'metric':<20}" + "".join(f"{r['algorithm']:>12}" for r in rows)
    print(header)
    print(f"{'R_critic':<20}" + "".join(f"{r['r_critic']:>12.3f}" for r in rows))
    print(f"{'evals/critical':<20}" + "".join(f"{r['evals_per_critical']:>12.2f}" for r in rows))
    print(f"{'T_critic':<20}" + "".join(f"{r['t_critic_relative']:>12.3f}" for r in rows))
    if any("best_fitness" in r for r in rows):
        print(f"{'best fitness':<20}" + "".join(
            f"{r['best_fitness']:>12.3f}" if "best_fitness" in r else f"{'-':>12}" for r in rows))
    for r in rows:
        if "hypervolume" in r:
            print(f"{r['algorithm']} HV per generation: " + " ".join(f"{h:.4f}" for h in r["hypervolume"]))
    return EXIT_OK


# -- weights --------------------------------------------------------------


def _read_csv_matrix(path: str) -> tuple[list[str], np.ndarray]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}") from None
    if len(rows) < 2:
        raise WeightError(f"{path}: needs a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise WeightError(f"{path}: non-numeric cell ({exc})") from None
    if data.shape[1] != len(header) or any(len(r) != len(header) for r in rows[1:]):
        raise WeightError(f"{path}: ragged rows")
    return header, data


def cmd_weights(args) -> int:
    header, data = _read_csv_matrix(args.samples)
    # a trailing "+" marks a benefit metric, "-" a cost metric
    names = [h[:-1] if h[-1:] in "+-" else h for h in header]
    suffixed = ["cost" if h.endswith("-") else "benefit" for h in header]
    directions = args.directions.split(",") if args.directions else suffixed
    if len(directions) != len(names):
        raise UsageError(f"{len(directions)} directions for {len(names)} columns")
    objective = entropy_weights(data, directions, names)
    result = {"objective": objective.to_dict()}
    if args.subjective:
        try:
            subjective = MetricWeights.from_dict(json.loads(Path(args.subjective).read_text()))
        except FileNotFoundError:
            raise UsageError(f"file not found: {args.subjective}") from None
        combined = combine_weights(subjective, objective, tuple(args.ratio))
        result["combined"] = combined.to_dict()
    text = _dumps(result)
    print(text, end="")
    if args.out:
        _write(Path(args.out), text)
    return EXIT_OK


# -- pareto ---------------------------------------------------------------


def cmd_pareto(args) -> int:
    _, front = _read_csv_matrix(args.front)
    if len(args.reference) != front.shape[1]:
        raise UsageError(f"reference has {len(args.reference)} values for {front.shape[1]} objectives")
    result = {}
    if args.metric in ("hv", "both"):
        result["hypervolume"] = hypervolume(front, args.reference)
    if args.metric in ("spread", "both"):
        if args.metric == "spread" or (len(front) >= 3 and front.shape[1] == 2):
            result["spread"] = spread(front)
        else:
            result["spread"] = None
    print(_dumps(result), end="")
    return EXIT_OK


# -- entry point ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scenforge", description="Scenario generation and evaluation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, stochastic=False):
        p.add_argument("--config", "-c", help="JSON run configuration")
        p.add_argument("--scenario", help="logical scenario id (S1..S4)")
        p.add_argument("--out", help="output directory")
        if stochastic:
            p.add_argument("--seed", type=int, help="random seed")

    p = sub.add_parser("validate", help="check a concrete scenario against the constraint rules")
    common(p)
    p.add_argument("--repair", action="store_true", help="repair before validating")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("export", help="write .xodr, .xosc and triple files")
    common(p)
    p.add_argument("--fixed-timestamp", help="header timestamp for reproducible bytes")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("simulate", help="simulate one concrete scenario")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("campaign", help="run one or more optimization campaigns")
    common(p, stochastic=True)
    p.add_argument("--algorithm", choices=ALGORITHMS, help="override the configured optimizer")
    p.add_argument("--workers", type=int, help="parallel objective evaluations")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("weights", help="entropy weights from a metric sample CSV")
    p.add_argument("samples", help="CSV with a header row of metric names, optionally suffixed + or -")
    p.add_argument("--directions", help="comma-separated benefit/cost per column; overrides header suffixes")
    p.add_argument("--subjective", help="JSON file with subjective weights to combine")
    p.add_argument("--ratio", type=float, nargs=2, default=(0.4, 0.6), metavar=("SUBJ", "OBJ"))
    p.add_argument("--out", help="write the weights JSON here as well")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("pareto", help="hypervolume and spread of a front CSV (minimization)")
    p.add_argument("front", help="CSV with a header row, one point per row")
    p.add_argument("--reference", type=float, nargs="+", required=True)
    p.add_argument("--metric", choices=("hv", "spread", "both"), default="both")
    p.set_defaults(func=cmd_pareto)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WeightError, ReferencePointError, ConstraintError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
