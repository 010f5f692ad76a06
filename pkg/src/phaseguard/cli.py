"""Command-line entry point.

    phaseguard run <scenario> -o <dir>
    phaseguard sweep <sweepfile> -o <dir>
    phaseguard plot <summary.json | dir> ... -o <dir>
    phaseguard suite -o <dir>
    phaseguard list

Exit codes: 0 success, 2 invalid input, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .config import ScenarioConfig, ScenarioError, bundled_path, bundled_scenarios, load_scenario, scenario_from_dict
from .engine import SimulationDiverged, run_scenario

log = logging.getLogger("phaseguard")

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 2, 3

# Scenarios run by ``suite``; the default acceptance suite.
DEFAULT_SUITE = (
    "baseline.json",
    "shoot_through.json",
    "short_circuit.json",
    "overcurrent.json",
    "overvoltage.json",
    "thermal.json",
    "phase_open.json",
    "sensor_spoof.json",
    "gate_injection.json",
    "discharge_hybrid.json",
    "discharge_passive.json",
)
SWEEP_METRICS = ("t_isolate", "t_detect_fast", "t_detect_supervisory", "availability", "efficiency", "energy_error")


def _with_seed(cfg: ScenarioConfig, seed: int | None) -> ScenarioConfig:
    if seed is None:
        return cfg
    try:
        return replace(cfg, engine=replace(cfg.engine, seed=seed))
    except ValueError as exc:
        raise ScenarioError(f"--seed: {exc}") from None


def run_one(cfg: ScenarioConfig, out_dir: Path) -> dict:
    from .report import write_run

    trace, report = run_scenario(cfg)
    summary = write_run(trace, report, out_dir)
    if cfg.output.plots:
        from .plots import render_all

        render_all([summary], out_dir)
    return summary


def cmd_run(args) -> int:
    cfg = _with_seed(load_scenario(args.scenario), args.seed)
    summary = run_one(cfg, Path(args.out))
    m = summary["metrics"]
    log.info("%s: %d detection(s), availability %.4f, energy error %.2e -> %s",
             cfg.name, len(summary["detections"]), m["availability"], m["energy_error"], args.out)
    return EXIT_OK


# -- sweeps --------------------------------------------------------------------


def _read_json(path) -> dict:
    path = Path(path)
    if not path.exists() and bundled_path(path.name).is_file():
        return json.loads(bundled_path(path.name).read_text())
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def set_path(data: dict, dotted: str, value) -> None:
    """Set ``value`` at a dotted path such as ``faults.0.t_start``."""
    parts = dotted.split(".")
    node = data
    for part in parts[:-1]:
        if isinstance(node, list):
            node = node[int(part)]
        else:
            node = node.setdefault(part, {})
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def expand_sweep(sweep_def: dict, base_dir: Path | None = None) -> list[tuple[str, dict, ScenarioConfig]]:
    """Grid cells as ``(cell_id, {param: value}, config)`` in stable order."""
    if not isinstance(sweep_def, dict):
        raise ScenarioError("sweep: expected a JSON object")
    unknown = sorted(set(sweep_def) - {"name", "base", "scenario", "base_overrides", "grid", "metrics"})
    if unknown:
        raise ScenarioError(f"sweep: unknown key(s) {', '.join(unknown)}")
    if "scenario" in sweep_def:
        base = sweep_def["scenario"]
    elif "base" in sweep_def:
        ref = Path(sweep_def["base"])
        if base_dir is not None and not ref.is_absolute() and (base_dir / ref).exists():
            ref = base_dir / ref
        base = _read_json(ref)
    else:
        raise ScenarioError("sweep: needs 'base' or 'scenario'")
    base = _merge(base, sweep_def.get("base_overrides", {}))
    grid = sweep_def.get("grid") or {}
    if not isinstance(grid, dict) or not grid:
        raise ScenarioError("sweep: grid is empty")
    if len(grid) > 2:
        raise ScenarioError("sweep: grid may vary at most two fields")
    names = list(grid)
    for name in names:
        if not isinstance(grid[name], list) or not grid[name]:
            raise ScenarioError(f"sweep: grid field {name!r} has no values")
    prefix = sweep_def.get("name", "sweep")
    cells = []
    for idx, combo in enumerate(itertools.product(*(grid[n] for n in names))):
        data = copy.deepcopy(base)
        params = dict(zip(names, combo))
        for key, value in params.items():
            try:
                set_path(data, key, value)
            except (IndexError, ValueError, TypeError, AttributeError):
                raise ScenarioError(f"sweep: cannot set {key!r}") from None
        cell_id = f"{prefix}-{idx:03d}"
        data["name"] = data.get("name", prefix)
        try:
            cfg = scenario_from_dict(data)
        except ScenarioError as exc:
            raise ScenarioError(f"{cell_id}: {exc}") from None
        cells.append((cell_id, params, cfg))
    return cells


def _cell_row(cell_id: str, params: dict, summary: dict, metrics: list[str]) -> dict:
    m = summary["metrics"]
    first = m["faults"][0] if m["faults"] else {}
    eff = next(iter(m["efficiency"].values()), None) if m["efficiency"] else None
    values = {
        "t_isolate": first.get("t_isolate"),
        "t_detect_fast": first.get("t_detect_fast"),
        "t_detect_supervisory": first.get("t_detect_supervisory"),
        "availability": m["availability"],
        "efficiency": eff,
        "energy_error": m["energy_error"],
    }
    row = {"id": cell_id, **params}
    for key in metrics:
        row[key] = values[key]
    return row


def _run_cell(job):
    cell_id, cfg, out_dir = job
    summary = run_one(cfg, out_dir)
    return cell_id, summary


def _threads(n_jobs: int) -> int:
    env = os.environ.get("PHASEGUARD_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ScenarioError(f"PHASEGUARD_THREADS must be an integer, got {env!r}") from None
    return max(1, min(cap, n_jobs))


def run_sweep(sweep_def: dict, out_dir: Path, seed: int | None = None, base_dir: Path | None = None) -> list[dict]:
    cells = expand_sweep(sweep_def, base_dir)
    metrics = sweep_def.get("metrics") or list(SWEEP_METRICS)
    bad = [m for m in metrics if m not in SWEEP_METRICS]
    if bad:
        raise ScenarioError(f"sweep: unknown metric(s) {', '.join(bad)}")
    out_dir = Path(out_dir)
    jobs = [(cid, _with_seed(cfg, seed), out_dir / "cells" / cid) for cid, _, cfg in cells]
    workers = _threads(len(jobs))
    if workers == 1:
        results = dict(_run_cell(j) for j in jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_run_cell, jobs))
    rows = [_cell_row(cid, params, results[cid], metrics) for cid, params, _ in cells]
    rows.sort(key=lambda r: r["id"])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    from .report import atomic_write_text

    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "sweep.csv", buf.getvalue())
    return rows


def cmd_sweep(args) -> int:
    path = Path(args.sweep)
    sweep_def = _read_json(path)
    rows = run_sweep(sweep_def, Path(args.out), args.seed, path.parent if path.exists() else None)
    log.info("%d cell(s) -> %s", len(rows), Path(args.out) / "sweep.csv")
    return EXIT_OK


# -- plots ---------------------------------------------------------------------


def collect_summaries(paths) -> list[dict]:
    from .plots import PlotInputError

    files = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(p.rglob("summary.json")))
        elif p.is_file():
            files.append(p)
        else:
            raise PlotInputError(f"{p}: no such file or directory")
    if not files:
        raise PlotInputError("no summary.json found")
    out = []
    for f in files:
        try:
            out.append(json.loads(f.read_text()))
        except json.JSONDecodeError as exc:
            raise PlotInputError(f"{f}: invalid JSON ({exc})") from None
    return out


def cmd_plot(args) -> int:
    from .plots import render_all

    written = render_all(collect_summaries(args.artifacts), Path(args.out))
    log.info("wrote %s", ", ".join(written) or "nothing")
    return EXIT_OK


def cmd_suite(args) -> int:
    from .plots import render_all

    out = Path(args.out)
    jobs = [(Path(name).stem, _with_seed(load_scenario(name), args.seed), out / "runs" / Path(name).stem)
            for name in DEFAULT_SUITE]
    workers = _threads(len(jobs))
    if workers == 1:
        summaries = [s for _, s in map(_run_cell, jobs)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = [s for _, s in pool.map(_run_cell, jobs)]
    run_sweep(_read_json(bundled_path("sweep_isolation.json")), out / "sweep", args.seed)
    sweep_summaries = collect_summaries([out / "sweep" / "cells"])
    written = render_all(summaries + sweep_summaries, out / "plots")
    log.info("suite: %d run(s), plots: %s", len(summaries), ", ".join(written))
    return EXIT_OK


def cmd_list(args) -> int:
    for name in bundled_scenarios():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phaseguard", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--seed", type=int, default=None, help="override engine.seed")
    parser.add_argument("--quiet", action="store_true", help="only report errors")
    # the same flags after the subcommand; SUPPRESS keeps them from resetting the top-level values
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override engine.seed")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="only report errors")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run one scenario")
    p.add_argument("scenario", help="scenario JSON file or bundled scenario name")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", parents=[common], help="run a parameter grid")
    p.add_argument("sweep")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("plot", parents=[common], help="render SVG figures from summaries")
    p.add_argument("artifacts", nargs="+", help="summary.json files or directories containing them")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_plot)
    p = sub.add_parser("suite", parents=[common], help="run the default suite, isolation sweep and plots")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_suite)
    p = sub.add_parser("list", parents=[common], help="list bundled scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    from .plots import PlotInputError

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(message)s", force=True)
    try:
        return args.func(args)
    except (ScenarioError, PlotInputError) as exc:
        log.error("error: %s", exc)
        return EXIT_INVALID
    except SimulationDiverged as exc:
        log.error("error: %s", exc)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
