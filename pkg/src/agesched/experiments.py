"""Experiment orchestration and delimited outputs.

run_experiment / run_sweep execute the configured policy-seed grid, write
one results CSV (per-link and network rows), one bound-report CSV, and a
manifest JSON mapping each config hash to its canonical config, solved
stationary optimum, and the average-age floor. Rows are sorted canonically
and floats are written with shortest round-trip formatting, so identical
config bytes reproduce byte-identical files.

emit_plot_data distills sweep outputs into per-figure tabular files
(columns x, series, y, y_stderr) and optionally renders them to PNG.
"""

from __future__ import annotations

import csv
import glob
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from .config import ExperimentConfig, SweepConfig, parse_experiment, point_experiment
from .engine import RunConfig, run_simulation
from .metrics import SimulationResult, bound_reports
from .network import KofN
from .policies import AgeBased, RoundRobin, Stationary, VirtualQueue
from .stationary import average_age_lower_bound, solve_stationary

__all__ = [
    "SolverError",
    "RESULT_COLUMNS",
    "BOUND_COLUMNS",
    "PLOT_COLUMNS",
    "run_experiment",
    "run_sweep",
    "emit_plot_data",
]

RESULT_COLUMNS = [
    "config_hash",
    "seed",
    "axis_value",
    "policy",
    "link",
    "peak",
    "avg",
    "successes",
    "activations",
    "conservation_residual",
]
BOUND_COLUMNS = [
    "config_hash",
    "seed",
    "axis_value",
    "policy",
    "bound_name",
    "lhs",
    "rhs",
    "slack",
    "satisfied",
    "tolerance",
]
PLOT_COLUMNS = ["x", "series", "y", "y_stderr"]

FIGURE_FILES = {
    "fig2": "fig2_peak_vs_theta.csv",
    "fig3": "fig3_avg_vs_theta.csv",
    "fig4": "fig4_running_peak.csv",
    "fig5": "fig5_beta_sensitivity.csv",
}


class SolverError(RuntimeError):
    """The stationary solve did not reach its gap target."""


def _fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _policy_instance(kind: str, params: dict, spec, solution):
    if kind == "stationary":
        return Stationary(solution.support, solution.probs)
    if kind == "virtual-queue":
        return VirtualQueue.initial(spec.link_count, v=params.get("V", 1.0))
    if kind == "age":
        return AgeBased(beta=params.get("beta", 1.0))
    if kind == "round-robin":
        return RoundRobin()
    raise ValueError(f"unknown policy kind {kind!r}")


def _label(kind: str, params: dict) -> str:
    if kind == "stationary":
        return "piC"
    if kind == "virtual-queue":
        return f"piQ(V={params.get('V', 1.0):g})"
    if kind == "age":
        return f"piA(beta={params.get('beta', 1.0):g})"
    return "roundrobin"


def _simulate_task(args) -> tuple:
    """Run one (point, policy, seed) cell; top level so pools can pickle it."""
    point_idx, canon, kind, params, support, probs, seed, engine = args
    cfg = parse_experiment(canon)
    solution_stub = _SolutionStub(support, probs)
    policy = _policy_instance(kind, params, cfg.spec, solution_stub)
    run = RunConfig(
        horizon=cfg.horizon,
        seed=seed,
        trace_level=cfg.trace_level,
        checkpoints=cfg.checkpoints,
    )
    result = run_simulation(cfg.spec, policy, run, engine=engine)
    return point_idx, kind, _label(kind, params), seed, result


class _SolutionStub:
    def __init__(self, support, probs):
        self.support = support
        self.probs = probs


def _solve_points(points, solver_tol):
    solutions = []
    for _, cfg in points:
        sol = solve_stationary(cfg.spec, tol=solver_tol)
        if not sol.converged:
            raise SolverError(
                f"stationary solve for config {cfg.hash} stopped at gap {sol.gap:.3e} "
                f"after {sol.iterations} iterations (target {solver_tol:.1e})"
            )
        solutions.append(sol)
    return solutions


def _manifest_entry(cfg: ExperimentConfig, sol, axis: Optional[str], axis_value) -> dict:
    intf = cfg.spec.interference
    return {
        "config": cfg.canonical,
        "axis": axis,
        "axis_value": axis_value,
        "links": cfg.spec.link_count,
        "kofn": intf.k if isinstance(intf, KofN) else None,
        "total_weight": cfg.spec.total_weight,
        "solution": {
            "support": [list(m) for m in sol.support],
            "probs": list(sol.probs),
            "freqs": [float(f) for f in sol.freqs],
            "peak_opt": sol.peak_opt,
            "gap": sol.gap,
            "converged": sol.converged,
            "iterations": sol.iterations,
        },
        "avg_lower_bound": average_age_lower_bound(sol, cfg.spec),
    }


def _link_rows(hash_, seed, axis_value, label, result: SimulationResult, n) -> list:
    rows = []
    for e in range(n):
        rows.append(
            [
                hash_,
                str(seed),
                axis_value,
                label,
                str(e),
                _fmt(result.link_peak[e]),
                _fmt(result.link_avg[e]),
                str(int(result.successes[e])),
                str(int(result.activations[e])),
                _fmt(result.conservation_residual[e]),
            ]
        )
    rows.append(
        [
            hash_,
            str(seed),
            axis_value,
            label,
            "net",
            _fmt(result.network_peak),
            _fmt(result.network_avg),
            str(int(result.successes.sum())),
            str(int(result.activations.sum())),
            _fmt(float(np.abs(result.conservation_residual).max())),
        ]
    )
    return rows


def _checkpoint_rows(hash_, seed, label, result: SimulationResult, weights) -> list:
    """Per-checkpoint rows for time sweeps; axis_value is the slot count."""
    cp = result.checkpoints
    rows = []
    w = np.asarray(weights, dtype=float)
    n = len(w)
    for i, slot in enumerate(cp.slots):
        T = int(slot)
        succ = cp.successes[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            peak = np.where(succ > 0, cp.peak_sum[i] / np.maximum(succ, 1), np.inf)
        avg = cp.age_sum[i] / T
        resid = cp.peak_sum[i] / T - 1.0
        for e in range(n):
            rows.append(
                [
                    hash_,
                    str(seed),
                    str(T),
                    label,
                    str(e),
                    _fmt(peak[e]),
                    _fmt(avg[e]),
                    str(int(succ[e])),
                    str(int(cp.activations[i, e])),
                    _fmt(resid[e]),
                ]
            )
        rows.append(
            [
                hash_,
                str(seed),
                str(T),
                label,
                "net",
                _fmt(float(peak @ w)),
                _fmt(float(avg @ w)),
                str(int(succ.sum())),
                str(int(cp.activations[i].sum())),
                _fmt(float(np.abs(resid).max())),
            ]
        )
    return rows


def _row_sort_key(row):
    try:
        axis = (0, float(row[2]))
    except ValueError:
        axis = (-1, 0.0)
    link = row[4]
    link_key = 10**9 if link == "net" else int(link)
    return (axis, row[3], int(row[1]), link_key, row[5])


def _write_csv(path, columns, rows) -> None:
    rows = sorted(rows, key=_row_sort_key)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _trace_path(prefix, hash_, label, seed) -> str:
    slug = "".join(c for c in label if c.isalnum() or c in "=._-")
    return f"{prefix}_trace_{hash_}_{slug}_{seed}.csv"


def _write_trace(path, result: SimulationResult) -> None:
    tr = result.trace
    n = tr.scheduled.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "scheduled", "successes"])
        for t in range(tr.scheduled.shape[0]):
            sched = ";".join(str(e) for e in np.flatnonzero(tr.scheduled[t]))
            bitmap = "".join("1" if tr.successes[t, e] else "0" for e in range(n))
            writer.writerow([str(t), sched, bitmap])


def _execute(points, out_prefix, engine, jobs, solver_tol, axis):
    """Shared core of run_experiment and run_sweep."""
    solutions = _solve_points(points, solver_tol)
    manifest = {}
    for (axis_value, cfg), sol in zip(points, solutions):
        manifest[cfg.hash] = _manifest_entry(cfg, sol, axis, axis_value)

    tasks = []
    for idx, (_, cfg) in enumerate(points):
        sol = solutions[idx]
        for kind, params in cfg.policies:
            for seed in cfg.seeds:
                tasks.append(
                    (idx, cfg.canonical, kind, params, sol.support, sol.probs, seed, engine)
                )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_simulate_task, tasks))
    else:
        outcomes = [_simulate_task(t) for t in tasks]

    by_cell = {}
    for point_idx, kind, label, seed, result in outcomes:
        by_cell[(point_idx, label, seed)] = (kind, result)

    result_rows = []
    bound_rows = []
    trace_paths = []
    for idx, (axis_value, cfg) in enumerate(points):
        sol = solutions[idx]
        n = cfg.spec.link_count
        axis_str = "" if axis_value is None else _fmt(axis_value)
        for kind, params in cfg.policies:
            label = _label(kind, params)
            for seed in cfg.seeds:
                _, result = by_cell[(idx, label, seed)]
                if axis == "time":
                    result_rows.extend(
                        _checkpoint_rows(cfg.hash, seed, label, result, cfg.spec.weights)
                    )
                else:
                    result_rows.extend(
                        _link_rows(cfg.hash, seed, axis_str, label, result, n)
                    )
                stat_avg = None
                stat_cell = by_cell.get((idx, "piC", seed))
                if stat_cell is not None:
                    stat_avg = stat_cell[1].network_avg
                reports = bound_reports(
                    result,
                    cfg.spec,
                    sol,
                    v=params.get("V") if kind == "virtual-queue" else None,
                    beta=params.get("beta") if kind == "age" else None,
                    stationary_avg=stat_avg,
                )
                b_axis = str(cfg.horizon) if axis == "time" else axis_str
                for rep in reports:
                    bound_rows.append(
                        [
                            cfg.hash,
                            str(seed),
                            b_axis,
                            label,
                            rep.bound_name,
                            _fmt(rep.lhs),
                            _fmt(rep.rhs),
                            _fmt(rep.slack),
                            _fmt(rep.satisfied),
                            _fmt(rep.tolerance),
                        ]
                    )
                if result.trace is not None:
                    tpath = _trace_path(out_prefix, cfg.hash, label, seed)
                    _write_trace(tpath, result)
                    trace_paths.append(tpath)

    paths = {
        "results": f"{out_prefix}_results.csv",
        "bounds": f"{out_prefix}_bounds.csv",
        "manifest": f"{out_prefix}_manifest.json",
    }
    os.makedirs(os.path.dirname(os.path.abspath(paths["results"])), exist_ok=True)
    _write_csv(paths["results"], RESULT_COLUMNS, result_rows)

    def _bound_key(row):
        key = _row_sort_key([row[0], row[1], row[2], row[3], "0", row[5]])
        return (key[0], row[3], int(row[1]), row[4])

    bound_rows = sorted(bound_rows, key=_bound_key)
    with open(paths["bounds"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BOUND_COLUMNS)
        writer.writerows(bound_rows)
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    if trace_paths:
        paths["traces"] = trace_paths
    return paths


def run_experiment(
    cfg: ExperimentConfig,
    out_prefix: str,
    engine: str = "auto",
    jobs: int = 1,
    solver_tol: float = 1e-9,
) -> dict:
    """Run every configured (policy, seed) cell and write the output trio.

    Returns a dict with the written file paths (results, bounds, manifest,
    and trace files when trace_level is \"full\").
    """
    return _execute([(None, cfg)], out_prefix, engine, jobs, solver_tol, axis=None)


def run_sweep(
    sweep: SweepConfig,
    out_prefix: str,
    engine: str = "auto",
    jobs: int = 1,
    solver_tol: float = 1e-9,
) -> dict:
    """Run a single-axis sweep and write the output trio.

    theta, beta, and V sweeps run the full policy-seed grid per axis value;
    a time sweep runs once per policy-seed cell and reports running
    estimates at each checkpoint, with the checkpoint slot count in the
    axis_value column.
    """
    if sweep.axis == "time":
        points = [(None, point_experiment(sweep, sweep.values[0]))]
    else:
        points = [(v, point_experiment(sweep, v)) for v in sweep.values]
    return _execute(points, out_prefix, engine, jobs, solver_tol, axis=sweep.axis)


def _read_outputs(source):
    """Load (rows, manifest) pairs from a directory or list of csv paths."""
    if isinstance(source, (str, os.PathLike)):
        paths = sorted(glob.glob(os.path.join(source, "*_results.csv")))
    else:
        paths = list(source)
    if not paths:
        raise FileNotFoundError(f"no *_results.csv files found in {source}")
    loaded = []
    for path in paths:
        mpath = path[: -len("_results.csv")] + "_manifest.json"
        if not os.path.exists(mpath):
            raise FileNotFoundError(f"missing manifest {mpath} for {path}")
        with open(mpath, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        with open(path, "r", newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        loaded.append((rows, manifest))
    return loaded


def _series_stats(samples: dict) -> list:
    out = []
    for (series, x), ys in sorted(samples.items()):
        arr = np.asarray(ys, dtype=float)
        if np.all(np.isfinite(arr)):
            y = float(arr.mean())
            err = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        else:
            # Running peaks are undefined until every link has succeeded.
            y, err = math.inf, 0.0
        out.append([_fmt(x), series, _fmt(y), _fmt(err)])
    return out


def _policy_series(label: str) -> Optional[str]:
    if label == "piC" or label.startswith("piQ") or label.startswith("piA"):
        return label
    return None


def emit_plot_data(source, out_dir: str, render: bool = True) -> dict:
    """Distill sweep outputs into per-figure tabular files.

    source is a directory containing *_results.csv / *_manifest.json pairs
    (or an explicit list of results CSV paths). Produces up to four files
    in out_dir, columns x, series, y, y_stderr, values averaged over seeds
    with their standard errors:

      fig2  weighted peak age per link vs theta
      fig3  weighted average age per link vs theta, plus the analytic floor
      fig4  running weighted peak age per link vs slots (time sweeps)
      fig5  peak and average per link vs beta

    Figures whose sweep axis is absent from the inputs are reported as
    skipped rather than synthesized. With render=True each produced data
    file is also rendered to a PNG next to it.

    Returns {figure: output path or skip reason}.
    """
    loaded = _read_outputs(source)
    fig2, fig3, fig4, fig5 = {}, {}, {}, {}
    fig3_floor = {}

    for rows, manifest in loaded:
        for row in rows:
            if row["link"] != "net":
                continue
            entry = manifest.get(row["config_hash"])
            if entry is None:
                raise ValueError(f"config hash {row['config_hash']} missing from manifest")
            axis = entry["axis"]
            n = entry["links"]
            kofn = entry["kofn"]
            series = _policy_series(row["policy"])
            if series is None or axis is None:
                continue
            ksuffix = f",K={kofn}" if kofn is not None else ""
            if axis == "theta":
                x = float(row["axis_value"])
                fig2.setdefault((series + ksuffix, x), []).append(float(row["peak"]) / n)
                fig3.setdefault((series + ksuffix, x), []).append(float(row["avg"]) / n)
                fig3_floor[(f"lower-bound{ksuffix}", x)] = [entry["avg_lower_bound"] / n]
            elif axis == "time":
                x = int(row["axis_value"])
                fig4.setdefault((series + ksuffix, x), []).append(float(row["peak"]) / n)
            elif axis == "beta":
                if not series.startswith("piA"):
                    continue
                x = float(row["axis_value"])
                fig5.setdefault((f"peak{ksuffix}", x), []).append(float(row["peak"]) / n)
                fig5.setdefault((f"avg{ksuffix}", x), []).append(float(row["avg"]) / n)

    fig3.update(fig3_floor)
    produced = {}
    os.makedirs(out_dir, exist_ok=True)
    for name, samples in (("fig2", fig2), ("fig3", fig3), ("fig4", fig4), ("fig5", fig5)):
        if not samples:
            axis = {"fig2": "theta", "fig3": "theta", "fig4": "time", "fig5": "beta"}[name]
            produced[name] = f"skipped: no {axis}-axis sweep rows in inputs"
            continue
        path = os.path.join(out_dir, FIGURE_FILES[name])
        rows = _series_stats(samples)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(PLOT_COLUMNS)
            writer.writerows(rows)
        produced[name] = path

    if render:
        from .figures import render_figure

        for name, path in list(produced.items()):
            if os.path.exists(str(path)):
                png = render_figure(name, path)
                produced[name + "_png"] = png
    return produced
