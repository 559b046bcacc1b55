"""Command-line interface.

Subcommands:

  validate   check an experiment or sweep config and print its hash
  solve      solve the stationary schedule for a config's network
  simulate   run the configured policy-seed grid, write results/bounds/manifest
  sweep      run a single-axis sweep config
  plotdata   distill sweep outputs into figure data CSVs and render PNGs

Exit codes: 0 success, 1 invalid config, 2 solver did not converge,
3 file I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_json, parse_experiment, parse_sweep
from .experiments import SolverError, emit_plot_data, run_experiment, run_sweep
from .network import KofN
from .stationary import average_age_lower_bound, solve_stationary

__all__ = ["main"]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="agesched",
        description="Age-of-information scheduling: stationary solver and policy simulator.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, out_required=True):
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", required=out_required, help="output path prefix")
        sp.add_argument("--seeds", help="comma-separated seed override, e.g. 1,2,3")
        sp.add_argument("--horizon", type=int, help="slot-count override")
        sp.add_argument("--engine", default="auto", choices=["auto", "fast", "reference"])
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        sp.add_argument("--solver-tol", type=float, default=1e-9, help="duality gap target")

    sp = sub.add_parser("validate", help="check a config file")
    sp.add_argument("--config", required=True, help="JSON config file")

    sp = sub.add_parser("solve", help="solve the stationary schedule")
    sp.add_argument("--config", required=True, help="JSON config file")
    sp.add_argument("--out", help="write solution JSON here instead of stdout")
    sp.add_argument("--solver-tol", type=float, default=1e-9, help="duality gap target")

    add_common(sub.add_parser("simulate", help="run one experiment"))
    add_common(sub.add_parser("sweep", help="run a single-axis sweep"))

    sp = sub.add_parser("plotdata", help="build figure data from sweep outputs")
    sp.add_argument(
        "--inputs",
        required=True,
        help="directory holding *_results.csv / *_manifest.json pairs",
    )
    sp.add_argument("--out", required=True, help="directory for figure data files")
    sp.add_argument(
        "--no-figures", action="store_true", help="write data files only, skip PNGs"
    )
    return p


def _load_doc(path: str, args) -> dict:
    doc = load_json(path)
    if not isinstance(doc, dict):
        raise ValueError("top-level config must be a JSON object")
    target = doc.get("base") if _is_sweep_doc(doc) else doc
    if isinstance(target, dict):
        if args is not None and getattr(args, "seeds", None):
            target["seeds"] = [int(s) for s in args.seeds.split(",") if s]
        if args is not None and getattr(args, "horizon", None):
            target["horizon"] = args.horizon
    return doc


def _is_sweep_doc(doc: dict) -> bool:
    return "base" in doc or "axis" in doc or "values" in doc


def _parse_any(doc: dict):
    """Parse a config document as a sweep when it has sweep keys."""
    if _is_sweep_doc(doc):
        return parse_sweep(doc), True
    return parse_experiment(doc), False


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, SolverError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, SolverError):
            return 2
        if isinstance(exc, OSError):
            return 3
        return 1


def _dispatch(args) -> int:
    if args.command == "validate":
        doc = _load_doc(args.config, None)
        cfg, is_sweep = _parse_any(doc)
        if is_sweep:
            print(f"ok: sweep over {cfg.axis} ({len(cfg.values)} points)")
            for v in cfg.values:
                print(f"  {v}: {point_hash(cfg, v)}")
        else:
            print(f"ok: {cfg.hash}")
        return 0

    if args.command == "solve":
        doc = _load_doc(args.config, None)
        cfg, is_sweep = _parse_any(doc)
        if is_sweep:
            raise ValueError("solve takes an experiment config, not a sweep")
        sol = solve_stationary(cfg.spec, tol=args.solver_tol)
        if not sol.converged:
            raise SolverError(
                f"gap {sol.gap:.3e} after {sol.iterations} iterations"
            )
        intf = cfg.spec.interference
        payload = {
            "config_hash": cfg.hash,
            "support": [list(m) for m in sol.support],
            "probs": list(sol.probs),
            "freqs": [float(f) for f in sol.freqs],
            "peak_opt": sol.peak_opt,
            "avg_lower_bound": average_age_lower_bound(sol, cfg.spec),
            "gap": sol.gap,
            "iterations": sol.iterations,
            "kofn": intf.k if isinstance(intf, KofN) else None,
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(args.out)
        else:
            sys.stdout.write(text)
        return 0

    if args.command in ("simulate", "sweep"):
        doc = _load_doc(args.config, args)
        cfg, is_sweep = _parse_any(doc)
        if args.command == "simulate" and is_sweep:
            raise ValueError("simulate takes an experiment config; use the sweep command")
        if args.command == "sweep" and not is_sweep:
            raise ValueError("sweep requires a config with a sweep block")
        runner = run_sweep if is_sweep else run_experiment
        paths = runner(
            cfg,
            args.out,
            engine=args.engine,
            jobs=args.jobs,
            solver_tol=args.solver_tol,
        )
        for key in ("results", "bounds", "manifest"):
            print(paths[key])
        for tpath in paths.get("traces", []):
            print(tpath)
        return 0

    if args.command == "plotdata":
        produced = emit_plot_data(args.inputs, args.out, render=not args.no_figures)
        for name in sorted(produced):
            print(f"{name}: {produced[name]}")
        return 0

    raise ValueError(f"unknown command {args.command!r}")


def point_hash(sweep, value) -> str:
    from .config import point_experiment

    return point_experiment(sweep, value).hash


if __name__ == "__main__":
    sys.exit(main())
