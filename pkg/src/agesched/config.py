"""Experiment configuration: JSON documents, validation, canonical hashing.

A config is a single JSON object. Validation reports every problem with
its field path. Parsing produces a canonical form (defaults filled, keys
sorted) whose SHA-256 prefix identifies the experiment in every output
row, so re-running identical config bytes reproduces identical outputs.

Experiment document:

    {
      "network": {
        "links": 20,
        "weights": 1.0,                      // scalar or per-link list
        "interference": {"kofn": 5},         // or {"explicit": [[0,1],[2]]}
        "channel": {                         // two-level form
          "good": 0.9, "bad": 0.1, "theta": 0.25,
          "assignment": "prefix",            // or "random"
          "assignment_seed": 0
        }                                    // or {"per_link": [...]}
      },
      "policies": [
        {"kind": "stationary"},
        {"kind": "virtual-queue", "V": 1.0},
        {"kind": "age", "beta": 1.0},
        {"kind": "round-robin"}
      ],
      "horizon": 100000,
      "seeds": [1, 2, ..., 10],              // default 1..10
      "trace_level": "none",
      "checkpoints": []
    }

Sweep document: {"axis": "theta"|"beta"|"V"|"time", "values": [...],
"base": <experiment document>}. Each axis value derives a point experiment
from the base: theta rewrites the channel mix, beta and V rewrite the
matching policy entries, and time turns the values into checkpoint slot
counts of a single long run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import Explicit, KofN, NetworkSpec, mixed_success_probs, validate_network

__all__ = [
    "ExperimentConfig",
    "SweepConfig",
    "DEFAULT_SEEDS",
    "validate_experiment",
    "validate_sweep",
    "parse_experiment",
    "parse_sweep",
    "point_experiment",
    "canonical_json",
    "config_hash",
    "load_json",
]

DEFAULT_SEEDS = tuple(range(1, 11))
POLICY_KINDS = ("stationary", "virtual-queue", "age", "round-robin")
SWEEP_AXES = ("theta", "beta", "V", "time")


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()[:12]


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _check_network(net, errors, path="network") -> None:
    if not isinstance(net, dict):
        errors.append(f"{path}: must be an object")
        return
    n = net.get("links")
    if not _is_int(n) or n < 1:
        errors.append(f"{path}.links: must be an integer >= 1")
        n = None

    w = net.get("weights", 1.0)
    if _is_num(w):
        if w <= 0:
            errors.append(f"{path}.weights: must be positive")
    elif isinstance(w, list):
        if not all(_is_num(x) and x > 0 for x in w):
            errors.append(f"{path}.weights: entries must be positive numbers")
        elif n is not None and len(w) != n:
            errors.append(f"{path}.weights: expected {n} entries, got {len(w)}")
    else:
        errors.append(f"{path}.weights: must be a number or list")

    intf = net.get("interference")
    if not isinstance(intf, dict) or len(intf) != 1 or not set(intf) <= {"kofn", "explicit"}:
        errors.append(f"{path}.interference: must be {{'kofn': k}} or {{'explicit': [[...]]}}")
    elif "kofn" in intf:
        if not _is_int(intf["kofn"]) or intf["kofn"] < 1:
            errors.append(f"{path}.interference.kofn: must be an integer >= 1")
    else:
        sets = intf["explicit"]
        if not isinstance(sets, list) or not sets:
            errors.append(f"{path}.interference.explicit: must be a non-empty list of sets")
        else:
            for i, m in enumerate(sets):
                if not isinstance(m, list) or not m or not all(_is_int(e) for e in m):
                    errors.append(
                        f"{path}.interference.explicit[{i}]: must be a non-empty list of ints"
                    )

    ch = net.get("channel")
    if not isinstance(ch, dict):
        errors.append(f"{path}.channel: must be an object")
    elif "per_link" in ch:
        pl = ch["per_link"]
        if not isinstance(pl, list) or not all(_is_num(x) and 0 < x <= 1 for x in pl):
            errors.append(f"{path}.channel.per_link: entries must be numbers in (0, 1]")
        elif n is not None and len(pl) != n:
            errors.append(f"{path}.channel.per_link: expected {n} entries, got {len(pl)}")
    else:
        for keyname in ("good", "bad"):
            val = ch.get(keyname, {"good": 0.9, "bad": 0.1}[keyname])
            if not _is_num(val) or not 0 < val <= 1:
                errors.append(f"{path}.channel.{keyname}: must be a number in (0, 1]")
        th = ch.get("theta")
        if not _is_num(th) or not 0 <= th <= 1:
            errors.append(f"{path}.channel.theta: must be a number in [0, 1]")
        if ch.get("assignment", "prefix") not in ("prefix", "random"):
            errors.append(f"{path}.channel.assignment: must be 'prefix' or 'random'")
        if not _is_int(ch.get("assignment_seed", 0)):
            errors.append(f"{path}.channel.assignment_seed: must be an integer")


def validate_experiment(raw) -> list:
    """All schema problems in an experiment document, with field paths."""
    errors = []
    if not isinstance(raw, dict):
        return ["config: must be a JSON object"]
    if "network" not in raw:
        errors.append("network: required")
    else:
        _check_network(raw["network"], errors)

    pols = raw.get("policies")
    if not isinstance(pols, list) or not pols:
        errors.append("policies: must be a non-empty list")
    else:
        for i, p in enumerate(pols):
            if not isinstance(p, dict) or p.get("kind") not in POLICY_KINDS:
                errors.append(f"policies[{i}].kind: must be one of {list(POLICY_KINDS)}")
                continue
            if p["kind"] == "virtual-queue":
                v = p.get("V", 1.0)
                if not _is_num(v) or v <= 0:
                    errors.append(f"policies[{i}].V: must be a positive number")
            if p["kind"] == "age":
                b = p.get("beta", 1.0)
                if not _is_num(b) or b < -1:
                    errors.append(f"policies[{i}].beta: must be a number >= -1")

    horizon = raw.get("horizon")
    if not _is_int(horizon) or horizon < 1:
        errors.append("horizon: must be an integer >= 1")

    seeds = raw.get("seeds", list(DEFAULT_SEEDS))
    if not isinstance(seeds, list) or not seeds or not all(_is_int(s) and s >= 0 for s in seeds):
        errors.append("seeds: must be a non-empty list of integers >= 0")
    elif len(set(seeds)) != len(seeds):
        errors.append("seeds: must not repeat")

    if raw.get("trace_level", "none") not in ("none", "aggregates", "full"):
        errors.append("trace_level: must be 'none', 'aggregates', or 'full'")

    cps = raw.get("checkpoints", [])
    if not isinstance(cps, list) or not all(_is_int(c) and c >= 1 for c in cps):
        errors.append("checkpoints: must be a list of integers >= 1")
    elif _is_int(horizon) and any(c > horizon for c in cps):
        errors.append("checkpoints: must not exceed horizon")

    if not errors:
        # Semantic network validation (coverage etc.) on the built spec.
        spec = _build_spec(raw["network"])
        for problem in validate_network(spec):
            errors.append(f"network: {problem}")
    return errors


def _canonical_experiment(raw: dict) -> dict:
    net = raw["network"]
    ch = net["channel"]
    if "per_link" in ch:
        channel = {"per_link": [float(x) for x in ch["per_link"]]}
    else:
        channel = {
            "good": float(ch.get("good", 0.9)),
            "bad": float(ch.get("bad", 0.1)),
            "theta": float(ch["theta"]),
            "assignment": ch.get("assignment", "prefix"),
            "assignment_seed": int(ch.get("assignment_seed", 0)),
        }
    intf = net["interference"]
    if "kofn" in intf:
        interference = {"kofn": int(intf["kofn"])}
    else:
        interference = {"explicit": [sorted(int(e) for e in m) for m in intf["explicit"]]}
    w = net.get("weights", 1.0)
    weights = float(w) if _is_num(w) else [float(x) for x in w]
    policies = []
    for p in raw["policies"]:
        entry = {"kind": p["kind"]}
        if p["kind"] == "virtual-queue":
            entry["V"] = float(p.get("V", 1.0))
        elif p["kind"] == "age":
            entry["beta"] = float(p.get("beta", 1.0))
        policies.append(entry)
    return {
        "network": {
            "links": int(net["links"]),
            "weights": weights,
            "interference": interference,
            "channel": channel,
        },
        "policies": policies,
        "horizon": int(raw["horizon"]),
        "seeds": [int(s) for s in raw.get("seeds", list(DEFAULT_SEEDS))],
        "trace_level": raw.get("trace_level", "none"),
        "checkpoints": sorted(int(c) for c in raw.get("checkpoints", [])),
    }


def _build_spec(net: dict) -> NetworkSpec:
    n = int(net["links"])
    ch = net["channel"]
    if "per_link" in ch:
        probs = np.asarray([float(x) for x in ch["per_link"]])
    else:
        probs = mixed_success_probs(
            n,
            float(ch["theta"]),
            good=float(ch.get("good", 0.9)),
            bad=float(ch.get("bad", 0.1)),
            assignment=ch.get("assignment", "prefix"),
            assignment_seed=int(ch.get("assignment_seed", 0)),
        )
    intf = net["interference"]
    if "kofn" in intf:
        interference = KofN(int(intf["kofn"]))
    else:
        interference = Explicit([tuple(m) for m in intf["explicit"]])
    return NetworkSpec(n, net.get("weights", 1.0), probs, interference)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment: built network plus run plan and canonical form."""

    canonical: dict
    spec: NetworkSpec
    policies: tuple  # of (kind, params dict)
    horizon: int
    seeds: tuple
    trace_level: str
    checkpoints: tuple

    @property
    def hash(self) -> str:
        return config_hash(self.canonical)


def parse_experiment(raw: dict) -> ExperimentConfig:
    """Validate and parse; raises ValueError listing every schema problem."""
    errors = validate_experiment(raw)
    if errors:
        raise ValueError("invalid config: " + "; ".join(errors))
    canon = _canonical_experiment(raw)
    policies = tuple(
        (p["kind"], {k: v for k, v in p.items() if k != "kind"}) for p in canon["policies"]
    )
    return ExperimentConfig(
        canonical=canon,
        spec=_build_spec(canon["network"]),
        policies=policies,
        horizon=canon["horizon"],
        seeds=tuple(canon["seeds"]),
        trace_level=canon["trace_level"],
        checkpoints=tuple(canon["checkpoints"]),
    )


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    values: tuple
    base: ExperimentConfig


def validate_sweep(raw) -> list:
    errors = []
    if not isinstance(raw, dict):
        return ["sweep: must be a JSON object"]
    axis = raw.get("axis")
    if axis not in SWEEP_AXES:
        errors.append(f"axis: must be one of {list(SWEEP_AXES)}")
    values = raw.get("values")
    if not isinstance(values, list) or not values:
        errors.append("values: must be a non-empty list")
        values = []
    base = raw.get("base")
    if not isinstance(base, dict):
        errors.append("base: must be an experiment object")
        return errors
    errors.extend(f"base.{e}" for e in validate_experiment(base))
    if errors:
        return errors

    if axis == "theta":
        if "per_link" in base["network"]["channel"]:
            errors.append("axis: theta sweeps need the two-level channel form")
        if not all(_is_num(v) and 0 <= v <= 1 for v in values):
            errors.append("values: theta values must lie in [0, 1]")
    elif axis == "beta":
        if not all(_is_num(v) and v >= -1 for v in values):
            errors.append("values: beta values must be >= -1")
        if not any(p.get("kind") == "age" for p in base["policies"]):
            errors.append("values: beta sweep needs an 'age' policy in base.policies")
    elif axis == "V":
        if not all(_is_num(v) and v > 0 for v in values):
            errors.append("values: V values must be positive")
        if not any(p.get("kind") == "virtual-queue" for p in base["policies"]):
            errors.append("values: V sweep needs a 'virtual-queue' policy in base.policies")
    elif axis == "time":
        if not all(_is_int(v) and v >= 1 for v in values):
            errors.append("values: time values must be integers >= 1")
        elif sorted(values) != values or len(set(values)) != len(values):
            errors.append("values: time values must be strictly increasing")
    return errors


def parse_sweep(raw: dict) -> SweepConfig:
    errors = validate_sweep(raw)
    if errors:
        raise ValueError("invalid sweep: " + "; ".join(errors))
    base = parse_experiment(raw["base"])
    values = tuple(int(v) if raw["axis"] == "time" else float(v) for v in raw["values"])
    return SweepConfig(axis=raw["axis"], values=values, base=base)


def point_experiment(sweep: SweepConfig, value) -> ExperimentConfig:
    """Derive the experiment for one axis value of a sweep.

    For the time axis every value shares a single derived experiment whose
    checkpoints are the values themselves; pass any of them.
    """
    doc = json.loads(canonical_json(sweep.base.canonical))
    if sweep.axis == "theta":
        doc["network"]["channel"]["theta"] = float(value)
    elif sweep.axis == "beta":
        for p in doc["policies"]:
            if p["kind"] == "age":
                p["beta"] = float(value)
    elif sweep.axis == "V":
        for p in doc["policies"]:
            if p["kind"] == "virtual-queue":
                p["V"] = float(value)
    else:
        doc["horizon"] = int(max(sweep.values))
        doc["checkpoints"] = sorted(int(v) for v in sweep.values)
        if doc["trace_level"] == "none":
            doc["trace_level"] = "aggregates"
    return parse_experiment(doc)
