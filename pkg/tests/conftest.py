"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from agesched import (
    Explicit,
    KofN,
    NetworkSpec,
    RunConfig,
    mixed_success_probs,
    run_simulation,
)


def kofn_spec(n, k, weights=1.0, gammas=0.9) -> NetworkSpec:
    return NetworkSpec(
        link_count=n, weights=weights, success_probs=gammas, interference=KofN(k)
    )


def explicit_spec(sets, weights=1.0, gammas=0.9, n=None) -> NetworkSpec:
    if n is None:
        n = 1 + max(e for m in sets for e in m)
    return NetworkSpec(
        link_count=n,
        weights=weights,
        success_probs=gammas,
        interference=Explicit(tuple(tuple(m) for m in sets)),
    )


def two_level_spec(theta, n=20, k=5) -> NetworkSpec:
    """The 20-link reference network: weight 1, gamma 0.9 or 0.1."""
    return kofn_spec(n, k, 1.0, mixed_success_probs(n, theta))


def simulate(spec, policy, horizon, seed, engine="auto", **kwargs):
    run = RunConfig(horizon=horizon, seed=seed, **kwargs)
    return run_simulation(spec, policy, run, engine=engine)


def grid_best(spec, steps=400, refine=120) -> float:
    """Grid-search minimum of the peak objective over an explicit family.

    Exhaustive over the probability simplex for two- or three-set
    families, with one local refinement pass around the coarse winner.
    Independent of the iterative solver; serves as its oracle.
    """
    sets = spec.interference.sets
    n, s = spec.link_count, len(sets)
    if s not in (2, 3):
        raise ValueError("grid oracle supports 2- or 3-set families only")
    incidence = np.zeros((n, s))
    for j, members in enumerate(sets):
        incidence[list(members), j] = 1.0
    cost = spec.weights / spec.success_probs

    def best_on(points) -> tuple:
        freqs = incidence @ points
        with np.errstate(divide="ignore"):
            obj = np.where(freqs > 0, 1.0 / freqs, np.inf)
        totals = cost @ obj
        i = int(np.argmin(totals))
        return float(totals[i]), points[:, i]

    def simplex(lo, hi, count) -> np.ndarray:
        axes = [np.linspace(max(0.0, l), min(1.0, h), count) for l, h in zip(lo, hi)]
        if s == 2:
            a = axes[0]
            return np.vstack([a, 1.0 - a])
        a, b = np.meshgrid(axes[0], axes[1])
        keep = a + b <= 1.0 + 1e-12
        return np.vstack([a[keep], b[keep], 1.0 - a[keep] - b[keep]])

    coarse, at = best_on(simplex([0.0] * (s - 1), [1.0] * (s - 1), steps + 1))
    width = 2.0 / steps
    fine, _ = best_on(
        simplex([x - width for x in at[: s - 1]], [x + width for x in at[: s - 1]], refine + 1)
    )
    return min(coarse, fine)
