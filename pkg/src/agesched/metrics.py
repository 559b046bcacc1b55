"""Age estimators, conservation and identity checks, and bound reports.

Ages are accumulated streamingly during simulation; this module turns the
raw per-link sums into estimates and checks them against the analytic
guarantees of the stationary optimum.

Statistical tolerances live in one table below. At the default horizon of
1e5 slots every estimator here averages at least a few thousand renewal
cycles per link, so three standard errors of the heaviest-tailed case
(success rate 0.025, geometric ages, ~2500 samples: 3/sqrt(2500) = 6%
per link, under 2% for 20-link network aggregates) sit within MEAN_RTOL,
and the tighter tolerances cover the better-sampled aggregate quantities
they are applied to.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import NetworkSpec
from .stationary import StationarySolution

__all__ = [
    "CONSERVATION_TOL",
    "IDENTITY_RTOL",
    "MEAN_RTOL",
    "BOUND_RTOL",
    "BOUND_NAMES",
    "CheckpointSeries",
    "SlotTraceArrays",
    "SimulationResult",
    "summarize_run",
    "peak_age_estimate",
    "avg_age_estimate",
    "conservation_check",
    "avg_age_identity_check",
    "BoundReport",
    "bound_reports",
]

# Tolerance table. Empirical quantities at horizon 1e5; see module docstring.
CONSERVATION_TOL = 0.02  # |time-avg of served age - 1| per link
IDENTITY_RTOL = 0.02  # average-age identity, relative, per link
MEAN_RTOL = 0.05  # single-run mean vs analytic mean, relative
BOUND_RTOL = 0.02  # slack granted to empirical sides of analytic bounds

# Report labels for the analytic guarantees checked against runs.
BOUND_NAMES = ("Thm2_peak", "Thm3_peak", "Thm3_avg", "Lemma4", "Eq12_lower")


@dataclass(frozen=True)
class CheckpointSeries:
    """Cumulative per-link sums captured after the given slot counts."""

    slots: np.ndarray  # (C,)
    peak_sum: np.ndarray  # (C, n)
    successes: np.ndarray  # (C, n)
    age_sum: np.ndarray  # (C, n)
    activations: np.ndarray  # (C, n)

    def network_peak(self, weights) -> np.ndarray:
        """Weighted running peak estimate at each checkpoint."""
        with np.errstate(divide="ignore", invalid="ignore"):
            per_link = np.where(self.successes > 0, self.peak_sum / self.successes, np.inf)
        return per_link @ np.asarray(weights)

    def network_avg(self, weights) -> np.ndarray:
        per_link = self.age_sum / self.slots[:, None]
        return per_link @ np.asarray(weights)


@dataclass(frozen=True)
class SlotTraceArrays:
    """Full per-slot record: which links were scheduled and which succeeded."""

    scheduled: np.ndarray  # (T, n) uint8
    successes: np.ndarray  # (T, n) uint8


@dataclass(frozen=True)
class SimulationResult:
    """Streaming aggregates of one simulated run plus derived estimates."""

    policy: str
    seed: int
    horizon: int
    # raw per-link sums
    age_sum: np.ndarray  # sum of A_e(t) over all slots
    peak_sum: np.ndarray  # sum of A_e(t) over successful service slots
    successes: np.ndarray
    activations: np.ndarray
    sched_age_sum: np.ndarray  # sum of A_e(t) over scheduled slots
    sched_age2_sum: np.ndarray  # sum of A_e(t)^2 over scheduled slots
    max_age: np.ndarray
    # derived estimates
    link_peak: np.ndarray
    link_avg: np.ndarray
    conservation_residual: np.ndarray
    network_peak: float
    network_avg: float
    final_q: Optional[np.ndarray] = None
    checkpoints: Optional[CheckpointSeries] = None
    trace: Optional[SlotTraceArrays] = None


def summarize_run(
    policy: str,
    seed: int,
    horizon: int,
    weights,
    age_sum,
    peak_sum,
    successes,
    activations,
    sched_age_sum,
    sched_age2_sum,
    max_age,
    final_q=None,
    checkpoints=None,
    trace=None,
) -> SimulationResult:
    """Build a SimulationResult from raw per-link sums."""
    w = np.asarray(weights, dtype=float)
    T = int(horizon)
    age_sum = np.asarray(age_sum, dtype=np.int64)
    peak_sum = np.asarray(peak_sum, dtype=np.int64)
    successes = np.asarray(successes, dtype=np.int64)
    activations = np.asarray(activations, dtype=np.int64)
    sched_age_sum = np.asarray(sched_age_sum, dtype=np.int64)
    sched_age2_sum = np.asarray(sched_age2_sum, dtype=np.int64)
    max_age = np.asarray(max_age, dtype=np.int64)
    starved = successes == 0
    if np.any(starved):
        warnings.warn(
            f"links {np.flatnonzero(starved).tolist()} never succeeded; "
            "their peak estimate is +inf",
            stacklevel=2,
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        link_peak = np.where(~starved, peak_sum / np.maximum(successes, 1), np.inf)
    link_avg = age_sum / T
    residual = peak_sum / T - 1.0
    return SimulationResult(
        policy=policy,
        seed=seed,
        horizon=T,
        age_sum=np.asarray(age_sum),
        peak_sum=np.asarray(peak_sum),
        successes=np.asarray(successes),
        activations=np.asarray(activations),
        sched_age_sum=np.asarray(sched_age_sum),
        sched_age2_sum=np.asarray(sched_age2_sum),
        max_age=np.asarray(max_age),
        link_peak=link_peak,
        link_avg=link_avg,
        conservation_residual=residual,
        network_peak=float(link_peak @ w),
        network_avg=float(link_avg @ w),
        final_q=final_q,
        checkpoints=checkpoints,
        trace=trace,
    )


def peak_age_estimate(result: SimulationResult, weights=None):
    """Per-link mean age at success instants, and optionally the weighted sum.

    Links that never succeeded report +inf; a weighted aggregate containing
    such a link is +inf as well.
    """
    if weights is None:
        return result.link_peak
    return result.link_peak, float(result.link_peak @ np.asarray(weights))


def avg_age_estimate(result: SimulationResult, weights=None):
    """Per-link time-averaged age, and optionally the weighted sum."""
    if weights is None:
        return result.link_avg
    return result.link_avg, float(result.link_avg @ np.asarray(weights))


def conservation_check(result: SimulationResult, tol: float = CONSERVATION_TOL):
    """Served-age conservation: (1/T) sum_t served_e(t) A_e(t) -> 1.

    Every unit of age a link accumulates must eventually be cleared by a
    successful service, so the time average of the age cleared per slot
    tends to exactly 1 for every link under any policy that serves it
    infinitely often. Returns (per-link residuals, all within tol).
    """
    res = result.conservation_residual
    return res, bool(np.all(np.abs(res) <= tol))


def avg_age_identity_check(
    result: SimulationResult, spec: NetworkSpec, beta: float, rtol: float = IDENTITY_RTOL
):
    """Average age against its service-weighted quadratic form.

    For any policy, the time-averaged age equals half the time average of
    gamma_e * scheduled_e(t) * (A_e^2 + beta A_e) plus (1 - beta) / 2,
    once successes have been averaged out by the channel probabilities.
    Statistical: both sides are estimated from the same finite run.

    Returns (direct per-link averages, identity-side values, ok flag).
    """
    T = result.horizon
    direct = result.link_avg
    quad = spec.success_probs * (result.sched_age2_sum + beta * result.sched_age_sum) / T
    identity = 0.5 * quad + (1.0 - beta) / 2.0
    rel = np.abs(identity - direct) / np.maximum(np.abs(direct), 1e-12)
    return direct, identity, bool(np.all(rel <= rtol))


@dataclass(frozen=True)
class BoundReport:
    """One analytic guarantee evaluated against run estimates.

    satisfied is lhs <= rhs + tolerance * max(|lhs|, |rhs|, 1); slack is
    rhs - lhs (positive when the bound holds with room).
    """

    bound_name: str
    policy: str
    lhs: float
    rhs: float
    slack: float
    satisfied: bool
    tolerance: float


def _make_report(name: str, policy: str, lhs: float, rhs: float, rtol: float) -> BoundReport:
    scale = max(abs(lhs), abs(rhs), 1.0)
    ok = lhs <= rhs + rtol * scale
    return BoundReport(
        bound_name=name,
        policy=policy,
        lhs=float(lhs),
        rhs=float(rhs),
        slack=float(rhs - lhs),
        satisfied=bool(ok),
        tolerance=rtol,
    )


def vq_peak_bound(solution: StationarySolution, spec: NetworkSpec, v: float) -> float:
    """Guaranteed weighted peak age of the virtual-queue policy."""
    w_total = spec.total_weight
    return solution.peak_opt + 0.5 * w_total + w_total / (2.0 * v)


def _c_avg(beta: float) -> float:
    return (10.0 + 2.0 * beta - beta * beta) / 4.0


def _c_peak(beta: float) -> float:
    return (4.0 + 2.0 * beta - beta * beta) / 2.0


def age_peak_bound(solution: StationarySolution, spec: NetworkSpec, beta: float) -> float:
    """Guaranteed weighted peak age of the age-based policy."""
    return 4.0 * solution.peak_opt - _c_peak(beta) * spec.total_weight


def age_avg_bound(stationary_avg: float, spec: NetworkSpec, beta: float) -> float:
    """Average-age guarantee of the age-based policy, relative to the
    best stationary policy's average (estimated or analytic)."""
    return 4.0 * stationary_avg - _c_avg(beta) * spec.total_weight


def bound_reports(
    result: SimulationResult,
    spec: NetworkSpec,
    solution: StationarySolution,
    v: Optional[float] = None,
    beta: Optional[float] = None,
    stationary_avg: Optional[float] = None,
    rtol: float = BOUND_RTOL,
) -> list:
    """All applicable analytic checks for one run.

    Always emits the peak-vs-average inequality (Lemma4) and the universal
    average-age floor (Eq12_lower). Pass v for a virtual-queue run to add
    its peak guarantee, beta for an age-based run to add its peak
    guarantee, and additionally stationary_avg to add its average
    guarantee.
    """
    w_total = spec.total_weight
    reports = [
        _make_report(
            "Lemma4", result.policy, result.network_peak, 2.0 * result.network_avg - w_total, rtol
        ),
        _make_report(
            "Eq12_lower",
            result.policy,
            0.5 * (solution.peak_opt + w_total),
            result.network_avg,
            rtol,
        ),
    ]
    if v is not None:
        reports.append(
            _make_report(
                "Thm2_peak", result.policy, result.network_peak, vq_peak_bound(solution, spec, v), rtol
            )
        )
    if beta is not None:
        reports.append(
            _make_report(
                "Thm3_peak",
                result.policy,
                result.network_peak,
                age_peak_bound(solution, spec, beta),
                rtol,
            )
        )
        if stationary_avg is not None and math.isfinite(stationary_avg):
            reports.append(
                _make_report(
                    "Thm3_avg",
                    result.policy,
                    result.network_avg,
                    age_avg_bound(stationary_avg, spec, beta),
                    rtol,
                )
            )
    return reports
