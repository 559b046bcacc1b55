"""Scheduling policies over one-slot feedback.

Each policy consumes, at slot t, the feedback from slot t-1 (which links
were scheduled and which of those succeeded; unscheduled links report
nothing) and emits a feasible activation set. Decision rules reduce to a
max-weight activation-set query with nonnegative per-link values, so every
policy works under any interference model the network supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .network import NetworkSpec, canon_set, is_feasible, max_weight_set

__all__ = [
    "SlotFeedback",
    "Stationary",
    "VirtualQueue",
    "AgeBased",
    "RoundRobin",
    "stationary_decide",
    "vq_update",
    "vq_decide",
    "age_decide",
    "round_robin_decide",
]


@dataclass(frozen=True)
class SlotFeedback:
    """Outcome of one slot as observed by the scheduler.

    successes must be a subset of scheduled: the channel state of an
    unscheduled link is never revealed.
    """

    scheduled: tuple
    successes: tuple

    def __post_init__(self):
        object.__setattr__(self, "scheduled", canon_set(self.scheduled))
        object.__setattr__(self, "successes", canon_set(self.successes))
        if not set(self.successes) <= set(self.scheduled):
            extra = sorted(set(self.successes) - set(self.scheduled))
            raise ValueError(f"successes reported for unscheduled links {extra}")


@dataclass(frozen=True)
class Stationary:
    """Randomized stationary policy: sample one set i.i.d. each slot.

    probs may sum to less than 1; the residual mass idles.
    """

    sets: tuple
    probs: tuple

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(canon_set(m) for m in self.sets))
        p = tuple(float(x) for x in self.probs)
        if len(p) != len(self.sets):
            raise ValueError(f"{len(self.sets)} sets but {len(p)} probabilities")
        if any(x < 0 for x in p):
            raise ValueError("probabilities must be nonnegative")
        if sum(p) > 1.0 + 1e-9:
            raise ValueError(f"probabilities sum to {sum(p)}, exceeding 1")
        object.__setattr__(self, "probs", p)

    @cached_property
    def cum_probs(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.probs, dtype=float))


def stationary_decide(state: Stationary, u: float) -> tuple:
    """Pick a set by inverse CDF from a single uniform draw u in [0, 1).

    Set i is chosen when u falls in [cum_{i-1}, cum_i); u at or beyond the
    total mass idles.
    """
    idx = int(np.searchsorted(state.cum_probs, u, side="right"))
    if idx >= len(state.sets):
        return ()
    return state.sets[idx]


@dataclass(frozen=True)
class VirtualQueue:
    """State of the virtual-queue policy: per-link queue q and gain v > 0.

    Queues start at 1 and never drop below 1. Each slot a queue grows by
    sqrt(v / q) and loses 1 if its link was served successfully, so the
    growth rate self-tunes toward the link's service frequency.
    """

    q: np.ndarray
    v: float = 1.0

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.q, dtype=float))
        if arr.ndim != 1:
            raise ValueError("q must be a vector")
        if np.any(arr < 1.0):
            raise ValueError("queue values must be >= 1")
        arr.setflags(write=False)
        object.__setattr__(self, "q", arr)
        if not self.v > 0:
            raise ValueError(f"v must be positive, got {self.v}")

    @classmethod
    def initial(cls, link_count: int, v: float = 1.0) -> "VirtualQueue":
        return cls(q=np.ones(link_count), v=float(v))


def vq_update(state: VirtualQueue, feedback: SlotFeedback) -> VirtualQueue:
    """Advance the queues by one slot of feedback.

    q_e <- max(q_e + sqrt(v / q_e) - served_e, 1) where served_e is 1
    exactly when e was scheduled and its transmission succeeded.
    """
    served = np.zeros(len(state.q))
    for e in feedback.successes:
        served[e] = 1.0
    q = np.maximum(state.q + np.sqrt(state.v / state.q) - served, 1.0)
    return VirtualQueue(q=q, v=state.v)


def vq_decide(state: VirtualQueue, spec: NetworkSpec) -> tuple:
    """Max-weight set under values w_e * gamma_e * q_e."""
    wg = spec.weights * spec.success_probs
    return max_weight_set(spec, wg * state.q)


@dataclass(frozen=True)
class AgeBased:
    """Age-based policy parameters: decision value w_e gamma_e (A^2 + beta A).

    beta below -1 is rejected: it would drive the decision value negative
    at age 1, breaking the nonnegativity the max-weight query requires.
    """

    beta: float = 1.0

    def __post_init__(self):
        if self.beta < -1.0:
            raise ValueError(f"beta must be >= -1, got {self.beta}")


def age_decide(state: AgeBased, ages, spec: NetworkSpec) -> tuple:
    """Max-weight set under values w_e * gamma_e * (A_e^2 + beta * A_e)."""
    a = np.asarray(ages)
    wg = spec.weights * spec.success_probs
    return max_weight_set(spec, wg * (a * a + state.beta * a))


@dataclass(frozen=True)
class RoundRobin:
    """Cyclic single-link baseline; next_index is the link served next."""

    next_index: int = 0


def round_robin_decide(state: RoundRobin, spec: NetworkSpec):
    """Serve the current link and advance the cursor cyclically."""
    n = spec.link_count
    e = state.next_index % n
    chosen = (e,)
    if not is_feasible(spec, chosen):
        raise ValueError(f"singleton {{{e}}} is not feasible; round robin needs singletons")
    return chosen, RoundRobin(next_index=(e + 1) % n)
