"""Network model: links, weights, channel success probabilities, interference.

A network is a set of directed links indexed 0..n-1. Each link e has a
positive weight w_e and an i.i.d. per-slot channel success probability
gamma_e in (0, 1]. Interference constrains which subsets of links may be
activated together; the empty set (idling) is always feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "KofN",
    "Explicit",
    "NetworkSpec",
    "canon_set",
    "validate_network",
    "ensure_valid",
    "is_feasible",
    "max_weight_set",
    "activation_frequencies",
    "mixed_success_probs",
]

# An activation set is a sorted tuple of distinct link indices.
ActivationSet = tuple


def canon_set(members: Iterable[int]) -> tuple:
    """Canonical form of an activation set: sorted tuple of distinct ints."""
    m = tuple(sorted(int(e) for e in members))
    if len(set(m)) != len(m):
        raise ValueError(f"activation set has duplicate links: {m}")
    return m


@dataclass(frozen=True)
class KofN:
    """At most k links may be active in any slot."""

    k: int


@dataclass(frozen=True)
class Explicit:
    """Exactly the listed activation sets are feasible (plus the empty set).

    Sets are canonicalized to sorted tuples at construction. The listed
    order is preserved because external probability vectors index into it.
    """

    sets: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(canon_set(m) for m in self.sets))

    @cached_property
    def canonical_order(self) -> tuple:
        """Indices of `sets` ordered lexicographically by member list.

        Scanning sets in this order with a strict-greater test yields the
        lexicographically smallest member list among argmax ties.
        """
        return tuple(sorted(range(len(self.sets)), key=lambda i: self.sets[i]))


Interference = Union[KofN, Explicit]


def _as_link_vector(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must be a scalar or length-{n} vector, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NetworkSpec:
    """Immutable description of a network instance.

    Parameters
    ----------
    link_count : int
        Number of links n (>= 1).
    weights : float or array_like
        Per-link positive weights; a scalar broadcasts to all links.
    success_probs : float or array_like
        Per-link channel success probabilities gamma_e in (0, 1].
    interference : KofN or Explicit
        Feasible activation-set family.
    """

    link_count: int
    weights: np.ndarray
    success_probs: np.ndarray
    interference: Interference

    def __post_init__(self):
        n = int(self.link_count)
        object.__setattr__(self, "link_count", n)
        if n < 1:
            raise ValueError(f"link_count must be >= 1, got {n}")
        object.__setattr__(self, "weights", _as_link_vector(self.weights, n, "weights"))
        object.__setattr__(
            self, "success_probs", _as_link_vector(self.success_probs, n, "success_probs")
        )

    @cached_property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


def validate_network(spec: NetworkSpec) -> list:
    """Check a network spec, returning a list of error strings (empty if ok)."""
    errors = []
    n = spec.link_count
    if not np.all(spec.weights > 0):
        bad = np.flatnonzero(~(spec.weights > 0)).tolist()
        errors.append(f"weights must be positive; offending links {bad}")
    ok_prob = (spec.success_probs > 0) & (spec.success_probs <= 1)
    if not np.all(ok_prob):
        bad = np.flatnonzero(~ok_prob).tolist()
        errors.append(f"success_probs must lie in (0, 1]; offending links {bad}")

    intf = spec.interference
    if isinstance(intf, KofN):
        if intf.k < 1:
            errors.append(f"KofN k must be >= 1, got {intf.k}")
    elif isinstance(intf, Explicit):
        covered = set()
        seen = {}
        for i, m in enumerate(intf.sets):
            if len(m) == 0:
                errors.append(f"set {i} is empty; idling is implicit and must not be listed")
                continue
            dangling = [e for e in m if not (0 <= e < n)]
            if dangling:
                errors.append(f"set {i} references links outside 0..{n - 1}: {dangling}")
                continue
            if m in seen:
                errors.append(f"set {i} duplicates set {seen[m]}: {m}")
            else:
                seen[m] = i
            covered.update(m)
        uncovered = sorted(set(range(n)) - covered)
        if uncovered:
            # An uncovered link can never be served, so its age grows forever.
            errors.append(f"links {uncovered} appear in no activation set")
    else:
        errors.append(f"unknown interference model: {type(intf).__name__}")
    return errors


def ensure_valid(spec: NetworkSpec) -> NetworkSpec:
    """Raise ValueError listing all problems if the spec is invalid."""
    errors = validate_network(spec)
    if errors:
        raise ValueError("invalid network: " + "; ".join(errors))
    return spec


def is_feasible(spec: NetworkSpec, members: Iterable[int]) -> bool:
    """Whether the given set of links may be activated simultaneously."""
    m = canon_set(members)
    if any(not (0 <= e < spec.link_count) for e in m):
        return False
    intf = spec.interference
    if len(m) == 0:
        return True
    if isinstance(intf, KofN):
        return len(m) <= intf.k
    return m in intf.sets


def max_weight_set(spec: NetworkSpec, values) -> tuple:
    """Feasible activation set maximizing the sum of per-link values.

    Ties are broken toward the lexicographically smallest sorted member
    list, and zero-valued links are never included, so the empty set is
    returned when every value is zero. Values must be nonnegative.

    Parameters
    ----------
    spec : NetworkSpec
    values : array_like
        Nonnegative per-link values, length link_count.

    Returns
    -------
    tuple
        Sorted link indices of the chosen set.
    """
    vals = np.asarray(values, dtype=float)
    if vals.shape != (spec.link_count,):
        raise ValueError(f"values must have length {spec.link_count}, got shape {vals.shape}")
    if not np.all(vals >= 0):
        raise ValueError("values must be nonnegative")

    intf = spec.interference
    if isinstance(intf, KofN):
        # Stable sort on negated values: ties resolve to smaller link index,
        # which makes the chosen set lexicographically smallest among argmaxes.
        order = np.argsort(-vals, kind="stable")
        take = order[: min(intf.k, spec.link_count)]
        return tuple(sorted(int(e) for e in take if vals[e] > 0))

    best_members = ()
    best_sum = 0.0
    for i in intf.canonical_order:
        m = intf.sets[i]
        # Accumulate in ascending member order; the fast simulation kernel
        # must reproduce these sums bit for bit.
        s = 0.0
        for e in m:
            s += vals[e]
        if s > best_sum:
            best_sum = s
            best_members = m
    return best_members


def activation_frequencies(spec: NetworkSpec, sets: Sequence, probs) -> np.ndarray:
    """Per-link activation frequencies induced by a distribution over sets.

    Parameters
    ----------
    spec : NetworkSpec
    sets : sequence of activation sets
        Each must be feasible under the spec's interference model. Pass
        None with Explicit interference to use the family's own list.
    probs : array_like
        Nonnegative probabilities for the listed sets, summing to at most 1;
        residual mass idles.

    Returns
    -------
    numpy.ndarray
        Length-n vector f with f_e = sum of probs over sets containing e.
    """
    if sets is None:
        if not isinstance(spec.interference, Explicit):
            raise ValueError("sets may only be omitted for Explicit interference")
        sets = spec.interference.sets
    sets = [canon_set(m) for m in sets]
    p = np.asarray(probs, dtype=float)
    if p.shape != (len(sets),):
        raise ValueError(f"probs must have length {len(sets)}, got shape {p.shape}")
    if np.any(p < 0):
        raise ValueError("probs must be nonnegative")
    if p.sum() > 1.0 + 1e-9:
        raise ValueError(f"probs sum to {p.sum()}, exceeding 1")
    freqs = np.zeros(spec.link_count)
    for m, pm in zip(sets, p):
        if not is_feasible(spec, m):
            raise ValueError(f"set {m} is not feasible under the interference model")
        for e in m:
            freqs[e] += pm
    return freqs


def mixed_success_probs(
    n: int,
    theta: float,
    good: float = 0.9,
    bad: float = 0.1,
    assignment: str = "prefix",
    assignment_seed: int = 0,
) -> np.ndarray:
    """Two-level channel vector with a fraction theta of bad links.

    ceil(theta * n) links get probability `bad`, the rest `good`. With
    assignment "prefix" the bad links are 0..ceil(theta*n)-1; with
    "random" they are drawn by a dedicated seed, kept separate from run
    seeds so the network is fixed across a sweep.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    n_bad = math.ceil(theta * n)
    probs = np.full(n, float(good))
    if assignment == "prefix":
        probs[:n_bad] = bad
    elif assignment == "random":
        rng = np.random.default_rng(assignment_seed)
        probs[rng.permutation(n)[:n_bad]] = bad
    else:
        raise ValueError(f"assignment must be 'prefix' or 'random', got {assignment!r}")
    return probs
