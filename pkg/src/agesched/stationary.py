"""Optimal randomized stationary scheduling.

Under a stationary policy that activates set m with probability x_m each
slot, link e succeeds with rate gamma_e * f_e where f = sum_m x_m 1[e in m],
its age at success is geometric, and the weighted peak age equals
sum_e w_e / (gamma_e f_e). Minimizing that objective over the achievable
frequency polytope is a convex program whose linear subproblem is a
max-weight activation-set query, which is what the conditional-gradient
solver here exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import njit
from .network import Explicit, KofN, NetworkSpec, ensure_valid, max_weight_set

__all__ = [
    "StationarySolution",
    "eval_peak_objective",
    "waterfill_kofn",
    "stationary_support_kofn",
    "solve_stationary",
    "average_age_lower_bound",
]

# Iterates keep every frequency at or above this floor so the objective
# stays finite along line searches.
_FREQ_FLOOR = 1e-12
_LINESEARCH_TOL = 1e-12
_WEIGHT_DROP = 1e-15


@dataclass(frozen=True)
class StationarySolution:
    """Solver output: a sampleable distribution and its certified objective.

    support/probs define the stationary policy; freqs are the induced
    per-link activation frequencies; peak_opt is the weighted peak-age
    objective at freqs; gap is the final duality gap (an upper bound on
    the objective's distance from optimal); converged records whether the
    gap target was met within the iteration budget.
    """

    support: tuple
    probs: tuple
    freqs: np.ndarray
    peak_opt: float
    gap: float
    converged: bool
    iterations: int


def eval_peak_objective(spec: NetworkSpec, freqs) -> float:
    """Weighted peak age sum_e w_e / (gamma_e f_e); +inf if any f_e is 0."""
    f = np.asarray(freqs, dtype=float)
    if f.shape != (spec.link_count,):
        raise ValueError(f"freqs must have length {spec.link_count}, got shape {f.shape}")
    if np.any(f < 0):
        raise ValueError("freqs must be nonnegative")
    if np.any(f == 0):
        return math.inf
    return float(np.sum(spec.weights / (spec.success_probs * f)))


def waterfill_kofn(spec: NetworkSpec) -> np.ndarray:
    """Closed-form optimal frequencies for at-most-k interference.

    With only the budget sum(f) <= k active, the optimum equalizes
    marginal cost: f_e proportional to sqrt(w_e / gamma_e). Links whose
    unconstrained share exceeds 1 are pinned at 1 and the remaining budget
    is re-spread over the rest, repeating until every share fits.

    Independent of the iterative solver; used as its correctness oracle.
    """
    ensure_valid(spec)
    if not isinstance(spec.interference, KofN):
        raise ValueError("waterfill_kofn requires KofN interference")
    n = spec.link_count
    k = min(spec.interference.k, n)
    s = np.sqrt(spec.weights / spec.success_probs)
    f = np.zeros(n)
    free = np.ones(n, dtype=bool)
    budget = float(k)
    for _ in range(n):
        idx = np.flatnonzero(free)
        if idx.size == 0 or budget <= 0:
            break
        if budget >= idx.size:
            f[idx] = 1.0
            break
        share = s[idx] * (budget / s[idx].sum())
        if np.all(share <= 1.0):
            f[idx] = share
            break
        pin = idx[share >= 1.0]
        f[pin] = 1.0
        free[pin] = False
        budget -= pin.size
    return f


def stationary_support_kofn(freqs, k: int):
    """Decompose frequencies into a distribution over at-most-k sets.

    Greedy peeling: repeatedly activate the min(k, #positive) links with
    the largest residual frequencies, assigning the largest probability
    that keeps the residual decomposable. Requires 0 <= f_e <= 1 and
    sum(f) <= k; produces at most len(freqs) + 1 sets, and the returned
    distribution reproduces freqs exactly up to float rounding.

    Returns
    -------
    (sets, probs) : list of tuples, list of floats
    """
    f = np.asarray(freqs, dtype=float).copy()
    n = f.size
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if np.any(f < -1e-9) or np.any(f > 1.0 + 1e-9):
        raise ValueError("frequencies must lie in [0, 1]")
    if f.sum() > k + 1e-9:
        raise ValueError(f"sum of frequencies {f.sum()} exceeds k={k}")
    f = np.clip(f, 0.0, 1.0)

    sets, probs = [], []
    budget = 1.0
    zero_tol = 1e-15
    for _ in range(2 * n + 2):
        pos = np.flatnonzero(f > zero_tol)
        if pos.size == 0:
            break
        order = np.argsort(-f, kind="stable")
        chosen = order[: min(k, pos.size)]
        chosen = chosen[f[chosen] > zero_tol]
        p = float(f[chosen].min())
        unchosen_mask = np.ones(n, dtype=bool)
        unchosen_mask[chosen] = False
        unchosen_mask &= f > zero_tol
        if np.any(unchosen_mask):
            # An unselected link must keep f_e <= remaining probability mass.
            p = min(p, budget - float(f[unchosen_mask].max()))
        p = min(p, budget)
        if p <= zero_tol:
            break
        f[chosen] -= p
        budget -= p
        sets.append(tuple(int(e) for e in np.sort(chosen)))
        probs.append(p)
    if np.any(f > 1e-9):
        raise ValueError(f"decomposition failed; residual {f.max()} remains")
    return sets, probs


@njit(cache=True)
def _min_on_segment(a, f, d, hi, tol):
    """Ternary-search minimizer of sum a_i / (f_i + lam * d_i) on [0, hi]."""
    lo = 0.0
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        phi1 = 0.0
        phi2 = 0.0
        for i in range(a.shape[0]):
            phi1 += a[i] / (f[i] + m1 * d[i])
            phi2 += a[i] / (f[i] + m2 * d[i])
        if phi1 <= phi2:
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


def _cover_sets(spec: NetworkSpec):
    """Greedy family cover touching every link, for solver initialization."""
    n = spec.link_count
    intf = spec.interference
    cover = []
    if isinstance(intf, KofN):
        k = min(intf.k, n)
        for start in range(0, n, k):
            cover.append(tuple(range(start, min(start + k, n))))
        return cover
    uncovered = set(range(n))
    while uncovered:
        best = max(intf.sets, key=lambda m: (len(uncovered.intersection(m)), [-e for e in m]))
        gain = uncovered.intersection(best)
        if not gain:
            raise ValueError("interference family does not cover all links")
        cover.append(best)
        uncovered -= gain
    return cover


def _incidence(members, n: int) -> np.ndarray:
    v = np.zeros(n)
    for e in members:
        v[e] = 1.0
    return v


def solve_stationary(
    spec: NetworkSpec, tol: float = 1e-9, max_iter: int = 100_000
) -> StationarySolution:
    """Minimize the weighted peak-age objective over achievable frequencies.

    Conditional-gradient (Frank-Wolfe) method with away steps. KofN problems
    warm-start at the closed-form water-filling optimum, which the first
    duality-gap evaluation certifies; explicit families warm-start from a
    uniform mixture over a greedy cover so every frequency starts positive.
    Each iteration calls the max-weight activation-set query with
    values w_e / (gamma_e f_e^2), takes the better of the toward and away
    directions, and minimizes exactly along the segment with a ternary
    search restricted to keep every frequency at or above 1e-12. Away steps
    let mass leave early cover sets, which is what makes gap targets below
    1e-6 reachable on faces of the polytope.

    Stops when the duality gap (which upper-bounds the objective error) is
    at most tol, or after max_iter iterations with converged=False.

    For KofN interference the iteration runs on the frequency polytope
    {0 <= f <= 1, sum f <= k} whose vertices are the at-most-k sets, and
    the final frequencies are converted to a sampleable distribution by
    stationary_support_kofn.
    """
    ensure_valid(spec)
    n = spec.link_count
    a = np.asarray(spec.weights / spec.success_probs)

    if isinstance(spec.interference, KofN):
        # The budgeted family has a closed-form optimum; start there and let
        # the duality-gap test below certify it (or refine if it falls short).
        sets0, probs0 = stationary_support_kofn(waterfill_kofn(spec), spec.interference.k)
        cover = list(sets0)
        lam = np.asarray(probs0, dtype=float)
    else:
        cover = _cover_sets(spec)
        lam = np.full(len(cover), 1.0 / len(cover))
    vertices = [_incidence(m, n) for m in cover]
    keys = {m: i for i, m in enumerate(cover)}
    members = list(cover)

    gap = math.inf
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        vmat = np.array(vertices)
        f = lam @ vmat
        d = a / (f * f)  # negative gradient of the objective

        s_members = max_weight_set(spec, d)
        s_vec = _incidence(s_members, n)
        fw_gap = float(d @ s_vec - d @ f)
        gap = fw_gap
        if fw_gap <= tol:
            converged = True
            break

        dots = vmat @ d
        away_idx = int(np.argmin(dots))
        away_gap = float(d @ f - dots[away_idx])

        if fw_gap >= away_gap:
            direction = s_vec - f
            lam_cap = 1.0
            step_away = False
        else:
            direction = f - vmat[away_idx]
            la = lam[away_idx]
            lam_cap = la / (1.0 - la) if la < 1.0 else 1.0
            step_away = True

        # Keep every frequency at or above the floor along the segment.
        shrink = direction < 0
        if np.any(shrink):
            room = (f[shrink] - _FREQ_FLOOR) / (-direction[shrink])
            lam_cap = min(lam_cap, float(room.min()))
        if lam_cap <= 0:
            converged = fw_gap <= tol
            break
        step = float(_min_on_segment(a, f, direction, lam_cap, _LINESEARCH_TOL))
        if step <= 0:
            continue

        if step_away:
            # lam_i <- (1+step) lam_i for all i, then lam_a <- lam_a - step.
            lam *= 1.0 + step
            lam[away_idx] -= step
        else:
            lam *= 1.0 - step
            i = keys.get(s_members)
            if i is None:
                keys[s_members] = len(vertices)
                vertices.append(s_vec)
                members.append(s_members)
                lam = np.append(lam, step)
            else:
                lam[i] += step

        lam = np.maximum(lam, 0.0)
        total = lam.sum()
        if total > 0:
            lam /= total
        keep = lam > _WEIGHT_DROP
        if not np.all(keep):
            vertices = [v for v, kq in zip(vertices, keep) if kq]
            members = [m for m, kq in zip(members, keep) if kq]
            lam = lam[keep]
            keys = {m: i for i, m in enumerate(members)}

    vmat = np.array(vertices)
    f = lam @ vmat
    if isinstance(spec.interference, KofN):
        sets, probs = stationary_support_kofn(f, spec.interference.k)
    else:
        order = np.argsort(-lam, kind="stable")
        sets = [members[i] for i in order]
        probs = [float(lam[i]) for i in order]
    return StationarySolution(
        support=tuple(sets),
        probs=tuple(probs),
        freqs=f,
        peak_opt=eval_peak_objective(spec, f),
        gap=gap,
        converged=converged,
        iterations=iterations,
    )


def average_age_lower_bound(solution: StationarySolution, spec: NetworkSpec) -> float:
    """Fundamental floor on weighted average age for any policy.

    Half of (optimal weighted peak age + total weight); no scheduler,
    stationary or not, can average below it.
    """
    return 0.5 * (solution.peak_opt + spec.total_weight)
