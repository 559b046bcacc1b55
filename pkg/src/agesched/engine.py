"""Slotted-time simulation engine.

Slot order: the scheduler sees feedback from slot t-1, emits an activation
set, the channel states for slot t apply, and ages advance (reset to 1 on
successful service, grow by 1 otherwise). All estimators use the pre-reset
age of the slot.

Randomness is split into two counter-based Philox streams per run seed:
the channel stream and the policy stream. The channel stream is consumed
slot-major and link-minor for every link in every slot, whether or not a
link is scheduled, so channel states depend only on (seed, slot, link) and
different policies on the same seed face identical channels (common random
numbers). The stationary policy consumes exactly one uniform per slot from
the policy stream; the other policies consume none.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._accel import HAVE_NUMBA
from .metrics import CheckpointSeries, SimulationResult, SlotTraceArrays, summarize_run
from .network import KofN, NetworkSpec, ensure_valid
from .policies import (
    AgeBased,
    RoundRobin,
    SlotFeedback,
    Stationary,
    VirtualQueue,
    age_decide,
    round_robin_decide,
    stationary_decide,
    vq_decide,
    vq_update,
)

__all__ = [
    "RunConfig",
    "channel_matrix",
    "initial_ages",
    "policy_label",
    "run_simulation",
]

_CHANNEL_STREAM = 0
_POLICY_STREAM = 1
_CHUNK = 65536


@dataclass(frozen=True)
class RunConfig:
    """One run: horizon (slots), seed, and what to retain.

    trace_level "none" keeps per-link aggregates only; "aggregates" also
    keeps running sums at the given checkpoint slot counts; "full"
    additionally records the per-slot schedule and success matrices.
    """

    horizon: int
    seed: int
    trace_level: str = "none"
    checkpoints: tuple = field(default=())

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.trace_level not in ("none", "aggregates", "full"):
            raise ValueError(f"unknown trace_level {self.trace_level!r}")
        cps = tuple(sorted(set(int(c) for c in self.checkpoints)))
        if cps and (cps[0] < 1 or cps[-1] > self.horizon):
            raise ValueError("checkpoints must lie in [1, horizon]")
        object.__setattr__(self, "checkpoints", cps)


def _stream(seed: int, which: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), which])))


def channel_matrix(spec: NetworkSpec, horizon: int, seed: int) -> np.ndarray:
    """Per-slot channel successes for all links, independent of any policy.

    Row t holds slot t; draws are generated slot-major, link-minor from the
    run's channel stream. Generated in chunks to bound transient memory;
    chunking does not change the stream.
    """
    n = spec.link_count
    rng = _stream(seed, _CHANNEL_STREAM)
    out = np.empty((horizon, n), dtype=np.uint8)
    gam = spec.success_probs
    for start in range(0, horizon, _CHUNK):
        stop = min(start + _CHUNK, horizon)
        out[start:stop] = rng.random((stop - start, n)) < gam
    return out


def initial_ages(spec: NetworkSpec, policy=None) -> np.ndarray:
    """Starting ages: 1 for every link, except the round-robin baseline.

    Round robin is a deterministic cyclic baseline whose exact per-cycle
    identities (each service clears exactly n age units; every peak equals
    n when channels never fail) are the reason to simulate it. Starting it
    mid-cycle would bolt a one-off transient onto an otherwise exactly
    periodic trajectory, so its ages start cycle-consistent: the link
    served at slot j begins with age n - j, i.e. every service from slot 0
    onward happens at age exactly n under perfect channels.
    """
    n = spec.link_count
    if isinstance(policy, RoundRobin):
        j = (np.arange(n) - policy.next_index) % n
        return (n - j).astype(np.int64)
    return np.ones(n, dtype=np.int64)


def policy_label(policy) -> str:
    if isinstance(policy, Stationary):
        return "piC"
    if isinstance(policy, VirtualQueue):
        return f"piQ(V={policy.v:g})"
    if isinstance(policy, AgeBased):
        return f"piA(beta={policy.beta:g})"
    if isinstance(policy, RoundRobin):
        return "roundrobin"
    raise TypeError(f"unknown policy type {type(policy).__name__}")


def _flatten_sets(sets, n: int):
    offsets = np.zeros(len(sets) + 1, dtype=np.int64)
    members = []
    for i, m in enumerate(sets):
        for e in m:
            if not 0 <= e < n:
                raise ValueError(f"set member {e} outside 0..{n - 1}")
        members.extend(sorted(m))
        offsets[i + 1] = len(members)
    return offsets, np.asarray(members, dtype=np.int64)


def _kernel_inputs(spec: NetworkSpec, policy, run: RunConfig):
    n = spec.link_count
    empty_i = np.zeros(0, dtype=np.int64)
    empty_f = np.zeros(0, dtype=float)
    kind = _kernels.POLICY_STATIONARY
    v_param, beta, rr_start = 1.0, 1.0, 0
    cum, sup_off, sup_mem, uniforms = empty_f, np.zeros(1, dtype=np.int64), empty_i, empty_f
    init_q = np.ones(n)

    if isinstance(policy, Stationary):
        for m in policy.sets:
            if not _feasible_under(spec, m):
                raise ValueError(f"stationary set {m} is not feasible for this network")
        cum = np.asarray(policy.cum_probs, dtype=float)
        sup_off, sup_mem = _flatten_sets(policy.sets, n)
        uniforms = _stream(run.seed, _POLICY_STREAM).random(run.horizon)
    elif isinstance(policy, VirtualQueue):
        kind = _kernels.POLICY_VQ
        v_param = float(policy.v)
        if len(policy.q) != n:
            raise ValueError(f"queue state has length {len(policy.q)}, expected {n}")
        init_q = np.asarray(policy.q, dtype=float).copy()
    elif isinstance(policy, AgeBased):
        kind = _kernels.POLICY_AGE
        beta = float(policy.beta)
    elif isinstance(policy, RoundRobin):
        kind = _kernels.POLICY_RR
        rr_start = int(policy.next_index) % n
        missing = [e for e in range(n) if not _feasible_under(spec, (e,))]
        if missing:
            raise ValueError(f"round robin needs every singleton feasible; missing {missing}")
    else:
        raise TypeError(f"unknown policy type {type(policy).__name__}")

    intf = spec.interference
    if isinstance(intf, KofN):
        family_kind, k = _kernels.FAMILY_KOFN, min(intf.k, n)
        fam_off, fam_mem = np.zeros(1, dtype=np.int64), empty_i
    else:
        family_kind, k = _kernels.FAMILY_EXPLICIT, 0
        ordered = [intf.sets[i] for i in intf.canonical_order]
        fam_off, fam_mem = _flatten_sets(ordered, n)

    return dict(
        wg=np.ascontiguousarray(spec.weights * spec.success_probs),
        init_ages=initial_ages(spec, policy),
        init_q=init_q,
        policy_kind=kind,
        v_param=v_param,
        beta=beta,
        cum_probs=cum,
        sup_offsets=sup_off,
        sup_members=sup_mem,
        uniforms=uniforms,
        rr_start=rr_start,
        family_kind=family_kind,
        k=k,
        fam_offsets=fam_off,
        fam_members=fam_mem,
    )


def _feasible_under(spec: NetworkSpec, members) -> bool:
    intf = spec.interference
    if len(members) == 0:
        return True
    if isinstance(intf, KofN):
        return len(members) <= intf.k
    return tuple(members) in intf.sets


def _run_reference(spec: NetworkSpec, policy, run: RunConfig, channel, uniforms, init_ages):
    """Pure-Python loop over the policy operations; oracle for the kernel."""
    n = spec.link_count
    T = run.horizon
    ages = init_ages.copy()
    sum_age = np.zeros(n, np.int64)
    peak_sum = np.zeros(n, np.int64)
    succ_count = np.zeros(n, np.int64)
    act_count = np.zeros(n, np.int64)
    sched_age_sum = np.zeros(n, np.int64)
    sched_age2_sum = np.zeros(n, np.int64)
    max_age = np.zeros(n, np.int64)
    cps = np.asarray(run.checkpoints, dtype=np.int64)
    C = len(cps)
    cp_peak = np.zeros((C, n), np.int64)
    cp_succ = np.zeros((C, n), np.int64)
    cp_age = np.zeros((C, n), np.int64)
    cp_act = np.zeros((C, n), np.int64)
    cp_ptr = 0
    collect = run.trace_level == "full"
    tr_sched = np.zeros((T if collect else 0, n), np.uint8)
    tr_succ = np.zeros((T if collect else 0, n), np.uint8)

    vq_state = policy if isinstance(policy, VirtualQueue) else None
    rr_state = policy if isinstance(policy, RoundRobin) else None
    feedback = SlotFeedback((), ())

    for t in range(T):
        if vq_state is not None and t > 0:
            vq_state = vq_update(vq_state, feedback)

        if isinstance(policy, Stationary):
            chosen = stationary_decide(policy, uniforms[t])
        elif vq_state is not None:
            chosen = vq_decide(vq_state, spec)
        elif isinstance(policy, AgeBased):
            chosen = age_decide(policy, ages, spec)
        else:
            chosen, rr_state = round_robin_decide(rr_state, spec)

        row = channel[t]
        succ = tuple(e for e in chosen if row[e] == 1)
        sum_age += ages
        np.maximum(max_age, ages, out=max_age)
        for e in chosen:
            act_count[e] += 1
            sched_age_sum[e] += ages[e]
            sched_age2_sum[e] += ages[e] * ages[e]
        for e in succ:
            succ_count[e] += 1
            peak_sum[e] += ages[e]
        if collect:
            for e in chosen:
                tr_sched[t, e] = 1
            for e in succ:
                tr_succ[t, e] = 1
        ages += 1
        for e in succ:
            ages[e] = 1

        feedback = SlotFeedback(chosen, succ)
        if cp_ptr < C and t + 1 == cps[cp_ptr]:
            cp_peak[cp_ptr] = peak_sum
            cp_succ[cp_ptr] = succ_count
            cp_age[cp_ptr] = sum_age
            cp_act[cp_ptr] = act_count
            cp_ptr += 1

    final_q = vq_state.q.copy() if vq_state is not None else np.ones(n)
    return (
        sum_age,
        peak_sum,
        succ_count,
        act_count,
        sched_age_sum,
        sched_age2_sum,
        max_age,
        final_q,
        cp_peak,
        cp_succ,
        cp_age,
        cp_act,
        tr_sched,
        tr_succ,
    )


def run_simulation(
    spec: NetworkSpec, policy, run: RunConfig, engine: str = "auto"
) -> SimulationResult:
    """Simulate one policy for run.horizon slots and summarize it.

    engine "auto" uses the compiled kernel when numba is available;
    "reference" forces the pure-Python loop over the policy operations.
    Both paths consume identical random streams and produce identical
    results.
    """
    ensure_valid(spec)
    if engine not in ("auto", "fast", "reference"):
        raise ValueError(f"unknown engine {engine!r}")
    channel = channel_matrix(spec, run.horizon, run.seed)
    inputs = _kernel_inputs(spec, policy, run)

    use_fast = engine == "fast" or (engine == "auto" and HAVE_NUMBA)
    if use_fast:
        out = _kernels.simulate_loop(
            channel,
            inputs["wg"],
            inputs["init_ages"],
            inputs["init_q"],
            inputs["policy_kind"],
            inputs["v_param"],
            inputs["beta"],
            inputs["cum_probs"],
            inputs["sup_offsets"],
            inputs["sup_members"],
            inputs["uniforms"],
            inputs["rr_start"],
            inputs["family_kind"],
            inputs["k"],
            inputs["fam_offsets"],
            inputs["fam_members"],
            np.asarray(run.checkpoints, dtype=np.int64),
            run.trace_level == "full",
        )
    else:
        out = _run_reference(
            spec, policy, run, channel, inputs["uniforms"], inputs["init_ages"]
        )

    (
        sum_age,
        peak_sum,
        succ_count,
        act_count,
        sched_age_sum,
        sched_age2_sum,
        max_age,
        final_q,
        cp_peak,
        cp_succ,
        cp_age,
        cp_act,
        tr_sched,
        tr_succ,
    ) = out

    checkpoints = None
    if run.checkpoints and run.trace_level in ("aggregates", "full"):
        checkpoints = CheckpointSeries(
            slots=np.asarray(run.checkpoints, dtype=np.int64),
            peak_sum=cp_peak,
            successes=cp_succ,
            age_sum=cp_age,
            activations=cp_act,
        )
    trace = None
    if run.trace_level == "full":
        trace = SlotTraceArrays(scheduled=tr_sched, successes=tr_succ)

    return summarize_run(
        policy=policy_label(policy),
        seed=run.seed,
        horizon=run.horizon,
        weights=spec.weights,
        age_sum=sum_age,
        peak_sum=peak_sum,
        successes=succ_count,
        activations=act_count,
        sched_age_sum=sched_age_sum,
        sched_age2_sum=sched_age2_sum,
        max_age=max_age,
        final_q=final_q if isinstance(policy, VirtualQueue) else None,
        checkpoints=checkpoints,
        trace=trace,
    )
