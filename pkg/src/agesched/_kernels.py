"""Hot simulation loop, compiled with numba when available.

One kernel serves all four policies and both interference families so a
single compile covers every run. The kernel mirrors the pure operations in
`policies` and `network` operation for operation (same IEEE arithmetic,
same tie-breaks); the engine's reference path and this kernel are compared
exactly in tests.

Policy codes: 0 stationary, 1 virtual queue, 2 age-based, 3 round robin.
Family codes: 0 at-most-k, 1 explicit set list.
"""

from __future__ import annotations

import numpy as np

from ._accel import njit

POLICY_STATIONARY = 0
POLICY_VQ = 1
POLICY_AGE = 2
POLICY_RR = 3

FAMILY_KOFN = 0
FAMILY_EXPLICIT = 1


@njit(cache=True)
def simulate_loop(
    channel,  # (T, n) uint8: per-slot channel states, policy independent
    wg,  # (n,) f8: weights * success_probs
    init_ages,  # (n,) i8
    init_q,  # (n,) f8, virtual-queue start state
    policy_kind,  # int
    v_param,  # f8
    beta,  # f8
    cum_probs,  # (S,) f8 cumulative stationary probabilities
    sup_offsets,  # (S+1,) i8 flattened stationary support sets
    sup_members,  # (.,) i8 ascending within each set
    uniforms,  # (T,) f8 stationary policy draws
    rr_start,  # int
    family_kind,  # int
    k,  # int
    fam_offsets,  # (S2+1,) i8 explicit family, canonical tie-break order
    fam_members,  # (.,) i8 ascending within each set
    cp_slots,  # (C,) i8 ascending slot counts at which to snapshot
    collect_trace,  # bool
):
    T, n = channel.shape
    ages = init_ages.copy()
    q = init_q.copy()

    sum_age = np.zeros(n, np.int64)
    peak_sum = np.zeros(n, np.int64)
    succ_count = np.zeros(n, np.int64)
    act_count = np.zeros(n, np.int64)
    sched_age_sum = np.zeros(n, np.int64)
    sched_age2_sum = np.zeros(n, np.int64)
    max_age = np.zeros(n, np.int64)

    C = cp_slots.shape[0]
    cp_peak = np.zeros((C, n), np.int64)
    cp_succ = np.zeros((C, n), np.int64)
    cp_age = np.zeros((C, n), np.int64)
    cp_act = np.zeros((C, n), np.int64)
    cp_ptr = 0

    tr_rows = T if collect_trace else 0
    tr_sched = np.zeros((tr_rows, n), np.uint8)
    tr_succ = np.zeros((tr_rows, n), np.uint8)

    sched = np.zeros(n, np.uint8)
    prev_sched = np.zeros(n, np.uint8)
    prev_succ = np.zeros(n, np.uint8)
    values = np.zeros(n)

    for t in range(T):
        # Feedback from slot t-1 reaches the scheduler first.
        if policy_kind == 1 and t > 0:
            for e in range(n):
                served = 1.0 if prev_sched[e] == 1 and prev_succ[e] == 1 else 0.0
                qe = q[e] + np.sqrt(v_param / q[e]) - served
                q[e] = qe if qe > 1.0 else 1.0

        for e in range(n):
            sched[e] = 0
        if policy_kind == 0:
            idx = np.searchsorted(cum_probs, uniforms[t], side="right")
            if idx < cum_probs.shape[0]:
                for j in range(sup_offsets[idx], sup_offsets[idx + 1]):
                    sched[sup_members[j]] = 1
        elif policy_kind == 3:
            sched[(rr_start + t) % n] = 1
        else:
            if policy_kind == 1:
                for e in range(n):
                    values[e] = wg[e] * q[e]
            else:
                for e in range(n):
                    ae = float(ages[e])
                    values[e] = wg[e] * (ae * ae + beta * ae)
            if family_kind == 0:
                # Repeated max scan: ties to the smallest index, links with
                # zero value never chosen. Matches network.max_weight_set.
                picks = k if k < n else n
                for _ in range(picks):
                    best = -1
                    bv = 0.0
                    for e in range(n):
                        if sched[e] == 0 and values[e] > bv:
                            bv = values[e]
                            best = e
                    if best < 0:
                        break
                    sched[best] = 1
            else:
                nsets = fam_offsets.shape[0] - 1
                best_set = -1
                bv = 0.0
                for si in range(nsets):
                    ssum = 0.0
                    for j in range(fam_offsets[si], fam_offsets[si + 1]):
                        ssum += values[fam_members[j]]
                    if ssum > bv:
                        bv = ssum
                        best_set = si
                if best_set >= 0:
                    for j in range(fam_offsets[best_set], fam_offsets[best_set + 1]):
                        sched[fam_members[j]] = 1

        # Channel applies, statistics use the pre-reset age of slot t.
        for e in range(n):
            a = ages[e]
            sum_age[e] += a
            if a > max_age[e]:
                max_age[e] = a
            if sched[e] == 1:
                act_count[e] += 1
                sched_age_sum[e] += a
                sched_age2_sum[e] += a * a
                s = channel[t, e]
                if s == 1:
                    succ_count[e] += 1
                    peak_sum[e] += a
                    ages[e] = 1
                else:
                    ages[e] = a + 1
                prev_succ[e] = s
            else:
                ages[e] = a + 1
                prev_succ[e] = 0
            prev_sched[e] = sched[e]
            if collect_trace:
                tr_sched[t, e] = sched[e]
                if sched[e] == 1 and channel[t, e] == 1:
                    tr_succ[t, e] = 1

        if cp_ptr < C and t + 1 == cp_slots[cp_ptr]:
            for e in range(n):
                cp_peak[cp_ptr, e] = peak_sum[e]
                cp_succ[cp_ptr, e] = succ_count[e]
                cp_age[cp_ptr, e] = sum_age[e]
                cp_act[cp_ptr, e] = act_count[e]
            cp_ptr += 1

    return (
        sum_age,
        peak_sum,
        succ_count,
        act_count,
        sched_age_sum,
        sched_age2_sum,
        max_age,
        q,
        cp_peak,
        cp_succ,
        cp_age,
        cp_act,
        tr_sched,
        tr_succ,
    )
