"""Estimators, the served-age conservation law, and analytic bound reports."""

import math

import numpy as np
import pytest

from agesched import (
    AgeBased,
    BOUND_NAMES,
    RoundRobin,
    Stationary,
    avg_age_estimate,
    avg_age_identity_check,
    bound_reports,
    conservation_check,
    initial_ages,
    peak_age_estimate,
    solve_stationary,
)
from agesched.metrics import (
    age_avg_bound,
    age_peak_bound,
    summarize_run,
    vq_peak_bound,
)

from conftest import explicit_spec, kofn_spec, simulate


def test_estimators_from_raw_sums():
    # three services at pre-reset ages 3, 5, 4 over ten slots
    res = summarize_run(
        "piC", 0, 10, [1.0],
        age_sum=[30.0], peak_sum=[12.0], successes=[3], activations=[4],
        sched_age_sum=[14.0], sched_age2_sum=[66.0], max_age=[5],
    )
    per_link, network = peak_age_estimate(res, [1.0])
    assert per_link[0] == 4.0 and network == 4.0
    per_link, network = avg_age_estimate(res, [1.0])
    assert per_link[0] == 3.0 and network == 3.0
    np.testing.assert_array_equal(peak_age_estimate(res), [4.0])


def test_starved_link_reports_infinity_and_warns():
    with pytest.warns(UserWarning, match="never succeeded"):
        res = summarize_run(
            "piC", 0, 5, [1.0, 1.0],
            age_sum=[15.0, 5.0], peak_sum=[0.0, 5.0], successes=[0, 5],
            activations=[0, 5], sched_age_sum=[0.0, 5.0], sched_age2_sum=[0.0, 5.0],
            max_age=[5, 1],
        )
    assert math.isinf(res.link_peak[0])
    assert res.link_peak[1] == 1.0
    assert math.isinf(res.network_peak)


def test_streaming_sums_match_trace_replay():
    spec = kofn_spec(5, 2, 1.0, [0.3, 0.5, 0.7, 0.9, 1.0])
    res = simulate(spec, AgeBased(beta=1.0), 3000, 4, trace_level="full")
    ages = initial_ages(spec).astype(float)
    age_sum = np.zeros(5)
    peak_sum = np.zeros(5)
    sched_sum = np.zeros(5)
    sched_sq = np.zeros(5)
    for t in range(3000):
        sched = res.trace.scheduled[t].astype(bool)
        succ = res.trace.successes[t].astype(bool)
        age_sum += ages
        sched_sum[sched] += ages[sched]
        sched_sq[sched] += ages[sched] ** 2
        peak_sum[succ] += ages[succ]
        ages = np.where(succ, 1.0, ages + 1.0)
    np.testing.assert_array_equal(age_sum, res.age_sum)
    np.testing.assert_array_equal(peak_sum, res.peak_sum)
    np.testing.assert_array_equal(sched_sum, res.sched_age_sum)
    np.testing.assert_array_equal(sched_sq, res.sched_age2_sum)
    np.testing.assert_allclose(res.link_avg, age_sum / 3000)


def test_conservation_exact_for_deterministic_cycle():
    spec = kofn_spec(3, 1, 1.0, 1.0)
    res = simulate(spec, RoundRobin(), 300, 2)
    residual, ok = conservation_check(res)
    np.testing.assert_array_equal(residual, np.zeros(3))
    assert ok


def test_conservation_flags_unbalanced_runs():
    res = summarize_run(
        "x", 0, 100, [1.0],
        age_sum=[5000.0], peak_sum=[90.0], successes=[30], activations=[30],
        sched_age_sum=[90.0], sched_age2_sum=[400.0], max_age=[9],
    )
    residual, ok = conservation_check(res, tol=0.02)
    assert residual[0] == pytest.approx(-0.1)
    assert not ok


def test_identity_exact_for_perfect_link():
    spec = explicit_spec([[0]], weights=1.0, gammas=1.0)
    res = simulate(spec, Stationary(sets=((0,),), probs=(1.0,)), 128, 7)
    for beta in (-1.0, 0.0, 1.0, 2.5):
        direct, identity, ok = avg_age_identity_check(res, spec, beta)
        assert ok
        assert direct[0] == 1.0
        assert identity[0] == pytest.approx(1.0, abs=1e-12)


def test_identity_tracks_simulated_runs():
    spec = kofn_spec(6, 2, 1.0, 0.8)
    sol = solve_stationary(spec)
    res = simulate(spec, Stationary(sets=sol.support, probs=sol.probs), 150_000, 3)
    for beta in (0.0, 1.0):
        _, _, ok = avg_age_identity_check(res, spec, beta)
        assert ok


def test_bound_arithmetic_frozen_values():
    spec = kofn_spec(20, 5, 1.0, 0.9)
    sol = solve_stationary(spec)
    assert sol.peak_opt == pytest.approx(800.0 / 9.0, rel=1e-9)
    # queue-policy guarantee: opt + w/2 + w/(2V)
    assert vq_peak_bound(sol, spec, v=1.0) == pytest.approx(800.0 / 9.0 + 10.0 + 10.0, rel=1e-9)
    assert vq_peak_bound(sol, spec, v=100.0) == pytest.approx(800.0 / 9.0 + 10.0 + 0.1, rel=1e-9)
    # age-policy guarantees: 4*opt - c(beta)*w with beta-dependent constants
    assert age_peak_bound(sol, spec, beta=1.0) == pytest.approx(4 * 800.0 / 9.0 - 2.5 * 20, rel=1e-9)
    assert age_peak_bound(sol, spec, beta=0.0) == pytest.approx(4 * 800.0 / 9.0 - 2.0 * 20, rel=1e-9)
    assert age_avg_bound(50.0, spec, beta=1.0) == pytest.approx(4 * 50.0 - 2.75 * 20)
    assert age_avg_bound(50.0, spec, beta=0.0) == pytest.approx(4 * 50.0 - 2.5 * 20)


def test_bound_reports_selection():
    spec = kofn_spec(4, 2, 1.0, 1.0)
    sol = solve_stationary(spec)
    res = simulate(spec, RoundRobin(), 400, 1)

    names = [r.bound_name for r in bound_reports(res, spec, sol)]
    assert names == ["Lemma4", "Eq12_lower"]

    names = [r.bound_name for r in bound_reports(res, spec, sol, v=2.0)]
    assert "Thm2_peak" in names

    reports = bound_reports(res, spec, sol, beta=1.0, stationary_avg=res.network_avg)
    names = [r.bound_name for r in reports]
    assert "Thm3_peak" in names and "Thm3_avg" in names
    assert set(names) <= set(BOUND_NAMES)
    for r in reports:
        assert r.slack == pytest.approx(r.rhs - r.lhs, abs=1e-12)
        assert r.satisfied == (r.lhs <= r.rhs + r.tolerance * max(abs(r.lhs), abs(r.rhs), 1.0))


def test_bound_report_flags_violations():
    spec = kofn_spec(2, 1, 1.0, 1.0)
    sol = solve_stationary(spec)
    # fabricated run whose peak far exceeds any guarantee
    res = summarize_run(
        "piQ(V=1)", 0, 10, [1.0, 1.0],
        age_sum=[500.0, 500.0], peak_sum=[400.0, 400.0], successes=[2, 2],
        activations=[5, 5], sched_age_sum=[400.0, 400.0], sched_age2_sum=[9000.0, 9000.0],
        max_age=[99, 99],
    )
    report = {r.bound_name: r for r in bound_reports(res, spec, sol, v=1.0)}["Thm2_peak"]
    assert not report.satisfied
    assert report.slack < 0


def test_peak_average_inequality_is_tight_for_perfect_link():
    spec = explicit_spec([[0]], weights=1.0, gammas=1.0)
    sol = solve_stationary(spec)
    res = simulate(spec, Stationary(sets=((0,),), probs=(1.0,)), 64, 1)
    report = bound_reports(res, spec, sol)[0]
    assert report.bound_name == "Lemma4"
    assert report.lhs == 1.0
    assert report.rhs == pytest.approx(1.0)
    assert report.satisfied
    assert report.slack == pytest.approx(0.0, abs=1e-12)
