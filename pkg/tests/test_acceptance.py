"""Acceptance criteria, each asserted at its stated tolerance.

Every test records a one-line PASS/FAIL verdict; the lines are printed in the
"acceptance criteria" section at the end of the pytest run.
"""

import time

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

from conftest import lp_vertex_optimum, report_criterion
from fhei.baselines import joint_grid_oracle, p2_grid_oracle
from fhei.errors import EnergyInfeasible, InitialInfeasible, LatencyInfeasible
from fhei.profile import NetCostModel, fit_cost_model
from fhei.sim import (
    FIXED_G_D,
    ExperimentConfig,
    fixed_scenario,
    perturbed_scenario,
    run_fig4b,
    run_single,
    sample_channels,
    summarize,
    trial_scenario,
)
from fhei.solver import (
    alternate,
    increment_cap,
    min_pre_compute_time,
    prop1_allocate,
    solve_p2,
    solve_p3,
)

pytestmark = pytest.mark.acceptance

SEED = 2024


def test_criterion_1_kkt_vs_grid_oracle():
    rng = np.random.default_rng((SEED, 1))
    n, tol = 31, 5e-3
    start = time.perf_counter()
    worst, count, draws = -np.inf, 0, 0
    while count < 20:
        draws += 1
        sc = perturbed_scenario(rng, 2)
        d = rng.uniform(sc.d_min, sc.d_max, 2)
        try:
            _, e_kkt = solve_p2(d, sc)
        except LatencyInfeasible:
            continue
        e_grid, _ = p2_grid_oracle(d, sc, n)
        if not np.isfinite(e_grid):
            continue
        worst = max(worst, (e_kkt - e_grid) / e_grid)
        count += 1
    elapsed = time.perf_counter() - start
    ok = worst <= tol and elapsed <= 120
    report_criterion(
        1, "KKT energy <= grid oracle + 0.5%",
        ok, f"20 instances ({draws} draws), {n} pts/axis, worst rel excess {worst:+.3e}, {elapsed:.1f}s",
    )
    assert ok


def test_criterion_2_greedy_vs_lp():
    rng = np.random.default_rng((SEED, 2))
    start = time.perf_counter()
    worst, count = 0.0, 0
    while count < 50:
        M = 1 + count % 4
        sc = perturbed_scenario(rng, M)
        d0 = rng.uniform(sc.d_min, sc.d_max, M)
        try:
            alloc, _ = solve_p2(d0, sc)
            k = int(rng.integers(1, 150))
            d = solve_p3(alloc, sc, k)
        except (LatencyInfeasible, EnergyInfeasible):
            continue
        best = lp_vertex_optimum(sc, alloc, increment_cap(sc, k))
        worst = max(worst, abs(d.sum() - best) / best)
        count += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed <= 10
    report_criterion(2, "greedy P3 == vertex LP", ok, f"50 instances, worst rel error {worst:.2e}, {elapsed:.2f}s")
    assert ok


@pytest.fixture(scope="module")
def fig4a_scenario():
    return fixed_scenario(ExperimentConfig(mode="fig4a", M=5))


def test_criterion_3_monotone_convergence(fig4a_scenario):
    sc = fig4a_scenario
    sol = alternate(sc)
    q = [r.sum_quality for r in sol.rounds if r.feasible]
    monotone = all(b >= a for a, b in zip(q, q[1:]))
    lat_ok = sol.mean_latency <= 15.0 * (1 + 1e-6)
    en_ok = sol.mean_energy <= 5.0 * (1 + 1e-6)
    ok = monotone and lat_ok and en_ok and len(sol.rounds) < 10000
    report_criterion(
        3, "alternate monotone and within budgets", ok,
        f"{len(sol.rounds)} rounds, sum quality {q[0]:.4f} -> {sol.sum_quality:.4f}, "
        f"mean latency {sol.mean_latency:.6f}s, mean energy {sol.mean_energy:.6f}J",
    )
    assert ok


@pytest.fixture(scope="module")
def monte_carlo():
    cfg = ExperimentConfig(mode="fig4b", trials=200, M_range=(2, 10), seed=SEED)
    start = time.perf_counter()
    rows = run_fig4b(cfg)
    elapsed = time.perf_counter() - start
    return {(s.M, s.method): s for s in summarize(rows)}, elapsed


def test_criterion_4_benchmark_dominance(monte_carlo):
    table, elapsed = monte_carlo
    lines = []
    ok = elapsed <= 300
    for M in range(2, 11):
        f = table[(M, "fhei")].mean_sum_quality
        cq = table[(M, "constant_quality")].mean_sum_quality
        ci = table[(M, "channel_inversion")].mean_sum_quality
        ok &= f >= cq and f >= ci
        lines.append(f"M={M}: {f - cq:+.4f}/{f - ci:+.4f}")
    report_criterion(
        4, "FHEI mean >= both benchmarks at every M", ok,
        f"200 draws per M, {elapsed:.0f}s; FHEI minus (CQ/CI): " + ", ".join(lines),
    )
    assert ok


def test_criterion_5_gap_growth(monte_carlo):
    table, _ = monte_carlo
    g2 = table[(2, "channel_inversion")].mean_gap_to_fhei
    g10 = table[(10, "channel_inversion")].mean_gap_to_fhei
    ok = g10 > g2
    report_criterion(5, "gap to channel inversion grows", ok, f"gap M=2 {g2:.4e}, M=10 {g10:.4e}")
    assert ok


def test_criterion_6_downlink_differentiation(fig4a_scenario):
    rows = run_single(ExperimentConfig(mode="fig4a", M=5), fig4a_scenario)
    d = {m: np.array([r.d for r in rows if r.method == m]) for m in ("fhei", "constant_quality")}
    rho = spearmanr(FIXED_G_D, d["fhei"]).statistic
    uniform = np.ptp(d["constant_quality"]) == 0
    ok = rho > 0 and uniform
    report_criterion(
        6, "d follows downlink gain; constant quality is uniform", ok,
        f"spearman {rho:+.3f}, FHEI d (MB) {np.round(d['fhei'] / 1e6, 3).tolist()}, "
        f"CQ d {d['constant_quality'][0] / 1e6:.4f} MB for all",
    )
    assert ok


def test_criterion_7_near_optimality():
    # instances follow the Monte-Carlo setting: default parameters, gamma
    # channels, caps uniform over the Q range
    cfg = ExperimentConfig(seed=SEED)
    n = 80
    start = time.perf_counter()
    ratios = []
    for trial in range(10):
        sc = trial_scenario(cfg, 2, trial)
        ratios.append(alternate(sc).sum_quality / joint_grid_oracle(sc, n).sum_quality)
    elapsed = time.perf_counter() - start
    worst = min(ratios)
    ok = worst >= 0.98 and elapsed <= 300

    # diagnostic only: with every parameter perturbed x0.5-x2, latency-bound
    # instances appear where the energy-only feature-size step loses ground
    rng = np.random.default_rng((SEED, 7))
    perturbed = []
    while len(perturbed) < 20:
        sc = perturbed_scenario(rng, 2)
        try:
            perturbed.append(alternate(sc).sum_quality / joint_grid_oracle(sc, 40).sum_quality)
        except InitialInfeasible:
            continue
    perturbed = np.array(perturbed)
    report_criterion(
        7, "FHEI within 2% of joint grid oracle", ok,
        f"10 instances, {n} pts/axis, FHEI/oracle min {worst:.4f} max {max(ratios):.4f}, {elapsed:.1f}s "
        f"(diagnostic, x0.5-x2 perturbed: min {perturbed.min():.4f}, {int((perturbed < 0.98).sum())}/20 below 0.98)",
    )
    assert ok


# -- criterion 8: invariant properties --------------------------------------------------

prop = settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
seeds = st.integers(0, 2**32 - 1)


def _instance(seed, M):
    rng = np.random.default_rng(seed)
    sc = perturbed_scenario(rng, M)
    return sc, rng.uniform(sc.d_min, sc.d_max, M)


@prop
@given(seed=seeds, M=st.integers(1, 10))
def prop_normalisations(seed, M):
    sc, d = _instance(seed, M)
    alpha, beta, f = prop1_allocate(d, sc)
    assert abs(alpha.sum() - 1) <= 1e-12 and abs(beta.sum() - 1) <= 1e-12
    assert abs(f.sum() - sc.F) <= 1e-12 * sc.F


@prop
@given(seed=seeds, M=st.integers(1, 10), q_scale=st.floats(0.2, 5.0))
def prop_alpha_independent_of_d_and_q(seed, M, q_scale):
    sc, d = _instance(seed, M)
    a1, _, _ = prop1_allocate(d, sc)
    a2, _, _ = prop1_allocate(np.full(M, sc.d_max), sc.with_(Q=sc.Q * q_scale))
    np.testing.assert_array_equal(a1, a2)


@prop
@given(seed=seeds, M=st.integers(1, 10), c=st.floats(1e-3, 1e3))
def prop_beta_scale_invariant(seed, M, c):
    sc, d = _instance(seed, M)
    _, b1, _ = prop1_allocate(d, sc)
    _, b2, _ = prop1_allocate(c * d, sc)
    np.testing.assert_allclose(b2, b1, rtol=1e-12)


@prop
@given(seed=seeds, M=st.integers(1, 10))
def prop_latency_tight_when_uncapped(seed, M):
    sc, d = _instance(seed, M)
    sc = sc.with_(Q=np.full(M, 1e15))
    try:
        alloc, _ = solve_p2(d, sc)
    except LatencyInfeasible:
        assume(False)
    assert (alloc.q < sc.Q).all()
    pre = min_pre_compute_time(d, sc, alloc.alpha, alloc.beta, alloc.f)
    total = pre + float((sc.net.c2 * d / alloc.q).sum())
    assert abs(total - M * sc.T_bar) <= 1e-9 * M * sc.T_bar


@prop
@given(
    L0=st.floats(1e9, 5e10), c1=st.floats(1e3, 5e4), c2=st.floats(1e3, 2e4), ds=st.floats(1e-6, 1e-4),
    scale=st.floats(0.5, 2.0),
)
def prop_fit_exact_recovery(L0, c1, c2, ds, scale):
    comm = np.array([2.8e6, 4.4e6, 6e6]) * scale
    samples = [(c, L0 + c1 * c, c2 * c, ds * c) for c in comm]
    m = fit_cost_model(samples)
    for got, want in ((m.L0, L0), (m.c1, c1), (m.c2, c2), (m.delta_s, ds)):
        assert abs(got - want) <= 1e-9 * abs(want)


def prop_fit_default_model():
    t = NetCostModel()
    comm = [2.8e6, 4.4e6, 6e6]
    m = fit_cost_model([(c, t.L0 + t.c1 * c, t.c2 * c, t.delta_s * c) for c in comm])
    for name in ("L0", "c1", "c2", "delta_s"):
        assert abs(getattr(m, name) - getattr(t, name)) <= 1e-9 * getattr(t, name)


@settings(max_examples=10, deadline=None)
@given(seed=seeds)
def prop_channel_moments(seed):
    g_U, g_D = sample_channels(seed, 100_000, 3.0, 1.0 / 3.0)
    for g in (g_U, g_D):
        assert abs(g.mean() - 1.0) <= 0.01
        assert abs(g.var() - 1.0 / 3.0) <= 0.03 / 3.0


INVARIANTS = [
    prop_normalisations,
    prop_alpha_independent_of_d_and_q,
    prop_beta_scale_invariant,
    prop_latency_tight_when_uncapped,
    prop_fit_exact_recovery,
    prop_fit_default_model,
    prop_channel_moments,
]


def test_criterion_8_invariant_suite():
    failed = []
    for check in INVARIANTS:
        try:
            check()
        except Exception as exc:  # report every failing property, not just the first
            failed.append(f"{check.__name__}: {type(exc).__name__}")
    ok = not failed
    report_criterion(
        8, "invariant property suite", ok,
        f"{len(INVARIANTS) - len(failed)}/{len(INVARIANTS)} properties hold" + (f"; failed {failed}" if failed else ""),
    )
    assert ok, failed
