"""Alternating solver for the joint feature-size / resource allocation problem.

Two convex sub-problems are solved in turn:

* the energy-minimal resource allocation for fixed feature sizes ``d``
  (closed-form time shares and edge speeds, a common local speed found by
  bisection on the latency multiplier), and
* the quality-maximal ``d`` for fixed resources, a linear program solved
  greedily (fractional knapsack on the per-byte energy cost) with a per-round
  cap on the total feature size.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from fhei.cost import (
    ResourceAllocation,
    RoundRecord,
    Scenario,
    Solution,
    energies,
    fn_load,
    in_load,
    latencies,
    make_solution,
)
from fhei.errors import (
    EnergyInfeasible,
    InitialInfeasible,
    LatencyInfeasible,
    NoBracket,
    ZeroRate,
    ZeroResource,
)
from fhei.link import BITS_PER_BYTE, TimeShares

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverSettings:
    bisection_tol: float = 1e-12  # |latency residual| relative to M * T_bar
    max_bisection: int = 200
    max_doublings: int = 200
    max_rounds: int = 10_000
    stagnation_tol: float = 1e-6  # on |change of sum d| relative to M * d_min
    # relative slack on the budgets when judging a round feasible; well inside
    # the tolerance Solution.satisfies_budgets applies
    budget_tol: float = 1e-9
    # back off along the last increment when it overshoots the budgets
    refine_last_step: bool = True
    refine_iters: int = 40


DEFAULT_SETTINGS = SolverSettings()


def prop1_allocate(d, scenario: Scenario, shares: TimeShares | None = None):
    """Closed-form uplink/downlink shares and edge speeds for feature sizes ``d``.

    Returns ``(alpha, beta, f)``. The shares do not depend on the local speeds.
    Passing ``shares`` keeps the given time shares and only sets ``f``.
    """
    d = np.asarray(d, dtype=float)
    if shares is None:
        if (scenario.U <= 0).any() or (scenario.D <= 0).any():
            raise ZeroRate("a mobile has zero full-band rate")
        inv_sqrt_u = 1.0 / np.sqrt(scenario.U)
        alpha = inv_sqrt_u / inv_sqrt_u.sum()
        w = np.sqrt(d / scenario.D)
        beta = w / w.sum()
    else:
        alpha, beta = shares.alpha, shares.beta
    root_load = np.sqrt(fn_load(scenario.net, d))
    f = scenario.F * root_load / root_load.sum()
    return alpha, beta, f


def min_pre_compute_time(d, scenario: Scenario, alpha, beta, f) -> float:
    """Summed uplink + downlink + edge-compute time over all mobiles (seconds)."""
    d = np.asarray(d, dtype=float)
    lam = alpha * scenario.U
    gam = beta * scenario.D
    if (lam <= 0).any() or (gam <= 0).any() or (f <= 0).any():
        raise ZeroResource("zero rate or edge speed in pre-compute stage")
    return float(
        (BITS_PER_BYTE * scenario.I / lam + BITS_PER_BYTE * d / gam + fn_load(scenario.net, d) / f).sum()
    )


def prop2_local_speeds(lam: float, scenario: Scenario) -> np.ndarray:
    """Local speeds ``min((lam / 2 psi)^(1/3), Q_m)``."""
    if scenario.psi == 0:
        return scenario.Q.copy()
    return np.minimum(np.cbrt(lam / (2.0 * scenario.psi)), scenario.Q)


def _local_time(c2d: np.ndarray, x: float, Q: np.ndarray) -> float:
    return float((c2d / np.minimum(x, Q)).sum())


def solve_lambda(d, scenario: Scenario, pre_time: float, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """Latency multiplier that makes the average-latency constraint tight.

    Finds ``lam`` with ``sum_m c2 d_m / min((lam/2psi)^(1/3), Q_m) = M T_bar - pre_time``.
    The lower bracket is the multiplier of the all-uncapped solution, which can
    only undershoot; the upper bracket is grown by doubling.
    """
    M = scenario.M
    atol = settings.bisection_tol * M * scenario.T_bar
    remaining = M * scenario.T_bar - pre_time
    if remaining <= 0:
        raise LatencyInfeasible(f"pre-compute stage alone takes {pre_time:.6g}s of {M * scenario.T_bar:.6g}s")
    c2d = in_load(scenario.net, np.asarray(d, dtype=float))
    Q = scenario.Q
    floor = float((c2d / Q).sum())
    if floor > remaining + atol:
        raise LatencyInfeasible(f"local compute needs {floor:.6g}s at full speed, only {remaining:.6g}s left")
    psi = scenario.psi
    if psi == 0:
        # energy does not depend on q: every mobile runs at its cap
        return 0.0
    if abs(floor - remaining) <= atol:
        return 2.0 * psi * float(Q.max()) ** 3

    def residual(lam):
        return _local_time(c2d, (lam / (2.0 * psi)) ** (1.0 / 3.0), Q) - remaining

    eps = float(c2d.sum()) / remaining
    lo = 2.0 * psi * eps**3
    r_lo = residual(lo)
    if r_lo <= atol:
        return lo
    hi = lo
    for _ in range(settings.max_doublings):
        hi *= 2.0
        if residual(hi) <= 0:
            break
        lo = hi
    else:
        raise NoBracket(f"no sign change after {settings.max_doublings} doublings")

    for _ in range(settings.max_bisection):
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if abs(r) <= atol:
            return mid
        if r > 0:
            lo = mid
        else:
            hi = mid
    # hi always meets the latency budget
    return hi


def solve_p2(
    d, scenario: Scenario, shares: TimeShares | None = None, settings: SolverSettings = DEFAULT_SETTINGS
) -> tuple[ResourceAllocation, float]:
    """Energy-minimal allocation for fixed ``d``; returns ``(allocation, mean energy)``."""
    d = np.asarray(d, dtype=float)
    alpha, beta, f = prop1_allocate(d, scenario, shares)
    pre = min_pre_compute_time(d, scenario, alpha, beta, f)
    lam = solve_lambda(d, scenario, pre, settings)
    q = prop2_local_speeds(lam, scenario)
    alloc = ResourceAllocation(TimeShares(alpha, beta), f, q)
    return alloc, float(energies(scenario, d, alloc).mean())


def energy_slopes(scenario: Scenario, alloc: ResourceAllocation) -> np.ndarray:
    gam = alloc.beta * scenario.D
    if (gam <= 0).any():
        raise ZeroResource("zero downlink rate")
    return scenario.sigma * BITS_PER_BYTE / gam + scenario.psi * alloc.q**2 * scenario.net.c2


def energy_slope(scenario: Scenario, m: int, alloc: ResourceAllocation) -> float:
    """Marginal energy (J) per extra feature byte of mobile ``m`` with resources held fixed."""
    gam = alloc.beta[m] * scenario.D[m]
    if gam <= 0 or alloc.q[m] <= 0:
        raise ZeroResource(f"mobile {m} has zero downlink rate or local speed")
    return float(scenario.sigma * BITS_PER_BYTE / gam + scenario.psi * alloc.q[m] ** 2 * scenario.net.c2)


def increment_cap(scenario: Scenario, k: int) -> float:
    """Upper bound on the total feature size in round ``k`` (1-based)."""
    if (k - 1) * math.log(scenario.eta) >= math.log(scenario.d_max / scenario.d_min):
        return scenario.M * scenario.d_max
    return scenario.M * min(scenario.d_min * scenario.eta ** (k - 1), scenario.d_max)


def solve_p3(
    alloc: ResourceAllocation, scenario: Scenario, k: int, settings: SolverSettings = DEFAULT_SETTINGS
) -> np.ndarray:
    """Quality-maximal feature sizes under the energy budget for a fixed allocation.

    Greedy fill from ``d_min`` in ascending per-byte energy cost (ties by
    mobile index), limited by ``d_max``, the energy budget and the round-``k``
    cap on ``sum(d)``.
    """
    if k < 1:
        raise ValueError("round index starts at 1")
    M = scenario.M
    d = np.full(M, scenario.d_min)
    budget = M * scenario.E_bar - float(energies(scenario, d, alloc).sum())
    if budget < -settings.budget_tol * M * scenario.E_bar:
        raise EnergyInfeasible(f"mean energy at d_min exceeds E_bar by {-budget / M:.6g} J")
    budget = max(budget, 0.0)
    room = increment_cap(scenario, k) - M * scenario.d_min
    slopes = energy_slopes(scenario, alloc)
    box = scenario.d_max - scenario.d_min
    for m in np.argsort(slopes, kind="stable"):
        if room <= 0 or budget <= 0:
            break
        inc = min(box, room)
        if slopes[m] > 0:
            inc = min(inc, budget / slopes[m])
        d[m] += inc
        room -= inc
        budget -= inc * slopes[m]
    return d


def _evaluate(d, scenario, shares, settings):
    """Solve the resource problem for ``d``; returns ``(alloc, T, E, feasible)`` or None if latency-infeasible."""
    try:
        alloc, _ = solve_p2(d, scenario, shares, settings)
    except LatencyInfeasible:
        return None
    T = latencies(scenario, d, alloc)
    E = energies(scenario, d, alloc)
    tol = settings.budget_tol
    feasible = T.mean() <= scenario.T_bar * (1 + tol) and E.mean() <= scenario.E_bar * (1 + tol)
    return alloc, T, E, feasible


def _record(k, d, scenario, T, E, feasible):
    return RoundRecord(
        round=k,
        d=np.array(d),
        sum_quality=float(scenario.net.delta_s * np.sum(d)),
        feasible=bool(feasible),
        mean_energy=float(np.mean(E)) if E is not None else math.nan,
        mean_latency=float(np.mean(T)) if T is not None else math.nan,
    )


def alternate(
    scenario: Scenario,
    settings: SolverSettings = DEFAULT_SETTINGS,
    shares: TimeShares | None = None,
    method: str = "fhei",
) -> Solution:
    """Alternate the resource and feature-size sub-problems from ``d = d_min``.

    Round 1 is the starting point (the round-1 increment cap pins ``sum(d)`` to
    ``M d_min``). Each later round ``k`` solves the feature-size LP with the
    previous allocation and cap ``k``, then re-solves the allocation. The loop
    stops when a round violates the latency or energy budget, when ``sum(d)``
    stagnates, or at ``max_rounds``. With ``shares`` given, the time shares are
    held fixed and only edge/local speeds and ``d`` are optimised.
    """
    M = scenario.M
    d = np.full(M, scenario.d_min)
    ev = _evaluate(d, scenario, shares, settings)
    if ev is None:
        raise InitialInfeasible("latency budget cannot be met at d = d_min")
    alloc, T, E, feasible = ev
    if not feasible:
        raise InitialInfeasible(f"mean energy {E.mean():.6g} J exceeds E_bar at d = d_min")
    rounds = [_record(1, d, scenario, T, E, True)]
    best = (d, alloc)

    for k in range(2, settings.max_rounds + 1):
        try:
            d_new = solve_p3(alloc, scenario, k, settings)
        except EnergyInfeasible:
            # cannot happen from a feasible round; kept as a hard stop
            rounds.append(_record(k, d, scenario, None, None, False))
            break
        ev = _evaluate(d_new, scenario, shares, settings)
        if ev is None or not ev[3]:
            T_new, E_new = (None, None) if ev is None else ev[1:3]
            rounds.append(_record(k, d_new, scenario, T_new, E_new, False))
            if settings.refine_last_step:
                refined = _refine(d, d_new, scenario, shares, settings)
                if refined is not None:
                    d_r, alloc_r, T_r, E_r = refined
                    rounds.append(_record(k, d_r, scenario, T_r, E_r, True))
                    best = (d_r, alloc_r)
            break
        alloc_new, T, E, _ = ev
        rounds.append(_record(k, d_new, scenario, T, E, True))
        stagnant = abs(d_new.sum() - d.sum()) < settings.stagnation_tol * M * scenario.d_min
        d, alloc = d_new, alloc_new
        best = (d, alloc)
        if stagnant:
            break
    else:
        log.warning("alternate: round cap %d reached", settings.max_rounds)

    return make_solution(scenario, best[0], best[1], rounds, method)


def _refine(d_ok, d_bad, scenario, shares, settings):
    """Largest feasible point on the segment from ``d_ok`` towards ``d_bad`` (bisection on the step)."""
    lo, hi = 0.0, 1.0
    found = None
    for _ in range(settings.refine_iters):
        t = 0.5 * (lo + hi)
        d_t = d_ok + t * (d_bad - d_ok)
        ev = _evaluate(d_t, scenario, shares, settings)
        if ev is not None and ev[3]:
            lo = t
            found = (d_t, ev[0], ev[1], ev[2])
        else:
            hi = t
    return found
