"""Benchmark allocators and brute-force grid oracles."""

from __future__ import annotations

import enum
import itertools

import numpy as np

from fhei.cost import ResourceAllocation, RoundRecord, Scenario, Solution, make_solution
from fhei.errors import InitialInfeasible, TooLarge, ZeroRate
from fhei.link import BITS_PER_BYTE, TimeShares
from fhei.solver import DEFAULT_SETTINGS, SolverSettings, _evaluate, alternate


class BaselineKind(enum.Enum):
    CONSTANT_QUALITY = "constant_quality"
    CHANNEL_INVERSION = "channel_inversion"
    JOINT_GRID_ORACLE = "joint_grid_oracle"


def constant_quality(scenario: Scenario, settings: SolverSettings = DEFAULT_SETTINGS, iters: int = 60) -> Solution:
    """Largest common feature size ``d_bar`` that meets both budgets, by bisection on ``d_bar``."""
    M = scenario.M

    def check(d_bar):
        ev = _evaluate(np.full(M, d_bar), scenario, None, settings)
        return ev if ev is not None and ev[3] else None

    best_d, best = scenario.d_min, check(scenario.d_min)
    if best is None:
        raise InitialInfeasible("constant quality infeasible already at d_min")
    top = check(scenario.d_max)
    if top is not None:
        best_d, best = scenario.d_max, top
    else:
        lo, hi = scenario.d_min, scenario.d_max
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            ev = check(mid)
            if ev is None:
                hi = mid
            else:
                lo, best_d, best = mid, mid, ev
    alloc, T, E, _ = best
    d = np.full(M, best_d)
    record = RoundRecord(1, d, float(scenario.net.delta_s * d.sum()), True, float(E.mean()), float(T.mean()))
    return make_solution(scenario, d, alloc, (record,), BaselineKind.CONSTANT_QUALITY.value)


def inversion_shares(scenario: Scenario) -> TimeShares:
    """Time shares inversely proportional to the full-band rates (equal per-mobile throughput)."""
    if (scenario.U <= 0).any() or (scenario.D <= 0).any():
        raise ZeroRate("channel inversion needs strictly positive rates")
    inv_u = 1.0 / scenario.U
    inv_d = 1.0 / scenario.D
    return TimeShares(inv_u / inv_u.sum(), inv_d / inv_d.sum())


def channel_inversion_compute_only(scenario: Scenario, settings: SolverSettings = DEFAULT_SETTINGS) -> Solution:
    """Radio shares by channel inversion; edge/local speeds and feature sizes optimised as in FHEI."""
    return alternate(scenario, settings, shares=inversion_shares(scenario), method=BaselineKind.CHANNEL_INVERSION.value)


# -- grid oracles ---------------------------------------------------------------
#
# All grids are nested under doubling of ``n``: simplex faces use i/n for
# i = 1..n-1, speed boxes j/n * Q_m for j = 1..n, feature boxes
# d_min + j/n (d_max - d_min) for j = 0..n.


def _simplex_grid(M: int, n: int) -> np.ndarray:
    """Points on the face ``sum = 1`` with strictly positive entries, spacing 1/n."""
    if M == 1:
        return np.ones((1, 1))
    i = np.arange(1, n) / n
    return np.column_stack([i, 1.0 - i])


def _box_product(axes: list[np.ndarray]) -> np.ndarray:
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, len(axes))


def _speed_grid(Q: np.ndarray, n: int) -> np.ndarray:
    j = np.arange(1, n + 1) / n
    return _box_product([j * Qm for Qm in Q])


def _feature_grid(scenario: Scenario, n: int) -> np.ndarray:
    j = np.arange(0, n + 1) / n
    axis = scenario.d_min + j * (scenario.d_max - scenario.d_min)
    return _box_product([axis] * scenario.M)


def p2_grid_oracle(d, scenario: Scenario, n: int = 31, chunk: int = 4):
    """Brute-force minimum of the mean energy for fixed ``d`` over an (alpha, beta, f, q) grid.

    Returns ``(mean energy, ResourceAllocation)`` of the best latency-feasible
    grid point, or ``(inf, None)`` when no grid point meets the latency budget.
    """
    if scenario.M > 2:
        raise TooLarge("grid oracle supports at most two mobiles")
    d = np.asarray(d, dtype=float)
    net, M = scenario.net, scenario.M
    A = _simplex_grid(M, n)
    F = _simplex_grid(M, n) * scenario.F
    Qg = _speed_grid(scenario.Q, n)

    up = BITS_PER_BYTE * scenario.I / (A * scenario.U)  # (Na, M)
    down = BITS_PER_BYTE * d / (A * scenario.D)  # (Nb, M), beta shares the simplex grid
    fn = (net.L0 + net.c1 * d) / F  # (Nf, M)
    loc = net.c2 * d / Qg  # (Nq, M)
    e_up = scenario.radio.P_U * up
    e_down = scenario.sigma * down
    e_loc = scenario.psi * Qg**2 * net.c2 * d

    budget = M * scenario.T_bar
    best_e, best_idx = np.inf, None
    # enumerate (a, b, f, q) in full; chunk over the alpha axis to bound memory
    for a0 in range(0, len(A), chunk):
        a_sl = slice(a0, a0 + chunk)
        # shape (a, b, f, q, M)
        t = (
            up[a_sl, None, None, None, :]
            + down[None, :, None, None, :]
            + fn[None, None, :, None, :]
            + loc[None, None, None, :, :]
        ).sum(-1)
        # f only enters the latency
        e = (e_up[a_sl, None, None, None, :] + e_down[None, :, None, None, :] + e_loc[None, None, None, :, :]).sum(-1)
        e = np.where(t <= budget, np.broadcast_to(e, t.shape), np.inf)
        flat = int(np.argmin(e))
        if e.flat[flat] < best_e:
            best_e = float(e.flat[flat])
            ia, ib, i_f, iq = np.unravel_index(flat, e.shape)
            best_idx = (a0 + ia, ib, i_f, iq)
    if best_idx is None:
        return np.inf, None
    ia, ib, i_f, iq = best_idx
    alloc = ResourceAllocation(TimeShares(A[ia], A[ib]), F[i_f], Qg[iq])
    return best_e / M, alloc


def joint_grid_oracle(scenario: Scenario, n: int = 40, chunk: int = 256) -> Solution:
    """Best feasible grid point of the full joint problem over (d, alpha, beta, f, q).

    Exhaustive over the product grid. Because uplink time and uplink energy are
    both increasing in ``sum 8I/(alpha_m U_m)`` (likewise downlink in ``beta``,
    and ``f`` only enters the latency), the grid minimisers of those three
    one-dimensional terms dominate every other choice of alpha, beta, f for a
    given ``d``; the remaining search over (d, q) is done in full.
    """
    if scenario.M > 2:
        raise TooLarge("grid oracle supports at most two mobiles")
    net, M = scenario.net, scenario.M
    A = _simplex_grid(M, n)
    F = _simplex_grid(M, n) * scenario.F
    Qg = _speed_grid(scenario.Q, n)
    Dg = _feature_grid(scenario, n)

    up = (BITS_PER_BYTE * scenario.I / (A * scenario.U)).sum(1)
    ia = int(np.argmin(up))
    down = (BITS_PER_BYTE * Dg[:, None, :] / (A[None] * scenario.D)).sum(2)  # (Nd, Nb)
    ib = np.argmin(down, axis=1)
    fn = ((net.L0 + net.c1 * Dg[:, None, :]) / F[None]).sum(2)  # (Nd, Nf)
    i_f = np.argmin(fn, axis=1)
    rows = np.arange(len(Dg))
    pre = up[ia] + down[rows, ib] + fn[rows, i_f]
    comm_e = scenario.radio.P_U * up[ia] + scenario.sigma * down[rows, ib]

    T_budget = M * scenario.T_bar
    E_budget = M * scenario.E_bar
    loc_rate = net.c2 / Qg  # (Nq, M): local seconds per byte
    e_rate = scenario.psi * Qg**2 * net.c2  # (Nq, M): local joules per byte
    best = None  # (sum d, energy, d index, q index)
    for s in range(0, len(Dg), chunk):
        dd = Dg[s : s + chunk]
        t = pre[s : s + chunk, None] + dd @ loc_rate.T
        e = comm_e[s : s + chunk, None] + dd @ e_rate.T
        e = np.where((t <= T_budget) & (e <= E_budget), e, np.inf)
        iq = np.argmin(e, axis=1)
        e_best = e[np.arange(len(dd)), iq]
        for r in np.flatnonzero(np.isfinite(e_best)):
            key = (dd[r].sum(), -e_best[r])
            if best is None or key > best[:2]:
                best = (key[0], key[1], s + r, int(iq[r]))
    if best is None:
        raise InitialInfeasible("no feasible point on the oracle grid")
    di, qi = best[2], best[3]
    alloc = ResourceAllocation(TimeShares(A[ia], A[ib[di]]), F[i_f[di]], Qg[qi])
    return make_solution(scenario, Dg[di], alloc, (), BaselineKind.JOINT_GRID_ORACLE.value)


def joint_grid_oracle_naive(scenario: Scenario, n: int) -> float:
    """Best sum quality by plain enumeration of every grid point (only for tiny ``n``)."""
    if scenario.M > 2:
        raise TooLarge("grid oracle supports at most two mobiles")
    net, M = scenario.net, scenario.M
    A = _simplex_grid(M, n)
    F = _simplex_grid(M, n) * scenario.F
    Qg = _speed_grid(scenario.Q, n)
    Dg = _feature_grid(scenario, n)
    best = -np.inf
    for d in Dg:
        for a, b, f, q in itertools.product(A, A, F, Qg):
            lam, gam = a * scenario.U, b * scenario.D
            T = BITS_PER_BYTE * scenario.I / lam + BITS_PER_BYTE * d / gam + (net.L0 + net.c1 * d) / f + net.c2 * d / q
            E = (
                scenario.radio.P_U * BITS_PER_BYTE * scenario.I / lam
                + scenario.sigma * BITS_PER_BYTE * d / gam
                + scenario.psi * q**2 * net.c2 * d
            )
            if T.sum() <= M * scenario.T_bar and E.sum() <= M * scenario.E_bar:
                best = max(best, net.delta_s * d.sum())
                break
    return best
