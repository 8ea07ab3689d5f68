"""Problem instance, decision variables and the per-mobile latency / energy / quality model."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from fhei.errors import LengthMismatch, ZeroResource
from fhei.link import BITS_PER_BYTE, MobileLink, RadioParams, TimeShares
from fhei.profile import NetCostModel

# relative slack on the average latency / energy budgets (the multiplier comes from bisection)
BUDGET_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Scenario:
    links: tuple[MobileLink, ...]
    Q: np.ndarray
    radio: RadioParams = field(default_factory=RadioParams)
    net: NetCostModel = field(default_factory=NetCostModel)
    I: float = 100e3
    F: float = 20e12
    d_min: float = 2.8e6
    d_max: float = 6e6
    E_bar: float = 5.0
    T_bar: float = 15.0
    sigma: float = 0.01
    psi: float = 1e-28
    eta: float = 1.01

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        Q = np.array(self.Q, dtype=float).reshape(-1)
        if len(Q) == 1 and len(self.links) > 1:
            Q = np.full(len(self.links), Q[0])
        object.__setattr__(self, "Q", Q)
        if not self.links:
            raise ValueError("scenario needs at least one mobile")
        if len(Q) != len(self.links):
            raise LengthMismatch(f"{len(Q)} compute caps for {len(self.links)} mobiles")
        if not (Q > 0).all():
            raise ValueError("Q must be strictly positive")
        if not 0 < self.d_min <= self.d_max:
            raise ValueError(f"need 0 < d_min <= d_max, got d_min={self.d_min}, d_max={self.d_max}")
        for name in ("F", "E_bar", "T_bar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.I < 0 or self.sigma < 0 or self.psi < 0:
            raise ValueError("I, sigma and psi must be non-negative")
        if not self.eta > 1:
            raise ValueError("eta must exceed 1")
        object.__setattr__(self, "U", np.array([link.U for link in self.links]))
        object.__setattr__(self, "D", np.array([link.D for link in self.links]))

    @property
    def M(self) -> int:
        return len(self.links)

    @classmethod
    def from_gains(cls, g_U: Sequence[float], g_D: Sequence[float], Q, radio: RadioParams | None = None, **kw):
        radio = radio or RadioParams()
        if len(g_U) != len(g_D):
            raise LengthMismatch("g_U and g_D differ in length")
        links = tuple(MobileLink.from_gains(gu, gd, radio) for gu, gd in zip(g_U, g_D))
        return cls(links=links, Q=Q, radio=radio, **kw)

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    @property
    def g_U(self) -> np.ndarray:
        return np.array([link.g_U for link in self.links])

    @property
    def g_D(self) -> np.ndarray:
        return np.array([link.g_D for link in self.links])


@dataclass(frozen=True, eq=False)
class ResourceAllocation:
    shares: TimeShares
    f: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        if (self.f < 0).any():
            raise ValueError("edge speeds must be non-negative")
        if not (self.q > 0).all():
            raise ValueError("local speeds must be strictly positive")

    @property
    def alpha(self) -> np.ndarray:
        return self.shares.alpha

    @property
    def beta(self) -> np.ndarray:
        return self.shares.beta

    def check(self, scenario: Scenario, rtol: float = 1e-9) -> None:
        """Raise ValueError unless the allocation respects the resource constraints of ``scenario``."""
        if len(self.f) != scenario.M or len(self.q) != scenario.M or len(self.shares) != scenario.M:
            raise LengthMismatch("allocation length differs from mobile count")
        if self.f.sum() > scenario.F * (1 + rtol):
            raise ValueError("edge speeds exceed F")
        if (self.q > scenario.Q * (1 + rtol)).any():
            raise ValueError("local speed above its cap")


@dataclass(frozen=True, eq=False)
class RoundRecord:
    round: int
    d: np.ndarray
    sum_quality: float
    feasible: bool
    mean_energy: float
    mean_latency: float


@dataclass(frozen=True, eq=False)
class Solution:
    d: np.ndarray
    alloc: ResourceAllocation
    T: np.ndarray
    E: np.ndarray
    quality: np.ndarray
    rounds: tuple[RoundRecord, ...] = ()
    method: str = "fhei"

    @property
    def sum_quality(self) -> float:
        return float(self.quality.sum())

    @property
    def mean_latency(self) -> float:
        return float(self.T.mean())

    @property
    def mean_energy(self) -> float:
        return float(self.E.mean())

    def satisfies_budgets(self, scenario: Scenario, rtol: float = BUDGET_TOL) -> bool:
        return (
            self.mean_latency <= scenario.T_bar * (1 + rtol)
            and self.mean_energy <= scenario.E_bar * (1 + rtol)
            and bool(((self.d >= scenario.d_min * (1 - 1e-12)) & (self.d <= scenario.d_max * (1 + 1e-12))).all())
        )


def fn_load(net: NetCostModel, d):
    """Edge-side feature-network FLOPs for feature size ``d`` bytes."""
    return net.L0 + net.c1 * d


def in_load(net: NetCostModel, d):
    """Mobile-side inference-network FLOPs for feature size ``d`` bytes."""
    return net.c2 * d


def quality(net: NetCostModel, d):
    return net.delta_s * d


def _rates(scenario: Scenario, alloc: ResourceAllocation):
    return alloc.alpha * scenario.U, alloc.beta * scenario.D


def latencies(scenario: Scenario, d, alloc: ResourceAllocation) -> np.ndarray:
    """Vector of E2E latencies T_m in seconds."""
    lam, gam = _rates(scenario, alloc)
    if (lam <= 0).any() or (gam <= 0).any() or (alloc.f <= 0).any():
        raise ZeroResource("zero uplink/downlink rate or edge speed")
    d = np.asarray(d, dtype=float)
    net = scenario.net
    return (
        BITS_PER_BYTE * scenario.I / lam
        + BITS_PER_BYTE * d / gam
        + fn_load(net, d) / alloc.f
        + in_load(net, d) / alloc.q
    )


def energies(scenario: Scenario, d, alloc: ResourceAllocation) -> np.ndarray:
    """Vector of mobile energies E_m in joules."""
    lam, gam = _rates(scenario, alloc)
    if (lam <= 0).any() or (gam <= 0).any():
        raise ZeroResource("zero uplink/downlink rate")
    d = np.asarray(d, dtype=float)
    return (
        scenario.radio.P_U * BITS_PER_BYTE * scenario.I / lam
        + scenario.sigma * BITS_PER_BYTE * d / gam
        + scenario.psi * alloc.q**2 * in_load(scenario.net, d)
    )


def e2e_latency(scenario: Scenario, m: int, d_m: float, alloc: ResourceAllocation) -> float:
    lam = alloc.alpha[m] * scenario.U[m]
    gam = alloc.beta[m] * scenario.D[m]
    f, q = alloc.f[m], alloc.q[m]
    if lam <= 0 or gam <= 0 or f <= 0 or q <= 0:
        raise ZeroResource(f"mobile {m} has a zero rate or speed")
    net = scenario.net
    return float(
        BITS_PER_BYTE * scenario.I / lam + BITS_PER_BYTE * d_m / gam + fn_load(net, d_m) / f + in_load(net, d_m) / q
    )


def mobile_energy(scenario: Scenario, m: int, d_m: float, alloc: ResourceAllocation) -> float:
    lam = alloc.alpha[m] * scenario.U[m]
    gam = alloc.beta[m] * scenario.D[m]
    if lam <= 0 or gam <= 0:
        raise ZeroResource(f"mobile {m} has a zero rate")
    return float(
        scenario.radio.P_U * BITS_PER_BYTE * scenario.I / lam
        + scenario.sigma * BITS_PER_BYTE * d_m / gam
        + scenario.psi * alloc.q[m] ** 2 * in_load(scenario.net, d_m)
    )


def make_solution(scenario: Scenario, d, alloc: ResourceAllocation, rounds=(), method="fhei") -> Solution:
    d = np.array(d, dtype=float)
    return Solution(
        d=d,
        alloc=alloc,
        T=latencies(scenario, d, alloc),
        E=energies(scenario, d, alloc),
        quality=quality(scenario.net, d),
        rounds=tuple(rounds),
        method=method,
    )
