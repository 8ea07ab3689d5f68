"""Shannon-rate link model with TDMA time sharing.

Payload sizes elsewhere in the package are bytes; the rates here are bits/s.
Callers convert with ``BITS_PER_BYTE`` before dividing a payload by a rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fhei.errors import LengthMismatch

BITS_PER_BYTE = 8.0


def dbm_per_hz_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class RadioParams:
    W_U: float = 20e6
    W_D: float = 160e6
    P_U: float = 0.1
    P_D: float = 1.0
    N0: float = dbm_per_hz_to_watts(-174.0)

    def __post_init__(self):
        for name in ("W_U", "W_D", "P_U", "P_D", "N0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"RadioParams.{name} must be strictly positive")


def shannon_rate(W: float, g: float, P: float, N0: float) -> float:
    """Full-band capacity ``W * log2(1 + g P / (N0 W))`` in bits/s."""
    return W * math.log2(1.0 + g * P / (N0 * W))


@dataclass(frozen=True)
class MobileLink:
    g_U: float
    g_D: float
    U: float
    D: float

    def __post_init__(self):
        if self.g_U < 0 or self.g_D < 0:
            raise ValueError("channel gains must be non-negative")

    @classmethod
    def from_gains(cls, g_U: float, g_D: float, radio: RadioParams) -> "MobileLink":
        U = shannon_rate(radio.W_U, g_U, radio.P_U, radio.N0)
        D = shannon_rate(radio.W_D, g_D, radio.P_D, radio.N0)
        return cls(float(g_U), float(g_D), U, D)


@dataclass(frozen=True, eq=False)
class TimeShares:
    alpha: np.ndarray
    beta: np.ndarray
    # tolerance on the simplex sums; shares come out of floating-point normalisation
    tol: float = field(default=1e-9, repr=False, compare=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if alpha.shape != beta.shape:
            raise LengthMismatch("alpha and beta must have the same length")
        if (alpha < 0).any() or (beta < 0).any():
            raise ValueError("time shares must be non-negative")
        if alpha.sum() > 1 + self.tol or beta.sum() > 1 + self.tol:
            raise ValueError("time shares must sum to at most one")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    def __len__(self):
        return len(self.alpha)


def achievable_rates(shares: TimeShares, links: Sequence[MobileLink]) -> tuple[np.ndarray, np.ndarray]:
    """Per-mobile uplink and downlink rates ``(alpha_m U_m, beta_m D_m)``."""
    if len(shares) != len(links):
        raise LengthMismatch(f"{len(shares)} shares for {len(links)} links")
    U = np.array([link.U for link in links])
    D = np.array([link.D for link in links])
    return shares.alpha * U, shares.beta * D
