"""Closed-form latency bounds and the hybrid-scheme parameter solver.

The one-sided formulas use ``1 - eps12`` where the independent-erasure case
has ``1 - eps1*eps2``; the two agree when ``eps12 == eps1*eps2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .channel import ChannelParams, validate_params
from .errors import Infeasible, RangeViolation

FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class DemandPair:
    d1: float
    d2: float

    def __post_init__(self) -> None:
        for name in ("d1", "d2"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise RangeViolation(f"{name}={v!r} must lie in [0, 1]")

    def nontrivial(self, params: ChannelParams) -> bool:
        return self.d1 < params.eps1 and self.d2 < params.eps2


@dataclass(frozen=True)
class HybridParams:
    theta: float
    gamma: float

    def __post_init__(self) -> None:
        for name in ("theta", "gamma"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise RangeViolation(f"{name}={v!r} must lie in [0, 1]")


@dataclass(frozen=True)
class HybridCoefficients:
    k1: float
    k2: float
    k3: float

    @property
    def total(self) -> float:
        return self.k1 + self.k2 + self.k3


@dataclass(frozen=True)
class BoundsReport:
    eps1: float
    eps2: float
    eps12: float
    d1: float
    d2: float
    w1_star: float
    w2_star: float
    w_plus: float
    k1: float | None
    k2: float | None
    k3: float | None
    theta: float | None
    gamma: float | None
    load_L: float | None
    c23: float | None
    w23_per_symbol: float | None
    race_probability: float
    c_dagger: float
    d_dagger: float
    d1_region_edges: tuple[float, float, float]
    feasible: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _check_eps(eps: float) -> None:
    if not (0.0 < eps < 1.0):
        raise RangeViolation(f"erasure rate {eps!r} must lie in (0, 1)")


def _check_d(d: float) -> None:
    if not (0.0 <= d <= 1.0):
        raise RangeViolation(f"distortion {d!r} must lie in [0, 1]")


def w_star(d: float, eps: float) -> float:
    """Point-to-point optimal latency (channel uses per source symbol)."""
    _check_d(d)
    _check_eps(eps)
    return (1.0 - d) / (1.0 - eps)


def w_plus(demands: DemandPair, params: ChannelParams) -> float:
    validate_params(params)
    return max(w_star(demands.d1, params.eps1), w_star(demands.d2, params.eps2))


def distortion_at_latency(w: float, eps: float) -> float:
    """Erasure distortion reached after ``w*N`` distortion-innovative slots."""
    _check_eps(eps)
    w_max = 1.0 / (1.0 - eps)
    if not (0.0 <= w <= w_max * (1.0 + 1e-12)):
        raise RangeViolation(f"latency {w!r} outside [0, {w_max!r}]")
    return max(0.0, 1.0 - w * (1.0 - eps))


def _check_d1(params: ChannelParams, d1: float) -> None:
    validate_params(params)
    if not (0.0 <= d1 <= params.eps1):
        raise RangeViolation(f"d1={d1!r} must lie in [0, eps1={params.eps1!r}]")


def hybrid_coefficients(params: ChannelParams, d1: float) -> HybridCoefficients:
    """Coefficients of the weak user's unknown load ``k1*gamma + k2*theta + k3``."""
    _check_d1(params, d1)
    e1, e2, e12 = params.eps1, params.eps2, params.eps12
    k1 = (1.0 - e1) * e2
    k2 = e2 * e2 * (e1 - d1) * (1.0 - e1) / (1.0 - e12)
    k3 = e2 * (e1 - d1) * (1.0 - e2) / (1.0 - e12)
    return HybridCoefficients(k1, k2, k3)


def load_L(coeffs: HybridCoefficients, hp: HybridParams) -> float:
    return coeffs.k1 * hp.gamma + coeffs.k2 * hp.theta + coeffs.k3


def capacity_c23(params: ChannelParams, d1: float) -> tuple[float, float]:
    """Weak-user capacity over Phases II-III and the mean Phase II-III length per symbol."""
    _check_d1(params, d1)
    e1, e2 = params.eps1, params.eps2
    w23 = (e1 - d1) / (1.0 - e1)
    return w23 * (1.0 - e2), w23


def race_probability(params: ChannelParams) -> float:
    """Chance user 2 hears a symbol repeated until user 1's first reception."""
    validate_params(params)
    return (1.0 - params.eps2) / (1.0 - params.eps12)


def select_params(coeffs: HybridCoefficients, target: float) -> HybridParams:
    """Pick (theta, gamma) whose load meets ``target``, filling theta before gamma.

    Targets below ``k3`` return (0, 0): repetition alone already over-covers.
    """
    if target < 0.0:
        raise RangeViolation(f"target {target!r} must be non-negative")
    k1, k2, k3 = coeffs.k1, coeffs.k2, coeffs.k3
    if target > k1 + k2 + k3 + FEASIBILITY_TOL:
        raise Infeasible(
            f"target load {target!r} exceeds the scheme maximum {k1 + k2 + k3!r}"
        )
    if target <= k3:
        return HybridParams(theta=0.0, gamma=0.0)
    if target <= k2 + k3:
        return HybridParams(theta=min(1.0, (target - k3) / k2), gamma=0.0)
    gamma = (target - k2 - k3) / k1
    return HybridParams(theta=1.0, gamma=min(1.0, max(0.0, gamma)))


def region_boundaries(params: ChannelParams, d1: float) -> tuple[float, float, tuple[float, float, float]]:
    """(c_dagger, d_dagger, d1 region edges); the edges are diagnostic only."""
    validate_params(params)
    _check_d(d1)
    e1, e2 = params.eps1, params.eps2
    den = 1.0 - e1 * e2
    c_dag = (e1 * e2 * (1.0 - e1) + d1 * (1.0 - e2)) / den
    d_dag = ((1.0 - e1) + d1 * (1.0 - e2)) / den
    edges = (2.0 * (e1 * e2 - 1.0) / e2, e1 * e1 * e2, e1)
    return c_dag, d_dag, edges


def bounds_report(params: ChannelParams, demands: DemandPair) -> BoundsReport:
    validate_params(params)
    w1 = w_star(demands.d1, params.eps1)
    w2 = w_star(demands.d2, params.eps2)
    c_dag, d_dag, edges = region_boundaries(params, demands.d1)
    k = hp = load = c23 = w23 = None
    feasible = True
    if demands.d1 <= params.eps1:
        k = hybrid_coefficients(params, demands.d1)
        c23, w23 = capacity_c23(params, demands.d1)
        try:
            hp = select_params(k, max(0.0, params.eps2 - demands.d2))
            load = load_L(k, hp)
        except Infeasible:
            feasible = False
    return BoundsReport(
        eps1=params.eps1,
        eps2=params.eps2,
        eps12=params.eps12,
        d1=demands.d1,
        d2=demands.d2,
        w1_star=w1,
        w2_star=w2,
        w_plus=max(w1, w2),
        k1=k.k1 if k else None,
        k2=k.k2 if k else None,
        k3=k.k3 if k else None,
        theta=hp.theta if hp else None,
        gamma=hp.gamma if hp else None,
        load_L=load,
        c23=c23,
        w23_per_symbol=w23,
        race_probability=race_probability(params),
        c_dagger=c_dag,
        d_dagger=d_dag,
        d1_region_edges=edges,
        feasible=feasible,
    )
