"""Hybrid repetition / random-linear-combination scheme with one-sided feedback.

Only user 1 (the stronger user) feeds back. The run has four phases:

* I   -- every source symbol once, uncoded.
* II  -- each symbol of ``b_theta_bar`` is repeated until user 1 hears it,
         each copy masked by a fresh combination ``v(t)`` of ``f_set``.
* III -- fresh combinations of ``f_set`` until user 1 can solve for ``b_set``.
* IV  -- ``n4`` more combinations of ``f_set`` for user 2, sized from nominal
         parameters because user 2's erasures are never observed.

The encoder side of :func:`run_onesided` reads only ``z1``; user 2's channel
state is consumed exclusively by the user-2 receiver model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bounds import (
    DemandPair,
    HybridParams,
    capacity_c23,
    hybrid_coefficients,
    load_L,
    select_params,
    w_star,
)
from .channel import ChannelParams, ChannelSampler, validate_params
from .errors import RuntimeExceeded
from .gf2 import CoefficientSchedule, EquationBank, pack_values, parity
from .report import SchemeReport, SourceBlock, demand_count
from .universal import slot_cap

# Decoding margin for user 2 (see ``decode_backoff``): this many standard
# deviations of its equation surplus plus a few symbols for GF(2) rank loss.
BACKOFF_Z = 2.5
BACKOFF_RANK_SYMBOLS = 3


class Phase1Outcome(NamedTuple):
    z1: np.ndarray
    z2: np.ndarray


class TranscriptRecord(NamedTuple):
    slot: int
    phase: str  # "I" .. "IV"
    kind: str  # "uncoded", "repeat+rlc", "rlc"
    target: int  # source index sent uncoded / repeated, -1 for pure rlc
    coeff_slot: int  # coefficient-schedule slot, -1 when no combination is sent
    x: int
    z1: int
    z2: int


@dataclass(frozen=True)
class PhasePlan:
    hybrid: HybridParams
    b_set: tuple[int, ...]
    b_theta: tuple[int, ...]
    b_theta_bar: tuple[int, ...]  # in repetition order
    c_set: tuple[int, ...]
    n4: int
    coeff_seed: int
    target: float
    backoff: float = 0.0
    nominal_load: float | None = None

    @property
    def theta(self) -> float:
        return self.hybrid.theta

    @property
    def gamma(self) -> float:
        return self.hybrid.gamma

    @property
    def f_set(self) -> tuple[int, ...]:
        """Coding support: ``b_theta`` followed by ``c_set``."""
        return self.b_theta + self.c_set

    def schedule(self) -> CoefficientSchedule:
        return CoefficientSchedule(self.coeff_seed, self.f_set)


def _floor(x: float) -> int:
    return math.floor(round(x, 9))


def _ceil(x: float) -> int:
    return math.ceil(round(x, 9))


def phase4_length(params: ChannelParams, demands: DemandPair, n: int) -> int:
    gap = w_star(demands.d2, params.eps2) - w_star(demands.d1, params.eps1)
    return round(n * max(0.0, gap))


def decode_backoff(
    params: ChannelParams,
    demands: DemandPair,
    n: int,
    missed1: int,
    nominal: HybridParams,
) -> float:
    """Reduction of user 2's load target that buys a decoding margin.

    With the load set exactly to what user 2's equations can carry, user 2
    decodes F only about half the time at finite ``n``. Given the realized
    Phase I miss count of user 1 (known to the encoder), this compares the
    expected number of user-2 equations with the expected number of user-2
    unknowns under ``nominal`` and returns the per-symbol target reduction
    needed for a surplus of ``BACKOFF_Z`` standard deviations. It is zero
    whenever the nominal plan already has that surplus, and vanishes per
    symbol as ``n`` grows.
    """
    if demands.d1 >= params.eps1:
        return 0.0
    target = max(0.0, params.eps2 - demands.d2)
    e1, e2, e12 = params.eps1, params.eps2, params.eps12
    nb = max(0, missed1 - _floor(demands.d1 * n))
    recv = n - missed1
    race = (1.0 - e2) / (1.0 - e12)
    p_b = e12 / e1  # B symbols user 2 also missed in Phase I
    p_c = (e2 - e12) / (1.0 - e1)  # C symbols user 2 missed in Phase I
    p_r = p_b * race  # repeated symbols that reach user 2 as unknowns
    nt = min(nb, _ceil(nominal.theta * nb))
    nc = min(recv, round(nominal.gamma * recv))
    unknowns = nt * p_b + nc * p_c + (nb - nt) * p_r
    var_u = nt * p_b * (1 - p_b) + nc * p_c * (1 - p_c) + (nb - nt) * p_r * (1 - p_r)
    slots = nb / (1.0 - e1) + phase4_length(params, demands, n)
    equations = slots * (1.0 - e2)
    # reception noise plus the negative-binomial Phase II-III length
    var_e = slots * e2 * (1.0 - e2) + (1.0 - e2) ** 2 * nb * e1 / (1.0 - e1) ** 2
    margin = BACKOFF_Z * math.sqrt(var_u + var_e) + BACKOFF_RANK_SYMBOLS
    excess = unknowns - (equations - margin)
    return min(target, max(0.0, excess / n))


def plan_onesided(
    params: ChannelParams,
    demands: DemandPair,
    n: int,
    z1: np.ndarray,
    rng: np.random.Generator,
    *,
    backoff: float | str = 0.0,
) -> PhasePlan:
    """Build the phase plan from user 1's Phase I erasure pattern ``z1``.

    ``backoff`` lowers the load target below ``eps2 - d2`` (``"auto"`` uses
    :func:`decode_backoff`); feasibility is always judged on the nominal target.
    """
    validate_params(params)
    z1 = np.asarray(z1)
    n4 = phase4_length(params, demands, n)
    coeff_seed = int(rng.integers(0, 2**64, dtype=np.uint64))
    target = max(0.0, params.eps2 - demands.d2)
    if demands.d1 >= params.eps1:
        return PhasePlan(HybridParams(0.0, 0.0), (), (), (), (), n4, coeff_seed, target)

    coeffs = hybrid_coefficients(params, demands.d1)
    nominal = select_params(coeffs, target)  # raises Infeasible
    missed = np.flatnonzero(z1 == 1)
    if backoff == "auto":
        backoff = decode_backoff(params, demands, n, missed.size, nominal)
    hp = select_params(coeffs, max(0.0, target - backoff)) if backoff > 0 else nominal

    received = np.flatnonzero(z1 == 0)
    nb = max(0, missed.size - _floor(demands.d1 * n))
    b_set = np.sort(rng.choice(missed, size=nb, replace=False)) if nb else missed[:0]
    perm = rng.permutation(b_set)
    nt = min(nb, _ceil(hp.theta * nb))
    b_theta = np.sort(perm[:nt])
    b_theta_bar = perm[nt:]
    nc = min(received.size, round(hp.gamma * received.size))
    c_set = np.sort(rng.choice(received, size=nc, replace=False)) if nc else received[:0]
    as_tuple = lambda a: tuple(int(v) for v in a)  # noqa: E731
    return PhasePlan(
        hybrid=hp,
        b_set=as_tuple(b_set),
        b_theta=as_tuple(b_theta),
        b_theta_bar=as_tuple(b_theta_bar),
        c_set=as_tuple(c_set),
        n4=n4,
        coeff_seed=coeff_seed,
        target=target,
        backoff=backoff,
        nominal_load=load_L(coeffs, nominal),
    )


class _BitGather:
    """Projects a coefficient vector over the support onto a subset of positions."""

    def __init__(self, positions: np.ndarray, width: int):
        self.positions = np.asarray(positions, dtype=np.intp)
        self.nbytes = (width + 7) // 8

    def __call__(self, c: int) -> int:
        if self.positions.size == 0 or c == 0:
            return 0
        bits = np.unpackbits(
            np.frombuffer(c.to_bytes(self.nbytes, "little"), dtype=np.uint8), bitorder="little"
        )
        packed = np.packbits(bits[self.positions], bitorder="little")
        return int.from_bytes(packed.tobytes(), "little")


class _User2Receiver:
    """User 2's decoder: an equation bank over its Phase I misses."""

    def __init__(self, source: list[int], z2: np.ndarray, plan: PhasePlan):
        f = plan.f_set
        misses = set(np.flatnonzero(z2 == 1).tolist())
        unk_pos = [k for k, idx in enumerate(f) if idx in misses]
        in_f = {f[k] for k in unk_pos}
        self.bank = EquationBank([f[k] for k in unk_pos] + sorted(misses - in_f))
        self.gather = _BitGather(np.array(unk_pos, dtype=np.intp), len(f))
        self.unk_f_mask = sum(1 << k for k in unk_pos)
        known = [k for k, idx in enumerate(f) if idx not in misses]
        self.known_vals = sum(1 << k for k in known if source[f[k]])
        self.source = source
        self.received = int((z2 == 0).sum())
        self.seen_f = 0  # union of received coefficient supports on unknown F positions
        self.seen_rep: set[int] = set()

    @property
    def count(self) -> int:
        return self.received + self.bank.n_determined

    def hear(self, x: int, c: int, target: int) -> None:
        rhs = x ^ parity(c & self.known_vals)
        row = self.gather(c)
        self.seen_f |= c & self.unk_f_mask
        if target >= 0:
            if self.bank.has_unknown(target):
                row ^= 1 << self.bank.column(target)
                self.seen_rep.add(target)
            else:
                rhs ^= self.source[target]
        self.bank.add_row(row, rhs)

    def unknown_load(self, n: int) -> float:
        return (self.seen_f.bit_count() + len(self.seen_rep)) / n


def run_onesided(
    source: SourceBlock,
    params: ChannelParams,
    demands: DemandPair,
    rng: np.random.Generator,
    *,
    channel=None,
    backoff: float | str = "auto",
    record: bool = True,
) -> tuple[SchemeReport, list[TranscriptRecord] | None]:
    """Simulate one block; ``backoff`` is passed to :func:`plan_onesided`."""
    validate_params(params)
    if channel is None:
        channel = ChannelSampler(params, rng)
    n = source.n
    s = source.bits.tolist()
    need1 = demand_count(demands.d1, n)
    need2 = demand_count(demands.d2, n)
    sat1 = 0 if need1 <= 0 else None
    sat2 = 0 if need2 <= 0 else None
    out: list[TranscriptRecord] | None = [] if record else None

    # Phase I
    zs = []
    got1 = got2 = 0
    for t in range(1, n + 1):
        z1, z2 = channel.next()
        zs.append((z1, z2))
        got1 += 1 - z1
        got2 += 1 - z2
        if sat1 is None and got1 >= need1:
            sat1 = t
        if sat2 is None and got2 >= need2:
            sat2 = t
        if out is not None:
            out.append(TranscriptRecord(t, "I", "uncoded", t - 1, -1, s[t - 1], z1, z2))
    z = np.array(zs, dtype=np.uint8).reshape(n, 2)

    plan = plan_onesided(params, demands, n, z[:, 0], rng, backoff=backoff)
    f = plan.f_set
    sched = plan.schedule()
    f_vals = pack_values(s, f)
    nt = len(plan.b_theta)
    low_mask = (1 << nt) - 1
    c_vals = f_vals & ~low_mask  # user 1 holds every c_set symbol
    bank1 = EquationBank(plan.b_theta + plan.b_theta_bar)
    user2 = _User2Receiver(s, z[:, 1], plan)
    base1 = got1
    cap = slot_cap(n, params)
    t = n

    def step(phase: str, kind: str, target: int) -> tuple[int, int]:
        nonlocal t, sat1, sat2
        t += 1
        if t > cap:
            raise RuntimeExceeded(f"slot cap {cap} exceeded in phase {phase}")
        c = sched.coefficients(t)
        x = parity(c & f_vals)
        if target >= 0:
            x ^= s[target]
        z1, z2 = channel.next()
        if not z1:
            row = c & low_mask
            if target >= 0:
                row |= 1 << bank1.column(target)
            bank1.add_row(row, x ^ parity(c & c_vals))
            if sat1 is None and base1 + bank1.n_determined >= need1:
                sat1 = t
        if not z2:
            user2.hear(x, c, target)
            if sat2 is None and user2.count >= need2:
                sat2 = t
        if out is not None:
            out.append(TranscriptRecord(t, phase, kind, target, t if f else -1, x, z1, z2))
        return z1, z2

    # encoder decisions below depend on z1 only
    for b in plan.b_theta_bar:
        kind = "repeat+rlc" if f else "uncoded"
        while step("II", kind, b)[0]:
            pass
    p2 = t - n
    while not bank1.is_fully_determined():
        step("III", "rlc", -1)
    p3 = t - n - p2
    for _ in range(plan.n4):
        step("IV", "rlc", -1)
    p4 = plan.n4

    report = SchemeReport(
        n=n,
        latency1=(sat1 if sat1 is not None else t) / n,
        latency2=(sat2 if sat2 is not None else t) / n,
        distortion1=1.0 - (base1 + bank1.n_determined) / n,
        distortion2=1.0 - user2.count / n,
        slots_total=t,
        phase_lengths=(n, p2, p3, p4),
        satisfied1=sat1 is not None,
        satisfied2=sat2 is not None,
        theta=plan.theta,
        gamma=plan.gamma,
        unknown_load=user2.unknown_load(n),
        extra={
            "b_size": len(plan.b_set),
            "b_theta_size": nt,
            "c_size": len(plan.c_set),
            "f_size": len(f),
            "n4": plan.n4,
            "backoff": plan.backoff,
            "user2_rank": user2.bank.rank,
            "user2_unknowns_in_f": user2.unk_f_mask.bit_count(),
        },
    )
    report.extra["plan"] = plan
    report.extra["phase1"] = Phase1Outcome(z[:, 0].copy(), z[:, 1].copy())
    report.extra["bank1"] = bank1
    report.extra["bank2"] = user2.bank
    return report, out


def measure_unknown_load(
    transcript: list[TranscriptRecord], plan: PhasePlan, phase1: Phase1Outcome
) -> float:
    """Distinct user-2 unknowns in equations user 2 heard from Phase II on, per symbol."""
    n = len(phase1.z2)
    misses = set(np.flatnonzero(np.asarray(phase1.z2) == 1).tolist())
    sched = plan.schedule()
    f = plan.f_set
    unk_mask = sum(1 << k for k, idx in enumerate(f) if idx in misses)
    seen_f = 0
    seen: set[int] = set()
    for r in transcript:
        if r.phase == "I" or r.z2:
            continue
        if r.coeff_slot >= 0:
            seen_f |= sched.coefficients(r.coeff_slot) & unk_mask
        if r.target >= 0 and r.target in misses:
            seen.add(r.target)
    return (seen_f.bit_count() + len(seen)) / n
