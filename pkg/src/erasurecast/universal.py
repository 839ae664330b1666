"""Queue/XOR broadcast scheme for the case where both users feed back.

Phase 1 sends every source symbol uncoded until at least one user hears it;
a symbol heard only by user ``i`` joins the queue of the other user. Phase 2
XORs the queue fronts while both users still need symbols, and falls back to
the remaining user's front symbol once one user is satisfied. Every reception
by an unsatisfied user recovers exactly one new symbol.
"""

from __future__ import annotations

from collections import deque
from typing import NamedTuple

import numpy as np

from .bounds import DemandPair
from .channel import ChannelParams, ChannelSampler, validate_params
from .errors import RuntimeExceeded
from .report import SchemeReport, SourceBlock, demand_count


class TraceRecord(NamedTuple):
    slot: int
    phase: int
    kind: str  # "uncoded" or "xor"
    idx1: int  # source index sent (uncoded) or front of q1 (xor)
    idx2: int  # front of q2 for xor slots, -1 otherwise
    x: int
    z1: int
    z2: int
    recovered1: int
    recovered2: int


def slot_cap(n: int, params: ChannelParams) -> int:
    return int(100 * n / (1.0 - params.eps2)) + 1


def run_universal(
    source: SourceBlock,
    params: ChannelParams,
    demands: DemandPair,
    rng: np.random.Generator,
    *,
    channel=None,
    record: bool = True,
) -> tuple[SchemeReport, list[TraceRecord] | None]:
    validate_params(params)
    if channel is None:
        channel = ChannelSampler(params, rng)
    n = source.n
    s = source.bits.tolist()
    need = (demand_count(demands.d1, n), demand_count(demands.d2, n))
    rec = [0, 0]
    sat = [None, None]
    for i in (0, 1):
        if need[i] <= 0:
            sat[i] = 0
    q1: deque[int] = deque()  # missed by user 1, held by user 2
    q2: deque[int] = deque()
    trace: list[TraceRecord] | None = [] if record else None
    cap = slot_cap(n, params)
    t = 0

    def deliver(i: int) -> None:
        rec[i] += 1
        if sat[i] is None and rec[i] >= need[i]:
            sat[i] = t

    done = sat[0] is not None and sat[1] is not None
    for idx in range(n):
        if done:
            break
        while True:
            t += 1
            if t > cap:
                raise RuntimeExceeded(f"slot cap {cap} exceeded in phase 1")
            z1, z2 = channel.next()
            if not z1:
                deliver(0)
            if not z2:
                deliver(1)
            if trace is not None:
                trace.append(TraceRecord(t, 1, "uncoded", idx, -1, s[idx], z1, z2, rec[0], rec[1]))
            done = sat[0] is not None and sat[1] is not None
            if not (z1 and z2) or done:
                break
        if z1 == 0 and z2 == 1:
            q2.append(idx)
        elif z1 == 1 and z2 == 0:
            q1.append(idx)
    phase1_len = t

    while not done:
        t += 1
        if t > cap:
            raise RuntimeExceeded(f"slot cap {cap} exceeded in phase 2")
        want1 = sat[0] is None and q1
        want2 = sat[1] is None and q2
        z1, z2 = channel.next()
        if want1 and want2:
            a, b = q1[0], q2[0]
            x = s[a] ^ s[b]
            kind = "xor"
            if not z1:
                q1.popleft()
                deliver(0)
            if not z2:
                q2.popleft()
                deliver(1)
        elif want1 or want2:
            q, i = (q1, 0) if want1 else (q2, 1)
            a, b = q[0], -1
            x = s[a]
            kind = "uncoded"
            if not (z1, z2)[i]:
                q.popleft()
                deliver(i)
        else:
            # an unsatisfied user with an empty queue already holds every symbol
            raise AssertionError("unsatisfied user with an empty queue")
        if trace is not None:
            trace.append(TraceRecord(t, 2, kind, a, b, x, z1, z2, rec[0], rec[1]))
        done = sat[0] is not None and sat[1] is not None

    report = SchemeReport(
        n=n,
        latency1=sat[0] / n,
        latency2=sat[1] / n,
        distortion1=1.0 - rec[0] / n,
        distortion2=1.0 - rec[1] / n,
        slots_total=t,
        phase_lengths=(phase1_len, t - phase1_len),
    )
    return report, trace
