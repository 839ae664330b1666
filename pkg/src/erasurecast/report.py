"""Source blocks and per-run reports shared by both schemes."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class SourceBlock:
    """Length-``n`` equiprobable binary source sequence (0-based indices)."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.bits, dtype=np.uint8)
        if b.ndim != 1 or (b > 1).any():
            raise ValueError("source bits must be a 1-D 0/1 sequence")
        object.__setattr__(self, "bits", b)

    @property
    def n(self) -> int:
        return int(self.bits.shape[0])

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "SourceBlock":
        return cls(rng.integers(0, 2, size=n, dtype=np.uint8))

    def __getitem__(self, idx: int) -> int:
        return int(self.bits[idx])


def demand_count(d: float, n: int) -> int:
    """Number of symbols a user with distortion ``d`` must recover."""
    # guard against 0.9*10000 = 9000.000000000002 style round-off
    return math.ceil(round((1.0 - d) * n, 9))


@dataclass
class SchemeReport:
    n: int
    latency1: float
    latency2: float
    distortion1: float
    distortion2: float
    slots_total: int
    phase_lengths: tuple[int, ...]
    satisfied1: bool = True
    satisfied2: bool = True
    theta: float | None = None
    gamma: float | None = None
    unknown_load: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def latency_max(self) -> float:
        return max(self.latency1, self.latency2)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["latency_max"] = self.latency_max
        return d
