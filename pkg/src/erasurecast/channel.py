"""Two-receiver memoryless erasure broadcast channel.

Each slot draws one uniform real and maps it through the cumulative joint
mass in the order (1,1), (1,0), (0,1), (0,0), where ``z_i = 1`` means the slot
is erased at user ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import JointMassViolation, OrderViolation, RangeViolation

_MASS_TOL = 1e-12


class SlotOutcome(NamedTuple):
    z1: int
    z2: int


# index into this table with the cell chosen by the cumulative mapping
_CELLS = (SlotOutcome(1, 1), SlotOutcome(1, 0), SlotOutcome(0, 1), SlotOutcome(0, 0))


@dataclass(frozen=True)
class ChannelParams:
    """Erasure rates of the two users plus the simultaneous-erasure rate.

    ``eps12`` defaults to ``eps1 * eps2`` (independent erasures).
    """

    eps1: float
    eps2: float
    eps12: float | None = None

    def __post_init__(self) -> None:
        if self.eps12 is None:
            object.__setattr__(self, "eps12", self.eps1 * self.eps2)

    def joint_masses(self) -> tuple[float, float, float, float]:
        """Pr(Z1=a, Z2=b) for (a, b) = (1,1), (1,0), (0,1), (0,0)."""
        e1, e2, e12 = self.eps1, self.eps2, self.eps12
        return (e12, e1 - e12, e2 - e12, 1.0 - e1 - e2 + e12)

    @property
    def independent(self) -> bool:
        return abs(self.eps12 - self.eps1 * self.eps2) <= _MASS_TOL


def validate_params(p: ChannelParams) -> tuple[float, float, float, float]:
    """Check every invariant of ``p`` and return its four joint masses."""
    for name in ("eps1", "eps2", "eps12"):
        v = getattr(p, name)
        if not (0.0 < v < 1.0):
            raise RangeViolation(f"{name}={v!r} must lie in (0, 1)")
    if p.eps1 >= p.eps2:
        raise OrderViolation(f"eps1={p.eps1!r} must be < eps2={p.eps2!r}")
    masses = p.joint_masses()
    for cell, m in zip(_CELLS, masses):
        if m < -_MASS_TOL or m > 1.0 + _MASS_TOL:
            raise JointMassViolation(
                f"Pr(Z1={cell.z1}, Z2={cell.z2}) = {m!r} outside [0, 1]"
            )
    return masses


def _thresholds(p: ChannelParams) -> np.ndarray:
    m = p.joint_masses()
    return np.cumsum(m[:3])


def _cells_from_uniform(u: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    # side="right": u == threshold falls into the next cell, so zero-mass
    # cells are never selected
    return np.searchsorted(thresholds, u, side="right")


def sample_slot(p: ChannelParams, rng: np.random.Generator) -> SlotOutcome:
    u = rng.random()
    return _CELLS[int(_cells_from_uniform(np.asarray(u), _thresholds(p)))]


def sample_sequence(p: ChannelParams, n: int, rng: np.random.Generator) -> list[SlotOutcome]:
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return []
    cells = _cells_from_uniform(rng.random(n), _thresholds(p))
    return [_CELLS[c] for c in cells]


def sample_array(p: ChannelParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorised form of :func:`sample_sequence`: an ``(n, 2)`` uint8 array."""
    cells = _cells_from_uniform(rng.random(n), _thresholds(p))
    table = np.array(_CELLS, dtype=np.uint8)
    return table[cells]


class ChannelSampler:
    """Stateful slot source used by the schemes.

    Draws uniforms from ``rng`` in blocks; the produced sequence is identical
    to successive :func:`sample_slot` calls on the same generator as long as
    nothing else consumes that generator in between.
    """

    block = 4096

    def __init__(self, params: ChannelParams, rng: np.random.Generator):
        validate_params(params)
        self.params = params
        self._rng = rng
        self._thr = _thresholds(params)
        self._buf: list[int] = []
        self._pos = 0

    def next(self) -> SlotOutcome:
        if self._pos >= len(self._buf):
            self._buf = _cells_from_uniform(self._rng.random(self.block), self._thr).tolist()
            self._pos = 0
        c = self._buf[self._pos]
        self._pos += 1
        return _CELLS[c]
