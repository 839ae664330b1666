"""GF(2) random linear combinations and receiver-side incremental solving.

Coefficient vectors and bank rows are passed around as Python ints used as
packed bit vectors: bit ``k`` is the coefficient of the ``k``-th support
index (schedules) or the ``k``-th unknown (banks).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numba
import numpy as np

from .errors import InconsistentSystem, UnknownIndex
from .seeding import derive_seed

_REDUNDANT = -1
_INCONSISTENT = -2


@numba.njit(cache=True)
def _is_unit(row, hi):
    seen = False
    for w in range(hi):
        x = row[w]
        if x != 0:
            if seen or (x & (x - numba.uint64(1))) != 0:
                return False
            seen = True
    return seen


@numba.njit(cache=True)
def _insert(m, rhs, pword, pshift, unit, r, hi, v, b):
    """Reduce ``v`` against rows ``0..r-1`` and store it as row ``r``.

    Returns the number of newly determined unknowns, ``_REDUNDANT`` or
    ``_INCONSISTENT``. Only the first ``hi`` words of any row can be nonzero.
    """
    one = numba.uint64(1)
    for i in range(r):
        if (v[pword[i]] >> pshift[i]) & one:
            for w in range(hi):
                v[w] ^= m[i, w]
            b ^= rhs[i]
    wi = -1
    for w in range(hi):
        if v[w] != 0:
            wi = w
            break
    if wi < 0:
        return -2 if b else -1
    x = v[wi]
    bit = 0
    while not (x >> numba.uint64(bit)) & one:
        bit += 1
    sh = numba.uint64(bit)
    gained = 0
    for i in range(r):
        if (m[i, wi] >> sh) & one:
            for w in range(hi):
                m[i, w] ^= v[w]
            rhs[i] ^= b
            if _is_unit(m[i], hi):
                unit[i] = True
                gained += 1
    for w in range(hi):
        m[r, w] = v[w]
    rhs[r] = b
    pword[r] = wi
    pshift[r] = sh
    if _is_unit(v, hi):
        unit[r] = True
        gained += 1
    return gained


@dataclass(frozen=True)
class CoefficientSchedule:
    """Public pseudo-random coefficients shared by transmitter and receivers.

    Slot ``t`` uses the fair-coin bits of a generator seeded with
    ``derive_seed(seed, t)``; bit ``k`` is the coefficient of ``support[k]``.
    """

    seed: int
    support: tuple[int, ...] = field(default=())

    def coefficients(self, t: int) -> int:
        n = len(self.support)
        if n == 0:
            return 0
        return random.Random(derive_seed(self.seed, t)).getrandbits(n)

    def coefficient_list(self, t: int) -> list[int]:
        c = self.coefficients(t)
        return [(c >> k) & 1 for k in range(len(self.support))]


def pack_values(values: Sequence[int] | Mapping[int, int], support: Sequence[int]) -> int:
    """Pack source values at ``support`` positions into a bit vector."""
    out = 0
    for k, idx in enumerate(support):
        if values[idx] & 1:
            out |= 1 << k
    return out


def parity(x: int) -> int:
    return x.bit_count() & 1


def make_combination(sched: CoefficientSchedule, t: int, values: Sequence[int] | Mapping[int, int]) -> int:
    """GF(2) inner product of the slot-``t`` coefficients with ``values`` on the support."""
    if not sched.support:
        return 0
    return parity(sched.coefficients(t) & pack_values(values, sched.support))


class EquationBank:
    """Incrementally solved linear system over GF(2).

    Rows live in a preallocated ``(n_unknowns, words)`` uint64 matrix kept in
    reduced row-echelon form, so reducing a new row is one XOR of the pivot
    rows selected by its bits in pivot columns.

    >>> bank = EquationBank([1, 2])
    >>> bank.add_equation([1, 2], 1)
    True
    >>> bank.determined_values()
    {}
    >>> bank.add_equation([2], 0)
    True
    >>> bank.determined_values()
    {1: 1, 2: 0}
    """

    def __init__(self, unknowns: Iterable[int]):
        self.unknowns: list[int] = list(unknowns)
        self._col = {idx: k for k, idx in enumerate(self.unknowns)}
        if len(self._col) != len(self.unknowns):
            raise ValueError("duplicate unknowns")
        u = len(self.unknowns)
        self._words = max(1, (u + 63) // 64)
        self._m = np.zeros((u, self._words), dtype=np.uint64)
        self._rhs = np.zeros(u, dtype=np.uint8)
        self._pivot = np.zeros(u, dtype=np.int64)  # pivot column of each stored row
        self._pword = np.zeros(u, dtype=np.intp)
        self._pshift = np.zeros(u, dtype=np.uint64)
        self._hi = 0  # words beyond this are zero in every stored row
        self._unit = np.zeros(u, dtype=bool)  # row is a unit vector -> value known
        self._r = 0
        self._n_det = 0
        self.n_rows = 0

    def __len__(self) -> int:
        return len(self.unknowns)

    @property
    def rank(self) -> int:
        return self._r

    @property
    def n_determined(self) -> int:
        return self._n_det

    def column(self, index: int) -> int:
        try:
            return self._col[index]
        except KeyError:
            raise UnknownIndex(index) from None

    def has_unknown(self, index: int) -> bool:
        return index in self._col

    def row_from_indices(self, indices: Iterable[int]) -> int:
        row = 0
        for idx in indices:
            row ^= 1 << self.column(idx)
        return row

    def add_equation(self, indices: Iterable[int], rhs: int) -> bool:
        """Add ``sum(x[i] for i in indices) = rhs``; True iff the rank grew."""
        return self.add_row(self.row_from_indices(indices), rhs)

    def add_row(self, row: int, rhs: int) -> bool:
        """Add a row already expressed in column bits (bit k = k-th unknown)."""
        if row < 0 or row >> len(self.unknowns):
            raise UnknownIndex("row has bits beyond the bank's unknowns")
        self.n_rows += 1
        if row:
            self._hi = max(self._hi, (row.bit_length() + 63) // 64)
        v = np.frombuffer(row.to_bytes(8 * self._words, "little"), dtype="<u8").copy()
        status = _insert(
            self._m, self._rhs, self._pword, self._pshift, self._unit,
            self._r, self._hi, v, rhs & 1,
        )
        if status == _INCONSISTENT:
            raise InconsistentSystem("contradictory equation")
        if status == _REDUNDANT:
            return False
        self._pivot[self._r] = int(self._pword[self._r]) * 64 + int(self._pshift[self._r])
        self._n_det += status
        self._r += 1
        return True

    def determined_columns(self) -> dict[int, int]:
        idx = np.flatnonzero(self._unit[: self._r])
        return {int(self._pivot[i]): int(self._rhs[i]) for i in idx}

    def determined_values(self) -> dict[int, int]:
        """Unknowns whose value is implied by the stored equations."""
        cols = self.determined_columns()
        return {self.unknowns[q]: cols[q] for q in sorted(cols)}

    def is_determined(self, index: int) -> bool:
        return self.column(index) in self.determined_columns()

    def is_fully_determined(self) -> bool:
        return self._r == len(self.unknowns)
