"""Set-associative row/column memories of the cache-like filter.

Storage is kept flat, one block per sensor row (row memory) or column
(column memory), so compiled kernels can index it directly. The bank view
(:class:`MemoryBank`) groups those blocks the way the hardware does: block
``i`` of bank ``b`` is line ``i * N + b``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ClfConfig, ceil_log2


def bank_index(y: int, n_banks: int) -> int:
    return y % n_banks


def block_index(y: int, n_banks: int) -> int:
    return y // n_banks


def quantize_ts(t: int, quant_unit: int, bw_t: int) -> int:
    return (t // quant_unit) % (1 << bw_t)


def wrapped_diff(tq_now: int, tq_stored: int, bw_t: int) -> int:
    return (tq_now - tq_stored) % (1 << bw_t)


class LineMemory:
    """One module's storage (row memory or column memory).

    ``coord``, ``tq``, ``pol`` and ``valid`` have shape ``(lines, s)``; ``wpt``
    is the per-block FIFO pointer and ``full`` marks blocks that have taken
    at least ``s`` writes (before that, slots ``[wpt, s)`` are invalid).
    """

    def __init__(self, lines: int, s: int, n_banks: int):
        self.lines = lines
        self.s = s
        self.n_banks = n_banks
        self.coord = np.zeros((lines, s), dtype=np.int32)
        self.tq = np.zeros((lines, s), dtype=np.int64)
        self.pol = np.zeros((lines, s), dtype=np.int8)
        self.valid = np.zeros((lines, s), dtype=np.bool_)
        self.wpt = np.zeros(lines, dtype=np.int32)
        self.full = np.zeros(lines, dtype=np.bool_)

    def reset(self) -> None:
        for a in (self.coord, self.tq, self.pol, self.valid, self.wpt, self.full):
            a.fill(0)

    def block(self, line: int) -> "MemoryBlock":
        return MemoryBlock(self, line)

    @property
    def banks(self) -> list["MemoryBank"]:
        return [MemoryBank(self, b) for b in range(self.n_banks)]


@dataclass(frozen=True)
class StoredEvent:
    coord: int
    tq: int
    valid: bool
    polarity: int = 0


class MemoryBlock:
    """View of one block: ``s`` slots plus its write pointer."""

    def __init__(self, mem: LineMemory, line: int):
        self._mem = mem
        self.line = line

    @classmethod
    def detached(cls, s: int) -> "MemoryBlock":
        return cls(LineMemory(1, s, 1), 0)

    @property
    def s(self) -> int:
        return self._mem.s

    @property
    def wpt(self) -> int:
        return int(self._mem.wpt[self.line])

    @property
    def slots(self) -> list[StoredEvent]:
        m, i = self._mem, self.line
        return [StoredEvent(int(m.coord[i, k]), int(m.tq[i, k]), bool(m.valid[i, k]), int(m.pol[i, k]))
                for k in range(m.s)]

    def write(self, coord: int, tq: int, polarity: int = 0) -> int:
        """FIFO write at ``wpt``; returns the slot used."""
        m, i = self._mem, self.line
        k = int(m.wpt[i])
        m.coord[i, k] = coord
        m.tq[i, k] = tq
        m.pol[i, k] = polarity
        m.valid[i, k] = True
        if k + 1 == m.s:
            m.full[i] = True
        m.wpt[i] = (k + 1) % m.s
        return k


class MemoryBank:
    """Blocks holding lines ``b, b + N, b + 2N, ...``."""

    def __init__(self, mem: LineMemory, bank: int):
        self._mem = mem
        self.bank = bank

    @property
    def lines(self) -> range:
        return range(self.bank, self._mem.lines, self._mem.n_banks)

    @property
    def blocks(self) -> list[MemoryBlock]:
        return [MemoryBlock(self._mem, line) for line in self.lines]

    def __len__(self) -> int:
        return len(self.lines)


def edu_count(block: MemoryBlock, coord_now: int, tq_now: int, d_th: int, t_th_ticks: int,
              bw_t: int, polarity: int | None = None) -> int:
    """Correlated slots in one block (reference event decision unit).

    ``polarity`` restricts matches to that polarity when given.
    """
    m, i = block._mem, block.line
    mod = 1 << bw_t
    n = 0
    for coord, tq, valid, pol in zip(m.coord[i].tolist(), m.tq[i].tolist(),
                                     m.valid[i].tolist(), m.pol[i].tolist()):
        if not valid or abs(coord_now - coord) > d_th:
            continue
        if (tq_now - tq) % mod > t_th_ticks:
            continue
        if polarity is not None and pol != polarity:
            continue
        n += 1
    return n


def memory_footprint_bits(config: ClfConfig, geometry) -> int:
    """Storage bits: slots of (coordinate, timestamp, valid) plus FIFO pointers.

    A polarity bit per slot is added when ``same_polarity_only`` is set.
    """
    bw_x = ceil_log2(geometry.width)
    bw_y = ceil_log2(geometry.height)
    pbit = 1 if config.same_polarity_only else 0
    bits = 0
    if config.enable_rdm:
        rows = geometry.height
        bits += rows * config.s_RM * (bw_x + config.BW_T + 1 + pbit) + rows * ceil_log2(config.s_RM)
    if config.enable_cdm:
        cols = geometry.width
        bits += cols * config.s_CM * (bw_y + config.BW_T + 1 + pbit) + cols * ceil_log2(config.s_CM)
    return bits
