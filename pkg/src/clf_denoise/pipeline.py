"""Cycle-level model of the CLF memory-access pipeline.

Two schedules are modeled:

* unpipelined: read all window blocks, decide, write; a fixed 4 cycles per
  event with no overlap between events.
* pipelined (N_CR = 1, D_th = 1): stage 1 reads the event's own row and
  column blocks; stage 2, one cycle later, writes the event back and reads
  the neighbour blocks (y +/- 1, x +/- 1). When stage 1 of a module already
  found a correlated event, that module's neighbour reads are cancelled.
  Stage 1 of event e+1 overlaps stage 2 of event e.

Every bank has two ports. Accesses of older events are placed first; an
access that finds both ports busy slips to the next cycle and counts as a
stall. A read issued in the same cycle as a write to the same block sees the
written data (write-first), which is what keeps the decisions identical to
the functional filter.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .events import EventStream
from .filters import (
    ClfConfig,
    ClfFilter,
    ConfigUnsupported,
    Decisions,
    LineMemory,
    bank_index,
    block_index,
    edu_count,
    quantize_ts,
)

PORTS_PER_BANK = 2
UNPIPELINED_LATENCY = 4
PIPELINED_LATENCY = 5
# cycles from the last stage-2 memory access to the registered decision
_DECIDE_AFTER_ACCESS = PIPELINED_LATENCY - 1


class AccessKind(str, Enum):
    READ = "Read"
    WRITE = "Write"
    CANCELLED = "CancelledRead"
    STALL = "Stall"


@dataclass(frozen=True)
class AccessEvent:
    cycle: int
    module: str  # "row" | "col"
    bank: int
    block: int
    kind: AccessKind
    event: int = -1


@dataclass
class PipelineStats:
    total_cycles: int = 0
    reads_issued: int = 0
    reads_cancelled: int = 0
    writes: int = 0
    stalls: int = 0
    potential_neighbor_reads: int = 0
    per_event_latency: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))

    @property
    def cancelled_fraction(self) -> float:
        if not self.potential_neighbor_reads:
            return 0.0
        return self.reads_cancelled / self.potential_neighbor_reads

    def to_dict(self) -> dict:
        lat = self.per_event_latency
        return {
            "total_cycles": self.total_cycles,
            "reads_issued": self.reads_issued,
            "reads_cancelled": self.reads_cancelled,
            "writes": self.writes,
            "stalls": self.stalls,
            "potential_neighbor_reads": self.potential_neighbor_reads,
            "cancelled_fraction": self.cancelled_fraction,
            "latency_min": int(lat.min()) if len(lat) else 0,
            "latency_max": int(lat.max()) if len(lat) else 0,
            "latency_mean": float(lat.mean()) if len(lat) else 0.0,
        }


class PipelineHazard(RuntimeError):
    """A read was scheduled before a write it depends on (model bug)."""


class _Ports:
    def __init__(self):
        self.used: dict[tuple[int, str, int], int] = {}

    def free(self, cycle: int, module: str, bank: int, extra: int = 0) -> bool:
        return self.used.get((cycle, module, bank), 0) + extra < PORTS_PER_BANK

    def take(self, cycle: int, module: str, bank: int) -> None:
        key = (cycle, module, bank)
        self.used[key] = self.used.get(key, 0) + 1

    def prune(self, before: int) -> None:
        for key in [k for k in self.used if k[0] < before]:
            del self.used[key]


class _Module:
    """One denoise module's memory plus per-block write-cycle bookkeeping."""

    def __init__(self, name: str, lines: int, s: int, n_banks: int):
        self.name = name
        self.mem = LineMemory(lines, s, n_banks)
        self.n_banks = n_banks
        self.last_write = np.full(lines, -1, np.int64)

    def addr(self, line: int) -> tuple[int, int]:
        return bank_index(line, self.n_banks), block_index(line, self.n_banks)

    def read(self, line: int, cycle: int, cross: int, tq: int, cfg: ClfConfig, pol: int) -> int:
        if self.last_write[line] > cycle:
            raise PipelineHazard(f"{self.name} line {line} read at {cycle} "
                                 f"before write at {self.last_write[line]}")
        return edu_count(self.mem.block(line), cross, tq, cfg.D_th, cfg.T_th_ticks, cfg.BW_T,
                         pol if cfg.same_polarity_only else None)


def _check_pipelinable(config: ClfConfig) -> None:
    if config.N_CR != 1:
        raise ConfigUnsupported(f"pipelined read cancellation requires N_CR = 1 (got {config.N_CR})")
    if config.D_th != 1:
        raise ConfigUnsupported(f"two-stage pipeline is defined for D_th = 1 (got {config.D_th})")


def run_pipelined(config: ClfConfig, stream: EventStream, trace: bool = True
                  ) -> tuple[Decisions, PipelineStats, list[AccessEvent]]:
    _check_pipelinable(config)
    geo = stream.geometry
    mods: list[tuple[_Module, bool]] = []
    if config.enable_rdm:
        mods.append((_Module("row", geo.height, config.s_RM, config.N_RM), True))
    if config.enable_cdm:
        mods.append((_Module("col", geo.width, config.s_CM, config.N_CM), False))

    n = len(stream)
    sig = np.zeros(n, np.bool_)
    cnt = np.zeros(n, np.int64)
    lat = np.zeros(n, np.int64)
    st = PipelineStats()
    log: list[AccessEvent] = []
    ports = _Ports()

    def rec(cycle, mod, line, kind, i):
        if trace:
            bank, block = mod.addr(line)
            log.append(AccessEvent(cycle, mod.name, bank, block, kind, i))

    prev_s1 = -1
    prev_s2_end = -1
    prev_write = -1
    last_decision = 0
    ts, xs, ys, ps = stream.t.tolist(), stream.x.tolist(), stream.y.tolist(), stream.p.tolist()
    for i in range(n):
        x, y, pol = xs[i], ys[i], ps[i]
        tq = quantize_ts(ts[i], config.quant_unit, config.BW_T)
        arrival = prev_s1 + 1
        ports.prune(arrival)

        # one entry per module: own line, own coordinate, cross coordinate, line count
        spots = [(m, y if is_row else x, x if is_row else y, geo.height if is_row else geo.width)
                 for m, is_row in mods]

        # stage 1: own-block reads, all modules in the same cycle
        s1 = max(arrival, prev_write)
        while True:
            busy = [(m, line) for m, line, _, _ in spots if not ports.free(s1, m.name, m.addr(line)[0])]
            if not busy:
                break
            for m, line in busy:
                rec(s1, m, line, AccessKind.STALL, i)
            s1 += 1
        st.stalls += s1 - arrival
        own = []
        for m, line, cross, _ in spots:
            ports.take(s1, m.name, m.addr(line)[0])
            rec(s1, m, line, AccessKind.READ, i)
            st.reads_issued += 1
            own.append(m.read(line, s1, cross, tq, config, pol))

        # stage 2: write-back first, then neighbour reads unless cancelled
        s2 = max(s1 + 1, prev_s2_end + 1)
        st.stalls += s2 - (s1 + 1)
        end = s2
        write_cycle = s2
        for m, line, _, _ in spots:
            c = _place(ports, m, line, s2, lambda cyc, mm=m, ll=line: rec(cyc, mm, ll, AccessKind.STALL, i))
            rec(c, m, line, AccessKind.WRITE, i)
            st.writes += 1
            write_cycle = max(write_cycle, c)
        total = sum(own)
        for (m, line, cross, n_lines), hit in zip(spots, own):
            nbrs = [ln for ln in (line - 1, line + 1) if 0 <= ln < n_lines]
            st.potential_neighbor_reads += 2
            if hit:
                # cancellation is per module and all-or-nothing
                for ln in nbrs:
                    rec(s2, m, ln, AccessKind.CANCELLED, i)
                st.reads_cancelled += len(nbrs)
                continue
            for ln in nbrs:
                c = _place(ports, m, ln, s2, lambda cyc, mm=m, ll=ln: rec(cyc, mm, ll, AccessKind.STALL, i))
                rec(c, m, ln, AccessKind.READ, i)
                st.reads_issued += 1
                total += m.read(ln, c, cross, tq, config, pol)
                end = max(end, c)
        end = max(end, write_cycle)
        # neighbour lines differ from the own line, so the write-back can be
        # applied after the reads without changing what they saw
        for m, line, cross, _ in spots:
            m.mem.block(line).write(cross, tq, pol)
            m.last_write[line] = write_cycle
        st.stalls += end - s2

        decision = end + _DECIDE_AFTER_ACCESS
        sig[i] = total >= 1
        cnt[i] = total
        lat[i] = decision - arrival
        last_decision = decision
        prev_s1, prev_s2_end, prev_write = s1, end, write_cycle

    st.total_cycles = last_decision
    st.per_event_latency = lat
    return Decisions(sig, cnt), st, log


def _place(ports: _Ports, m: _Module, line: int, earliest: int, on_stall) -> int:
    bank = m.addr(line)[0]
    c = earliest
    while not ports.free(c, m.name, bank):
        on_stall(c)
        c += 1
    ports.take(c, m.name, bank)
    return c


def run_unpipelined(config: ClfConfig, stream: EventStream) -> tuple[Decisions, PipelineStats]:
    """Sequential schedule; decisions come from the functional filter."""
    geo = stream.geometry
    decisions = ClfFilter(config, geo).run(stream)
    n = len(stream)
    st = PipelineStats(total_cycles=UNPIPELINED_LATENCY * n,
                       per_event_latency=np.full(n, UNPIPELINED_LATENCY, np.int64))
    d = config.D_th
    for enabled, own, lines in ((config.enable_rdm, stream.y, geo.height),
                                (config.enable_cdm, stream.x, geo.width)):
        if not enabled:
            continue
        own = own.astype(np.int64)
        span = np.minimum(own + d, lines - 1) - np.maximum(own - d, 0) + 1
        st.reads_issued += int(span.sum())
        st.writes += n
        st.potential_neighbor_reads += 2 * d * n
    return decisions, st


def check_dual_port(log: list[AccessEvent]) -> list[tuple[int, str, int]]:
    """(cycle, module, bank) slots with more than two live accesses; empty when safe."""
    used: dict[tuple[int, str, int], int] = {}
    for a in log:
        if a.kind in (AccessKind.READ, AccessKind.WRITE):
            key = (a.cycle, a.module, a.bank)
            used[key] = used.get(key, 0) + 1
    return sorted(k for k, v in used.items() if v > PORTS_PER_BANK)


def format_trace_csv(log: list[AccessEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cycle", "module", "bank", "block", "kind"])
    for a in log:
        w.writerow([a.cycle, a.module, a.bank, a.block, a.kind.value])
    return buf.getvalue()


def write_trace_csv(log: list[AccessEvent], path: str | Path) -> None:
    Path(path).write_text(format_trace_csv(log))


@dataclass(frozen=True)
class EnergyWeights:
    read: float = 1.0
    write: float = 1.0
    cancelled: float = 0.0

    def __post_init__(self):
        if min(self.read, self.write, self.cancelled) < 0:
            raise ValueError("energy weights must be non-negative")


@dataclass(frozen=True)
class ActivityReport:
    energy: float
    savings: float
    cancelled_fraction: float

    def to_dict(self) -> dict:
        return {"energy": self.energy, "savings": self.savings,
                "cancelled_fraction": self.cancelled_fraction}


def activity_report(stats: PipelineStats, weights: EnergyWeights = EnergyWeights()) -> ActivityReport:
    """Weighted access count as a dynamic-power proxy.

    ``savings`` is what the cancelled reads would have cost had they been issued.
    """
    energy = (weights.read * stats.reads_issued + weights.write * stats.writes
              + weights.cancelled * stats.reads_cancelled)
    return ActivityReport(energy, weights.read * stats.reads_cancelled, stats.cancelled_fraction)
