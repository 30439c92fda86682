from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..events import Event, EventStream, GeometryMismatch, SensorGeometry


class EventOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class Decision:
    is_signal: bool
    count: int


@dataclass(frozen=True, eq=False)
class Decisions:
    """Per-event decisions of one run, column-wise."""

    is_signal: np.ndarray
    count: np.ndarray

    def __len__(self) -> int:
        return len(self.is_signal)

    def __getitem__(self, i: int) -> Decision:
        return Decision(bool(self.is_signal[i]), int(self.count[i]))

    def mismatches(self, other: "Decisions") -> int:
        """Number of events whose signal/noise verdict differs."""
        return int(np.count_nonzero(self.is_signal != other.is_signal))

    @classmethod
    def concat(cls, parts: list["Decisions"]) -> "Decisions":
        if not parts:
            return cls(np.zeros(0, np.bool_), np.zeros(0, np.int64))
        return cls(np.concatenate([p.is_signal for p in parts]),
                   np.concatenate([p.count for p in parts]))


class Denoiser(ABC):
    """Streaming spatiotemporal filter.

    ``process`` classifies one event, ``run`` a whole stream; both advance
    the same internal state, so ``run`` may be called repeatedly on
    consecutive chunks of one recording.
    """

    name = "denoiser"

    def __init__(self, geometry: SensorGeometry, n_cr: int = 1):
        self.geometry = geometry
        self.n_cr = n_cr
        self._last_t = -1

    @abstractmethod
    def _kernel(self, t, x, y, p, out_sig, out_cnt) -> None:
        """Classify the given arrays in order, writing into the outputs."""

    @abstractmethod
    def _reset_memory(self) -> None: ...

    def reset(self) -> None:
        self._reset_memory()
        self._last_t = -1

    def process(self, event: Event) -> Decision:
        if not self.geometry.contains(event.x, event.y):
            raise EventOutOfRange(f"({event.x}, {event.y}) outside {self.geometry}")
        if event.t < self._last_t:
            raise ValueError(f"timestamp {event.t} precedes previous {self._last_t}")
        d = self._run_arrays(np.array([event.t], np.int64), np.array([event.x], np.int32),
                             np.array([event.y], np.int32), np.array([int(event.polarity)], np.int8))
        return d[0]

    def run(self, stream: EventStream) -> Decisions:
        if stream.geometry != self.geometry:
            raise GeometryMismatch(f"stream {stream.geometry} vs filter {self.geometry}")
        if len(stream) and stream.t[0] < self._last_t:
            raise ValueError(f"stream starts at {stream.t[0]}, before previous {self._last_t}")
        return self._run_arrays(stream.t, stream.x, stream.y, stream.p)

    def _run_arrays(self, t, x, y, p) -> Decisions:
        n = len(t)
        sig = np.zeros(n, np.bool_)
        cnt = np.zeros(n, np.int64)
        if n:
            self._kernel(t, x, y, p, sig, cnt)
            self._last_t = int(t[-1])
        return Decisions(sig, cnt)
