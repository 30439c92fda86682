"""Event types, labeled streams and CSV interchange.

A stream is stored column-wise (numpy arrays for t, x, y, polarity, label)
so that filters can hand it straight to compiled kernels. Single events are
exposed as :class:`Event` records when iterating.
"""
from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

MAX_SIDE = 2048
_T_MAX = 2**63 - 1


class Polarity(IntEnum):
    OFF = 0
    ON = 1


class Label(IntEnum):
    UNKNOWN = -1
    NOISE = 0
    SIGNAL = 1


class EventError(ValueError):
    """Base class for stream construction and parse errors."""


class _LineError(EventError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class MalformedRecord(_LineError):
    pass


class CoordinateOutOfRange(_LineError):
    pass


class NonMonotonicTimestamp(_LineError):
    pass


class GeometryMismatch(EventError):
    pass


@dataclass(frozen=True)
class SensorGeometry:
    width: int
    height: int

    def __post_init__(self):
        for name in ("width", "height"):
            v = getattr(self, name)
            if not 1 <= v <= MAX_SIDE:
                raise ValueError(f"{name} must be in [1, {MAX_SIDE}], got {v}")

    @classmethod
    def parse(cls, text: str) -> "SensorGeometry":
        """Parse ``"WxH"`` (e.g. ``"346x260"``)."""
        m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
        if not m:
            raise ValueError(f"geometry must look like WxH, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.width}x{self.height}"

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


@dataclass(frozen=True)
class Event:
    t: int
    x: int
    y: int
    polarity: Polarity = Polarity.ON
    label: Label = Label.UNKNOWN


def _frozen(a, dtype) -> np.ndarray:
    if isinstance(a, np.ndarray) and a.dtype == dtype and not a.flags.writeable:
        return a
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class EventStream:
    """Immutable, time-ordered sequence of events on one sensor."""

    geometry: SensorGeometry
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    label: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.t)
        cols = {"t": np.int64, "x": np.int32, "y": np.int32, "p": np.int8, "label": np.int8}
        for name, dtype in cols.items():
            arr = _frozen(getattr(self, name), dtype)
            if arr.ndim != 1 or len(arr) != n:
                raise EventError(f"column {name!r} has shape {arr.shape}, expected ({n},)")
            object.__setattr__(self, name, arr)
        if n:
            if self.t.min() < 0:
                raise EventError("timestamps must be non-negative")
            if np.any(np.diff(self.t) < 0):
                raise EventError("timestamps must be non-decreasing")
            g = self.geometry
            if (self.x.min() < 0 or self.x.max() >= g.width
                    or self.y.min() < 0 or self.y.max() >= g.height):
                raise EventError(f"coordinates outside {g}")

    @classmethod
    def empty(cls, geometry: SensorGeometry, **meta) -> "EventStream":
        z = np.zeros(0)
        return cls(geometry, z, z, z, z, z, dict(meta))

    @classmethod
    def from_events(cls, geometry: SensorGeometry, events: Iterable[Event], **meta) -> "EventStream":
        rows = [(e.t, e.x, e.y, int(e.polarity), int(e.label)) for e in events]
        if not rows:
            return cls.empty(geometry, **meta)
        a = np.array(rows, dtype=np.int64)
        return cls(geometry, a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4], dict(meta))

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.t[i]), int(self.x[i]), int(self.y[i]),
                     Polarity(int(self.p[i])), Label(int(self.label[i])))

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (self.geometry == other.geometry
                and all(np.array_equal(getattr(self, c), getattr(other, c))
                        for c in ("t", "x", "y", "p", "label")))

    __hash__ = None

    @property
    def is_labeled(self) -> bool:
        return bool(len(self)) and not np.any(self.label == Label.UNKNOWN)

    def take(self, idx) -> "EventStream":
        """Sub-stream selected by a sorted index array or boolean mask."""
        return EventStream(self.geometry, self.t[idx], self.x[idx], self.y[idx],
                           self.p[idx], self.label[idx], dict(self.meta))

    def with_labels(self, label: Label) -> "EventStream":
        return EventStream(self.geometry, self.t, self.x, self.y, self.p,
                           np.full(len(self), int(label)), dict(self.meta))

    def count(self, label: Label) -> int:
        return int(np.count_nonzero(self.label == int(label)))


# ---------------------------------------------------------------------------
# CSV interchange: ``t_us,x,y,p[,label]``; '#' lines are comments.

_GEOM_RE = re.compile(r"#\s*geometry\s*[:=]?\s*(\d+\s*[xX]\s*\d+)")


def _lines(source) -> Iterable[str]:
    if isinstance(source, Path):
        return source.read_text().splitlines()
    if isinstance(source, str):
        return source.splitlines()
    return source


def sniff_geometry(source) -> SensorGeometry | None:
    """Return the geometry declared in a ``# geometry: WxH`` comment, if any."""
    for line in _lines(source):
        if not line.startswith("#"):
            if line.strip():
                return None
            continue
        m = _GEOM_RE.match(line)
        if m:
            return SensorGeometry.parse(m.group(1))
    return None


def parse_csv(source: str | Path | IO[str] | Iterable[str], geometry: SensorGeometry) -> EventStream:
    """Parse CSV records into a stream.

    ``source`` is CSV text, a :class:`~pathlib.Path`, or any iterable of lines.
    Timestamps must already be non-decreasing; nothing is re-sorted.
    """
    ts, xs, ys, ps, ls = [], [], [], [], []
    last_t = -1
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) not in (4, 5):
            raise MalformedRecord(lineno, f"expected 4 or 5 fields, got {len(parts)}")
        try:
            vals = [int(v) for v in parts]
        except ValueError:
            raise MalformedRecord(lineno, f"non-integer field in {line!r}") from None
        t, x, y, p = vals[:4]
        lab = vals[4] if len(vals) == 5 else int(Label.UNKNOWN)
        if not 0 <= t <= _T_MAX:
            raise MalformedRecord(lineno, f"timestamp {t} outside [0, 2^63)")
        if p not in (0, 1):
            raise MalformedRecord(lineno, f"polarity must be 0 or 1, got {p}")
        if len(vals) == 5 and lab not in (0, 1):
            raise MalformedRecord(lineno, f"label must be 0 or 1, got {lab}")
        if not geometry.contains(x, y):
            raise CoordinateOutOfRange(lineno, f"({x}, {y}) outside {geometry}")
        if t < last_t:
            raise NonMonotonicTimestamp(lineno, f"{t} < previous {last_t}")
        last_t = t
        ts.append(t)
        xs.append(x)
        ys.append(y)
        ps.append(p)
        ls.append(lab)
    return EventStream(geometry, np.array(ts, dtype=np.int64), np.array(xs), np.array(ys),
                       np.array(ps), np.array(ls))


def read_csv(path: str | Path, geometry: SensorGeometry | None = None) -> EventStream:
    """Read a CSV file; geometry falls back to the file's ``# geometry`` header."""
    path = Path(path)
    text = path.read_text()
    if geometry is None:
        geometry = sniff_geometry(text)
    if geometry is None:
        raise EventError(f"{path}: no geometry given and no '# geometry: WxH' header")
    return parse_csv(text, geometry)


def format_csv(stream: EventStream, extra: dict[str, np.ndarray] | None = None) -> str:
    """Render ``stream`` as CSV text.

    Labels are written per record when known. ``extra`` appends further
    integer columns (e.g. ``decision``) after the label column; when given,
    the label column is always present so that columns stay aligned.
    """
    extra = extra or {}
    buf = io.StringIO()
    buf.write(f"# geometry: {stream.geometry}\n")
    names = ["t_us", "x", "y", "p", "label", *extra]
    buf.write("# " + ",".join(names) + "\n")
    cols = [stream.t, stream.x, stream.y, stream.p]
    if extra:
        cols = [*cols, stream.label, *(np.asarray(v) for v in extra.values())]
        for row in zip(*(c.tolist() for c in cols)):
            buf.write(",".join(map(str, row)) + "\n")
        return buf.getvalue()
    for t, x, y, p, lab in zip(*(c.tolist() for c in (*cols, stream.label))):
        if lab == Label.UNKNOWN:
            buf.write(f"{t},{x},{y},{p}\n")
        else:
            buf.write(f"{t},{x},{y},{p},{lab}\n")
    return buf.getvalue()


def write_csv(stream: EventStream, sink: str | Path | IO[str]) -> None:
    text = format_csv(stream)
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text)
    else:
        sink.write(text)


def merge_streams(signal: EventStream, noise: EventStream) -> EventStream:
    """Time-ordered merge; ``signal`` events become Signal, ``noise`` events Noise.

    At equal timestamps signal events precede noise events, and each input
    keeps its own relative order.
    """
    if signal.geometry != noise.geometry:
        raise GeometryMismatch(f"{signal.geometry} != {noise.geometry}")
    t = np.concatenate([signal.t, noise.t])
    src = np.concatenate([np.zeros(len(signal), np.int8), np.ones(len(noise), np.int8)])
    # lexsort is stable: primary key t, then source; ties keep input order
    order = np.lexsort((src, t))
    cat = lambda a, b: np.concatenate([a, b])[order]  # noqa: E731
    label = np.where(src == 0, int(Label.SIGNAL), int(Label.NOISE))[order]
    meta = {**noise.meta, **signal.meta}
    return EventStream(signal.geometry, t[order], cat(signal.x, noise.x), cat(signal.y, noise.y),
                       cat(signal.p, noise.p), label, meta)
