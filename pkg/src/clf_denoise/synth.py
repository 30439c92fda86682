"""Labeled synthetic event streams: moving-object signal plus Poisson noise.

Signal is deterministic: each object boundary emits an event whenever it
crosses a pixel boundary (ON where the object enters a pixel, OFF where it
leaves). Noise is a homogeneous Poisson process per pixel.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``; the
algorithm name is stored in ``stream.meta["rng"]``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .events import EventStream, Label, Polarity, SensorGeometry, merge_streams

RNG_ALGORITHM = "PCG64"


class SceneOutOfBounds(ValueError):
    pass


class EmptySignal(ValueError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Box:
    w: int
    h: int


@dataclass(frozen=True)
class Edge:
    """A straight edge spanning the whole sensor across the motion direction."""


@dataclass(frozen=True)
class Pendulum:
    """A ``w x h`` bob swinging sinusoidally; ``period`` in microseconds."""

    amplitude: float
    period: float
    w: int = 3
    h: int = 3


@dataclass(frozen=True)
class NoiseModel:
    rate_hz: float
    seed: int = 0

    def __post_init__(self):
        if self.rate_hz < 0:
            raise ValueError(f"rate_hz must be >= 0 (got {self.rate_hz})")


@dataclass(frozen=True)
class MotionScene:
    """One moving object.

    ``origin`` is the object's top-left corner at t=0 (for a pendulum, the
    left end of its swing); ``direction`` is ``"x"`` (rightwards) or ``"y"``
    (downwards). ``velocity`` is ignored by pendulums.
    """

    shape: Box | Edge | Pendulum
    velocity: float = 1000.0
    duration: int = 100_000
    events_per_crossing: int = 1
    origin: tuple[int, int] = (0, 0)
    direction: str = "x"
    start: int = 0
    jitter_us: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "MotionScene":
        d = dict(d)
        kind = d.pop("shape", "box")
        if isinstance(kind, dict):
            d.update(kind)
            kind = d.pop("kind")
        kind = str(kind).lower()
        if kind == "box":
            shape = Box(int(d.pop("w")), int(d.pop("h")))
        elif kind == "edge":
            shape = Edge()
        elif kind == "pendulum":
            shape = Pendulum(float(d.pop("amplitude")), float(d.pop("period")),
                             int(d.pop("w", 3)), int(d.pop("h", 3)))
        else:
            raise ValueError(f"unknown scene shape {kind!r}")
        if "origin" in d:
            d["origin"] = tuple(int(v) for v in d["origin"])
        return cls(shape=shape, **d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shape"] = {"kind": type(self.shape).__name__.lower(), **asdict(self.shape)}
        d["origin"] = list(self.origin)
        return d


# ---------------------------------------------------------------------------
# signal

def _linear_crossings(p0: float, v: float, duration: int, start: int):
    """(time_us, boundary integer) pairs for a boundary moving from ``p0`` at ``v`` px/s."""
    if v <= 0 or duration <= 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    p1 = p0 + v * duration * 1e-6
    c = np.arange(math.ceil(p0), math.ceil(p1), dtype=np.int64)
    t = np.rint((c - p0) / v * 1e6).astype(np.int64) + start
    keep = t < start + duration
    return t[keep], c[keep]


def _scene_events(geometry: SensorGeometry, sc: MotionScene):
    """Raw (t, along, across, polarity) arrays in motion-aligned coordinates."""
    along_n, across_n = ((geometry.width, geometry.height) if sc.direction == "x"
                         else (geometry.height, geometry.width))
    a0, b0 = sc.origin if sc.direction == "x" else sc.origin[::-1]
    shp = sc.shape
    parts = []  # (t, along pixel, polarity, across range)
    if isinstance(shp, Pendulum):
        ext, span = (shp.w, shp.h) if sc.direction == "x" else (shp.h, shp.w)
        if a0 < 0 or a0 + 2 * shp.amplitude + ext > along_n or b0 < 0 or b0 + span > across_n:
            raise SceneOutOfBounds(f"pendulum swing leaves {geometry}")
        tt = np.arange(sc.duration, dtype=np.int64)
        left = a0 + shp.amplitude * (1 - np.cos(2 * np.pi * tt / shp.period))
        for pos, lead in ((left, False), (left + ext, True)):
            cell = np.floor(pos).astype(np.int64)
            step = np.nonzero(np.diff(cell))[0] + 1
            for k in step:
                lo, hi = cell[k - 1], cell[k]
                if hi > lo:  # moving forward: boundary passed integers lo+1..hi
                    for c in range(lo + 1, hi + 1):
                        parts.append((tt[k], c if lead else c - 1,
                                      Polarity.ON if lead else Polarity.OFF, (b0, b0 + span)))
                else:
                    for c in range(hi + 1, lo + 1):
                        parts.append((tt[k], c if lead else c - 1,
                                      Polarity.OFF if lead else Polarity.ON, (b0, b0 + span)))
    else:
        if isinstance(shp, Box):
            ext, span = (shp.w, shp.h) if sc.direction == "x" else (shp.h, shp.w)
            across = (b0, b0 + span)
        else:
            ext, across = 0, (0, across_n)
        travel = sc.velocity * sc.duration * 1e-6
        if (sc.velocity < 0 or a0 < 0 or a0 + ext + travel > along_n
                or across[0] < 0 or across[1] > across_n):
            raise SceneOutOfBounds(f"object leaves {geometry} within {sc.duration} us")
        t, c = _linear_crossings(a0 + ext, sc.velocity, sc.duration, 0)
        parts += [(ti, ci, Polarity.ON, across) for ti, ci in zip(t.tolist(), c.tolist())]
        if isinstance(shp, Box):
            t, c = _linear_crossings(a0, sc.velocity, sc.duration, 0)
            parts += [(ti, ci - 1, Polarity.OFF, across) for ti, ci in zip(t.tolist(), c.tolist())]

    ts, al, ac, pol = [], [], [], []
    for t, a, p, (lo, hi) in parts:
        if not 0 <= a < along_n:
            continue
        for b in range(lo, hi):
            for j in range(sc.events_per_crossing):
                ts.append(int(t) + j)
                al.append(a)
                ac.append(b)
                pol.append(int(p))
    return (np.array(ts, np.int64) + sc.start, np.array(al, np.int64), np.array(ac, np.int64),
            np.array(pol, np.int64))


def gen_signal(geometry: SensorGeometry, scene: MotionScene | list[MotionScene], seed: int = 0) -> EventStream:
    """Events of one or more moving objects, all labeled Signal.

    ``seed`` only matters when a scene sets ``jitter_us`` (uniform timing jitter).
    """
    scenes = scene if isinstance(scene, list) else [scene]
    rng = make_rng(seed)
    cols = {"t": [], "x": [], "y": [], "p": []}
    for sc in scenes:
        t, along, across, pol = _scene_events(geometry, sc)
        if sc.jitter_us:
            t = t + rng.integers(0, sc.jitter_us + 1, len(t))
        x, y = (along, across) if sc.direction == "x" else (across, along)
        for k, v in zip("txyp", (t, x, y, pol)):
            cols[k].append(v)
    t, x, y, p = (np.concatenate(cols[k]) if cols[k] else np.zeros(0, np.int64) for k in "txyp")
    order = np.lexsort((y, x, t))
    return EventStream(geometry, t[order], x[order], y[order], p[order],
                       np.full(len(t), int(Label.SIGNAL)),
                       {"rng": RNG_ALGORITHM, "signal_seed": seed,
                        "scenes": [s.to_dict() for s in scenes]})


# ---------------------------------------------------------------------------
# noise

def _pack_noise(geometry: SensorGeometry, t: np.ndarray, pix: np.ndarray, rng, meta: dict) -> EventStream:
    order = np.lexsort((pix, t))
    t, pix = t[order], pix[order]
    pol = rng.integers(0, 2, len(t))
    return EventStream(geometry, t, pix % geometry.width, pix // geometry.width, pol,
                       np.full(len(t), int(Label.NOISE)), {"rng": RNG_ALGORITHM, **meta})


def gen_noise(geometry: SensorGeometry, model: NoiseModel, duration: int, start: int = 0) -> EventStream:
    """Per-pixel Poisson events on ``[start, start + duration)`` microseconds.

    Inter-arrival times are exponential with rate ``model.rate_hz``; ties are
    ordered by pixel id (``y * width + x``).
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    rng = make_rng(model.seed)
    meta = {"noise_seed": model.seed, "noise_rate_hz": model.rate_hz}
    n_px = geometry.width * geometry.height
    if model.rate_hz == 0 or duration == 0:
        return _pack_noise(geometry, np.zeros(0, np.int64), np.zeros(0, np.int64), rng, meta)
    scale_us = 1e6 / model.rate_hz
    mean = duration / scale_us
    batch = max(4, int(math.ceil(mean + 4 * math.sqrt(mean) + 4)))
    clock = np.zeros(n_px)
    active = np.arange(n_px)
    times, pixels = [], []
    while active.size:
        arr = clock[active, None] + np.cumsum(rng.exponential(scale_us, (active.size, batch)), axis=1)
        inside = arr < duration
        times.append(arr[inside])
        pixels.append(np.broadcast_to(active[:, None], arr.shape)[inside])
        clock[active] = arr[:, -1]
        active = active[arr[:, -1] < duration]
    t = np.floor(np.concatenate(times)).astype(np.int64) + start
    return _pack_noise(geometry, t, np.concatenate(pixels).astype(np.int64), rng, meta)


def mix_to_ratio(signal: EventStream, model: NoiseModel, target_ratio: float) -> EventStream:
    """Add Poisson noise so that #noise / #signal equals ``target_ratio``.

    The rate is calibrated to the target count over the signal's time span,
    and the process is sampled conditioned on that count (given its count,
    a homogeneous Poisson process is i.i.d. uniform over pixels and time), so
    the achieved ratio is exact up to rounding. ``model.rate_hz`` is ignored;
    the calibrated rate is reported in ``meta["noise_rate_hz"]``.
    """
    if len(signal) == 0:
        raise EmptySignal("cannot calibrate noise against an empty signal stream")
    if target_ratio < 0:
        raise ValueError("target_ratio must be >= 0")
    signal = signal.with_labels(Label.SIGNAL)
    geo = signal.geometry
    t0, t1 = int(signal.t[0]), int(signal.t[-1]) + 1
    n = int(round(target_ratio * len(signal)))
    n_px = geo.width * geo.height
    rng = make_rng(model.seed)
    rate = n / (n_px * (t1 - t0) * 1e-6)
    t = t0 + np.floor(rng.uniform(0, t1 - t0, n)).astype(np.int64)
    pix = rng.integers(0, n_px, n)
    noise = _pack_noise(geo, t, pix, rng, {"noise_seed": model.seed, "noise_rate_hz": rate})
    mixed = merge_streams(signal, noise)
    mixed.meta.update(noise_ratio=n / len(signal), target_ratio=target_ratio)
    return mixed


# ---------------------------------------------------------------------------
# reference scene used by the sweeps and acceptance checks

STANDARD_GEOMETRY = SensorGeometry(128, 96)


def standard_scenes(duration: int = 200_000, jitter_us: int = 1000) -> list[MotionScene]:
    """Several objects moving in different directions at once.

    Without timing jitter every edge fires a whole column in the same
    microsecond, which makes any filter look good regardless of memory
    capacity; 1 ms of jitter is in line with real sensor readout spread.
    """
    j = jitter_us
    return [
        MotionScene(Box(10, 12), velocity=400.0, duration=duration, origin=(4, 8), jitter_us=j),
        MotionScene(Box(8, 6), velocity=300.0, duration=duration, origin=(30, 20), direction="y",
                    jitter_us=j),
        MotionScene(Box(14, 8), velocity=250.0, duration=duration, origin=(60, 70), jitter_us=j),
        MotionScene(Pendulum(amplitude=20.0, period=150_000.0, w=4, h=10), duration=duration,
                    origin=(70, 10), jitter_us=j),
    ]


def standard_mix(ratio: float = 1.3, seed: int = 0, duration: int = 200_000) -> EventStream:
    signal = gen_signal(STANDARD_GEOMETRY, standard_scenes(duration), seed)
    return mix_to_ratio(signal, NoiseModel(0.0, seed), ratio)
