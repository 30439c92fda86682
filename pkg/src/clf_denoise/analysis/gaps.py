"""Time from each event to the most recent earlier event in its neighbourhood."""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from ..events import EventStream

QUANTILES = (0.5, 0.9, 0.99)


@nb.njit(cache=True)
def _gaps_kernel(t, x, y, width, height, d_th, out):
    last = np.full((height, width), -1, np.int64)
    for i in range(t.shape[0]):
        xi, yi, ti = x[i], y[i], t[i]
        best = -1
        for yy in range(max(yi - d_th, 0), min(yi + d_th, height - 1) + 1):
            for xx in range(max(xi - d_th, 0), min(xi + d_th, width - 1) + 1):
                if last[yy, xx] > best:
                    best = last[yy, xx]
        out[i] = ti - best if best >= 0 else -1
        last[yi, xi] = ti


@dataclass(frozen=True)
class GapHistogram:
    """Log-binned gaps; ``gaps`` holds -1 for events with no earlier neighbour."""

    gaps: np.ndarray
    edges: np.ndarray
    counts: np.ndarray
    n_inf: int
    n_under: int
    n_over: int
    quantiles: dict

    def to_rows(self) -> list[dict]:
        return [{"lo_us": float(lo), "hi_us": float(hi), "count": int(c)}
                for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts)]


def time_gap_stats(stream: EventStream, D_th: int = 1, bins: int = 64,
                   lo_us: float = 1.0, hi_us: float = 1e6) -> GapHistogram:
    """Gap histogram over ``bins`` logarithmic bins spanning ``[lo_us, hi_us)``.

    Gaps below ``lo_us`` (including simultaneous events) go to ``n_under``,
    gaps at or above ``hi_us`` to ``n_over``; quantiles use all finite gaps.
    """
    g = stream.geometry
    gaps = np.empty(len(stream), np.int64)
    _gaps_kernel(stream.t, stream.x.astype(np.int64), stream.y.astype(np.int64),
                 g.width, g.height, D_th, gaps)
    finite = gaps[gaps >= 0]
    edges = np.geomspace(lo_us, hi_us, bins + 1)
    counts, _ = np.histogram(finite[finite < hi_us], edges)
    q = ({f"p{round(p * 100)}": float(np.quantile(finite, p)) for p in QUANTILES} if finite.size
         else {f"p{round(p * 100)}": float("inf") for p in QUANTILES})
    return GapHistogram(gaps, edges, counts, int(len(gaps) - finite.size),
                        int(np.count_nonzero(finite < lo_us)), int(np.count_nonzero(finite >= hi_us)), q)
