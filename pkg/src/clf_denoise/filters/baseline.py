"""O(mn) per-pixel timestamp filters: BAF, STCF and subsampled SSM."""
from __future__ import annotations

import numba as nb
import numpy as np

from ..events import SensorGeometry
from .base import Denoiser
from .config import ConfigError, FilterParams

_INVALID = -1


@nb.njit(cache=True)
def _baf_kernel(t, x, y, out_sig, out_cnt, ts_map, shift, d_th, t_th):
    gh, gw = ts_map.shape
    for i in range(t.shape[0]):
        ti = t[i]
        gx = np.int64(x[i]) >> shift
        gy = np.int64(y[i]) >> shift
        s = ts_map[gy, gx]
        hit = s != _INVALID and ti - s <= t_th
        out_cnt[i] = 1 if hit else 0
        out_sig[i] = hit
        for yy in range(max(gy - d_th, 0), min(gy + d_th, gh - 1) + 1):
            for xx in range(max(gx - d_th, 0), min(gx + d_th, gw - 1) + 1):
                ts_map[yy, xx] = ti


@nb.njit(cache=True)
def _stcf_kernel(t, x, y, out_sig, out_cnt, ts_map, d_th, t_th, n_cr):
    h, w = ts_map.shape
    for i in range(t.shape[0]):
        ti = t[i]
        xi = np.int64(x[i])
        yi = np.int64(y[i])
        cnt = 0
        for yy in range(max(yi - d_th, 0), min(yi + d_th, h - 1) + 1):
            for xx in range(max(xi - d_th, 0), min(xi + d_th, w - 1) + 1):
                s = ts_map[yy, xx]
                if s != _INVALID and ti - s <= t_th:
                    cnt += 1
        out_cnt[i] = cnt
        out_sig[i] = cnt >= n_cr
        ts_map[yi, xi] = ti


class SsmFilter(Denoiser):
    """Background-activity filter on an ``r x r`` subsampled timestamp map.

    An event is signal iff its own cell holds a timestamp no older than
    ``T_th``; the event's timestamp is then written to every in-range cell of
    its ``(2*D_th+1)^2`` cell neighborhood. Count is 0 or 1, so ``N_CR`` must
    be 1.
    """

    name = "ssm"

    def __init__(self, params: FilterParams, geometry: SensorGeometry, r: int = 1):
        if r < 1 or r & (r - 1):
            raise ConfigError(f"subsample factor r must be a power of two (got {r})")
        if params.N_CR != 1:
            raise ConfigError(f"{self.name} requires N_CR = 1 (got {params.N_CR})")
        super().__init__(geometry, 1)
        self.params = params
        self.r = r
        self._shift = r.bit_length() - 1
        self.ts_map = np.full((-(-geometry.height // r), -(-geometry.width // r)), _INVALID, np.int64)

    @property
    def cell_count(self) -> int:
        return self.ts_map.size

    def _reset_memory(self) -> None:
        self.ts_map.fill(_INVALID)

    def _kernel(self, t, x, y, p, out_sig, out_cnt) -> None:
        _baf_kernel(t, x, y, out_sig, out_cnt, self.ts_map, self._shift,
                    self.params.D_th, self.params.T_th)


class BafFilter(SsmFilter):
    name = "baf"

    def __init__(self, params: FilterParams, geometry: SensorGeometry):
        super().__init__(params, geometry, r=1)


class StcfFilter(Denoiser):
    """Counts fresh timestamps over the whole neighborhood, center cell included."""

    name = "stcf"

    def __init__(self, params: FilterParams, geometry: SensorGeometry):
        super().__init__(geometry, params.N_CR)
        self.params = params
        self.ts_map = np.full((geometry.height, geometry.width), _INVALID, np.int64)

    def _reset_memory(self) -> None:
        self.ts_map.fill(_INVALID)

    def _kernel(self, t, x, y, p, out_sig, out_cnt) -> None:
        _stcf_kernel(t, x, y, out_sig, out_cnt, self.ts_map, self.params.D_th,
                     self.params.T_th, self.params.N_CR)
