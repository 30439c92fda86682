from __future__ import annotations

import numba as nb
import numpy as np

from ..events import SensorGeometry
from .base import Denoiser
from .config import FilterParams


@nb.njit(cache=True)
def _oracle_kernel(h_t, h_x, h_y, h_p, start, stop, out_sig, out_cnt, d_th, t_th, n_cr, same_pol):
    for i in range(start, stop):
        ti = h_t[i]
        cnt = 0
        j = i - 1
        # history is time-ordered, so the scan stops at the first stale event
        while j >= 0 and ti - h_t[j] <= t_th:
            if (abs(np.int64(h_x[i]) - h_x[j]) <= d_th and abs(np.int64(h_y[i]) - h_y[j]) <= d_th
                    and (not same_pol or h_p[i] == h_p[j])):
                cnt += 1
            j -= 1
        out_cnt[i - start] = cnt
        out_sig[i - start] = cnt >= n_cr


class OracleFilter(Denoiser):
    """Exact definition of spatiotemporal correlation over the full history.

    Counts strictly earlier events (stream order) within ``D_th`` in both axes
    and ``T_th`` in time; no memory limits, no timestamp truncation.
    """

    name = "oracle"

    def __init__(self, params: FilterParams, geometry: SensorGeometry, same_polarity_only: bool = False):
        super().__init__(geometry, params.N_CR)
        self.params = params
        self.same_polarity_only = same_polarity_only
        self._alloc(1024)

    def _alloc(self, cap: int) -> None:
        self._t = np.zeros(cap, np.int64)
        self._x = np.zeros(cap, np.int32)
        self._y = np.zeros(cap, np.int32)
        self._p = np.zeros(cap, np.int8)
        self._n = 0

    def _reset_memory(self) -> None:
        self._alloc(1024)

    def _append(self, t, x, y, p) -> None:
        need = self._n + len(t)
        if need > len(self._t):
            cap = max(need, 2 * len(self._t))
            for name in ("_t", "_x", "_y", "_p"):
                old = getattr(self, name)
                new = np.zeros(cap, old.dtype)
                new[: self._n] = old[: self._n]
                setattr(self, name, new)
        sl = slice(self._n, need)
        self._t[sl], self._x[sl], self._y[sl], self._p[sl] = t, x, y, p
        self._n = need

    def _kernel(self, t, x, y, p, out_sig, out_cnt) -> None:
        start = self._n
        self._append(t, x, y, p)
        _oracle_kernel(self._t, self._x, self._y, self._p, start, self._n, out_sig, out_cnt,
                       self.params.D_th, self.params.T_th, self.params.N_CR, self.same_polarity_only)
