"""Cache-like filter (row and column denoise modules) and its RCF special case."""
from __future__ import annotations

import numba as nb
import numpy as np

from ..events import SensorGeometry
from .base import Denoiser
from .config import ClfConfig, FilterParams
from .memory import LineMemory, memory_footprint_bits


def ts_mask(bw_t: int) -> int:
    """All-ones mask of ``bw_t`` bits as a signed 64-bit value (-1 for 64)."""
    return -1 if bw_t >= 64 else (1 << bw_t) - 1


def _shift_of(u: int) -> int:
    """log2(u) for powers of two, else -1 (kernel falls back to division)."""
    return u.bit_length() - 1 if u & (u - 1) == 0 else -1


def _make_kernel(same_pol: bool, wide: bool):
    """Compile-time specialization on polarity matching and 64-bit stamps.

    With a mask narrower than 64 bits the wrapped difference is never
    negative, so the sign test is only emitted for ``wide``.
    """

    @nb.njit(cache=True, error_model="numpy")
    def kernel(t, x, y, p, out_sig, out_cnt,
               r_coord, r_tq, r_pol, r_valid, r_full, r_wpt,
               c_coord, c_tq, c_pol, c_valid, c_full, c_wpt,
               use_rdm, use_cdm, d_th, t_ticks, quant, qshift, mask, n_cr):
        # The row and column scans are written out twice on purpose: factoring
        # them into a helper costs ~2x throughput (array struct passing).
        n_rows, s_r = r_coord.shape
        n_cols, s_c = c_coord.shape
        for i in range(t.shape[0]):
            xi = np.int64(x[i])
            yi = np.int64(y[i])
            pi = p[i]
            if qshift >= 0:
                tq_now = (t[i] >> qshift) & mask
            else:
                tq_now = (t[i] // quant) & mask
            cnt = 0
            # reads see the state before this event's own writes
            if use_rdm:
                for ln in range(max(yi - d_th, 0), min(yi + d_th, n_rows - 1) + 1):
                    # slots [wpt, s) of a block that never wrapped are still invalid
                    for k in range(s_r if r_full[ln] else r_wpt[ln]):
                        dt = (tq_now - r_tq[ln, k]) & mask
                        ok = (abs(xi - r_coord[ln, k]) <= d_th) & (dt <= t_ticks)
                        if wide:
                            # a stored stamp from the future under a 64-bit mask
                            ok &= dt >= 0
                        if same_pol:
                            ok &= r_pol[ln, k] == pi
                        cnt += ok
            if use_cdm:
                for ln in range(max(xi - d_th, 0), min(xi + d_th, n_cols - 1) + 1):
                    for k in range(s_c if c_full[ln] else c_wpt[ln]):
                        dt = (tq_now - c_tq[ln, k]) & mask
                        ok = (abs(yi - c_coord[ln, k]) <= d_th) & (dt <= t_ticks)
                        if wide:
                            ok &= dt >= 0
                        if same_pol:
                            ok &= c_pol[ln, k] == pi
                        cnt += ok
            out_cnt[i] = cnt
            out_sig[i] = cnt >= n_cr
            if use_rdm:
                k = r_wpt[yi]
                r_coord[yi, k] = xi
                r_tq[yi, k] = tq_now
                r_pol[yi, k] = pi
                r_valid[yi, k] = True
                k += 1
                if k == s_r:
                    k = 0
                    r_full[yi] = True
                r_wpt[yi] = k
            if use_cdm:
                k = c_wpt[xi]
                c_coord[xi, k] = yi
                c_tq[xi, k] = tq_now
                c_pol[xi, k] = pi
                c_valid[xi, k] = True
                k += 1
                if k == s_c:
                    k = 0
                    c_full[xi] = True
                c_wpt[xi] = k

    return kernel


_KERNELS = {(pol, wide): _make_kernel(pol, wide) for pol in (False, True) for wide in (False, True)}


class ClfFilter(Denoiser):
    """Cache-like filter: per-row and per-column FIFO blocks of ``s`` events.

    The input event is written unconditionally after classification, into
    its own row block (storing x) and column block (storing y).
    """

    name = "clf"

    def __init__(self, config: ClfConfig, geometry: SensorGeometry):
        super().__init__(geometry, config.N_CR)
        self.config = config
        self.rows = LineMemory(geometry.height if config.enable_rdm else 0,
                               max(config.s_RM, 1), config.N_RM)
        self.cols = LineMemory(geometry.width if config.enable_cdm else 0,
                               max(config.s_CM, 1), config.N_CM)

    def _reset_memory(self) -> None:
        self.rows.reset()
        self.cols.reset()

    def _kernel(self, t, x, y, p, out_sig, out_cnt) -> None:
        c = self.config
        r, k = self.rows, self.cols
        kernel = _KERNELS[c.same_polarity_only, c.BW_T >= 64]
        kernel(t, x, y, p, out_sig, out_cnt,
               r.coord, r.tq, r.pol, r.valid, r.full, r.wpt,
               k.coord, k.tq, k.pol, k.valid, k.full, k.wpt,
               c.enable_rdm, c.enable_cdm, c.D_th, c.T_th_ticks, c.quant_unit, _shift_of(c.quant_unit),
               ts_mask(c.BW_T), c.N_CR)

    @property
    def footprint_bits(self) -> int:
        return memory_footprint_bits(self.config, self.geometry)


class RcfFilter(ClfFilter):
    """Row/column filter: one stored event per row and per column.

    Defined as the cache-like filter with a single bank and a single slot per
    block, so the FIFO write degenerates to an overwrite.
    """

    name = "rcf"

    def __init__(self, params: FilterParams, geometry: SensorGeometry, BW_T: int = 64,
                 quant_unit: int | None = None):
        super().__init__(ClfConfig.rcf(params, BW_T, quant_unit), geometry)
