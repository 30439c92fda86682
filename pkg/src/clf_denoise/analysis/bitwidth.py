"""False positives caused by timestamp wraparound.

A stored timestamp of ``BW_T`` bits spans ``T_s`` before it wraps. If the
next event in the spatial window arrives after a gap ``X`` with
``X mod T_s <= T_th`` but ``X > T_th``, the wrapped comparison accepts an
uncorrelated pair. With Poisson arrivals (rate ``lambda`` over the window)
that probability is a sum over the windows ``[k T_s, k T_s + T_th]``.

Rates are in Hz, times in microseconds.
"""
from __future__ import annotations

import math

import numpy as np

DEFAULT_HORIZON_US = 1e6


class InvalidParams(ValueError):
    pass


def _check(lam: float, t_th: float, t_s: float) -> None:
    if lam < 0:
        raise InvalidParams(f"lambda must be >= 0 (got {lam})")
    if t_th < 0:
        raise InvalidParams(f"T_th must be >= 0 (got {t_th})")
    if not t_th < t_s:
        raise InvalidParams(f"T_th < T_s violated (T_th={t_th}, T_s={t_s})")


def fp_rate_analytic(lambda_window: float, T_th: float, T_s: float,
                     horizon: float | None = DEFAULT_HORIZON_US) -> float:
    """Probability that the first arrival lands in a wrapped window.

    ``horizon=None`` gives the untruncated geometric-series limit.
    """
    _check(lambda_window, T_th, T_s)
    if lambda_window == 0 or T_th == 0:
        return 0.0
    lam = lambda_window * 1e-6
    if horizon is None:
        return fp_rate_closed_form(lambda_window, T_th, T_s)
    k = np.arange(1, int(horizon // T_s) + 1, dtype=np.float64)
    if k.size == 0:
        return 0.0
    return float(np.sum(np.exp(-lam * k * T_s) - np.exp(-lam * (k * T_s + T_th))))


def fp_rate_closed_form(lambda_window: float, T_th: float, T_s: float) -> float:
    _check(lambda_window, T_th, T_s)
    if lambda_window == 0 or T_th == 0:
        return 0.0
    lam = lambda_window * 1e-6
    return -math.expm1(-lam * T_th) * math.exp(-lam * T_s) / -math.expm1(-lam * T_s)


def fp_rate_montecarlo(lambda_window: float, T_th: float, T_s: float, trials: int, seed: int = 0,
                       horizon: float | None = DEFAULT_HORIZON_US) -> tuple[float, float]:
    """(estimate, binomial standard error) from simulated first arrivals.

    Each trial draws the gap to the next window event and applies the
    wrapped comparison a reduced-width timestamp would make.
    """
    if trials < 1:
        raise InvalidParams(f"trials must be >= 1 (got {trials})")
    _check(lambda_window, T_th, T_s)
    if lambda_window == 0:
        return 0.0, 0.0
    rng = np.random.Generator(np.random.PCG64(seed))
    gap = rng.exponential(1e6 / lambda_window, trials)
    wrapped = np.fmod(gap, T_s)
    hit = (gap >= T_s) & (wrapped <= T_th)
    if horizon is not None:
        hit &= gap - wrapped <= horizon
    p = float(np.count_nonzero(hit)) / trials
    return p, binomial_stderr(p, trials)


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n)


def timestamp_span(bw_t: int, tick_us: float = 1.0) -> float:
    """T_s in microseconds for a ``bw_t``-bit stamp counting ``tick_us`` ticks."""
    return tick_us * float(1 << bw_t)


def bitwidth_table(lambda_window: float, T_th: float, bw_list, trials: int, seed: int = 0,
                   tick_us: float = 1.0, horizon: float | None = DEFAULT_HORIZON_US) -> list[dict]:
    """One row per bitwidth: BW_T, T_s, analytic FP, Monte-Carlo FP, stderr.

    Every bitwidth reuses ``seed``, so rows differ only through ``T_s``.
    """
    rows = []
    for bw in bw_list:
        t_s = timestamp_span(bw, tick_us)
        mc, se = fp_rate_montecarlo(lambda_window, T_th, t_s, trials, seed, horizon)
        rows.append({"BW_T": bw, "T_s_us": t_s,
                     "fp_analytic": fp_rate_analytic(lambda_window, T_th, t_s, horizon),
                     "fp_montecarlo": mc, "stderr": se})
    return rows
