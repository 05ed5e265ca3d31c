"""Least-squares slope fits for convergence traces.

Power-law decay is fitted as ln(d_k - d*) against ln k, exponential decay
as ln(d_k - d*) against k.  Natural logarithms throughout.  A burn-in
prefix is discarded (early iterations are transient) and only strictly
positive gaps above a floor enter the fit, since the trace bottoms out at
floating-point resolution once the iterate converges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData

MIN_POINTS = 10


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    kind: str = "loglog"


def _ols(x: np.ndarray, y: np.ndarray, kind: str) -> SlopeFit:
    if x.size < MIN_POINTS:
        raise InsufficientData(f"{x.size} points after filtering, need {MIN_POINTS}")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return SlopeFit(float(slope), float(intercept), r2, int(x.size), kind)


def _gaps(d_history, dstar: float, burn_in: int, gap_floor: float):
    d = np.asarray(d_history, float)
    k = np.arange(d.size)
    start = max(burn_in, 1)
    d = d[start:]
    k = k[start:]
    mask = (d - dstar) > gap_floor
    return k[mask], d[mask] - dstar


def fit_loglog_slope(d_history, dstar: float = 0.0, burn_in: int = 100,
                     gap_floor: float = 0.0) -> SlopeFit:
    """Fit ln(d_k - dstar) = slope * ln k + intercept over the trace tail."""
    k, gaps = _gaps(d_history, dstar, burn_in, gap_floor)
    return _ols(np.log(k), np.log(gaps), "loglog")


def fit_exponential(d_history, dstar: float = 0.0, burn_in: int = 1,
                    gap_floor: float = 1e-13) -> SlopeFit:
    """Fit ln(d_k - dstar) = slope * k + intercept over the trace tail.

    The floor drops the machine-precision plateau that follows geometric
    convergence; burn-in defaults to a single iterate since exponential
    decays settle immediately.
    """
    k, gaps = _gaps(d_history, dstar, burn_in, gap_floor)
    return _ols(k.astype(float), np.log(gaps), "exponential")
