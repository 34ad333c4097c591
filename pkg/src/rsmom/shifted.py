"""Shifted convolution sums S = sum_g lambda(g^2 + q) V(|g^2 + q| / Y)
and empirical decay-exponent fits against the known bound slopes.

Negative shifted values (possible for q < 0) contribute through lambda(|.|):
coefficients live on ideals, so only the norm matters.  The window family is
fixed: a log-Gaussian bump exp(-(log y)^2) and a compactly supported bump
with support inside (0, 1]; both are smooth with all derivatives bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, DomainError
from .hecke import TensorCoefficients
from .params import LINDELOF_DELTA, RAMANUJAN_THETA


class Window:
    """Smooth weight with a hard numerical support cut y <= y_max."""

    name: str
    y_max: float

    def __call__(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class LogGaussianWindow(Window):
    """exp(-(log y)^2), cut where it falls below 1e-16."""

    name = "gauss_log"

    def __init__(self, cut: float = 6.1):
        self._cut = cut
        self.y_max = math.exp(cut)

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros_like(y)
        ok = (y > 0) & (np.abs(np.log(np.maximum(y, 1e-300))) <= self._cut)
        out[ok] = np.exp(-np.log(y[ok]) ** 2)
        return out


class CompactWindow(Window):
    """Smooth bump supported on [1/16, 1] (log-coordinates bump)."""

    name = "compact"

    def __init__(self):
        self._L = math.log(16.0)
        self.y_max = 1.0

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros_like(y)
        ok = (y > math.exp(-self._L)) & (y < 1.0)
        u = (2.0 * np.log(np.maximum(y, 1e-300)) + self._L) / self._L
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            vals = np.exp(1.0 - 1.0 / np.maximum(1.0 - u * u, 1e-300))
        out[ok] = vals[ok]
        return out


WINDOWS = {"gauss_log": LogGaussianWindow, "compact": CompactWindow}


@dataclass
class ShiftedSumSpec:
    tensor: TensorCoefficients
    q: int
    Y: float
    window: Window = field(default_factory=CompactWindow)

    def __post_init__(self):
        if self.q == 0:
            raise DomainError("shift q must be nonzero")
        if self.Y < 4 * abs(self.q):
            raise DomainError("Y must be at least 4 |q|")


def shifted_sum(spec: ShiftedSumSpec) -> tuple[float, float]:
    """(S, S_normalized): the plain and 1/sqrt(n)-weighted window sums.

    Sums over all integers g with g^2 + q inside the window support;
    g^2 + q = 0 is skipped; both signs of g are included (computed as the
    g >= 0 half with multiplicity two for g > 0).
    """
    q, Y, V = spec.q, spec.Y, spec.window
    nmax_needed = int(Y * V.y_max + abs(q)) + 1
    cov = spec.tensor.p_max
    if nmax_needed > cov:
        raise CoverageError(
            f"window support needs coefficients to {nmax_needed}, "
            f"coverage ends at {cov}",
            prime=None,
        )
    gmax = int(math.isqrt(int(Y * V.y_max + abs(q)))) + 1
    g = np.arange(0, gmax + 1, dtype=np.int64)
    n = g * g + q
    absn = np.abs(n)
    keep = (n != 0) & (absn <= Y * V.y_max)
    g, n, absn = g[keep], n[keep], absn[keep]
    table = spec.tensor.coefficient_table(int(absn.max()) if len(absn) else 1)
    lam = table[absn]
    w = V(absn / Y)
    mult = np.where(g > 0, 2.0, 1.0)
    s_plain = float(np.sum(mult * lam * w))
    s_norm = float(np.sum(mult * lam * w / np.sqrt(absn)))
    return s_plain, s_norm


def shifted_sum_naive(spec: ShiftedSumSpec) -> tuple[float, float]:
    """Two-sided loop with per-term coefficient calls (test oracle)."""
    q, Y, V = spec.q, spec.Y, spec.window
    gmax = int(math.isqrt(int(Y * V.y_max + abs(q)))) + 1
    s_plain = 0.0
    s_norm = 0.0
    for g in range(-gmax, gmax + 1):
        n = g * g + q
        if n == 0:
            continue
        y = abs(n) / Y
        wv = float(V(np.array([y]))[0])
        if wv == 0.0:
            continue
        lam = spec.tensor.coefficient(abs(n))
        s_plain += lam * wv
        s_norm += lam * wv / math.sqrt(abs(n))
    return s_plain, s_norm


# ---------------------------------------------------------------------------
# exponent fits
# ---------------------------------------------------------------------------


def bound_slopes(theta: float = RAMANUJAN_THETA, delta: float = LINDELOF_DELTA) -> dict:
    """Slopes of the bound Y^(1/4) q^(delta-1/2) (q/Y)^(1/2-theta/2) for the
    normalized sum, and with Y^(3/4) leading for the plain sum."""
    return {
        "normalized_Y": 0.25 - (0.5 - theta / 2.0),
        "normalized_q": (delta - 0.5) + (0.5 - theta / 2.0),
        "plain_Y": 0.75 - (0.5 - theta / 2.0),
        "plain_q": (delta - 0.5) + (0.5 - theta / 2.0),
    }


@dataclass
class ExponentFit:
    grid: list[dict]
    slopes_Y: dict[int, float]        # per q: slope of log|S_norm| vs log Y
    slopes_q: dict[float, float]      # per Y: slope of log|S_norm| vs log q
    bound: dict
    max_slope_Y: float
    median_doubling_ratio: float | None
    residuals: dict[int, float]

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "slopes_Y": {str(k): v for k, v in self.slopes_Y.items()},
            "slopes_q": {str(k): v for k, v in self.slopes_q.items()},
            "bound_slopes": self.bound,
            "max_slope_Y": self.max_slope_Y,
            "median_doubling_ratio": self.median_doubling_ratio,
            "fit_residuals": self.residuals,
        }


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log|y| against log x; returns (slope, rms)."""
    lx = np.log(np.asarray(x, dtype=np.float64))
    ly = np.log(np.abs(np.asarray(y, dtype=np.float64)))
    A = np.vstack([lx, np.ones_like(lx)]).T
    sol, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    rms = float(np.sqrt(res[0] / len(lx))) if len(res) else 0.0
    return float(sol[0]), rms


def exponent_fit(
    tensor: TensorCoefficients,
    q_list: list[int],
    y_list: list[float],
    window_name: str = "compact",
) -> ExponentFit:
    """Fit decay slopes of the normalized shifted sums over a (q, Y) grid."""
    if len(q_list) < 2 or len(y_list) < 4:
        raise DomainError("grid needs >= 2 shifts and >= 4 conductor values")
    y_arr = sorted(float(v) for v in y_list)
    if y_arr[-1] / y_arr[0] < 99.0:
        raise DomainError("Y values must span at least two decades")
    window = WINDOWS[window_name]()
    rows = []
    values: dict[tuple[int, float], float] = {}
    for q in q_list:
        for Y in y_arr:
            s, sn = shifted_sum(ShiftedSumSpec(tensor, q, Y, window))
            rows.append({"q": q, "Y": Y, "S": s, "S_normalized": sn})
            values[(q, Y)] = sn
    slopes_Y = {}
    residuals = {}
    for q in q_list:
        vals = np.array([values[(q, Y)] for Y in y_arr])
        if np.any(vals == 0.0):
            raise DomainError(f"degenerate grid: zero sum at q={q}")
        slopes_Y[q], residuals[q] = fit_loglog_slope(np.array(y_arr), vals)
    slopes_q = {}
    qs = sorted(q_list)
    for Y in y_arr:
        vals = np.array([values[(q, Y)] for q in qs])
        slopes_q[Y], _ = fit_loglog_slope(np.array(qs, dtype=float), vals)
    ratios = []
    for q in qs:
        if 2 * q in qs:
            for Y in y_arr:
                a, b = values[(q, Y)], values[(2 * q, Y)]
                if a != 0:
                    ratios.append(abs(b) / abs(a))
    med = float(np.median(ratios)) if ratios else None
    return ExponentFit(
        grid=rows,
        slopes_Y=slopes_Y,
        slopes_q=slopes_q,
        bound=bound_slopes(),
        max_slope_Y=max(slopes_Y.values()),
        median_doubling_ratio=med,
        residuals=residuals,
    )
