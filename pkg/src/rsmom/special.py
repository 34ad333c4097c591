"""Archimedean machinery: gamma factors, cutoff functions, Whittaker values.

The cutoff V_m(y) is the inverse Mellin transform along Re(s) = 2 of
G_m(s) * Linf(s + 1/2) / Linf(1/2), with G_m(s) = exp(a s^2) / s^m the test
function (pole of order m at s = 0, parity G_m(-s) = (-1)^m G_m(s), moderate
growth on vertical lines).  Quadrature nodes on the contour are fixed at
construction (Gauss-Legendre panels, height adapted to the integrand's decay),
then V is tabulated on a dense log grid and interpolated by a cubic spline;
the moment sums call the spline millions of times.

The Whittaker evaluator inverts the Mellin pair
    W_{p,nu}(y) e^{-y/2} = Int Gamma(1/2+s+nu) Gamma(1/2+s-nu) / Gamma(1+s-p)
                               y^{-s} ds / (2 pi i)
on a contour right of all poles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import loggamma as _scipy_loggamma

from .errors import DomainError, NumericError
from .params import (
    CUTOFF_GRID_YMAX,
    CUTOFF_GRID_YMIN,
    QUADRATURE,
    TOLERANCES,
)

_LOG_PI = math.log(math.pi)


def log_gamma(z: complex) -> complex:
    """Principal branch of log Gamma; poles raise instead of returning inf."""
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == int(z.real):
        raise DomainError(f"log_gamma pole at z = {z.real:g}")
    return complex(_scipy_loggamma(z))


def _log_gamma_r(s):
    """log of Gamma_R(s) = pi^(-s/2) Gamma(s/2), vectorized over complex s."""
    s = np.asarray(s, dtype=np.complex128)
    return -0.5 * s * _LOG_PI + _scipy_loggamma(0.5 * s)


@dataclass(frozen=True)
class ArchFactor:
    """Linf(s) = prod_j Gamma_R(s - mu_j)."""

    gamma_shifts: tuple[float, ...]

    @property
    def degree(self) -> int:
        return len(self.gamma_shifts)

    def log_value(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.complex128)
        out = np.zeros_like(s)
        for mu in self.gamma_shifts:
            out = out + _log_gamma_r(s - mu)
        return out

    def log_ratio(self, s) -> np.ndarray:
        """log of Linf(s + 1/2) / Linf(1/2)."""
        return self.log_value(np.asarray(s) + 0.5) - self.log_value(0.5)

    def log_derivative_at_half(self) -> float:
        """(Linf'/Linf)(1/2) by central difference (enters V_2's constant)."""
        h = 1e-6
        return float(
            (self.log_value(0.5 + h) - self.log_value(0.5 - h)).real / (2 * h)
        )

    def signature(self) -> tuple:
        return tuple(round(float(mu), 12) for mu in self.gamma_shifts)


def gamma_c_shifts(w: float) -> list[float]:
    """Gamma_C(s + w) = Gamma_R(s + w) Gamma_R(s + w + 1) as shift list."""
    return [-w, -(w + 1.0)]


def holomorphic_pair_arch(weight: int) -> ArchFactor:
    """Archimedean factor of (holomorphic weight-k form) x (ring class theta):
    Gamma_C(s + (k-1)/2)^2."""
    w = (weight - 1) / 2.0
    return ArchFactor(tuple(gamma_c_shifts(w) * 2))


def tensor_ring_class_arch(weights: list[int]) -> ArchFactor:
    """Archimedean factor for an N-fold holomorphic tensor times the ring
    class theta: one Gamma_C(s + |w(eps)|) per sign pattern eps in {+-1}^N,
    w(eps) = sum_j eps_j (k_j - 1)/2.
    """
    if len(weights) == 1:
        return holomorphic_pair_arch(weights[0])
    shifts: list[float] = []
    half = [(k - 1) / 2.0 for k in weights]
    n = len(weights)
    for mask in range(2**n):
        w = sum(h if (mask >> j) & 1 else -h for j, h in enumerate(half))
        shifts.extend(gamma_c_shifts(abs(w)))
    return ArchFactor(tuple(sorted(shifts)))


@dataclass(frozen=True)
class TestFunction:
    """G_m(s) = exp(a s^2) / s^m."""

    m: int
    a: float = 0.25

    def __post_init__(self):
        if self.m not in (1, 2):
            raise DomainError("pole order m must be 1 or 2")
        if self.a < 0:
            raise DomainError("Gaussian damping must be >= 0")

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.complex128)
        return np.exp(self.a * s * s) / s**self.m


def _gauss_panels(t_hi: float, width: float, npts: int):
    """Gauss-Legendre nodes/weights tiling [0, t_hi]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    edges = np.arange(0.0, t_hi + width, width)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes.append(mid + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


class _ContourQuadrature:
    """Fixed nodes s = sigma + i t on the upper half contour, with weights.

    Integrals Int F(s) y^{-s} ds/(2 pi i) of conjugation-symmetric F are
    evaluated as (y^-sigma / pi) * Re sum_k W_k e^{-i t_k log y} with
    W_k = w_k * F(sigma + i t_k).
    """

    def __init__(
        self,
        sigma: float,
        log_f,
        t_max: float | None = None,
        width: float | None = None,
    ):
        self.sigma = sigma
        width = width if width is not None else QUADRATURE["panel_width"]
        npts = QUADRATURE["panel_points"]
        t_hi = t_max if t_max is not None else QUADRATURE["max_height"]
        t, w = _gauss_panels(t_hi, width, npts)
        s = sigma + 1j * t
        logf = log_f(s)
        # truncate where the envelope is numerically dead (keep a prefix only)
        mag = logf.real
        alive = np.nonzero(mag > mag.max() - 45.0)[0]  # e^-45 ~ 2.9e-20
        last = int(alive[-1]) + 1 if len(alive) else len(t)
        self.t, self.w = t[:last], w[:last]
        self.fw = np.exp(logf[:last]) * self.w
        self.t_used = float(self.t.max()) if len(self.t) else 0.0

    def eval(self, y: np.ndarray) -> np.ndarray:
        """Int F(s) y^{-s} ds/(2 pi i), vectorized over positive y."""
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        out = np.empty_like(y)
        chunk = 2048
        for i in range(0, len(y), chunk):
            ly = np.log(y[i : i + chunk])
            osc = np.exp(-1j * np.outer(ly, self.t))
            out[i : i + chunk] = (osc @ self.fw).real / math.pi
        return out * y ** (-self.sigma)

    def eval_with(self, extra, y: float) -> float:
        """Same integral with an extra conjugation-symmetric factor."""
        vals = extra(self.sigma + 1j * self.t)
        ly = math.log(y)
        osc = np.exp(-1j * self.t * ly)
        return float((osc * vals * self.fw).sum().real) / math.pi * y ** (-self.sigma)


class CutoffFunction:
    """Numeric evaluator of V_{k+1}(y) (and the divisor-corrected variant).

    A `ratio` multiplies the Mellin integrand by (1 - ratio^(r s)); the plain
    cutoff has ratio None.  Two contours are used: Re(s) = 2 for y above
    Y_SWITCH, and for smaller y the residue at s = 0 plus a correction
    integral on Re(s) = -1/4 (between the test-function pole and the first
    pole of the archimedean factor).  The right contour alone loses precision
    to cancellation as y -> 0, which is why the residue form exists.  Values
    are tabulated on a dense log grid and interpolated by a cubic spline;
    beyond the right edge the function is indistinguishable from zero.
    """

    Y_SWITCH = 0.1

    def __init__(
        self,
        k: int,
        arch: ArchFactor,
        a: float = 0.25,
        ratio: float | None = None,
        ratio_exponent: int = 2,
    ):
        if k not in (0, 1):
            raise DomainError("k must be 0 or 1")
        self.k = k
        self.m = k + 1
        self.arch = arch
        self.test = TestFunction(self.m, a)
        self.ratio = ratio
        self.ratio_exponent = ratio_exponent
        if ratio is not None and not 0.0 < ratio <= 1.0:
            raise DomainError("cutoff ratio must lie in (0, 1]")
        self._ell1 = arch.log_derivative_at_half()
        self._quad = _ContourQuadrature(QUADRATURE["contour_sigma"], self._log_f)
        self._quad_left = _ContourQuadrature(-0.25, self._log_f)
        self._build_spline()

    # residue of G_m(s) ratio(s) [1 - rho^(r s)] y^(-s) at s = 0
    def _residue(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if self.ratio is None:
            if self.m == 1:
                return np.ones_like(y)
            return -np.log(y) + self._ell1
        if self.m == 1:
            return np.zeros_like(y)
        return np.full_like(
            y, -self.ratio_exponent * math.log(self.ratio)
        )

    def _raw_eval(self, y: np.ndarray, left_quad=None, right_quad=None) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        lq = left_quad if left_quad is not None else self._quad_left
        rq = right_quad if right_quad is not None else self._quad
        out = np.empty_like(y)
        small = y < self.Y_SWITCH
        if small.any():
            out[small] = self._residue(y[small]) + lq.eval(y[small])
        if (~small).any():
            out[~small] = rq.eval(y[~small])
        return out

    def _build_spline(self):
        per_decade = TOLERANCES["cutoff_grid_per_decade"]
        lo, hi = math.log10(CUTOFF_GRID_YMIN), math.log10(CUTOFF_GRID_YMAX)
        n = int((hi - lo) * per_decade) + 1
        logy = np.linspace(lo * math.log(10), hi * math.log(10), n)
        y = np.exp(logy)
        vals = self._raw_eval(y)
        # verification: doubled panel density on both contours, probes spread
        # across the grid plus both sides of the contour switch
        probe = np.concatenate(
            [
                y[:: max(1, n // 7)][:7],
                [self.Y_SWITCH * 0.98, self.Y_SWITCH * 1.02, 1.0],
            ]
        )
        width = QUADRATURE["panel_width"] / 2.0
        fine_r = _ContourQuadrature(
            self._quad.sigma, self._log_f, t_max=self._quad.t_used + 8.0, width=width
        )
        fine_l = _ContourQuadrature(
            -0.25, self._log_f, t_max=self._quad_left.t_used + 8.0, width=width
        )
        ref = self._raw_eval(probe, left_quad=fine_l, right_quad=fine_r)
        got = self._raw_eval(probe)
        scale = max(1.0, float(np.abs(ref).max()))
        err = float(np.abs(ref - got).max()) / scale
        if err > TOLERANCES["cutoff_quadrature_rel"]:
            raise NumericError(
                "cutoff quadrature failed to converge",
                diagnostics={"max_rel_err": err, "t_max": self._quad.t_used},
            )
        self._logy = logy
        self._vals = vals
        self._spline = CubicSpline(logy, vals)
        self._ymin, self._ymax = float(y[0]), float(y[-1])

    def _log_f(self, s):
        out = self.test.a * s * s - self.m * np.log(s) + self.arch.log_ratio(s)
        if self.ratio is not None:
            out = out + np.log(
                1.0 - np.exp(self.ratio_exponent * math.log(self.ratio) * s)
            )
        return out

    def __call__(self, y):
        """V(y) for scalar or array y inside [1e-12, 1e12]."""
        scalar = np.isscalar(y) or getattr(y, "ndim", 1) == 0
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if np.any(y <= 0):
            raise DomainError("cutoff argument must be positive")
        if np.any(y < 1e-12 - 1e-18) or np.any(y > 1e12):
            raise DomainError("cutoff argument outside [1e-12, 1e12]")
        out = np.zeros_like(y)
        inside = y <= self._ymax
        out[inside] = self._spline(np.log(y[inside]))
        return float(out[0]) if scalar else out

    def bulk(self, y: np.ndarray) -> np.ndarray:
        """Spline evaluation without domain policing (internal hot path)."""
        out = np.zeros(len(y))
        inside = y <= self._ymax
        out[inside] = self._spline(np.log(y[inside]))
        return out

    def exact(self, y) -> np.ndarray:
        """Direct quadrature, bypassing the spline (for tests)."""
        return self._quad.eval(np.asarray(y, dtype=np.float64))

    def contour_integral_with(self, extra, y_inverse: float) -> float:
        """Int F(s) * extra(s) * Y^s ds/(2 pi i) with Y = 1/y_inverse."""
        return self._quad.eval_with(extra, y_inverse)


_CUTOFF_CACHE: dict[tuple, CutoffFunction] = {}


def cutoff_function(
    k: int,
    arch: ArchFactor,
    a: float = 0.25,
    ratio: float | None = None,
    ratio_exponent: int = 2,
) -> CutoffFunction:
    key = (
        k,
        arch.signature(),
        round(a, 12),
        None if ratio is None else round(ratio, 14),
        ratio_exponent if ratio is not None else None,
    )
    if key not in _CUTOFF_CACHE:
        _CUTOFF_CACHE[key] = CutoffFunction(
            k, arch, a=a, ratio=ratio, ratio_exponent=ratio_exponent
        )
    return _CUTOFF_CACHE[key]


def cutoff_eval(v: CutoffFunction, y: float) -> float:
    return float(v(y))


def modified_cutoff_eval(
    v: CutoffFunction, y: float, ratio: float, ratio_exponent: int = 2
) -> float:
    """Cutoff with the extra integrand factor (1 - ratio^(r s)).

    ratio = (smaller conductor / successor conductor), in (0, 1]; identical
    to V(y) - V(y * ratio^(-r)) (difference of two plain cutoffs).
    """
    if ratio == 1.0:
        return 0.0
    mod = cutoff_function(
        v.k, v.arch, a=v.test.a, ratio=ratio, ratio_exponent=ratio_exponent
    )
    return float(mod(y))


# ---------------------------------------------------------------------------
# Whittaker functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WhittakerParams:
    p: float
    nu: complex
    normalized: bool = False
    weight_q: int | None = None  # integer weight q with p = q/2, normalized case

    def __post_init__(self):
        if abs(self.p) > 50 or abs(self.nu) > 50:
            raise DomainError("Whittaker parameters limited to |p|, |nu| <= 50")
        if self.normalized:
            q = self.weight_q
            if q is None or q / 2.0 != self.p:
                raise DomainError("normalized Whittaker needs integer weight q = 2p")
            nu = complex(self.nu)
            if q % 2 == 0:
                ok = (
                    abs(nu.real) < 1e-14  # i R
                    or (abs(nu.imag) < 1e-14 and abs(nu.real) < 0.5)
                    or (abs(nu.imag) < 1e-14 and (nu.real - 0.5) == int(nu.real - 0.5))
                )
            else:
                ok = abs(nu.real) < 1e-14 or (
                    abs(nu.imag) < 1e-14 and nu.real == int(nu.real)
                )
            if not ok:
                raise DomainError(
                    "spectral parameter outside the allowed region for this parity"
                )


def _whittaker_contour(p: float, nu: complex, y: float) -> float:
    """W_{p,nu}(y) by numeric inverse Mellin; y in [1e-6, 50]."""
    sigma = max(1.0, abs(complex(nu).real) + 1.0)
    t_hi = QUADRATURE["whittaker_max_height"] + 2.0 * abs(complex(nu).imag)
    width = QUADRATURE["whittaker_panel_width"]
    t, w = _gauss_panels(t_hi, width, 16)
    # full line: nodes at +-t
    t_full = np.concatenate([-t[::-1], t])
    w_full = np.concatenate([w[::-1], w])
    s = sigma + 1j * t_full
    logf = (
        _scipy_loggamma(0.5 + s + nu)
        + _scipy_loggamma(0.5 + s - nu)
        - _scipy_loggamma(1.0 + s - p)
    )
    vals = np.exp(logf - 1j * t_full * math.log(y))
    integral = (vals * w_full).sum() / (2.0 * math.pi)
    out = integral * y ** (-sigma) * math.exp(y / 2.0)
    if abs(out.imag) > 1e-8 * max(1.0, abs(out.real)):
        raise NumericError(
            "Whittaker contour produced a non-real value",
            diagnostics={"imag": out.imag, "real": out.real},
        )
    return float(out.real)


def whittaker_eval(params: WhittakerParams, y: float) -> float:
    """W_{p,nu}(y), or the normalized variant when params.normalized."""
    if not params.normalized:
        if not 1e-6 <= y <= 50:
            raise DomainError("whittaker_eval supports 1e-6 <= y <= 50")
        return _whittaker_contour(params.p, params.nu, y)
    return complex(normalized_whittaker(params.weight_q, params.nu, y)).real


def normalized_whittaker(q: int, nu: complex, y: float) -> complex:
    """The unit-normalized Whittaker function on y in R^x.

    Zero by convention when 1/2 +- nu + sgn(y) q/2 hits a nonpositive integer.
    """
    if y == 0:
        raise DomainError("normalized Whittaker undefined at y = 0")
    if not 1e-6 <= 4.0 * math.pi * abs(y) <= 50:
        raise DomainError("normalized Whittaker supports 4 pi |y| in [1e-6, 50]")
    sgn = 1.0 if y > 0 else -1.0
    p = sgn * q / 2.0
    nu = complex(nu)
    for s_ in (+1.0, -1.0):
        arg = 0.5 + s_ * nu + p
        if abs(arg.imag) < 1e-14 and arg.real <= 0 and arg.real == int(arg.real):
            return 0.0
    wval = _whittaker_contour(p, nu, 4.0 * math.pi * abs(y))
    lognorm = 0.5 * (
        _scipy_loggamma(complex(0.5 - nu + p)) + _scipy_loggamma(complex(0.5 + nu + p))
    )
    phase = complex(1j) ** (sgn * q / 2.0)
    return phase * wval * complex(np.exp(-lognorm))
