"""Dirichlet L-functions, symmetric-square series, and central values.

The central value engine implements the balanced smoothed-sum formula

    L^(k)(1/2) = (1 + eps (-1)^k) * sum_m eta(m)/m
                 * sum_{(n,c)=1} C(n) C_Omega(n) / sqrt(n) * V_{k+1}(m^2 n / Y)

with Y the square root of the conductor, V the cutoff of special.py, eta the
quadratic character of the field, C_Omega(n) = sum_A r_A(n) Omega(A) over the
class group, and terms sharing a factor with the order's conductor dropped.
The prefactor equals 2 at the generic parity and 0 when the caller forces the
parity against the root number (the symmetric functional equation forces the
central value then).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma

from .arith import factorize, gcd, is_fundamental_discriminant, kronecker_table
from .errors import CoverageError, DomainError, NumericError
from .hecke import TensorCoefficients
from .params import TOLERANCES
from .quadorders import FormClassGroup, QuadOrder, RingClassCharacter, build_class_group
from .special import ArchFactor, cutoff_function, tensor_ring_class_arch

_BERNOULLI = [
    1.0 / 6,
    -1.0 / 30,
    1.0 / 42,
    -1.0 / 30,
    5.0 / 66,
    -691.0 / 2730,
    7.0 / 6,
    -3617.0 / 510,
    43867.0 / 798,
    -174611.0 / 330,
]


@dataclass(frozen=True)
class QuadraticCharacter:
    """The Kronecker character (D/.) of a fundamental discriminant (or D=1)."""

    discriminant: int

    def __post_init__(self):
        if not is_fundamental_discriminant(self.discriminant):
            raise DomainError(
                f"{self.discriminant} is not a fundamental discriminant"
            )

    @property
    def modulus(self) -> int:
        return 1 if self.discriminant == 1 else abs(self.discriminant)

    @property
    def is_trivial(self) -> bool:
        return self.discriminant == 1

    def table(self) -> np.ndarray:
        return kronecker_table(self.discriminant)

    def values(self, nmax: int) -> np.ndarray:
        """chi(n) for n = 0..nmax."""
        t = self.table()
        idx = np.arange(nmax + 1) % self.modulus
        return t[idx].astype(np.float64)


def hurwitz_zeta(s: float, x: float, terms: int = 28) -> float:
    """Euler-Maclaurin Hurwitz zeta, real s != 1, x > 0."""
    if s == 1.0:
        raise DomainError("hurwitz_zeta pole at s = 1")
    total = 0.0
    for n in range(terms):
        total += (n + x) ** (-s)
    M = terms + x
    total += M ** (1.0 - s) / (s - 1.0)
    total += 0.5 * M ** (-s)
    poch = s
    fac = M ** (-s - 1.0)
    for j, b in enumerate(_BERNOULLI, start=1):
        total += b / math.factorial(2 * j) * poch * fac
        poch *= (s + 2 * j - 1) * (s + 2 * j)
        fac /= M * M
    return total


def riemann_zeta(s: float) -> float:
    return hurwitz_zeta(s, 1.0)


def dirichlet_L(chi: QuadraticCharacter, s: float) -> float:
    """L(s, chi) for real s >= 1 (s > 1 for the trivial character)."""
    if s < 1.0 - 1e-9:
        return _dirichlet_L_any(chi, s)
    if chi.is_trivial:
        if s <= 1.0:
            raise NumericError("zeta has a pole at s = 1")
        return riemann_zeta(s)
    if abs(s - 1.0) < 1e-15:
        # L(1, chi) = -(1/q) sum_a chi(a) psi(a/q), exact finite formula
        q = chi.modulus
        t = chi.table()
        total = 0.0
        for a in range(1, q):
            if t[a]:
                total += t[a] * digamma(a / q)
        return -total / q
    return _dirichlet_L_any(chi, s)


def _dirichlet_L_any(chi: QuadraticCharacter, s: float) -> float:
    """L(s, chi) = q^-s sum_a chi(a) zeta(s, a/q); any real s != 1."""
    q = chi.modulus
    t = chi.table()
    total = 0.0
    for a in range(1, q + 1):
        if t[a % q]:
            total += t[a % q] * hurwitz_zeta(s, a / q)
    return total * q ** (-s)


def dirichlet_L_log_derivative(chi: QuadraticCharacter, s: float, h: float = 1e-4) -> float:
    """(L'/L)(s) by symmetric difference quotient."""
    lp = dirichlet_L(chi, s + h)
    lm = dirichlet_L(chi, s - h)
    lc = dirichlet_L(chi, s)
    return (lp - lm) / (2.0 * h * lc)


def dirichlet_L_complex(chi: QuadraticCharacter, s: np.ndarray, mmax: int = 4000) -> np.ndarray:
    """L(s, chi) on an array of complex s with Re(s) >= 4 (truncated sum)."""
    s = np.asarray(s, dtype=np.complex128)
    if np.any(s.real < 4.0):
        raise DomainError("complex Dirichlet sum needs Re(s) >= 4")
    vals = chi.values(mmax)
    out = np.zeros_like(s)
    ms = np.arange(1, mmax + 1, dtype=np.float64)
    logm = np.log(ms)
    nz = vals[1:] != 0
    for i, sv in enumerate(s.ravel()):
        out.ravel()[i] = np.sum(vals[1:][nz] * np.exp(-sv * logm[nz]))
    return out


def zeta_excluded(s: float, c: int) -> float:
    """zeta(s) with Euler factors at primes dividing c removed."""
    out = riemann_zeta(s)
    for p, _ in factorize(c).factors:
        out *= 1.0 - float(p) ** (-s)
    return out


def zeta_excluded_log_derivative(s: float, c: int, h: float = 1e-5) -> float:
    return (
        math.log(zeta_excluded(s + h, c)) - math.log(zeta_excluded(s - h, c))
    ) / (2.0 * h)


# ---------------------------------------------------------------------------
# symmetric square series
# ---------------------------------------------------------------------------


@dataclass
class Sym2Value:
    """zeta^(c)(2 s0) * sum_{(n,c)=1} C(n)^2 n^-s0, with a growth diagnostic."""

    value: float
    ratio: float            # the bare coprime sum (L-value / zeta^(c)(2 s0))
    s0: float
    cutoff: int
    drift: float            # |half-cutoff - full-cutoff| (relative)
    pole_flagged: bool
    growth_slope: float     # regularized d/d(log X) when flagged
    acknowledged: bool = False


def _sym2_partial(tensor: TensorCoefficients, c: int, s0: float, nmax: int):
    table = tensor.coefficient_table(nmax)
    n = np.arange(nmax + 1, dtype=np.float64)
    w = table * table
    if c > 1:
        idx = np.arange(nmax + 1)
        mask = np.ones(nmax + 1, dtype=bool)
        for p, _ in factorize(c).factors:
            mask &= idx % p != 0
        w = np.where(mask, w, 0.0)
    w[0] = 0.0
    with np.errstate(divide="ignore"):
        pow_ns = np.where(n > 0, n**-s0, 0.0)

    def partial(N: int) -> float:
        raw = float(np.sum(w[: N + 1] * pow_ns[: N + 1]))
        if s0 > 1.0:
            # accelerate: tail ~ (local mean of C^2) * zeta(s0, N+1)
            lo = N // 2
            mean = float(np.sum(w[lo + 1 : N + 1])) / max(N - lo, 1)
            raw += mean * hurwitz_zeta(s0, float(N + 1))
        return raw

    return partial


def sym2_value(
    tensor: TensorCoefficients,
    excluded_conductor: int = 1,
    s0: float = 1.0,
    nmax: int | None = None,
) -> Sym2Value:
    """Smoothed truncated evaluation with an X vs X/2 stability diagnostic."""
    if s0 < 1.0 - 1e-4 - 1e-12:
        raise DomainError("sym2_value requires s0 >= 1")
    if nmax is None:
        nmax = min(int(TOLERANCES["sym2_default_cutoff"]), int(tensor.p_max))
    elif nmax > tensor.p_max:
        raise CoverageError(
            f"sym2 cutoff {nmax} exceeds coefficient coverage {tensor.p_max}"
        )
    nmax = int(nmax)
    partial = _sym2_partial(tensor, excluded_conductor, s0, nmax)
    full = partial(nmax)
    half = partial(nmax // 2)
    drift = abs(full - half) / max(abs(full), 1.0)
    slope = (full - half) / math.log(2.0)
    flagged = drift > TOLERANCES["sym2_pole_rel"]
    zfac = zeta_excluded(2.0 * s0, excluded_conductor) if s0 > 0.5 else float("nan")
    return Sym2Value(
        value=zfac * full,
        ratio=full,
        s0=s0,
        cutoff=nmax,
        drift=drift,
        pole_flagged=flagged,
        growth_slope=slope,
    )


def sym2_with_offset(
    tensor: TensorCoefficients,
    excluded_conductor: int = 1,
    nmax: int | None = None,
) -> Sym2Value:
    """Evaluate at s0 = 1; if the pole diagnostic trips, rerun at 1 + offset
    and mark the result acknowledged."""
    base = sym2_value(tensor, excluded_conductor, 1.0, nmax)
    if not base.pole_flagged:
        return base
    off = sym2_value(
        tensor, excluded_conductor, 1.0 + TOLERANCES["sym2_offset"], nmax
    )
    off.pole_flagged = True
    off.growth_slope = base.growth_slope
    off.acknowledged = True
    return off


def sym2_ratio_log_derivative(
    tensor: TensorCoefficients,
    excluded_conductor: int,
    s0: float,
    nmax: int | None = None,
    h: float = 1e-4,
) -> float:
    """d/ds log( zeta^(c)(2s) * sum C^2 n^-s ) at s0."""
    up = sym2_value(tensor, excluded_conductor, s0 + h, nmax)
    dn = sym2_value(tensor, excluded_conductor, s0 - h, nmax)
    return (math.log(abs(up.value)) - math.log(abs(dn.value))) / (2.0 * h)


# ---------------------------------------------------------------------------
# Rankin-Selberg setup and central values
# ---------------------------------------------------------------------------


@dataclass
class RankinSetup:
    """A tensor of eigensystems twisted by a ring class character."""

    tensor: TensorCoefficients
    order: QuadOrder
    character: RingClassCharacter | None = None
    basechange_conductor: float | None = None  # c(Pi_K); default level^2
    basechange_is_default: bool = True
    group: FormClassGroup = field(init=False)

    def __post_init__(self):
        if not self.order.is_imaginary:
            raise DomainError("central values require an imaginary quadratic order")
        dk = self.order.fundamental_discriminant
        c = self.order.conductor
        level = self.tensor.level
        if gcd(level, abs(dk) * c) != 1:
            raise DomainError(
                "root number formula requires the form level to be coprime to "
                "the twist discriminant and conductor"
            )
        for f in self.tensor.factors:
            if any(e > 1 for _, e in factorize(f.level).factors):
                raise DomainError("factor levels must be squarefree")
        if self.basechange_conductor is None:
            self.basechange_conductor = float(level) ** 2
            self.basechange_is_default = True
        else:
            self.basechange_is_default = False
        self.group = build_class_group(dk, c)
        if self.character is not None and self.character.group is not self.group:
            raise DomainError("character belongs to a different class group")

    @property
    def rank(self) -> int:
        return self.tensor.rank

    @property
    def eta(self) -> QuadraticCharacter:
        return QuadraticCharacter(self.order.fundamental_discriminant)

    def conductor_sqrt(self, character_conductor: int | None = None) -> float:
        """Y = |D_K|^(r/2) * sqrt(c(Pi_K)) * c'^r."""
        r = self.rank
        cp = (
            self.order.conductor
            if character_conductor is None
            else character_conductor
        )
        return (
            abs(self.order.fundamental_discriminant) ** (r / 2.0)
            * math.sqrt(self.basechange_conductor)
            * float(cp) ** r
        )

    @property
    def Y(self) -> float:
        return self.conductor_sqrt()


def root_number(setup: RankinSetup) -> int:
    """eps(1/2) = eta(level) * prod of factor signs; k = 0 iff +1."""
    from .arith import kronecker

    eta_at_level = kronecker(setup.order.fundamental_discriminant, setup.tensor.level)
    if eta_at_level == 0:
        raise DomainError("level shares a factor with the discriminant")
    return int(eta_at_level) * setup.tensor.sign


def generic_parity(setup: RankinSetup) -> int:
    return 0 if root_number(setup) == +1 else 1


@dataclass
class CentralValueResult:
    value: float
    k: int
    Y: float
    root_number: int
    terms_used: int
    tail_estimate: float
    forced_parity: bool = False
    character_conductor: int | None = None


def afe_cutoff_length(Y: float) -> int:
    A = TOLERANCES["afe_truncation_A"]
    B = TOLERANCES["afe_truncation_B"]
    return int(A * Y * (math.log(Y) + B)) + 1


def character_coefficients(
    group: FormClassGroup, character: RingClassCharacter | None, nmax: int
) -> np.ndarray:
    """C_Omega(n) = sum_A r_A(n) Omega(A), real by conjugation symmetry."""
    R = group.representation_table(nmax)
    if character is None:
        vals = np.ones(group.h, dtype=np.complex128)
    else:
        vals = character.values()
    out = vals @ R.astype(np.complex128)
    scale = max(1.0, float(np.abs(out.real).max()))
    if float(np.abs(out.imag).max()) > 1e-9 * scale:
        raise NumericError("character coefficient sum is not real")
    return out.real


def coprime_mask(nmax: int, c: int) -> np.ndarray:
    mask = np.ones(nmax + 1, dtype=bool)
    if c > 1:
        idx = np.arange(nmax + 1)
        for p, _ in factorize(c).factors:
            mask &= idx % p != 0
    mask[0] = False
    return mask


def _afe_double_sum(
    eta_vals: np.ndarray,
    weights: np.ndarray,
    cutoff,
    Y: float,
    nmax: int,
) -> tuple[float, float, int]:
    """sum_m eta(m)/m sum_n w_n V(m^2 n / Y) truncated at m^2 n <= nmax.

    Returns (sum, half-cutoff difference, number of terms).
    """
    total = 0.0
    total_half = 0.0
    terms = 0
    m = 1
    ns = np.arange(nmax + 1, dtype=np.float64)
    while m * m <= nmax:
        em = eta_vals[m % len(eta_vals)] if len(eta_vals) > 1 else 1.0
        if em:
            ncut = nmax // (m * m)
            w = weights[: ncut + 1]
            nz = np.nonzero(w)[0]
            if len(nz):
                args = (m * m) * ns[nz] / Y
                vv = cutoff.bulk(args)
                contrib = w[nz] * vv
                s_full = float(np.sum(contrib))
                half_idx = nz <= nmax // (2 * m * m)
                s_half = float(np.sum(contrib[half_idx]))
                total += em / m * s_full
                total_half += em / m * s_half
                terms += int(len(nz))
        m += 1
    return total, abs(total - total_half), terms


def central_value(
    setup: RankinSetup,
    k: int | None = None,
    a: float = 0.25,
    arch: ArchFactor | None = None,
) -> CentralValueResult:
    """Central value (k=0) or central derivative (k=1) by the smoothed sum.

    With no explicit k the generic parity of the root number is used; forcing
    the opposite parity yields the symmetric-functional-equation zero and is
    reported with forced_parity=True.
    """
    eps = root_number(setup)
    kk = generic_parity(setup) if k is None else int(k)
    if kk not in (0, 1):
        raise DomainError("k must be 0 or 1")
    forced = (1 if eps == -1 else 0) != kk
    char_cond = (
        setup.character.conductor if setup.character is not None else 1
    )
    Y = setup.conductor_sqrt(char_cond)
    nmax = afe_cutoff_length(Y)
    if nmax > setup.tensor.p_max:
        raise CoverageError(
            f"cutoff length {nmax} exceeds coefficient coverage "
            f"{setup.tensor.p_max}",
            prime=None,
        )
    arch = arch or tensor_ring_class_arch(setup.tensor.weights)
    V = cutoff_function(kk, arch, a=a)
    cpi = setup.tensor.coefficient_table(nmax)
    com = character_coefficients(setup.group, setup.character, nmax)
    mask = coprime_mask(nmax, setup.order.conductor)
    ns = np.arange(nmax + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        weights = np.where(mask, cpi * com / np.sqrt(np.maximum(ns, 1.0)), 0.0)
    eta_vals = setup.eta.values(setup.eta.modulus - 1) if setup.eta.modulus > 1 else np.array([1.0])
    total, tail, terms = _afe_double_sum(eta_vals, weights, V, Y, nmax)
    pref = 1.0 + eps * (-1.0) ** kk
    return CentralValueResult(
        value=pref * total,
        k=kk,
        Y=Y,
        root_number=eps,
        terms_used=terms,
        tail_estimate=abs(pref) * tail,
        forced_parity=forced,
        character_conductor=char_cond,
    )
