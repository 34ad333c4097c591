"""Hecke eigenvalue providers and tensor-product coefficients.

Eigenvalues are Deligne-normalized: |lambda(p)| <= 2 for the holomorphic
providers, the functional equation pivots at s = 1/2.  Values at prime powers
follow the recursion lambda(p^(j+1)) = lambda(p) lambda(p^j) - lambda(p^(j-1))
away from the level and the degenerate branch lambda(p^(j+1)) =
lambda(p) lambda(p^j) at primes dividing the level; composite arguments are
multiplicative.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .arith import factorize, primes_up_to
from .errors import CoverageError, DomainError
from .params import TOLERANCES


@dataclass
class EigenSystem:
    """Normalized Hecke eigenvalues lambda(p) for p <= p_max."""

    label: str
    weight: int
    level: int
    sign: int
    primes: np.ndarray          # int64, strictly increasing
    lam: np.ndarray             # float64, same length
    p_max: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise DomainError("sign must be +1 or -1")
        if len(self.primes) != len(self.lam):
            raise DomainError("primes and values have different lengths")
        if len(self.primes) and np.any(np.diff(self.primes) <= 0):
            raise DomainError("primes must be strictly increasing")
        self._pindex = {int(p): i for i, p in enumerate(self.primes)}
        self._table_cache: tuple[int, np.ndarray] | None = None

    def validate_deligne(self):
        bad = np.abs(self.lam) > 2.0 + TOLERANCES["deligne_slack"]
        if np.any(bad):
            p = int(self.primes[np.argmax(bad)])
            raise DomainError(
                f"eigenvalue at p={p} violates |lambda| <= 2: {self.lam[self._pindex[p]]}"
            )

    def lam_p(self, p: int) -> float:
        try:
            return float(self.lam[self._pindex[p]])
        except KeyError:
            raise CoverageError(
                f"prime {p} outside tabulated range of '{self.label}' (p_max={self.p_max})",
                prime=p,
            ) from None

    def lam_prime_power(self, p: int, e: int) -> float:
        lp = self.lam_p(p)
        if self.level % p == 0:
            return lp**e
        prev, cur = 1.0, lp
        for _ in range(e - 1):
            prev, cur = cur, lp * cur - prev
        return cur if e >= 1 else 1.0

    def coefficient(self, n: int) -> float:
        if n < 1:
            raise DomainError("eigenvalue argument must be >= 1")
        out = 1.0
        for p, e in factorize(n).factors:
            out *= self.lam_prime_power(p, e)
        return out

    def coefficient_table(self, nmax: int) -> np.ndarray:
        """lambda(n) for 0 <= n <= nmax by a vectorized multiplicative sieve."""
        nmax = int(nmax)
        if self._table_cache is not None and self._table_cache[0] >= nmax:
            return self._table_cache[1][: nmax + 1]
        if nmax > self.p_max:
            # composite n <= nmax may still be fine, but a prime beyond the
            # table would silently poison sums; refuse up front.
            ps = primes_up_to(nmax)
            if ps and ps[-1] > self.p_max:
                raise CoverageError(
                    f"table to {nmax} needs primes beyond p_max={self.p_max} "
                    f"of '{self.label}'",
                    prime=int(next(p for p in ps if p > self.p_max)),
                )
        out = np.ones(nmax + 1, dtype=np.float64)
        out[0] = 0.0
        residual = np.arange(nmax + 1, dtype=np.int64)
        for p in primes_up_to(nmax):
            lp = self.lam_p(int(p))
            # lambda at the prime powers p, p^2, ... <= nmax
            npow = int(math.log(nmax) / math.log(p)) + 1
            powers = [1.0, lp]
            if self.level % p == 0:
                for e in range(2, npow + 1):
                    powers.append(lp * powers[-1])
            else:
                for e in range(2, npow + 1):
                    powers.append(lp * powers[-1] - powers[-2])
            sel = np.arange(p, nmax + 1, p)
            m = residual[sel]
            e_vec = np.zeros(len(sel), dtype=np.int64)
            while True:
                mask = m % p == 0
                if not mask.any():
                    break
                m[mask] //= p
                e_vec[mask] += 1
            residual[sel] = m
            out[sel] *= np.asarray(powers)[e_vec]
        self._table_cache = (nmax, out)
        return out


@dataclass
class TensorCoefficients:
    """C(n) = prod_j lambda_j(n) for a tensor of eigensystems."""

    factors: list[EigenSystem]

    def __post_init__(self):
        if not self.factors:
            raise DomainError("tensor needs at least one factor")

    @property
    def rank(self) -> int:
        return 2 ** len(self.factors)

    @property
    def p_max(self) -> int:
        return min(f.p_max for f in self.factors)

    @property
    def label(self) -> str:
        return " (x) ".join(f.label for f in self.factors)

    @property
    def level(self) -> int:
        out = 1
        for f in self.factors:
            out *= f.level
        return out

    @property
    def sign(self) -> int:
        out = 1
        for f in self.factors:
            out *= f.sign
        return out

    @property
    def weights(self) -> list[int]:
        return [f.weight for f in self.factors]

    def coefficient(self, n: int) -> float:
        out = 1.0
        for f in self.factors:
            out *= f.coefficient(n)
        return out

    def coefficient_table(self, nmax: int) -> np.ndarray:
        out = self.factors[0].coefficient_table(nmax).copy()
        for f in self.factors[1:]:
            out *= f.coefficient_table(nmax)
        return out


# ---------------------------------------------------------------------------
# providers
# ---------------------------------------------------------------------------

_DELTA_CACHE: dict[int, EigenSystem] = {}


def delta_eigensystem(p_max: int = 10_000, use_disk_cache: bool = True) -> EigenSystem:
    """The weight-12 level-1 cusp form, lambda(p) = tau(p) / p^(11/2)."""
    if p_max > 2_100_000:
        raise DomainError("delta eigensystem supported up to p_max ~ 2.1e6")
    for have, es in _DELTA_CACHE.items():
        if have >= p_max:
            return es
    cache_file = None
    if use_disk_cache:
        cache_dir = os.environ.get(
            "RSMOM_CACHE_DIR", os.path.join(os.path.expanduser("~"), ".cache", "rsmom")
        )
        os.makedirs(cache_dir, exist_ok=True)
        cache_file = os.path.join(cache_dir, f"delta_{p_max}.npz")
        if os.path.exists(cache_file):
            data = np.load(cache_file)
            es = EigenSystem(
                "delta", 12, 1, +1, data["primes"], data["lam"], p_max
            )
            _DELTA_CACHE[p_max] = es
            return es
    from .tau import tau_primes

    primes, lam = tau_primes(p_max)
    es = EigenSystem("delta", 12, 1, +1, primes, lam, p_max)
    es.validate_deligne()
    if cache_file:
        np.savez_compressed(cache_file, primes=primes, lam=lam)
    _DELTA_CACHE[p_max] = es
    return es


def _point_count(a1: int, a2: int, a3: int, a4: int, a6: int, p: int) -> tuple[int, bool]:
    """(#nonsingular affine points of the reduced curve mod p, is_good).

    General Weierstrass equation y^2 + a1 x y + a3 y = x^3 + a2 x^2 + a4 x + a6.
    """
    pts = 0
    singular = _reduction_is_singular(a1, a2, a3, a4, a6, p)
    for x in range(p):
        rhs = (x * x * x + a2 * x * x + a4 * x + a6) % p
        lin = (a1 * x + a3) % p
        for y in range(p) if p == 2 else ():
            if (y * y + lin * y - rhs) % p == 0:
                if not singular or not _is_singular_point(a1, a2, a3, a4, a6, p, x, y):
                    pts += 1
        if p == 2:
            continue
        # complete the square: (2y + lin)^2 = 4 rhs + lin^2
        disc = (4 * rhs + lin * lin) % p
        if disc == 0:
            nsol = 1
        else:
            nsol = 1 + _legendre_symbol(disc, p)
        if nsol and singular:
            # enumerate explicitly to drop singular points (p small at bad primes)
            for y in range(p):
                if (y * y + lin * y - rhs) % p == 0:
                    if not _is_singular_point(a1, a2, a3, a4, a6, p, x, y):
                        pts += 1
        else:
            pts += nsol
    return pts, not singular


def _legendre_symbol(a: int, p: int) -> int:
    r = pow(a % p, (p - 1) // 2, p)
    return 1 if r == 1 else (-1 if r == p - 1 else 0)


def _reduction_is_singular(a1, a2, a3, a4, a6, p) -> bool:
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    disc = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    return disc % p == 0


def _is_singular_point(a1, a2, a3, a4, a6, p, x, y) -> bool:
    # partial derivatives of y^2 + a1 x y + a3 y - x^3 - a2 x^2 - a4 x - a6
    fx = (a1 * y - 3 * x * x - 2 * a2 * x - a4) % p
    fy = (2 * y + a1 * x + a3) % p
    return fx == 0 and fy == 0


def elliptic_eigensystem(
    coeffs: tuple[int, int, int, int, int] | tuple[int, int],
    p_max: int = 10_000,
    label: str = "curve",
    level: int | None = None,
    sign: int | None = None,
) -> EigenSystem:
    """Weight-2 eigensystem from point counts of a Weierstrass curve.

    `coeffs` is (a1, a2, a3, a4, a6) or the short form (a4, a6).  Good primes
    use #E(F_p) = p + 1 - a_p; bad primes use the nonsingular-point count
    (split/nonsplit multiplicative -> +-1, additive -> 0).  The level defaults
    to the radical of the discriminant (override for non-minimal models); the
    functional-equation sign is provider metadata and defaults to +1.
    """
    if p_max > 100_000:
        raise DomainError("elliptic point counting supported up to p_max = 1e5")
    if len(coeffs) == 2:
        a1, a2, a3, a4, a6 = 0, 0, 0, int(coeffs[0]), int(coeffs[1])
    else:
        a1, a2, a3, a4, a6 = (int(v) for v in coeffs)
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    disc = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    if disc == 0:
        raise DomainError("singular curve (discriminant zero)")
    if level is None:
        from .arith import radical

        level = radical(abs(disc))
    ps = primes_up_to(p_max)
    lam = np.empty(len(ps), dtype=np.float64)
    for i, p in enumerate(ps):
        pts, good = _point_count(a1, a2, a3, a4, a6, p)
        if good:
            a_p = p + 1 - (pts + 1)
        else:
            a_p = p - (pts + 1)  # a_p = p - #E_ns, #E_ns = affine + infinity
        lam[i] = a_p / math.sqrt(p)
    es = EigenSystem(label, 2, int(level), int(sign or +1), np.array(ps), lam, p_max)
    # Hasse bound check on the good primes only
    for i, p in enumerate(ps):
        if disc % p and abs(lam[i]) > 2.0 + 1e-9:
            raise DomainError(f"Hasse bound violated at p={p}")
    return es


BUILTIN_CURVES = {
    # label: (a1, a2, a3, a4, a6), level, sign of the functional equation
    "11a": ((0, -1, 1, -10, -20), 11, +1),
    "37a": ((0, 0, 1, -1, 0), 37, -1),
}


def builtin_eigensystem(name: str, p_max: int) -> EigenSystem:
    if name == "delta":
        return delta_eigensystem(p_max)
    if name in BUILTIN_CURVES:
        coeffs, level, sign = BUILTIN_CURVES[name]
        return elliptic_eigensystem(
            coeffs, p_max=min(p_max, 100_000), label=name, level=level, sign=sign
        )
    raise DomainError(f"unknown builtin form '{name}'")


# ---------------------------------------------------------------------------
# eigenvalue table file format
# ---------------------------------------------------------------------------


def save_eigensystem(es: EigenSystem, path: str):
    with open(path, "w") as fh:
        fh.write("# eigenvalue table\n")
        fh.write(f"label {es.label}\n")
        fh.write(f"weight {es.weight}\n")
        fh.write(f"level {es.level}\n")
        fh.write(f"sign {es.sign:+d}\n")
        for p, v in zip(es.primes, es.lam):
            fh.write(f"{int(p)} {float(v)!r}\n")


def load_eigensystem(path: str) -> EigenSystem:
    """Parse the ASCII table; errors carry 1-based line numbers."""
    header = {}
    primes: list[int] = []
    vals: list[float] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] in ("label", "weight", "level", "sign") and len(parts) == 2:
                header[parts[0]] = parts[1]
                continue
            if len(parts) != 2:
                raise DomainError(f"{path}:{lineno}: malformed line {raw!r}")
            try:
                p = int(parts[0])
                v = float(parts[1])
            except ValueError:
                raise DomainError(
                    f"{path}:{lineno}: malformed prime/value pair {raw!r}"
                ) from None
            if primes and p <= primes[-1]:
                raise DomainError(
                    f"{path}:{lineno}: primes not strictly increasing at {p}"
                )
            if abs(v) > 2.0 + TOLERANCES["deligne_slack"]:
                raise DomainError(
                    f"{path}:{lineno}: |lambda({p})| = {abs(v)} violates the bound 2"
                )
            primes.append(p)
            vals.append(v)
    if not primes:
        raise DomainError(f"{path}: no primes in table")
    missing = [k for k in ("label", "weight", "level", "sign") if k not in header]
    if missing:
        raise DomainError(f"{path}: missing header fields {missing}")
    return EigenSystem(
        label=header["label"],
        weight=int(header["weight"]),
        level=int(header["level"]),
        sign=int(header["sign"]),
        primes=np.array(primes, dtype=np.int64),
        lam=np.array(vals, dtype=np.float64),
        p_max=primes[-1],
    )
