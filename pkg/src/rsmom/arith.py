"""Exact integer arithmetic: factorization, divisors, Moebius, Kronecker.

All functions work on Python ints within 64-bit range; inputs outside
[1, 2^63-1] (or outside an operation's stated domain) raise DomainError
rather than wrapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

_INT64_MAX = 2**63 - 1

_WHEEL_LIMIT = 10_000_000


@dataclass(frozen=True)
class FactoredInt:
    """A positive integer together with its canonical factorization."""

    value: int
    factors: tuple[tuple[int, int], ...]  # (prime, exponent), primes increasing

    def __post_init__(self):
        prod = 1
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1:
                raise DomainError("factor list not canonical")
            last = p
            prod *= p**e
        if prod != self.value:
            raise DomainError("factorization does not multiply back to value")

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def divisors(self) -> list[int]:
        divs = [1]
        for p, e in self.factors:
            divs = [d * p**k for d in divs for k in range(e + 1)]
        divs.sort()
        return divs


@lru_cache(maxsize=None)
def primes_up_to(limit: int) -> tuple[int, ...]:
    """All primes <= limit, by sieve of Eratosthenes (numpy)."""
    if limit < 2:
        return ()
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(limit**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return tuple(int(p) for p in np.nonzero(sieve)[0])


def _is_probable_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    """Brent's cycle variant; n must be odd composite, not a prime power base case."""
    if n % 2 == 0:
        return 2
    for c in range(1, 100):
        x = y = 2
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d
    raise DomainError(f"factorization failed for {n}")


def factorize(n: int) -> FactoredInt:
    """Canonical factorization by wheel trial division with a rho fallback."""
    if not isinstance(n, (int, np.integer)):
        raise DomainError(f"factorize expects an integer, got {type(n).__name__}")
    n = int(n)
    if n < 1:
        raise DomainError(f"factorize requires n >= 1, got {n}")
    if n > _INT64_MAX:
        raise DomainError(f"factorize requires n < 2^63, got {n}")
    value = n
    factors: list[tuple[int, int]] = []
    for p in (2, 3, 5):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            factors.append((p, e))
    # wheel mod 30
    increments = (4, 2, 4, 2, 4, 6, 2, 6)
    p, i = 7, 0
    while p * p <= n and p <= _WHEEL_LIMIT:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            factors.append((p, e))
        p += increments[i]
        i = (i + 1) % 8
    if n > 1:
        # leftover is prime, a prime square, or needs rho
        stack = [n]
        found: dict[int, int] = {}
        while stack:
            m = stack.pop()
            if _is_probable_prime(m):
                found[m] = found.get(m, 0) + 1
                continue
            r = int(math.isqrt(m))
            if r * r == m:
                stack.extend([r, r])
                continue
            d = _pollard_rho(m)
            stack.extend([d, m // d])
        for q in sorted(found):
            factors.append((q, found[q]))
    factors.sort()
    return FactoredInt(value=value, factors=tuple(factors))


def moebius(n: int | FactoredInt) -> int:
    """mu(n): (-1)^(number of prime factors) on squarefree n, else 0."""
    f = n if isinstance(n, FactoredInt) else factorize(n)
    for _, e in f.factors:
        if e >= 2:
            return 0
    return -1 if len(f.factors) % 2 else 1


def divisors(n: int) -> list[int]:
    return factorize(n).divisors()


def radical(n: int) -> int:
    r = 1
    for p, _ in factorize(n).factors:
        r *= p
    return r


def is_squarefree(n: int) -> bool:
    return all(e == 1 for _, e in factorize(n).factors)


def is_fundamental_discriminant(d: int) -> bool:
    """d = 1 counts (trivial character); 0 does not."""
    if d == 1:
        return True
    if d == 0:
        return False
    if d % 4 == 1:
        return is_squarefree(abs(d))
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and is_squarefree(abs(m))
    return False


def _kronecker_any(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for arbitrary integers (standard extension)."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    sign = 1
    if n < 0:
        n = -n
        if a < 0:
            sign = -sign
    # factor out 2s from n
    e = 0
    while n % 2 == 0:
        n //= 2
        e += 1
    if e:
        if a % 2 == 0:
            return 0
        if e % 2 == 1 and a % 8 in (3, 5):
            sign = -sign
    a %= n
    # Jacobi on odd n via reciprocity
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                sign = -sign
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a, n = n % a, a
    return sign if n == 1 else 0


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for d a fundamental discriminant (or d = 1)."""
    if not is_fundamental_discriminant(d):
        raise DomainError(
            f"kronecker requires a fundamental discriminant (or 1), got {d}"
        )
    return _kronecker_any(d, n)


def kronecker_table(d: int) -> np.ndarray:
    """Values (d/r) for r = 0..|d|-1; (d/.) is |d|-periodic for fundamental d."""
    q = abs(d) if d != 1 else 1
    return np.array([kronecker(d, r) for r in range(q)], dtype=np.int8)


def gcd(a: int, b: int) -> int:
    return math.gcd(a, b)
