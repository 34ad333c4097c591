"""Quadratic orders, form class groups, ring class characters, counting.

The class group Pic(O_c) of the order of conductor c inside the quadratic
field of fundamental discriminant D_K is realized as SL_2(Z)-classes of
primitive binary quadratic forms of discriminant D_K c^2 under Gauss
composition.  Characters are stored as exponent vectors against a computed
cyclic basis, so orthogonality and conductor computations are exact rational
phase arithmetic, never floats.

Representation counts r_A(n) are lattice enumerations (positive definite
forms give finite boxes); bulk variants fill numpy arrays for the moment
sums.  Real quadratic support is limited to Pell data and the principal-form
count inside the classical fundamental domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct

import numpy as np

from .arith import (
    divisors,
    factorize,
    is_fundamental_discriminant,
    kronecker,
)
from .errors import DomainError, StateError


def unit_count(disc: int) -> int:
    """Number of automorphs w for a definite discriminant (torsion for real)."""
    if disc >= 0:
        return 2
    if disc == -3:
        return 6
    if disc == -4:
        return 4
    return 2


# ---------------------------------------------------------------------------
# Pell
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PellSolution:
    x: int
    y: int
    d: int

    def __post_init__(self):
        if self.x * self.x - self.d * self.y * self.y not in (4, -4):
            raise DomainError("Pell data does not satisfy x^2 - D y^2 = +-4")

    @property
    def norm(self) -> int:
        return (self.x * self.x - self.d * self.y * self.y) // 4

    @property
    def epsilon(self) -> float:
        return (self.x + self.y * math.sqrt(self.d)) / 2.0

    @property
    def positive_automorph(self) -> float:
        """Fundamental totally positive (norm +1) unit: eps0 or eps0^2."""
        e = self.epsilon
        return e if self.norm == 1 else e * e


def pell_fundamental(d: int) -> PellSolution:
    """Fundamental solution of x^2 - d y^2 = +-4 (minimal y >= 1).

    Solves x^2 - m y^2 = +-1 by the PQa continued-fraction recurrence, then
    descends to the +-4 equation (the fundamental +-4 solution is either a
    cube root of the +-1 one, so has small y, or twice it).
    """
    if d <= 0:
        raise DomainError("pell_fundamental requires a positive discriminant")
    if d % 4 not in (0, 1):
        raise DomainError("discriminant must be 0 or 1 mod 4")
    r = math.isqrt(d)
    if r * r == d:
        raise DomainError("discriminant must not be a perfect square")

    def pqa_unit(m: int) -> tuple[int, int]:
        a0 = math.isqrt(m)
        p_prev, p = 1, a0
        q_prev, q = 0, 1
        pp, qq, a = 0, 1, a0
        while True:
            if p * p - m * q * q in (1, -1):
                return p, q
            pp = a * qq - pp
            qq = (m - pp * pp) // qq
            a = (a0 + pp) // qq
            p_prev, p = p, a * p + p_prev
            q_prev, q = q, a * q + q_prev

    if d % 4 == 0:
        x1, y1 = pqa_unit(d // 4)
        base = PellSolution(2 * x1, y1, d)
        cap = y1
    else:
        x1, y1 = pqa_unit(d)
        base = PellSolution(2 * x1, 2 * y1, d)
        cap = 2 * y1
    limit = min(cap, 2 * round(cap ** (1 / 3)) + 3)
    for y in range(1, limit + 1):
        for s in (-4, 4):
            t = d * y * y + s
            if t <= 0:
                continue
            x = math.isqrt(t)
            if x * x == t:
                return PellSolution(x, y, d)
    return base


# ---------------------------------------------------------------------------
# orders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadOrder:
    """The order Z + c*O_K of conductor c in the quadratic field of disc D_K."""

    fundamental_discriminant: int
    conductor: int
    pell: PellSolution | None = None

    def __post_init__(self):
        d = self.fundamental_discriminant
        if not is_fundamental_discriminant(d) or d == 1:
            raise DomainError(f"{d} is not a fundamental discriminant")
        if self.conductor < 1:
            raise DomainError("conductor must be >= 1")

    @property
    def discriminant(self) -> int:
        return self.fundamental_discriminant * self.conductor**2

    @property
    def is_imaginary(self) -> bool:
        return self.fundamental_discriminant < 0

    @property
    def unit_count(self) -> int:
        return unit_count(self.discriminant)

    def with_pell(self) -> "QuadOrder":
        if self.fundamental_discriminant < 0:
            raise DomainError("Pell data only exists for real quadratic orders")
        if self.pell is not None:
            return self
        return QuadOrder(
            self.fundamental_discriminant,
            self.conductor,
            pell_fundamental(self.discriminant),
        )


# ---------------------------------------------------------------------------
# binary forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinaryForm:
    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def value(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if self.discriminant >= 0:
            raise DomainError("reduction test implemented for definite forms only")
        return (abs(b) <= a <= c) and (b >= 0 or (abs(b) < a and a < c))

    def reduced(self) -> "BinaryForm":
        """Classical reduction for positive definite forms."""
        a, b, c = self.a, self.b, self.c
        if self.discriminant >= 0 or a <= 0:
            raise DomainError("can only reduce positive definite forms")
        while True:
            if c < a:
                a, b, c = c, -b, a
                continue
            if b > a or b <= -a:
                r = (a - b) // (2 * a)  # shift b into (-a, a]
                b, c = b + 2 * r * a, a * r * r + b * r + c
                continue
            break
        if b < 0 and (a == c or b == -a):
            b = -b
        if a == c and b < 0:
            b = -b
        return BinaryForm(a, b, c)

    def inverse(self) -> "BinaryForm":
        return BinaryForm(self.a, -self.b, self.c).reduced()


def principal_form(disc: int) -> BinaryForm:
    b = disc % 2
    return BinaryForm(1, b, (b * b - disc) // 4)


def _solve_mod(a: int, b: int, m: int) -> tuple[int, int]:
    """Smallest x >= 0 with a*x = b (mod m), plus the solution period."""
    if m == 1:
        return 0, 1
    g = math.gcd(a, m)
    if b % g:
        raise DomainError("composition congruence has no solution")
    mg = m // g
    x = (b // g) * pow(a // g, -1, mg) % mg
    return x, mg


def compose(f: BinaryForm, g: BinaryForm) -> BinaryForm:
    """Gauss composition (Shanks-style solution of the composition system)."""
    if f.discriminant != g.discriminant:
        raise DomainError("cannot compose forms of different discriminants")
    a1, b1, c1 = f.a, f.b, f.c
    a2, b2, c2 = g.a, g.b, g.c
    gg = (b2 + b1) // 2
    hh = (b2 - b1) // 2
    w = math.gcd(math.gcd(a1, a2), gg)
    s = a1 // w
    t = a2 // w
    u = gg // w
    k0, period = _solve_mod(t * u, hh * u + s * c1, s * t)
    n0, _ = _solve_mod(t * period, hh - t * k0, s)
    k = k0 + period * n0
    ell = (t * k - hh) // s
    m = (t * u * k - hh * u - s * c1) // (s * t)
    a3 = s * t
    b3 = w * u - (k * t + ell * s)
    c3 = k * ell - w * m
    out = BinaryForm(a3, b3, c3)
    if out.discriminant != f.discriminant:
        raise DomainError("composition changed the discriminant")
    return out.reduced()


def reduced_forms(disc: int) -> list[BinaryForm]:
    """All reduced primitive positive definite forms of discriminant disc."""
    if disc >= 0 or disc % 4 not in (0, 1):
        raise DomainError(f"need a negative discriminant = 0,1 mod 4, got {disc}")
    forms = []
    amax = math.isqrt(-disc // 3)
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            num = b * b - disc
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a:
                continue
            if b < 0 and a == c:
                continue
            if math.gcd(math.gcd(a, abs(b)), c) != 1:
                continue
            forms.append(BinaryForm(a, b, c))
    forms.sort(key=lambda f: (f.a, f.b, f.c))
    return forms


# ---------------------------------------------------------------------------
# abelian structure from the multiplication table
# ---------------------------------------------------------------------------


def _table_power(table: np.ndarray, identity: int, g: int, e: int) -> int:
    acc, base = identity, g
    while e:
        if e & 1:
            acc = int(table[acc, base])
        base = int(table[base, base])
        e >>= 1
    return acc


def _p_group_basis(table: np.ndarray, identity: int) -> tuple[list[int], list[int]]:
    """Cyclic basis of an abelian p-group given by its multiplication table.

    Greedy maximal-coset-order decomposition with the standard lift; exact.
    """
    n = table.shape[0]
    if n == 1:
        return [], []

    def power(g, e):
        return _table_power(table, identity, g, e)

    def order(g):
        o, x = 1, g
        while x != identity:
            x = int(table[x, g])
            o += 1
        return o

    inv = [power(g, order(g) - 1) for g in range(n)]

    basis: list[int] = []
    orders: list[int] = []
    span: dict[int, tuple[int, ...]] = {identity: ()}

    while len(span) < n:
        best, best_k = None, 0
        for g in range(n):
            if g in span:
                continue
            x, k = g, 1
            while x not in span:
                x = int(table[x, g])
                k += 1
            if k > best_k:
                best, best_k = g, k
        g, k = best, best_k
        rem = span[power(g, k)]
        adj = g
        for b, m in zip(basis, rem):
            if m % k != 0:
                raise DomainError("abelian basis lift failed")
            adj = int(table[adj, power(inv[b], m // k)])
        if power(adj, k) != identity:
            raise DomainError("abelian basis adjustment failed")
        new_span: dict[int, tuple[int, ...]] = {}
        for e in range(k):
            ge = power(adj, e)
            for elt, vec in span.items():
                new_span[int(table[elt, ge])] = vec + (e,)
        if len(new_span) != len(span) * k:
            raise DomainError("abelian basis span collision")
        span = new_span
        basis.append(adj)
        orders.append(k)
    pairs = sorted(zip(orders, basis), reverse=True)
    return [b for _, b in pairs], [o for o, _ in pairs]


def _abelian_basis(table: np.ndarray, identity: int) -> tuple[list[int], list[int]]:
    """Cyclic basis (elements, orders) of a finite abelian group."""
    h = table.shape[0]
    if h == 1:
        return [], []
    basis: list[int] = []
    orders: list[int] = []
    for p, _ in factorize(h).factors:
        cof = h
        while cof % p == 0:
            cof //= p
        syl = sorted({_table_power(table, identity, g, cof) for g in range(h)})
        idx = {g: i for i, g in enumerate(syl)}
        sub = np.array(
            [[idx[int(table[x, y])] for y in syl] for x in syl], dtype=np.int32
        )
        sb, so = _p_group_basis(sub, idx[identity])
        basis.extend(syl[b] for b in sb)
        orders.extend(so)
    return basis, orders


def invariant_factors(cyclic_orders: list[int]) -> list[int]:
    """Elementary divisors d1 | d2 | ... from a list of cyclic orders."""
    if not cyclic_orders:
        return []
    per_prime: dict[int, list[int]] = {}
    for o in cyclic_orders:
        for p, e in factorize(o).factors:
            per_prime.setdefault(p, []).append(e)
    depth = max(len(v) for v in per_prime.values())
    out = []
    for rank in range(depth):
        d = 1
        for p, exps in per_prime.items():
            exps_sorted = sorted(exps, reverse=True)
            if rank < len(exps_sorted):
                d *= p ** exps_sorted[rank]
        out.append(d)
    out.sort()
    return out


# ---------------------------------------------------------------------------
# characters
# ---------------------------------------------------------------------------


class RingClassCharacter:
    """A character of Pic(O_c), stored as exponents against the cyclic basis.

    Values are the exact roots of unity exp(2 pi i * phase(A)) with phase a
    Fraction; complex numbers are materialized only at evaluation time.
    """

    def __init__(self, group: "FormClassGroup", exponents: tuple[int, ...]):
        self.group = group
        self.exponents = exponents
        self._conductor: int | None = None

    def phase(self, class_index: int) -> Fraction:
        dlog = self.group.dlog[class_index]
        total = Fraction(0)
        for e, x, n in zip(self.exponents, dlog, self.group.cyclic_orders):
            total += Fraction(e * x, n)
        return total % 1

    def value(self, class_index: int) -> complex:
        ph = float(self.phase(class_index))
        return complex(math.cos(2 * math.pi * ph), math.sin(2 * math.pi * ph))

    def values(self) -> np.ndarray:
        return np.array([self.value(i) for i in range(self.group.h)])

    @property
    def is_trivial(self) -> bool:
        return all(
            e % n == 0 for e, n in zip(self.exponents, self.group.cyclic_orders)
        )

    def conjugate(self) -> "RingClassCharacter":
        return RingClassCharacter(
            self.group,
            tuple(
                (-e) % n for e, n in zip(self.exponents, self.group.cyclic_orders)
            ),
        )

    def __mul__(self, other: "RingClassCharacter") -> "RingClassCharacter":
        if other.group is not self.group:
            raise DomainError("characters of different groups")
        return RingClassCharacter(
            self.group,
            tuple(
                (e1 + e2) % n
                for e1, e2, n in zip(
                    self.exponents, other.exponents, self.group.cyclic_orders
                )
            ),
        )

    @property
    def conductor(self) -> int:
        """Smallest c' | c such that the character factors through Pic(O_c')."""
        if self._conductor is None:
            for cp in divisors(self.group.order.conductor):
                kernel = self.group.descent_kernel(cp)
                if all(self.phase(a) == 0 for a in kernel):
                    self._conductor = cp
                    break
        return self._conductor


# ---------------------------------------------------------------------------
# the class group
# ---------------------------------------------------------------------------


class FormClassGroup:
    """Pic(O_c) as reduced forms of discriminant D_K c^2 with Gauss composition."""

    def __init__(self, d_k: int, c: int, verify: bool = True):
        if d_k >= 0:
            raise DomainError(
                "form class groups are implemented for imaginary fields only"
            )
        if not is_fundamental_discriminant(d_k):
            raise DomainError(f"{d_k} is not a fundamental discriminant")
        if c < 1:
            raise DomainError("conductor must be >= 1")
        self.order = QuadOrder(d_k, c)
        self.disc = self.order.discriminant
        self.forms = reduced_forms(self.disc)
        self.h = len(self.forms)
        self._index = {(f.a, f.b, f.c): i for i, f in enumerate(self.forms)}
        pf = principal_form(self.disc)
        self.principal_index = self._index[(pf.a, pf.b, pf.c)]
        self._table: np.ndarray | None = None
        self._cyclic_basis: list[int] | None = None
        self._cyclic_orders: list[int] | None = None
        self._dlog: list[tuple[int, ...]] | None = None
        self._characters: list[RingClassCharacter] | None = None
        self._descent: dict[int, list[int]] = {}
        self._descent_kernel: dict[int, list[int]] = {}
        self._rep_cache: tuple[int, np.ndarray] | None = None
        self._verify = verify

    # -- group law -----------------------------------------------------------

    def index_of(self, f: BinaryForm) -> int:
        r = f.reduced()
        try:
            return self._index[(r.a, r.b, r.c)]
        except KeyError:
            raise DomainError(f"form {r} not of discriminant {self.disc}") from None

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            h = self.h
            t = np.zeros((h, h), dtype=np.int32)
            for i in range(h):
                for j in range(i, h):
                    k = self.index_of(compose(self.forms[i], self.forms[j]))
                    t[i, j] = t[j, i] = k
            self._table = t
            if self._verify:
                self._verify_group_law()
        return self._table

    def _verify_group_law(self):
        t = self._table
        e = self.principal_index
        if not np.all(t[e, :] == np.arange(self.h)):
            raise DomainError("principal form is not an identity under composition")
        h = self.h
        if h <= 40:
            triples = (
                (i, j, k) for i in range(h) for j in range(h) for k in range(h)
            )
        else:
            rng = np.random.default_rng(h)
            triples = (tuple(rng.integers(0, h, 3)) for _ in range(2000))
        for i, j, k in triples:
            if t[t[i, j], k] != t[i, t[j, k]]:
                raise DomainError("composition is not associative")

    def compose_indices(self, i: int, j: int) -> int:
        return int(self.table[i, j])

    def inverse_index(self, i: int) -> int:
        return self.index_of(self.forms[i].inverse())

    def power_index(self, i: int, e: int) -> int:
        return _table_power(self.table, self.principal_index, i, e)

    # -- structure and characters ---------------------------------------------

    def _ensure_structure(self):
        if self._cyclic_orders is not None:
            return
        basis, orders = _abelian_basis(self.table, self.principal_index)
        dlog: list[tuple[int, ...] | None] = [None] * self.h
        for vec in iproduct(*[range(o) for o in orders]):
            g = self.principal_index
            for b, e in zip(basis, vec):
                g = self.compose_indices(g, self.power_index(b, e))
            if dlog[g] is not None:
                raise DomainError("cyclic basis is not a direct sum")
            dlog[g] = vec
        if any(v is None for v in dlog):
            raise DomainError("cyclic basis does not span the class group")
        self._cyclic_basis, self._cyclic_orders, self._dlog = basis, orders, dlog

    @property
    def cyclic_orders(self) -> list[int]:
        self._ensure_structure()
        return self._cyclic_orders

    @property
    def generators(self) -> list[int]:
        self._ensure_structure()
        return self._cyclic_basis

    @property
    def structure(self) -> list[int]:
        """Elementary divisors d1 | d2 | ... (empty for the trivial group)."""
        return invariant_factors(self.cyclic_orders)

    @property
    def dlog(self) -> list[tuple[int, ...]]:
        self._ensure_structure()
        return self._dlog

    def characters(self) -> list[RingClassCharacter]:
        """All h characters; trivial first, then ordered by exponent tuple."""
        if self._characters is None:
            self._ensure_structure()
            chars = [
                RingClassCharacter(self, tuple(vec))
                for vec in iproduct(*[range(n) for n in self.cyclic_orders])
            ]
            chars.sort(key=lambda ch: (not ch.is_trivial, ch.exponents))
            self._characters = chars
        return self._characters

    # -- descent to smaller conductor ------------------------------------------

    def descent_map(self, cp: int) -> list[int]:
        """Image class in Pic(O_cp) of each class, via ideal extension.

        An O_c-ideal attached to a form is extended to the overorder O_cp and
        converted back to a form, all in exact integer arithmetic.
        """
        c = self.order.conductor
        if c % cp != 0:
            raise DomainError(f"{cp} does not divide the conductor {c}")
        if cp not in self._descent:
            target = build_class_group(self.order.fundamental_discriminant, cp)
            mapped = [
                target.index_of(_extend_ideal_form(f, self.order, cp))
                for f in self.forms
            ]
            self._descent[cp] = mapped
            if self._verify:
                t, tt = self.table, target.table
                step = max(1, self.h // 8)
                for i in range(0, self.h, step):
                    for j in range(0, self.h, step):
                        if mapped[t[i, j]] != tt[mapped[i], mapped[j]]:
                            raise DomainError("ideal descent is not a homomorphism")
        return self._descent[cp]

    def descent_kernel(self, cp: int) -> list[int]:
        if cp not in self._descent_kernel:
            target = build_class_group(self.order.fundamental_discriminant, cp)
            mapped = self.descent_map(cp)
            self._descent_kernel[cp] = [
                i for i, m in enumerate(mapped) if m == target.principal_index
            ]
        return self._descent_kernel[cp]

    # -- counting ----------------------------------------------------------------

    def representation_table(self, nmax: int) -> np.ndarray:
        """R[A, n] = r_A(n) for 0 <= n <= nmax, by one lattice sweep per class."""
        nmax = int(nmax)
        if self._rep_cache is not None and self._rep_cache[0] >= nmax:
            return self._rep_cache[1][:, : nmax + 1]
        w = self.order.unit_count
        absd = -self.disc
        R = np.zeros((self.h, nmax + 1), dtype=np.int64)
        for idx, f in enumerate(self.forms):
            a, b, c = f.a, f.b, f.c
            ymax = math.isqrt(4 * a * nmax // absd) + 1
            for y in range(-ymax, ymax + 1):
                disc_x = b * b * y * y - 4 * a * (c * y * y - nmax)
                if disc_x < 0:
                    continue
                root = math.isqrt(disc_x)
                lo = (-b * y - root) // (2 * a) - 1
                hi = (-b * y + root) // (2 * a) + 1
                xs = np.arange(lo, hi + 1, dtype=np.int64)
                vals = a * xs * xs + (b * y) * xs + c * y * y
                vals = vals[(vals >= 0) & (vals <= nmax)]
                np.add.at(R[idx], vals, 1)
        R[:, 0] = 0
        if np.any(R % w):
            raise DomainError("representation count not divisible by unit count")
        R //= w
        self._rep_cache = (nmax, R)
        return R

    def count_representations(self, class_index: int, n: int) -> int:
        """r_A(n): representations of n by the class's form modulo automorphs."""
        if n <= 0:
            raise DomainError("count_representations requires n >= 1")
        return int(self.representation_table(n)[class_index, n])

    def total_count_table(self, nmax: int) -> np.ndarray:
        """r_c(n) = sum over classes."""
        return self.representation_table(nmax).sum(axis=0)

    def principal_count_table(self, nmax: int) -> np.ndarray:
        return self.representation_table(nmax)[self.principal_index].copy()

    # -- genus -------------------------------------------------------------------

    def principal_genus_indices(self) -> list[int]:
        """Classes in the genus of the principal form, via assigned characters.

        Cross-checked against the squares subgroup (principal genus theorem).
        """
        chars = assigned_genus_characters(self.disc)
        out = []
        for i, f in enumerate(self.forms):
            v = _coprime_value(f, self.disc)
            if all(ch(v) == 1 for ch in chars):
                out.append(i)
        squares = sorted({self.compose_indices(i, i) for i in range(self.h)})
        if sorted(out) != squares:
            raise DomainError(
                "assigned genus characters disagree with the squares subgroup"
            )
        return out

    def genus_average(self, n: int) -> Fraction:
        genus = self.principal_genus_indices()
        R = self.representation_table(n)
        return Fraction(int(R[genus, n].sum()), len(genus))

    def genus_average_table(self, nmax: int) -> np.ndarray:
        genus = self.principal_genus_indices()
        R = self.representation_table(nmax)
        return R[genus].sum(axis=0) / float(len(genus))


def _coprime_value(f: BinaryForm, disc: int) -> int:
    """Some value of f coprime to 2*disc (exists for primitive forms)."""
    target = abs(2 * disc)
    for x in range(1, 64):
        for y in range(0, 64):
            v = f.value(x, y)
            if v != 0 and math.gcd(v, target) == 1:
                return v
    raise DomainError("no represented value coprime to the discriminant found")


def assigned_genus_characters(disc: int):
    """Assigned characters of a negative discriminant (classical table).

    Legendre symbols at odd primes dividing disc; for disc = -4n additionally
    delta(v) = (-1)^((v-1)/2) and/or eps(v) = (-1)^((v^2-1)/8) keyed on n mod 8.
    """
    if disc >= 0:
        raise DomainError("genus characters implemented for negative discriminants")
    chars = []
    for p, _ in factorize(-disc).factors:
        if p % 2 == 1:
            chars.append(lambda v, p=p: _legendre(v, p))
    if disc % 4 == 0:
        n = (-disc) // 4
        n8 = n % 8
        delta = lambda v: -1 if v % 4 == 3 else 1
        eps = lambda v: -1 if v % 8 in (3, 5) else 1
        if n8 in (1, 5, 4):
            chars.append(delta)
        elif n8 == 2:
            chars.append(lambda v: delta(v) * eps(v))
        elif n8 == 6:
            chars.append(eps)
        elif n8 == 0:
            chars.append(delta)
            chars.append(eps)
        # n8 in (3, 7): no extra character
    return chars


def _legendre(v: int, p: int) -> int:
    r = pow(v % p, (p - 1) // 2, p)
    return 1 if r == 1 else (-1 if r == p - 1 else 0)


# ---------------------------------------------------------------------------
# ideal extension O_c -> O_cp (for descent maps)
# ---------------------------------------------------------------------------


def _extend_ideal_form(f: BinaryForm, order: QuadOrder, cp: int) -> BinaryForm:
    """Form of discriminant D_K cp^2 in the class of (ideal of f) * O_cp.

    Elements of K are pairs (x, y) = x + y*w with w = (D_K + sqrt(D_K))/2,
    w^2 = D_K w - (D_K^2 - D_K)/4; everything stays in exact integers.
    """
    dk = order.fundamental_discriminant
    c = order.conductor
    wnorm = (dk * dk - dk) // 4

    def mul(u, v):
        x1, y1 = u
        x2, y2 = v
        return (x1 * x2 - y1 * y2 * wnorm, x1 * y2 + y1 * x2 + y1 * y2 * dk)

    a, b = f.a, f.b
    g1 = (a, 0)
    g2 = ((-b - c * dk) // 2, c)  # (-b + c*sqrt(D_K))/2 rewritten via w
    gens = [g1, g2, mul(g1, (0, cp)), mul(g2, (0, cp))]
    alpha, beta = _module_hnf(gens)
    if alpha[0] * beta[1] - alpha[1] * beta[0] < 0:
        beta = (-beta[0], -beta[1])
    det = alpha[0] * beta[1] - alpha[1] * beta[0]
    if det % cp:
        raise DomainError("extended module is not an O_cp-ideal")
    nid = det // cp
    na = _norm(alpha, dk, wnorm)
    nb = _norm(beta, dk, wnorm)
    tr = _trace_prod(alpha, beta, dk, wnorm)
    if na % nid or nb % nid or tr % nid:
        raise DomainError("ideal norm does not divide the form coefficients")
    A, B, C = na // nid, tr // nid, nb // nid
    if B * B - 4 * A * C != dk * cp * cp:
        raise DomainError("ideal extension produced a wrong discriminant")
    if A < 0:
        A, B, C = -A, -B, -C
    return BinaryForm(A, B, C).reduced()


def _module_hnf(gens) -> tuple[tuple[int, int], tuple[int, int]]:
    """Basis [(a, 0), (bx, by)] of the Z-module in Z^2 spanned by gens."""
    rows = [g for g in gens if g != (0, 0)]
    piv = None
    for r in rows:
        if r[1] == 0:
            continue
        if piv is None:
            piv = r
            continue
        # euclid on the second coordinate
        x1, y1 = piv
        x2, y2 = r
        while y2:
            q = y1 // y2
            x1, y1, x2, y2 = x2, y2, x1 - q * x2, y1 - q * y2
        piv = (x1, y1)
        if x2:
            rows.append((x2, 0))
    if piv is None:
        raise DomainError("ideal module is not full rank")
    # clear second coordinates of the remaining rows against the pivot
    xs = []
    for r in rows:
        if r[1] == 0:
            if r[0]:
                xs.append(abs(r[0]))
            continue
        q = r[1] // piv[1]
        rest = (r[0] - q * piv[0], r[1] - q * piv[1])
        if rest[1] != 0:
            raise DomainError("module reduction failed")
        if rest[0]:
            xs.append(abs(rest[0]))
    if not xs:
        raise DomainError("ideal module is not full rank")
    a = 0
    for x in xs:
        a = math.gcd(a, x)
    bx, by = piv
    if by < 0:
        bx, by = -bx, -by
    bx %= a
    return (a, 0), (bx, by)


def _norm(u, dk, wnorm):
    x, y = u
    return x * x + x * y * dk + y * y * wnorm


def _trace_prod(u, v, dk, wnorm):
    x1, y1 = u
    x2, y2 = v
    return 2 * x1 * x2 + (x1 * y2 + x2 * y1) * dk + 2 * y1 * y2 * wnorm


# ---------------------------------------------------------------------------
# public constructors / formulas
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def build_class_group(d_k: int, c: int) -> FormClassGroup:
    return FormClassGroup(d_k, c)


@lru_cache(maxsize=None)
def dedekind_class_number(d_k: int, c: int) -> int:
    """h(O_c) = h(O_K) * c / [O_K^* : O_c^*] * prod_{p | c} (1 - (D_K/p)/p)."""
    if d_k >= 0:
        raise DomainError("class number formula implemented for imaginary fields")
    if not is_fundamental_discriminant(d_k):
        raise DomainError(f"{d_k} is not a fundamental discriminant")
    h_k = len(reduced_forms(d_k))
    if c == 1:
        return h_k
    unit_index = unit_count(d_k) // 2  # [O_K^* : O_c^*]; w_c = 2 once c > 1
    num = h_k * c
    den = unit_index
    for p, _ in factorize(c).factors:
        num *= p - kronecker(d_k, p)
        den *= p
    if num % den:
        raise DomainError("class number formula did not yield an integer")
    return num // den


def count_principal_real(
    d_k: int, n: int, pell: PellSolution | None = None
) -> int:
    """Representations of n by the principal indefinite form inside the
    fundamental domain a + z b > 0, 1 <= (a + zbar b)/(a + z b) < eps^2,
    eps the fundamental norm-one automorph.

    The positivity condition already identifies (a, b) with (-a, -b), so the
    returned count is the counting-function value itself.
    """
    if d_k <= 0:
        raise DomainError("count_principal_real requires a real quadratic field")
    if not is_fundamental_discriminant(d_k):
        raise DomainError(f"{d_k} is not a fundamental discriminant")
    if n <= 0:
        raise DomainError("n must be positive")
    if pell is None:
        raise StateError("Pell data required; call pell_fundamental first")
    b0 = d_k % 2
    c0 = (b0 * b0 - d_k) // 4
    sq = math.sqrt(d_k)
    z = (b0 + sq) / 2.0
    zbar = (b0 - sq) / 2.0
    eps = pell.positive_automorph
    eps2 = eps * eps
    bound = int(10 * math.sqrt(n * pell.epsilon)) + 2
    count = 0
    for a in range(-bound, bound + 1):
        for b in range(-bound, bound + 1):
            if a * a + b0 * a * b + c0 * b * b != n:
                continue
            u = a + z * b
            if u <= 0:
                continue
            ratio = (a + zbar * b) / u
            if 1.0 - 1e-9 <= ratio < eps2 * (1.0 - 1e-12):
                count += 1
    return count


def total_ideal_count_oracle(d_k: int, n: int) -> int:
    """sum_{d | n} (D_K/d): classical total ideal count for gcd(n, D_K) = 1."""
    return sum(kronecker(d_k, d) for d in divisors(n))
