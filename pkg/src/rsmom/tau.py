"""Ramanujan tau values from the weight-12 eta-product q-expansion.

Delta = q * prod (1-q^n)^24 = q * (eta-cube)^8.  The eta cube is the sparse
Jacobi series sum_k (-1)^k (2k+1) q^(k(k+1)/2); squaring it once fits in
int64, and the two remaining squarings are done as exact integer polynomial
products via Kronecker substitution (pack coefficients into one huge integer,
multiply, unpack).  gmpy2 supplies FFT-based bignum multiplication when
available; plain Python ints are a slower fallback.

Everything is exact integer arithmetic end to end; floats appear only when
the caller normalizes tau(p)/p^(11/2).
"""

from __future__ import annotations

import math

import numpy as np

try:
    import gmpy2

    _mpz = gmpy2.mpz
except ImportError:  # pragma: no cover - gmpy2 is expected in production
    _mpz = int


def _eta_cube(nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and coefficients of sum (-1)^k (2k+1) q^(k(k+1)/2), up to nmax."""
    ks = np.arange(0, math.isqrt(8 * nmax + 1) // 2 + 2, dtype=np.int64)
    idx = ks * (ks + 1) // 2
    keep = idx <= nmax
    ks, idx = ks[keep], idx[keep]
    coef = np.where(ks % 2 == 0, 2 * ks + 1, -(2 * ks + 1)).astype(np.int64)
    return idx, coef


def _sparse_square(idx: np.ndarray, coef: np.ndarray, nmax: int) -> np.ndarray:
    """Dense coefficients of the square of a sparse series, int64 exact."""
    i = idx[:, None] + idx[None, :]
    c = coef[:, None] * coef[None, :]
    keep = i <= nmax
    return np.bincount(i[keep].ravel(), weights=c[keep].ravel(), minlength=nmax + 1).astype(
        np.int64
    )


def _pack(arr: np.ndarray, limb_bytes: int):
    """Pack a nonnegative int64 array into one little-endian integer."""
    n = len(arr)
    buf = np.zeros((n, limb_bytes), dtype=np.uint8)
    v = arr.astype(np.uint64)
    for k in range(8):
        buf[:, k] = (v >> np.uint64(8 * k)).astype(np.uint8)
    return _mpz(int.from_bytes(buf.tobytes(), "little"))


def _to_le_bytes(total, min_len: int) -> bytes:
    total = int(total)
    need = max((total.bit_length() + 7) // 8, min_len)
    return total.to_bytes(need, "little")


def _unpack_int64(total, n_out: int, limb_bytes: int) -> np.ndarray:
    """Unpack a product integer into int64 coefficients (must fit; checked)."""
    blob = _to_le_bytes(total, n_out * limb_bytes)
    mat = np.frombuffer(blob[: n_out * limb_bytes], dtype=np.uint8).reshape(
        n_out, limb_bytes
    )
    if limb_bytes > 8 and mat[:, 8:].any():
        raise OverflowError("limb overflow while unpacking int64 coefficients")
    out = np.zeros(n_out, dtype=np.uint64)
    for k in range(min(8, limb_bytes)):
        out |= mat[:, k].astype(np.uint64) << np.uint64(8 * k)
    if np.any(out >> np.uint64(63)):
        raise OverflowError("coefficient exceeds int64 while unpacking")
    return out.astype(np.int64)


def _unpack_rows(total, n_out: int, limb_bytes: int) -> np.ndarray:
    """Unpack into a byte matrix for per-index big-integer reconstruction."""
    blob = _to_le_bytes(total, n_out * limb_bytes)
    return np.frombuffer(blob[: n_out * limb_bytes], dtype=np.uint8).reshape(
        n_out, limb_bytes
    ).copy()


def _limb_bytes_for(a: np.ndarray, b: np.ndarray) -> int:
    """Bytes per limb so that every convolution coefficient of |a|*|b| fits."""
    bound = int(np.abs(a).max()) * int(np.abs(b).sum())
    bound = max(bound, int(np.abs(b).max()) * int(np.abs(a).sum()), 1)
    return max(9, (bound.bit_length() + 9) // 8 + 1)


def _signed_product_rows(a: np.ndarray, b: np.ndarray, nmax: int):
    """Byte matrices (pos, neg) with conv(a,b)[n] = int(pos[n]) - int(neg[n])."""
    limb = _limb_bytes_for(a, b)
    ap, an = np.maximum(a, 0), np.maximum(-a, 0)
    bp, bn = np.maximum(b, 0), np.maximum(-b, 0)
    n_out = nmax + 1
    packed = {}
    for name, arr in (("ap", ap), ("an", an), ("bp", bp), ("bn", bn)):
        packed[name] = _pack(arr, limb)
    pos = packed["ap"] * packed["bp"] + packed["an"] * packed["bn"]
    neg = packed["ap"] * packed["bn"] + packed["an"] * packed["bp"]
    return _unpack_rows(pos, n_out, limb), _unpack_rows(neg, n_out, limb), limb


def _signed_square_int64(a: np.ndarray, nmax: int) -> np.ndarray:
    """conv(a, a) truncated to nmax, exact int64 (raises on overflow)."""
    limb = _limb_bytes_for(a, a)
    ap, an = np.maximum(a, 0), np.maximum(-a, 0)
    p = _pack(ap, limb)
    q = _pack(an, limb)
    pos = _unpack_int64(p * p + q * q, nmax + 1, limb)
    neg = _unpack_int64(2 * (p * q), nmax + 1, limb)
    return pos - neg


def _row_int(row: np.ndarray) -> int:
    return int.from_bytes(row.tobytes(), "little")


def tau_values(indices, nmax: int) -> dict[int, int]:
    """Exact tau(n) for each n in `indices` (all <= nmax)."""
    if nmax < 1:
        return {}
    # Delta = q * (eta^3)^8; work with the weight offset: coefficient of q^n in
    # Delta is the coefficient of q^(n-1) in (eta^3)^8.
    m = nmax - 1
    idx, coef = _eta_cube(m)
    b = _sparse_square(idx, coef, m)          # (eta^3)^2, int64
    c = _signed_square_int64(b, m)            # (eta^3)^4, int64
    pos, neg, _ = _signed_product_rows(c, c, m)  # (eta^3)^8, big ints
    out = {}
    for n in indices:
        if not 1 <= n <= nmax:
            raise ValueError(f"tau index {n} outside table range")
        k = n - 1
        out[n] = _row_int(pos[k]) - _row_int(neg[k])
    return out


def tau_primes(nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """(primes <= nmax, normalized tau(p)/p^(11/2)) as float64 arrays."""
    from .arith import primes_up_to

    ps = primes_up_to(nmax)
    table = tau_values(ps, nmax)
    lam = np.array(
        [table[p] / (float(p) ** 5.5) for p in ps], dtype=np.float64
    )
    return np.array(ps, dtype=np.int64), lam


TAU_FIRST_24 = [
    1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920,
    534612, -370944, -577738, 401856, 1217160, 987136, -6905934, 2727432,
    10661420, -7109760, -4219488, -12830688, 18643272, 21288960,
]
