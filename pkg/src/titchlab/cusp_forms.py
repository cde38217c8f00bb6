"""Exact Ramanujan tau table and normalized Hecke eigenvalues.

The concrete eigenform is the level-1 weight-12 discriminant form: its
q-expansion is q prod_{m>=1} (1 - q^m)^24 with integer coefficients tau(n),
and lambda(n) = tau(n) / n^(11/2) are the normalized eigenvalues.

The 24th power is taken exactly: the pentagonal-number expansion of the
Euler product (sparse, +-1 entries) is squared once in sparse int64
arithmetic, then repeatedly convolution-squared (2 -> 4 -> 8 -> 16, then
16*8) through Kronecker substitution: each exact integer convolution is one
big GMP multiply of the coefficient arrays packed into fixed-width limbs,
with signs handled by a positive/negative split.
"""

import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from .arith_core import build_sieve, factorize
from .errors import CapacityError, memory_budget_bytes
from .summation import deterministic_sum

TAU_CACHE_MAGIC = b"TAU1"
_N_MAX_CAP = 2 * 10 ** 6


@dataclass
class TauTable:
    """tau(n) exactly (python ints) and lambda(n) = tau(n)/n^(11/2) (float64)
    for 1 <= n <= n_max; index 0 is a zero sentinel.  Immutable in use."""
    n_max: int
    tau: list
    lam: np.ndarray


def _kronecker_mul_nonneg(A, B, out_len: int, slot_bytes: int):
    """Exact convolution of nonnegative integer sequences: pack into
    slot_bytes-wide little-endian limbs, one big multiply, unpack."""
    def pack(arr):
        if isinstance(arr, np.ndarray) and arr.dtype == np.uint64 and slot_bytes >= 8:
            b = np.zeros((len(arr), slot_bytes), dtype=np.uint8)
            b[:, :8] = arr.astype("<u8").view(np.uint8).reshape(len(arr), 8)
            return int.from_bytes(b.tobytes(), "little")
        buf = bytearray(len(arr) * slot_bytes)
        for i, v in enumerate(arr):
            if v:
                buf[i * slot_bytes:(i + 1) * slot_bytes] = \
                    int(v).to_bytes(slot_bytes, "little")
        return int.from_bytes(bytes(buf), "little")

    prod = int(gmpy2.mpz(pack(A)) * gmpy2.mpz(pack(B)))
    total = (len(A) + len(B)) * slot_bytes
    raw = memoryview(prod.to_bytes(total, "little"))
    return [int.from_bytes(raw[i * slot_bytes:(i + 1) * slot_bytes], "little")
            for i in range(out_len)]


def _square_signed(arr, n_max: int):
    """(arr * arr)[0..n_max] exactly, arr a list of signed python ints."""
    maxabs = max((abs(v) for v in arr), default=0)
    bound = len(arr) * maxabs * maxabs + 1
    slot_bytes = (bound.bit_length() + 15) // 8
    P = [v if v > 0 else 0 for v in arr]
    Q = [-v if v < 0 else 0 for v in arr]
    out_len = min(2 * len(arr) - 1, n_max + 1)
    PP = _kronecker_mul_nonneg(P, P, out_len, slot_bytes)
    QQ = _kronecker_mul_nonneg(Q, Q, out_len, slot_bytes)
    PQ = _kronecker_mul_nonneg(P, Q, out_len, slot_bytes)
    return [PP[i] + QQ[i] - 2 * PQ[i] for i in range(out_len)]


def _mul_signed(a, b, n_max: int):
    """(a * b)[0..n_max] exactly for signed python-int lists."""
    maxa = max(abs(v) for v in a)
    maxb = max(abs(v) for v in b)
    bound = min(len(a), len(b)) * maxa * maxb + 1
    slot_bytes = (bound.bit_length() + 15) // 8
    Pa = [v if v > 0 else 0 for v in a]
    Qa = [-v if v < 0 else 0 for v in a]
    Pb = [v if v > 0 else 0 for v in b]
    Qb = [-v if v < 0 else 0 for v in b]
    out_len = min(len(a) + len(b) - 1, n_max + 1)
    t1 = _kronecker_mul_nonneg(Pa, Pb, out_len, slot_bytes)
    t2 = _kronecker_mul_nonneg(Qa, Qb, out_len, slot_bytes)
    t3 = _kronecker_mul_nonneg(Pa, Qb, out_len, slot_bytes)
    t4 = _kronecker_mul_nonneg(Qa, Pb, out_len, slot_bytes)
    return [t1[i] + t2[i] - t3[i] - t4[i] for i in range(out_len)]


def _pentagonal_series(length: int) -> np.ndarray:
    """Coefficients of prod_{m>=1} (1 - q^m) up to q^(length-1)."""
    E = np.zeros(length, dtype=np.int64)
    E[0] = 1
    k = 1
    while True:
        p1 = k * (3 * k - 1) // 2
        p2 = k * (3 * k + 1) // 2
        if p1 >= length and p2 >= length:
            break
        s = -1 if k % 2 else 1
        if p1 < length:
            E[p1] = s
        if p2 < length:
            E[p2] = s
        k += 1
    return E


def _lambda_from_tau(tau) -> np.ndarray:
    """lambda(n) = tau(n) / n^(11/2) in 80-bit extended precision, then
    rounded to float64 (keeps the result in the 1-ulp class)."""
    n_max = len(tau) - 1
    ns = np.arange(0, n_max + 1, dtype=np.longdouble)
    ns[0] = 1.0
    tau_ld = np.array([np.longdouble(t) for t in tau], dtype=np.longdouble)
    lam = tau_ld / np.power(ns, np.longdouble(5.5))
    lam[0] = 0.0
    return lam.astype(np.float64)


def build_tau_table(n_max: int) -> TauTable:
    """Exact tau(n) for n <= n_max via the eta-power construction."""
    if n_max < 1:
        raise ValueError("need n_max >= 1")
    if n_max > _N_MAX_CAP:
        raise CapacityError(f"tau table capped at n_max <= {_N_MAX_CAP}")
    if n_max * 120 > memory_budget_bytes():
        raise CapacityError("tau table exceeds memory budget; raise TITCHLAB_MEM_MB")
    length = n_max  # powers of the Euler product are needed up to q^(n_max-1)
    E = _pentagonal_series(length)
    idx = np.nonzero(E)[0]
    val = E[idx].astype(np.int64)
    E2 = np.zeros(length, dtype=np.int64)
    for i in range(len(idx)):
        rest = idx[i:]
        j = idx[i] + rest
        ok = j < length
        w = val[i] * val[i:][ok]
        w = w * np.where(rest[ok] == idx[i], 1, 2)
        np.add.at(E2, j[ok], w)
    E4 = _square_signed([int(v) for v in E2], length - 1)
    E8 = _square_signed(E4, length - 1)
    E16 = _square_signed(E8, length - 1)
    E24 = _mul_signed(E16, E8, length - 1)
    tau = [0] + E24[:n_max]
    return TauTable(n_max, tau, _lambda_from_tau(tau))


def tau_naive_poly(n_max: int):
    """Oracle: direct small-degree polynomial expansion of q prod (1-q^m)^24."""
    poly = [1] + [0] * n_max
    for m in range(1, n_max + 1):
        for _ in range(24):
            for i in range(n_max, m - 1, -1):
                poly[i] -= poly[i - m]
    return [0] + poly[:n_max]


# ---------------------------------------------------------------------------
# Consistency checks and partial sums
# ---------------------------------------------------------------------------

@dataclass
class HeckeReport:
    """Outcome of the exact Hecke-relation suite (violations expected empty)."""
    n_max: int
    multiplicative_pairs: int
    recursion_checks: int
    deligne_checks: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def hecke_consistency_report(table: TauTable, mult_limit: int = 10 ** 5) -> HeckeReport:
    """Verify, in exact integer arithmetic,

    - tau(mn) = tau(m) tau(n) for all coprime pairs with mn <= min(n_max, mult_limit),
    - tau(p^(k+1)) = tau(p) tau(p^k) - p^11 tau(p^(k-1)) for all p^(k+1) <= n_max,
    - tau(n)^2 <= tau_0(n)^2 n^11 for all n <= n_max (the normalized
      |lambda(n)| <= tau_0(n) bound, squared to stay in integers).
    """
    tau = table.tau
    n_max = table.n_max
    report = HeckeReport(n_max, 0, 0, 0)
    sieve = build_sieve(1, n_max)

    limit = min(n_max, mult_limit)
    for m in range(2, limit + 1):
        if m * m > limit:
            break
        for n in range(m + 1, limit // m + 1):
            if math.gcd(m, n) == 1:
                report.multiplicative_pairs += 1
                if tau[m * n] != tau[m] * tau[n]:
                    report.violations.append(("mult", m, n))

    primes = (np.nonzero(sieve.spf == np.arange(1, n_max + 1))[0] + 1).tolist()
    for p in primes:
        pk = p * p
        k = 1
        while pk <= n_max:
            report.recursion_checks += 1
            if tau[pk] != tau[p] * tau[pk // p] - p ** 11 * tau[pk // (p * p)]:
                report.violations.append(("recursion", p, k + 1))
            pk *= p
            k += 1

    taus = sieve.tau
    for n in range(1, n_max + 1):
        report.deligne_checks += 1
        t0 = int(taus[n - 1])
        if tau[n] * tau[n] > t0 * t0 * n ** 11:
            report.violations.append(("deligne", n))
    return report


def rankin_selberg_partial(table: TauTable, X: int, threads: int = 1) -> float:
    """sum_{n <= X} |lambda(n)|^2 from the table."""
    if X > table.n_max:
        raise ValueError("X exceeds table range")
    lam = table.lam[1:X + 1]
    return deterministic_sum(lam * lam, threads)


# ---------------------------------------------------------------------------
# Binary cache (magic "TAU1", u64 n_max, little-endian signed 128-bit values)
# ---------------------------------------------------------------------------

def write_tau_cache(path, table: TauTable) -> None:
    """Serialize: b"TAU1" | n_max as u64 LE | tau(1..n_max) as s128 LE."""
    with open(path, "wb") as fh:
        fh.write(TAU_CACHE_MAGIC)
        fh.write(table.n_max.to_bytes(8, "little"))
        for n in range(1, table.n_max + 1):
            fh.write(table.tau[n].to_bytes(16, "little", signed=True))


def load_tau_cache(path) -> TauTable:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != TAU_CACHE_MAGIC:
            raise ValueError(f"bad tau cache magic {magic!r}")
        n_max = int.from_bytes(fh.read(8), "little")
        if n_max > _N_MAX_CAP:
            raise CapacityError("cached n_max exceeds capacity")
        raw = fh.read(16 * n_max)
        if len(raw) != 16 * n_max:
            raise ValueError("truncated tau cache")
    mv = memoryview(raw)
    tau = [0] + [int.from_bytes(mv[16 * i:16 * (i + 1)], "little", signed=True)
                 for i in range(n_max)]
    return TauTable(n_max, tau, _lambda_from_tau(tau))
