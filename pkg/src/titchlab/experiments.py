"""Exact left-hand sides of the studied sums and the comparison harness.

Every evaluator here computes an exact finite arithmetic sum (weights Lambda,
tau, character convolutions, two-square counts, Hecke eigenvalues), sieving
the shifted range for divisor-type weights instead of factorizing per term.
Naive double/triple-loop oracles used by the tests live alongside the
production paths.  All reductions are fixed-order compensated block sums, so
results are bit-identical for any thread count.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .arith_core import build_sieve, factorize, two_squares_count_nonzero
from .characters import DirichletCharacter, char_convolution
from .cusp_forms import TauTable
from .errors import BudgetError
from .singular_series import ShiftedSumSpec
from .summation import deterministic_dot, deterministic_sum, neumaier_sum

_X_BUDGET = 10 ** 8


@dataclass
class ExperimentResult:
    """One comparison row: exact sum vs (optional) predicted main term."""
    experiment: str
    scale: int
    lhs: float
    main_term: float | None = None
    abs_err: float | None = None
    rel_err: float | None = None
    wall_s: float | None = None
    params: dict = field(default_factory=dict)


def compare(experiment: str, scale: int, lhs: float, main_term: float | None,
            wall_s: float | None = None, params: dict | None = None) -> ExperimentResult:
    """Assemble an ExperimentResult; errors only when a main term is present."""
    abs_err = rel_err = None
    if main_term is not None:
        abs_err = abs(lhs - main_term)
        rel_err = abs_err / abs(main_term) if main_term != 0 else math.inf
    return ExperimentResult(experiment, scale, lhs, main_term, abs_err, rel_err,
                            wall_s, params or {})


# ---------------------------------------------------------------------------
# Divisor-type weights over a contiguous range
# ---------------------------------------------------------------------------

def divisor_count_range(lo: int, hi: int) -> np.ndarray:
    """tau(m) for m in [lo, hi] by sieving divisors d <= sqrt(hi):
    each pair (d, m/d) with d < sqrt(m) contributes 2, the square root 1."""
    if lo < 1 or hi < lo:
        raise ValueError("need 1 <= lo <= hi")
    out = np.zeros(hi - lo + 1, dtype=np.int64)
    for d in range(1, math.isqrt(hi) + 1):
        k_start = max((lo + d - 1) // d, d)
        m = k_start * d
        if m > hi:
            continue
        if k_start == d:
            out[d * d - lo] += 1
            m += d
        if m <= hi:
            out[m - lo::d] += 2
    return out


def char_convolution_range(chi1: DirichletCharacter, chi2: DirichletCharacter,
                           lo: int, hi: int) -> np.ndarray:
    """(chi1 * chi2)(m) for m in [lo, hi] via the same hyperbola sieve,
    twisted by the character period tables."""
    if lo < 1 or hi < lo:
        raise ValueError("need 1 <= lo <= hi")
    q1, q2 = chi1.modulus, chi2.modulus
    t1, t2 = chi1.value_table(), chi2.value_table()
    out = np.zeros(hi - lo + 1, dtype=np.complex128)
    for d in range(1, math.isqrt(hi) + 1):
        k_start = max((lo + d - 1) // d, d)
        m = k_start * d
        if m > hi:
            continue
        v1d, v2d = t1[d % q1], t2[d % q2]
        if k_start == d:
            out[d * d - lo] += v1d * v2d
            k_start += 1
            m += d
        if m <= hi:
            ks = np.arange(k_start, hi // d + 1)
            idx = ks * d - lo
            out[idx] += v1d * t2[ks % q2] + v2d * t1[ks % q1]
    return out


def _lambda_over(spec: ShiftedSumSpec, threads: int = 1):
    tables = build_sieve(spec.Y + 1, spec.X - spec.Y, threads=threads)
    return tables.lam


def _aligned_shift_values(spec: ShiftedSumSpec, shifted: np.ndarray) -> np.ndarray:
    """Reorder the shifted-range array so index i corresponds to n = Y+1+i."""
    return shifted if spec.sigma == 1 else shifted[::-1]


def titchmarsh_lhs(spec: ShiftedSumSpec, threads: int = 1) -> float:
    """sum_{Y < n <= X} Lambda(n) tau(sigma n + f), by divisor sieving of the
    shifted progression (not per-n factorization)."""
    if spec.X > _X_BUDGET:
        raise BudgetError("X exceeds the 10^8 evaluation budget")
    lam = _lambda_over(spec, threads)
    lo, hi = spec.shift_range()
    tau = divisor_count_range(lo, hi)
    vals = _aligned_shift_values(spec, tau).astype(np.float64)
    return deterministic_dot(lam, vals, threads)


def titchmarsh_lhs_by_factorization(spec: ShiftedSumSpec) -> float:
    """Second path: per-n factorization of the shift argument (cross-check)."""
    end = max(spec.X, spec.shift_range()[1]) + 1
    tables = build_sieve(1, end)
    terms = []
    base = spec.Y + 1
    lam = tables.lam[spec.Y:spec.X]  # Lambda(Y+1 .. X)
    for i in np.nonzero(lam)[0]:
        n = base + int(i)
        m = spec.sigma * n + spec.f
        tau = 1
        for _, e in factorize(m, tables).prime_powers:
            tau *= e + 1
        terms.append(float(lam[i]) * tau)
    return neumaier_sum(terms)


def titchmarsh_lhs_naive(spec: ShiftedSumSpec) -> float:
    """Fully naive oracle (divisor counting by trial division), X <= 10^3."""
    total = []
    for n in range(spec.Y + 1, spec.X + 1):
        # Lambda(n)
        fac = factorize(n).prime_powers
        if len(fac) != 1:
            continue
        m = spec.sigma * n + spec.f
        tau = sum(2 if d * d < m else 1
                  for d in range(1, math.isqrt(m) + 1) if m % d == 0)
        total.append(math.log(fac[0][0]) * tau)
    return math.fsum(total)


def hooley_lhs(chi1: DirichletCharacter, chi2: DirichletCharacter,
               spec: ShiftedSumSpec, threads: int = 1) -> complex:
    """sum_{Y < n <= X} Lambda(n) (chi1 * chi2)(sigma n + f).

    Complex in general; real (up to round-off) whenever the character data is
    closed under conjugation, e.g. real chi1, chi2.
    """
    if spec.X > _X_BUDGET:
        raise BudgetError("X exceeds the 10^8 evaluation budget")
    lam = _lambda_over(spec, threads)
    lo, hi = spec.shift_range()
    conv = char_convolution_range(chi1, chi2, lo, hi)
    vals = _aligned_shift_values(spec, conv)
    return complex(deterministic_dot(lam, vals.real, threads),
                   deterministic_dot(lam, vals.imag, threads))


def hooley_lhs_naive(chi1, chi2, spec: ShiftedSumSpec) -> complex:
    """Naive oracle via per-n char_convolution, X <= 10^3."""
    total = 0j
    for n in range(spec.Y + 1, spec.X + 1):
        fac = factorize(n).prime_powers
        if len(fac) != 1:
            continue
        total += math.log(fac[0][0]) * char_convolution(chi1, chi2,
                                                        spec.sigma * n + spec.f)
    return total


# ---------------------------------------------------------------------------
# p + x^2 + y^2 with nonzero x, y
# ---------------------------------------------------------------------------

def two_squares_nonzero_range(m_max: int) -> np.ndarray:
    """r'(m) = #{x, y nonzero, x^2 + y^2 = m} for m = 0..m_max, by sieving
    chi_-4 over odd divisors and removing the 4 axis points at squares."""
    r2 = np.zeros(m_max + 1, dtype=np.int64)
    for d in range(1, m_max + 1, 4):
        r2[d::d] += 1
    for d in range(3, m_max + 1, 4):
        r2[d::d] -= 1
    r2 *= 4
    squares = np.arange(1, math.isqrt(m_max) + 1) ** 2
    r2[squares] -= 4
    r2[0] = 0
    return r2


def two_squares_lhs(n: int, threads: int = 1) -> int:
    """Number of representations n = p + x^2 + y^2, p prime, x y nonzero."""
    if n < 5:
        raise ValueError("need n >= 5")
    sieve = build_sieve(1, n - 1, threads=threads)
    ns = np.arange(1, n)
    primes = ns[(sieve.spf == ns) & (ns > 1)]
    rprime = two_squares_nonzero_range(n - 2)
    return int(rprime[n - primes].sum())


def two_squares_lhs_naive(n: int) -> int:
    """Naive triple loop: primes by trial division, representations by x-scan."""
    total = 0
    for p in range(2, n):
        if any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
            continue
        total += two_squares_count_nonzero_direct_local(n - p)
    return total


def two_squares_count_nonzero_direct_local(m: int) -> int:
    if m < 2:
        return 0
    count = 0
    x = 1
    while x * x < m:
        y2 = m - x * x
        y = math.isqrt(y2)
        if y >= 1 and y * y == y2:
            count += 4
        x += 1
    return count


# ---------------------------------------------------------------------------
# Hecke-eigenvalue shifted sums
# ---------------------------------------------------------------------------

def cusp_shift_lhs(table: TauTable, spec: ShiftedSumSpec, threads: int = 1) -> float:
    """sum_{Y < n <= X} Lambda(n) lambda(sigma n + f), compensated."""
    lo, hi = spec.shift_range()
    if hi > table.n_max or lo < 1:
        raise ValueError("shift range exceeds the tau table")
    lam = _lambda_over(spec, threads)
    ns = np.arange(spec.Y + 1, spec.X + 1, dtype=np.int64)
    vals = table.lam[spec.sigma * ns + spec.f]
    return deterministic_dot(lam, vals, threads)


def smooth_bump(t, lo: float, hi: float):
    """C-infinity bump exp(-1/(1-u^2)) mapped onto (lo, hi), vanishing outside."""
    t = np.asarray(t, dtype=np.float64)
    u = (2.0 * t - (lo + hi)) / (hi - lo)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass
class ShiftCancellation:
    """A weighted shifted sum together with its trivial-bound comparison."""
    value: float
    weighted_abs: float  # sum of |G lambda|

    @property
    def ratio(self) -> float:
        return abs(self.value) / self.weighted_abs if self.weighted_abs else 0.0


def triple_shift_lhs(table: TauTable, r: int, f: int,
                     X1: float, X2: float, X3: float,
                     window=smooth_bump) -> ShiftCancellation:
    """sum_{k,l,m} G(k,l,m) lambda(r k l m + f) with G a product of three
    smooth bumps on [X_j, 2X_j]."""
    if r == 0 or f == 0:
        raise ValueError("need r, f nonzero")
    ks = np.arange(max(1, math.floor(X1)), math.ceil(2 * X1) + 1)
    ls = np.arange(max(1, math.floor(X2)), math.ceil(2 * X2) + 1)
    ms = np.arange(max(1, math.floor(X3)), math.ceil(2 * X3) + 1)
    wk = window(ks, X1, 2 * X1)
    wl = window(ls, X2, 2 * X2)
    wm = window(ms, X3, 2 * X3)
    args = r * ks[:, None, None] * ls[None, :, None] * ms[None, None, :] + f
    if args.max() > table.n_max:
        raise ValueError("shift argument exceeds the tau table")
    weights = wk[:, None, None] * wl[None, :, None] * wm[None, None, :]
    valid = (args >= 1) & (weights > 0)
    lam_vals = np.where(valid, table.lam[np.clip(args, 1, table.n_max)], 0.0)
    prods = (weights * lam_vals).ravel()
    return ShiftCancellation(deterministic_sum(prods),
                             deterministic_sum(np.abs(prods)))


def double_shift_lhs(table: TauTable, m1: int, m2: int, f: int, X: float,
                     window=smooth_bump) -> ShiftCancellation:
    """sum_n lambda(m1 n + f) lambda(m2 n + f) g(n), g a bump on [X, 2X].

    m1, m2 must be distinct, squarefree and of the same sign.
    """
    if m1 == m2:
        raise ValueError("m1, m2 must be distinct")
    if m1 * m2 <= 0 or m1 == 0:
        raise ValueError("m1, m2 must be nonzero and of the same sign")
    for m in (m1, m2):
        if any(e > 1 for _, e in factorize(abs(m)).prime_powers):
            raise ValueError(f"{m} is not squarefree")
    ns = np.arange(max(1, math.floor(X)), math.ceil(2 * X) + 1)
    g = window(ns, X, 2 * X)
    a1 = m1 * ns + f
    a2 = m2 * ns + f
    live = g > 0
    if ((a1[live] < 1) | (a2[live] < 1)).any():
        raise ValueError("shift arguments must stay positive on the window")
    if max(a1[live].max(), a2[live].max()) > table.n_max:
        raise ValueError("shift argument exceeds the tau table")
    prods = np.where(live, g * table.lam[np.clip(a1, 1, table.n_max)]
                     * table.lam[np.clip(a2, 1, table.n_max)], 0.0)
    return ShiftCancellation(deterministic_sum(prods),
                             deterministic_sum(np.abs(prods)))


# ---------------------------------------------------------------------------
# Dispersion of primes in arithmetic progressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DispersionSpec:
    """Parameters of the signed prime-progression discrepancy sum."""
    x: int
    Q: int
    c: int = 1
    c0: int = 1
    d: int = 1
    d0: int = 1
    a1: int = 1
    a2: int = 1

    def __post_init__(self):
        if self.x < 2 or self.Q < 1:
            raise ValueError("need x >= 2, Q >= 1")
        if self.a1 == 0 or self.a2 == 0:
            raise ValueError("a1, a2 must be nonzero")
        if math.gcd(self.c0, self.c) != 1 or math.gcd(self.d0 % max(self.d, 1), self.d) != 1:
            raise ValueError("need (c0, c) = (d0, d) = 1")
        for p, _ in factorize(self.d).prime_powers:
            if self.c % p != 0:
                raise ValueError("need d | c^infinity")


@dataclass
class DispersionResult:
    value: float
    q_count: int
    skipped_q: int  # q skipped because (q, d) > 1 (flagged; none expected)


def dispersion(spec: DispersionSpec, threads: int = 1) -> DispersionResult:
    """sum over q <= Q, (q, a1 a2) = 1, q = c0 mod c, of

        [ sum_{n <= x, n = a1 a2bar mod q, n = d0 mod d} Lambda(n)
          - (1/phi(qd)) sum_{n <= x, (n, qd) = 1} Lambda(n) ].
    """
    if spec.x > 10 ** 7:
        raise BudgetError("dispersion budget is x <= 10^7")
    tables = build_sieve(1, spec.x, threads=threads)
    ns = np.arange(1, spec.x + 1, dtype=np.int64)
    mask = tables.lam > 0
    pp = ns[mask]
    lamv = tables.lam[mask]
    psi_x = deterministic_sum(lamv)

    def phi_of(m):
        return math.prod((p - 1) * p ** (e - 1)
                         for p, e in factorize(m).prime_powers)

    def prime_power_weight(p):
        total, pk = 0.0, p
        while pk <= spec.x:
            total += math.log(p)
            pk *= p
        return total

    terms = []
    skipped = 0
    q_count = 0
    a1a2 = abs(spec.a1 * spec.a2)
    for q in range(1, spec.Q + 1):
        if math.gcd(q, a1a2) != 1 or q % spec.c != spec.c0 % spec.c:
            continue
        if math.gcd(q, spec.d) != 1:
            skipped += 1  # cannot happen when d | c^inf and (c0, c) = 1
            continue
        q_count += 1
        t_q = spec.a1 * pow(spec.a2, -1, q) % q if q > 1 else 0
        M = q * spec.d
        if spec.d > 1:
            t = (t_q + q * ((spec.d0 - t_q) * pow(q % spec.d, -1, spec.d) % spec.d)) % M
        else:
            t = t_q
        main = float(lamv[pp % M == t].sum())
        coprime = psi_x - math.fsum(prime_power_weight(p)
                                    for p in factorize(M).primes)
        terms.append(main - coprime / phi_of(M))
    if q_count == 0:
        raise ValueError("no admissible q <= Q")
    return DispersionResult(neumaier_sum(terms), q_count, skipped)


def dispersion_naive(spec: DispersionSpec) -> float:
    """Literal double loop for small x (oracle)."""
    def lam(n):
        fac = factorize(n).prime_powers
        return math.log(fac[0][0]) if len(fac) == 1 else 0.0

    total = 0.0
    for q in range(1, spec.Q + 1):
        if math.gcd(q, abs(spec.a1 * spec.a2)) != 1 or q % spec.c != spec.c0 % spec.c:
            continue
        if math.gcd(q, spec.d) != 1:
            continue
        t_q = spec.a1 * pow(spec.a2, -1, q) % q if q > 1 else 0
        inner = 0.0
        coprime = 0.0
        for n in range(1, spec.x + 1):
            l = lam(n)
            if l == 0.0:
                continue
            if n % q == t_q and n % spec.d == spec.d0 % spec.d:
                inner += l
            if math.gcd(n, q * spec.d) == 1:
                coprime += l
        phi_qd = sum(1 for a in range(1, q * spec.d + 1)
                     if math.gcd(a, q * spec.d) == 1)
        total += inner - coprime / phi_qd
    return total


# ---------------------------------------------------------------------------
# Brun-Titchmarsh scan
# ---------------------------------------------------------------------------

@dataclass
class BrunTitchmarshReport:
    max_ratio: float
    argmax: tuple  # (q, a)
    flagged: bool  # True when max exceeds the slack constant 4


def brun_titchmarsh_check(x: int, y: int, q_max: int,
                          threads: int = 1) -> BrunTitchmarshReport:
    """For q <= q_max and (a, q) = 1 compare sum_{x <= n <= x+y, n=a (q)}
    Lambda(n) against y log(x+y) / (phi(q) log(y/q)): reports the max of

        sum * phi(q) log(y/q) / (y log(x+y)).
    """
    if q_max >= y:
        raise ValueError("need q_max < y")
    tables = build_sieve(x, y + 1, threads=threads)
    ns = np.arange(x, x + y + 1, dtype=np.int64)
    lam = tables.lam
    best, arg = 0.0, (0, 0)
    scale = 1.0 / (y * math.log(x + y))
    for q in range(1, q_max + 1):
        sums = np.bincount(ns % q, weights=lam, minlength=q)
        phi_q = sum(1 for a in range(1, q + 1) if math.gcd(a, q) == 1)
        factor = phi_q * math.log(y / q) * scale
        for a in range(q):
            if math.gcd(a, q) == 1 or q == 1:
                ratio = float(sums[a]) * factor
                if ratio > best:
                    best, arg = ratio, (q, a)
    return BrunTitchmarshReport(best, arg, best > 4.0)
