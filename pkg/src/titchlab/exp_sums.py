"""Complete exponential sums and the delta-symbol decomposition.

Kloosterman sums S(m, n, c) are evaluated directly with batched modular
inverses (Montgomery's trick: one modular inversion per block) or through
twisted multiplicativity across coprime factors of c.  Ramanujan sums use the
mu/phi closed form with a direct-summation oracle.  The triple character sum
(the x- and y-sums collapse to a Kloosterman and a Ramanujan sum) comes in a
grouped O(c log c + c phi(c)) evaluator plus a literal triple-loop oracle.

The delta symbol writes the Kronecker delta on |n| <= T as a finite sum over
moduli c << sqrt(T) of Ramanujan sums against a smooth kernel; with the
normalization sum_k w(k) = 1 the identity is exact, which the tests exploit.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .arith_core import factorize, squarefree_powerfull_split
from .errors import CapacityError

_DIRECT_CAP = 50_000_000
_C_OVERFLOW = 10 ** 9


def _units_and_inverses(c: int):
    """Units mod c and their inverses, one pow(-1) total (Montgomery trick)."""
    xs = [x for x in range(1, c) if math.gcd(x, c) == 1]
    k = len(xs)
    prefix = [1] * (k + 1)
    for i, x in enumerate(xs):
        prefix[i + 1] = prefix[i] * x % c
    inv_acc = pow(prefix[k], -1, c)
    invs = [0] * k
    for i in range(k - 1, -1, -1):
        invs[i] = prefix[i] * inv_acc % c
        inv_acc = inv_acc * xs[i] % c
    return np.array(xs, dtype=np.int64), np.array(invs, dtype=np.int64)


@lru_cache(maxsize=32)
def _units_and_inverses_cached(c: int):
    return _units_and_inverses(c)


def _kloosterman_direct(m: int, n: int, c: int) -> complex:
    if c == 1:
        return 1 + 0j
    xs, invs = _units_and_inverses_cached(c)
    phase = (m % c * xs + n % c * invs) % c
    angles = 2.0 * math.pi * phase / c
    return complex(np.cos(angles).sum(), np.sin(angles).sum())


def kloosterman(m: int, n: int, c: int, method: str = "auto") -> float:
    """S(m, n, c) = sum over x mod c, (x, c) = 1, of e((m x + n xbar)/c).

    method "direct" sums over residues; "twisted" factors c into prime powers
    and uses S(m, n, c1 c2) = S(m c2bar, n c2bar, c1) S(m c1bar, n c1bar, c2);
    "auto" picks direct for c <= 10^6.  The sum is real; the imaginary part is
    checked to vanish and the real part returned.
    """
    if c < 1:
        raise ValueError("need c >= 1")
    if c > _C_OVERFLOW:
        raise CapacityError("c > 10^9 exceeds the overflow guard")
    if method == "auto":
        method = "direct" if c <= 10 ** 6 else "twisted"
    if method == "direct":
        if c > _DIRECT_CAP:
            raise CapacityError("direct Kloosterman summation capped at 5e7")
        val = _kloosterman_direct(m, n, c)
    elif method == "twisted":
        val = 1 + 0j
        for p, e in factorize(c).prime_powers:
            q = p ** e
            if q > _DIRECT_CAP:
                raise CapacityError("prime-power factor exceeds direct cap")
            tbar = pow((c // q) % q, -1, q)
            val *= _kloosterman_direct(m * tbar % q, n * tbar % q, q)
    else:
        raise ValueError(f"unknown method {method!r}")
    tol = 1e-9 * max(1.0, math.sqrt(c))
    if abs(val.imag) > tol:
        raise AssertionError(f"S({m},{n},{c}) has imaginary part {val.imag:g}")
    return val.real


def weil_check(m: int, n: int, c: int):
    """ratio = |S(m,n,c)| / (tau(c) gcd(m,n,c)^(1/2) c^(1/2)); holds iff <= 1 + 1e-9."""
    if c < 1:
        raise ValueError("need c >= 1")
    s = kloosterman(m, n, c)
    tau = 1
    for _, e in factorize(c).prime_powers:
        tau *= e + 1
    g = math.gcd(math.gcd(abs(m), abs(n)), c)
    ratio = abs(s) / (tau * math.sqrt(g) * math.sqrt(c))
    return ratio <= 1.0 + 1e-9, ratio


def ramanujan_sum(q: int, n: int) -> int:
    """c_q(n) = sum over (a, q) = 1 of e(an/q) = mu(q/(q,n)) phi(q)/phi(q/(q,n))."""
    if q < 1:
        raise ValueError("need q >= 1")
    g = math.gcd(abs(n), q) if n != 0 else q
    k = q // g

    def phi(m):
        return math.prod((p - 1) * p ** (e - 1) for p, e in factorize(m).prime_powers)

    fac_k = factorize(k)
    if any(e > 1 for _, e in fac_k.prime_powers):
        return 0
    mu_k = (-1) ** len(fac_k.prime_powers)
    phi_q, phi_k = phi(q), phi(k)
    assert phi_q % phi_k == 0
    return mu_k * (phi_q // phi_k)


def ramanujan_sum_direct(q: int, n: int) -> int:
    """Direct-summation oracle for c_q(n)."""
    total = 0.0
    for a in range(q):
        if math.gcd(a, q) == 1 or q == 1:
            total += math.cos(2.0 * math.pi * a * n / q)
    r = round(total)
    if abs(total - r) > 1e-6 * max(1, q):
        raise AssertionError("Ramanujan direct sum is not near an integer")
    return int(r)


def _ramanujan_table(c: int) -> np.ndarray:
    """c_c(v) for v = 0..c-1."""
    out = np.empty(c, dtype=np.int64)
    cache = {}
    for v in range(c):
        g = math.gcd(v, c) if v else c
        if g not in cache:
            cache[g] = ramanujan_sum(c, g)
        out[v] = cache[g]
    return out


# ---------------------------------------------------------------------------
# Triple character sum (brute-force verification of the square-root bound)
# ---------------------------------------------------------------------------

_TRIPLE_C_MAX = 300


def _abar_degenerate(a: int, c: int) -> int:
    """abar = inverse of a mod c when (a, c) = 1, else 0 (degenerate reading;
    the sweep restricts to (a, c) = 1 except for the prime p | a case)."""
    return pow(a, -1, c) if math.gcd(a, c) == 1 else 0


def _kloosterman_row(a: int, c: int) -> np.ndarray:
    """K[t] = sum over units x of e((a xbar + t x)/c) for all t mod c, via FFT."""
    g = np.zeros(c, dtype=np.complex128)
    xs, invs = _units_and_inverses_cached(c) if c > 1 else \
        (np.array([0]), np.array([0]))
    if c == 1:
        return np.ones(1, dtype=np.complex128)
    g[xs] = np.exp(2j * np.pi * ((a % c) * invs % c) / c)
    fft = np.fft.fft(g)          # fft[k] = sum_x g[x] e(-kx/c)
    return fft[(-np.arange(c)) % c]


def char_triple_sum(alpha: int, beta: int, h: int, r: int, a: int, c: int) -> complex:
    """The triple sum over x, y, z mod c with (x y z (z+h), c) = 1 of

        e((a xbar - r x - abar y + r y + alpha x zbar - beta y (z+h)bar) / c).

    Only x, y, z (z+h) are inverted; abar means the inverse of a mod c and is
    taken literally when (a, c) = 1 (degenerate value 0 otherwise).  Exact
    grouping: the x-sum is a Kloosterman sum and the y-sum a Ramanujan sum,
    so the evaluation is O(c phi(c)) instead of O(c^3); char_triple_sum_direct
    is the literal oracle.
    """
    if c < 1:
        raise ValueError("need c >= 1")
    if c > _TRIPLE_C_MAX:
        raise ValueError(f"triple sum capped at c <= {_TRIPLE_C_MAX}")
    if c == 1:
        return 1 + 0j
    abar = _abar_degenerate(a, c)
    K = _kloosterman_row(a, c)
    R = _ramanujan_table(c)
    xs, invs = _units_and_inverses_cached(c)
    inv_table = np.zeros(c, dtype=np.int64)
    inv_table[xs] = invs
    unit = np.zeros(c, dtype=bool)
    unit[xs] = True
    total = 0j
    for z in range(c):
        w = (z + h) % c
        if not (unit[z] and unit[w]):
            continue
        zbar = int(inv_table[z])
        wbar = int(inv_table[w])
        total += K[(alpha * zbar - r) % c] * R[(r - abar - beta * wbar) % c]
    return total


def char_triple_sum_direct(alpha: int, beta: int, h: int, r: int, a: int,
                           c: int) -> complex:
    """Literal triple loop; the oracle for char_triple_sum."""
    if c < 1:
        raise ValueError("need c >= 1")
    if c == 1:
        return 1 + 0j
    abar = _abar_degenerate(a, c)
    units = [x for x in range(c) if math.gcd(x, c) == 1]
    inv = {x: pow(x, -1, c) for x in units}
    total = 0j
    tw = 2j * math.pi / c
    for z in units:
        w = (z + h) % c
        if w not in inv:
            continue
        zb, wb = inv[z], inv[w]
        for x in units:
            for y in units:
                e = (a * inv[x] - r * x - abar * y + r * y
                     + alpha * x * zb - beta * y * wb) % c
                total += np.exp(tw * e)
    return complex(total)


def char_triple_bound(alpha: int, beta: int, h: int, r: int, a: int, c: int,
                      eps: float = 0.1) -> float:
    """The comparison bound (alpha-beta, alpha h, beta h, c1)^(1/2) c2^2
    c1^(3/2+eps) (a, c), with c = c1 c2 the squarefree/power-full split."""
    c1, c2 = squarefree_powerfull_split(c)
    g = math.gcd(math.gcd(abs(alpha - beta), abs(alpha * h)),
                 math.gcd(abs(beta * h), c1))
    if g == 0:
        g = c1
    return math.sqrt(g) * c2 ** 2 * c1 ** (1.5 + eps) * math.gcd(abs(a), c) \
        if a != 0 else math.sqrt(g) * c2 ** 2 * c1 ** (1.5 + eps) * c


def char_triple_ratio(alpha, beta, h, r, a, c, eps: float = 0.1) -> float:
    """|triple sum| divided by the comparison bound."""
    val = abs(char_triple_sum(alpha, beta, h, r, a, c))
    return val / char_triple_bound(alpha, beta, h, r, a, c, eps)


def triple_sum_sweep_max(c: int, eps: float = 0.1) -> float:
    """Max of |sum|/bound over ALL tuples (alpha, beta, h, r, a) mod c with
    (a, c) = 1.

    Exhaustiveness rests on the exact orbit reduction (alpha, beta, h, r, a)
    -> (alpha u vbar, beta u vbar, h vbar, r u, a ubar) under units u, v:
    it suffices to take a = 1 and one h per unit-scaling class (h = g for
    each divisor g | c, plus h = 0); the ratio is orbit-invariant because
    unit factors change none of the gcds in the bound.  Verified against the
    fully naive 5-fold enumeration at small c in the tests.
    """
    if c == 1:
        return 1.0  # empty conditions: sum = 1, bound = 1
    K = _kloosterman_row(1, c)
    R = _ramanujan_table(c).astype(np.complex128)
    xs, invs = _units_and_inverses_cached(c)
    inv_table = np.zeros(c, dtype=np.int64)
    inv_table[xs] = invs
    unit = np.zeros(c, dtype=bool)
    unit[xs] = True
    abar = 1  # a = 1 representative
    c1, c2 = squarefree_powerfull_split(c)

    alphas = np.arange(c, dtype=np.int64)
    rs = np.arange(c, dtype=np.int64)
    best = 0.0
    h_reps = [0] + [g for g in factorize(c).divisors() if g < c]
    for h in h_reps:
        zs = np.array([z for z in range(c)
                       if unit[z] and unit[(z + h) % c]], dtype=np.int64)
        if len(zs) == 0:
            continue  # sum vanishes identically for this h class
        zbar = inv_table[zs]
        wbar = inv_table[(zs + h) % c]
        # A[alpha, z, r] = K[(alpha zbar - r) % c]
        az = (alphas[:, None] * zbar[None, :]) % c
        idx_a = (az[:, :, None] - rs[None, None, :]) % c
        A = K[idx_a]
        # B[beta, z, r] = R[(r - abar - beta wbar) % c]
        bw = (alphas[:, None] * wbar[None, :]) % c  # beta range == alpha range
        idx_b = (rs[None, None, :] - abar - bw[:, :, None]) % c
        B = R[idx_b]
        V = np.einsum("azr,bzr->abr", A, B)
        # bound depends on (alpha, beta, h) only
        g = np.gcd(np.gcd(np.abs(alphas[:, None] - alphas[None, :]),
                          np.abs(alphas[:, None] * h)),
                   np.gcd(np.abs(alphas[None, :] * h), c1))
        g = np.where(g == 0, c1, g)
        den = np.sqrt(g) * c2 ** 2 * c1 ** (1.5 + eps)  # (a, c) = 1
        ratios = np.abs(V) / den[:, :, None]
        best = max(best, float(ratios.max()))
    return best


# ---------------------------------------------------------------------------
# Delta symbol
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeltaKernel:
    """Smooth kernel for the finite Kronecker-delta decomposition.

    The bump w lives on [Q, 2Q], Q = sqrt(T), normalized so that
    sum over integers k of w(k) = 1; moduli beyond 2Q contribute nothing.
    """
    T: float
    Q: float
    norm: float

    def w(self, t: float) -> float:
        u = (t - 1.5 * self.Q) / (0.5 * self.Q)
        if abs(u) >= 1.0:
            return 0.0
        return self.norm * math.exp(-1.0 / (1.0 - u * u))

    def weight(self, t: int, n: float) -> float:
        """Delta_t(n) = sum_{r >= 1} (1/r) (w(t r) - w(|n|/(t r))).

        r is truncated at ceil(2Q/t): beyond it both w-arguments leave the
        support, so the truncation is exact.
        """
        if t < 1:
            raise ValueError("need t >= 1")
        r_max = math.ceil(2.0 * self.Q / t)
        an = abs(n)
        total = 0.0
        for r in range(1, r_max + 1):
            tr = t * r
            total += (self.w(tr) - self.w(an / tr)) / r
        return total


def make_delta_kernel(T: float) -> DeltaKernel:
    """Kernel at size T: the normalization constant is computed numerically
    once (the reciprocal of the bump's integer-sample sum on (Q, 2Q))."""
    if T < 1:
        raise ValueError("need T >= 1")
    Q = math.sqrt(T)
    raw = 0.0
    for k in range(math.floor(Q) + 1, math.ceil(2 * Q)):
        u = (k - 1.5 * Q) / (0.5 * Q)
        if abs(u) < 1.0:
            raw += math.exp(-1.0 / (1.0 - u * u))
    if raw <= 0.0:
        raise ValueError("support [Q, 2Q] contains no integers; T too small")
    return DeltaKernel(float(T), Q, 1.0 / raw)


def delta_symbol_eval(kernel: DeltaKernel, n: int) -> float:
    """sum_{c <= 2Q} (1/c) c_c(n) Delta_c(n): equals delta_{n=0} exactly.

    The unit-residue sum over a mod c is the Ramanujan sum c_c(n).
    """
    if abs(n) > kernel.T:
        raise ValueError("need |n| <= T")
    c_max = math.ceil(2.0 * kernel.Q)
    terms = []
    for c in range(1, c_max + 1):
        dk = kernel.weight(c, n)
        if dk != 0.0:
            terms.append(ramanujan_sum(c, n) * dk / c)
    return math.fsum(terms)


@dataclass
class DeltaKernelReport:
    """Normalized kernel-derivative maxima across a T sweep."""
    sup_by_t: dict          # T -> (m0, m1, m2) with m_j = max |D^j| sqrt(T) |n|^j
    grows_with_t: bool
    step_consistency: float  # worst relative disagreement between h and h/2 diffs


def delta_kernel_bounds_check(kernel: DeltaKernel,
                              t_sweep=(100.0, 1000.0, 10000.0)) -> DeltaKernelReport:
    """Sample Delta_t(n) and finite-difference n-derivatives j in {0, 1, 2}
    on a log grid, normalized by T^(1/2) |n|^j; flag growth across t_sweep."""
    sweep = sorted(set(float(t) for t in t_sweep) | {float(kernel.T)})
    sup_by_t = {}
    worst_consistency = 0.0
    for T in sweep:
        ker = kernel if T == kernel.T else make_delta_kernel(T)
        sq = math.sqrt(T)
        t_grid = sorted(set(int(round(ker.Q * 2 ** e))
                            for e in np.linspace(-3, 1.0, 9) if ker.Q * 2 ** e >= 1))
        n_grid = [T ** e for e in np.linspace(0.15, 0.95, 8)]
        m = [0.0, 0.0, 0.0]
        for t in t_grid:
            for n in n_grid:
                h = max(1e-3, 0.5e-3 * n)
                f0 = ker.weight(t, n)
                fp, fm = ker.weight(t, n + h), ker.weight(t, n - h)
                d1 = (fp - fm) / (2 * h)
                d2 = (fp - 2 * f0 + fm) / (h * h)
                d1_half = (ker.weight(t, n + h / 2) - ker.weight(t, n - h / 2)) / h
                if abs(d1) > 1e-12:
                    worst_consistency = max(
                        worst_consistency, abs(d1 - d1_half) / abs(d1))
                m[0] = max(m[0], abs(f0) * sq)
                m[1] = max(m[1], abs(d1) * sq * n)
                m[2] = max(m[2], abs(d2) * sq * n * n)
        sup_by_t[T] = tuple(m)
    sups = [sup_by_t[T] for T in sweep]
    grows = any(sups[i + 1][j] > 2.0 * sups[i][j] + 1e-12
                for i in range(len(sups) - 1) for j in range(3))
    return DeltaKernelReport(sup_by_t, grows, worst_consistency)
