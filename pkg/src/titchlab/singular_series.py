"""Certified truncated Euler products and explicit main terms.

The products handled here are

    c_s(a)     = prod_{p | a} (1 - p^-(s+1)) * prod_{p not| a} (1 + 1/((p-1) p^(s+1)))
    c(chi, f)  = prod_{p not| f} (1 + chi(p)/(p(p-1))) * prod_{p | f} (1 - chi(p)/p)

truncated at a prime cutoff P0, together with the main terms they enter:
the shifted divisor sum, its character-convolution variant, and the
prime-plus-two-nonzero-squares count.

Tail certificates are elementary: log(1+x) <= x per factor, and the sum over
primes p > P0 is bounded either by telescoping over all integers or through
the explicit prime-counting bound pi(x) < 1.25506 x / log x (valid x > 1,
Rosser-Schoenfeld), whichever is smaller.  Both branches decrease in P0.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .arith_core import build_sieve, factorize, primes_up_to
from .characters import DirichletCharacter, character_product, chi_minus4, l_one
from .summation import deterministic_sum

# Euler-Mascheroni constant, 20 digits.
EULER_GAMMA = 0.57721566490153286061

_RS = 1.25506  # pi(x) < _RS * x / log x for x > 1


@dataclass(frozen=True)
class EulerProduct:
    """A truncated Euler product with a certified truncation bound.

    bound_kind "log": tail_bound bounds |log(true/value)| (value nonzero).
    bound_kind "abs": tail_bound bounds |true - value| (derivative values).
    """
    value: complex
    cutoff: int
    tail_bound: float
    bound_kind: str = "log"

    @property
    def real(self) -> float:
        return float(np.real(self.value))


def _prime_tail(P0: int, s: float) -> float:
    """Certified bound for sum_{p > P0} 1/((p-1) p^(s+1))."""
    telescoping = P0 ** (-(1.0 + s))
    if P0 >= 17:
        rs = (P0 / (P0 - 1)) * (2 + s) * _RS / ((1 + s) * P0 ** (1 + s) * math.log(P0))
        return min(telescoping, rs)
    return telescoping


def c_s(a: int, s: float = 0.0, P0: int = 10 ** 6) -> EulerProduct:
    """The singular-series product c_s(a), truncated at P0.

    The finitely many p | a factors are always complete; the tail certificate
    covers only the omitted p > P0 coprime factors.
    """
    if a == 0:
        raise ValueError("a must be nonzero")
    if s < 0 or P0 < 2:
        raise ValueError("need s >= 0 and P0 >= 2")
    a_primes = set(factorize(abs(a)).primes)
    log_terms = [math.log1p(-p ** (-(s + 1.0))) for p in a_primes]
    ps = primes_up_to(P0)
    pf = ps.astype(np.float64)
    coprime = np.array([int(p) not in a_primes for p in ps])
    log_terms.extend(np.log1p(1.0 / ((pf[coprime] - 1) * pf[coprime] ** (s + 1.0))))
    value = math.exp(math.fsum(log_terms))
    return EulerProduct(value, P0, _prime_tail(P0, s))


def c0_prime(a: int, P0: int = 10 ** 6) -> EulerProduct:
    """d/ds c_s(a) at s = 0, via the logarithmic derivative

        c_0'(a) = c_0(a) [ sum_{p|a} log p/(p-1) - sum_{p not|a} log p/(p^2-p+1) ].

    tail_bound is an absolute error bound (the value may be negative).
    The formula is unit-tested against the central-difference oracle of c_s.
    """
    if a == 0:
        raise ValueError("a must be nonzero")
    c0 = c_s(a, 0.0, P0)
    a_primes = set(factorize(abs(a)).primes)
    terms = [math.log(p) / (p - 1) for p in a_primes]
    ps = primes_up_to(P0)
    pf = ps.astype(np.float64)
    coprime = np.array([int(p) not in a_primes for p in ps])
    q = pf[coprime]
    terms.extend(-np.log(q) / (q * q - q + 1.0))
    bracket = math.fsum(terms)
    value = c0.real * bracket
    # sum_{n > P0} 2 log n / n^2 dominates the omitted prime terms
    tail_bracket = 2.0 * (math.log(P0) + 1.0) / P0
    c0_upper = c0.real * math.exp(c0.tail_bound)
    abs_bound = c0_upper * tail_bracket \
        + c0.real * 1.2 * c0.tail_bound * (abs(bracket) + tail_bracket)
    return EulerProduct(value, P0, abs_bound, bound_kind="abs")


def c_chi(chi: DirichletCharacter, f: int, P0: int = 10 ** 6) -> EulerProduct:
    """c(chi, f) = prod_{p not| f, p <= P0}(1 + chi(p)/(p(p-1)))
                 * prod_{p | f}(1 - chi(p)/p), complex-valued."""
    if f == 0:
        raise ValueError("f must be nonzero")
    if P0 < 2:
        raise ValueError("need P0 >= 2")
    f_primes = set(factorize(abs(f)).primes)
    value = 1 + 0j
    for p in f_primes:
        value *= 1 - chi(p) / p
    ps = primes_up_to(P0)
    table = chi.value_table()
    chi_p = table[ps % chi.modulus] if chi.modulus > 1 else np.ones(len(ps))
    pf = ps.astype(np.float64)
    coprime = np.array([int(p) not in f_primes for p in ps])
    factors = 1.0 + chi_p[coprime] / (pf[coprime] * (pf[coprime] - 1.0))
    logs = np.log(factors.astype(np.complex128))
    value *= complex(math.exp(math.fsum(logs.real)), 0) * \
        complex(math.cos(math.fsum(logs.imag)), math.sin(math.fsum(logs.imag)))
    # |log(1+z)| <= 1.2 |z| for |z| <= 1/6 (all tail primes are >= 3)
    return EulerProduct(value, P0, 1.2 * _prime_tail(P0, 0.0))


# ---------------------------------------------------------------------------
# Shifted-sum parameters and main terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftedSumSpec:
    """Parameters (sigma, f, Y, X) of a shifted sum over Y < n <= X with
    shift argument sigma*n + f."""
    sigma: int
    f: int
    Y: int
    X: int

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")
        if self.f == 0:
            raise ValueError("f must be nonzero")
        if not (max(-self.f, 0) <= self.Y < self.X):
            raise ValueError("need max(-f, 0) <= Y < X")
        if self.sigma == 1:
            ratio = (self.X + self.f) / self.X
            if not (0.25 <= ratio <= 4.0):
                raise ValueError("need X + f comparable to X ((X+f)/X in [1/4, 4])")
        else:
            if self.f <= self.X:
                raise ValueError("need f > X when sigma = -1")

    def shift_range(self):
        """The set {sigma n + f : Y < n <= X} as an inclusive interval."""
        if self.sigma == 1:
            return self.Y + 1 + self.f, self.X + self.f
        return self.f - self.X, self.f - self.Y - 1


def titchmarsh_main_term(spec: ShiftedSumSpec, P0: int = 10 ** 6) -> float:
    """Main term of the shifted divisor sum:

        c_0(f) ((X+sf) log(sX+f) - (Y+sf) log(sY+f) + (2 gamma - 1)(X-Y))
        + 2 c_0'(f) (X-Y)

    evaluated as printed (for sigma = -1 the coefficient X + sigma f is
    negative while log(sigma X + f) = log(f - X) stays defined)."""
    s, f, Y, X = spec.sigma, spec.f, spec.Y, spec.X
    if s * X + f <= 0 or s * Y + f <= 0:
        raise ValueError("log argument <= 0 in main term")
    c0 = c_s(f, 0.0, P0)
    c0p = c0_prime(f, P0)
    bracket = (X + s * f) * math.log(s * X + f) - (Y + s * f) * math.log(s * Y + f) \
        + (2 * EULER_GAMMA - 1) * (X - Y)
    return c0.real * bracket + 2.0 * c0p.real * (X - Y)


def hooley_main_term(chi1: DirichletCharacter, chi2: DirichletCharacter,
                     spec: ShiftedSumSpec, P0: int = 10 ** 6,
                     l_target: float = 1e-10) -> float:
    """Main term of the character-convolution shifted sum:

        [ L(1, chi1 conj(chi2)) c(chi1 conj(chi2), f) mu(c2)/phi(c2)
        + L(1, conj(chi1) chi2) c(conj(chi1) chi2, f) mu(c1)/phi(c1) ] (X - Y)

    for distinct primitive chi1 mod c1, chi2 mod c2.  The assembled value must
    be essentially real (|Im| <= 1e-8); the real part is returned.
    """
    if not (chi1.is_primitive and chi2.is_primitive):
        raise ValueError("hooley_main_term requires primitive characters")
    if chi1 == chi2:
        raise ValueError("chi1 = chi2 makes L(1, chi1 conj(chi2)) a pole")
    c1, c2 = chi1.modulus, chi2.modulus
    chi_a = character_product(chi1, chi2.conjugate())
    chi_b = character_product(chi1.conjugate(), chi2)
    if chi_a.is_principal or chi_b.is_principal:
        raise ValueError("character product is principal; theorem hypothesis fails")

    def mu_over_phi(c):
        fac = factorize(c)
        mu = 0 if any(e > 1 for _, e in fac.prime_powers) else \
            (-1) ** len(fac.prime_powers)
        phi = math.prod((p - 1) * p ** (e - 1) for p, e in fac.prime_powers)
        return mu / phi

    term_a = l_one(chi_a, l_target).value * c_chi(chi_a, spec.f, P0).value \
        * mu_over_phi(c2)
    term_b = l_one(chi_b, l_target).value * c_chi(chi_b, spec.f, P0).value \
        * mu_over_phi(c1)
    total = (term_a + term_b) * (spec.X - spec.Y)
    if abs(total.imag) > 1e-8:
        raise ValueError(f"main term unexpectedly non-real (Im = {total.imag:g})")
    return total.real


def log_integral(n: float) -> float:
    """Li(n) = int_2^n dt / log t by adaptive quadrature (relative 1e-10)."""
    if n <= 2:
        return 0.0
    val, err = quad(lambda t: 1.0 / math.log(t), 2.0, n,
                    epsabs=0.0, epsrel=1e-12, limit=300)
    return val


def two_squares_main_term(n: int, P0: int = 10 ** 6) -> float:
    """Main term for the number of ways n = p + x^2 + y^2 (x, y nonzero):

        pi Li(n) prod_p (1 + chi_-4(p)/(p(p-1)))
                 prod_{p | n} (p-1)^2 / (p^2 - p + chi_-4(p)).
    """
    if n < 3:
        raise ValueError("need n >= 3")
    base = c_chi(chi_minus4(), 1, P0).real
    corr = 1.0
    for p in factorize(n).primes:
        chi = 0 if p == 2 else (1 if p % 4 == 1 else -1)
        corr *= (p - 1) ** 2 / (p * p - p + chi)
    return math.pi * log_integral(n) * base * corr


def sum_over_phi(x: int, a: int, weighted: bool = True,
                 tables=None, threads: int = 1) -> float:
    """Exact sum over m <= x, (m, a) = 1 of m/phi(m) (weighted) or 1/phi(m)."""
    if x < 2:
        raise ValueError("need x >= 2")
    if a == 0:
        raise ValueError("a must be nonzero")
    if tables is None or tables.range_start != 1 or not tables.covers(x):
        tables = build_sieve(1, x)
    phi = tables.phi[:x].astype(np.float64)
    m = np.arange(1, x + 1, dtype=np.float64)
    vals = (m / phi) if weighted else (1.0 / phi)
    mask = np.ones(x, dtype=bool)
    for p in factorize(abs(a)).primes:
        mask[p - 1::p] = False
    return deterministic_sum(np.where(mask, vals, 0.0), threads)
