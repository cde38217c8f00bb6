"""Dirichlet characters mod q with exact root-of-unity values.

A CharacterGroup holds the CRT decomposition of (Z/q)^x into cyclic pieces
with explicit generators and discrete-log tables.  A DirichletCharacter is an
exponent tuple against those generators; values are exact rational rotation
numbers k/L (L = group exponent), converted to complex on demand.  This keeps
multiplicativity tests exact: no float drift can break chi(mn) = chi(m)chi(n).

L(1, chi) is evaluated from short partial sums plus periodic Abel/Euler-
Maclaurin corrections; the tail certificate rests on the Polya-Vinogradov
bound |sum_{n<=N} chi*(n)| <= sqrt(c) log c for the primitive core chi* mod c.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .arith_core import factorize
from .errors import CapacityError

_TWO_PI = 2.0 * math.pi
_ENUM_Q_MAX = 10 ** 6

_QUARTER_TURNS = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j,
                  Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}


def _root_of_unity(fr: Fraction) -> complex:
    """e(fr) with the quarter turns exact (keeps real characters noise-free)."""
    exact = _QUARTER_TURNS.get(fr)
    if exact is not None:
        return exact
    return complex(math.cos(_TWO_PI * float(fr)), math.sin(_TWO_PI * float(fr)))


def _primitive_root_mod_p(p: int) -> int:
    if p == 2:
        return 1
    fac = factorize(p - 1).primes
    g = 2
    while True:
        if all(pow(g, (p - 1) // r, p) != 1 for r in fac):
            return g
        g += 1


def _primitive_root_prime_power(p: int, e: int) -> int:
    """Generator of the cyclic group (Z/p^e)^x for odd p."""
    g = _primitive_root_mod_p(p)
    if e == 1:
        return g
    if pow(g, p - 1, p * p) == 1:
        g += p
    return g


class CharacterGroup:
    """Structure of (Z/q)^x: cyclic components (modulus, generator, order)
    plus per-component discrete-log tables over the prime-power moduli."""

    def __init__(self, q: int):
        if q < 1:
            raise ValueError("modulus must be >= 1")
        self.q = q
        self.components = []   # (prime_power, generator, order)
        self._dlogs = []       # int64 arrays over [0, prime_power), -1 = non-unit
        for p, e in factorize(q).prime_powers:
            pe = p ** e
            if p == 2:
                if e == 1:
                    continue
                if e == 2:
                    self.components.append((4, 3, 2))
                    self._dlogs.append(np.array([-1, 0, -1, 1], dtype=np.int64))
                else:
                    half = 1 << (e - 2)
                    sign_log = np.full(pe, -1, dtype=np.int64)
                    five_log = np.full(pe, -1, dtype=np.int64)
                    v = 1
                    for k in range(half):
                        sign_log[v] = 0
                        five_log[v] = k
                        sign_log[pe - v] = 1
                        five_log[pe - v] = k
                        v = v * 5 % pe
                    self.components.append((pe, pe - 1, 2))
                    self._dlogs.append(sign_log)
                    self.components.append((pe, 5, half))
                    self._dlogs.append(five_log)
            else:
                g = _primitive_root_prime_power(p, e)
                order = pe // p * (p - 1)
                table = np.full(pe, -1, dtype=np.int64)
                v = 1
                for k in range(order):
                    table[v] = k
                    v = v * g % pe
                self.components.append((pe, g, order))
                self._dlogs.append(table)
        self.orders = tuple(d for _, _, d in self.components)
        self.exponent = math.lcm(*self.orders) if self.orders else 1
        self.phi = math.prod(self.orders) if self.orders else 1

    def dlog(self, n: int):
        """Discrete-log tuple of n, or None if gcd(n, q) > 1."""
        if math.gcd(n, self.q) != 1:
            return None
        out = []
        for (pe, _, _), table in zip(self.components, self._dlogs):
            k = table[n % pe]
            if k < 0:  # unreachable once the gcd test passed
                return None
            out.append(int(k))
        return tuple(out)

    def dlog_arrays(self, ns: np.ndarray):
        """Vectorized dlogs: list of int64 arrays, -1 marking non-units."""
        return [table[np.asarray(ns) % pe]
                for (pe, _, _), table in zip(self.components, self._dlogs)]


@lru_cache(maxsize=64)
def character_group(q: int) -> CharacterGroup:
    return CharacterGroup(q)


class DirichletCharacter:
    """chi mod q determined by exponents t_i against the group generators:
    chi(g_i) = e(t_i / d_i).  Values are exact Fractions k/L."""

    def __init__(self, q: int, exponents=()):
        self.group = character_group(q)
        exponents = tuple(int(t) % d for t, d in
                          zip(exponents, self.group.orders)) if exponents else \
            tuple(0 for _ in self.group.orders)
        if len(exponents) != len(self.group.orders):
            raise ValueError("exponent tuple does not match group structure")
        self.exponents = exponents
        self._conductor = None
        self._table = None

    # -- basic structure ---------------------------------------------------

    @property
    def modulus(self) -> int:
        return self.group.q

    @property
    def is_principal(self) -> bool:
        return all(t == 0 for t in self.exponents)

    def value_fraction(self, n: int):
        """Exact rotation number of chi(n) in [0, 1), or None when chi(n)=0."""
        dl = self.group.dlog(n % self.modulus if self.modulus > 1 else 0)
        if self.modulus == 1:
            return Fraction(0)
        if dl is None:
            return None
        fr = Fraction(0)
        for t, k, d in zip(self.exponents, dl, self.group.orders):
            fr += Fraction(t * k, d)
        return fr % 1

    def __call__(self, n: int) -> complex:
        fr = self.value_fraction(n)
        if fr is None:
            return 0j
        return _root_of_unity(fr)

    def value_table(self) -> np.ndarray:
        """chi(n) for n = 0..q-1 as complex128 (cached)."""
        if self._table is None:
            q = self.modulus
            if q == 1:
                self._table = np.ones(1, dtype=np.complex128)
            else:
                ns = np.arange(q)
                L = self.group.exponent
                k = np.zeros(q, dtype=np.int64)
                unit = np.gcd(ns, q) == 1
                for t, d, dl in zip(self.exponents, self.group.orders,
                                    self.group.dlog_arrays(ns)):
                    k += (t * (L // d)) * np.where(dl < 0, 0, dl)
                kk = k % L
                vals = np.exp(2j * math.pi * kk / L)
                quarter = (4 * kk) % L == 0
                vals[quarter] = 1j ** ((4 * kk[quarter]) // L)
                vals[~unit] = 0.0
                self._table = vals
        return self._table

    @property
    def parity(self) -> int:
        """chi(-1), which is +1 or -1."""
        fr = self.value_fraction(self.modulus - 1 if self.modulus > 1 else 0)
        return 1 if fr == 0 else -1

    def order(self) -> int:
        o = 1
        for t, d in zip(self.exponents, self.group.orders):
            if t:
                o = math.lcm(o, d // math.gcd(t, d))
        return o

    # -- conductor and induction --------------------------------------------

    @property
    def conductor(self) -> int:
        """Smallest d | q from which chi is induced, by direct divisor test."""
        if self._conductor is None:
            q = self.modulus
            for d in factorize(q).divisors():
                if self._induced_from(d):
                    self._conductor = d
                    break
        return self._conductor

    def _induced_from(self, d: int) -> bool:
        q = self.modulus
        for n in range(1 + d, q + 1, d):
            if math.gcd(n, q) == 1 and self.value_fraction(n) != 0:
                return False
        return True

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    def primitive_core(self) -> "DirichletCharacter":
        """The primitive character mod conductor inducing chi."""
        c = self.conductor
        q = self.modulus
        if c == q:
            return self
        core_group = character_group(c)
        exps = []
        for pe, g, d in core_group.components:
            m = g
            while math.gcd(m, q) != 1:
                m += c
            fr = self.value_fraction(m)
            t = fr * d
            if t.denominator != 1:
                raise AssertionError("induction failed: non-integral exponent")
            exps.append(int(t) % d)
        chi = DirichletCharacter(c, tuple(exps))
        chi._conductor = c
        return chi

    def conjugate(self) -> "DirichletCharacter":
        return DirichletCharacter(
            self.modulus,
            tuple((-t) % d for t, d in zip(self.exponents, self.group.orders)))

    # -- misc ----------------------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, DirichletCharacter)
                and self.modulus == other.modulus
                and self.exponents == other.exponents)

    def __hash__(self):
        return hash((self.modulus, self.exponents))

    def __repr__(self):
        return f"DirichletCharacter(q={self.modulus}, exponents={self.exponents})"


def principal_character(q: int) -> DirichletCharacter:
    return DirichletCharacter(q)


def chi_minus4() -> DirichletCharacter:
    """The non-principal character mod 4 (chi(1)=1, chi(3)=-1)."""
    return DirichletCharacter(4, (1,))


def enumerate_characters(q: int) -> list:
    """All phi(q) characters mod q, conductors computed exactly.

    Characters are produced in lexicographic exponent order, so the output
    order is deterministic and indexable.
    """
    if q > _ENUM_Q_MAX:
        raise CapacityError(f"character enumeration capped at q <= {_ENUM_Q_MAX}")
    group = character_group(q)
    chars = []
    exps = [0] * len(group.orders)
    while True:
        chi = DirichletCharacter(q, tuple(exps))
        chi.conductor  # force exact conductor computation
        chars.append(chi)
        for i in range(len(exps) - 1, -1, -1):
            exps[i] += 1
            if exps[i] < group.orders[i]:
                break
            exps[i] = 0
        else:
            break
        if not group.orders:
            break
    return chars


def character_product(chi1: DirichletCharacter,
                      chi2: DirichletCharacter) -> DirichletCharacter:
    """The character mod lcm(q1, q2) with values chi1(n) chi2(n)."""
    L = math.lcm(chi1.modulus, chi2.modulus)
    group = character_group(L)
    exps = []
    for pe, g, d in group.components:
        fr1 = chi1.value_fraction(g)
        fr2 = chi2.value_fraction(g)
        t = (fr1 + fr2) * d
        if t.denominator != 1:
            raise AssertionError("product character has non-integral exponent")
        exps.append(int(t) % d)
    return DirichletCharacter(L, tuple(exps))


def char_convolution(chi1: DirichletCharacter, chi2: DirichletCharacter,
                     n: int, tables=None) -> complex:
    """(chi1 * chi2)(n) = sum_{d | n} chi1(d) chi2(n/d) by divisor enumeration."""
    if n < 1:
        raise ValueError("need n >= 1")
    total = 0j
    for d in factorize(n, tables).divisors():
        total += chi1(d) * chi2(n // d)
    return total


# ---------------------------------------------------------------------------
# L(1, chi) with a certified tail
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LValue:
    """An approximation to L(1, chi) with certified absolute error tail_bound."""
    value: complex
    tail_bound: float


def _periodic_profiles(vals: np.ndarray):
    """Breakpoint data of S(t) = sum_{n<=t} chi*(n) and its periodic
    antiderivative chain P1, P2, P3 (means removed at each stage).

    Returns (S, P1, P2, P3, m1, m2, m3, sup_bounds) where S..P3 are breakpoint
    arrays of length c (value at integer r), m_k the period means, and
    sup_bounds certified sup-norm bounds for S..P3 on the period.
    """
    c = len(vals)
    S = np.concatenate(([0.0 + 0j], np.cumsum(vals)))[:-1]  # S[r] = sum_{n<=r}
    m1 = S.sum() / c
    dS = S - m1
    P1 = np.concatenate(([0.0 + 0j], np.cumsum(dS)))[:-1]
    m2 = (P1 + dS / 2).sum() / c
    dP1 = P1 - m2
    P2 = np.concatenate(([0.0 + 0j], np.cumsum(dP1 + dS / 2)))[:-1]
    m3 = (P2 + dP1 / 2 + dS / 6).sum() / c
    dP2 = P2 - m3
    P3 = np.concatenate(([0.0 + 0j], np.cumsum(dP2 + dP1 / 2 + dS / 6)))[:-1]

    sup_s = float(np.abs(S).max())
    sup_p1 = float(np.abs(P1).max()) + sup_s + abs(m1)
    sup_p2 = float(np.abs(P2).max()) + sup_p1 + abs(m2)
    sup_p3 = float(np.abs(P3).max()) + sup_p2 + abs(m3)
    return S, P1, P2, P3, m1, m2, m3, (sup_s, sup_p1, sup_p2, sup_p3)


def l_one(chi: DirichletCharacter, target_abs_err: float = 1e-10) -> LValue:
    """L(1, chi) = sum_{n>=1} chi(n)/n for non-principal chi.

    Method: induce chi to its primitive core chi* mod c; evaluate
    sum_{n<=N} chi*(n)/n plus three periodic Abel-summation correction terms;
    the remainder is certified through the Polya-Vinogradov partial-sum bound
    B = sqrt(c) log c.  Finally multiply by the Euler factors
    prod_{p | q, p not| c} (1 - chi*(p)/p) for the imprimitive modulus.
    """
    if chi.is_principal:
        raise ValueError("L(1, chi) has a pole for principal chi")
    if target_abs_err <= 0:
        raise ValueError("target_abs_err must be positive")
    core = chi.primitive_core()
    c = core.modulus
    vals = core.value_table()[np.arange(1, c + 1) % c]  # chi*(1..c)

    euler = 1.0 + 0j
    euler_abs = 1.0
    for p in factorize(chi.modulus).primes:
        if c % p != 0:
            f = 1 - core(p) / p
            euler *= f
            euler_abs *= abs(f)

    B = math.sqrt(c) * math.log(c)
    S, P1, P2, P3, m1, m2, m3, sups = _periodic_profiles(vals)
    # remainder after three correction orders: 24*I3, |I3| <= sup|P3|/(4 N^4)
    budget = target_abs_err / max(euler_abs, 1e-30) / 2.0
    N = max(2 * c, math.ceil((6.0 * sups[3] / budget) ** 0.25))
    N = ((N + c - 1) // c) * c + c // 2  # not at a period boundary, just tidy

    ns = np.arange(1, N + 1)
    terms = vals[(ns - 1) % c] / ns
    partial = complex(math.fsum(terms.real), math.fsum(terms.imag))

    r = N % c
    tail = (-S[r] + m1) / N + (-P1[r] + m2) / N ** 2 \
        + (-2 * P2[r] + 2 * m3) / N ** 3 - 6 * P3[r] / N ** 4
    remainder_bound = 6.0 * sups[3] / N ** 4

    value = (partial + tail) * euler
    # float slack: fsum is correctly rounded; correction terms are few flops
    float_slack = 64 * np.finfo(float).eps * (abs(partial) + abs(value) + 1.0)
    tail_bound = remainder_bound * euler_abs + float_slack
    if tail_bound > target_abs_err:
        raise AssertionError("certified tail exceeds requested target")
    if B < sups[0] - 1e-9:
        raise AssertionError("Polya-Vinogradov bound violated by period table")
    return LValue(value, tail_bound)


def u_R(n: int, q: int, R: float, chars=None) -> complex:
    """(1/phi(q)) * sum over chi mod q with cond(chi) > R of chi(n).

    Equals 1_{n = 1 mod q} minus the low-conductor character average; zero
    whenever gcd(n, q) > 1 or q <= R.
    """
    if q < 1:
        raise ValueError("need q >= 1")
    if q <= R or math.gcd(n, q) > 1:
        return 0j
    if chars is None:
        chars = enumerate_characters(q)
    total = 0j
    for chi in chars:
        if chi.conductor > R:
            total += chi(n)
    return total / character_group(q).phi
