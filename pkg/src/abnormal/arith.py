"""Integer and rational primitives used by every other module.

Exact rationals are ``fractions.Fraction`` throughout: it already keeps
values in lowest terms with a positive denominator, which is exactly the
canonical form required here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

DEFAULT_TRIAL_BOUND = 10**7

# Deterministic Miller-Rabin witness set, valid for all n < 3.3 * 10^24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_MR_VALID_BELOW = 3317044064679887385961981


def is_prime(n: int) -> bool:
    """Deterministic primality test for n below ~3.3e24."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    if n >= _MR_VALID_BELOW:
        raise ValueError(f"primality test not deterministic for n >= {_MR_VALID_BELOW}")
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int, trial_bound: int = DEFAULT_TRIAL_BOUND) -> list[tuple[int, int]]:
    """Prime factorization as (prime, exponent) pairs, primes increasing.

    Trial division up to ``trial_bound``, then a deterministic primality
    test on the cofactor.  A composite cofactor beyond the bound is a
    budget failure, not something to guess at.
    """
    if n < 1:
        raise ValueError("factorize requires n >= 1")
    factors: list[tuple[int, int]] = []
    for p in (2, 3):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            factors.append((p, e))
    d = 5
    step = 2
    while d * d <= n and d <= trial_bound:
        e = 0
        while n % d == 0:
            n //= d
            e += 1
        if e:
            factors.append((d, e))
        d += step
        step = 6 - step
    if n > 1:
        if d * d > n or is_prime(n):
            factors.append((n, 1))
        else:
            from .errors import BudgetError

            raise BudgetError(
                f"cofactor {n} is composite with no prime factor <= {trial_bound}"
            )
    return factors


@dataclass(frozen=True)
class FactoredInteger:
    """A positive integer together with its prime factorization."""

    value: int
    factorization: tuple[tuple[int, int], ...]

    @classmethod
    def of(cls, n: int, trial_bound: int = DEFAULT_TRIAL_BOUND) -> "FactoredInteger":
        return cls(n, tuple(factorize(n, trial_bound)))

    def __post_init__(self) -> None:
        prod = 1
        prev = 1
        for p, e in self.factorization:
            if p <= prev:
                raise ValueError("primes must be strictly increasing")
            prev = p
            prod *= p**e
        if prod != self.value:
            raise ValueError("factorization does not multiply back to value")

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factorization)


def mod_pow(base: int, exponent: int, modulus: int) -> int:
    """base**exponent mod modulus for nonnegative exponents."""
    if exponent < 0:
        raise ValueError("exponent must be nonnegative")
    if modulus < 1:
        raise ValueError("modulus must be positive")
    return pow(base, exponent, modulus)


def euler_phi(n: int) -> int:
    """Count of 1 <= a <= n coprime to n."""
    if n < 1:
        raise ValueError("euler_phi requires n >= 1")
    result = n
    for p, _ in factorize(n):
        result -= result // p
    return result


def multiplicative_order(b: int, q: int) -> int:
    """Least t >= 1 with b**t = 1 mod q.

    Computed by descending from phi(q): divide out each prime factor of
    phi(q) while the power still maps to 1.
    """
    if q < 1:
        raise ValueError("modulus must be positive")
    if math.gcd(b, q) != 1:
        raise ValueError(f"order undefined: gcd({b}, {q}) != 1")
    if q == 1:
        return 1
    t = euler_phi(q)
    for p, _ in factorize(t):
        while t % p == 0 and pow(b, t // p, q) == 1:
            t //= p
    return t


def is_primitive_root(g: int, n: int) -> bool:
    """True iff the order of g mod n equals phi(n)."""
    if math.gcd(g, n) != 1:
        raise ValueError(f"gcd({g}, {n}) != 1")
    return multiplicative_order(g, n) == euler_phi(n)


def p_adic_valuation(n: int, p: int) -> int:
    """Largest e with p**e dividing n."""
    if n < 1:
        raise ValueError("p_adic_valuation requires n >= 1")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def coprime_part(q: int, b: int) -> int:
    """Largest divisor of q coprime to b."""
    if q < 1 or b < 1:
        raise ValueError("arguments must be positive")
    g = math.gcd(q, b)
    while g > 1:
        while q % g == 0:
            q //= g
        g = math.gcd(q, b)
    return q


def lemma3_check(k: int, p: int, r: int) -> bool:
    """Whether p**(r+1) divides (k+1)**p - 1, given that p**r divides k.

    The precondition failure is a distinct error; a False return would
    mean the divisibility statement itself failed.
    """
    if r < 1 or k < 1:
        raise ValueError("k and r must be positive")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if k % p**r != 0:
        raise ValueError(f"precondition violated: {p}^{r} does not divide {k}")
    modulus = p ** (r + 1)
    return pow(k + 1, p, modulus) == 1


def lemma4_check(k: int, m: int, budget_bits: int | None = None) -> bool:
    """Whether k**(m+1) divides (k+1)**(k**m) - 1.

    Evaluated by modular exponentiation; the budget guard bounds the
    size the fully materialized power would have.
    """
    if k < 2 or m < 1:
        raise ValueError("requires k >= 2 and m >= 1")
    if budget_bits is None:
        from .magnitude import budget_bits as default_budget

        budget_bits = default_budget()
    exponent = k**m
    if exponent * math.log2(k + 1) > budget_bits:
        from .errors import BudgetError

        raise BudgetError(f"({k}+1)^({k}^{m}) exceeds {budget_bits} bits")
    return pow(k + 1, exponent, k ** (m + 1)) == 1
