"""The d-sequence and its rational approximants.

Starting from alpha_2 = a/2^(n_2) with a odd, the recursion

    d_2 = 2^(n_2),   d_j = j^(n_j * d_{j-1} / (j-1))   for j >= 3,
    alpha_k = alpha_2 * prod_{j=3..k} (1 - 1/d_j),

drives everything in this package.  The exponent n_j*d_{j-1}/(j-1) is a
positive integer because d_{j-1} is a positive power of j-1; the code
asserts that wherever the numbers are small enough to check directly.

Exponent rules: all-ones (the standard choice), an explicit finite list
(ones beyond its end), or n_j = phi(j-1), which makes the recursion read
d_j = j^(phi(d_{j-1})) by the totient identity phi(m^e) = m^(e-1)*phi(m).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .arith import euler_phi
from .errors import BudgetError
from .magnitude import (
    CertifiedOrdering,
    Ordering,
    TowerMagnitude,
    _approx_str,
    budget_bits,
    compare_products,
)

# Cheap-enough size (in bits) for non-circular checks on materialized values.
_DIRECT_CHECK_BITS = 1 << 13

# How far to scan for a first differing exponent index before declaring two
# parameter sets effectively identical.
_RULE_SCAN_SLACK = 8


@dataclass(frozen=True)
class ExponentRule:
    """Source of the exponent multipliers n_3, n_4, ...

    kind "ones": n_j = 1.  kind "explicit": n_j read from values (which
    list n_3 onward, all-ones past the end).  kind "phi": n_j = phi(j-1).
    """

    kind: str
    values: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in ("ones", "explicit", "phi"):
            raise ValueError(f"unknown exponent rule kind {self.kind!r}")
        if self.kind != "explicit" and self.values:
            raise ValueError(f"rule {self.kind!r} takes no explicit values")
        if not isinstance(self.values, tuple):
            object.__setattr__(self, "values", tuple(self.values))
        for v in self.values:
            if not isinstance(v, int) or v < 1:
                raise ValueError("explicit exponents must be positive integers")

    @classmethod
    def ones(cls) -> "ExponentRule":
        return cls("ones")

    @classmethod
    def phi(cls) -> "ExponentRule":
        return cls("phi")

    @classmethod
    def explicit(cls, values) -> "ExponentRule":
        return cls("explicit", tuple(values))

    def n(self, j: int) -> int:
        if j < 3:
            raise ValueError("exponent multipliers start at j = 3")
        if self.kind == "ones":
            return 1
        if self.kind == "phi":
            return euler_phi(j - 1)
        idx = j - 3
        return self.values[idx] if idx < len(self.values) else 1

    def is_all_ones(self) -> bool:
        if self.kind == "ones":
            return True
        if self.kind == "explicit":
            return all(v == 1 for v in self.values)
        return False

    def __str__(self) -> str:
        if self.kind == "explicit":
            return "list:" + ",".join(str(v) for v in self.values)
        return self.kind


@dataclass(frozen=True)
class ConstructionParams:
    """alpha_2 = initial_numerator / 2^initial_exponent, plus the n_j rule."""

    initial_numerator: int
    initial_exponent: int
    rule: ExponentRule = field(default_factory=ExponentRule.ones)

    def __post_init__(self) -> None:
        a, n2 = self.initial_numerator, self.initial_exponent
        if not isinstance(a, int) or a < 1 or a % 2 == 0:
            raise ValueError("initial numerator must be a positive odd integer")
        if not isinstance(n2, int) or n2 < 1:
            raise ValueError("initial exponent must be a positive integer")
        if a.bit_length() > n2:
            raise ValueError("initial numerator must satisfy a < 2**n2")
        if n2 > budget_bits():
            raise BudgetError("2**n2 would exceed the materialization budget")

    @property
    def alpha2(self) -> Fraction:
        return Fraction(self.initial_numerator, 2**self.initial_exponent)

    def serialize(self) -> dict:
        return {
            "a": self.initial_numerator,
            "n2": self.initial_exponent,
            "rule": str(self.rule),
        }

    def __str__(self) -> str:
        return f"a={self.initial_numerator}, n2={self.initial_exponent}, rule={self.rule}"


def standard_params() -> ConstructionParams:
    """a=3, n_2=2, all n_j = 1: d_2=4, d_3=9, d_4=64, d_5=5^16, ..."""
    return ConstructionParams(3, 2, ExponentRule.ones())


def phi_variant_params() -> ConstructionParams:
    """a=1, n_2=1 under the totient rule: d_5 = 5^8, d_6 = 6^312500, ..."""
    return ConstructionParams(1, 1, ExponentRule.phi())


class DSequence:
    """Lazy cache of the d_j as TowerMagnitudes.

    d(j) returns the canonical form (materialized to an exact integer
    whenever it fits the budget); d_structured(j) always returns the
    power form j^(E_j) for j >= 3, which comparison machinery needs when
    a materialized value must still be raised to a huge power.  Caches
    are append-only and idempotent, so concurrent readers are safe.
    """

    def __init__(self, params: ConstructionParams) -> None:
        self.params = params
        self._d: dict = {}
        self._exp: dict = {}

    def exponent(self, j: int) -> TowerMagnitude:
        """E_j = n_j * d_{j-1} / (j-1), the exponent of d_j (j >= 3)."""
        if j < 3:
            raise ValueError("exponents are defined for j >= 3")
        cached = self._exp.get(j)
        if cached is not None:
            return cached
        n_j = self.params.rule.n(j)
        prev = self.d(j - 1)
        ratio = Fraction(n_j, j - 1)
        if prev.is_exact:
            e = prev.coef * ratio
            assert e.denominator == 1 and e > 0, "exponent must be a positive integer"
            if (
                self.params.rule.kind == "phi"
                and prev.coef.numerator.bit_length() <= _DIRECT_CHECK_BITS
            ):
                # the totient identity behind the d_j = j^(phi(d_{j-1})) view
                assert euler_phi(int(prev.coef)) == int(e)
            out = TowerMagnitude.exact(e)
        else:
            out = prev.scaled(ratio)
        self._exp[j] = out
        return out

    def d(self, j: int) -> TowerMagnitude:
        if j < 2:
            raise ValueError("the sequence starts at j = 2")
        cached = self._d.get(j)
        if cached is not None:
            return cached
        if j == 2:
            out = TowerMagnitude.power(2, self.params.initial_exponent)
        else:
            out = TowerMagnitude(Fraction(1), j, self.exponent(j)).collapsed()
        self._d[j] = out
        return out

    def d_structured(self, j: int) -> TowerMagnitude:
        if j == 2:
            return self.d(2)
        return TowerMagnitude(Fraction(1), j, self.exponent(j))

    def largest_materializable(self, cap: int = 64) -> int:
        """Largest j <= cap with d_j within the materialization budget."""
        j = 2
        while j < cap and self.d(j + 1).is_materializable():
            j += 1
        return j


def alpha_exact(
    params: ConstructionParams, k: int, dseq: "DSequence | None" = None
) -> Fraction:
    """alpha_k in lowest terms; needs every d_j, j <= k, within budget."""
    if k < 2:
        raise ValueError("approximants start at k = 2")
    if dseq is None:
        dseq = DSequence(params)
    alpha = params.alpha2
    for j in range(3, k + 1):
        dj = dseq.d(j)
        if not dj.is_materializable():
            raise BudgetError(
                f"d_{j} exceeds the materialization budget; "
                f"largest materializable index is {j - 1}"
            )
        v = dj.exact_int()
        alpha *= Fraction(v - 1, v)
    return alpha


def integrality_check(params: ConstructionParams, k: int) -> tuple:
    """Whether d_k * alpha_k is an integer, plus that integer.

    True for every valid parameter set (alpha_k is a d_k-adic fraction);
    the check recomputes it honestly instead of assuming.
    """
    dseq = DSequence(params)
    alpha = alpha_exact(params, k, dseq)
    product = alpha * dseq.d(k).exact_value()
    if product.denominator != 1:
        return False, None
    return True, int(product)


def target_interval(u, v) -> ConstructionParams:
    """Parameters whose limit provably lies in the open interval (u, v).

    Deterministic choice: the smallest n_2 with 2^(n_2) >= 4/(v-u), then
    the smallest odd a with u + (v-u)/4 < a/2^(n_2) < v, all n_j = 1.
    The limit lies in [alpha_2 - 2/d_3, alpha_2], which sits inside
    (u, v) because 2/d_3 is far below the (v-u)/4 margin; the returned
    parameters are re-certified before being handed back.
    """
    u, v = Fraction(u), Fraction(v)
    if not (0 <= u < v <= 1):
        raise ValueError("need 0 <= u < v <= 1")
    width = v - u
    need = 4 / width
    n2 = max(1, (-(-need.numerator // need.denominator) - 1).bit_length())
    scale = 2**n2
    lower = u + width / 4
    a = lower.numerator * scale // lower.denominator + 1
    while True:
        if a % 2 == 1 and lower < Fraction(a, scale) < v:
            break
        a += 1
        if Fraction(a, scale) >= v:
            raise AssertionError("no admissible numerator found; unreachable")
    params = ConstructionParams(a, n2, ExponentRule.ones())
    cert = interval_certificate(params, u, v)
    assert cert["contained"], cert
    return params


def interval_certificate(params: ConstructionParams, u, v) -> dict:
    """Check u < alpha_2 - 2/d_3 and alpha_2 < v, with exact margins.

    The limit sits in [alpha_2 - 2/d_3, alpha_2], so these two strict
    inequalities witness containment in (u, v).
    """
    u, v = Fraction(u), Fraction(v)
    alpha2 = params.alpha2
    dseq = DSequence(params)
    d3 = dseq.d(3)
    upper_ok = alpha2 < v
    if d3.is_materializable():
        tail = 2 / d3.exact_value()
        lower_ok = u < alpha2 - tail
        margin = _approx_str(alpha2 - tail - u) if lower_ok else "violated"
    else:
        verdict = compare_products(alpha2 - u, [], Fraction(2), [(d3, -1)])
        lower_ok = verdict.verdict is Ordering.GREATER
        margin = verdict.margin
    return {
        "contained": lower_ok and upper_ok,
        "alpha2": alpha2,
        "lower_margin": margin,
        "upper_margin": _approx_str(v - alpha2) if upper_ok else "violated",
    }


@dataclass(frozen=True)
class SeparationCertificate:
    """Disjoint enclosing intervals for two limits.

    Each limit lies in [alpha_k - 2/d_{k+1}, alpha_k] for its own
    sequence; `separation` certifies alpha_high - alpha_low > 2/d_{k+1}
    of the high side, which makes the intervals disjoint.
    """

    index: int
    alpha_low: Fraction
    alpha_high: Fraction
    d_next_low: TowerMagnitude
    d_next_high: TowerMagnitude
    low_is_first: bool
    separation: CertifiedOrdering

    def serialize(self) -> dict:
        return {
            "index": self.index,
            "alpha_low": str(self.alpha_low),
            "alpha_high": str(self.alpha_high),
            "d_next_low": self.d_next_low.serialize(),
            "d_next_high": self.d_next_high.serialize(),
            "low_is_first": self.low_is_first,
            "separation": {
                "verdict": self.separation.verdict.value,
                "level": self.separation.level,
                "margin": self.separation.margin,
            },
        }


def _first_differing_index(p1: ConstructionParams, p2: ConstructionParams) -> int:
    if p1.alpha2 != p2.alpha2:
        return 2
    horizon = 3 + _RULE_SCAN_SLACK
    for rule in (p1.rule, p2.rule):
        if rule.kind == "explicit":
            horizon = max(horizon, 3 + len(rule.values) + _RULE_SCAN_SLACK)
    for j in range(3, horizon + 1):
        if p1.rule.n(j) != p2.rule.n(j):
            return j
    if p1.rule.kind == p2.rule.kind == "phi" or (
        p1.rule.is_all_ones() and p2.rule.is_all_ones()
    ):
        raise ValueError("parameter sets define the same sequence")
    for j in range(horizon + 1, horizon + 1000):
        if p1.rule.n(j) != p2.rule.n(j):
            return j
    raise ValueError("parameter sets agree everywhere scanned; treating as identical")


def distinguish(
    p1: ConstructionParams, p2: ConstructionParams
) -> SeparationCertificate:
    """Certificate that the two parameter sets give distinct limits.

    Starting at the first index where the sequences differ, find k whose
    two enclosing intervals [alpha_k - 2/d_{k+1}, alpha_k] are provably
    disjoint.  The first candidate k usually works outright; when one
    interval still swallows the other (wildly different d-growth), move
    to the next k.  Runs out of budget rather than guess.
    """
    if p1 == p2:
        raise ValueError("parameter sets are identical")
    k = _first_differing_index(p1, p2)
    s1, s2 = DSequence(p1), DSequence(p2)
    while True:
        try:
            a1 = alpha_exact(p1, k, s1)
            a2 = alpha_exact(p2, k, s2)
        except BudgetError as exc:
            raise BudgetError(f"budget exceeded before separation: {exc}") from exc
        if a1 != a2:
            if a1 < a2:
                low, high = (a1, a2)
                seq_high, low_is_first = s2, True
                d_low = s1.d(k + 1)
            else:
                low, high = (a2, a1)
                seq_high, low_is_first = s1, False
                d_low = s2.d(k + 1)
            d_high = seq_high.d(k + 1)
            verdict = compare_products(high - low, [], Fraction(2), [(d_high, -1)])
            if verdict.verdict is Ordering.GREATER:
                return SeparationCertificate(
                    index=k,
                    alpha_low=low,
                    alpha_high=high,
                    d_next_low=d_low,
                    d_next_high=d_high,
                    low_is_first=low_is_first,
                    separation=verdict,
                )
        k += 1


def degenerate_check(params: ConstructionParams) -> tuple:
    """Whether these are the flagged telescoping parameters (limit 1/2... -> 0).

    alpha_2 = 1/2 with all n_j = 1 makes d_j = j and alpha_k = 1/k, a
    product that telescopes to zero instead of an irrational limit.  The
    witness lists (k, alpha_k) for k <= 10, confirmed by exact arithmetic.
    """
    if params.alpha2 != Fraction(1, 2) or not params.rule.is_all_ones():
        return False, None
    witness = [(k, alpha_exact(params, k)) for k in range(2, 11)]
    assert all(a == Fraction(1, k) for k, a in witness)
    return True, witness
