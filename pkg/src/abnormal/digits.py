"""Exact base-b digit machinery for rationals and for the constructed limit.

Expansions are canonical: of the two representations a b-adic fraction
has, the terminating one (trailing zeros) is used.  Digits are strings
over 0-9a-z (bases 2 to 36), with a compact packed-bytes export for
fixtures.  The digit oracle turns exact approximant arithmetic into
certified digits of the limit itself, refusing rather than guessing
whenever a borrow could straddle the certified range.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from fractions import Fraction

from .arith import multiplicative_order, p_adic_valuation
from .construction import ConstructionParams, DSequence, alpha_exact, degenerate_check
from .errors import BudgetError
from .magnitude import log_product_in_base

DIGIT_ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_BASE = len(DIGIT_ALPHABET)

CHAMPERNOWNE_BUDGET = 10**8
LIOUVILLE_BUDGET = 8

# Guard window scanned past a requested range before trusting digits.
GUARD_WINDOW = 16

_PACK_MAGIC = b"ABD1"


def _ensure_str_digits(n_digits: int) -> None:
    """Lift the interpreter's int-to-str conversion cap when present."""
    if hasattr(sys, "set_int_max_str_digits"):
        if sys.get_int_max_str_digits() < n_digits + 16:
            sys.set_int_max_str_digits(n_digits + 16)


def _check_base(b: int) -> None:
    if not isinstance(b, int) or b < 2 or b > MAX_BASE:
        raise ValueError(f"base must be an integer in [2, {MAX_BASE}]")


def to_base_string(n: int, b: int, width: int) -> str:
    """n rendered in base b, zero-padded on the left to `width` digits."""
    _check_base(b)
    if n < 0:
        raise ValueError("only nonnegative integers have digit renderings")
    if n >= b**width:
        raise ValueError("number does not fit in the requested width")
    _ensure_str_digits(width + 8)
    if b == 10:
        return str(n).rjust(width, "0")
    if b == 2:
        return format(n, "b").rjust(width, "0")
    if b == 16:
        return format(n, "x").rjust(width, "0")
    if b in (4, 8, 32):
        w = b.bit_length() - 1
        bits = format(n, "b").rjust(width * w, "0")
        return "".join(
            DIGIT_ALPHABET[int(bits[i : i + w], 2)] for i in range(0, len(bits), w)
        )
    if width <= 64:
        out = []
        for _ in range(width):
            n, d = divmod(n, b)
            out.append(DIGIT_ALPHABET[d])
        return "".join(reversed(out))
    half = width // 2
    hi, lo = divmod(n, b**half)
    return to_base_string(hi, b, width - half) + to_base_string(lo, b, half)


@dataclass(frozen=True)
class PeriodicExpansion:
    """Eventually periodic base-b expansion of a rational in [0, 1).

    The value is 0.<preperiod><period><period>...; an empty period means
    the expansion terminates (preperiod ends at the last nonzero digit,
    zeros afterwards).
    """

    base: int
    preperiod: str
    period: str

    @property
    def preperiod_length(self) -> int:
        return len(self.preperiod)

    @property
    def is_terminating(self) -> bool:
        return not self.period

    @property
    def termination_length(self) -> int:
        if not self.is_terminating:
            raise ValueError("expansion does not terminate")
        return len(self.preperiod)

    def digit_at(self, i: int) -> str:
        """1-indexed digit after the radix point."""
        if i < 1:
            raise ValueError("digit positions start at 1")
        if i <= len(self.preperiod):
            return self.preperiod[i - 1]
        if not self.period:
            return "0"
        return self.period[(i - len(self.preperiod) - 1) % len(self.period)]

    def prefix(self, x: int) -> str:
        if x <= len(self.preperiod):
            return self.preperiod[:x]
        if not self.period:
            return self.preperiod.ljust(x, "0")
        reps = -(-(x - len(self.preperiod)) // len(self.period))
        return (self.preperiod + self.period * reps)[:x]

    def to_fraction(self) -> Fraction:
        b, s, t = self.base, len(self.preperiod), len(self.period)
        head = int(self.preperiod, b) if self.preperiod else 0
        if not self.period:
            return Fraction(head, b**s)
        tail = Fraction(int(self.period, b), b**t - 1)
        return (head + tail) / b**s


def expand_rational(r, b: int) -> PeriodicExpansion:
    """Exact preperiod and minimal period of r in base b, via the
    denominator's structure rather than long division."""
    _check_base(b)
    r = Fraction(r)
    if not 0 <= r < 1:
        raise ValueError("expansion requires 0 <= r < 1")
    p, q = r.numerator, r.denominator
    # Split q into the part sharing primes with b and the coprime rest.
    shared_primes = []
    bb, probe = b, 2
    while probe * probe <= bb:
        if bb % probe == 0:
            if q % probe == 0:
                shared_primes.append(probe)
            while bb % probe == 0:
                bb //= probe
        probe += 1
    if bb > 1 and q % bb == 0:
        shared_primes.append(bb)
    s = 0
    for prime in shared_primes:
        ratio = -(-p_adic_valuation(q, prime) // p_adic_valuation(b, prime))
        s = max(s, ratio)
    scaled = p * b**s
    head, rem = divmod(scaled, q)
    preperiod = to_base_string(head, b, s) if s else ""
    if rem == 0:
        return PeriodicExpansion(b, preperiod, "")
    q_prime = Fraction(rem, q).denominator
    t = multiplicative_order(b, q_prime)
    cycle = Fraction(rem, q) * (b**t - 1)
    assert cycle.denominator == 1
    period = to_base_string(int(cycle), b, t)
    return PeriodicExpansion(b, preperiod, period)


def digits_prefix(r, b: int, x: int) -> str:
    """First x digits of r after the radix point (canonical expansion)."""
    _check_base(b)
    r = Fraction(r)
    if not 0 <= r < 1:
        raise ValueError("digit prefixes require 0 <= r < 1")
    if x < 1:
        raise ValueError("prefix length must be positive")
    n = r.numerator * b**x // r.denominator
    return to_base_string(n, b, x)


def digit_window(r, b: int, first: int, last: int) -> str:
    """Digits of r at positions [first, last], streamed by modular
    arithmetic so distant windows cost only one modular power."""
    _check_base(b)
    r = Fraction(r)
    if not 0 <= r < 1:
        raise ValueError("digit windows require 0 <= r < 1")
    if first < 1 or last < first:
        raise ValueError("need 1 <= first <= last")
    q = r.denominator
    rem = r.numerator * pow(b, first - 1, q) % q
    out = []
    for _ in range(last - first + 1):
        rem *= b
        d, rem = divmod(rem, q)
        out.append(DIGIT_ALPHABET[d])
    return "".join(out)


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DigitStats:
    """Occurrence counts of each digit among the first x digits."""

    base: int
    length: int
    counts: tuple

    def __post_init__(self) -> None:
        if len(self.counts) != self.base:
            raise ValueError("need one count per digit")
        if sum(self.counts) != self.length or any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative and sum to the length")

    @classmethod
    def of(cls, digits: str, b: int) -> "DigitStats":
        _check_base(b)
        counts = [0] * b
        for ch in digits:
            counts[_digit_value(ch, b)] += 1
        return cls(b, len(digits), tuple(counts))

    def frequency(self, a: int) -> Fraction:
        if not 0 <= a < self.base:
            raise ValueError("digit out of range")
        if self.length == 0:
            raise ValueError("no digits to take frequencies of")
        return Fraction(self.counts[a], self.length)

    def serialize(self) -> dict:
        return {"base": self.base, "length": self.length, "counts": list(self.counts)}


def _digit_value(ch: str, b: int) -> int:
    v = DIGIT_ALPHABET.find(ch.lower())
    if v < 0 or v >= b:
        raise ValueError(f"{ch!r} is not a base-{b} digit")
    return v


def count_digit(digits: str, a: int, base: "int | None" = None) -> int:
    """Occurrences of the digit value a in the string."""
    limit = base if base is not None else MAX_BASE
    if not 0 <= a < limit:
        raise ValueError("digit out of range")
    return digits.count(DIGIT_ALPHABET[a])


def frequency(digits: str, a: int, base: "int | None" = None) -> Fraction:
    """Relative frequency of the digit value a in the string."""
    if not digits:
        raise ValueError("no digits to take frequencies of")
    return Fraction(count_digit(digits, a, base), len(digits))


def count_string(digits: str, s: str) -> int:
    """Number of (overlapping) occurrences of s."""
    if not s:
        raise ValueError("the searched string must be nonempty")
    n, start = 0, 0
    while True:
        idx = digits.find(s, start)
        if idx < 0:
            return n
        n += 1
        start = idx + 1


# ---------------------------------------------------------------------------
# Reference corpus
# ---------------------------------------------------------------------------


def champernowne_prefix(x: int) -> str:
    """First x digits of 0.123456789101112..."""
    if x < 1:
        raise ValueError("prefix length must be positive")
    if x > CHAMPERNOWNE_BUDGET:
        raise BudgetError(f"champernowne prefix capped at {CHAMPERNOWNE_BUDGET} digits")
    parts = []
    total = 0
    n = 1
    while total < x:
        piece = str(n)
        parts.append(piece)
        total += len(piece)
        n += 1
    return "".join(parts)[:x]


def liouville_partial(k: int) -> Fraction:
    """The k-th partial sum of sum 10^(-n!)."""
    if k < 1:
        raise ValueError("partial sums start at k = 1")
    if k > LIOUVILLE_BUDGET:
        raise BudgetError(f"liouville partial sums capped at k = {LIOUVILLE_BUDGET}")
    total = Fraction(0)
    fact = 1
    for n in range(1, k + 1):
        fact *= n
        total += Fraction(1, 10**fact)
    return total


# ---------------------------------------------------------------------------
# Packed export
# ---------------------------------------------------------------------------


def pack_digits(digits: str, b: int) -> bytes:
    """Compact binary form: magic, base, length, bit-packed digits."""
    _check_base(b)
    width = (b - 1).bit_length()
    acc = 0
    for ch in reversed(digits):
        acc = (acc << width) | _digit_value(ch, b)
    payload = acc.to_bytes((len(digits) * width + 7) // 8 or 1, "big")
    return _PACK_MAGIC + bytes([b]) + len(digits).to_bytes(8, "big") + payload


def unpack_digits(blob: bytes) -> tuple:
    """Inverse of pack_digits: returns (digits, base)."""
    if blob[: len(_PACK_MAGIC)] != _PACK_MAGIC:
        raise ValueError("not a packed digit blob")
    b = blob[len(_PACK_MAGIC)]
    _check_base(b)
    n = int.from_bytes(blob[len(_PACK_MAGIC) + 1 : len(_PACK_MAGIC) + 9], "big")
    acc = int.from_bytes(blob[len(_PACK_MAGIC) + 9 :], "big")
    width = (b - 1).bit_length()
    mask = (1 << width) - 1
    out = []
    for _ in range(n):
        out.append(DIGIT_ALPHABET[acc & mask])
        acc >>= width
    return "".join(out), b


# ---------------------------------------------------------------------------
# Digit oracle for the limit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleDigits:
    """Digits of the limit with the evidence that makes them certified.

    kind "verbatim": the approximant's digits are the limit's digits
    outright, witnessed by a nonzero digit shortly past the range that
    blocks any borrow from reaching it.  kind "borrow": the approximant
    terminates inside the range, so subtracting the (certified-tiny)
    tail decrements its last digit and fills with b-1 afterwards.
    """

    digits: str
    first: int
    last: int
    base: int
    k: int
    safe_limit: int
    kind: str
    detail: dict

    def serialize(self) -> dict:
        return {
            "digits": self.digits,
            "first": self.first,
            "last": self.last,
            "base": self.base,
            "k": self.k,
            "safe_limit": self.safe_limit,
            "kind": self.kind,
            "detail": self.detail,
        }


def safe_limit(params: ConstructionParams, b: int, dseq: "DSequence | None" = None) -> tuple:
    """(largest materializable K, last certified digit position in base b).

    The limit differs from alpha_K by less than 2/d_{K+1}, so digits up
    to floor(log_b(d_{K+1}/2)) - 2 can be settled; the floor is taken on
    the lower end of a certified enclosure, which only ever shortens the
    certified range, never overstates it.
    """
    _check_base(b)
    if dseq is None:
        dseq = DSequence(params)
    k = dseq.largest_materializable()
    enclosure = log_product_in_base(Fraction(1, 2), [(dseq.d(k + 1), 1)], b)
    return k, enclosure.floor_lower() - 2


def alpha_digit_oracle(
    params: ConstructionParams, b: int, first: int, last: int
) -> OracleDigits:
    """Certified digits of the limit at positions [first, last] in base b.

    Expands the last materializable approximant exactly, then rules out
    any borrow from the remaining tail: either a nonzero approximant
    digit shortly past the range blocks it, or the approximant
    terminates inside the range and the borrow is resolved explicitly.
    Anything else is an error, never a guess.
    """
    _check_base(b)
    if first < 1 or last < first:
        raise ValueError("need 1 <= first <= last")
    degenerate, _ = degenerate_check(params)
    if degenerate:
        raise ValueError(
            "degenerate parameters: the approximants telescope to zero, "
            "so there is no limit to take digits of"
        )
    dseq = DSequence(params)
    k, limit = safe_limit(params, b, dseq)
    if last > limit:
        raise ValueError(
            f"positions beyond {limit} are not certified by d_{k + 1} "
            f"(requested last = {last})"
        )
    alpha = alpha_exact(params, k, dseq)
    expansion = expand_rational(alpha, b)
    raw = digit_window(alpha, b, first, last)

    guard_lo = last + 1
    guard_hi = min(last + GUARD_WINDOW, limit + 2)
    guard = digit_window(alpha, b, guard_lo, guard_hi)
    nonzero_at = next(
        (guard_lo + i for i, ch in enumerate(guard) if ch != "0"), None
    )
    eps_note = (
        f"0 < alpha_{k} - alpha < 2/d_{k + 1} <= {b}^-({limit + 2}), so no "
        f"borrow can cross a nonzero digit at or before position {limit + 2}"
    )
    if nonzero_at is not None:
        return OracleDigits(
            digits=raw,
            first=first,
            last=last,
            base=b,
            k=k,
            safe_limit=limit,
            kind="verbatim",
            detail={
                "guard_window": [guard_lo, guard_hi],
                "nonzero_at": nonzero_at,
                "bound": eps_note,
            },
        )
    if expansion.is_terminating:
        tau = expansion.termination_length
        if tau <= last:
            filled = [
                DIGIT_ALPHABET[b - 1] if pos > tau else raw[pos - first]
                for pos in range(first, last + 1)
            ]
            if first <= tau:
                decremented = _digit_value(raw[tau - first], b) - 1
                assert decremented >= 0
                filled[tau - first] = DIGIT_ALPHABET[decremented]
            return OracleDigits(
                digits="".join(filled),
                first=first,
                last=last,
                base=b,
                k=k,
                safe_limit=limit,
                kind="borrow",
                detail={
                    "termination": tau,
                    "run_certified_through": limit + 2,
                    "bound": eps_note,
                    "note": (
                        f"alpha_{k} terminates at position {tau}; subtracting the "
                        f"positive tail decrements that digit and fills with "
                        f"{b - 1} at least through position {limit + 2}"
                    ),
                },
            )
        if tau <= limit + 2:
            # The terminating digit itself is the nonzero witness.
            return OracleDigits(
                digits=raw,
                first=first,
                last=last,
                base=b,
                k=k,
                safe_limit=limit,
                kind="verbatim",
                detail={
                    "guard_window": [guard_lo, guard_hi],
                    "nonzero_at": tau,
                    "bound": eps_note,
                },
            )
    raise ValueError(
        f"guard window [{guard_lo}, {guard_hi}] of alpha_{k} is all zeros and "
        "no terminating digit certifies the range; a borrow could straddle "
        "the requested positions — refusing to guess"
    )
