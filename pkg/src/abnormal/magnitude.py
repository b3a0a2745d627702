"""Tower-sized positive quantities with certified interval comparisons.

A TowerMagnitude is ``coef * base**E`` where the exponent E is itself a
TowerMagnitude.  Values small enough to materialize are held exactly;
everything else is compared through certified enclosures of (iterated)
logarithms computed with outward-rounded interval arithmetic, so a
verdict is a proof, never an estimate.

The numeric accessors expose two levels (log and log-log).  The
comparison engine goes further: it rewrites both sides as sums of
coefficient-weighted tower values and descends through logarithms
symbolically until everything in sight fits in an interval float, so
towers of any height that arise here can still be ordered.  Coefficient
bookkeeping stays exact (Fractions attached to log10(prime) atoms) so
that identical contributions cancel exactly instead of leaving residual
interval slop that no precision could shrink.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Optional

import mpmath
from mpmath import mp
from mpmath.ctx_iv import MPIntervalContext

from .errors import BudgetError, LevelError, PrecisionError

DEFAULT_BUDGET_BITS = 1 << 26
BUDGET_ENV_VAR = "ABNORMAL_BUDGET_BITS"

START_DPS = 64
MAX_DPS = 4096
MAX_DESCENT_DEPTH = 64

# Largest log2-magnitude we still treat as fitting in one float level.
_REPRESENTABLE_LOG2 = 2.0**50


def budget_bits() -> int:
    """Materialization budget in bits; overridable via the environment."""
    raw = os.environ.get(BUDGET_ENV_VAR)
    if raw is None:
        return DEFAULT_BUDGET_BITS
    value = int(raw)
    if value < 64:
        raise ValueError(f"{BUDGET_ENV_VAR} must be at least 64")
    return value


# ---------------------------------------------------------------------------
# Rough magnitude estimates (routing only, never certification)
# ---------------------------------------------------------------------------

# A positive real r is roughly (h, x): r = exp2 applied h times to x.
_ROUGH_CAP = 1e300


def _rough_normalize(h: int, x: float) -> tuple[int, float]:
    while h > 0 and x < 64.0:
        h -= 1
        x = 2.0**x
    return h, x


def _rough_of_fraction(f: Fraction) -> tuple[int, float]:
    p, q = f.numerator, f.denominator
    if p.bit_length() < 900 and q.bit_length() < 900:
        return _rough_normalize(0, float(p) / float(q))
    return _rough_normalize(1, float(p.bit_length() - q.bit_length()))


def _rough_log2(r: tuple[int, float]) -> tuple[int, float]:
    h, x = r
    if h > 0:
        return _rough_normalize(h - 1, x)
    return _rough_normalize(0, math.log2(x) if x > 1.0 else 0.5)


def _rough_exp2(r: tuple[int, float]) -> tuple[int, float]:
    h, x = r
    if h == 0 and x < 900.0:
        return 0, 2.0**x
    return h + 1, x


def _rough_add(a: tuple[int, float], b: tuple[int, float]) -> tuple[int, float]:
    if a[0] == 0 and b[0] == 0 and a[1] + b[1] < _ROUGH_CAP:
        return 0, a[1] + b[1]
    return max(a, b)


def _rough_mul(a: tuple[int, float], b: tuple[int, float]) -> tuple[int, float]:
    if a[0] == 0 and b[0] == 0 and a[1] * b[1] < _ROUGH_CAP:
        return 0, a[1] * b[1]
    return _rough_exp2(_rough_add(_rough_log2(a), _rough_log2(b)))


def _rough_small_power(r: tuple[int, float]) -> bool:
    """Whether a value this size may be produced by direct exponentiation."""
    lg = _rough_log2(r)
    return lg[0] == 0 and abs(lg[1]) < _REPRESENTABLE_LOG2


# ---------------------------------------------------------------------------
# TowerMagnitude
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TowerMagnitude:
    """Positive quantity coef * base**exponent (or just coef when base is None).

    The d_j of the construction are always integers with coef 1; rational
    coefficients arise in derived exponents such as n_j * d_{j-1} / (j-1).
    """

    coef: Fraction
    base: Optional[int] = None
    exponent: Optional["TowerMagnitude"] = None

    def __post_init__(self) -> None:
        if not isinstance(self.coef, Fraction):
            object.__setattr__(self, "coef", Fraction(self.coef))
        if self.coef <= 0:
            raise ValueError("coefficient must be positive")
        if (self.base is None) != (self.exponent is None):
            raise ValueError("base and exponent must be given together")
        if self.base is not None and self.base < 2:
            raise ValueError("base must be at least 2")

    # -- constructors -------------------------------------------------------

    @classmethod
    def exact(cls, n: "int | Fraction") -> "TowerMagnitude":
        return cls(Fraction(n))

    @classmethod
    def power(cls, base: int, exponent: "TowerMagnitude | int") -> "TowerMagnitude":
        if isinstance(exponent, int):
            exponent = cls.exact(exponent)
        return cls(Fraction(1), base, exponent).collapsed()

    def collapsed(self) -> "TowerMagnitude":
        """Materialize to an exact value when it fits in the budget."""
        if self.base is None or not self.exponent.is_exact:
            return self
        e = self.exponent.coef
        if e.denominator != 1 or e.numerator.bit_length() > 64:
            return self
        ei = int(e)
        if abs(ei) * math.log2(self.base) > budget_bits():
            return self
        return TowerMagnitude(self.coef * Fraction(self.base) ** ei)

    # -- structure ----------------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.base is None

    @cached_property
    def height(self) -> int:
        return 0 if self.base is None else self.exponent.height + 1

    @cached_property
    def rough(self) -> tuple[int, float]:
        """(h, x) routing estimate of the value: exp2 iterated h times on x."""
        if self.base is None:
            return _rough_of_fraction(self.coef)
        log2_val = _rough_mul(self.exponent.rough, (0, math.log2(self.base)))
        if log2_val[0] == 0 and self.coef != 1:
            c = self.coef
            if c.numerator.bit_length() < 900 and c.denominator.bit_length() < 900:
                adj = math.log2(float(c.numerator) / float(c.denominator))
            else:
                adj = float(c.numerator.bit_length() - c.denominator.bit_length())
            log2_val = (0, max(log2_val[1] + adj, 0.5))
        return _rough_exp2(log2_val)

    @cached_property
    def level(self) -> int:
        """Iterated log10s needed before the quantity can be evaluated.

        Level 0: the value itself fits in an interval float (exact values
        always do; powers only while cheap direct exponentiation suffices).
        Otherwise one more level than the exponent: the log of c*b**E is
        v(E)*log10(b) + log10(c), computable exactly when E is computable.
        """
        if self.base is None:
            return 0
        if _rough_small_power(self.rough):
            return 0
        return self.exponent.level + 1

    def is_materializable(self, budget: "int | None" = None) -> bool:
        if budget is None:
            budget = budget_bits()
        if self.base is None:
            return True
        lg = _rough_log2(self.rough)
        return lg[0] == 0 and lg[1] <= budget and self.exponent.is_materializable(budget)

    def exact_value(self, budget: "int | None" = None) -> Fraction:
        """The exact rational value; BudgetError when too large to hold."""
        if self.base is None:
            return self.coef
        if not self.is_materializable(budget):
            raise BudgetError(f"{self} exceeds the materialization budget")
        e = self.exponent.exact_value(budget)
        if e.denominator != 1:
            raise ValueError(f"non-integer exponent {e} cannot be materialized")
        return self.coef * Fraction(self.base) ** int(e)

    def exact_int(self, budget: "int | None" = None) -> int:
        v = self.exact_value(budget)
        if v.denominator != 1:
            raise ValueError(f"{self} is not an integer")
        return int(v)

    # -- arithmetic helpers --------------------------------------------------

    def scaled(self, factor: "int | Fraction") -> "TowerMagnitude":
        factor = Fraction(factor)
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        if self.base is None:
            return TowerMagnitude(self.coef * factor)
        return TowerMagnitude(self.coef * factor, self.base, self.exponent)

    def pow_int(self, m: int) -> "TowerMagnitude":
        if m < 1:
            raise ValueError("power must be a positive integer")
        if self.coef != 1:
            c = self.coef
            bits = m * max(c.numerator.bit_length(), c.denominator.bit_length())
            if bits > budget_bits():
                raise BudgetError(f"coefficient of ({self})**{m} exceeds the budget")
        if self.base is None:
            return TowerMagnitude(self.coef**m)
        return TowerMagnitude(self.coef**m, self.base, self.exponent.scaled(m)).collapsed()

    def serialize(self) -> dict:
        """JSON-friendly recursive form; integers beyond 64 bits become strings."""
        if self.base is None:
            if self.coef.denominator == 1:
                n = int(self.coef)
                return {"value": n if n.bit_length() < 64 else str(n)}
            return {"value": f"{self.coef.numerator}/{self.coef.denominator}"}
        out: dict = {"base": self.base, "exponent": self.exponent.serialize()}
        if self.coef != 1:
            out["coef"] = f"{self.coef.numerator}/{self.coef.denominator}"
        return out

    def __str__(self) -> str:
        if self.base is None:
            if self.coef.denominator == 1 and self.coef.numerator.bit_length() <= 64:
                return str(self.coef.numerator)
            if self.coef.denominator == 1:
                return f"<{self.coef.numerator.bit_length()}-bit integer>"
            return f"{self.coef.numerator}/{self.coef.denominator}"
        prefix = "" if self.coef == 1 else f"({self.coef})*"
        return f"{prefix}{self.base}^({self.exponent})"


def tm_mul(a: TowerMagnitude, b: TowerMagnitude) -> TowerMagnitude:
    """Product of two magnitudes, when the result keeps a tower shape.

    Covers the shapes the construction produces: a scalar times a tower,
    and two powers of the same base whose exponents are exact or
    structurally equal.  Anything else has no representation here.
    """
    for x, y in ((a, b), (b, a)):
        if x.is_exact:
            return y.scaled(x.coef)
    if a.base == b.base:
        if a.exponent == b.exponent:
            return TowerMagnitude(
                a.coef * b.coef, a.base, a.exponent.scaled(2)
            ).collapsed()
        if a.exponent.is_exact and b.exponent.is_exact:
            e = a.exponent.coef + b.exponent.coef
            return TowerMagnitude(
                a.coef * b.coef, a.base, TowerMagnitude.exact(e)
            ).collapsed()
    raise LevelError(f"no tower representation for ({a}) * ({b})")


def tm_pow(x: TowerMagnitude, m: "TowerMagnitude | int") -> TowerMagnitude:
    """x**m for an integer m, or a tower-valued m when x has coefficient 1."""
    if isinstance(m, int):
        return x.pow_int(m)
    if m.is_exact:
        mv = m.coef
        if mv.denominator != 1:
            raise ValueError("tower power requires an integer exponent")
        return x.pow_int(int(mv))
    if x.is_exact or x.coef != 1:
        raise LevelError(f"no tower representation for ({x}) ** ({m})")
    return TowerMagnitude(Fraction(1), x.base, tm_mul(x.exponent, m)).collapsed()


# ---------------------------------------------------------------------------
# Certified enclosures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Enclosure:
    """Certified interval [lo, hi] containing a real value."""

    lo: mpmath.mpf
    hi: mpmath.mpf

    @property
    def width(self) -> mpmath.mpf:
        return self.hi - self.lo

    def floor_lower(self) -> int:
        """Exact floor of the lower endpoint: a certified lower bound."""
        return int(mpmath.floor(self.lo))

    def floor_exact(self) -> "int | None":
        """The common floor of both endpoints, or None when they straddle."""
        lo_f = int(mpmath.floor(self.lo))
        return lo_f if lo_f == int(mpmath.floor(self.hi)) else None

    def as_strings(self, digits: int = 30) -> tuple[str, str]:
        return mpmath.nstr(self.lo, digits), mpmath.nstr(self.hi, digits)

    def __str__(self) -> str:
        lo, hi = self.as_strings()
        return f"[{lo}, {hi}]"


def _iv_endpoints(x) -> tuple:
    lo_raw, hi_raw = x._mpi_
    return mp.make_mpf(lo_raw), mp.make_mpf(hi_raw)


def _iv_fraction(ctx: MPIntervalContext, f: Fraction):
    if f.denominator == 1:
        return ctx.mpf(f.numerator)
    return ctx.mpf(f.numerator) / ctx.mpf(f.denominator)


def _iv_value(tm: TowerMagnitude, ctx: MPIntervalContext):
    """Interval containing the exact value; requires level 0."""
    if tm.level != 0:
        raise LevelError(f"value of {tm} is not float-representable")
    if tm.base is None:
        return _iv_fraction(ctx, tm.coef)
    e = tm.exponent
    if e.is_exact and e.coef.denominator == 1:
        p = ctx.mpf(tm.base) ** int(e.coef)
    else:
        p = ctx.mpf(tm.base) ** _iv_value(e, ctx)
    return p if tm.coef == 1 else p * _iv_fraction(ctx, tm.coef)


def _iv_log10(tm: TowerMagnitude, ctx: MPIntervalContext):
    """Interval containing log10 of the value; requires level <= 1."""
    if tm.base is None:
        return ctx.log10(_iv_fraction(ctx, tm.coef))
    if tm.level > 1:
        raise LevelError(f"log10 of {tm} is not float-representable")
    out = _iv_value(tm.exponent, ctx) * ctx.log10(ctx.mpf(tm.base))
    if tm.coef != 1:
        out = out + ctx.log10(_iv_fraction(ctx, tm.coef))
    return out


def _iv_loglog10(tm: TowerMagnitude, ctx: MPIntervalContext):
    """Interval containing log10(log10(value)); requires level <= 2."""
    if tm.level <= 1:
        y = _iv_log10(tm, ctx)
        lo, _ = _iv_endpoints(y)
        if lo <= 1:
            raise ValueError("log-log is undefined or unstable for values this small")
        return ctx.log10(y)
    if tm.level != 2 or tm.base is None:
        raise LevelError(f"log-log of {tm} needs a deeper level")
    # log10(log10 v) = log10(E) + log10(log10 b) + log10(1 + log10(c)/(E log10 b))
    log_e = _iv_log10(tm.exponent, ctx)
    lb = ctx.log10(ctx.mpf(tm.base))
    out = log_e + ctx.log10(lb)
    if tm.coef != 1:
        c_mag = abs(ctx.log10(_iv_fraction(ctx, tm.coef)))
        _, c_hi = _iv_endpoints(c_mag)
        e_lo, _ = _iv_endpoints(log_e)
        bound_iv = ctx.mpf(c_hi) * (ctx.mpf(10) ** ctx.mpf(-e_lo)) / lb
        _, bnd = _iv_endpoints(bound_iv)
        if not bnd < mpmath.mpf("0.5"):
            raise PrecisionError(f"coefficient correction of {tm} cannot be bounded")
        out = out + ctx.log(1 + ctx.mpf([-bnd, bnd]), 10)
    return out


def _to_enclosure(x) -> Enclosure:
    lo, hi = _iv_endpoints(x)
    return Enclosure(lo, hi)


def _enclosure_loop(precision: int, evaluate) -> Enclosure:
    """Escalate interval precision until evaluate(ctx) is tight to
    `precision` significant digits."""
    dps = max(START_DPS, precision + 20)
    while True:
        ctx = MPIntervalContext()
        ctx.dps = dps
        enc = _to_enclosure(evaluate(ctx))
        scale = max(abs(enc.lo), abs(enc.hi), mpmath.mpf(1))
        if enc.width <= mpmath.mpf(10) ** (-precision) * scale:
            return enc
        if dps >= MAX_DPS:
            raise PrecisionError(
                f"enclosure width {mpmath.nstr(enc.width, 8)} at {MAX_DPS} digits"
            )
        dps *= 2


def log_in_base(tm: TowerMagnitude, b: int, precision: int = 30) -> Enclosure:
    """Certified enclosure of log_b(value) to `precision` significant digits.

    Works for quantities of level <= 1; deeper towers raise LevelError
    (their logarithm itself overflows floats — use loglog_in_base).
    """
    if b < 2:
        raise ValueError("log base must be at least 2")
    if tm.level > 1:
        raise LevelError(f"{tm} needs the log-log accessor")
    return _enclosure_loop(
        precision, lambda ctx: _iv_log10(tm, ctx) / ctx.log10(ctx.mpf(b))
    )


def loglog_in_base(tm: TowerMagnitude, b: int, precision: int = 30) -> Enclosure:
    """Certified enclosure of log_b(log_b(value)), for levels <= 2."""
    if b < 2:
        raise ValueError("log base must be at least 2")
    if tm.level > 2:
        raise LevelError(f"{tm} is too tall even for log-log")

    def evaluate(ctx):
        lb = ctx.log10(ctx.mpf(b))
        return (_iv_loglog10(tm, ctx) - ctx.log10(lb)) / lb

    return _enclosure_loop(precision, evaluate)


def log_product_in_base(
    coef: Fraction,
    factors: "list[tuple[TowerMagnitude, int]]",
    b: int,
    precision: int = 30,
) -> Enclosure:
    """Certified enclosure of log_b(coef * prod(value**mult)).

    Every factor must be of level <= 1; the combination may be arbitrarily
    large or small, its logarithm just has to fit in a float.
    """
    if b < 2:
        raise ValueError("log base must be at least 2")
    if coef <= 0:
        raise ValueError("coefficient must be positive")
    for tm, _ in factors:
        if tm.level > 1:
            raise LevelError(f"factor {tm} needs the log-log accessor")

    def evaluate(ctx):
        total = ctx.log10(_iv_fraction(ctx, coef))
        for tm, mult in factors:
            if mult:
                total = total + _iv_log10(tm, ctx) * mult
        return total / ctx.log10(ctx.mpf(b))

    return _enclosure_loop(precision, evaluate)


# ---------------------------------------------------------------------------
# Certified comparison
# ---------------------------------------------------------------------------


class Ordering(enum.Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"


@dataclass(frozen=True)
class CertifiedOrdering:
    verdict: Ordering
    level: str  # "exact" | "log" | "log-log" | "log^k"
    margin: str  # human-readable certified separation

    def __str__(self) -> str:
        return f"{self.verdict.value} ({self.level}, margin {self.margin})"


@lru_cache(maxsize=None)
def _atom_decompose(n: int) -> tuple:
    """Small-prime split of n (trailing composite kept whole).

    Keying log10 atoms by these pieces makes numerically equal products
    with different spellings (1024 versus 2**10) cancel symbolically.
    """
    out = []
    rem = n
    bound = 10_000 if n.bit_length() <= 4096 else 256
    p = 2
    while p <= bound and p * p <= rem:
        if rem % p == 0:
            e = 0
            while rem % p == 0:
                rem //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if rem > 1:
        out.append((rem, 1))
    return tuple(out)


class _LogForm:
    """Exact-coefficient affine form for a logarithm:

        sum_n atoms[n]*log10(n) + sum_T evals[T]*log10(v(T))
        + sum_E (sum_n terms[E][n]*log10(n)) * v(E) + const_iv

    atoms/evals/terms carry Fractions so identical contributions cancel
    exactly; const_iv absorbs descent-internal interval constants.  The
    terms keys E are exponents of towers too tall to evaluate: the tower
    c*b**E contributes v(E)*log10(b) there plus log10(c) to the atoms.
    """

    __slots__ = ("atoms", "evals", "terms", "const_iv")

    def __init__(self) -> None:
        self.atoms: dict = {}
        self.evals: dict = {}
        self.terms: dict = {}
        self.const_iv = None

    @staticmethod
    def _bump(d: dict, key, q: Fraction) -> None:
        q = d.get(key, Fraction(0)) + q
        if q == 0:
            d.pop(key, None)
        else:
            d[key] = q

    def add_atom(self, n: int, q: Fraction) -> None:
        if n == 1 or q == 0:
            return
        for piece, e in _atom_decompose(n):
            self._bump(self.atoms, piece, q * e)

    def add_fraction_log(self, f: Fraction, q: Fraction) -> None:
        self.add_atom(f.numerator, q)
        self.add_atom(f.denominator, -q)

    def add_iv(self, x) -> None:
        self.const_iv = x if self.const_iv is None else self.const_iv + x

    def add_log_of(self, tm: TowerMagnitude, q: Fraction) -> None:
        """Add q * log10(value of tm)."""
        if q == 0:
            return
        if tm.is_exact:
            self.add_fraction_log(tm.coef, q)
            return
        if tm.level <= 1:
            self._bump(self.evals, tm, q)
            return
        coefs = self.terms.setdefault(tm.exponent, {})
        self._bump(coefs, tm.base, q)
        if not coefs:
            del self.terms[tm.exponent]
        self.add_fraction_log(tm.coef, q)

    def negated(self) -> "_LogForm":
        out = _LogForm()
        out.atoms = {n: -q for n, q in self.atoms.items()}
        out.evals = {t: -q for t, q in self.evals.items()}
        out.terms = {t: {n: -q for n, q in c.items()} for t, c in self.terms.items()}
        out.const_iv = None if self.const_iv is None else -self.const_iv
        return out

    def merged_with(self, other: "_LogForm") -> "_LogForm":
        out = _LogForm()
        for src in (self, other):
            for n, q in src.atoms.items():
                self._bump(out.atoms, n, q)
            for t, q in src.evals.items():
                self._bump(out.evals, t, q)
            for t, coefs in src.terms.items():
                dst = out.terms.setdefault(t, {})
                for n, q in coefs.items():
                    self._bump(dst, n, q)
            if src.const_iv is not None:
                out.add_iv(src.const_iv)
        out.terms = {t: c for t, c in out.terms.items() if c}
        return out

    def eval_constant(self, ctx: MPIntervalContext):
        """Interval for the term-free part (atoms + evals + const_iv)."""
        total = ctx.mpf(0)
        for n, q in self.atoms.items():
            total = total + _iv_fraction(ctx, q) * ctx.log10(ctx.mpf(n))
        for t, q in self.evals.items():
            total = total + _iv_fraction(ctx, q) * _iv_log10(t, ctx)
        if self.const_iv is not None:
            total = total + self.const_iv
        return total


def _iv_sign(x) -> "int | None":
    lo, hi = _iv_endpoints(x)
    if lo > 0:
        return 1
    if hi < 0:
        return -1
    if lo == 0 and hi == 0:
        return 0
    return None


def _coef_interval(ctx: MPIntervalContext, coefs: dict):
    total = ctx.mpf(0)
    for n, q in coefs.items():
        total = total + _iv_fraction(ctx, q) * ctx.log10(ctx.mpf(n))
    return total


def _summand_logform(ctx, magnitude_iv, tower) -> _LogForm:
    """log10 of magnitude*v(tower) (tower None means a bare constant).

    A magnitude interval pinned at or below zero on the left yields a
    [-inf, .] log interval: still sound, merely useless as a lower bound,
    which disqualifies the summand from serving as a maximum witness.
    """
    form = _LogForm()
    lo, hi = _iv_endpoints(magnitude_iv)
    if hi <= 0:
        raise ValueError("summand magnitude must be positive")
    if lo > 0:
        form.add_iv(ctx.log10(magnitude_iv))
    else:
        hi_log = ctx.log10(ctx.mpf(hi))
        _, hl = _iv_endpoints(hi_log)
        form.add_iv(ctx.mpf([mpmath.ninf, hl]))
    if tower is not None:
        form.add_log_of(tower, Fraction(1))
    return form


def _sign_of_form(form: _LogForm, ctx: MPIntervalContext, depth: int) -> "int | None":
    """Certified sign of the affine form: +-1, 0 (exact), or None (unresolved)."""
    if depth > MAX_DESCENT_DEPTH:
        raise PrecisionError("comparison descent exceeded the depth cap")
    if not form.terms:
        return _iv_sign(form.eval_constant(ctx))

    # Summands: (sign, |magnitude| interval, tower-or-None); sign None means
    # the coefficient straddles zero, so it can only ever oppose a verdict.
    summands = []
    for tower, coefs in form.terms.items():
        c = _coef_interval(ctx, coefs)
        s = _iv_sign(c)
        if s == 0:
            continue
        summands.append((s, abs(c), tower))
    const = form.eval_constant(ctx)
    c_sign = _iv_sign(const)
    if c_sign != 0:
        summands.append((c_sign, abs(const), None))

    if not summands:
        return 0

    for target in (1, -1):
        pos = [s for s in summands if s[0] == target]
        rest = [s for s in summands if s[0] != target]
        if not pos:
            continue
        if not rest:
            return target
        if _dominates(pos, rest, ctx, depth):
            return target
    return None


def _dominates(pos: list, rest: list, ctx: MPIntervalContext, depth: int) -> bool:
    """Whether the pos summands provably outweigh everything in rest.

    Certify some u in rest as a near-maximum (every other w satisfies
    w < 10*u), so that sum(rest) <= 10*n*u; then find a single p in pos
    with p > 10*n*u.  Gaps between distinct summands here are
    astronomically wide, so a decade of slack costs nothing and absorbs
    near-ties in the maximum search.
    """
    rest_logs = [_summand_logform(ctx, mag, tower) for _, mag, tower in rest]
    pos_logs = [_summand_logform(ctx, mag, tower) for _, mag, tower in pos]
    bound = ctx.log10(ctx.mpf(10 * len(rest)))
    for u_idx, u_log in enumerate(rest_logs):
        qualifies = True
        for w_idx, w_log in enumerate(rest_logs):
            if w_idx == u_idx:
                continue
            gap = u_log.merged_with(w_log.negated())
            gap.add_iv(ctx.mpf(1))  # tolerate w up to 10*u
            if _sign_of_form(gap, ctx, depth + 1) != 1:
                qualifies = False
                break
        if not qualifies:
            continue
        for p_log in pos_logs:
            gap = p_log.merged_with(u_log.negated())
            gap.add_iv(-bound)
            if _sign_of_form(gap, ctx, depth + 1) == 1:
                return True
    return False


def _build_product_logform(coef: Fraction, factors: Iterable) -> _LogForm:
    form = _LogForm()
    form.add_fraction_log(coef, Fraction(1))
    for tm, mult in factors:
        form.add_log_of(tm, Fraction(mult))
    return form


def _approx_str(f: Fraction) -> str:
    if f == 0:
        return "0"
    with mpmath.workdps(25):
        val = mpmath.mpf(f.numerator) / mpmath.mpf(f.denominator)
        return mpmath.nstr(val, 12)


def _side_materializable(coef: Fraction, factors: list) -> bool:
    bits = _rough_log2(_rough_of_fraction(coef))
    for tm, mult in factors:
        if not tm.is_materializable():
            return False
        lg = _rough_log2(tm.rough)
        if lg[0] != 0:
            return False
        bits = _rough_add(bits, (0, lg[1] * abs(mult)))
    return bits[0] == 0 and bits[1] <= budget_bits()


def compare_products(
    coef1: Fraction,
    factors1: "list[tuple[TowerMagnitude, int]]",
    coef2: Fraction,
    factors2: "list[tuple[TowerMagnitude, int]]",
) -> CertifiedOrdering:
    """Certified ordering of two coef * prod(value**mult) expressions."""
    if _side_materializable(coef1, factors1) and _side_materializable(coef2, factors2):
        v1, v2 = coef1, coef2
        for tm, mult in factors1:
            v1 *= tm.exact_value() ** mult
        for tm, mult in factors2:
            v2 *= tm.exact_value() ** mult
        if v1 == v2:
            return CertifiedOrdering(Ordering.EQUAL, "exact", "0")
        verdict = Ordering.GREATER if v1 > v2 else Ordering.LESS
        return CertifiedOrdering(verdict, "exact", _approx_str(abs(v1 - v2)))

    lhs = _build_product_logform(coef1, factors1)
    rhs = _build_product_logform(coef2, factors2)
    diff = lhs.merged_with(rhs.negated())

    if diff.terms:
        n = max(e.level for e in diff.terms) + 2
        level_tag = "log-log" if n == 2 else f"log^{n}"
    else:
        level_tag = "log"

    dps = START_DPS
    while True:
        ctx = MPIntervalContext()
        ctx.dps = dps
        sign = _sign_of_form(diff, ctx, 0)
        if sign == 0:
            # Every contribution cancelled in exact arithmetic, which by
            # multiplicative independence of the atom keys means the two
            # products are the same number.
            return CertifiedOrdering(Ordering.EQUAL, level_tag, "0")
        if sign == 1:
            return CertifiedOrdering(Ordering.GREATER, level_tag, _margin_of(diff, ctx))
        if sign == -1:
            return CertifiedOrdering(Ordering.LESS, level_tag, _margin_of(diff, ctx))
        if dps >= MAX_DPS:
            raise PrecisionError(f"comparison unresolved at {MAX_DPS} digits")
        dps *= 2


def _margin_of(diff: _LogForm, ctx: MPIntervalContext) -> str:
    if not diff.terms:
        lo, hi = _iv_endpoints(diff.eval_constant(ctx))
        gap = min(abs(lo), abs(hi))
        return f"|log10 ratio| >= {mpmath.nstr(gap, 10)}"
    return "separated under iterated-log descent"


def compare(a: TowerMagnitude, b: TowerMagnitude) -> CertifiedOrdering:
    """Certified ordering of two magnitudes.

    Structurally identical representations denote the same number and
    short-circuit to Equal; everything else goes through exact comparison
    when both sides fit the budget, and otherwise through log-space
    comparison with escalating precision.  An unresolvable case raises
    PrecisionError rather than guess.
    """
    if a == b:
        return CertifiedOrdering(Ordering.EQUAL, "exact", "0")
    return compare_products(Fraction(1), [(a, 1)], Fraction(1), [(b, 1)])


# ---------------------------------------------------------------------------
# Growth checks for the d-sequence
# ---------------------------------------------------------------------------


def _structured_d(dseq, j: int) -> TowerMagnitude:
    """d_j in power form when the sequence offers one (needed so that
    materialized values keep enough structure to exponentiate cheaply)."""
    getter = getattr(dseq, "d_structured", None)
    return getter(j) if getter is not None else dseq.d(j)


def growth_check_square(dseq, j: int) -> CertifiedOrdering:
    """Certified verdict of d_j versus 2*d_{j-1}**2 (expected Greater for j >= 5)."""
    if j < 5:
        raise ValueError("the square growth bound applies from j = 5")
    return compare_products(
        Fraction(1),
        [(_structured_d(dseq, j), 1)],
        Fraction(2),
        [(_structured_d(dseq, j - 1), 2)],
    )


def growth_check_tower(dseq, j: int) -> CertifiedOrdering:
    """Certified verdict of d_{j+1} versus d_j**d_{j-1} (expected Greater for j >= 5)."""
    if j < 5:
        raise ValueError("the tower growth bound applies from j = 5")
    rhs = tm_pow(_structured_d(dseq, j), dseq.d(j - 1))
    return compare_products(
        Fraction(1), [(_structured_d(dseq, j + 1), 1)], Fraction(1), [(rhs, 1)]
    )
