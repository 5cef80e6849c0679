"""L-bit floating-point values with tracked multiplicative error.

A value is ``mantissa * 2**exponent`` where mantissa and exponent are
Python integers confined to ``[-2**L, 2**L]``.  Arbitrary-precision
integers are plain ``int`` throughout the package; this module only adds
the float layer on top.

Conventions:

- Canonical form: mantissa is odd or the value is exactly zero
  (mantissa 0, exponent 0).  Equality is structural.
- Rounding is round-to-nearest with ties to even on the mantissa.  A
  freshly rounded value sits within a multiplicative factor ``e**(2**-L)``
  of the exact input.
- ``merr_ulps`` is an upper bound on the accumulated multiplicative error
  in units of ``2**-L``: the represented value ``v`` and the ideal value
  ``x`` satisfy ``exp(-m) <= v/x <= exp(m)`` for ``m = merr_ulps * 2**-L``.
  It is a debug shadow field: populated only while ``track_merr()`` is
  active (the test suite runs with it on) and ``None`` otherwise.

The representable magnitude range is ``[2**-2**L, 2**2**L]``; results
escaping it raise ``FloatOverflow``.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction

LESS, EQUAL, GREATER = -1, 0, 1


class FloatOverflow(ArithmeticError):
    """Value left the representable range of L-bit floats."""


class SignMismatch(ValueError):
    """Same-sign addition was handed operands of strictly opposite sign."""


_TRACKING = False


@contextmanager
def track_merr(enabled: bool = True):
    """Enable multiplicative-error bookkeeping for the dynamic extent."""
    global _TRACKING
    prev = _TRACKING
    _TRACKING = enabled
    try:
        yield
    finally:
        _TRACKING = prev


def _merr(*ulps):
    if not _TRACKING:
        return None
    return max(u for u in ulps)


class FloatL:
    """Immutable-by-convention L-bit float; see module docstring.

    A plain __slots__ class rather than a dataclass: these are constructed
    in the innermost accumulation loops.  Equality is structural on the
    canonical (mantissa, exponent, L); the merr shadow field never takes
    part in comparisons.
    """

    __slots__ = ("mantissa", "exponent", "L", "merr_ulps")

    def __init__(self, mantissa, exponent, L, merr_ulps=None):
        self.mantissa = mantissa
        self.exponent = exponent
        self.L = L
        self.merr_ulps = merr_ulps

    def is_zero(self) -> bool:
        return self.mantissa == 0

    def sign(self) -> int:
        return (self.mantissa > 0) - (self.mantissa < 0)

    def to_fraction(self) -> Fraction:
        """Exact represented value."""
        if self.exponent >= 0:
            return Fraction(self.mantissa * (1 << self.exponent))
        return Fraction(self.mantissa, 1 << -self.exponent)

    def __eq__(self, other):
        return (isinstance(other, FloatL)
                and self.mantissa == other.mantissa
                and self.exponent == other.exponent
                and self.L == other.L)

    def __hash__(self):
        return hash((self.mantissa, self.exponent, self.L))

    def __repr__(self):
        return (f"FloatL(mantissa={self.mantissa}, exponent={self.exponent},"
                f" L={self.L}, merr_ulps={self.merr_ulps})")

    def __str__(self):
        return format_float2exp(self)


def _round_half_even(num: int, den: int) -> int:
    """Nearest integer to num/den (den > 0), ties to even."""
    q, r = divmod(num, den)
    if 2 * r > den or (2 * r == den and q & 1):
        q += 1
    return q


def _canonical(mant: int, exp: int, L: int, merr: int | None) -> FloatL:
    if mant == 0:
        return FloatL(0, 0, L, merr)
    shift = (mant & -mant).bit_length() - 1
    if shift:
        mant >>= shift
        exp += shift
    if abs(exp) > (1 << L) or abs(mant) > (1 << L):
        raise FloatOverflow(f"value 2^{exp}*{mant} outside fl_{L}")
    return FloatL(mant, exp, L, merr)


def _round_to_l(num: int, den: int, shift: int, L: int, merr: int | None) -> FloatL:
    """Round the exact rational (num/den) * 2**shift to an L-bit float.

    den > 0.  The result mantissa is normalized into [2^(L-1), 2^L] before
    canonicalization, which makes the rounding a true nearest over the
    whole representable set.
    """
    if num == 0:
        return FloatL(0, 0, L, merr)
    sign = 1 if num > 0 else -1
    n = abs(num)
    # choose e with 2^(L-1) <= n / (den * 2^e) < 2^L
    e = n.bit_length() - den.bit_length() - L
    while True:
        if e >= 0:
            q = n >> e if den == 1 else n // (den << e)
        else:
            q = (n << -e) // den
        if q >> L:
            e += 1
        elif not (q >> (L - 1)):
            e -= 1
        else:
            break
    if e >= 0:
        m = _round_half_even(n, den << e)
    else:
        m = _round_half_even(n << -e, den)
    # m may round up to exactly 2^L; that is still representable
    return _canonical(sign * m, e + shift, L, merr)


def fl_zero(L: int) -> FloatL:
    return FloatL(0, 0, L, 0 if _TRACKING else None)


def fl_from_int(x: int, L: int) -> FloatL:
    """Nearest L-bit float to the integer x (exact when it fits)."""
    return fl_from_bigratio(x, 1, L)


def fl_from_bigratio(num: int, den: int, L: int) -> FloatL:
    """Nearest L-bit float to num/den, within factor e^(2^-L) of it."""
    if den == 0:
        raise ZeroDivisionError("fl_from_bigratio: zero denominator")
    if den < 0:
        num, den = -num, -den
    if num == 0:
        return fl_zero(L)
    merr = None
    if _TRACKING:
        merr = 0 if _is_exact_ratio(num, den, L) else 1
    return _round_to_l(num, den, 0, L, merr)


def _is_exact_ratio(num, den, L):
    # exact iff den/gcd is a power of two and the reduced mantissa fits
    g = _gcd(abs(num), den)
    n, d = abs(num) // g, den // g
    if d & (d - 1):
        return False
    odd = n >> ((n & -n).bit_length() - 1)
    return odd.bit_length() <= L


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def fl_scale_pow2(x: FloatL, k: int) -> FloatL:
    """x * 2**k, exact (exponent shift only)."""
    if x.is_zero():
        return x
    return _canonical(x.mantissa, x.exponent + k, x.L, x.merr_ulps)


def fl_neg(x: FloatL) -> FloatL:
    return FloatL(-x.mantissa, x.exponent, x.L, x.merr_ulps)


def fl_add_same_sign(x: FloatL, y: FloatL) -> FloatL:
    """x + y for operands of matching sign; merr grows by one ulp unit.

    Zero is sign-neutral and acts as the identity.
    """
    if x.L != y.L:
        raise ValueError("operands carry different L")
    if x.is_zero():
        return y if not _TRACKING else FloatL(y.mantissa, y.exponent, y.L, _merr(y.merr_ulps or 0, x.merr_ulps or 0))
    if y.is_zero():
        return x if not _TRACKING else FloatL(x.mantissa, x.exponent, x.L, _merr(x.merr_ulps or 0, y.merr_ulps or 0))
    if x.sign() * y.sign() < 0:
        raise SignMismatch("fl_add_same_sign on opposite signs")
    L = x.L
    merr = _merr((x.merr_ulps or 0), (y.merr_ulps or 0))
    if merr is not None:
        merr += 1
    hi, lo = (x, y) if x.exponent >= y.exponent else (y, x)
    gap = hi.exponent - lo.exponent
    if gap > L + 4:
        # |lo| < ulp(hi)/8: the rounded sum is hi itself
        return FloatL(hi.mantissa, hi.exponent, L, merr)
    total = (hi.mantissa << gap) + lo.mantissa
    return _round_to_l(total, 1, lo.exponent, L, merr)


def fl_mul(x: FloatL, y: FloatL) -> FloatL:
    """x * y; merr adds across operands plus one rounding ulp unit."""
    if x.L != y.L:
        raise ValueError("operands carry different L")
    merr = None
    if _TRACKING:
        merr = (x.merr_ulps or 0) + (y.merr_ulps or 0) + 1
    if x.is_zero() or y.is_zero():
        return FloatL(0, 0, x.L, 0 if _TRACKING else None)
    return _round_to_l(x.mantissa * y.mantissa, 1, x.exponent + y.exponent, x.L, merr)


def fl_recip(x: FloatL) -> FloatL:
    """1 / x; requires merr(x) < 1/2 for the tracked bound to be meaningful."""
    if x.is_zero():
        raise ZeroDivisionError("fl_recip of zero")
    merr = None
    if _TRACKING:
        merr = (x.merr_ulps or 0) + 1
    sign = x.sign()
    return _round_to_l(sign, abs(x.mantissa), -x.exponent, x.L, merr)


def fl_div(x: FloatL, y: FloatL) -> FloatL:
    """x / y in one rounding (tighter than mul-by-reciprocal)."""
    if y.is_zero():
        raise ZeroDivisionError("fl_div by zero")
    merr = None
    if _TRACKING:
        merr = (x.merr_ulps or 0) + (y.merr_ulps or 0) + 1
    if x.is_zero():
        return FloatL(0, 0, x.L, 0 if _TRACKING else None)
    sign = x.sign() * y.sign()
    return _round_to_l(sign * abs(x.mantissa), abs(y.mantissa),
                       x.exponent - y.exponent, x.L, merr)


def fl_sqrt(x: FloatL) -> FloatL:
    """Nearest L-bit float to sqrt(x), x >= 0, in a single exact rounding."""
    if x.mantissa < 0:
        raise ValueError("fl_sqrt of negative value")
    if x.is_zero():
        return FloatL(0, 0, x.L, 0 if _TRACKING else None)
    merr = None
    if _TRACKING:
        merr = -((-(x.merr_ulps or 0)) // 2) + 1
    L = x.L
    m, e = x.mantissa << 4, x.exponent - 4  # guard bits keep t > 0 below
    # pick es with round(sqrt(m * 2^e) / 2^es) in [2^(L-1), 2^L]
    es = (m.bit_length() + e) // 2 - L
    while True:
        t = e - 2 * es
        v = m << t  # t >= L - 3 > 0 for any canonical mantissa
        s = _isqrt(v)
        if s >> L:
            es += 1
        elif not (s >> (L - 1)):
            es -= 1
        else:
            break
    # nearest integer to sqrt(v): ties impossible unless v is a square
    if v - s * s > s:
        s += 1
    return _canonical(s, es, L, merr)


def _isqrt(n):
    import math
    return math.isqrt(n)


def fl_cmp(x: FloatL, y: FloatL) -> int:
    """Exact comparison of represented values: LESS, EQUAL or GREATER."""
    sx, sy = x.sign(), y.sign()
    if sx != sy:
        return GREATER if sx > sy else LESS
    if sx == 0:
        return EQUAL
    # same nonzero sign: compare magnitudes by aligned bit length first
    bx = abs(x.mantissa).bit_length() + x.exponent
    by = abs(y.mantissa).bit_length() + y.exponent
    if bx != by:
        return GREATER if (bx > by) == (sx > 0) else LESS
    gap = x.exponent - y.exponent
    if gap >= 0:
        mx, my = abs(x.mantissa) << gap, abs(y.mantissa)
    else:
        mx, my = abs(x.mantissa), abs(y.mantissa) << -gap
    if mx == my:
        return EQUAL
    return GREATER if (mx > my) == (sx > 0) else LESS


def fl_cmp_fraction(x: FloatL, q: Fraction) -> int:
    """Exact comparison of x against an arbitrary rational."""
    lhs = x.to_fraction()
    if lhs == q:
        return EQUAL
    return GREATER if lhs > q else LESS


# -- text forms --------------------------------------------------------------

def format_float2exp(x: FloatL) -> str:
    """Render as +m*2^e (canonical mantissa), the CLI's default form."""
    sign = "-" if x.mantissa < 0 else "+"
    return f"{sign}{abs(x.mantissa)}*2^{x.exponent}"


def parse_float2exp(text: str, L: int) -> FloatL:
    mant_s, _, exp_s = text.partition("*2^")
    if not exp_s:
        raise ValueError(f"not a m*2^e literal: {text!r}")
    return _canonical(int(mant_s), int(exp_s), L, None)


def format_decimal(x: FloatL, digits: int) -> str:
    """Exact decimal rendering with `digits` fractional digits."""
    neg = x.mantissa < 0
    mant, exp = abs(x.mantissa), x.exponent
    scaled = mant * 10 ** digits
    if exp >= 0:
        scaled <<= exp
        num, den = scaled, 1
    else:
        num, den = scaled, 1 << -exp
    q = _round_half_even(num, den)
    whole, frac = divmod(q, 10 ** digits)
    body = f"{whole}.{frac:0{digits}d}" if digits else str(whole)
    return ("-" if neg and q != 0 else "") + body


# -- fixed points -------------------------------------------------------------

@dataclass(frozen=True)
class FixedL:
    """Fixed-point value scaled/2^L with additive representation error 2^-L."""

    scaled: int
    L: int

    def to_fraction(self) -> Fraction:
        return Fraction(self.scaled, 1 << self.L)

    def __float__(self):
        return self.scaled / (1 << self.L)


def fixed_from_fraction(q: Fraction, L: int) -> FixedL:
    return FixedL(_round_half_even(q.numerator * (1 << L), q.denominator), L)


def fixed_from_float(x: FloatL, L: int) -> FixedL:
    return fixed_from_fraction(x.to_fraction(), L)
