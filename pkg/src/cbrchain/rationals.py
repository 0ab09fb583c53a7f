"""Exact rational helpers.

All analytic quantities in this package are :class:`fractions.Fraction`
values (arbitrary-precision, always in lowest terms, positive denominator).
This module owns the text grammar used everywhere a rational crosses a file
or CLI boundary: an optional sign, an integer, and optionally ``/`` followed
by a positive integer, e.g. ``7``, ``-2/5``, ``13/27``.

Decimal rendering is presentation-only and never feeds back into
computation.
"""

from __future__ import annotations

import re
from fractions import Fraction

_RATIONAL_RE = re.compile(r"^[+-]?\d+(?:/(\d+))?$")


def parse_rational(text: str) -> Fraction:
    """Parse ``text`` as an exact rational.

    Raises ValueError if the string does not match the grammar or has a
    zero denominator.
    """
    s = text.strip()
    m = _RATIONAL_RE.match(s)
    if m is None:
        raise ValueError(f"not a rational number: {text!r}")
    if m.group(1) == "0":
        raise ValueError(f"denominator must be positive: {text!r}")
    return Fraction(s)


def coerce_rational(value) -> Fraction:
    """Convert an int, Fraction, or rational string to a Fraction.

    Floats are rejected: binary floats would silently break the exactness
    guarantees of the analytic path.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"not a rational number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise ValueError(f"not an exact rational: {value!r} ({type(value).__name__})")


def format_rational(q: Fraction) -> str:
    """Render exactly; the result round-trips through :func:`parse_rational`."""
    return str(q)


def decimal_str(q: Fraction, digits: int = 6) -> str:
    """Render to ``digits`` significant decimal digits, for display only."""
    return f"{float(q):.{digits}g}"
