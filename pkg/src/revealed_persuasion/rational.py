"""Exact rational scalars, belief vectors and one-dimensional affine maps.

Every probability, utility and certificate entry in the package is a
``fractions.Fraction``. Nothing here ever touches binary floating point.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Fraction
Vec = tuple  # tuple[Fraction, ...]

RationalLike = Union[Fraction, int, str]

_FRACTION_RE = re.compile(r"^\s*([+-]?\d+)\s*/\s*(\d+)\s*$")
_DECIMAL_RE = re.compile(r"^\s*([+-]?)(\d*)(?:\.(\d*))?\s*$")


def rational_from_string(text: str) -> Fraction:
    """Parse ``"p/q"``, ``"-p/q"``, an integer or a finite decimal exactly."""
    if not isinstance(text, str):
        raise TypeError(f"expected a string, got {type(text).__name__}")
    m = _FRACTION_RE.match(text)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(num, den)
    m = _DECIMAL_RE.match(text)
    if m and (m.group(2) or m.group(3)):
        sign, whole, frac = m.group(1), m.group(2) or "0", m.group(3) or ""
        value = Fraction(int(whole + frac), 10 ** len(frac))
        return -value if sign == "-" else value
    raise ValueError(f"cannot parse {text!r} as an exact rational")


def to_rational(value: RationalLike) -> Fraction:
    """Coerce ints, Fractions and strings; refuse floats."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return rational_from_string(value)
    raise TypeError(f"refusing inexact value {value!r} of type {type(value).__name__}")


def render(value: Fraction) -> str:
    """Canonical string form, ``"p/q"`` or ``"p"``, parseable by ``rational_from_string``."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def vec(values: Iterable[RationalLike]) -> Vec:
    return tuple(to_rational(v) for v in values)


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def add(a: Sequence[Fraction], b: Sequence[Fraction]) -> Vec:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Sequence[Fraction], b: Sequence[Fraction]) -> Vec:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return tuple(x - y for x, y in zip(a, b))


def scale(k: Fraction, a: Sequence[Fraction]) -> Vec:
    return tuple(k * x for x in a)


def convex_combination(points: Sequence[Sequence[Fraction]], weights: Sequence[RationalLike]) -> Vec:
    """Exact weighted average of equally sized points."""
    if len(points) != len(weights):
        raise ValueError("one weight per point is required")
    if not points:
        raise ValueError("at least one point is required")
    ws = [to_rational(w) for w in weights]
    if any(w < 0 for w in ws):
        raise ValueError("weights must be nonnegative")
    if sum(ws) != 1:
        raise ValueError(f"weights sum to {render(sum(ws))}, not 1")
    dim = len(points[0])
    if any(len(p) != dim for p in points):
        raise ValueError("dimension mismatch among points")
    out = [Fraction(0)] * dim
    for p, w in zip(points, ws):
        for k in range(dim):
            out[k] += w * p[k]
    return tuple(out)


def in_simplex(p: Sequence[Fraction]) -> bool:
    return all(x >= 0 for x in p) and sum(p) == 1


def solve_square(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Vec | None:
    """Gaussian elimination; returns ``None`` when the matrix is singular."""
    n = len(matrix)
    rows = [list(r) + [b] for r, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            return None
        rows[col], rows[pivot] = rows[pivot], rows[col]
        piv = rows[col][col]
        prow = [x / piv for x in rows[col]]
        rows[col] = prow
        for r in range(n):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], prow)]
    return tuple(rows[r][n] for r in range(n))


@dataclass(frozen=True)
class AffineFn1D:
    """``z -> intercept + slope * z`` with exact coefficients."""

    slope: Fraction
    intercept: Fraction

    def __call__(self, z: Fraction) -> Fraction:
        return self.intercept + self.slope * z

    def __add__(self, other: "AffineFn1D") -> "AffineFn1D":
        return AffineFn1D(self.slope + other.slope, self.intercept + other.intercept)

    def scaled(self, k: Fraction) -> "AffineFn1D":
        return AffineFn1D(k * self.slope, k * self.intercept)

    def to_dict(self) -> dict:
        return {"intercept": render(self.intercept), "slope": render(self.slope)}

    @classmethod
    def from_dict(cls, data: dict) -> "AffineFn1D":
        return cls(slope=to_rational(data["slope"]), intercept=to_rational(data["intercept"]))
