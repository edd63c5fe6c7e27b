"""Extended reals [-inf, +inf] with Moreau lower and upper additions.

Values are stored as Python floats, so the infinities are IEEE infinities.
NaN is never admitted.  Finite sums that overflow the double range saturate
to the infinity of the same sign (this is what IEEE addition does already).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Union

import numpy as np

__all__ = [
    "ExtReal",
    "NEG_INF",
    "POS_INF",
    "ZERO",
    "lower_add",
    "upper_add",
    "neg",
    "sup",
    "inf",
    "lower_add_array",
    "upper_add_array",
    "format_value",
    "parse_value",
]

Number = Union[int, float]


@total_ordering
@dataclass(frozen=True)
class ExtReal:
    """An element of [-inf, +inf]."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v):
            raise ValueError("NaN is not an extended real")
        object.__setattr__(self, "value", v)

    @classmethod
    def of(cls, v: "ExtReal | Number") -> "ExtReal":
        return v if isinstance(v, ExtReal) else cls(v)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    @property
    def is_pos_inf(self) -> bool:
        return self.value == math.inf

    @property
    def is_neg_inf(self) -> bool:
        return self.value == -math.inf

    def __float__(self):
        return self.value

    def __lt__(self, other):
        return self.value < ExtReal.of(other).value

    def __eq__(self, other):
        if isinstance(other, (ExtReal, int, float)):
            try:
                return self.value == ExtReal.of(other).value
            except ValueError:
                return False
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __neg__(self):
        return ExtReal(-self.value)

    def __repr__(self):
        return f"ExtReal({format_value(self.value)})"

    def __str__(self):
        return format_value(self.value)


NEG_INF = ExtReal(-math.inf)
POS_INF = ExtReal(math.inf)
ZERO = ExtReal(0.0)


def _add(a: float, b: float, conflict: float) -> float:
    if math.isinf(a) and math.isinf(b) and a != b:
        return conflict
    return a + b


def lower_add(a, b) -> ExtReal:
    """Lower addition: (+inf) + (-inf) = -inf."""
    return ExtReal(_add(ExtReal.of(a).value, ExtReal.of(b).value, -math.inf))


def upper_add(a, b) -> ExtReal:
    """Upper addition: (+inf) + (-inf) = +inf."""
    return ExtReal(_add(ExtReal.of(a).value, ExtReal.of(b).value, math.inf))


def neg(a) -> ExtReal:
    return -ExtReal.of(a)


def sup(values: Iterable) -> ExtReal:
    """Supremum of a finite family; sup of the empty family is -inf."""
    return ExtReal(max((ExtReal.of(v).value for v in values), default=-math.inf))


def inf(values: Iterable) -> ExtReal:
    """Infimum of a finite family; inf of the empty family is +inf."""
    return ExtReal(min((ExtReal.of(v).value for v in values), default=math.inf))


def _add_array(a, b, conflict):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.isnan(a).any() or np.isnan(b).any():
        raise ValueError("NaN is not an extended real")
    with np.errstate(invalid="ignore", over="ignore"):
        s = a + b
    return np.where(np.isnan(s), conflict, s)


def lower_add_array(a, b) -> np.ndarray:
    """Elementwise lower addition on float arrays holding extended reals."""
    return _add_array(a, b, -np.inf)


def upper_add_array(a, b) -> np.ndarray:
    """Elementwise upper addition on float arrays holding extended reals."""
    return _add_array(a, b, np.inf)


def format_value(v, digits: int = 17) -> str:
    """Render as "+inf", "-inf" or a decimal that round-trips at 17 digits."""
    v = ExtReal.of(v).value
    if v == math.inf:
        return "+inf"
    if v == -math.inf:
        return "-inf"
    if digits >= 17:
        return repr(v)
    return format(v, f".{digits}g")


_MINUS_SIGNS = ("−", "–")


def parse_value(text: str) -> ExtReal:
    """Inverse of :func:`format_value`; also accepts a typographic minus."""
    t = text.strip()
    for m in _MINUS_SIGNS:
        t = t.replace(m, "-")
    low = t.lower()
    if low in ("+inf", "inf", "+infinity", "infinity"):
        return POS_INF
    if low in ("-inf", "-infinity"):
        return NEG_INF
    return ExtReal(float(t))
