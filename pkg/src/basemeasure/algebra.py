"""Arithmetic on densities taken against Hausdorff measures of different dimension.

A density value on its own is meaningless without the dimension of the
Hausdorff measure it is taken against.  :class:`DimensionedWeight` carries the
pair, and :func:`rat`, :func:`summ` and :func:`prodd` compare, add and multiply
such pairs.  Lower dimension dominates: a point mass is infinitely heavier
than any finite density on a line through the same point.

All weights live in log space; ``-inf`` is weight zero and ``+inf`` is an
infinite density.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DimensionedWeight",
    "ExtendedRatio",
    "RatioKind",
    "prodd",
    "rat",
    "summ",
]


@dataclass(frozen=True)
class DimensionedWeight:
    """A density (or mass) ``exp(log_weight)`` with respect to ``H^dim``."""

    dim: int
    log_weight: float

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 0:
            raise ValueError(f"dimension must be a nonnegative integer, got {self.dim!r}")
        if math.isnan(self.log_weight):
            raise ValueError("log_weight must not be nan")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "log_weight", float(self.log_weight))

    @classmethod
    def from_weight(cls, dim: int, weight: float) -> DimensionedWeight:
        if weight < 0:
            raise ValueError(f"weight must be nonnegative, got {weight}")
        with np.errstate(divide="ignore"):
            return cls(dim, float(np.log(weight)))

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)

    @property
    def is_zero(self) -> bool:
        return self.log_weight == -math.inf

    @property
    def is_infinite(self) -> bool:
        return self.log_weight == math.inf


class RatioKind(enum.Enum):
    FINITE = "finite"
    ZERO = "zero"
    INFINITE = "infinite"
    UNDEFINED = "undefined"


@dataclass(frozen=True)
class ExtendedRatio:
    """Result of :func:`rat`.

    ``log_value`` is set only for :attr:`RatioKind.FINITE` ratios.
    """

    kind: RatioKind
    log_value: float | None = None

    def __post_init__(self):
        if (self.kind is RatioKind.FINITE) != (self.log_value is not None):
            raise ValueError("log_value must be given exactly for finite ratios")
        if self.log_value is not None and not math.isfinite(self.log_value):
            raise ValueError("a finite ratio needs a finite log_value")

    @classmethod
    def finite(cls, log_value: float) -> ExtendedRatio:
        return cls(RatioKind.FINITE, float(log_value))

    @classmethod
    def zero(cls) -> ExtendedRatio:
        return cls(RatioKind.ZERO)

    @classmethod
    def infinite(cls) -> ExtendedRatio:
        return cls(RatioKind.INFINITE)

    @classmethod
    def undefined(cls) -> ExtendedRatio:
        return cls(RatioKind.UNDEFINED)

    @property
    def is_defined(self) -> bool:
        return self.kind is not RatioKind.UNDEFINED

    def log(self) -> float:
        """Log of the ratio as an extended real; raises for undefined ratios."""
        if self.kind is RatioKind.FINITE:
            return self.log_value
        if self.kind is RatioKind.ZERO:
            return -math.inf
        if self.kind is RatioKind.INFINITE:
            return math.inf
        raise ValueError("undefined ratio has no value")


def _equal_dim_ratio(log_y: float, log_x: float) -> ExtendedRatio:
    # 0/0 and inf/inf have no value; everything else is ordinary extended division
    if math.isinf(log_y) and log_y == log_x:
        return ExtendedRatio.undefined()
    if log_y == -math.inf or log_x == math.inf:
        return ExtendedRatio.zero()
    if log_y == math.inf or log_x == -math.inf:
        return ExtendedRatio.infinite()
    return ExtendedRatio.finite(log_y - log_x)


def rat(y: DimensionedWeight, x: DimensionedWeight) -> ExtendedRatio:
    """Limiting ratio of the masses of small balls around ``y`` and ``x``.

    The ball mass near a point scales like ``p * delta**d``, so when the
    dimensions differ the lower-dimensional side wins outright, provided
    neither density is degenerate in the way that would let it fight back.
    """
    if y.dim == x.dim:
        return _equal_dim_ratio(y.log_weight, x.log_weight)
    if y.dim > x.dim:
        if not y.is_infinite and not x.is_zero:
            return ExtendedRatio.zero()
        return ExtendedRatio.undefined()
    if not x.is_infinite and not y.is_zero:
        return ExtendedRatio.infinite()
    return ExtendedRatio.undefined()


def summ(x: DimensionedWeight, y: DimensionedWeight) -> DimensionedWeight | None:
    """Dimensioned sum of two weights, or ``None`` when it is undefined."""
    if x.dim == y.dim:
        return DimensionedWeight(x.dim, float(np.logaddexp(x.log_weight, y.log_weight)))
    lo, hi = (x, y) if x.dim < y.dim else (y, x)
    if not hi.is_infinite and not lo.is_zero:
        return lo
    return None


def prodd(x: DimensionedWeight, y: DimensionedWeight) -> DimensionedWeight:
    """Dimensioned product: dimensions add, weights multiply.

    A zero weight annihilates the product even against an infinite density.
    """
    if x.is_zero or y.is_zero:
        return DimensionedWeight(x.dim + y.dim, -math.inf)
    return DimensionedWeight(x.dim + y.dim, x.log_weight + y.log_weight)
