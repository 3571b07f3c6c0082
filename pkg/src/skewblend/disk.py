"""Closed complex disks with outward rounding.

A ``Disk`` (c, r) encloses {z : |z - c| <= r}. Arithmetic returns disks that
contain every pointwise result for inputs in the operands, and each result
radius is padded by a relative rounding term so that floating point error
never shrinks an enclosure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

_U = 2.0 ** -52


def _pad(r: float, *mags: float) -> float:
    # a few ulps for every quantity that entered the rounded computation
    return r + 4 * _U * (r + sum(mags)) + 1e-300


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise ValueError("disk radius must be non-negative")

    @classmethod
    def point(cls, z) -> "Disk":
        return cls(complex(z), 0.0)

    @property
    def sup_abs(self) -> float:
        """Upper bound for |z| on the disk."""
        return _pad(abs(self.center) + self.radius)

    @property
    def inf_abs(self) -> float:
        """Lower bound for |z| on the disk (0 if the disk meets the origin)."""
        return max(0.0, (abs(self.center) - self.radius) * (1 - 4 * _U) - 1e-300)

    def contains_point(self, z) -> bool:
        return abs(complex(z) - self.center) <= self.radius

    def inside(self, other: "Disk", margin: float = 0.0) -> bool:
        """True when this disk sits in the open disk ``other`` with room ``margin``."""
        return _pad(abs(self.center - other.center) + self.radius) + margin < other.radius

    def __add__(self, other):
        if isinstance(other, Disk):
            c = self.center + other.center
            return Disk(c, _pad(self.radius + other.radius, abs(c)))
        c = self.center + complex(other)
        return Disk(c, _pad(self.radius, abs(c)))

    __radd__ = __add__

    def __neg__(self):
        return Disk(-self.center, self.radius)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Disk) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Disk):
            a, b = self, other
            c = a.center * b.center
            r = abs(a.center) * b.radius + abs(b.center) * a.radius + a.radius * b.radius
            return Disk(c, _pad(r, abs(c)))
        k = complex(other)
        c = self.center * k
        return Disk(c, _pad(self.radius * abs(k), abs(c)))

    __rmul__ = __mul__

    def reciprocal(self) -> "Disk":
        """Enclosure of 1/z; the disk must avoid the origin."""
        m = abs(self.center)
        if self.radius >= m:
            raise ZeroDivisionError("disk contains the origin")
        # exact image of a disk under inversion is a disk
        den = m * m - self.radius * self.radius
        if not den > 0:
            raise ZeroDivisionError("disk is too close to the origin to invert")
        c = self.center.conjugate() / den
        return Disk(c, _pad(self.radius / den, abs(c)))

    def __truediv__(self, other):
        if isinstance(other, Disk):
            return self * other.reciprocal()
        return self * (1.0 / complex(other))

    def square(self) -> "Disk":
        return self * self

    def sqrt_principal(self) -> "Disk":
        """Enclosure of the principal square root on a disk in the right half-plane.

        Both roots lie in the sector |arg| < pi/4, so |sqrt(z) + sqrt(c)|^2 is at
        least |z| + |c| >= 2|c| - r, which bounds |sqrt(z) - sqrt(c)|.
        """
        c, r = self.center, self.radius
        if not (c.real > r):
            raise ValueError("disk must lie in the right half-plane")
        s = complex(c) ** 0.5
        bound = r / math.sqrt(2 * abs(c) - r)
        return Disk(s, _pad(bound, abs(s)))
