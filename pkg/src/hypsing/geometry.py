"""Planar primitives shared by the numerical modules."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Disc:
    """Closed disc |z - center| <= radius.  Radius 0 denotes a single point."""

    center: complex
    radius: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius >= 0.0):
            raise ValueError(f"disc radius must be finite and >= 0, got {self.radius!r}")
        object.__setattr__(self, "center", complex(self.center))

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return abs(z - self.center) <= self.radius + slack

    @property
    def sup_modulus(self) -> float:
        """Largest |z| over the disc, used by radial tail bounds."""
        return abs(self.center) + self.radius


@dataclass(frozen=True)
class Rect:
    """Axis-aligned closed rectangle [x0, x1] x [y0, y1]."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self) -> None:
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("rectangle must have positive width and height")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    def corners(self) -> tuple[complex, complex, complex, complex]:
        """Counterclockwise corners starting at (x0, y0)."""
        return (
            complex(self.x0, self.y0),
            complex(self.x1, self.y0),
            complex(self.x1, self.y1),
            complex(self.x0, self.y1),
        )

    def contains(self, z: complex, strict: bool = False) -> bool:
        if strict:
            return self.x0 < z.real < self.x1 and self.y0 < z.imag < self.y1
        return self.x0 <= z.real <= self.x1 and self.y0 <= z.imag <= self.y1

    def scaled(self, factor: float) -> "Rect":
        """Rectangle scaled about its own center."""
        c = self.center
        hw = 0.5 * self.width * factor
        hh = 0.5 * self.height * factor
        return Rect(c.real - hw, c.real + hw, c.imag - hh, c.imag + hh)

    def quadrisect(self) -> tuple["Rect", "Rect", "Rect", "Rect"]:
        c = self.center
        return (
            Rect(self.x0, c.real, self.y0, c.imag),
            Rect(c.real, self.x1, self.y0, c.imag),
            Rect(self.x0, c.real, c.imag, self.y1),
            Rect(c.real, self.x1, c.imag, self.y1),
        )

    def circumscribed_disc(self) -> Disc:
        return Disc(self.center, 0.5 * self.diameter)


def segment_point_distance(a: complex, b: complex, p: complex) -> float:
    """Distance from p to the closed segment [a, b]."""
    d = b - a
    L2 = d.real * d.real + d.imag * d.imag
    if L2 == 0.0:
        return abs(p - a)
    t = ((p - a).real * d.real + (p - a).imag * d.imag) / L2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * d))
