"""Certified zero location for partial-fraction sums on a disc.

Counts come from argument-principle integrals over a recursively
quadrisected rectangle cover; positions are polished by damped Newton steps
on h using h'; multiplicity is read back from a winding count on a final
enclosing circle, never from Newton itself.  Rectangle boundaries that land
on a zero or pole are jittered by small multiplicative factors, and the
whole census has to close against the disc's own winding count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contour import Circle, rect_winding, winding_count
from .errors import BoundaryDegeneracy, NonConvergence
from .geometry import Disc, Rect
from .meromorphic import MeromorphicSum, Truncation, _term_values, truncate

__all__ = ["ZeroRecord", "locate_zeros"]

# Cells smaller than this are refined as (possibly multiple) zero clusters.
MIN_CELL_DIAMETER = 1e-6

_JITTER_FACTORS = (1.0, 1 - 1e-4, 1 + 1e-4, 1 - 3e-4, 1 + 3e-4, 1 - 9e-4, 1 + 9e-4)


@dataclass(frozen=True)
class ZeroRecord:
    """A located zero: position, argument-principle multiplicity, |h| there."""

    location: complex
    multiplicity: int
    refinement_residual: float


def _poles_strictly_inside(fin: MeromorphicSum, rect: Rect) -> int:
    return sum(1 for p in fin.poles if rect.contains(complex(p), strict=True))


def _cell_count(fin: MeromorphicSum, rect: Rect) -> int:
    """Number of zeros inside the rectangle (winding plus known poles)."""
    report = rect_winding(fin, rect)
    return report.count + _poles_strictly_inside(fin, rect)


def _counted(fin: MeromorphicSum, rect: Rect) -> tuple[Rect, int]:
    last: Exception | None = None
    for factor in _JITTER_FACTORS:
        jittered = rect if factor == 1.0 else rect.scaled(factor)
        try:
            return jittered, _cell_count(fin, jittered)
        except BoundaryDegeneracy as exc:
            last = exc
    raise BoundaryDegeneracy(f"cell count failed after jitter retries: {last}")


def _newton(fin: MeromorphicSum, z0: complex, tol: float, max_iter: int = 100):
    """Damped Newton refinement of a zero of h; returns (z, |h(z)|)."""
    z = complex(z0)
    v0, v1 = (complex(v) for v in _term_values(fin, z, order=1))
    for _ in range(max_iter):
        if abs(v0) == 0.0:
            return z, 0.0
        if v1 == 0:
            raise NonConvergence("vanishing h' during Newton refinement")
        step = -v0 / v1
        if abs(v0) < tol and abs(step) < tol:
            return z, abs(v0)
        for _ in range(20):
            cand = z + step
            c0, c1 = (complex(v) for v in _term_values(fin, cand, order=1))
            if abs(c0) < abs(v0):
                break
            step *= 0.5
        else:
            if abs(v0) < tol:
                return z, abs(v0)
            raise NonConvergence("Newton damping failed to reduce |h|")
        z, v0, v1 = cand, c0, c1
    raise NonConvergence("Newton refinement did not converge")


def _refine_leaves(fin: MeromorphicSum, root: Rect, root_count: int, tol: float):
    """Subdivide until each cell isolates one zero (or a tiny cluster)."""
    stack: list[tuple[Rect, int]] = [(root, root_count)]
    leaves: list[tuple[Rect, complex, float]] = []
    while stack:
        rect, count = stack.pop()
        if count <= 0:
            continue
        if count == 1 or rect.diameter < MIN_CELL_DIAMETER:
            z, resid = _newton(fin, rect.center, tol)
            if abs(z - rect.center) > 2.0 * rect.diameter and rect.diameter >= MIN_CELL_DIAMETER:
                # Newton escaped its cell; localize further instead.
                stack.extend(_split(fin, rect, count))
                continue
            leaves.append((rect, z, resid))
            continue
        stack.extend(_split(fin, rect, count))
    return leaves


def _split(fin: MeromorphicSum, rect: Rect, count: int):
    children = rect.quadrisect()
    pairs = [_counted(fin, child) for child in children]
    if sum(c for _, c in pairs) != count:
        # A zero sat on a shared cut; re-jitter every child together.
        for factor in _JITTER_FACTORS[1:]:
            pairs = [_counted(fin, child.scaled(factor)) for child in children]
            if sum(c for _, c in pairs) == count:
                break
        else:
            raise BoundaryDegeneracy("child counts do not sum to the parent count")
    return [(r, c) for r, c in pairs if c > 0]


def _multiplicity(fin: MeromorphicSum, z: complex, leaf: Rect, others: list[complex], tol: float) -> int:
    blockers = [abs(z - complex(p)) for p in fin.poles]
    blockers += [abs(z - w) for w in others if w != z]
    d_other = min(blockers) if blockers else math.inf
    cover = 1.5 * leaf.diameter if leaf.diameter <= 10.0 * MIN_CELL_DIAMETER else 0.0
    rho = max(cover, 1e4 * tol, 1e-9)
    if rho > 0.45 * d_other:
        rho = 0.45 * d_other
        if rho < cover:
            raise BoundaryDegeneracy("another singular point intrudes on a zero cluster")
    if rho <= 0.0 or not math.isfinite(rho):
        raise BoundaryDegeneracy("no admissible multiplicity circle")
    report = winding_count(fin, Circle(z, rho, nodes=64))
    if report.count < 1:
        raise BoundaryDegeneracy("multiplicity circle lost its zero")
    return report.count


def locate_zeros(
    h: MeromorphicSum,
    region: Disc,
    tol: float = 1e-10,
    *,
    trunc_tol: float = 1e-8,
) -> list[ZeroRecord]:
    """All zeros of h inside the open disc, with certified total multiplicity.

    For tailed sums the zeros returned are those of the certified truncation
    on the region; the transfer of the *count* to h itself is certified by
    the winding precheck (truncation bound well below min |h| on the
    boundary circle).  Records are sorted by (real, imaginary) part.

    Raises
    ------
    BoundaryDegeneracy
        If a zero or pole hugs the region boundary, or the subdivision
        census cannot be closed after jitter retries.
    NonConvergence
        If Newton refinement fails.
    """
    if region.radius <= 0.0:
        raise ValueError("zero location needs a disc of positive radius")
    if h.tail is None:
        tr = Truncation(h, 0.0, math.inf)
    else:
        tr = truncate(h, region, trunc_tol)
    fin = tr.sum

    boundary = winding_count(
        fin, Circle(region.center, region.radius, nodes=256), min_modulus=10.0 * tr.bound
    )
    inside = (
        int(np.sum(np.abs(fin.poles - region.center) < region.radius))
        if fin.poles.size
        else 0
    )
    z_total = boundary.count + inside
    if z_total == 0:
        return []
    if z_total < 0:
        raise NonConvergence("negative zero count: inconsistent winding data")

    cx, cy = region.center.real, region.center.imag
    last: Exception | None = None
    for factor in _JITTER_FACTORS:
        half = region.radius * factor
        root = Rect(cx - half, cx + half, cy - half, cy + half)
        try:
            root, root_count = _counted(fin, root)
            leaves = _refine_leaves(fin, root, root_count, tol)
        except (BoundaryDegeneracy, NonConvergence) as exc:
            last = exc
            continue
        merged: list[tuple[Rect, complex, float]] = []
        for leaf, z, resid in sorted(leaves, key=lambda t: (t[1].real, t[1].imag)):
            if merged and abs(z - merged[-1][1]) <= max(10.0 * tol, 1e-9):
                continue
            merged.append((leaf, z, resid))
        try:
            locations = [z for _, z, _ in merged]
            records = [
                ZeroRecord(z, _multiplicity(fin, z, leaf, locations, tol), resid)
                for leaf, z, resid in merged
            ]
        except (BoundaryDegeneracy, NonConvergence) as exc:
            last = exc
            continue
        in_disc = [r for r in records if abs(r.location - region.center) < region.radius]
        if sum(r.multiplicity for r in in_disc) == z_total:
            return sorted(in_disc, key=lambda r: (r.location.real, r.location.imag))
        last = BoundaryDegeneracy(
            f"census mismatch: found {sum(r.multiplicity for r in in_disc)}, "
            f"winding says {z_total}"
        )
    raise BoundaryDegeneracy(f"zero census does not close: {last}")
