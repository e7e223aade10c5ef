"""Pulled-back hyperbolic log-density, curvature checks, cone-angle probes.

The developed map sends the slit domain into the upper half-plane carrying
|dw|**2 / (Im w)**2 (curvature -1), so the pulled-back density is
u = ln|h| - ln(Im f): |f'| = |h| and the imaginary part of f is
single-valued under translation monodromy, which makes u branch
independent.  Verifying Delta u = e**(2u), i.e. K = -e**(-2u) Delta u = -1,
is the artifact's direct curvature test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .developing import (
    Polyline,
    _panel_integrals,
    canonical_path,
    default_base_point,
    integral_grid,
    path_integral,
)
from .errors import HalfPlaneViolation, ZeroProximity
from .geometry import Disc, Rect
from .meromorphic import MeromorphicSum, _term_values, evaluate, truncate
from .zeros import locate_zeros

__all__ = [
    "CurvatureReport",
    "MetricGrid",
    "curvature_check",
    "density_u",
    "grid_csv",
    "grid_pgm",
    "measure_cone_angle",
    "sample_grid",
    "singular_points_in",
]

STENCIL_RELATIVE = 1e-3
STENCIL_FLOOR = 1e-6


@dataclass(frozen=True)
class MetricGrid:
    """Sampled log-density u on a rectangular lattice.

    ``u[iy, ix]`` belongs to origin + ix*spacing + i*iy*spacing; masked
    nodes (inside singular guards) hold nan.
    """

    origin: complex
    spacing: float
    nx: int
    ny: int
    u: np.ndarray
    mask: np.ndarray

    def node(self, ix: int, iy: int) -> complex:
        return self.origin + ix * self.spacing + 1j * iy * self.spacing

    @property
    def masked_fraction(self) -> float:
        return float(self.mask.mean())


@dataclass(frozen=True)
class CurvatureReport:
    """Worst |K + 1| over the tested nodes."""

    max_abs_deviation: float
    nodes_tested: int
    stencil_spacing: float


def density_u(
    h: MeromorphicSum,
    lam: float,
    z: complex,
    path: Polyline | None = None,
    base: complex | None = None,
    *,
    zero_floor: float = 1e-300,
) -> float:
    """u(z) = ln|h(z)| - ln(Im f(z)) along the given (or canonical) branch."""
    z = complex(z)
    if path is None:
        path = canonical_path(h, z, base)
    elif path.end != z:
        raise ValueError("path does not end at the evaluation point")
    value, _ = evaluate(h, z)
    mod = abs(value)
    if mod <= zero_floor:
        raise ZeroProximity(f"|h({z})| vanishes to working precision")
    integral, _ = path_integral(h, path)
    im_f = lam + integral.imag
    if im_f <= 0.0:
        raise HalfPlaneViolation(
            f"Im f = {im_f:.6g} <= 0 at {z}; the offset {lam} is too small"
        )
    return math.log(mod) - math.log(im_f)


def singular_points_in(
    h: MeromorphicSum,
    region: Disc,
    *,
    trunc_tol: float = 1e-8,
    zero_tol: float = 1e-10,
) -> list[complex]:
    """Retained poles plus located zeros inside the region (jitter-tolerant)."""
    tr = truncate(h, region, trunc_tol)
    fin = tr.sum
    last: Exception | None = None
    for factor in (1.0, 1.001, 0.999, 1.003):
        try:
            zeros = locate_zeros(fin, Disc(region.center, region.radius * factor), tol=zero_tol)
            break
        except Exception as exc:  # noqa: BLE001 - retried with a nudged radius
            last = exc
    else:
        raise last  # type: ignore[misc]
    points = [complex(p) for p in fin.poles if abs(p - region.center) <= region.radius]
    return points + [r.location for r in zeros]


def sample_grid(
    h: MeromorphicSum,
    lam: float,
    window: Rect,
    spacing: float,
    base: complex | None = None,
    *,
    trunc_tol: float = 1e-8,
    zero_tol: float = 1e-10,
) -> MetricGrid:
    """Fill u on the window lattice, masking singular neighbourhoods.

    The mask radius is max(5*spacing, pole_guard) around every pole and
    zero.  Raises HalfPlaneViolation if any unmasked node leaves the upper
    half-plane (the offset is too small for this window).
    """
    disc = window.circumscribed_disc()
    grown = Disc(disc.center, disc.radius + 2.0 * spacing)
    tr = truncate(h, grown, trunc_tol)
    fin = tr.sum
    singulars = singular_points_in(fin, grown, zero_tol=zero_tol)

    im_integral, chain_mask, h_abs = integral_grid(fin, window, spacing, base)
    ny, nx = im_integral.shape
    xs = window.x0 + spacing * np.arange(nx)
    ys = window.y0 + spacing * np.arange(ny)
    nodes = xs[None, :] + 1j * ys[:, None]

    guard = max(5.0 * spacing, fin.pole_guard)
    if singulars:
        dist = np.abs(nodes[..., None] - np.array(singulars)).min(axis=-1)
        mask = chain_mask | (dist < guard)
    else:
        mask = chain_mask.copy()

    im_f = lam + im_integral
    bad = ~mask & (im_f <= 0.0)
    if bad.any():
        worst = float(im_f[~mask].min())
        raise HalfPlaneViolation(
            f"Im f reaches {worst:.6g} <= 0 on the grid; offset {lam} too small"
        )
    u = np.where(mask, np.nan, np.log(np.where(mask, 1.0, h_abs)) - np.log(np.where(mask, 1.0, im_f)))
    return MetricGrid(complex(window.x0, window.y0), float(spacing), nx, ny, u, mask)


def _u_at_offsets(
    fin: MeromorphicSum, lam: float, center: complex, center_integral: complex, offsets
) -> np.ndarray:
    """u at center + offsets, extending one branch by single panels."""
    targets = center + np.asarray(offsets, dtype=complex)
    segs = _panel_integrals(fin, np.full(targets.shape, center, dtype=complex), targets)
    im_f = lam + (center_integral + segs).imag
    if np.any(im_f <= 0.0):
        raise HalfPlaneViolation("stencil point left the upper half-plane")
    (v0,) = _term_values(fin, targets)
    return np.log(np.abs(v0)) - np.log(im_f)


def curvature_check(
    h: MeromorphicSum,
    lam: float,
    points,
    stencil: float | None = None,
    base: complex | None = None,
    *,
    singular_points: list[complex] | None = None,
    trunc_tol: float = 1e-8,
) -> CurvatureReport:
    """sup |K + 1| over the points, K = -e**(-2u) * (5-point Laplacian of u).

    The Laplacian is Richardson-extrapolated over stencil spacings (s, s/2);
    when ``stencil`` is None each point uses s = max(1e-3 * distance to the
    nearest singular point, 1e-6).
    """
    points = [complex(p) for p in points]
    if not points:
        raise ValueError("curvature check needs at least one point")
    base = default_base_point(h) if base is None else complex(base)
    if h.tail is not None:
        reach = max(max(abs(p) for p in points), abs(base)) + 0.05
        fin = truncate(h, Disc(0j, reach), trunc_tol).sum
    else:
        fin = h
    if singular_points is None:
        span = max(abs(p - points[0]) for p in points)
        singular_points = singular_points_in(fin, Disc(points[0], span + 0.5))

    worst = 0.0
    used_stencil = 0.0
    for z in points:
        if stencil is None:
            dist = min((abs(z - q) for q in singular_points), default=math.inf)
            s = max(STENCIL_RELATIVE * dist, STENCIL_FLOOR)
        else:
            s = float(stencil)
        used_stencil = max(used_stencil, s)
        center_integral, _ = path_integral(fin, canonical_path(fin, z, base))
        offsets = np.array(
            [s, -s, 1j * s, -1j * s, 0.5 * s, -0.5 * s, 0.5j * s, -0.5j * s, 0.0],
            dtype=complex,
        )
        u = _u_at_offsets(fin, lam, z, center_integral, offsets)
        u0 = u[8]
        lap_s = (u[0] + u[1] + u[2] + u[3] - 4.0 * u0) / (s * s)
        lap_h = (u[4] + u[5] + u[6] + u[7] - 4.0 * u0) / (0.25 * s * s)
        lap = (4.0 * lap_h - lap_s) / 3.0
        curvature = -math.exp(-2.0 * u0) * lap
        worst = max(worst, abs(curvature + 1.0))
    return CurvatureReport(float(worst), len(points), float(used_stencil))


def _circle_u(
    fin: MeromorphicSum, lam: float, p: complex, radius: float, nodes: int, base: complex
) -> np.ndarray:
    """u on the circle |z - p| = radius, chained from one canonical branch."""
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    ring = p + radius * np.exp(1j * theta)
    start_integral, _ = path_integral(fin, canonical_path(fin, complex(ring[0]), base))
    chords = _panel_integrals(fin, ring, np.roll(ring, -1))
    integrals = np.empty(nodes, dtype=complex)
    integrals[0] = start_integral
    integrals[1:] = start_integral + np.cumsum(chords[:-1])
    im_f = lam + integrals.imag
    if np.any(im_f <= 0.0):
        raise HalfPlaneViolation("circumference sample left the upper half-plane")
    (v0,) = _term_values(fin, ring)
    return np.log(np.abs(v0)) - np.log(im_f)


def measure_cone_angle(
    h: MeromorphicSum,
    lam: float,
    p: complex,
    radii: tuple[float, float],
    *,
    nodes: int = 512,
    base: complex | None = None,
    trunc_tol: float = 1e-8,
) -> float:
    """Angle parameter from geodesic-circle circumferences.

    C(r) = contour integral of e**u |dz| behaves like const * r**theta near
    an angle-2*pi*theta point, so theta ~ log(C(r1)/C(r2)) / log(r1/r2).
    Cusps drive the estimate to 0 logarithmically.
    """
    r1, r2 = radii
    if not (r1 > 0 and r2 > 0 and r1 != r2):
        raise ValueError("radii must be positive and distinct")
    p = complex(p)
    base = default_base_point(h) if base is None else complex(base)
    if h.tail is not None:
        reach = max(abs(p) + 2.0 * max(r1, r2), abs(base)) + 0.05
        fin = truncate(h, Disc(0j, reach), trunc_tol).sum
    else:
        fin = h
    circumferences = []
    for r in (r1, r2):
        u = _circle_u(fin, lam, p, r, nodes, base)
        full = 2.0 * math.pi * r * float(np.exp(u).mean())
        half = 2.0 * math.pi * r * float(np.exp(u[::2]).mean())
        if abs(full - half) > 1e-6 * max(full, 1e-300):
            # One doubling, mirroring the circle-quadrature convergence check.
            u = _circle_u(fin, lam, p, r, 2 * nodes, base)
            full = 2.0 * math.pi * r * float(np.exp(u).mean())
        circumferences.append(full)
    return float(math.log(circumferences[0] / circumferences[1]) / math.log(r1 / r2))


def grid_csv(grid: MetricGrid) -> str:
    """CSV serialization with header x,y,u,masked; masked rows leave u empty."""
    lines = ["x,y,u,masked"]
    for iy in range(grid.ny):
        y = grid.origin.imag + iy * grid.spacing
        for ix in range(grid.nx):
            x = grid.origin.real + ix * grid.spacing
            if grid.mask[iy, ix]:
                lines.append(f"{x!r},{y!r},,1")
            else:
                lines.append(f"{x!r},{y!r},{grid.u[iy, ix]!r},0")
    return "\n".join(lines) + "\n"


def grid_pgm(grid: MetricGrid) -> tuple[bytes, dict]:
    """8-bit binary PGM of u (masked pixels are 0) plus rescale metadata."""
    unmasked = grid.u[~grid.mask]
    if unmasked.size:
        u_min = float(unmasked.min())
        u_max = float(unmasked.max())
    else:
        u_min = u_max = 0.0
    scale = u_max - u_min
    pixels = np.zeros((grid.ny, grid.nx), dtype=np.uint8)
    if scale > 0.0:
        values = np.clip((grid.u - u_min) / scale, 0.0, 1.0)
        pixels[~grid.mask] = 1 + np.rint(254.0 * values[~grid.mask]).astype(np.uint8)
    else:
        pixels[~grid.mask] = 128
    header = f"P5\n{grid.nx} {grid.ny}\n255\n".encode("ascii")
    meta = {
        "u_min": u_min,
        "u_max": u_max,
        "nx": grid.nx,
        "ny": grid.ny,
        "masked_value": 0,
    }
    return header + pixels.tobytes(), meta
