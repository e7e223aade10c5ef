"""Developed maps f(z) = i*lambda + integral of -i*h along explicit paths.

The one-form -i*h(z) dz integrates to a multi-valued function whose
monodromy around each pole is the real translation 2*pi*residue; its
imaginary part is single-valued.  Paths are explicit polylines so a branch
is always reproducible: canonical paths run straight from the base point
with deterministic clockwise detours around intervening poles ("detour on
the left" of the pole as seen by the traveler).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contour import Circle, _GL_NODES, _GL_WEIGHTS, integrate_circle, integrate_segment
from .errors import NonConvergence, PathThroughPole, SeparationTooSmall
from .geometry import Disc, Rect, segment_point_distance
from .meromorphic import MeromorphicSum, Truncation, _term_values, truncate

__all__ = [
    "DevelopingSample",
    "Lambda0Estimate",
    "Polyline",
    "canonical_path",
    "default_base_point",
    "estimate_lambda0",
    "eval_f",
    "extend_path",
    "monodromy",
    "path_integral",
]

SEGMENT_TOL = 1e-12
_BASE_CANDIDATES = (0j, -0.5 + 0j, -0.5 + 0.3j, 0.4j, -0.3 - 0.4j, 0.55 + 0.2j)


@dataclass(frozen=True)
class Polyline:
    """Piecewise-straight path; a single vertex is a degenerate (empty) path."""

    vertices: tuple[complex, ...]

    def __post_init__(self) -> None:
        verts = tuple(complex(v) for v in self.vertices)
        if not verts:
            raise ValueError("a polyline needs at least one vertex")
        for a, b in zip(verts, verts[1:]):
            if a == b:
                raise ValueError("consecutive polyline vertices must differ")
        object.__setattr__(self, "vertices", verts)

    @property
    def start(self) -> complex:
        return self.vertices[0]

    @property
    def end(self) -> complex:
        return self.vertices[-1]

    def segments(self) -> list[tuple[complex, complex]]:
        return list(zip(self.vertices, self.vertices[1:]))

    @classmethod
    def straight(cls, a: complex, b: complex) -> "Polyline":
        return cls((a,)) if a == b else cls((a, b))


def extend_path(path: Polyline, z: complex) -> Polyline:
    """Path continued by a straight segment to z (same branch)."""
    if complex(z) == path.end:
        return path
    return Polyline(path.vertices + (complex(z),))


@dataclass(frozen=True)
class DevelopingSample:
    """Value of the developed map at one point along one explicit branch."""

    z: complex
    lam: float
    value: complex
    path: Polyline
    quadrature_error: float


@dataclass(frozen=True)
class Lambda0Estimate:
    """Grid maximum of -Im(integral), plus a heuristic Lipschitz margin.

    ``value + margin`` is the recommended lower cutoff for admissible
    offsets; the margin is resolution * sup |h| over the sampled grid and is
    a heuristic, not a certificate.
    """

    value: float
    grid_resolution: float
    margin: float


def _finite_for_path(h: MeromorphicSum, moduli: float, trunc_tol: float) -> Truncation:
    if h.tail is None:
        return Truncation(h, 0.0, math.inf)
    return truncate(h, Disc(0j, moduli), trunc_tol)


def default_base_point(h: MeromorphicSum, min_clearance: float = 1e-3) -> complex:
    """First safe anchor from a fixed candidate list (0 first, then -1/2).

    Only differences and loops matter downstream, so shifting the base point
    re-anchors the offset without changing any verified statement.
    """
    tail_floor = h.tail.pole_modulus_lower(h.tail.start) if h.tail is not None else math.inf
    for cand in _BASE_CANDIDATES:
        if h.poles.size and np.abs(h.poles - cand).min() <= min_clearance:
            continue
        if h.tail is not None and abs(cand) >= tail_floor - min_clearance:
            continue
        return cand
    raise SeparationTooSmall("no safe base point among the default candidates")


def _local_detour_radius(poles: np.ndarray, idx: int) -> float:
    others = np.delete(poles, idx)
    if others.size == 0:
        return 0.5
    return 0.5 * float(np.abs(others - poles[idx]).min())


def _detour_vertices(a: complex, b: complex, poles: np.ndarray) -> list[complex]:
    """Vertices after a (exclusive) for a pole-avoiding walk from a to b.

    Straight run with clockwise circular detours of half the local pole gap;
    endpoints inside a detour circle connect radially.
    """
    d = b - a
    length = abs(d)
    u = d / length
    events = []
    for idx in range(len(poles)):
        p = complex(poles[idx])
        rho = _local_detour_radius(poles, idx)
        t_foot = ((p - a) * u.conjugate()).real
        line_dist = abs(p - (a + t_foot * u))
        if line_dist >= rho:
            continue
        half_chord = math.sqrt(rho * rho - line_dist * line_dist)
        t_in, t_out = t_foot - half_chord, t_foot + half_chord
        if t_out <= 0.0 or t_in >= length:
            continue
        events.append((t_in, t_out, p, rho))
    events.sort(key=lambda e: e[0])

    verts: list[complex] = []
    cursor = 0.0
    for t_in, t_out, p, rho in events:
        if t_in > cursor:
            entry = a + t_in * u
            alpha = np.angle(entry - p)
        else:
            # Current point (a or a previous exit) sits inside this circle:
            # step radially outward before walking the arc.
            here = verts[-1] if verts else a
            alpha = np.angle(here - p)
            entry = p + rho * np.exp(1j * alpha)
        if not verts or verts[-1] != entry:
            if entry != a:
                verts.append(complex(entry))
        if t_out < length:
            exitp = a + t_out * u
            beta = np.angle(exitp - p)
            radial_tail = None
        else:
            beta = np.angle(b - p)
            exitp = p + rho * np.exp(1j * beta)
            radial_tail = b
        sweep = (beta - alpha) % (2.0 * math.pi) - 2.0 * math.pi  # clockwise
        if sweep != -2.0 * math.pi:
            steps = max(2, int(math.ceil(abs(sweep) / (math.pi / 8.0))))
            for k in range(1, steps + 1):
                verts.append(complex(p + rho * np.exp(1j * (alpha + sweep * k / steps))))
        if radial_tail is not None:
            if verts[-1] != radial_tail:
                verts.append(complex(radial_tail))
            return verts
        cursor = t_out
    if not verts or verts[-1] != b:
        verts.append(complex(b))
    return verts


def canonical_path(
    h: MeromorphicSum,
    z: complex,
    base: complex | None = None,
    *,
    trunc_tol: float = 1e-10,
) -> Polyline:
    """Deterministic pole-avoiding polyline from the base point to z."""
    base = default_base_point(h) if base is None else complex(base)
    z = complex(z)
    if z == base:
        return Polyline((base,))
    tr = _finite_for_path(h, max(abs(base), abs(z)), trunc_tol)
    poles = tr.sum.poles
    if poles.size == 0:
        return Polyline.straight(base, z)
    verts = [base] + _detour_vertices(base, z, poles)
    deduped = [verts[0]]
    for v in verts[1:]:
        if v != deduped[-1]:
            deduped.append(v)
    return Polyline(tuple(deduped))


def _validate_path(fin: MeromorphicSum, path: Polyline, guard: float) -> None:
    for a, b in path.segments():
        for p in fin.poles:
            if segment_point_distance(a, b, complex(p)) <= guard:
                raise PathThroughPole(
                    f"segment [{a}, {b}] passes within the guard of pole {p}"
                )


def path_integral(
    h: MeromorphicSum,
    path: Polyline,
    *,
    tol: float = SEGMENT_TOL,
    trunc_tol: float = 1e-12,
) -> tuple[complex, float]:
    """Integral of -i*h(z) dz along the polyline, with an error estimate.

    The estimate sums per-segment adaptive quadrature estimates plus the
    truncation bound times the path length for tailed sums.
    """
    moduli = max(abs(v) for v in path.vertices)
    tr = _finite_for_path(h, moduli, trunc_tol)
    fin = tr.sum
    _validate_path(fin, path, fin.pole_guard)

    def omega(zs):
        (v0,) = _term_values(fin, np.asarray(zs, dtype=complex))
        return -1j * v0

    total = 0j
    err = 0.0
    length = 0.0
    for a, b in path.segments():
        val, e = integrate_segment(omega, a, b, tol=tol)
        total += val
        err += e
        length += abs(b - a)
    return complex(total), float(err + tr.bound * length)


def eval_f(h: MeromorphicSum, lam: float, path: Polyline) -> DevelopingSample:
    """Developed value i*lam + integral of -i*h along the given branch."""
    value, err = path_integral(h, path)
    return DevelopingSample(path.end, float(lam), 1j * lam + value, path, err)


def monodromy(h: MeromorphicSum, pole_index: int, *, nodes: int = 256) -> float:
    """Translation picked up around pole ``pole_index`` (loops once, ccw).

    Equals 2*pi*residue by the residue theorem; the imaginary part must
    vanish to 1e-9, which fails honestly for non-real residues.
    """
    if not 0 <= pole_index < len(h.terms):
        raise IndexError("pole_index out of range of the explicit terms")
    p = complex(h.poles[pole_index])
    others = np.delete(h.poles, pole_index)
    radius = 0.5 * float(np.abs(others - p).min()) if others.size else 0.25
    if h.tail is not None:
        tail_floor = h.tail.pole_modulus_lower(h.tail.start)
        radius = min(radius, 0.5 * (tail_floor - abs(p)))
    if not radius > 10.0 * h.pole_guard:
        raise SeparationTooSmall(f"no loop radius separates pole {p} from its neighbours")
    tr = _finite_for_path(h, abs(p) + radius, 1e-12)
    fin = tr.sum

    def omega(zs):
        (v0,) = _term_values(fin, np.asarray(zs, dtype=complex))
        return -1j * v0

    val, _ = integrate_circle(omega, Circle(p, radius, nodes=nodes))
    val += 0j  # tail contribution bounded by tr.bound * circumference
    if abs(val.imag) > 1e-9 + tr.bound * 2.0 * math.pi * radius:
        raise NonConvergence(
            f"monodromy around {p} is not a real translation: {val}"
        )
    return float(val.real)


# ---------------------------------------------------------------------------
# Grid evaluation of Im(integral): rows are chained by short exact panels,
# restarting with a canonical path after every masked gap.  Im is
# single-valued, so any admissible branch gives the same grid.
# ---------------------------------------------------------------------------

def _panel_integrals(fin: MeromorphicSum, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Single 15-point panel of -i*h per straight segment (vectorized)."""
    mid = 0.5 * (starts + ends)
    half = 0.5 * (ends - starts)
    zs = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    (v0,) = _term_values(fin, zs)
    return -1j * half * (v0 * _GL_WEIGHTS[None, :]).sum(axis=1)


def integral_grid(
    h: MeromorphicSum,
    window: Rect,
    spacing: float,
    base: complex | None = None,
    *,
    trunc_tol: float = 1e-10,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(im_integral, chain_mask, |h|) sampled on the window lattice.

    The lattice runs from (x0, y0) with the given spacing; masked nodes sit
    within max(2*spacing, 10*guard) of a retained pole and carry nan.
    """
    if spacing <= 0.0:
        raise ValueError("spacing must be positive")
    base = default_base_point(h) if base is None else complex(base)
    disc = window.circumscribed_disc()
    tr = _finite_for_path(h, max(disc.sup_modulus, abs(base)), trunc_tol)
    fin = tr.sum

    nx = int(math.floor(window.width / spacing + 1e-9)) + 1
    ny = int(math.floor(window.height / spacing + 1e-9)) + 1
    xs = window.x0 + spacing * np.arange(nx)
    ys = window.y0 + spacing * np.arange(ny)
    nodes = xs[None, :] + 1j * ys[:, None]

    if fin.poles.size:
        dist = np.abs(nodes[..., None] - fin.poles).min(axis=-1)
    else:
        dist = np.full(nodes.shape, np.inf)
    mask = dist < max(2.0 * spacing, 10.0 * fin.pole_guard)

    im_integral = np.full(nodes.shape, np.nan)
    for iy in range(ny):
        row_mask = mask[iy]
        ix = 0
        while ix < nx:
            if row_mask[ix]:
                ix += 1
                continue
            run = ix
            while run + 1 < nx and not row_mask[run + 1]:
                run += 1
            # All chain restarts reuse the one truncation computed above.
            start_val, _ = path_integral(
                fin, canonical_path(fin, complex(nodes[iy, ix]), base)
            )
            vals = np.empty(run - ix + 1, dtype=complex)
            vals[0] = start_val
            if run > ix:
                segs = _panel_integrals(fin, nodes[iy, ix:run], nodes[iy, ix + 1 : run + 1])
                vals[1:] = start_val + np.cumsum(segs)
            im_integral[iy, ix : run + 1] = vals.imag
            ix = run + 1

    (h_abs,) = _term_values(fin, nodes)
    return im_integral, mask, np.abs(h_abs)


def estimate_lambda0(
    h: MeromorphicSum,
    domain: Disc,
    resolution: float,
    base: complex | None = None,
) -> Lambda0Estimate:
    """Offset threshold estimate: max of -Im(integral) over a square grid.

    Nodes outside the domain disc or inside pole guards are skipped; with
    positive residues the imaginary part climbs near poles, so skipping
    their neighbourhoods never hides the maximum.
    """
    c, r = domain.center, domain.radius
    window = Rect(c.real - r, c.real + r, c.imag - r, c.imag + r)
    im_integral, mask, h_abs = integral_grid(h, window, resolution, base)
    nx = im_integral.shape[1]
    ny = im_integral.shape[0]
    xs = window.x0 + resolution * np.arange(nx)
    ys = window.y0 + resolution * np.arange(ny)
    nodes = xs[None, :] + 1j * ys[:, None]
    usable = ~mask & (np.abs(nodes - c) <= r)
    if not usable.any():
        raise NonConvergence("lambda0 grid has no usable nodes; refine the resolution")
    value = float((-im_integral[usable]).max())
    margin = float(resolution * h_abs[usable].max())
    return Lambda0Estimate(value, float(resolution), margin)
