"""Circle and segment quadrature: integrals, winding counts, Laurent data.

Circle integrals use the trapezoid rule on equispaced nodes, which is
spectrally accurate for analytic periodic integrands; doubling the node
count supplies a free convergence estimate.  Straight segments (used by the
rectangle subdivision and by path integration) use adaptive 15-point
Gauss-Legendre panels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryDegeneracy, NonConvergence, NonFinite
from .geometry import Disc, Rect, segment_point_distance
from .meromorphic import MeromorphicSum, Truncation, _term_values, truncate

__all__ = [
    "Circle",
    "PrincipalPart",
    "WindingReport",
    "integrate_circle",
    "integrate_segment",
    "laurent_coeff",
    "principal_part",
    "rect_winding",
    "winding_count",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)

# Accepting a winding report requires |raw - nearest integer| below this;
# rounding is then provably safe once quadrature error is below it too.
WINDING_DEFECT_LIMIT = 0.25
_MAX_WINDING_NODES = 1 << 16


@dataclass(frozen=True)
class Circle:
    """Positively oriented circle with an attached quadrature resolution."""

    center: complex
    radius: float
    nodes: int = 256

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", complex(self.center))
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError("circle radius must be positive and finite")
        n = self.nodes
        if n < 16 or n & (n - 1):
            raise ValueError("node count must be >= 16 and a power of two")

    def points(self, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """(angles, points) for n equispaced nodes (defaults to self.nodes)."""
        n = self.nodes if n is None else n
        theta = 2.0 * np.pi * np.arange(n) / n
        return theta, self.center + self.radius * np.exp(1j * theta)


@dataclass(frozen=True)
class WindingReport:
    """Argument-principle integral snapped to an integer.

    ``raw`` is (1/2 pi i) * the contour integral of h'/h, ``count`` the
    nearest integer to its real part, and ``defect`` = |raw - count|.
    """

    raw: complex
    count: int
    defect: float

    @property
    def accepted(self) -> bool:
        return self.defect < WINDING_DEFECT_LIMIT


@dataclass(frozen=True)
class PrincipalPart:
    """Double- and simple-pole Laurent coefficients of g at a point.

    c2 multiplies 1/(z - p)**2 and c1 multiplies 1/(z - p); ``estimate`` is
    the node-doubling convergence estimate of the extraction.
    """

    c2: complex
    c1: complex
    extraction_radius: float
    estimate: float


def _sample(g, zs: np.ndarray) -> np.ndarray:
    """Evaluate g on an array, falling back to a scalar loop."""
    try:
        vals = np.asarray(g(zs), dtype=complex)
        if vals.shape == zs.shape:
            return vals
    except Exception:
        pass
    return np.array([g(z) for z in zs.ravel()], dtype=complex).reshape(zs.shape)


def _require_finite(vals: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(vals.view(float))):
        raise NonFinite(f"non-finite sample while integrating {what}")


def integrate_circle(g, c: Circle) -> tuple[complex, float]:
    """Contour integral of g over c, with a node-halving error estimate."""
    _, zs = c.points()
    vals = _sample(g, zs)
    _require_finite(vals, "a circle integrand")
    weighted = vals * (zs - c.center)
    full = 2j * np.pi * weighted.mean()
    half = 2j * np.pi * weighted[::2].mean()
    return complex(full), float(abs(full - half))


def winding_count(
    h: MeromorphicSum,
    c: Circle,
    *,
    trunc_tol: float = 1e-8,
    min_modulus: float = 1e-12,
    guard: float | None = None,
) -> WindingReport:
    """Zeros minus poles of h inside c, certified by the defect threshold.

    For tailed sums the count refers to h itself: the truncation bound has
    to stay an order of magnitude below the smallest sampled |h| on the
    circle, which transfers the count from the truncation to h.
    """
    if h.tail is None:
        tr = Truncation(h, 0.0, math.inf)
    else:
        tr = truncate(h, Disc(c.center, c.radius), trunc_tol)
    fin = tr.sum
    guard = fin.pole_guard if guard is None else guard
    if fin.poles.size:
        ring_dist = np.abs(np.abs(fin.poles - c.center) - c.radius)
        if ring_dist.min() <= guard:
            raise BoundaryDegeneracy("a pole lies on the winding circle")
    floor = max(min_modulus, 10.0 * tr.bound)
    n = c.nodes
    while n <= _MAX_WINDING_NODES:
        _, zs = c.points(n)
        v0, v1 = _term_values(fin, zs, order=1)
        _require_finite(v0, "h on a winding circle")
        _require_finite(v1, "h' on a winding circle")
        if np.abs(v0).min() <= floor:
            raise BoundaryDegeneracy(
                "sampled |h| too small on the circle for a certified count"
            )
        raw = complex((v1 / v0 * (zs - c.center)).mean())
        count = int(round(raw.real))
        defect = abs(raw - count)
        if defect < WINDING_DEFECT_LIMIT:
            return WindingReport(raw, count, defect)
        n *= 2
    raise NonConvergence(
        f"winding defect still >= {WINDING_DEFECT_LIMIT} at {_MAX_WINDING_NODES} nodes"
    )


def _gl_panel(g, a: complex, b: complex) -> complex:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    zs = mid + half * _GL_NODES
    vals = _sample(g, zs)
    _require_finite(vals, "a segment integrand")
    return complex(half * np.dot(_GL_WEIGHTS, vals))


def integrate_segment(
    g, a: complex, b: complex, *, tol: float = 1e-12, max_depth: int = 40
) -> tuple[complex, float]:
    """Adaptive Gauss-Legendre integral of g along the straight segment [a, b]."""

    def recurse(a_: complex, b_: complex, whole: complex, tol_: float, depth: int):
        mid = 0.5 * (a_ + b_)
        left = _gl_panel(g, a_, mid)
        right = _gl_panel(g, mid, b_)
        err = abs(left + right - whole)
        if err <= tol_ or err < 1e-15 * max(1.0, abs(whole)):
            return left + right, err
        if depth <= 0:
            raise NonConvergence("segment quadrature exceeded the recursion cap")
        lv, le = recurse(a_, mid, left, 0.5 * tol_, depth - 1)
        rv, re_ = recurse(mid, b_, right, 0.5 * tol_, depth - 1)
        return lv + rv, le + re_

    if a == b:
        return 0j, 0.0
    return recurse(complex(a), complex(b), _gl_panel(g, a, b), tol, max_depth)


def rect_winding(
    fin: MeromorphicSum,
    rect: Rect,
    *,
    edge_tol: float = 0.02,
    guard: float | None = None,
) -> WindingReport:
    """Argument-principle count over a rectangle boundary (finite sums only).

    Raises BoundaryDegeneracy when a pole hugs an edge or the defect is not
    certifiable; callers jitter the rectangle and retry.
    """
    if fin.tail is not None:
        raise ValueError("rect_winding requires a finite sum")
    guard = fin.pole_guard if guard is None else guard
    corners = rect.corners()
    edges = list(zip(corners, corners[1:] + corners[:1]))
    for a, b in edges:
        for p in fin.poles:
            if segment_point_distance(a, b, complex(p)) <= 10.0 * guard:
                raise BoundaryDegeneracy("pole too close to a subdivision edge")

    def ratio(zs):
        v0, v1 = _term_values(fin, np.asarray(zs, dtype=complex), order=1)
        return v1 / v0

    total = 0j
    try:
        for a, b in edges:
            val, _ = integrate_segment(ratio, a, b, tol=edge_tol, max_depth=24)
            total += val
    except (NonConvergence, NonFinite) as exc:
        raise BoundaryDegeneracy(f"edge integral failed: {exc}") from exc
    raw = total / (2j * np.pi)
    count = int(round(raw.real))
    defect = abs(raw - count)
    if defect >= WINDING_DEFECT_LIMIT:
        raise BoundaryDegeneracy(f"rectangle winding defect {defect:.3g} not certifiable")
    return WindingReport(complex(raw), count, float(defect))


def laurent_coeff(
    g,
    center: complex,
    radius: float,
    k: int,
    *,
    nodes: int = 256,
    tol: float = 1e-12,
    max_nodes: int = 1 << 14,
) -> tuple[complex, float]:
    """Laurent coefficient of (z - center)**k in g, by circle quadrature.

    Returns (1/2 pi i) * integral of g(z) (z - center)**(-k-1) dz together
    with the node-doubling convergence estimate.
    """
    prev = None
    n = max(16, nodes)
    while True:
        theta = 2.0 * np.pi * np.arange(n) / n
        zs = center + radius * np.exp(1j * theta)
        vals = _sample(g, zs)
        _require_finite(vals, "a Laurent integrand")
        coeff = complex(radius ** (-k) * (vals * np.exp(-1j * k * theta)).mean())
        if prev is not None:
            est = abs(coeff - prev)
            if est <= tol or n >= max_nodes:
                return coeff, est
        prev = coeff
        n *= 2


def principal_part(
    g,
    center: complex,
    radius: float,
    *,
    nodes: int = 256,
    tol: float = 1e-12,
    max_nodes: int = 1 << 14,
) -> PrincipalPart:
    """(c2, c1) Laurent data of g at ``center`` from one node-doubling sweep.

    g must be analytic in a punctured disc containing the circle.
    """
    prev: tuple[complex, complex] | None = None
    n = max(16, nodes)
    while True:
        theta = 2.0 * np.pi * np.arange(n) / n
        zs = center + radius * np.exp(1j * theta)
        vals = _sample(g, zs)
        _require_finite(vals, "a principal-part integrand")
        c2 = complex(radius**2 * (vals * np.exp(2j * theta)).mean())
        c1 = complex(radius * (vals * np.exp(1j * theta)).mean())
        if prev is not None:
            est = max(abs(c2 - prev[0]), abs(c1 - prev[1]))
            if est <= tol or n >= max_nodes:
                return PrincipalPart(c2, c1, float(radius), float(est))
        prev = (c2, c1)
        n *= 2
