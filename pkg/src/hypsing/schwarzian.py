"""Schwarzian derivatives, singularity classification, indicial exponents.

With f' = -i*h the Schwarzian {f, z} = (f''/f')' - (1/2)(f''/f')**2 reduces
to the closed form h''/h - (3/2)(h'/h)**2, which is what the classifier
extracts principal parts from.  The convention used everywhere: a double
pole coefficient c2 = (1 - theta**2)/2 encodes an angle-parameter theta,
with theta = 0 the cusp case (c2 = 1/2) and theta = 1 a smooth point.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .contour import PrincipalPart, principal_part
from .errors import (
    DegenerateDerivative,
    NonConvergence,
    NonHyperbolicExponent,
    SeparationTooSmall,
    ZeroProximity,
)
from .geometry import Disc
from .meromorphic import (
    MeromorphicSum,
    Truncation,
    TruncationPolicy,
    _term_values,
    evaluate_derivatives,
    truncate,
)
from .zeros import ZeroRecord, locate_zeros

__all__ = [
    "PrincipalPart",
    "SingularityReport",
    "classify_all",
    "classify_point",
    "indicial_exponents",
    "numeric_schwarzian",
    "schwarzian_from_h",
    "schwarzian_on_array",
]

DEFAULT_CLASS_TOL = 1e-6
# Accepted principal parts need a quadrature estimate below this.
PP_ESTIMATE_LIMIT = 1e-8


@dataclass(frozen=True)
class SingularityReport:
    """Classified singular point of the pulled-back metric.

    ``kind`` is one of "cusp", "cone", "regular"; ``theta`` parametrizes the
    angle 2*pi*theta (0 for cusps); ``indicial`` are the local Fuchsian
    exponents ((1+theta)/2, (1-theta)/2); ``flag`` marks a measured c2 that
    disagrees with the structural prediction beyond tolerance.
    """

    location: complex
    kind: str
    theta: float
    indicial: tuple[float, float]
    c2: complex
    c1: complex
    source: str
    source_data: float | int | None = None
    flag: bool = False

    @property
    def angle(self) -> float:
        return 2.0 * math.pi * self.theta


def schwarzian_on_array(fin: MeromorphicSum, zs) -> np.ndarray:
    """Closed-form Schwarzian h''/h - (3/2)(h'/h)**2 on an array (no guards)."""
    v0, v1, v2 = _term_values(fin, np.asarray(zs, dtype=complex), order=2)
    ratio = v1 / v0
    return v2 / v0 - 1.5 * ratio * ratio


def schwarzian_from_h(
    h: MeromorphicSum,
    z: complex,
    truncation: TruncationPolicy | None = None,
    *,
    zero_floor: float = 1e-10,
) -> complex:
    """Schwarzian of the developed map at z, via the derivative closed form."""
    der = evaluate_derivatives(h, z, order=2, truncation=truncation)
    v0, v1, v2 = der.values
    if abs(v0) <= max(zero_floor, 10.0 * der.bounds[0]):
        raise ZeroProximity(f"|h({z})| = {abs(v0):.3e} is too close to a zero")
    ratio = v1 / v0
    return v2 / v0 - 1.5 * ratio * ratio


def numeric_schwarzian(f, z: complex, step: float, *, deriv_floor: float = 1e-8) -> complex:
    """Black-box Schwarzian via Richardson-extrapolated central differences.

    Uses f at z, z +- step/2, z +- step, z +- 2*step; fourth-order accurate
    in the step for analytic f.  The caller picks a step small enough that
    the stencil stays inside the domain of analyticity.
    """
    z = complex(z)
    s = float(step)
    f0 = complex(f(z))
    fp_h, fm_h = complex(f(z + 0.5 * s)), complex(f(z - 0.5 * s))
    fp, fm = complex(f(z + s)), complex(f(z - s))
    fpp, fmm = complex(f(z + 2 * s)), complex(f(z - 2 * s))

    d1_s = (fp - fm) / (2 * s)
    d1_h = (fp_h - fm_h) / s
    d1 = (4 * d1_h - d1_s) / 3
    d2_s = (fp - 2 * f0 + fm) / s**2
    d2_h = (fp_h - 2 * f0 + fm_h) / (0.5 * s) ** 2
    d2 = (4 * d2_h - d2_s) / 3
    d3_s = (fpp - 2 * fp + 2 * fm - fmm) / (2 * s**3)
    d3_h = (fp - 2 * fp_h + 2 * fm_h - fm) / (2 * (0.5 * s) ** 3)
    d3 = (4 * d3_h - d3_s) / 3

    if abs(d1) < deriv_floor:
        raise DegenerateDerivative(f"|f'({z})| ~ {abs(d1):.3e} below threshold")
    ratio = d2 / d1
    return d3 / d1 - 1.5 * ratio * ratio


def indicial_exponents(c2: complex) -> tuple[complex, complex]:
    """Local Fuchsian exponents ((1+lam)/2, (1-lam)/2) with lam = sqrt(1-2*c2).

    The second exponent is computed as 1 minus the first so the pair sums
    to 1 exactly in floating point.
    """
    lam = cmath.sqrt(1.0 - 2.0 * complex(c2))
    e1 = (1.0 + lam) / 2.0
    return e1, 1.0 - e1


def classify_point(
    pp: PrincipalPart,
    class_tol: float = DEFAULT_CLASS_TOL,
    *,
    location: complex = 0j,
    source: str = "probe",
    source_data: float | int | None = None,
) -> SingularityReport:
    """Cusp / cone / regular decision from a principal part.

    c2 within tolerance of 1/2 means cusp (theta 0); a vanishing principal
    part means a regular point (theta 1); otherwise theta = sqrt(1 - 2 Re c2)
    must be a positive real, else the point is not classifiable.
    """
    if pp.estimate >= PP_ESTIMATE_LIMIT:
        raise NonConvergence(
            f"principal part estimate {pp.estimate:.3e} too large to accept"
        )
    c2 = complex(pp.c2)
    if abs(c2.imag) >= class_tol:
        raise NonHyperbolicExponent(f"Im c2 = {c2.imag:.3e} exceeds tolerance")
    if c2.real > 0.5 + class_tol:
        raise NonHyperbolicExponent(f"Re c2 = {c2.real:.6f} > 1/2: no real angle")
    if abs(c2 - 0.5) < class_tol:
        kind, theta = "cusp", 0.0
    elif abs(c2) < class_tol and abs(pp.c1) < class_tol:
        kind, theta = "regular", 1.0
    else:
        theta_sq = 1.0 - 2.0 * c2.real
        if theta_sq <= 0.0:
            raise NonHyperbolicExponent("theta**2 <= 0 within the tolerance sliver")
        kind, theta = "cone", math.sqrt(theta_sq)
    e1 = (1.0 + theta) / 2.0
    return SingularityReport(
        location=complex(location),
        kind=kind,
        theta=theta,
        indicial=(e1, 1.0 - e1),
        c2=c2,
        c1=complex(pp.c1),
        source=source,
        source_data=source_data,
        flag=False,
    )


def _extraction_radius(
    target: complex, region: Disc, known: list[complex], guard: float
) -> float:
    d_other = min((abs(target - q) for q in known if q != target), default=math.inf)
    d_boundary = region.radius - abs(target - region.center)
    radius = 0.5 * min(d_other, d_boundary)
    if not radius > max(1e-9, 10.0 * guard):
        raise SeparationTooSmall(
            f"no admissible extraction circle around {target}"
        )
    return radius


def classify_all(
    h: MeromorphicSum,
    region: Disc,
    *,
    class_tol: float = DEFAULT_CLASS_TOL,
    trunc_tol: float = 1e-8,
    zero_tol: float = 1e-10,
    zeros: list[ZeroRecord] | None = None,
    threads: int = 1,
) -> list[SingularityReport]:
    """Classify every pole and zero of h inside the region.

    Each c2 is measured by contour extraction around the closed-form
    Schwarzian and cross-checked against the structural prediction (1/2 at
    poles, (1 - (m+1)**2)/2 at zeros of multiplicity m); a mismatch beyond
    class_tol sets the report's flag instead of silently passing.
    """
    tr: Truncation = truncate(h, region, trunc_tol)
    fin = tr.sum
    if zeros is None:
        zeros = locate_zeros(fin, region, tol=zero_tol)
    known = [complex(p) for p in fin.poles] + [r.location for r in zeros]
    targets: list[tuple[complex, complex, str, float | int]] = []
    for p, a in zip(fin.poles, fin.residues):
        if abs(p - region.center) < region.radius:
            targets.append((complex(p), 0.5 + 0j, "pole", complex(a).real))
    for rec in zeros:
        predicted = (1.0 - (rec.multiplicity + 1) ** 2) / 2.0
        targets.append((rec.location, predicted + 0j, "zero", rec.multiplicity))

    def examine(item):
        target, predicted, source, data = item
        radius = _extraction_radius(target, region, known, fin.pole_guard)
        pp = principal_part(
            lambda zz: schwarzian_on_array(fin, zz), target, radius, tol=1e-10
        )
        report = classify_point(
            pp, class_tol, location=target, source=source, source_data=data
        )
        if abs(pp.c2 - predicted) > class_tol:
            report = replace(report, flag=True)
        return report

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(examine, targets))
    else:
        reports = [examine(item) for item in targets]
    return sorted(reports, key=lambda r: (r.location.real, r.location.imag))
