"""Partial-fraction meromorphic functions with certified tail control.

A function h(z) = sum_j a_j / (z - z_j) is stored as an explicit tuple of
(residue, pole) terms plus an optional generator for an infinite tail whose
absolute remainder admits a computable upper bound on discs.  Downstream
consumers (winding counts, developed maps, metric densities) work either
with the exact finite sum or with a truncation that carries a sup-norm
error bound; truncation is never silent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .errors import PoleProximity, TailUnboundable
from .geometry import Disc

__all__ = [
    "DEFAULT_EVAL_TOL",
    "Evaluation",
    "DerivativeEvaluation",
    "MeromorphicSum",
    "TailGenerator",
    "Truncation",
    "TruncationPolicy",
    "evaluate",
    "evaluate_derivatives",
    "make_h0",
    "truncate",
]

DEFAULT_EVAL_TOL = 1e-10

# Hard cap on tail indices probed while searching for a valid truncation.
_TRUNCATION_INDEX_CAP = 1 << 21


@dataclass(frozen=True)
class TailGenerator:
    """Produces the terms with index >= ``start`` of an infinite tail.

    ``tail_abs_bound(N, region)`` must bound, over the whole region, the sum
    of |a_j| / |z - z_j| for j > N (hence also the modulus of the omitted
    tail and, after scaling by the modulus gap, of its derivatives).  It has
    to be non-increasing in N and may return ``inf`` when the region reaches
    the pole accumulation set.  ``pole_modulus_lower(j)`` is a non-decreasing
    lower bound for |z_j|, used to pick truncation radii.
    """

    term_at: Callable[[int], tuple[complex, complex]]
    tail_abs_bound: Callable[[int, Disc], float]
    pole_modulus_lower: Callable[[int], float]
    start: int = 1


class Evaluation(NamedTuple):
    value: complex
    bound: float


class DerivativeEvaluation(NamedTuple):
    values: tuple[complex, ...]
    bounds: tuple[float, ...]


@dataclass(frozen=True)
class TruncationPolicy:
    """How to replace a tailed sum by a finite one before evaluating."""

    region: Disc
    tol: float = DEFAULT_EVAL_TOL


@dataclass(frozen=True)
class MeromorphicSum:
    """h(z) = sum of a_j / (z - z_j), finite or infinite with a bounded tail.

    Immutable after construction.  Poles must be pairwise distinct and
    residues nonzero; the minimum pairwise pole distance is recorded as
    ``separation`` and scales the default evaluation guard.
    """

    terms: tuple[tuple[complex, complex], ...]
    tail: TailGenerator | None = None

    def __post_init__(self) -> None:
        terms = tuple((complex(a), complex(p)) for a, p in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms and self.tail is None:
            raise ValueError("need at least one explicit term or a tail")
        residues = np.array([a for a, _ in terms], dtype=complex)
        poles = np.array([p for _, p in terms], dtype=complex)
        if terms:
            if np.any(residues == 0):
                raise ValueError("residues must be nonzero")
        if len(terms) >= 2:
            sep = math.inf
            # Blocked pairwise minimum keeps memory linear for deep truncations.
            for lo in range(0, len(poles), 256):
                block = poles[lo : lo + 256]
                gaps = np.abs(block[:, None] - poles[None, :])
                gaps[np.arange(len(block)), lo + np.arange(len(block))] = np.inf
                sep = min(sep, float(gaps.min()))
            if sep == 0.0:
                raise ValueError("poles must be pairwise distinct")
        else:
            sep = math.inf
        object.__setattr__(self, "_residues", residues)
        object.__setattr__(self, "_poles", poles)
        object.__setattr__(self, "_separation", sep)

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    @property
    def separation(self) -> float:
        """Minimum pairwise distance among explicit poles (inf if < 2)."""
        return self._separation

    @property
    def pole_guard(self) -> float:
        """Default guard radius around retained poles.

        Evaluation inside the guard is an error, never a large number.
        """
        sep = self._separation
        return 1e-8 * (sep if math.isfinite(sep) else 1.0)

    @property
    def poles(self) -> np.ndarray:
        return self._poles

    @property
    def residues(self) -> np.ndarray:
        return self._residues

    def nearest_pole_distance(self, z) -> float | np.ndarray:
        """Distance from z (scalar or array) to the nearest explicit pole."""
        zs = np.asarray(z, dtype=complex)
        if self._poles.size == 0:
            d = np.full(zs.shape, np.inf)
        else:
            d = np.abs(zs[..., None] - self._poles).min(axis=-1)
        return float(d) if np.isscalar(z) or zs.shape == () else d


@dataclass(frozen=True)
class Truncation:
    """Finite replacement of a sum, valid on one region.

    ``bound`` is a guaranteed sup-norm bound for the omitted tail on the
    region; ``gap`` is the distance from the region's largest modulus to the
    modulus lower bound of the first omitted pole (inf for finite sums).
    """

    sum: MeromorphicSum
    bound: float
    gap: float


def _term_values(h: MeromorphicSum, z, order: int = 0) -> list[np.ndarray]:
    """Raw partial-fraction values [h, h', h''][: order + 1] at z (no guards).

    z may be a scalar or an ndarray; broadcasting happens over the terms.
    """
    zs = np.asarray(z, dtype=complex)
    res = h._residues
    if res.size == 0:
        zero = np.zeros(zs.shape, dtype=complex)
        return [zero.copy() for _ in range(order + 1)]
    diff = zs[..., None] - h._poles
    quot = res / diff
    out = [quot.sum(axis=-1)]
    if order >= 1:
        quot = quot / diff
        out.append(-quot.sum(axis=-1))
    if order >= 2:
        quot = quot / diff
        out.append(2.0 * quot.sum(axis=-1))
    return out


def truncate(h: MeromorphicSum, region: Disc, tol: float) -> Truncation:
    """Replace h by a finite sum within tol of it in sup norm on the region.

    All poles inside the region are retained.  The last retained index is
    the smallest one satisfying the bound, so retention is reproducible.
    Results are memoized: deep truncations are expensive to rebuild.

    Raises
    ------
    TailUnboundable
        If the region reaches the tail-pole accumulation set, or the bound
        never drops below tol within the index cap.
    """
    if h.tail is None:
        return Truncation(h, 0.0, math.inf)
    return _truncate_tailed(h, region, tol)


@lru_cache(maxsize=64)
def _truncate_tailed(h: MeromorphicSum, region: Disc, tol: float) -> Truncation:
    tail = h.tail
    base = tail.start - 1

    def feasible(n: int) -> bool:
        if tail.pole_modulus_lower(n + 1) <= region.sup_modulus:
            return False
        return tail.tail_abs_bound(n, region) <= tol

    probe = base
    while not feasible(probe):
        probe = probe * 2 + 8
        if probe > _TRUNCATION_INDEX_CAP:
            raise TailUnboundable(
                f"no certified truncation of tolerance {tol:g} on |z - "
                f"{region.center}| <= {region.radius:g}"
            )
    lo, hi = base, probe
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid + 1
    last = hi
    extra = tuple(tail.term_at(j) for j in range(tail.start, last + 1))
    finite = MeromorphicSum(h.terms + extra)
    bound = float(tail.tail_abs_bound(last, region))
    gap = float(tail.pole_modulus_lower(last + 1) - region.sup_modulus)
    return Truncation(finite, bound, gap)


def _retained(h: MeromorphicSum, z: complex, truncation: TruncationPolicy | None) -> Truncation:
    if h.tail is None:
        return Truncation(h, 0.0, math.inf)
    policy = truncation or TruncationPolicy(Disc(z, 0.0))
    if not policy.region.contains(z, slack=1e-12 * (1.0 + abs(z))):
        raise ValueError("evaluation point lies outside the truncation region")
    return truncate(h, policy.region, policy.tol)


def _guard_check(fin: MeromorphicSum, z: complex) -> None:
    d = fin.nearest_pole_distance(z)
    if d < fin.pole_guard:
        raise PoleProximity(f"z = {z} is within {d:.3e} of a retained pole")


def evaluate(
    h: MeromorphicSum, z: complex, truncation: TruncationPolicy | None = None
) -> Evaluation:
    """Value of h at z together with a bound on the omitted tail."""
    tr = _retained(h, z, truncation)
    _guard_check(tr.sum, z)
    (v,) = _term_values(tr.sum, complex(z))
    return Evaluation(complex(v), tr.bound)


def evaluate_derivatives(
    h: MeromorphicSum,
    z: complex,
    order: int = 2,
    truncation: TruncationPolicy | None = None,
) -> DerivativeEvaluation:
    """(h, h', h'') at z, analytically exact per retained term.

    Tail bounds for the derivatives scale the sup bound by 1/gap and
    2/gap**2, where gap is the distance from |z| to the first omitted pole
    modulus.
    """
    if not 0 <= order <= 2:
        raise ValueError("order must be 0, 1 or 2")
    tr = _retained(h, z, truncation)
    _guard_check(tr.sum, z)
    vals = _term_values(tr.sum, complex(z), order=order)
    if h.tail is None:
        bounds = (0.0,) * (order + 1)
    else:
        # tr.gap undercuts |z - z_j| for every omitted pole, so scaling the
        # sup bound by powers of 1/gap stays certified pointwise.
        b0 = tr.bound
        bounds = (b0, b0 / tr.gap, 2.0 * b0 / tr.gap**2)[: order + 1]
    return DerivativeEvaluation(tuple(complex(v) for v in vals), tuple(bounds))


# ---------------------------------------------------------------------------
# Built-in infinite family: positive residues decaying like j^-4, real poles
# marching monotonically toward the accumulation point 1.
# ---------------------------------------------------------------------------

def _h0_residue(j: int) -> float:
    return 1.0 / (2.0 * j**3 * (2 * j + 1))


def _h0_pole_modulus(j: int) -> float:
    return 0.0 if j == 1 else 1.0 - 1.0 / (2 * j - 1)


def _h0_term(j: int) -> tuple[complex, complex]:
    return complex(_h0_residue(j)), complex(_h0_pole_modulus(j))


def _h0_tail_abs_bound(n: int, region: Disc, block: int = 64) -> float:
    """Upper bound for sup over the region of sum_{j>n} a_j / |z - z_j|.

    Partial sum of explicit terms plus a certified remainder using
    a_j <= 1/(2 j^3) and |z_j| - r non-decreasing in j.
    """
    r = region.sup_modulus
    if _h0_pole_modulus(n + 1) <= r:
        return math.inf
    m = n + block
    js = np.arange(n + 1, m + 1, dtype=float)
    partial = float(
        np.sum(1.0 / (2.0 * js**3 * (2.0 * js + 1.0)) / ((1.0 - 1.0 / (2.0 * js - 1.0)) - r))
    )
    remainder = 1.0 / (4.0 * m**2 * (_h0_pole_modulus(m + 1) - r))
    return partial + remainder


def make_h0(tail_start: int = 7) -> MeromorphicSum:
    """The built-in infinite instance with poles accumulating at 1.

    Residues a_j = 1/(2 j^3 (2j+1)) and poles z_j = 1 - 1/(2j-1); terms with
    index below ``tail_start`` are explicit, the rest live in the generated
    tail.  ``tail_start=1`` yields the fully generated sum.
    """
    if tail_start < 1:
        raise ValueError("tail_start must be >= 1")
    terms = tuple(_h0_term(j) for j in range(1, tail_start))
    tail = TailGenerator(
        term_at=_h0_term,
        tail_abs_bound=_h0_tail_abs_bound,
        pole_modulus_lower=_h0_pole_modulus,
        start=tail_start,
    )
    return MeromorphicSum(terms, tail)
