"""Numerical toolkit for conformal hyperbolic metrics with cone and cusp
singularities built from partial-fraction data on planar domains.

The pipeline: represent h(z) = sum a_j/(z - z_j) with certified tails,
count and locate its zeros by the argument principle, develop
f = i*lambda + integral(-i*h dz) along explicit branches, classify every
singular point from the Schwarzian principal part, and verify curvature -1,
monodromy translations and cone angles directly.
"""

from .config import DEFAULT_TOLERANCES, GENERATORS, InstanceConfig, build_sum, load_config, parse_config
from .contour import (
    Circle,
    PrincipalPart,
    WindingReport,
    integrate_circle,
    integrate_segment,
    laurent_coeff,
    principal_part,
    rect_winding,
    winding_count,
)
from .developing import (
    DevelopingSample,
    Lambda0Estimate,
    Polyline,
    canonical_path,
    default_base_point,
    estimate_lambda0,
    eval_f,
    extend_path,
    monodromy,
    path_integral,
)
from .errors import (
    BoundaryDegeneracy,
    ConfigError,
    DegenerateDerivative,
    HalfPlaneViolation,
    NonConvergence,
    NonFinite,
    NonHyperbolicExponent,
    NumericalError,
    PathThroughPole,
    PoleProximity,
    SeparationTooSmall,
    TailUnboundable,
    ToolkitError,
    ZeroProximity,
)
from .geometry import Disc, Rect
from .meromorphic import (
    Evaluation,
    MeromorphicSum,
    TailGenerator,
    Truncation,
    TruncationPolicy,
    evaluate,
    evaluate_derivatives,
    make_h0,
    truncate,
)
from .metric import (
    CurvatureReport,
    MetricGrid,
    curvature_check,
    density_u,
    grid_csv,
    grid_pgm,
    measure_cone_angle,
    sample_grid,
    singular_points_in,
)
from .schwarzian import (
    SingularityReport,
    classify_all,
    classify_point,
    indicial_exponents,
    numeric_schwarzian,
    schwarzian_from_h,
)
from .zeros import ZeroRecord, locate_zeros

__version__ = "0.1.0"
