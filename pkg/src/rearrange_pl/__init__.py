"""Numerical laboratory for rearrangement-sharpened sup-convolution inequalities.

The package discretizes non-negative functions on 1-D and 2-D boxes, rearranges
them onto canonical nested families (scaled convex bodies under Lebesgue
measure, half-lines under Gaussian measure), computes sup-convolutions by two
independent routes, and verifies that the classical integral inequality chains
(Brunn-Minkowski, Prekopa-Leindler, Borell-Brascamp-Lieb, Ehrhard, polar
Prekopa-Leindler, the integrated Gaussian log-Sobolev inequality) tighten on
rearrangement within an explicit grid tolerance model.
"""

from .errors import (
    ConfigError,
    DomainError,
    FileFormatError,
    GridBoundsError,
    GridMismatchError,
    LadderError,
    PreconditionError,
    RearrangeLabError,
)
from .grid import (
    GAUSSIAN,
    LEBESGUE,
    AllValues,
    ExpLinear,
    GaussianBump,
    Grid,
    GridFunction,
    HalfSpaceIndicator,
    IndicatorBody,
    LogConcaveRandom,
    MeasureSpec,
    PhiAffine,
    PiecewiseRandom,
    Quantile,
    SetMask,
    ThresholdLadder,
    distribution_function,
    gauss_density,
    gauss_phi,
    gauss_phi_inv,
    integrate,
    layer_cake,
    make_function,
    read_grid_function,
    read_mask,
    superlevel_set,
    superlevel_set_closed,
    threshold_ladder,
    write_grid_function,
    write_mask,
)
from .convexsets import (
    Ball,
    Box,
    ConvexBody,
    Gauge,
    Polygon,
    ball_mask,
    bmi_check,
    distance_dilation,
    embed_mask,
    gaussian_isoperimetry_check,
    gauge_values,
    minkowski_weighted_sum,
    scaled_body_mask,
    volume,
)
from .rearrange import (
    RearrangedSet,
    RearrangementSpec,
    characterization_check,
    convex_body_rearrangement,
    equimeasurability_report,
    gaussian_halfspace_rearrangement,
    rearrange_function,
    rearrange_function_levels,
    rearrange_set,
    rearrange_simple,
)
from .means import (
    NEG_INF,
    POS_INF,
    Clamp,
    ExtendedReal,
    GeometricMean,
    Identity,
    PhiMean,
    PiecewiseMonotone,
    PolarMinMean,
    Power,
    PowerMean,
    bbl_exponent,
    check_coordinate_increasing,
    evaluate_mean,
    mean_apply,
    psi_apply,
)
from .supconv import (
    ComboMap,
    gaussian_sup_convolve,
    levelset_ladder,
    max_mismatch_with_slack,
    sup_convolve_direct,
    sup_convolve_levelset,
    supconv_superlevel,
)
from .harness import (
    ChainReport,
    ConcavityReport,
    ConvergenceReport,
    DominanceReport,
    SideCheck,
    ToleranceModel,
    bbl_chain,
    concavity_preservation_check,
    convergence_study,
    curved_pli_check,
    ehrhard_functional_chain,
    integrated_lsi_chain,
    minimal_admissible_u,
    phi_inv_concavity_violation,
    pli_chain,
    polar_pli_chain,
    superlevel_dominance_check,
)

__version__ = "0.1.0"
