"""lipkit: Lipschitz constants on metric spaces and the weighted composition
operators that preserve them."""

from .affine import AffineMap as AffineMap, orth_defect as orth_defect
from .dilation import (
    AffineRecovery as AffineRecovery,
    Classification as Classification,
    DilationReport as DilationReport,
    classify_1d as classify_1d,
    cube_operator as cube_operator,
    dilation_check as dilation_check,
    enumerate_cube_symmetries as enumerate_cube_symmetries,
    interval_canonical as interval_canonical,
    iter_cube_symmetries as iter_cube_symmetries,
    recover_affine as recover_affine,
)
from .errors import (
    DomainError as DomainError,
    EstimatorError as EstimatorError,
    ExprError as ExprError,
    GradientUnavailable as GradientUnavailable,
    InapplicableError as InapplicableError,
    IsolatedPointError as IsolatedPointError,
    LipkitError as LipkitError,
    SamplingError as SamplingError,
)
from .expr import parse_expr as parse_expr, to_text as to_text
from .flatman import (
    Atlas as Atlas,
    Chart as Chart,
    ManifoldMap as ManifoldMap,
    chart_at as chart_at,
    chart_independence_check as chart_independence_check,
    circle_atlas as circle_atlas,
    fixture_map as fixture_map,
    local_isometry_check as local_isometry_check,
    pt_lip_on_manifold as pt_lip_on_manifold,
    sheared_atlas as sheared_atlas,
    torus_atlas as torus_atlas,
    transition_orthogonality_check as transition_orthogonality_check,
)
from .funcs import (
    ScalarFunc as ScalarFunc,
    builtin_corpus as builtin_corpus,
    compose as compose,
    cone_function as cone_function,
    constant as constant,
    coordinate as coordinate,
    from_descriptor as from_descriptor,
    from_expr as from_expr,
    gradient as gradient,
    probe_corpus as probe_corpus,
    product01 as product01,
    tent as tent,
    witness_function as witness_function,
)
from .lipest import (
    EstimatorConfig as EstimatorConfig,
    LipEstimate as LipEstimate,
    global_lip as global_lip,
    local_lip as local_lip,
    local_lip_via_gradient as local_lip_via_gradient,
    pointwise_lip as pointwise_lip,
)
from .metric import (
    MetricSpace as MetricSpace,
    box as box,
    circle as circle,
    distance as distance,
    euclidean as euclidean,
    finite_set as finite_set,
    interval as interval,
    open_ball as open_ball,
    sample_ball as sample_ball,
    sample_points as sample_points,
    sphere as sphere,
    torus as torus,
    unit_cube as unit_cube,
)
from .wco import (
    BlackBoxOperator as BlackBoxOperator,
    PointMap as PointMap,
    PreservationReport as PreservationReport,
    WCOperator as WCOperator,
    apply as apply,
    dilation_violation_witness as dilation_violation_witness,
    identity_operator as identity_operator,
    preservation_check as preservation_check,
    shift_preserver as shift_preserver,
    wco as wco,
    wco_consistency_check as wco_consistency_check,
)

__version__ = "0.1.0"
