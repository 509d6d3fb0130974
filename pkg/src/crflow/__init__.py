"""Combinatorial Ricci flow on decorated hyperbolic tetrahedra."""

from .errors import (
    CRFlowError,
    DomainError,
    NotRealizableError,
    NumericError,
    SingularityError,
    UnsupportedConfigurationError,
    ValidationError,
)
from .flow import (
    FlowConfig,
    FlowNumericError,
    FlowResult,
    FlowState,
    FlowStatus,
    convergence_report,
    flow_step,
    run_flow,
)
from .special import lobachevsky, lobachevsky_derivative
from .tetra import (
    DegenerationClass,
    classify_degeneration,
    clamp_truncated_edges,
    covolume,
    covolume_hessian,
    dihedral_angles_extended,
    dihedral_angles_strict,
    is_realizable,
    phi,
    tet_volume,
    theta_chain,
)
from .triangulation import (
    GluingSpec,
    TriangulatedComplex,
    apply_decoration,
    build_complex,
    curvature,
    decoration_residual,
    edge_valences,
    extended_curvature,
    figure_eight_spec,
    h_value,
    load_gluing,
    vertex_length_sums,
)

__all__ = [
    "CRFlowError", "DomainError", "NotRealizableError", "NumericError", "SingularityError",
    "UnsupportedConfigurationError", "ValidationError",
    "FlowConfig", "FlowNumericError", "FlowResult", "FlowState", "FlowStatus",
    "convergence_report", "flow_step", "run_flow",
    "lobachevsky", "lobachevsky_derivative",
    "DegenerationClass", "classify_degeneration", "clamp_truncated_edges", "covolume",
    "covolume_hessian", "dihedral_angles_extended", "dihedral_angles_strict", "is_realizable",
    "phi", "tet_volume", "theta_chain",
    "GluingSpec", "TriangulatedComplex", "apply_decoration", "build_complex", "curvature",
    "decoration_residual", "edge_valences", "extended_curvature", "figure_eight_spec",
    "h_value", "load_gluing", "vertex_length_sums",
]
