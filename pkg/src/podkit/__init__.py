"""Weighted proper orthogonal decomposition with certified error identities.

The package computes PODs of snapshot data in inner-product spaces given by
SPD Gram matrices, builds orthogonal and non-orthogonal (Ritz, composite)
projections from the modes, and numerically certifies the exact error
formulas, Hilbert-Schmidt identities, rank relations and per-snapshot and
pointwise error bounds that relate a snapshot set to its image under a
linear map between two such spaces.
"""

from .errors import (
    DimensionMismatch,
    EigenFailure,
    FormNotElliptic,
    IndexOutOfRange,
    InputError,
    MalformedManifest,
    MissingDataFile,
    NegativeQuadraticForm,
    NonMonotoneGrid,
    NotInvertible,
    NotPositiveDefinite,
    NotSymmetric,
    NumericalError,
    PodkitError,
    ProvenanceMismatch,
    RankDeficient,
    RankDeficientImage,
    RankExceeded,
    SingularRitzSystem,
    SolverDiverged,
    WeightNonPositive,
)
from .gram_space import (
    GramSpace,
    adjoint_matrix,
    half_weight,
    half_weight_inv,
    identity_space,
    inner,
    make_space,
    norm,
    orthonormalize,
    solve_gram,
)
from .fem import FemMesh, assemble_fem_1d
from .snapshot_io import (
    SnapshotSet,
    from_trajectory,
    load,
    make_snapshot_set,
    read_matrix_csv,
    resolve_gram_spec,
    save,
    write_matrix_csv,
)
from .pod_engine import (
    DEFAULT_DROP_TOL,
    PodBasis,
    apply_K,
    apply_K_adjoint,
    compute_pod,
    hs_norm_sq,
    load_basis,
    optimality_oracle,
    project_X,
    save_basis,
    spectrum_gapped,
    tail_energy,
)
from .linear_map import (
    LinearMap,
    adjoint,
    apply,
    apply_inverse,
    full_rank_in,
    identity_map,
    induced_snapshots,
    inverse_adjoint,
    is_surjective,
    make_map,
    rank_relation_check,
)
from .projector import (
    Projector,
    apply_projector,
    dense_matrix,
    form_ellipticity,
    mapped_orthogonal_projector,
    op_norm,
    pod_projector,
    pullback_projector,
    pushforward_projector,
    ritz_projector,
)
from .error_lab import (
    ErrorReport,
    build_codomain_projector,
    check_hs_identities,
    check_mapped_pod_error,
    check_pod_error,
    check_pointwise,
    check_projected_error,
    check_pullback_error,
    check_range_residual,
    check_snapshot_bounds,
    read_report,
    snapshot_guarantee_threshold,
    sweep,
    write_report_csv,
    write_report_json,
)
from .fhn_gen import (
    FhnConfig,
    make_embedding_instance,
    make_fhn_L,
    make_fhn_instance,
    make_product_space,
    random_instance,
    solve_fhn,
)

__version__ = "0.1.0"

__all__ = [
    "DimensionMismatch",
    "EigenFailure",
    "FormNotElliptic",
    "IndexOutOfRange",
    "InputError",
    "MalformedManifest",
    "MissingDataFile",
    "NegativeQuadraticForm",
    "NonMonotoneGrid",
    "NotInvertible",
    "NotPositiveDefinite",
    "NotSymmetric",
    "NumericalError",
    "PodkitError",
    "ProvenanceMismatch",
    "RankDeficient",
    "RankDeficientImage",
    "RankExceeded",
    "SingularRitzSystem",
    "SolverDiverged",
    "WeightNonPositive",
    "GramSpace",
    "adjoint_matrix",
    "half_weight",
    "half_weight_inv",
    "identity_space",
    "inner",
    "make_space",
    "norm",
    "orthonormalize",
    "solve_gram",
    "FemMesh",
    "assemble_fem_1d",
    "SnapshotSet",
    "from_trajectory",
    "load",
    "make_snapshot_set",
    "read_matrix_csv",
    "resolve_gram_spec",
    "save",
    "write_matrix_csv",
    "DEFAULT_DROP_TOL",
    "PodBasis",
    "apply_K",
    "apply_K_adjoint",
    "compute_pod",
    "hs_norm_sq",
    "load_basis",
    "optimality_oracle",
    "project_X",
    "save_basis",
    "spectrum_gapped",
    "tail_energy",
    "LinearMap",
    "adjoint",
    "apply",
    "apply_inverse",
    "full_rank_in",
    "identity_map",
    "induced_snapshots",
    "inverse_adjoint",
    "is_surjective",
    "make_map",
    "rank_relation_check",
    "Projector",
    "apply_projector",
    "dense_matrix",
    "form_ellipticity",
    "mapped_orthogonal_projector",
    "op_norm",
    "pod_projector",
    "pullback_projector",
    "pushforward_projector",
    "ritz_projector",
    "ErrorReport",
    "build_codomain_projector",
    "check_hs_identities",
    "check_mapped_pod_error",
    "check_pod_error",
    "check_pointwise",
    "check_projected_error",
    "check_pullback_error",
    "check_range_residual",
    "check_snapshot_bounds",
    "read_report",
    "snapshot_guarantee_threshold",
    "sweep",
    "write_report_csv",
    "write_report_json",
    "FhnConfig",
    "make_embedding_instance",
    "make_fhn_L",
    "make_fhn_instance",
    "make_product_space",
    "random_instance",
    "solve_fhn",
    "__version__",
]
