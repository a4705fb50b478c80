"""Numerical operator-model toolkit for commuting tuples of complex matrices.

Computes higher-order defect operators, dilations into truncated weighted
shift model spaces on the unit ball, wandering subspaces, canonical inner
functions via transfer-function realizations, and characteristic functions,
with every structural identity exposed as a checkable numerical residual.
"""

from .charfn import (
    CharacteristicData,
    PhiVariant,
    PureContractivityReport,
    ThetaFunction,
    char_data,
    partial_isometry_check,
    phi_agreement_residual,
    phi_eval,
    phi_variant,
    purely_contractive_check,
    theta_eval,
)
from .dilation import DilationMap, build as build_dilation, defect_identity_check, model_subspace
from .linalg import (
    DEFAULT_TOLERANCES,
    NotPositiveSemidefiniteError,
    Tolerances,
    metric_congruence,
    nullspace_basis,
    principal_angles,
    psd_sqrt,
    range_and_complement,
    range_basis,
)
from .modelspace import GuardBandError, ModelVector, TruncatedModelSpace, kernel_value
from .multiindex import MultiIndex, WeightTable, gamma, graded_indices, rho, rho_single
from .optuple import (
    ClassificationReport,
    DefectData,
    NonCommutingError,
    OperatorTuple,
    classify,
    defect,
    defect_data,
    fix1,
    fix2,
    fix3,
    random_hypercontraction,
    sigma_apply,
)
from .realization import (
    ExtractionError,
    ExtractResult,
    KiReport,
    KmInnerReport,
    PolyOperatorFunction,
    Realization,
    SingularityError,
    evaluate,
    extract,
    ki_check,
    km_inner_check,
    multiplier_gram_check,
    taylor,
)
from .wandering_inner import (
    KmInnerFunction,
    MembershipResult,
    TildeStructures,
    block_unitary_residual,
    membership_test,
    norm_formula_check,
    tilde_structures,
    wandering_match,
    wt_build,
)

__version__ = "0.1.0"

__all__ = [
    "CharacteristicData",
    "ClassificationReport",
    "DEFAULT_TOLERANCES",
    "DefectData",
    "DilationMap",
    "ExtractResult",
    "ExtractionError",
    "GuardBandError",
    "KiReport",
    "KmInnerFunction",
    "KmInnerReport",
    "MembershipResult",
    "ModelVector",
    "MultiIndex",
    "NonCommutingError",
    "NotPositiveSemidefiniteError",
    "OperatorTuple",
    "PhiVariant",
    "PolyOperatorFunction",
    "PureContractivityReport",
    "Realization",
    "SingularityError",
    "ThetaFunction",
    "TildeStructures",
    "Tolerances",
    "TruncatedModelSpace",
    "WeightTable",
    "block_unitary_residual",
    "build_dilation",
    "char_data",
    "classify",
    "defect",
    "defect_data",
    "defect_identity_check",
    "evaluate",
    "extract",
    "fix1",
    "fix2",
    "fix3",
    "gamma",
    "graded_indices",
    "kernel_value",
    "ki_check",
    "km_inner_check",
    "membership_test",
    "metric_congruence",
    "model_subspace",
    "multiplier_gram_check",
    "norm_formula_check",
    "nullspace_basis",
    "partial_isometry_check",
    "phi_agreement_residual",
    "phi_eval",
    "phi_variant",
    "principal_angles",
    "psd_sqrt",
    "purely_contractive_check",
    "random_hypercontraction",
    "range_and_complement",
    "range_basis",
    "rho",
    "rho_single",
    "sigma_apply",
    "taylor",
    "theta_eval",
    "tilde_structures",
    "wandering_match",
    "wt_build",
]
