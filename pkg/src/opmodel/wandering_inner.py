"""Renormed-space machinery, the compatible defect subspace, and the canonical inner function.

The state space is renormed by the metric ``G = sum_{k<m} Delta^(k)`` (which
dominates the identity); in the renormed space the scaled row ``T~ = T G``
is a contraction with defect ``D~ = (1 - T~* T~)^(1/2)``.  The input space
of the canonical inner function is the subspace of the defect space whose
vectors satisfy the first-order commutation (Koszul) compatibility after
mapping back to plain coordinates.  Every renormed-metric computation routes
through the congruence by ``G^(1/2)`` so that adjoints and PSD square roots
are the standard ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dilation import DilationMap, build, model_subspace
from .linalg import (
    DEFAULT_TOLERANCES,
    Tolerances,
    herm,
    metric_congruence,
    nullspace_basis,
    principal_angles,
    psd_sqrt,
    range_basis,
)
from .modelspace import ModelVector, TruncatedModelSpace
from .multiindex import gamma, graded_indices
from .optuple import DefectData, OperatorTuple
from .realization import PolyOperatorFunction, Realization, evaluate, taylor


@dataclass
class TildeStructures:
    """Renormed-space data for an m-hypercontraction.

    metric, metric_sqrt, metric_isqrt   G and its congruence factors
    scaled_row          the row [T_1 G ... T_n G] (a contraction out of the renormed space)
    tilde_defect        (1 - T~* T~)^(1/2) in plain coordinates (selfadjoint in the G-metric)
    tilde_defect_basis  basis of its range, orthonormal in the renormed product
    compatible_basis    basis of the commutation-compatible subspace, same product
    """

    source: OperatorTuple
    data: DefectData
    metric: np.ndarray
    metric_sqrt: np.ndarray
    metric_isqrt: np.ndarray
    scaled_row: np.ndarray
    tilde_defect: np.ndarray
    tilde_defect_hat: np.ndarray = field(repr=False)
    tilde_defect_basis: np.ndarray = field(repr=False)
    compatible_basis: np.ndarray = field(repr=False)

    def renormed_inner(self, x, y) -> complex:
        """The product ``<(+G)x, y>`` on stacked n-tuples of state vectors."""
        n, d = self.source.n, self.source.dim
        xv = np.asarray(x, dtype=np.complex128).reshape(n, d)
        yv = np.asarray(y, dtype=np.complex128).reshape(n, d)
        return complex(sum(np.vdot(yv[i], self.metric @ xv[i]) for i in range(n)))


def _block_diag(mat: np.ndarray, copies: int) -> np.ndarray:
    d = mat.shape[0]
    out = np.zeros((copies * d, copies * d), dtype=np.complex128)
    for i in range(copies):
        out[i * d : (i + 1) * d, i * d : (i + 1) * d] = mat
    return out


def koszul_constraint_matrix(source: OperatorTuple) -> np.ndarray:
    """Stacked first-order commutation constraints ``T_k* x_i - T_i* x_k`` (i < k)."""
    n, d = source.n, source.dim
    rows = n * (n - 1) // 2
    out = np.zeros((rows * d, n * d), dtype=np.complex128)
    r = 0
    for i in range(n):
        for k in range(i + 1, n):
            out[r * d : (r + 1) * d, i * d : (i + 1) * d] = herm(source.matrices[k])
            out[r * d : (r + 1) * d, k * d : (k + 1) * d] = -herm(source.matrices[i])
            r += 1
    return out


def tilde_structures(
    source: OperatorTuple,
    data: DefectData,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> TildeStructures:
    """Build the renormed-space structures for a pure m-hypercontraction.

    The compatible subspace is computed from the finite-dimensional
    commutation condition on the defect image, which is truncation-free; for
    n = 1 the condition is vacuous and the subspace is the whole defect space.
    """
    n, d = source.n, source.dim
    g_sqrt, g_isqrt = metric_congruence(data.gram, tol)
    scaled_row = np.hstack([ti @ data.gram for ti in source.matrices])
    # T~* T~ on the renormed n-fold sum, plain coordinates: blocks T_i* T_k G
    ttt = np.zeros((n * d, n * d), dtype=np.complex128)
    for i in range(n):
        for k in range(n):
            ttt[i * d : (i + 1) * d, k * d : (k + 1) * d] = (
                herm(source.matrices[i]) @ source.matrices[k] @ data.gram
            )
    a_plain = np.eye(n * d, dtype=np.complex128) - ttt
    gs = _block_diag(g_sqrt, n)
    gi = _block_diag(g_isqrt, n)
    a_hat = gs @ a_plain @ gi
    d_hat = psd_sqrt(a_hat, tol)
    tilde_defect = gi @ d_hat @ gs
    # rank decision on the squared operator, not its sqrt (noise inflation)
    q_hat, _ = range_basis(0.5 * (a_hat + herm(a_hat)), tol)
    defect_basis = gi @ q_hat
    constraints = koszul_constraint_matrix(source)
    if constraints.shape[0] == 0:
        coeffs = np.eye(defect_basis.shape[1], dtype=np.complex128)
    else:
        coeffs = nullspace_basis(constraints @ tilde_defect @ defect_basis, tol)
    compatible = defect_basis @ coeffs
    return TildeStructures(
        source=source,
        data=data,
        metric=data.gram,
        metric_sqrt=g_sqrt,
        metric_isqrt=g_isqrt,
        scaled_row=scaled_row,
        tilde_defect=tilde_defect,
        tilde_defect_hat=d_hat,
        tilde_defect_basis=defect_basis,
        compatible_basis=compatible,
    )


def block_unitary_residual(ts: TildeStructures) -> float:
    """Deviation from unitarity of the 2x2 block [[T~, D~*], [D~, -T~*]].

    Assembled in orthonormal coordinates of the renormed sum, the plain state
    space, the defect space of the adjoint (= the m-th order defect space)
    and the renormed defect space.
    """
    source, data = ts.source, ts.data
    n, d = source.n, source.dim
    gs = _block_diag(ts.metric_sqrt, n)
    q_hat = gs @ ts.tilde_defect_basis  # hat coordinates of the renormed defect basis
    top_left = ts.scaled_row @ _block_diag(ts.metric_isqrt, n)
    top_right = data.defect_sqrt @ data.defect_basis
    bottom_left = herm(q_hat) @ ts.tilde_defect_hat
    bottom_right = -herm(q_hat) @ gs @ source.adjoint_column @ data.defect_basis
    mat = np.block([[top_left, top_right], [bottom_left, bottom_right]])
    rows = mat.shape[0]
    return float(np.linalg.norm(herm(mat) @ mat - np.eye(mat.shape[1]), 2)) + float(
        np.linalg.norm(mat @ herm(mat) - np.eye(rows), 2)
    )


@dataclass
class KmInnerFunction:
    """The canonical inner function of a pure m-hypercontraction.

    Wraps the transfer-function realization (state = original tuple, input
    space = compatible defect subspace in renormed coordinates, output space
    = m-th order defect space) together with its Taylor expansion on the
    truncated grid.
    """

    structures: TildeStructures
    realization: Realization
    taylor: PolyOperatorFunction
    space: TruncatedModelSpace
    output_basis: np.ndarray = field(repr=False)
    input_basis: np.ndarray = field(repr=False)

    @property
    def input_dim(self) -> int:
        return self.input_basis.shape[1]

    def apply(self, x) -> ModelVector:
        """The function ``W x`` as a vector of the truncated target space."""
        xv = np.asarray(x, dtype=np.complex128).ravel()
        coeffs = np.einsum("kij,j->ki", self.taylor.coeffs, xv)
        return self.space.vector(coeffs)

    def eval(self, z) -> np.ndarray:
        return evaluate(self.realization, z, tol=self.space.tol)


def wt_build(
    source: OperatorTuple,
    data: DefectData,
    degree: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
    ts: TildeStructures | None = None,
) -> KmInnerFunction:
    """Assemble the canonical inner function with Taylor coefficients up to ``degree``."""
    if ts is None:
        ts = tilde_structures(source, data, tol)
    b = ts.tilde_defect @ ts.compatible_basis
    c = herm(data.defect_basis) @ data.defect_sqrt
    d_mat = -herm(data.defect_basis) @ (ts.scaled_row @ ts.compatible_basis)
    realization = Realization(m=data.m, state=source, b=b, c=c, d=d_mat)
    poly = taylor(realization, degree, tol)
    space = TruncatedModelSpace(source.n, data.m, c.shape[0], degree, tol=tol)
    return KmInnerFunction(
        structures=ts,
        realization=realization,
        taylor=poly,
        space=space,
        output_basis=data.defect_basis,
        input_basis=ts.compatible_basis,
    )


@dataclass(frozen=True)
class MembershipResult:
    """Verdict and witness of the wandering-subspace membership test."""

    is_member: bool
    f0: np.ndarray
    witnesses: tuple[np.ndarray, ...]
    shift_residual: float
    zero_residual: float


def membership_test(
    f: ModelVector,
    j: DilationMap,
    tol: Tolerances = DEFAULT_TOLERANCES,
    enforce_guard: bool = True,
) -> MembershipResult:
    """Decide membership of f in the wandering subspace of ``(Im j)^perp``.

    Extracts the candidate witnesses ``x_i = j* M_{z_i}* f``, then checks
    that ``j x_i`` reproduces ``M_{z_i}* f`` and that the zero condition
    ``C f_0 + sum_i T_i G x_i = 0`` holds.  With ``enforce_guard`` the input
    must live in the interior band; relaxing it trades the hard guarantee
    for a truncation-tail error absorbed by the tolerance.
    """
    space = j.space
    if enforce_guard:
        space.check_guard(f)
    source, data = j.source, j.defect
    witnesses = []
    shift_residual = 0.0
    for i in range(source.n):
        mf = space.mz_adjoint_apply(i, f)
        x = j.adjoint_apply(mf)
        witnesses.append(x)
        shift_residual = max(shift_residual, space.norm(j.apply(x) - mf))
    f0_ambient = data.defect_basis @ f.coeffs[0]
    zero_vec = data.defect_sqrt @ f0_ambient
    for i in range(source.n):
        zero_vec = zero_vec + source.matrices[i] @ (data.gram @ witnesses[i])
    zero_residual = float(np.linalg.norm(zero_vec))
    scale = max(1.0, space.norm(f))
    ok = shift_residual <= tol.residual * scale and zero_residual <= tol.residual * scale
    return MembershipResult(
        is_member=bool(ok),
        f0=f0_ambient,
        witnesses=tuple(witnesses),
        shift_residual=shift_residual,
        zero_residual=zero_residual,
    )


def norm_formula_check(
    f: ModelVector,
    result: MembershipResult,
    j: DilationMap,
    y=None,
) -> tuple[float, float | None]:
    """Residuals of the norm formulas for a wandering-subspace member.

    First value: the alternating-sum formula in terms of the witness data.
    Second (when the renormed-coordinates preimage ``y`` is supplied): the
    renormed-norm identity ``|f|^2 = |y|^2``.
    """
    source, data, space = j.source, j.defect, j.space
    m = data.m
    lhs = space.norm(f) ** 2
    total = float(np.linalg.norm(result.f0) ** 2)
    for alpha in graded_indices(source.n, m - 1):
        jj = sum(alpha)
        coeff = (-1) ** jj * math.comb(m, jj + 1) * gamma(alpha)
        mono_adj = herm(source.monomial(alpha))
        total += coeff * sum(float(np.linalg.norm(mono_adj @ x) ** 2) for x in result.witnesses)
    first = abs(lhs - total)
    second = None
    if y is not None:
        yv = np.asarray(y, dtype=np.complex128).ravel()
        second = abs(lhs - float(np.linalg.norm(yv) ** 2))
    return first, second


def wandering_match(
    source: OperatorTuple,
    data: DefectData,
    degree: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
    ts: TildeStructures | None = None,
    wt: KmInnerFunction | None = None,
) -> dict:
    """Principal angles between the computed wandering subspace and the span of ``W x``.

    Exact (roundoff-level) for nilpotent tuples once the truncation covers
    the nilpotency length; otherwise the angles carry the truncation tail
    and shrink as the degree grows.
    """
    if wt is None:
        wt = wt_build(source, data, degree, tol, ts=ts)
    j = build(source, data, data.m, degree, tol)
    complement, invariance = model_subspace(j)
    wandering = j.space.wandering_of(complement)
    columns = [j.space.to_weighted(wt.apply(e)) for e in np.eye(wt.input_dim)]
    if columns:
        span, _ = range_basis(np.column_stack(columns), tol)
    else:
        span = np.zeros((j.space.dim, 0), dtype=np.complex128)
    angles = principal_angles(wandering, span) if wandering.shape[1] and span.shape[1] else np.zeros(0)
    return {
        "angles": angles,
        "dim_wandering": int(wandering.shape[1]),
        "dim_span": int(span.shape[1]),
        "max_angle": float(np.max(angles)) if angles.size else 0.0,
        "invariance": invariance,
        "wandering_basis": wandering,
        "span_basis": span,
    }
