"""Canonical dilations of a hypercontraction into truncated weighted model spaces.

For each order ``k = 0, ..., m`` the map ``j_k`` sends a state vector x to
the function with coefficient blocks ``rho_k(alpha) C T^{*alpha} x``; at
``k = m`` it is an isometry onto a co-invariant subspace (up to truncation
tail), below m it is a contraction.  Matrices are assembled in the weighted
coordinates of the target space, so adjoints are plain conjugate transposes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DEFAULT_TOLERANCES, Tolerances, herm, range_and_complement
from .modelspace import ModelVector, TruncatedModelSpace
from .multiindex import rho
from .optuple import DefectData, OperatorTuple


@dataclass
class DilationMap:
    """The truncated matrix of ``j_k`` together with its accounting data.

    ``matrix_w`` maps state vectors (C^dim) to weighted coordinates of the
    target space; ``truncation_residuals`` records ``1 - |j_k e_s|^2`` per
    standard basis vector, which for a pure tuple at k = m is the mass lost
    to truncation (nonnegative up to roundoff, shrinking as N grows).
    """

    source: OperatorTuple
    defect: DefectData
    order_k: int
    degree: int
    space: TruncatedModelSpace
    matrix_w: np.ndarray
    truncation_residuals: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    def apply(self, x) -> ModelVector:
        return self.space.from_weighted(self.matrix_w @ np.asarray(x, dtype=np.complex128))

    def adjoint_apply(self, f: ModelVector) -> np.ndarray:
        return herm(self.matrix_w) @ self.space.to_weighted(f)

    def gram(self) -> np.ndarray:
        return herm(self.matrix_w) @ self.matrix_w

    def intertwining_residual(self) -> float:
        """Worst interior-row mismatch of ``j T_i* = M_{z_i}* j`` over all axes."""
        interior = self.space.weighted_grade_mask(max(self.space.degree - 1, 0))
        worst = 0.0
        for i in range(self.source.n):
            lhs = self.matrix_w @ herm(self.source.matrices[i])
            rhs = herm(self.space.mz_matrix(i)) @ self.matrix_w
            worst = max(worst, float(np.linalg.norm((lhs - rhs)[interior, :], 2)))
        return worst


def build(
    source: OperatorTuple,
    data: DefectData,
    k: int,
    degree: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> DilationMap:
    """Assemble the order-k dilation matrix truncated at total degree ``degree``.

    The contraction bound ``|j_k| <= 1`` is verified (within the residual
    tolerance) for every k; ``j_0`` reduces to the defect square root mapped
    into defect-space coordinates.
    """
    if not 0 <= k <= data.m:
        raise ValueError(f"dilation order {k} outside 0..{data.m}")
    p = data.defect_basis.shape[1]
    target_degree = degree if k >= 1 else 0
    space = TruncatedModelSpace(source.n, k, p, target_degree, tol=tol)
    blocks = np.zeros((space.dim, source.dim), dtype=np.complex128)
    coeff_map = herm(data.defect_basis) @ data.defect_sqrt
    for pos, alpha in enumerate(space.indices):
        weight = 1 if k == 0 else rho(k, alpha)
        if k == 0 and sum(alpha) > 0:
            continue
        block = np.sqrt(float(weight)) * (coeff_map @ herm(source.monomial(alpha)))
        blocks[pos * p : (pos + 1) * p, :] = block
    operator_norm = np.linalg.norm(blocks, 2) if blocks.size else 0.0
    if operator_norm > 1.0 + tol.residual:
        raise ArithmeticError(
            f"dilation of order {k} has norm {operator_norm:.6f}; tuple is not an m-hypercontraction"
        )
    residuals = 1.0 - np.sum(np.abs(blocks) ** 2, axis=0).real
    return DilationMap(
        source=source,
        defect=data,
        order_k=k,
        degree=degree,
        space=space,
        matrix_w=blocks,
        truncation_residuals=residuals,
        tol=tol,
    )


def model_subspace(j: DilationMap) -> tuple[np.ndarray, dict]:
    """Orthonormal basis of ``(Im j)^perp`` in the truncated space, with a report.

    The report carries the worst norm of a shifted complement vector leaking
    back into Im j, which for exact (nilpotent) data is roundoff and
    otherwise bounded by the truncation tail.
    """
    q, comp = range_and_complement(j.matrix_w, j.tol)
    leak = 0.0
    for i in range(j.source.n):
        shifted = j.space.mz_matrix(i) @ comp
        back = herm(q) @ shifted
        if back.size:
            leak = max(leak, float(np.max(np.sqrt(np.sum(np.abs(back) ** 2, axis=0)))))
    report = {
        "dim_image": int(q.shape[1]),
        "dim_complement": int(comp.shape[1]),
        "max_invariance_leak": leak,
    }
    return comp, report


def defect_identity_check(
    source: OperatorTuple,
    data: DefectData,
    degree: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> list[float]:
    """Residuals ``|Delta^(k) - j_{m-k}* j_{m-k}|`` for k = 0..m at the given truncation."""
    out = []
    for k in range(data.m + 1):
        jk = build(source, data, data.m - k, degree, tol)
        out.append(float(np.linalg.norm(data.deltas[k] - jk.gram(), 2)))
    return out
