"""Characteristic functions of pure m-hypercontractions.

The order-(m-1) dilation ``pi`` satisfies ``|pi x|^2 = |x|^2 - |T* x|^2``, so
it factors through the adjoint defect as ``pi = U D_{T*}`` with a unitary U
onto its closed range.  Splitting the target space as range plus complement
M gives the column unitary ``V = (U, i_M)`` and the two evaluation operators

    Delta_0 = eval_0 . U,        Delta_1(z) = eval_z . V,

from which the characteristic function on the domain D_T + M is

    theta(z) = -Delta_1(z) (T + 1_M) + Delta_0 D_{T*} (1 - Z T*)^(-m) Z (D_T, 0).

The complement M is truncated with the ambient space; the effect is
quantified by the degree trend of the kernel-identity residuals (exact for
nilpotent tuples once the truncation passes the nilpotency length).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dilation import DilationMap, build
from .linalg import (
    DEFAULT_TOLERANCES,
    Tolerances,
    herm,
    range_and_complement,
)
from .modelspace import kernel_value
from .optuple import DefectData, OperatorTuple
from .realization import SingularityError


def _resolvent_power_apply(source: OperatorTuple, z, vectors: np.ndarray, power: int) -> np.ndarray:
    """Apply ``(1 - Z T*)^(-power)`` by repeated backsolves."""
    zv = np.asarray(z, dtype=np.complex128).ravel()
    a = np.eye(source.dim, dtype=np.complex128)
    for i in range(source.n):
        a = a - zv[i] * herm(source.matrices[i])
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularityError(f"1 - Z T* has condition {cond:.3e} at z={zv}", condition=cond)
    out = np.asarray(vectors, dtype=np.complex128)
    for _ in range(power):
        out = np.linalg.solve(a, out)
    return out


def _z_row_apply(source: OperatorTuple, z, stacked: np.ndarray) -> np.ndarray:
    """The row map ``(h_i) -> sum z_i h_i`` on stacked n-tuples of columns."""
    zv = np.asarray(z, dtype=np.complex128).ravel()
    d = source.dim
    out = np.zeros((d, stacked.shape[1]), dtype=np.complex128)
    for i in range(source.n):
        out += zv[i] * stacked[i * d : (i + 1) * d, :]
    return out


@dataclass
class CharacteristicData:
    """Geometric data behind the characteristic function.

    pi             the order-(m-1) dilation
    u_map          the unitary factor of pi through the adjoint defect space,
                   as weighted-coordinate columns of the target space
    m_basis        orthonormal basis of the truncated complement of Im pi
    delta0         degree-0 evaluation of u_map, into defect-space coordinates
    """

    source: OperatorTuple
    defect: DefectData
    degree: int
    pi: DilationMap
    kappa_basis: np.ndarray = field(repr=False)
    u_map: np.ndarray = field(repr=False)
    m_basis: np.ndarray = field(repr=False)
    delta0: np.ndarray = field(repr=False)
    unitarity_residual: float = 0.0
    factor_residual: float = 0.0

    @property
    def m_dim(self) -> int:
        return self.m_basis.shape[1]

    @property
    def domain_dim(self) -> int:
        return self.defect.dt_basis.shape[1] + self.m_dim

    def v_matrix(self) -> np.ndarray:
        return np.hstack([self.u_map, self.m_basis])


def char_data(
    source: OperatorTuple,
    data: DefectData,
    degree: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CharacteristicData:
    """Assemble the characteristic data at ambient truncation ``degree``.

    Verifies that the column (T*, pi) is an isometry and that the factor
    identity ``eval_0 . U . D_{T*} = C`` holds within the residual tolerance
    plus the truncation tail.
    """
    m = data.m
    if degree < 2 * m:
        raise ValueError(f"characteristic data needs degree >= 2m = {2 * m}, got {degree}")
    pi = build(source, data, m - 1, degree, tol)
    kappa, complement = range_and_complement(pi.matrix_w, tol)
    q = data.dtstar_basis.shape[1]
    # pi = U D_{T*}: invert D_{T*} on its range to express U on basis vectors
    d_reduced = herm(data.dtstar_basis) @ data.dtstar @ data.dtstar_basis
    u_map = pi.matrix_w @ data.dtstar_basis @ np.linalg.inv(d_reduced)
    unitarity = float(np.linalg.norm(herm(u_map) @ u_map - np.eye(q), 2))
    p = data.defect_basis.shape[1]
    delta0 = u_map[:p, :]
    factor = float(
        np.linalg.norm(
            delta0 @ herm(data.dtstar_basis) @ data.dtstar
            - herm(data.defect_basis) @ data.defect_sqrt,
            2,
        )
    )
    iso = 0.0
    for col in range(source.dim):
        x = np.eye(source.dim)[:, col]
        iso = max(
            iso,
            abs(
                float(np.linalg.norm(x) ** 2)
                - float(np.linalg.norm(source.adjoint_column @ x) ** 2)
                - float(np.linalg.norm(pi.matrix_w @ x) ** 2)
            ),
        )
    return CharacteristicData(
        source=source,
        defect=data,
        degree=degree,
        pi=pi,
        kappa_basis=kappa,
        u_map=u_map,
        m_basis=complement,
        delta0=delta0,
        unitarity_residual=max(unitarity, iso),
        factor_residual=factor,
    )


@dataclass
class ThetaFunction:
    """The characteristic function, with both evaluation routes cross-checked."""

    data: CharacteristicData
    cross_check: bool = True

    @property
    def domain_dim(self) -> int:
        return self.data.domain_dim

    @property
    def output_dim(self) -> int:
        return self.data.defect.defect_basis.shape[1]

    def _domain_split(self) -> tuple[np.ndarray, int]:
        dt_basis = self.data.defect.dt_basis
        return dt_basis, dt_basis.shape[1]

    def _shifted_block(self) -> np.ndarray:
        """(T + 1_M) from D_T + M coordinates into adjoint-defect + M coordinates."""
        data, defect = self.data, self.data.defect
        t_on_dt = herm(defect.dtstar_basis) @ (self.data.source.row_matrix @ defect.dt_basis)
        top = np.hstack([t_on_dt, np.zeros((t_on_dt.shape[0], data.m_dim))])
        bottom = np.hstack([np.zeros((data.m_dim, t_on_dt.shape[1])), np.eye(data.m_dim)])
        return np.vstack([top, bottom])

    def eval(self, z) -> np.ndarray:
        """theta(z) as a matrix from D_T + M coordinates to defect-space coordinates."""
        data, defect, source = self.data, self.data.defect, self.data.source
        space = data.pi.space
        p = self.output_dim
        q_t = defect.dt_basis.shape[1]

        v_cols = data.v_matrix()
        d_fun = -v_cols @ self._shifted_block()
        zb = _z_row_apply(source, z, defect.dt @ defect.dt_basis)
        resolvent = _resolvent_power_apply(source, z, zb, 1)
        state_part = data.pi.matrix_w @ resolvent
        combined = np.array(d_fun)
        combined[:, :q_t] += state_part
        theta = np.zeros((p, self.domain_dim), dtype=np.complex128)
        for col in range(self.domain_dim):
            theta[:, col] = space.eval_at(space.from_weighted(combined[:, col]), z)

        if self.cross_check:
            direct = -self._delta1(z) @ self._shifted_block()
            resolvent_m = _resolvent_power_apply(source, z, zb, defect.m)
            second = (
                data.delta0
                @ herm(defect.dtstar_basis)
                @ (defect.dtstar @ resolvent_m)
            )
            direct[:, :q_t] += second
            gap = float(np.linalg.norm(theta - direct, 2))
            scale = max(1.0, float(np.linalg.norm(theta, 2)))
            if gap > 1e-6 * scale:
                raise ArithmeticError(f"characteristic evaluation routes disagree by {gap:.3e}")
        return theta

    def _delta1(self, z) -> np.ndarray:
        data = self.data
        space = data.pi.space
        v_cols = data.v_matrix()
        out = np.zeros((self.output_dim, v_cols.shape[1]), dtype=np.complex128)
        for col in range(v_cols.shape[1]):
            out[:, col] = space.eval_at(space.from_weighted(v_cols[:, col]), z)
        return out

    def eval_at_zero(self) -> np.ndarray:
        return self.eval(np.zeros(self.data.source.n))


def theta_eval(theta: ThetaFunction, z) -> np.ndarray:
    return theta.eval(z)


def partial_isometry_check(theta: ThetaFunction, samples) -> float:
    """Worst residual of the kernel identity

        K_1(z,w) <theta(w)* x, theta(z)* y> + <R(w) x, R(z) y> = K_m(z,w) <x, y>

    with ``R(z) = (1 - T Z*)^(-m) C`` over samples ``(z, w, x, y)``; the x, y
    are given in defect-space coordinates.
    """
    data, defect, source = theta.data, theta.data.defect, theta.data.source
    m = defect.m
    worst = 0.0
    for z, w, x, y in samples:
        tz = theta.eval(z)
        tw = theta.eval(w)
        xv = np.asarray(x, dtype=np.complex128).ravel()
        yv = np.asarray(y, dtype=np.complex128).ravel()
        k1 = kernel_value(1, z, w)
        km = kernel_value(m, z, w)
        lhs = k1 * complex(np.vdot(herm(tz) @ yv, herm(tw) @ xv))
        cx = defect.defect_sqrt @ (defect.defect_basis @ xv)
        cy = defect.defect_sqrt @ (defect.defect_basis @ yv)
        rx = _adjoint_resolvent_power(source, w, cx, m)
        ry = _adjoint_resolvent_power(source, z, cy, m)
        lhs += complex(np.vdot(ry, rx))
        rhs = km * complex(np.vdot(yv, xv))
        worst = max(worst, abs(lhs - rhs))
    return worst


def _adjoint_resolvent_power(source: OperatorTuple, z, vector: np.ndarray, power: int) -> np.ndarray:
    """Apply ``(1 - T Z*)^(-power)``, the adjoint-side resolvent."""
    zv = np.asarray(z, dtype=np.complex128).ravel()
    a = np.eye(source.dim, dtype=np.complex128)
    for i in range(source.n):
        a = a - np.conj(zv[i]) * source.matrices[i]
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularityError(f"1 - T Z* has condition {cond:.3e} at z={zv}", condition=cond)
    out = np.asarray(vector, dtype=np.complex128)
    for _ in range(power):
        out = np.linalg.solve(a, out)
    return out


@dataclass
class PhiVariant:
    """Reparametrization of theta through the orthocomplement of the column (T*, pi)."""

    k_basis: np.ndarray
    rho_matrix: np.ndarray
    rho_isometry_residual: float
    rho_range_residual: float
    completeness_residual: float


def phi_variant(theta: ThetaFunction, tol: Tolerances = DEFAULT_TOLERANCES) -> PhiVariant:
    """Build the unitary ``rho(x, f) = (D_T x, -U T x - f)`` onto the complement
    of the first colligation column, and verify its isometry and range."""
    data, defect, source = theta.data, theta.data.defect, theta.data.source
    column = np.vstack([source.adjoint_column, data.pi.matrix_w])
    k_basis_full, k_complement = range_and_complement(column, tol)
    q_t = defect.dt_basis.shape[1]
    top = np.hstack(
        [defect.dt @ defect.dt_basis, np.zeros((source.n * source.dim, data.m_dim))]
    )
    ut = data.u_map @ (herm(defect.dtstar_basis) @ (source.row_matrix @ defect.dt_basis))
    bottom = np.hstack([-ut, -data.m_basis])
    rho = np.vstack([top, bottom])
    iso = float(np.linalg.norm(herm(rho) @ rho - np.eye(rho.shape[1]), 2))
    range_res = float(np.linalg.norm(herm(k_basis_full) @ rho, 2)) if k_basis_full.size else 0.0
    completeness = float(
        np.linalg.norm(
            rho @ herm(rho) + column @ np.linalg.inv(herm(column) @ column) @ herm(column)
            - np.eye(rho.shape[0]),
            2,
        )
    )
    return PhiVariant(
        k_basis=k_complement,
        rho_matrix=rho,
        rho_isometry_residual=iso,
        rho_range_residual=range_res,
        completeness_residual=completeness,
    )


def phi_eval(theta: ThetaFunction, variant: PhiVariant, z) -> np.ndarray:
    """phi(z) on the complement coordinates: point evaluation of the second
    component plus ``C (1 - Z T*)^(-m) Z`` of the first."""
    data, defect, source = theta.data, theta.data.defect, theta.data.source
    space = data.pi.space
    nd = source.n * source.dim
    k = variant.k_basis
    out = np.zeros((theta.output_dim, k.shape[1]), dtype=np.complex128)
    b_part = k[:nd, :]
    d_part = k[nd:, :]
    zb = _z_row_apply(source, z, b_part)
    res = _resolvent_power_apply(source, z, zb, defect.m)
    c_of = herm(data.defect.defect_basis) @ (defect.defect_sqrt @ res)
    for col in range(k.shape[1]):
        out[:, col] = space.eval_at(space.from_weighted(d_part[:, col]), z) + c_of[:, col]
    return out


def phi_agreement_residual(theta: ThetaFunction, variant: PhiVariant, points) -> float:
    """Worst deviation of ``phi(z) . rho`` from ``theta(z)`` over sample points."""
    coords = herm(variant.k_basis) @ variant.rho_matrix
    worst = 0.0
    for z in points:
        gap = float(np.linalg.norm(phi_eval(theta, variant, z) @ coords - theta.eval(z), 2))
        worst = max(worst, gap)
    return worst


@dataclass(frozen=True)
class PureContractivityReport:
    sigma_max: float
    purely_contractive: bool
    near_boundary: bool


def purely_contractive_check(
    theta: ThetaFunction, tol: Tolerances = DEFAULT_TOLERANCES
) -> PureContractivityReport:
    """Largest singular value of theta(0); strictly below one certifies pure
    contractivity at this truncation (near-one values are flagged for refinement)."""
    value = theta.eval_at_zero()
    sigma = float(np.linalg.svd(value, compute_uv=False).max()) if value.size else 0.0
    return PureContractivityReport(
        sigma_max=sigma,
        purely_contractive=bool(sigma <= 1.0 - tol.rank_cutoff),
        near_boundary=bool(sigma > 0.999),
    )
