"""Transfer-function realizations, their structure identities, and function extraction.

A realization is a block colligation ``[[T*, B], [C, D]]`` with a commuting
state tuple; it evaluates as

    W(z) = D + C sum_{k=1}^m (1 - Z T*)^(-k) Z B.

The coefficient identities tying such a block to an isometric inner function
are verified residual-by-residual; in the reverse direction an exact
(polynomial) inner function is decomposed back into a realization by
reconstructing the compressed shift on the orthocomplement of the shifted
span of its range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DEFAULT_TOLERANCES,
    Tolerances,
    as_complex_matrix,
    herm,
    nullspace_basis,
    range_and_complement,
    range_basis,
)
from .multiindex import MultiIndex, gamma, graded_indices, rho, rho_single
from .optuple import OperatorTuple, defect


class SingularityError(ArithmeticError):
    """Raised when ``1 - Z T*`` is numerically singular at an evaluation point."""

    def __init__(self, message: str, condition: float | None = None):
        super().__init__(message)
        self.condition = condition


class ExtractionError(RuntimeError):
    """Raised when realization extraction hits a rank deficiency; names the step."""

    def __init__(self, step: str, message: str):
        super().__init__(f"{step}: {message}")
        self.step = step


def _norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


@dataclass
class Realization:
    """Colligation data ``(T, B, C, D)`` for an order-m transfer function.

    ``state=None`` encodes the degenerate zero-dimensional state space, in
    which case the function is the constant ``D``.
    """

    m: int
    state: OperatorTuple | None
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self) -> None:
        self.b = as_complex_matrix(self.b)
        self.c = as_complex_matrix(self.c)
        self.d = as_complex_matrix(self.d)
        if self.m < 1:
            raise ValueError(f"realization order must be >= 1, got {self.m}")
        sd = 0 if self.state is None else self.state.dim
        n = 1 if self.state is None else self.state.n
        if self.b.shape != (n * sd, self.d.shape[1]):
            raise ValueError(f"input map shape {self.b.shape} does not fit state dim {sd}")
        if self.c.shape != (self.d.shape[0], sd):
            raise ValueError(f"output map shape {self.c.shape} does not fit state dim {sd}")

    @property
    def n(self) -> int:
        return 1 if self.state is None else self.state.n

    @property
    def state_dim(self) -> int:
        return 0 if self.state is None else self.state.dim

    @property
    def input_dim(self) -> int:
        return self.d.shape[1]

    @property
    def output_dim(self) -> int:
        return self.d.shape[0]

    def block_matrix(self) -> np.ndarray:
        """The block map [[T*, B], [C, D]] from state + input to n-fold state + output."""
        if self.state is None:
            return self.d.copy()
        return np.block([[self.state.adjoint_column, self.b], [self.c, self.d]])


def evaluate(r: Realization, z, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Evaluate the transfer function at a point of the open unit ball.

    Uses m backsolves against ``1 - Z T*``; a condition estimate guards the
    solve and raises :class:`SingularityError` when it blows up.
    """
    zv = np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel()
    if zv.shape != (r.n,):
        raise ValueError(f"evaluation point needs {r.n} coordinates, got {zv.shape}")
    if r.state is None or r.state_dim == 0:
        return r.d.copy()
    a = np.eye(r.state_dim, dtype=np.complex128)
    for i in range(r.n):
        a = a - zv[i] * herm(r.state.matrices[i])
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularityError(f"1 - Z T* has condition {cond:.3e} at z={zv}", condition=cond)
    zb = np.zeros((r.state_dim, r.input_dim), dtype=np.complex128)
    for i in range(r.n):
        zb += zv[i] * r.b[i * r.state_dim : (i + 1) * r.state_dim, :]
    acc = np.zeros_like(zb)
    cur = zb
    for _ in range(r.m):
        cur = np.linalg.solve(a, cur)
        acc += cur
    return r.d + r.c @ acc


@dataclass
class PolyOperatorFunction:
    """Operator Taylor coefficients on the graded-lex grid up to a cutoff degree.

    ``exact`` marks terminating expansions (nilpotent or zero-dimensional
    state), for which the stored coefficients describe the function with no
    tail.
    """

    m: int
    n: int
    degree: int
    coeffs: np.ndarray
    exact: bool
    indices: tuple[MultiIndex, ...] = field(init=False, repr=False)
    position: dict[MultiIndex, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.coeffs = np.array(self.coeffs, dtype=np.complex128)
        self.indices = tuple(graded_indices(self.n, self.degree))
        self.position = {a: i for i, a in enumerate(self.indices)}
        if self.coeffs.ndim != 3 or self.coeffs.shape[0] != len(self.indices):
            raise ValueError(
                f"coefficient array of shape {self.coeffs.shape} does not match "
                f"{len(self.indices)} grid points"
            )

    @property
    def output_dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def input_dim(self) -> int:
        return self.coeffs.shape[2]

    def eval(self, z) -> np.ndarray:
        zv = np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel()
        mono = np.array([np.prod(zv**np.array(a)) for a in self.indices])
        return np.einsum("k,kij->ij", mono, self.coeffs)

    def effective_degree(self, tol: Tolerances = DEFAULT_TOLERANCES) -> int:
        norms = np.array([_norm(c) for c in self.coeffs])
        top = norms.max() if norms.size else 0.0
        if top == 0.0:
            return 0
        grades = np.array([sum(a) for a in self.indices])
        keep = norms > tol.rank_cutoff * top
        return int(grades[keep].max()) if np.any(keep) else 0


def _nilpotency_length(state: OperatorTuple | None, up_to: int) -> int | None:
    if state is None:
        return 0
    x = np.eye(state.dim, dtype=np.complex128)
    for k in range(1, up_to + 1):
        x = sum(ti @ x @ herm(ti) for ti in state.matrices)
        if _norm(x) == 0.0:
            return k
    return None


def taylor(r: Realization, degree: int, tol: Tolerances = DEFAULT_TOLERANCES) -> PolyOperatorFunction:
    """Taylor coefficients of the transfer function up to total degree ``degree``.

    The expansion terminates exactly when the state tuple is nilpotent within
    the requested degree, and the exactness flag is set accordingly.
    """
    indices = graded_indices(r.n, degree)
    coeffs = np.zeros((len(indices), r.output_dim, r.input_dim), dtype=np.complex128)
    coeffs[0] = r.d
    sd = r.state_dim
    if sd > 0:
        for pos, beta in enumerate(indices):
            k = sum(beta)
            if k == 0:
                continue
            radial = float(rho_single(r.m, k))
            block = np.zeros((r.output_dim, r.input_dim), dtype=np.complex128)
            for i, bi in enumerate(beta):
                if bi == 0:
                    continue
                parent = beta[:i] + (bi - 1,) + beta[i + 1 :]
                mono_adj = herm(r.state.monomial(parent))
                b_i = r.b[i * sd : (i + 1) * sd, :]
                block += radial * gamma(parent) * (r.c @ mono_adj @ b_i)
            coeffs[pos] = block
    length = _nilpotency_length(r.state, degree)
    exact = length is not None and length <= degree
    return PolyOperatorFunction(m=r.m, n=r.n, degree=degree, coeffs=coeffs, exact=exact)


@dataclass(frozen=True)
class KiReport:
    """Residuals of the four structure identities of a realization."""

    defect_output: float       # C*C against the m-th defect
    cross: float               # D*C against -B* (+G) T*
    input_gram: float          # D*D + B* (+G) B against the identity
    koszul_surrogate: float    # commutation compatibility of the input-map columns

    @property
    def max_algebraic(self) -> float:
        return max(self.defect_output, self.cross, self.input_gram)


def ki_check(r: Realization, tol: Tolerances = DEFAULT_TOLERANCES) -> KiReport:
    """Residuals of the structure identities (the range condition via its
    finite-dimensional commutation surrogate)."""
    if r.state is None or r.state_dim == 0:
        one = np.eye(r.input_dim)
        return KiReport(
            defect_output=0.0,
            cross=0.0,
            input_gram=_norm(herm(r.d) @ r.d - one),
            koszul_surrogate=0.0,
        )
    state = r.state
    delta_m = defect(state, r.m, tol)
    gram = sum(defect(state, k, tol) for k in range(r.m))
    n, d = state.n, state.dim
    gram_blocks = np.zeros((n * d, n * d), dtype=np.complex128)
    for i in range(n):
        gram_blocks[i * d : (i + 1) * d, i * d : (i + 1) * d] = gram
    ki1 = _norm(herm(r.c) @ r.c - delta_m)
    ki2 = _norm(herm(r.d) @ r.c + herm(r.b) @ gram_blocks @ state.adjoint_column)
    ki3 = _norm(herm(r.d) @ r.d + herm(r.b) @ gram_blocks @ r.b - np.eye(r.input_dim))
    ki4 = 0.0
    for i in range(n):
        for k in range(i + 1, n):
            bi = r.b[i * d : (i + 1) * d, :]
            bk = r.b[k * d : (k + 1) * d, :]
            ki4 = max(ki4, _norm(herm(state.matrices[k]) @ bi - herm(state.matrices[i]) @ bk))
    return KiReport(defect_output=ki1, cross=ki2, input_gram=ki3, koszul_surrogate=ki4)


@dataclass(frozen=True)
class KmInnerReport:
    """Outcome of the coefficient-level inner-function check."""

    verdict: str  # "km_inner" | "not_km_inner" | "inconclusive"
    gram_residual: float
    orthogonality_residual: float
    gram_top_eigenvalue: float


def km_inner_check(
    w: PolyOperatorFunction,
    tol: Tolerances = DEFAULT_TOLERANCES,
    check_tol: float | None = None,
) -> KmInnerReport:
    """Check isometry and shift-orthogonality of the coefficient family.

    On truncated (non-exact) input the verdict can only be "not_km_inner"
    (the partial Gram already exceeds the identity) or "inconclusive" --
    never a false positive.
    """
    threshold = tol.residual if check_tol is None else check_tol
    weights = np.array([float(rho(w.m, a)) for a in w.indices])
    gram = np.zeros((w.input_dim, w.input_dim), dtype=np.complex128)
    for k in range(len(w.indices)):
        gram += herm(w.coeffs[k]) @ w.coeffs[k] / weights[k]
    gram_residual = _norm(gram - np.eye(w.input_dim))
    top = float(np.max(np.linalg.eigvalsh(0.5 * (gram + herm(gram))))) if w.input_dim else 0.0

    orth = 0.0
    for shift in w.indices:
        if sum(shift) == 0:
            continue
        acc = np.zeros((w.input_dim, w.input_dim), dtype=np.complex128)
        for k, beta in enumerate(w.indices):
            shifted = tuple(b + s for b, s in zip(beta, shift))
            pos = w.position.get(shifted)
            if pos is None:
                continue
            acc += herm(w.coeffs[k]) @ w.coeffs[pos] / weights[pos]
        orth = max(orth, _norm(acc))

    if w.exact:
        ok = gram_residual <= threshold and orth <= threshold
        verdict = "km_inner" if ok else "not_km_inner"
    elif top > 1.0 + threshold:
        verdict = "not_km_inner"
    else:
        verdict = "inconclusive"
    return KmInnerReport(
        verdict=verdict,
        gram_residual=gram_residual,
        orthogonality_residual=orth,
        gram_top_eigenvalue=top,
    )


@dataclass
class ExtractResult:
    """Realization recovered from an inner function, with its match report."""

    realization: Realization
    state_dim: int
    reduced_output_dim: int
    u_isometry_residual: float
    column_isometry_residual: float
    match_points: list
    match_errors: list
    max_match_error: float


def _default_grid(n: int, count: int = 20, radius: float = 0.55, seed: int = 7) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v *= rng.uniform(0.1, radius) / max(np.linalg.norm(v), 1e-12)
        pts.append(v)
    return pts


def extract(
    w: PolyOperatorFunction,
    tol: Tolerances = DEFAULT_TOLERANCES,
    grid: list | None = None,
) -> ExtractResult:
    """Recover a realization from an exact inner function.

    Reconstruction: orthonormalize the shifted span of the function's range
    inside the truncated ambient space, compress the shift to the guarded
    orthocomplement, rebuild the canonical inner function of the compression,
    and solve for the isometric input/output identifications.  Rank
    deficiencies raise :class:`ExtractionError` naming the failing step.
    """
    from .modelspace import TruncatedModelSpace
    from .optuple import defect_data
    from .wandering_inner import wt_build

    e_out, e_in = w.output_dim, w.input_dim
    n, m, degree = w.n, w.m, w.degree
    space = TruncatedModelSpace(n, m, e_out, degree, tol=tol)
    deg_w = w.effective_degree(tol)
    cut = degree - deg_w
    if cut < 1:
        raise ExtractionError("shifted span", f"truncation degree {degree} leaves no room above deg W = {deg_w}")

    # step 1: the shifted span of the range, kept as raw columns.  Orthonormalizing
    # first would amplify roundoff along nearly-dependent directions into
    # spurious constraints, so the orthogonality conditions use the columns as is.
    w_cols = np.zeros((space.dim, e_in), dtype=np.complex128)
    for x in range(e_in):
        vec = space.vector(w.coeffs[:, :, x])
        w_cols[:, x] = space.to_weighted(vec)
    shifted_cols = [w_cols]
    for alpha in graded_indices(n, cut):
        if sum(alpha) == 0:
            continue
        block = np.zeros_like(w_cols)
        for x in range(e_in):
            vec = space.monomial_shift(space.vector(w.coeffs[:, :, x]), alpha)
            block[:, x] = space.to_weighted(vec)
        shifted_cols.append(block)
    span_cols = np.hstack(shifted_cols)

    # step 2: the compressed state tuple on the guarded orthocomplement
    mask = space.weighted_grade_mask(cut)
    constraints = herm(span_cols[mask, :])
    h_cut = nullspace_basis(constraints, tol)
    h_basis = np.zeros((space.dim, h_cut.shape[1]), dtype=np.complex128)
    h_basis[mask, :] = h_cut
    h = h_basis.shape[1]
    if h == 0:
        realization = Realization(
            m=m, state=None, b=np.zeros((0, e_in)), c=np.zeros((e_out, 0)), d=w.coeffs[0].copy()
        )
        pts = grid if grid is not None else _default_grid(n)
        errs = [float(_norm(w.eval(z) - realization.d)) for z in pts]
        return ExtractResult(
            realization=realization,
            state_dim=0,
            reduced_output_dim=0,
            u_isometry_residual=0.0,
            column_isometry_residual=float(_norm(herm(w.coeffs[0]) @ w.coeffs[0] - np.eye(e_in))),
            match_points=[np.asarray(z) for z in pts],
            match_errors=errs,
            max_match_error=max(errs) if errs else 0.0,
        )
    state_mats = [herm(h_basis) @ space.mz_matrix(i) @ h_basis for i in range(n)]
    state = OperatorTuple(state_mats, tol)
    # the compression carries the accuracy of the orthogonality cliff above
    # (around 1e-10 at desk scale), so rank decisions downstream of it run
    # at a coarsened cutoff to keep true null directions from being dropped
    tol_inner = tol.replace(rank_cutoff=max(tol.rank_cutoff, 1e-7))

    # step 3: coefficient span of the compressed subspace and its complement
    blocks = h_basis.reshape(len(space.indices), e_out, h)
    coeff_cols = blocks.transpose(1, 0, 2).reshape(e_out, len(space.indices) * h)
    reduced_basis, reduced_rank = range_basis(coeff_cols, tol_inner)
    _, ehat_basis = range_and_complement(coeff_cols, tol_inner)

    # step 4: the unitary identification of the abstract defect space
    data = defect_data(state, m, tol_inner)
    p_t = data.defect_basis.shape[1]
    if p_t != reduced_rank:
        raise ExtractionError(
            "defect identification",
            f"defect space dimension {p_t} differs from coefficient span rank {reduced_rank}",
        )
    e0 = h_basis[: e_out, :]
    # invert the defect sqrt on its range only; a raw pseudo-inverse would
    # amplify the inherited noise along the near-null directions
    c_reduced = herm(data.defect_basis) @ data.defect_sqrt @ data.defect_basis
    u_map = e0 @ data.defect_basis @ np.linalg.inv(c_reduced)
    u_residual = _norm(herm(u_map) @ u_map - np.eye(p_t))
    if u_residual > 1e-6:
        raise ExtractionError("defect identification", f"isometry residual {u_residual:.3e}")

    # step 5: canonical inner function of the compression
    wt = wt_build(state, data, degree, tol_inner)
    r_t = wt.input_dim

    # step 6: isometric input identifications
    u1 = herm(ehat_basis) @ w.coeffs[0]
    v_cols = np.zeros((space.dim, r_t), dtype=np.complex128)
    for jcol in range(r_t):
        vec = wt.apply(np.eye(r_t)[:, jcol])
        mapped = vec.coeffs @ u_map.T  # coefficientwise application of the identification
        v_cols[:, jcol] = space.to_weighted(space.vector(mapped))
    p2 = w_cols.copy()
    p2[: e_out, :] -= ehat_basis @ (herm(ehat_basis) @ w_cols[: e_out, :])
    u2 = herm(v_cols) @ p2
    parametrization_residual = _norm(v_cols @ u2 - p2)
    if parametrization_residual > 1e-6 * max(1.0, _norm(p2)):
        raise ExtractionError(
            "wandering parametrization", f"residual {parametrization_residual:.3e}"
        )
    column_residual = _norm(herm(u1) @ u1 + herm(u2) @ u2 - np.eye(e_in))

    # step 7: assemble and compare pointwise
    b_out = wt.realization.b @ u2
    c_out = u_map @ wt.realization.c
    d_out = ehat_basis @ u1 + u_map @ wt.realization.d @ u2
    realization = Realization(m=m, state=state, b=b_out, c=c_out, d=d_out)
    pts = grid if grid is not None else _default_grid(n)
    errs = [float(_norm(w.eval(z) - evaluate(realization, z, tol))) for z in pts]
    return ExtractResult(
        realization=realization,
        state_dim=h,
        reduced_output_dim=reduced_rank,
        u_isometry_residual=u_residual,
        column_isometry_residual=column_residual,
        match_points=[np.asarray(z) for z in pts],
        match_errors=errs,
        max_match_error=max(errs) if errs else 0.0,
    )


def multiplier_gram_check(
    eval_fn,
    m: int,
    points,
    tol: Tolerances = DEFAULT_TOLERANCES,
    denominator_level: int = 1,
) -> tuple[float, bool]:
    """PSD test of the block kernel ``K_m(z_i, z_j) I - K_1(z_i, z_j) W(z_i) W(z_j)*``.

    ``eval_fn`` maps a point of the ball to the multiplier value; PSD within
    ``psd_slack`` relative to the largest eigenvalue certifies contractivity
    from the level-``denominator_level`` space into the level-m space.
    Returns the smallest eigenvalue and the verdict.
    """
    from .modelspace import kernel_value

    pts = [np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel() for z in points]
    values = [as_complex_matrix(eval_fn(z)) for z in pts]
    p = values[0].shape[0]
    s = len(pts)
    big = np.zeros((s * p, s * p), dtype=np.complex128)
    for i in range(s):
        for jj in range(s):
            km = kernel_value(m, pts[i], pts[jj])
            k1 = kernel_value(denominator_level, pts[i], pts[jj])
            big[i * p : (i + 1) * p, jj * p : (jj + 1) * p] = km * np.eye(p) - k1 * (
                values[i] @ herm(values[jj])
            )
    eigs = np.linalg.eigvalsh(0.5 * (big + herm(big)))
    scale = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    min_eig = float(eigs.min()) if eigs.size else 0.0
    return min_eig, bool(min_eig >= -tol.psd_slack * max(scale, 1e-300))
