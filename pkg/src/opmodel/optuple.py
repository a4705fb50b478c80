"""Commuting operator tuples, defect operators and classification.

The central objects are a commuting tuple ``T = (T_1, ..., T_n)`` of square
complex matrices, the completely positive map

    sigma_T(X) = sum_i T_i X T_i*,

and its iterated defects ``Delta^(k) = (1 - sigma_T)^k (1)``.  A tuple is an
m-hypercontraction when the first and m-th defects are PSD; it is
(numerically) pure when ``sigma_T^K(1)`` decays below the purity threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_TOLERANCES,
    Tolerances,
    as_complex_matrix,
    herm,
    psd_sqrt,
    range_basis,
)
from .multiindex import MultiIndex, gamma, graded_indices


class NonCommutingError(ValueError):
    """Raised when the matrices of a tuple fail to commute within tolerance."""


class OperatorTuple:
    """A commuting tuple of n complex dim x dim matrices.

    Immutable after construction; the constructor records the worst pairwise
    commutator norm and rejects tuples exceeding the residual tolerance.
    """

    def __init__(self, matrices, tol: Tolerances = DEFAULT_TOLERANCES):
        mats = tuple(as_complex_matrix(m) for m in matrices)
        if not mats:
            raise ValueError("an operator tuple needs at least one matrix")
        dim = mats[0].shape[0]
        for m in mats:
            if m.shape != (dim, dim):
                raise ValueError(f"all matrices must be square of equal size, got {m.shape}")
        residual = 0.0
        scale = max(1.0, max(np.linalg.norm(m, 2) for m in mats) ** 2)
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                residual = max(residual, np.linalg.norm(mats[i] @ mats[j] - mats[j] @ mats[i], 2))
        if residual > tol.residual * scale:
            raise NonCommutingError(
                f"commutator residual {residual:.3e} exceeds {tol.residual * scale:.3e}"
            )
        for m in mats:
            m.setflags(write=False)
        self.matrices = mats
        self.commutator_residual = float(residual)
        self._monomials: dict[MultiIndex, np.ndarray] = {}

    @property
    def n(self) -> int:
        return len(self.matrices)

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def row_matrix(self) -> np.ndarray:
        """The row operator H^n -> H as a dim x (n*dim) matrix [T_1 ... T_n]."""
        return np.hstack(self.matrices)

    @property
    def adjoint_column(self) -> np.ndarray:
        """The column operator H -> H^n stacking the adjoints T_i*."""
        return np.vstack([herm(m) for m in self.matrices])

    def monomial(self, alpha: MultiIndex) -> np.ndarray:
        """The commuting product ``T^alpha``; results are cached."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n:
            raise ValueError(f"multi-index length {len(alpha)} does not match n={self.n}")
        cached = self._monomials.get(alpha)
        if cached is not None:
            return cached
        if sum(alpha) == 0:
            result = np.eye(self.dim, dtype=np.complex128)
        else:
            i = next(k for k, a in enumerate(alpha) if a > 0)
            parent = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1 :]
            result = self.matrices[i] @ self.monomial(parent)
        result.setflags(write=False)
        self._monomials[alpha] = result
        return result

    def __repr__(self) -> str:
        return f"OperatorTuple(n={self.n}, dim={self.dim})"


def sigma_apply(t: OperatorTuple, x) -> np.ndarray:
    """The completely positive map ``X -> sum_i T_i X T_i*``."""
    m = as_complex_matrix(x)
    if m.shape != (t.dim, t.dim):
        raise ValueError(f"operand shape {m.shape} does not match tuple dimension {t.dim}")
    out = np.zeros_like(m)
    for ti in t.matrices:
        out += ti @ m @ herm(ti)
    return out


def _defect_by_iteration(t: OperatorTuple, k: int) -> np.ndarray:
    x = np.eye(t.dim, dtype=np.complex128)
    for _ in range(k):
        x = x - sigma_apply(t, x)
    return x


def _defect_by_sum(t: OperatorTuple, k: int) -> np.ndarray:
    out = np.zeros((t.dim, t.dim), dtype=np.complex128)
    for alpha in graded_indices(t.n, k):
        j = sum(alpha)
        coeff = (-1) ** j * math.comb(k, j) * gamma(alpha)
        mono = t.monomial(alpha)
        out += coeff * (mono @ herm(mono))
    return out


def defect(t: OperatorTuple, k: int, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """The k-th order defect ``(1 - sigma_T)^k(1)``.

    Computed both by iterating ``1 - sigma_T`` and by the alternating
    multinomial sum; the two routes must agree within the residual tolerance
    and the iterate is returned.
    """
    if k < 0:
        raise ValueError(f"defect order must be nonnegative, got {k}")
    it = _defect_by_iteration(t, k)
    sm = _defect_by_sum(t, k)
    gap = np.linalg.norm(it - sm, 2)
    if gap > tol.residual * max(1.0, np.linalg.norm(it, 2)):
        raise ArithmeticError(f"defect routes disagree by {gap:.3e} at order {k}")
    return it


@dataclass(frozen=True)
class ClassificationReport:
    """Outcome of :func:`classify` for a tuple at a given order m."""

    m: int
    min_eigenvalues: tuple[float, ...]
    psd_ok: tuple[bool, ...]
    is_hypercontraction: bool
    chain_ok: bool
    pure: bool
    pure_at: int | None
    nilpotent: bool
    nilpotency_length: int | None
    decay: tuple[float, ...]

    @property
    def order_disagreement(self) -> tuple[int, ...]:
        """Intermediate orders that fail PSD although orders 1 and m pass."""
        if not self.is_hypercontraction:
            return ()
        return tuple(k for k, ok in enumerate(self.psd_ok) if not ok)


def classify(
    t: OperatorTuple,
    m: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
    max_power: int = 200,
) -> ClassificationReport:
    """PSD verdicts for all defects up to order m, plus a purity certificate.

    The hypercontraction verdict follows the defining convention (orders 1
    and m PSD); positivity of every intermediate order is also checked and
    any disagreement is surfaced rather than assumed away.  Purity is
    certified numerically: either some power ``sigma_T^K(1)`` vanishes
    exactly (nilpotent tuples) or its norm drops below ``purity_decay``
    within ``max_power`` steps.
    """
    if m < 1:
        raise ValueError(f"hypercontraction order must be >= 1, got {m}")
    min_eigs = []
    psd_ok = []
    for k in range(m + 1):
        d = defect(t, k, tol)
        w = np.linalg.eigvalsh(0.5 * (d + herm(d)))
        scale = float(np.max(np.abs(w))) if w.size else 0.0
        min_eigs.append(float(w.min()))
        psd_ok.append(bool(w.min() >= -tol.psd_slack * max(scale, 1e-300)))
    is_hyper = psd_ok[1] and psd_ok[m]
    chain_ok = all(psd_ok)

    decay = []
    pure_at = None
    nilpotent = False
    nilpotency_length = None
    x = np.eye(t.dim, dtype=np.complex128)
    for k in range(1, max_power + 1):
        x = sigma_apply(t, x)
        nrm = float(np.linalg.norm(x, 2))
        decay.append(nrm)
        if nrm == 0.0:
            nilpotent = True
            nilpotency_length = k
            pure_at = k
            break
        if nrm <= tol.purity_decay:
            pure_at = k
            break
    return ClassificationReport(
        m=m,
        min_eigenvalues=tuple(min_eigs),
        psd_ok=tuple(psd_ok),
        is_hypercontraction=is_hyper,
        chain_ok=chain_ok,
        pure=pure_at is not None,
        pure_at=pure_at,
        nilpotent=nilpotent,
        nilpotency_length=nilpotency_length,
        decay=tuple(decay),
    )


@dataclass(frozen=True)
class DefectData:
    """Derived defect data of an m-hypercontraction.

    deltas        Delta^(0) .. Delta^(m)
    defect_sqrt   C = (Delta^(m))^(1/2)
    defect_basis  orthonormal basis of the defect space closure(C H)
    dt, dtstar    first-order defects (1 - T*T)^(1/2) on H^n and (1 - TT*)^(1/2) on H
    dt_basis, dtstar_basis   orthonormal bases of their ranges
    gram          G = sum_{k<m} Delta^(k); satisfies G >= I
    """

    m: int
    deltas: tuple[np.ndarray, ...]
    defect_sqrt: np.ndarray
    defect_basis: np.ndarray
    dt: np.ndarray
    dt_basis: np.ndarray
    dtstar: np.ndarray
    dtstar_basis: np.ndarray
    gram: np.ndarray


def defect_data(t: OperatorTuple, m: int, tol: Tolerances = DEFAULT_TOLERANCES) -> DefectData:
    """Populate all defect data; PSD failures propagate from :func:`psd_sqrt`."""
    deltas = tuple(defect(t, k, tol) for k in range(m + 1))
    c = psd_sqrt(deltas[m], tol)
    # rank decisions happen on the squared operators: taking them on the
    # square roots would promote sqrt-of-roundoff noise above the cutoff
    d_basis, _ = range_basis(deltas[m], tol)
    eye_n = np.eye(t.n * t.dim, dtype=np.complex128)
    first_defect_sq = eye_n - t.adjoint_column @ t.row_matrix
    dt = psd_sqrt(first_defect_sq, tol)
    dt_basis, _ = range_basis(first_defect_sq, tol)
    dtstar = psd_sqrt(deltas[1], tol)
    dtstar_basis, _ = range_basis(deltas[1], tol)
    gram = sum(deltas[:m], start=np.zeros((t.dim, t.dim), dtype=np.complex128))
    return DefectData(
        m=m,
        deltas=deltas,
        defect_sqrt=c,
        defect_basis=d_basis,
        dt=dt,
        dt_basis=dt_basis,
        dtstar=dtstar,
        dtstar_basis=dtstar_basis,
        gram=gram,
    )


def fix1() -> OperatorTuple:
    """Reference fixture: the zero operator on C (n=1, m=1)."""
    return OperatorTuple([np.zeros((1, 1))])


def fix2() -> OperatorTuple:
    """Reference fixture: the nilpotent Jordan cell [[0, 1/2], [0, 0]] (n=1, m=2)."""
    return OperatorTuple([np.array([[0.0, 0.5], [0.0, 0.0]])])


def fix3() -> OperatorTuple:
    """Reference fixture: the pair (1/2, 1/2) on C (n=2, m=1)."""
    return OperatorTuple([np.array([[0.5]]), np.array([[0.5]])])


def _default_scale(m: int) -> float:
    # keeps all defect orders PSD by a crude geometric bound
    return min(0.85, 0.9 * math.sqrt(2.0 ** (1.0 / m) - 1.0))


def random_hypercontraction(
    rng: np.random.Generator,
    n: int,
    dim: int,
    m: int,
    nilpotent: bool = False,
    scale: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
    max_tries: int = 60,
) -> OperatorTuple:
    """Sample a commuting tuple accepted by :func:`classify` at order m.

    Nilpotent tuples are polynomials without constant term in one random
    strictly upper-triangular matrix; general tuples are simultaneously
    diagonalizable via a mild random similarity.  Rows are scaled to norm
    ``scale`` and candidates failing any PSD check are rejected.
    """
    s = _default_scale(m) if scale is None else scale
    if nilpotent and dim == 1:
        return OperatorTuple([np.zeros((1, 1))] * n, tol)
    for _ in range(max_tries):
        if nilpotent:
            j = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            j = np.triu(j, k=1)
            powers = [np.linalg.matrix_power(j, k) for k in range(1, dim)]
            mats = []
            for _ in range(n):
                coeff = rng.standard_normal(len(powers)) + 1j * rng.standard_normal(len(powers))
                mats.append(sum(c * p for c, p in zip(coeff, powers)))
        else:
            sim = np.eye(dim) + 0.35 * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(dim)
            sim_inv = np.linalg.inv(sim)
            mats = []
            for _ in range(n):
                diag = rng.uniform(0.2, 1.0, dim) * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, dim))
                mats.append(sim @ np.diag(diag) @ sim_inv)
        row = np.hstack(mats)
        nrm = np.linalg.norm(row, 2)
        if nrm == 0.0:
            continue
        mats = [mat * (s / nrm) for mat in mats]
        try:
            t = OperatorTuple(mats, tol)
        except NonCommutingError:
            continue
        report = classify(t, m, tol)
        if report.is_hypercontraction and report.chain_ok and report.pure:
            if nilpotent and not report.nilpotent:
                continue
            return t
    raise RuntimeError(f"failed to sample an order-{m} hypercontraction after {max_tries} tries")
