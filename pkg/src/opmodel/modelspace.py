"""Degree-truncated weighted coefficient model of the ball spaces H_l(B, C^p).

A vector is a family of coefficient blocks ``f_alpha`` in C^p over all
multi-indices with ``|alpha| <= N``, with squared norm
``sum |f_alpha|^2 / rho_l(alpha)``.  The shift tuple ``M_z`` drops outflow at
degree ``N + 1`` and reports the dropped mass; identity checks are meant to
run on the interior guard band (degrees up to ``N - guard``) where the
truncation is invisible.

Weighted coordinates ``v_alpha = f_alpha / sqrt(rho_l(alpha))`` turn the
space into a standard l2 space, so orthonormal bases and adjoints reduce to
plain numpy linear algebra; all subspace work below uses them.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import DEFAULT_TOLERANCES, Tolerances, herm, range_and_complement, range_basis
from .multiindex import MultiIndex, gamma, graded_indices, rho


class GuardBandError(ValueError):
    """Raised when an operation needs interior support but the vector has none."""


def kernel_value(level: int, z, w) -> complex:
    """The scalar reproducing kernel ``(1 - <z, w>)^(-level)`` on the open ball."""
    zv = np.asarray(z, dtype=np.complex128).ravel()
    wv = np.asarray(w, dtype=np.complex128).ravel()
    if zv.shape != wv.shape:
        raise ValueError("kernel arguments must have the same length")
    if np.linalg.norm(zv) >= 1.0 or np.linalg.norm(wv) >= 1.0:
        raise ValueError("kernel arguments must lie strictly inside the unit ball")
    pairing = np.sum(zv * wv.conj())
    return complex((1.0 - pairing) ** (-level))


class ModelVector:
    """A vector of a :class:`TruncatedModelSpace`, stored as coefficient blocks."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: "TruncatedModelSpace", coeffs):
        arr = np.array(coeffs, dtype=np.complex128)
        if arr.shape != (len(space.indices), space.coeff_dim):
            raise ValueError(
                f"coefficient array of shape {arr.shape} does not match space layout "
                f"({len(space.indices)}, {space.coeff_dim})"
            )
        arr.setflags(write=False)
        self.space = space
        self.coeffs = arr

    def block(self, alpha: MultiIndex) -> np.ndarray:
        return self.coeffs[self.space.position[tuple(alpha)]]

    def __add__(self, other: "ModelVector") -> "ModelVector":
        if other.space is not self.space:
            raise ValueError("vectors belong to different spaces")
        return ModelVector(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "ModelVector") -> "ModelVector":
        if other.space is not self.space:
            raise ValueError("vectors belong to different spaces")
        return ModelVector(self.space, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "ModelVector":
        return ModelVector(self.space, self.coeffs * scalar)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"ModelVector(level={self.space.level}, degree={self.space.degree}, p={self.space.coeff_dim})"


class TruncatedModelSpace:
    """H_level(B, C^p) truncated at total degree N, in graded-lex coefficient order."""

    def __init__(
        self,
        n: int,
        level: int,
        coeff_dim: int,
        degree: int,
        guard: int | None = None,
        tol: Tolerances = DEFAULT_TOLERANCES,
    ):
        if level < 0:
            raise ValueError(f"space level must be nonnegative, got {level}")
        if level == 0 and degree != 0:
            raise ValueError("a level-0 space holds constants only; use degree=0")
        if coeff_dim < 0:
            raise ValueError("coefficient dimension must be nonnegative")
        self.n = n
        self.level = level
        self.coeff_dim = coeff_dim
        self.degree = degree
        self.guard = level if guard is None else guard
        self.tol = tol
        self.indices: tuple[MultiIndex, ...] = tuple(graded_indices(n, degree))
        self.position: dict[MultiIndex, int] = {a: i for i, a in enumerate(self.indices)}
        if level == 0:
            rho_exact = [1]
        else:
            rho_exact = [rho(level, a) for a in self.indices]
        self.rho_values = tuple(rho_exact)
        self._rho = np.array([float(v) for v in rho_exact])
        self._sqrt_rho = np.sqrt(self._rho)
        self._grades = np.array([sum(a) for a in self.indices])
        self._mz_cache: dict[int, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return len(self.indices) * self.coeff_dim

    # ---------------------------------------------------------------- vectors

    def vector(self, coeffs) -> ModelVector:
        return ModelVector(self, coeffs)

    def zeros(self) -> ModelVector:
        return ModelVector(self, np.zeros((len(self.indices), self.coeff_dim)))

    def unit(self, alpha: MultiIndex, component: int = 0) -> ModelVector:
        """The monomial ``z^alpha e_component`` (unnormalized coefficient 1)."""
        c = np.zeros((len(self.indices), self.coeff_dim), dtype=np.complex128)
        c[self.position[tuple(alpha)], component] = 1.0
        return ModelVector(self, c)

    def inner(self, f: ModelVector, h: ModelVector) -> complex:
        """Weighted pairing ``sum <f_a, h_a> / rho(a)``, linear in the first slot."""
        return complex(np.sum((h.coeffs.conj() * f.coeffs).sum(axis=1) / self._rho))

    def norm(self, f: ModelVector) -> float:
        return float(np.sqrt(max(np.sum((np.abs(f.coeffs) ** 2).sum(axis=1) / self._rho), 0.0)))

    def to_weighted(self, f: ModelVector) -> np.ndarray:
        """Flatten to standard-l2 coordinates (one block per index, graded-lex)."""
        return (f.coeffs / self._sqrt_rho[:, None]).ravel()

    def from_weighted(self, v) -> ModelVector:
        arr = np.asarray(v, dtype=np.complex128).reshape(len(self.indices), self.coeff_dim)
        return ModelVector(self, arr * self._sqrt_rho[:, None])

    def weighted_grade_mask(self, max_degree: int) -> np.ndarray:
        """Boolean mask of weighted coordinates supported on degrees <= max_degree."""
        return np.repeat(self._grades <= max_degree, self.coeff_dim)

    def check_guard(self, f: ModelVector, max_degree: int | None = None) -> None:
        """Raise :class:`GuardBandError` if f has mass beyond the guard band."""
        limit = self.degree - self.guard if max_degree is None else max_degree
        outside = self._grades > limit
        if not np.any(outside):
            return
        mass = float(np.linalg.norm(f.coeffs[outside]))
        if mass > 1e-13 * max(1.0, float(np.linalg.norm(f.coeffs))):
            raise GuardBandError(
                f"vector has support of mass {mass:.3e} above degree {limit}"
            )

    # ------------------------------------------------------------- operators

    def mz_apply(self, i: int, f: ModelVector) -> tuple[ModelVector, float]:
        """Shift by the i-th coordinate.  Returns the result and the dropped mass.

        The dropped mass is the squared norm the outflow at degree N + 1
        would have carried.
        """
        self._check_axis(i)
        out = np.zeros_like(f.coeffs)
        for pos, alpha in enumerate(self.indices):
            if sum(alpha) >= self.degree:
                continue
            beta = alpha[:i] + (alpha[i] + 1,) + alpha[i + 1 :]
            out[self.position[beta]] = f.coeffs[pos]
        dropped = 0.0
        if self.level >= 1:
            for pos, alpha in enumerate(self.indices):
                if sum(alpha) == self.degree:
                    beta = alpha[:i] + (alpha[i] + 1,) + alpha[i + 1 :]
                    dropped += float(np.sum(np.abs(f.coeffs[pos]) ** 2)) / float(rho(self.level, beta))
        else:
            dropped = float(np.sum(np.abs(f.coeffs[self._grades == self.degree]) ** 2))
        return ModelVector(self, out), dropped

    def mz_adjoint_apply(self, i: int, f: ModelVector) -> ModelVector:
        """Adjoint of the truncated shift: ``(M* f)_a = (a_i + 1) / (l + |a|) f_{a+e_i}``."""
        self._check_axis(i)
        out = np.zeros_like(f.coeffs)
        if self.level == 0:
            return ModelVector(self, out)
        for pos, alpha in enumerate(self.indices):
            if sum(alpha) >= self.degree:
                continue
            beta = alpha[:i] + (alpha[i] + 1,) + alpha[i + 1 :]
            out[pos] = (alpha[i] + 1) / (self.level + sum(alpha)) * f.coeffs[self.position[beta]]
        return ModelVector(self, out)

    def delta_apply(self, f: ModelVector) -> ModelVector:
        """Scale the degree-k part by ``(level + k - 1) / k`` for k >= 1."""
        if self.level < 1:
            raise ValueError("the diagonal operator needs a space of level >= 1")
        factors = np.ones(len(self.indices))
        nonzero = self._grades >= 1
        factors[nonzero] = (self.level + self._grades[nonzero] - 1) / self._grades[nonzero]
        return ModelVector(self, f.coeffs * factors[:, None])

    def project_constants(self, f: ModelVector) -> ModelVector:
        """Projection onto constants, via the shift formula cross-checked coefficientwise.

        The alternating-sum formula built from ``M_z^a M_z^{*a}`` must agree
        with keeping the degree-0 block; the direct projection is returned.
        """
        self.check_guard(f)
        m = self.level
        total = np.array(f.coeffs)
        for alpha in graded_indices(self.n, m):
            j = sum(alpha)
            if j == 0:
                continue
            coeff = (-1) ** (j - 1) * math.comb(m, j) * gamma(alpha)
            g = f
            for i, a in enumerate(alpha):
                for _ in range(a):
                    g = self.mz_adjoint_apply(i, g)
            for i, a in enumerate(alpha):
                for _ in range(a):
                    g, _dropped = self.mz_apply(i, g)
            total -= coeff * g.coeffs
        formula = ModelVector(self, total)
        direct = np.zeros_like(f.coeffs)
        direct[0] = f.coeffs[0]
        direct_v = ModelVector(self, direct)
        gap = self.norm(formula - direct_v)
        if gap > self.tol.residual * max(1.0, self.norm(f)):
            raise ArithmeticError(f"constants-projection formula residual {gap:.3e}")
        return direct_v

    def monomial_shift(self, f: ModelVector, alpha: MultiIndex) -> ModelVector:
        """``z^alpha f`` with truncation (dropped mass discarded)."""
        g = f
        for i, a in enumerate(alpha):
            for _ in range(a):
                g, _ = self.mz_apply(i, g)
        return g

    # ------------------------------------------------------------ evaluation

    def kernel_eval(self, z, w) -> complex:
        return kernel_value(self.level, z, w)

    def eval_at(self, f: ModelVector, z) -> np.ndarray:
        """Truncated Taylor sum ``sum f_alpha z^alpha``."""
        zv = np.asarray(z, dtype=np.complex128).ravel()
        if zv.shape != (self.n,):
            raise ValueError(f"evaluation point must have {self.n} coordinates")
        mono = np.array([np.prod(zv**np.array(a)) for a in self.indices])
        return mono @ f.coeffs

    def kernel_section(self, w, x) -> ModelVector:
        """The truncated kernel section: coefficients ``rho(a) conj(w)^a x``."""
        wv = np.asarray(w, dtype=np.complex128).ravel()
        if np.linalg.norm(wv) >= 1.0:
            raise ValueError("kernel sections exist for points strictly inside the ball")
        xv = np.asarray(x, dtype=np.complex128).ravel()
        mono = np.array([np.prod(wv.conj() ** np.array(a)) for a in self.indices])
        return ModelVector(self, (self._rho * mono)[:, None] * xv[None, :])

    # -------------------------------------------------------- subspace work

    def mz_matrix(self, i: int) -> np.ndarray:
        """The truncated shift in weighted coordinates (adjoint = conj transpose)."""
        self._check_axis(i)
        cached = self._mz_cache.get(i)
        if cached is not None:
            return cached
        dim = self.dim
        p = self.coeff_dim
        mat = np.zeros((dim, dim), dtype=np.complex128)
        if self.level >= 1:
            for pos, alpha in enumerate(self.indices):
                if sum(alpha) >= self.degree:
                    continue
                beta = alpha[:i] + (alpha[i] + 1,) + alpha[i + 1 :]
                tgt = self.position[beta]
                factor = np.sqrt(self._rho[pos] / self._rho[tgt])
                rows = slice(tgt * p, (tgt + 1) * p)
                cols = slice(pos * p, (pos + 1) * p)
                mat[rows, cols] = factor * np.eye(p)
        mat.setflags(write=False)
        self._mz_cache[i] = mat
        return mat

    def wandering_of(self, basis, strict_guard: bool = False) -> np.ndarray:
        """Orthonormal basis of ``M - sum_i M_{z_i} M`` for a subspace M.

        ``basis`` holds weighted-coordinate columns spanning M (orthonormalized
        here if needed).  With ``strict_guard`` the columns must stay below the
        top degree so that shifts suffer no truncation.
        """
        b = np.asarray(basis, dtype=np.complex128)
        if b.ndim != 2 or b.shape[0] != self.dim:
            raise ValueError(f"basis must be ({self.dim} x k), got {b.shape}")
        if strict_guard and b.shape[1]:
            top = ~self.weighted_grade_mask(self.degree - 1)
            mass = float(np.linalg.norm(b[top, :]))
            if mass > 1e-13 * max(1.0, float(np.linalg.norm(b))):
                raise GuardBandError("subspace has top-degree support; shifts would truncate")
        q, rank = range_basis(b, self.tol)
        if rank == 0:
            return q
        shifted = np.hstack([self.mz_matrix(i) @ q for i in range(self.n)])
        coords = herm(q) @ shifted
        _, comp = range_and_complement(coords, self.tol)
        return q @ comp

    def _check_axis(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise ValueError(f"axis {i} out of range for n={self.n}")
