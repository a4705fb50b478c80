"""Dense complex linear-algebra kernel: PSD square roots, orthonormal bases, metric congruence.

Everything is eigendecomposition/SVD based; at desk scale (dimensions in the
hundreds) structural exactness matters more than speed.  All functions are
pure, operate on copies, and never mutate their arguments.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    """Named numerical thresholds used uniformly across the package.

    psd_slack    eigenvalue slack for positivity checks, relative to the
                 largest eigenvalue magnitude of the matrix at hand
    residual     acceptance threshold for operator-identity residuals
    rank_cutoff  singular values below ``rank_cutoff * sigma_max`` count as zero
    purity_decay norm threshold under which the power sequence counts as decayed
    """

    psd_slack: float = 1e-10
    residual: float = 1e-8
    rank_cutoff: float = 1e-10
    purity_decay: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("psd_slack", "residual", "rank_cutoff", "purity_decay"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"tolerance {name} must be strictly positive")

    def replace(self, **overrides) -> "Tolerances":
        return dataclasses.replace(self, **overrides)


DEFAULT_TOLERANCES = Tolerances()


class NotPositiveSemidefiniteError(ValueError):
    """Raised when a matrix fails a positivity requirement.

    Carries the offending eigenvalue when one is known.
    """

    def __init__(self, message: str, eigenvalue: float | None = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


def as_complex_matrix(a) -> np.ndarray:
    """Validate and convert to a fresh complex128 2-d array with finite entries."""
    m = np.array(a, dtype=np.complex128, order="C")
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {m.shape}")
    if m.size and not np.all(np.isfinite(m.view(np.float64))):
        raise ValueError("matrix has non-finite entries")
    return m


def herm(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def psd_sqrt(a, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues in ``[-psd_slack * |lambda|_max, 0)`` are clipped to zero;
    anything below that raises :class:`NotPositiveSemidefiniteError` carrying
    the offending eigenvalue.
    """
    m = as_complex_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"square matrix required, got shape {m.shape}")
    scale = max(np.linalg.norm(m, 2), 1e-300) if m.size else 0.0
    if np.linalg.norm(m - herm(m), 2) > tol.residual * max(1.0, scale):
        raise NotPositiveSemidefiniteError("matrix is not Hermitian within the residual tolerance")
    w, v = np.linalg.eigh(0.5 * (m + herm(m)))
    lam_scale = float(np.max(np.abs(w))) if w.size else 0.0
    floor = -tol.psd_slack * lam_scale
    if w.size and float(w.min()) < floor:
        raise NotPositiveSemidefiniteError(
            f"eigenvalue {w.min():.3e} below PSD slack {floor:.3e}", eigenvalue=float(w.min())
        )
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ herm(v)


def range_basis(a, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[np.ndarray, int]:
    """Orthonormal basis of the column span, with the numerical rank.

    Rank counts singular values above ``rank_cutoff * sigma_max``.  An empty
    input yields a rank-0 basis, not an error.
    """
    m = as_complex_matrix(a)
    if m.shape[1] == 0:
        return m.copy(), 0
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    rank = int(np.sum(s > tol.rank_cutoff * s[0])) if s.size and s[0] > 0 else 0
    return u[:, :rank], rank


def range_and_complement(a, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the column span and of its orthogonal complement."""
    m = as_complex_matrix(a)
    if m.shape[1] == 0:
        return m.copy(), np.eye(m.shape[0], dtype=np.complex128)
    u, s, _ = np.linalg.svd(m, full_matrices=True)
    rank = int(np.sum(s > tol.rank_cutoff * s[0])) if s.size and s[0] > 0 else 0
    return u[:, :rank], u[:, rank:]


def nullspace_basis(a, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Orthonormal basis of the kernel, from right singular vectors."""
    m = as_complex_matrix(a)
    cols = m.shape[1]
    if cols == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if m.shape[0] == 0:
        return np.eye(cols, dtype=np.complex128)
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    rank = int(np.sum(s > tol.rank_cutoff * s[0])) if s.size and s[0] > 0 else 0
    return herm(vh)[:, rank:]


def metric_congruence(g, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[np.ndarray, np.ndarray]:
    """Square root and inverse square root of a Hermitian metric ``G >= I``.

    Raises when the smallest eigenvalue drops below ``1 - 1e-6``, which
    signals a broken hypercontraction upstream: the metrics handled here are
    sums of defect operators whose zeroth term is the identity.
    """
    m = as_complex_matrix(g)
    scale = max(1.0, np.linalg.norm(m, 2))
    if np.linalg.norm(m - herm(m), 2) > tol.residual * scale:
        raise NotPositiveSemidefiniteError("metric is not Hermitian within the residual tolerance")
    w, v = np.linalg.eigh(0.5 * (m + herm(m)))
    if float(w.min()) < 1.0 - 1e-6:
        raise NotPositiveSemidefiniteError(
            f"metric eigenvalue {w.min():.6e} below 1; expected G >= I", eigenvalue=float(w.min())
        )
    w = np.clip(w, 1e-12, None)
    root = (v * np.sqrt(w)) @ herm(v)
    iroot = (v / np.sqrt(w)) @ herm(v)
    return root, iroot


def principal_angles(u, v) -> np.ndarray:
    """Principal angles (radians, ascending) between two orthonormal column spans.

    Cosines come from the SVD of the overlap; for well-aligned directions the
    angle is recovered from the projection residual instead, which stays
    accurate down to roundoff where arccos saturates near zero.
    """
    a = as_complex_matrix(u)
    b = as_complex_matrix(v)
    if a.shape[0] != b.shape[0]:
        raise ValueError("subspace bases live in different ambient dimensions")
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros(0)
    overlap = herm(a) @ b
    cosines = np.linalg.svd(overlap, compute_uv=False)
    sines = np.linalg.svd(b - a @ overlap, compute_uv=False)[::-1]
    k = min(len(cosines), len(sines))
    return np.arctan2(np.clip(sines[:k], 0.0, None), np.clip(cosines[:k], 0.0, None))
