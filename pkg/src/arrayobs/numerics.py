"""Dense complex linear-algebra kernel.

Every routine takes and returns ``numpy`` arrays of dtype ``complex128``.
Numerical zero decisions go through a :class:`Tolerance`; no other module
hard-codes an epsilon.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

import numpy as np
import scipy.linalg

__all__ = [
    "Tolerance",
    "ValidationError",
    "NumericalError",
    "as_cmatrix",
    "hermitian_eig",
    "general_eigenvalues",
    "null_space_basis",
    "numerical_rank",
    "pseudo_inverse",
    "matrix_exp",
    "kron",
]

ENV_PREFIX = "ARRAYOBS_"


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class NumericalError(RuntimeError):
    """A computed quantity failed its own post-condition check."""


@dataclass(frozen=True)
class Tolerance:
    """Thresholds for every "is this zero?" decision.

    rank_rtol
        Relative singular-value cutoff. A singular value counts as nonzero
        when it exceeds ``rank_rtol * sigma_max * max(rows, cols)``.
    eig_cluster_atol
        Eigenvalue clustering radius, scaled by ``max(1, ||A||)``.
    psd_slack
        Allowed negative eigenvalue (and Hermitian defect), relative to the
        matrix norm.
    boundary_atol
        Band around the imaginary axis inside which ``Re(mu)`` is treated
        as nonnegative.
    """

    rank_rtol: float = 1e-10
    eig_cluster_atol: float = 1e-7
    psd_slack: float = 1e-9
    boundary_atol: float = 1e-9

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (0.0 < value < 1.0) or not np.isfinite(value):
                raise ValidationError(f"tolerance {f.name}={value!r} must lie in (0, 1)")

    @property
    def subspace_atol(self) -> float:
        """Allowed residual when testing membership in a computed subspace.

        Eigen-subspaces are perturbed by roughly eps * ||L|| / gap, and the
        smallest admissible gap is itself ``rank_rtol``-scaled, so the
        square root keeps the test well above that noise floor.
        """
        return float(np.sqrt(self.rank_rtol))

    @classmethod
    def from_env(cls, environ=None, **overrides) -> "Tolerance":
        """Defaults, then ``ARRAYOBS_<FIELD>`` environment values, then overrides."""
        environ = os.environ if environ is None else environ
        values = {}
        for f in fields(cls):
            key = ENV_PREFIX + f.name.upper()
            if key in environ:
                try:
                    values[f.name] = float(environ[key])
                except ValueError as exc:
                    raise ValidationError(f"{key}={environ[key]!r} is not a number") from exc
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def with_overrides(self, **overrides) -> "Tolerance":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOL = Tolerance()


def as_cmatrix(M, name: str = "matrix", ndim: int = 2) -> np.ndarray:
    """Convert to a finite complex128 array, rejecting NaN/Inf."""
    arr = np.asarray(M, dtype=np.complex128)
    if ndim == 2 and arr.ndim == 1:
        raise ValidationError(f"{name}: expected a 2-D matrix, got shape {arr.shape}")
    if arr.ndim != ndim:
        raise ValidationError(f"{name}: expected {ndim}-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: non-finite entries")
    return arr


def _square(M, name):
    arr = as_cmatrix(M, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name}: expected a square matrix, got shape {arr.shape}")
    return arr


def _norm2(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def _singular_values(M: np.ndarray) -> np.ndarray:
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def _rank_cutoff(s: np.ndarray, shape, tol: Tolerance) -> float:
    if s.size == 0:
        return 0.0
    return tol.rank_rtol * float(s[0]) * max(shape)


def hermitian_eig(M, tol: Tolerance = DEFAULT_TOL):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ``(eigenvalues, Q)`` with eigenvalues real and ascending and Q
    unitary, so that ``M @ Q ~= Q @ diag(eigenvalues)``.
    """
    M = _square(M, "hermitian_eig")
    scale = _norm2(M)
    if np.linalg.norm(M - M.conj().T, 2) > tol.psd_slack * max(scale, np.finfo(float).tiny):
        raise ValidationError("hermitian_eig: matrix is not Hermitian within psd_slack")
    if M.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128)
    w, Q = np.linalg.eigh(0.5 * (M + M.conj().T))
    return w, Q


def general_eigenvalues(M, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """All eigenvalues of a square matrix, repeated by algebraic multiplicity.

    Hessenberg reduction followed by shifted QR with deflation (LAPACK
    ``geev``). Eigenvectors are deliberately not returned; callers take
    them from :func:`null_space_basis`.
    """
    M = _square(M, "general_eigenvalues")
    if M.shape[0] == 0:
        return np.zeros(0, dtype=np.complex128)
    return np.linalg.eigvals(M).astype(np.complex128)


def numerical_rank(M, tol: Tolerance = DEFAULT_TOL, scale: float | None = None) -> int:
    """Count of singular values above ``rank_rtol * sigma_max * max(rows, cols)``.

    ``scale`` replaces ``sigma_max`` as the reference magnitude when M is a
    derived quantity (a Schur complement, say) whose own largest singular
    value may be pure rounding noise.
    """
    M = as_cmatrix(M, "numerical_rank")
    s = _singular_values(M)
    if s.size == 0 or s[0] == 0.0:
        return 0
    ref = float(s[0]) if scale is None else max(float(s[0]), float(scale))
    return int(np.count_nonzero(s > tol.rank_rtol * ref * max(M.shape)))


def null_space_basis(M, tol: Tolerance = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis of the numerical null space, one column per dimension.

    ``scale`` plays the same role as in :func:`numerical_rank`.
    """
    M = as_cmatrix(M, "null_space_basis")
    rows, cols = M.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if rows == 0:
        return np.eye(cols, dtype=np.complex128)
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    ref = float(s[0]) if scale is None else max(float(s[0]), float(scale))
    if ref == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(s > tol.rank_rtol * ref * max(M.shape)))
    return Vh[rank:].conj().T.copy()


def pseudo_inverse(M, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse with the same singular-value cutoff as :func:`numerical_rank`."""
    M = as_cmatrix(M, "pseudo_inverse")
    rows, cols = M.shape
    if M.size == 0:
        return np.zeros((cols, rows), dtype=np.complex128)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((cols, rows), dtype=np.complex128)
    keep = s > _rank_cutoff(s, M.shape, tol)
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (Vh.conj().T * inv_s) @ U.conj().T


def matrix_exp(M, t: float = 1.0) -> np.ndarray:
    """``exp(M t)`` by scaling and squaring with a Pade approximant."""
    M = _square(M, "matrix_exp")
    if not np.isfinite(t):
        raise ValidationError("matrix_exp: non-finite time")
    if M.shape[0] == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    return scipy.linalg.expm(M * t).astype(np.complex128)


def kron(A, B) -> np.ndarray:
    """Kronecker product; shape ``(rA*rB, cA*cB)``."""
    return np.kron(as_cmatrix(A, "kron A"), as_cmatrix(B, "kron B"))
