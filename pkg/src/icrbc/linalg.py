"""Dense complex linear algebra used by the transmission scheme.

All routines are pure functions on numpy arrays. Row vectors are 1-D
arrays of length K (or 1 x K arrays); matrices are 2-D complex arrays.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import DegenerateBeamError, InfeasibleNullingError, SingularSystemError

ANNIHILATION_TOL = 1e-10
RANK_TOL = 1e-8


def _stack_rows(rows: Sequence[np.ndarray], K: int) -> np.ndarray:
    try:
        stacked = np.array([np.ravel(row) for row in rows], dtype=complex)
    except ValueError as exc:
        raise ValueError("rows have unequal lengths") from exc
    if stacked.ndim != 2 or stacked.shape[1] != K:
        raise ValueError(f"rows must have length {K}, got shape {stacked.shape}")
    return stacked


def rank(matrix: np.ndarray, tol: float = RANK_TOL) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    if matrix.size == 0:
        return 0
    s = np.linalg.svd(matrix, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def null_space_basis(rows: Sequence[np.ndarray], K: int) -> np.ndarray:
    """Orthonormal basis (K x d) of {x : row @ x = 0 for every row}."""
    if K < 1:
        raise ValueError("K must be positive")
    if len(rows) >= K:
        raise InfeasibleNullingError(
            f"cannot null {len(rows)} rows with {K} transmit antennas")
    if len(rows) == 0:
        return np.eye(K, dtype=complex)
    stacked = _stack_rows(rows, K)
    _, s, vh = np.linalg.svd(stacked, full_matrices=True)
    r = int(np.count_nonzero(s > RANK_TOL * s[0])) if s[0] > 0 else 0
    return vh[r:].conj().T


def null_space_projector(rows: Sequence[np.ndarray], K: int) -> np.ndarray:
    """Orthogonal projector onto the common null space of ``rows``.

    Parameters
    ----------
    rows : sequence of length-K complex vectors
        Channel rows the projected beam must be invisible to. Fewer than
        ``K`` rows are allowed.
    K : int
        Number of transmit antennas.

    Returns
    -------
    Q : (K, K) complex ndarray
        Hermitian, idempotent, with ``row @ Q == 0`` for every input row.
        An empty ``rows`` gives the identity.
    """
    basis = null_space_basis(rows, K)
    Q = basis @ basis.conj().T
    return 0.5 * (Q + Q.conj().T)


def first_beam_column(projector: np.ndarray, column: int = 0,
                      tol: float = 1e-12) -> np.ndarray:
    """Column ``column`` of a projector, used as a transmit beam.

    Column 0 corresponds to placing the payload in the first entry of the
    vector that is projected. Other columns are only used on retry.

    Raises
    ------
    DegenerateBeamError
        If the selected column has norm below ``tol``.
    """
    projector = np.asarray(projector, dtype=complex)
    beam = projector[:, column].copy()
    if np.linalg.norm(beam) < tol:
        raise DegenerateBeamError(f"projector column {column} vanishes")
    return beam


def solve(A: np.ndarray, b: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Solve ``A x = b`` for square, full-rank ``A``."""
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise ValueError("right-hand side does not match matrix size")
    if rank(A, tol) < A.shape[0]:
        raise SingularSystemError("matrix is singular within tolerance")
    return np.linalg.solve(A, b)


def logdet_rate(G: np.ndarray, noise_cov: np.ndarray, power: float) -> float:
    """Rate in bits of ``z = sqrt(P/K) G s + n`` with ``n ~ CN(0, noise_cov)``.

    Evaluates ``log2 det(I + (P/K) W G G^H W^H)`` with ``W`` the inverse
    square root of ``noise_cov`` and ``K`` the number of columns of ``G``.
    Computed from singular values so it stays accurate at very high power.
    """
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    noise_cov = np.atleast_2d(np.asarray(noise_cov, dtype=complex))
    if noise_cov.shape != (G.shape[0], G.shape[0]):
        raise ValueError("noise covariance does not match the number of rows of G")
    if not np.allclose(noise_cov, noise_cov.conj().T, rtol=0, atol=1e-12):
        raise ValueError("noise covariance is not Hermitian")
    w, V = np.linalg.eigh(noise_cov)
    if w.min() <= 0:
        raise ValueError("noise covariance is not positive definite")
    K = G.shape[1]
    whitened = (V / np.sqrt(w)) @ V.conj().T @ G
    s = np.linalg.svd(whitened, compute_uv=False)
    return float(np.sum(np.log2(1.0 + (power / K) * s**2)))
