"""Dense complex linear algebra kernel for small (dim <= 32) matrices.

Everything downstream works on 2N x 2N complex matrices with N <= 16:
monodromy matrices, their Cayley-type averages, block potentials. This
module provides the few primitives the rest of the package needs
(eigenvalues with a Newton polish, matrix exponential, determinant and
inverse) plus the canonical structure matrices of the first-order system.
"""

from __future__ import annotations

from dataclasses import dataclass

import warnings

import numpy as np
import scipy.linalg

MAX_DIM = 32


class LinalgError(RuntimeError):
    """Raised on invalid input or a failed factorization."""


def as_cmatrix(a, *, max_dim: int = MAX_DIM) -> np.ndarray:
    """Validate and return a square complex matrix (finite entries, dim <= max_dim)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[0] > max_dim:
        raise LinalgError(f"dimension {m.shape[0]} outside [1, {max_dim}]")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise LinalgError("matrix has non-finite entries")
    return m


def j1_matrix(n: int) -> np.ndarray:
    """diag(I_n, -I_n), the signature matrix of the first-order system."""
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)])).astype(np.complex128)


def j_matrix(n: int) -> np.ndarray:
    """[[0, I_n], [-I_n, 0]], the symplectic unit."""
    m = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    m[:n, n:] = np.eye(n)
    m[n:, :n] = -np.eye(n)
    return m


def j2_matrix(n: int) -> np.ndarray:
    """[[0, I_n], [I_n, 0]], the off-diagonal swap."""
    m = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    m[:n, n:] = np.eye(n)
    m[n:, :n] = np.eye(n)
    return m


def mixing_unitary(n: int) -> np.ndarray:
    """(j1 + i j)/sqrt(2): self-adjoint unitary exchanging the j1 and j structures."""
    return (j1_matrix(n) + 1j * j_matrix(n)) / np.sqrt(2.0)


@dataclass
class EigenSet:
    """Eigenvalues (and optionally right eigenvectors) with a residual estimate.

    residual is max_k ||A v_k - lambda_k v_k|| / ||A|| over unit eigenvectors
    when vectors were requested, else the maximum polish correction applied.
    """

    values: np.ndarray
    vectors: np.ndarray | None
    residual: float


def _char_poly_newton(a: np.ndarray, lam: complex) -> complex | None:
    """One Newton step for det(A - lam I) = 0 via p'/p = -tr((A - lam I)^-1).

    Returns the corrected eigenvalue or None when A - lam I is numerically
    singular (lam already exact to working precision).
    """
    d = a.shape[0]
    shifted = a - lam * np.eye(d)
    try:
        with warnings.catch_warnings():
            # An exactly singular shift means lam is already exact; the
            # None return below handles it, so the warning is noise.
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            piv = scipy.linalg.lu_factor(shifted, check_finite=False)
    except scipy.linalg.LinAlgError:
        return None
    u_diag = np.diag(piv[0])
    if np.min(np.abs(u_diag)) < 1e3 * np.finfo(float).tiny:
        return None
    inv_trace = np.trace(scipy.linalg.lu_solve(piv, np.eye(d), check_finite=False))
    if not np.isfinite(inv_trace) or inv_trace == 0:
        return None
    # Newton update lam - p/p' with p'/p = -tr((A - lam I)^-1)
    return lam + 1.0 / inv_trace


def eigenvalues(a, tol: float = 1e-9, *, vectors: bool = False, polish: bool = True) -> EigenSet:
    """All eigenvalues of a square complex matrix, QR-iterated then Newton-polished.

    The polish step refines each eigenvalue once against the characteristic
    polynomial and is kept only when it is a small correction (large jumps
    indicate a defective cluster where the step is meaningless).
    """
    m = as_cmatrix(a)
    scale = max(np.max(np.abs(m)), 1.0)
    if vectors:
        vals, vecs = np.linalg.eig(m)
    else:
        vals = np.linalg.eigvals(m)
        vecs = None
    vals = np.array(vals, dtype=np.complex128)

    max_step = 0.0
    if polish:
        for k, lam in enumerate(vals):
            corrected = _char_poly_newton(m, lam)
            if corrected is None:
                continue
            step = abs(corrected - lam)
            if step <= 1e-6 * scale:
                vals[k] = corrected
                max_step = max(max_step, step)

    if vectors:
        res = 0.0
        for k in range(len(vals)):
            v = vecs[:, k]
            nv = np.linalg.norm(v)
            if nv == 0:
                continue
            res = max(res, float(np.linalg.norm(m @ v - vals[k] * v) / (nv * scale)))
        residual = res
    else:
        residual = max_step / scale
    if not np.all(np.isfinite(vals.view(np.float64))):
        raise LinalgError("eigenvalue iteration produced non-finite values")
    return EigenSet(values=vals, vectors=vecs, residual=residual)


def mat_exp(a) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a Pade kernel."""
    m = as_cmatrix(a)
    norm = np.linalg.norm(m, ord=np.inf)
    if norm > 700.0:
        # exp would overflow double range before squaring finishes
        raise LinalgError(f"matrix norm {norm:.3g} too large for exponential")
    return scipy.linalg.expm(m)


def det_inv(a) -> tuple[complex, np.ndarray | None]:
    """Determinant and inverse from one LU factorization.

    Returns (det, None) when the matrix is numerically singular instead of
    producing an unusable inverse.
    """
    m = as_cmatrix(a)
    d = m.shape[0]
    with warnings.catch_warnings():
        # a singular input is an expected path (handled by the None return)
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    u_diag = np.diag(lu)
    # pivot sign: each row swap flips the determinant sign
    swaps = int(np.sum(piv != np.arange(d)))
    det = complex((-1.0) ** swaps * np.prod(u_diag))
    scale = max(np.max(np.abs(m)), 1.0)
    if np.min(np.abs(u_diag)) <= 1e-14 * scale:
        return det, None
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(d, dtype=np.complex128), check_finite=False)
    return det, inv


def log_det(a) -> complex:
    """Principal-branch log of det(A) summed over eigenvalue logs.

    Safe for determinants far outside double range as long as no eigenvalue
    winds around the cut; used for comparing determinant growth along the
    imaginary axis.
    """
    m = as_cmatrix(a)
    vals = np.linalg.eigvals(m)
    if np.any(vals == 0):
        raise LinalgError("log_det of a singular matrix")
    return complex(np.sum(np.log(vals)))
