"""Hermitian matrix algebra for small spatial covariance matrices.

Every function here operates on stacks of square complex matrices: an array
of shape ``(..., I, I)`` is treated as a batch of independent ``I x I``
matrices processed along the leading axes.  Matrices are promoted to
complex128.

The stereo case ``I = 2`` dominates the processing path and is served by
hand-written closed forms (adjugate inverse, explicit spectral
decomposition).  Other sizes fall back to LAPACK via ``numpy.linalg`` and
stay correct, just unoptimized.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SingularMatrixError",
    "PSD_TOL_SCALE",
    "hermitize",
    "is_hermitian",
    "inverse",
    "determinant",
    "log_det_pd",
    "psd_sqrt",
    "ensure_pd",
    "solve_riccati",
]

# Relative eigenvalue floor: eigenvalues below PSD_TOL_SCALE * lambda_max are
# clamped up whenever a positive definite matrix is required.
PSD_TOL_SCALE = 1e-9

# Determinant magnitudes below this are treated as singular.
_DET_FLOOR = 1e-30


class SingularMatrixError(np.linalg.LinAlgError):
    """A matrix that must be inverted is numerically singular."""


def _as_stack(mat) -> np.ndarray:
    m = np.asarray(mat)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {m.shape}")
    return m.astype(np.complex128, copy=False)


def hermitize(mat) -> np.ndarray:
    """Return the Hermitian part ``(M + M^H) / 2`` of each matrix."""
    m = _as_stack(mat)
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def is_hermitian(mat, tol: float = 0.0) -> bool:
    """Check ``M == M^H`` entrywise within ``tol`` (absolute)."""
    m = _as_stack(mat)
    return bool(np.all(np.abs(m - np.conj(np.swapaxes(m, -1, -2))) <= tol))


def determinant(mat) -> np.ndarray:
    """Determinant of each matrix (closed form for 2x2)."""
    m = _as_stack(mat)
    if m.shape[-1] == 2:
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    return np.linalg.det(m)


def inverse(mat, ridge: float = 0.0) -> np.ndarray:
    """Invert Hermitian matrices, optionally ridged.

    Computes ``(M + ridge * I)^{-1}`` and re-hermitizes the result.  The 2x2
    case uses the adjugate/determinant closed form.

    Parameters
    ----------
    mat : array_like, shape (..., I, I)
        Hermitian matrices.
    ridge : float
        Nonnegative diagonal loading added before inversion.

    Raises
    ------
    SingularMatrixError
        If any matrix in the stack has determinant magnitude below 1e-30
        after ridging.
    """
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    m = _as_stack(mat)
    dim = m.shape[-1]
    if ridge > 0:
        m = m + ridge * np.eye(dim)
    det = determinant(m)
    if np.any(np.abs(det) < _DET_FLOOR):
        n_bad = int(np.count_nonzero(np.abs(det) < _DET_FLOOR))
        raise SingularMatrixError(
            f"{n_bad} matrix(es) singular after ridge={ridge:g}"
        )
    if dim == 2:
        inv = np.empty_like(m)
        inv[..., 0, 0] = m[..., 1, 1]
        inv[..., 1, 1] = m[..., 0, 0]
        inv[..., 0, 1] = -m[..., 0, 1]
        inv[..., 1, 0] = -m[..., 1, 0]
        inv /= det[..., None, None]
    else:
        inv = np.linalg.inv(m)
    return hermitize(inv)


def _eig2_hermitian(m: np.ndarray):
    """Closed-form spectral decomposition of Hermitian 2x2 stacks.

    Returns ``(lo, hi, p_hi)`` where ``lo <= hi`` are the eigenvalues and
    ``p_hi`` is the spectral projector onto the ``hi`` eigenvector.  For
    (near-)degenerate pairs ``p_hi`` degrades gracefully: any function
    rebuilt from it is still correct because both eigenvalues map to the
    same value.
    """
    a = m[..., 0, 0].real
    c = m[..., 1, 1].real
    b = m[..., 0, 1]
    mean = 0.5 * (a + c)
    disc = np.sqrt((0.5 * (a - c)) ** 2 + (b * np.conj(b)).real)
    lo = mean - disc
    hi = mean + disc
    eye = np.eye(2, dtype=np.complex128)
    denom = np.maximum(hi - lo, np.finfo(np.float64).tiny)
    p_hi = (m - lo[..., None, None] * eye) / denom[..., None, None]
    return lo, hi, p_hi


def _rebuild2(lo: np.ndarray, hi: np.ndarray, p_hi: np.ndarray) -> np.ndarray:
    eye = np.eye(2, dtype=np.complex128)
    out = hi[..., None, None] * p_hi + lo[..., None, None] * (eye - p_hi)
    return hermitize(out)


def psd_sqrt(mat) -> np.ndarray:
    """Principal square root of Hermitian PSD matrices.

    Negative eigenvalues (numerical noise) are clamped to zero, so the
    result ``S`` is always Hermitian PSD with ``S @ S ~= M``.
    """
    m = hermitize(mat)
    if m.shape[-1] == 2:
        lo, hi, p_hi = _eig2_hermitian(m)
        return _rebuild2(np.sqrt(np.maximum(lo, 0.0)),
                         np.sqrt(np.maximum(hi, 0.0)), p_hi)
    w, v = np.linalg.eigh(m)
    w = np.sqrt(np.maximum(w, 0.0))
    return hermitize((v * w[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2)))


def ensure_pd(mat, tol_scale: float = PSD_TOL_SCALE) -> np.ndarray:
    """Clamp eigenvalues so each matrix is positive definite.

    The per-matrix floor is ``tol_scale`` times the largest eigenvalue
    magnitude (with a tiny absolute fallback for all-zero matrices).
    """
    m = hermitize(mat)
    if m.shape[-1] == 2:
        lo, hi, p_hi = _eig2_hermitian(m)
        scale = np.maximum(np.abs(lo), np.abs(hi))
        floor = tol_scale * np.maximum(scale, np.finfo(np.float64).tiny)
        return _rebuild2(np.maximum(lo, floor), np.maximum(hi, floor), p_hi)
    w, v = np.linalg.eigh(m)
    scale = np.max(np.abs(w), axis=-1, keepdims=True)
    floor = tol_scale * np.maximum(scale, np.finfo(np.float64).tiny)
    w = np.maximum(w, floor)
    return hermitize((v * w[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2)))


def log_det_pd(mat) -> np.ndarray:
    """Real log-determinant of Hermitian positive definite matrices."""
    m = _as_stack(mat)
    if m.shape[-1] == 2:
        det = (m[..., 0, 0].real * m[..., 1, 1].real
               - (m[..., 0, 1] * np.conj(m[..., 0, 1])).real)
        if np.any(det <= 0.0):
            raise SingularMatrixError("non-positive determinant in log_det_pd")
        return np.log(det)
    sign, logdet = np.linalg.slogdet(m)
    if np.any(sign.real <= 0.0):
        raise SingularMatrixError("non-positive determinant in log_det_pd")
    return logdet


def solve_riccati(psi, phi) -> np.ndarray:
    """Solve ``R @ Psi @ R = Phi`` for Hermitian PSD ``R``.

    ``Psi`` must be Hermitian positive definite and ``Phi`` Hermitian PSD.
    The solution is the closed form

        ``R = Psi^{-1/2} (Psi^{1/2} Phi Psi^{1/2})^{1/2} Psi^{-1/2}``

    which is Hermitian PSD by construction.

    Raises
    ------
    SingularMatrixError
        If ``Psi`` is not invertible.
    """
    psi = _as_stack(psi)
    phi = _as_stack(phi)
    psi_h = psd_sqrt(psi)
    psi_ih = inverse(psi_h)
    inner = psd_sqrt(psi_h @ phi @ psi_h)
    return hermitize(psi_ih @ inner @ psi_ih)
