"""Dense numerical kernels: shrinkage operators, SPD inversion and SVD.

All functions are pure and operate on 2-D float64 arrays.
"""

import logging
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, ParameterError

logger = logging.getLogger(__name__)

#: Condition-number estimate above which :func:`gram_inverse` logs a warning.
CONDITION_WARN = 1e12


class SvdFactors(NamedTuple):
    """Thin SVD ``w = u @ diag(sigma) @ vt``."""

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray

    def reconstruct(self):
        return (self.u * self.sigma) @ self.vt


def as_matrix(x, name="matrix"):
    """Return `x` as a finite 2-D float64 array, raising on anything else."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"{name} must be non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{name} contains non-finite entries")
    return a


def _check_threshold(value, name):
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ParameterError(f"{name} must be a finite non-negative number, got {value}")
    return value


def soft_threshold(x, xi):
    """Entrywise soft-thresholding ``sign(x) * max(|x| - xi, 0)``.

    This is the proximal operator of ``xi * ||.||_1``.

    Parameters
    ----------
    x : array_like
        Input array of any shape.
    xi : float
        Non-negative threshold.

    Returns
    -------
    ndarray
        Shrunk array with the shape of `x`.
    """
    xi = _check_threshold(xi, "xi")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - xi, 0.0)


def _fix_signs(u, vt):
    # largest-magnitude entry of every left singular vector made non-negative
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def full_svd(w):
    """Thin singular value decomposition with a deterministic sign convention.

    Singular values are returned in non-increasing order and every column of
    ``u`` has its largest-magnitude entry non-negative (the matching row of
    ``vt`` is flipped alongside).  Falls back from the divide-and-conquer
    LAPACK driver to the QR-iteration driver if the former fails to converge.
    """
    w = as_matrix(w, "w")
    try:
        u, s, vt = np.linalg.svd(w, full_matrices=False)
    except np.linalg.LinAlgError:
        logger.warning("gesdd did not converge on %s matrix, retrying with gesvd", w.shape)
        try:
            u, s, vt = scipy.linalg.svd(w, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"SVD failed to converge on {w.shape} matrix "
                f"(fro norm {np.linalg.norm(w):.3e})",
                state={"w": w},
            ) from exc
    u, vt = _fix_signs(u, vt)
    return SvdFactors(u, s, vt)


def svt(w, tau, return_sigma=False):
    """Singular value thresholding, the proximal operator of ``tau * ||.||_*``.

    Returns ``U diag(max(sigma - tau, 0)) V^T`` where ``w = U diag(sigma) V^T``,
    and with `return_sigma` also the shrunk singular values.
    """
    tau = _check_threshold(tau, "tau")
    f = full_svd(w)
    shrunk = np.maximum(f.sigma - tau, 0.0)
    keep = shrunk > 0
    if np.any(keep):
        out = (f.u[:, keep] * shrunk[keep]) @ f.vt[keep]
    else:
        out = np.zeros((f.u.shape[0], f.vt.shape[1]))
    return (out, shrunk) if return_sigma else out


def nuclear_norm(w):
    return float(np.sum(np.linalg.svd(as_matrix(w, "w"), compute_uv=False)))


def gram_inverse(x_tr):
    """Return ``(x_tr^T x_tr + I)^{-1}`` via a Cholesky factorization.

    The matrix is symmetric positive definite for any real `x_tr`, so the
    factorization cannot fail in exact arithmetic.  The result is explicitly
    symmetrized.
    """
    x_tr = as_matrix(x_tr, "x_tr")
    n = x_tr.shape[1]
    g = x_tr.T @ x_tr
    g[np.diag_indices(n)] += 1.0
    try:
        cf = scipy.linalg.cho_factor(g, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Cholesky factorization of X^T X + I failed") from exc
    diag = np.diag(cf[0])
    cond_est = (diag.max() / diag.min()) ** 2
    if cond_est > CONDITION_WARN:
        logger.warning("X^T X + I is ill-conditioned (condition estimate %.3e)", cond_est)
    c = scipy.linalg.cho_solve(cf, np.eye(n), check_finite=False)
    return 0.5 * (c + c.T)
