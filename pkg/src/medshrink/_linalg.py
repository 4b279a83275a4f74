"""Least-squares helpers built on a pivoted QR factorization.

All regression paths in the package go through :func:`qr_factor`, which
solves via an orthogonal factorization and rejects ill-conditioned designs
with a named near-null direction instead of silently returning garbage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import IdentifiabilityError

#: Default relative condition-number limit for accepting a design matrix.
DEFAULT_COND_LIMIT = 1e10


def _near_null_direction(a: np.ndarray, names) -> str:
    """Describe the right singular vector of the smallest singular value."""
    _, _, vt = np.linalg.svd(a, full_matrices=False)
    v = vt[-1]
    if names is None:
        names = [f"col{j}" for j in range(a.shape[1])]
    order = np.argsort(-np.abs(v))
    terms = [f"{v[j]:+.3f}*{names[j]}" for j in order[:4] if abs(v[j]) > 0.05]
    return " ".join(terms) if terms else "unresolved"


@dataclass
class QRFactor:
    """Economic pivoted QR factorization ``a[:, perm] = q @ r``."""

    q: np.ndarray
    r: np.ndarray
    perm: np.ndarray
    cond: float

    @property
    def ncols(self) -> int:
        return self.r.shape[1]

    def solve(self, y: np.ndarray) -> np.ndarray:
        """Least-squares solution of ``a @ beta = y``."""
        z = scipy.linalg.solve_triangular(self.r, self.q.T @ y)
        beta = np.empty_like(z)
        beta[self.perm] = z
        return beta

    def project(self, b: np.ndarray) -> np.ndarray:
        """Orthogonal projection of the columns of ``b`` onto span(a)."""
        return self.q @ (self.q.T @ b)

    def gram_inverse(self) -> np.ndarray:
        """(a'a)^{-1} in the original (unpivoted) column order."""
        rinv = scipy.linalg.solve_triangular(self.r, np.eye(self.ncols))
        g = rinv @ rinv.T
        out = np.empty_like(g)
        out[np.ix_(self.perm, self.perm)] = g
        return out


def qr_factor(
    a: np.ndarray,
    *,
    cond_limit: float = DEFAULT_COND_LIMIT,
    context: str = "design matrix",
    names=None,
) -> QRFactor:
    """Factor ``a`` and fail loudly when it is numerically rank-deficient.

    Parameters
    ----------
    a : ndarray of shape (n, p)
        Matrix to factor, n >= p.
    cond_limit : float
        Relative condition-number threshold, measured on the pivoted
        R diagonal (a cheap spectral proxy).
    context : str
        Used in the error message.
    names : sequence of str, optional
        Column labels for the near-null direction report.

    Raises
    ------
    IdentifiabilityError
        If the estimated condition number exceeds ``cond_limit``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-d design matrix")
    n, p = a.shape
    if n < p:
        raise IdentifiabilityError(
            f"{context} has more columns ({p}) than rows ({n})"
        )
    q, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    cond = np.inf if diag[-1] == 0.0 else float(diag[0] / diag[-1])
    if not np.isfinite(cond) or cond > cond_limit:
        direction = _near_null_direction(a, names)
        raise IdentifiabilityError(
            f"{context} is rank-deficient or ill-conditioned "
            f"(condition estimate {cond:.3e} exceeds {cond_limit:.1e}); "
            f"near-null direction: {direction}"
        )
    return QRFactor(q=q, r=r, perm=perm, cond=cond)


def residual_sum_of_squares(y: np.ndarray, a: np.ndarray, beta: np.ndarray) -> float:
    resid = y - a @ beta
    return float(resid @ resid)
