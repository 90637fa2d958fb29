"""Pure-Python (numpy) versions of the numerical kernels.

Both backends factor a small principal submatrix with a Cholesky
decomposition and report a cheap reciprocal-condition estimate, the squared
ratio of the smallest to the largest pivot. A pivot that is not strictly
positive gives an estimate of 0.
"""

import math

import numpy as np

BACKEND = "python"


def _cholesky(sub):
    try:
        chol = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError:
        return None, 0.0
    diag = np.diag(chol)
    if not np.all(diag > 0.0):
        return None, 0.0
    return chol, float((diag.min() / diag.max()) ** 2)


def partial_corr(corr, i, j, cond):
    """Partial correlation of ``i`` and ``j`` given the indices in ``cond``.

    Returns ``(rho, rcond)``. ``rho`` is NaN when the factorization fails.
    """
    idx = list(cond)
    idx.append(i)
    idx.append(j)
    sub = corr[np.ix_(idx, idx)]
    chol, rcond = _cholesky(sub)
    if chol is None:
        return math.nan, 0.0
    b = chol[-1, -2]
    c = chol[-1, -1]
    return float(b / math.sqrt(b * b + c * c)), rcond


def logdet_sub(mat, idx):
    """Log-determinant of the principal submatrix over ``idx``.

    Returns ``(logdet, rcond)``; ``logdet`` is NaN when the factorization fails.
    """
    idx = list(idx)
    if not idx:
        return 0.0, 1.0
    chol, rcond = _cholesky(mat[np.ix_(idx, idx)])
    if chol is None:
        return math.nan, 0.0
    return float(2.0 * np.log(np.diag(chol)).sum()), rcond
