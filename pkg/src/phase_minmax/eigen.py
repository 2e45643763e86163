"""Eigenvalues of symmetric tridiagonal matrices.

The primary route is shifted inverse iteration with explicit deflation,
followed by Rayleigh-quotient polishing.  A Sturm-sequence count (Sylvester
inertia of the LDL^T factorization) gives an independent count of the
eigenvalues below any threshold.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .errors import EigenError


def tridiag_matvec(d, e, x):
    y = d * x
    y[:-1] += e * x[1:]
    y[1:] += e * x[:-1]
    return y


def sturm_count(d, e, x):
    """Number of eigenvalues strictly below x (negative pivots of T - x I)."""
    count = 0
    q = d[0] - x
    tiny = np.finfo(float).tiny
    if q < 0:
        count += 1
    for i in range(1, d.size):
        if q == 0.0:
            q = tiny
        q = d[i] - x - e[i - 1] ** 2 / q
        if q < 0:
            count += 1
    return count


def _solve_shifted(d, e, shift, rhs):
    ab = np.zeros((3, d.size))
    ab[0, 1:] = e
    ab[1] = d - shift
    ab[2, :-1] = e
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def _orthogonalize(x, basis):
    for v in basis:
        x = x - (v @ x) * v
    return x


def lowest_eigenpairs(d, e, count, shift, tol=1e-12, max_iter=5000, rng=None, stop_above=None):
    """Lowest eigenpairs of the tridiagonal matrix (d, e) by deflated inverse iteration.

    Parameters
    ----------
    d, e : ndarray
        Diagonal and off-diagonal.
    count : int
        Maximum number of pairs to compute.
    shift : float
        A lower bound for the spectrum; inverse iteration about it converges
        to the lowest eigenvalue not yet deflated.
    stop_above : float, optional
        Stop once an eigenvalue above this value has been found.

    Returns
    -------
    values : ndarray
    vectors : list of ndarray
    residuals : ndarray
        ||T v - mu v|| for each pair.
    """
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    rng = np.random.default_rng(12345) if rng is None else rng
    vals, vecs, res = [], [], []
    for _ in range(min(count, d.size)):
        x = _orthogonalize(rng.standard_normal(d.size), vecs)
        x /= np.linalg.norm(x)
        mu_old = np.inf
        for it in range(max_iter):
            y = _orthogonalize(_solve_shifted(d, e, shift, x), vecs)
            x = y / np.linalg.norm(y)
            mu = x @ tridiag_matvec(d, e, x)
            if abs(mu - mu_old) <= 1e-10 * max(1.0, abs(mu)):
                break
            mu_old = mu
        # Rayleigh-quotient polish
        for _ in range(20):
            r = tridiag_matvec(d, e, x) - mu * x
            if np.linalg.norm(r) <= tol * max(1.0, abs(mu)):
                break
            try:
                y = _solve_shifted(d, e, mu, x)
            except np.linalg.LinAlgError:
                break
            if not np.all(np.isfinite(y)):
                break
            y = _orthogonalize(y, vecs)
            x = y / np.linalg.norm(y)
            mu = x @ tridiag_matvec(d, e, x)
        r = np.linalg.norm(tridiag_matvec(d, e, x) - mu * x)
        if r > 1e-6 * max(1.0, abs(mu)):
            raise EigenError(f"eigenpair did not converge (residual {r:.3e})", r)
        vals.append(mu)
        vecs.append(x)
        res.append(r)
        if stop_above is not None and mu > stop_above:
            break
    order = np.argsort(vals)
    return np.array(vals)[order], [vecs[i] for i in order], np.array(res)[order]
