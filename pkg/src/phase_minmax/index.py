"""Jacobi operator of a latitude interface: spectrum, index and nullity.

M is the latitude at polar angle theta_star in S^{n+1}, an n-sphere of radius
r = sin(theta_star).  Its second fundamental form has |A|^2 = n cot^2 and the
ambient Ricci curvature is n, so |A|^2 + Ric(nu, nu) = n / r^2.  With
spherical harmonics of degree k on M the eigenvalues of
-Delta_M - (|A|^2 + Ric) are (k (k + n - 1) - n) / r^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ParameterError, UnsupportedError
from .tube import Interface

NULL_RTOL = 1e-8


def harmonic_multiplicity(n, k):
    """Dimension of degree-k spherical harmonics on S^n (n = 1, 2)."""
    if n == 1:
        return 1 if k == 0 else 2
    if n == 2:
        return 2 * k + 1
    raise UnsupportedError(f"harmonic multiplicity for S^{n} not implemented")


def curvature_terms(M: Interface):
    """(|A|^2, Ric(nu, nu)) on the latitude."""
    n = M.n
    return n / np.tan(M.theta_star) ** 2, float(n)


def potential_term(M: Interface):
    A2, ric = curvature_terms(M)
    return A2 + ric


@dataclass
class JacobiSpectrum:
    eigenvalues: np.ndarray  # with multiplicity, sorted
    degrees: np.ndarray
    index: int
    nullity: int

    def summary(self, count=10):
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues[:count]],
            "index": self.index,
            "nullity": self.nullity,
        }


def jacobi_eigenvalue(M: Interface, k):
    n = M.n
    return (k * (k + n - 1) - n) / np.sin(M.theta_star) ** 2


def _count(vals, scale):
    tol = NULL_RTOL * max(1.0, scale)
    return int(np.sum(vals < -tol)), int(np.sum(np.abs(vals) <= tol))


def jacobi_spectrum(M: Interface, kmax=12):
    """Closed-form Jacobi eigenvalues for degrees 0..kmax, with multiplicity."""
    vals, degs = [], []
    for k in range(kmax + 1):
        kap = jacobi_eigenvalue(M, k)
        mult = harmonic_multiplicity(M.n, k)
        vals += [kap] * mult
        degs += [k] * mult
    vals = np.array(vals)
    idx, nul = _count(vals, potential_term(M))
    return JacobiSpectrum(vals, np.array(degs), idx, nul)


def index_form(M: Interface, f=None, grad_sq=None):
    """B_M(f, f) = int_M |grad f|^2 - (|A|^2 + Ric) f^2 for f constant on M.

    For ``f=None`` this is B_M(1, 1) = -|M| n / sin^2(theta_star).
    """
    c = 1.0 if f is None else float(f)
    g2 = 0.0 if grad_sq is None else float(grad_sq)
    return M.area * (g2 - potential_term(M) * c * c)


def stability_spectrum(M: Interface, lam=None, m=None, kmax=12, rtol=1e-9):
    """Jacobi spectrum of the latitude M, checking the stated lambda and m.

    Parameters
    ----------
    M : Interface
        Closed latitude interface.
    lam : float, optional
        Expected mean curvature of M.  A mismatch beyond ``rtol`` raises.
    m : float, optional
        Ricci lower bound of the ambient sphere (n on the unit S^{n+1}).
    """
    if not isinstance(M, Interface):
        raise UnsupportedError("only closed latitude interfaces are supported")
    scale = 1.0 + abs(M.mean_curvature)
    if lam is not None and abs(lam - M.mean_curvature) > rtol * scale:
        raise ParameterError(
            f"interface has mean curvature {M.mean_curvature:.12g}, not lambda={lam:g}")
    if m is not None and abs(m - M.n) > rtol * M.n:
        raise ParameterError(f"unit S^{M.ambient_dim} has Ricci bound {M.n}, not m={m:g}")
    return jacobi_spectrum(M, kmax)


@dataclass(frozen=True)
class NegativityCertificate:
    """B_M(1, 1) for the closed interface, with a spectral cross-check."""

    value: float
    negative: bool
    ground_eigenvalue: float
    norm_sq: float
    spectral_value: float
    consistent: bool
    singular_branch: str = "unsupported at desk scale (no singular set)"

    def as_dict(self):
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                for k, v in self.__dict__.items()}


def capacity_cutoff_test(M: Interface, rtol=1e-12):
    """Certificate that constants decrease the stability form on a closed M.

    With the cutoff equal to 1 everywhere, B_M(1, 1) = -|M| (|A|^2 + Ric) < 0.
    Constants are the ground eigenfunctions on the latitude, so the value
    must equal kappa_1 times the squared L^2 norm of 1, which is |M|.
    """
    value = index_form(M)
    kappa1 = jacobi_eigenvalue(M, 0)
    spectral = kappa1 * M.area
    ok = abs(value - spectral) <= rtol * max(1.0, abs(value))
    return NegativityCertificate(float(value), bool(value < 0), float(kappa1), float(M.area),
                                 float(spectral), bool(ok))


# ---------------------------------------------------------------------------
# finite-difference cross-check


def _circle_spectrum(M, N):
    # periodic second difference on the circle of radius r = sin(theta_star)
    r = np.sin(M.theta_star)
    h = 2.0 * np.pi / N
    A = 2.0 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)
    A[0, -1] = A[-1, 0] = -1.0
    lap = np.linalg.eigvalsh(A / (h * r) ** 2)
    return np.sort(lap - potential_term(M))


def _sphere_mode_spectrum(M, N, mmax):
    # -(1/sin phi)(sin phi u')' + m^2 u / sin^2 phi on a cell-centred phi grid
    r = np.sin(M.theta_star)
    h = np.pi / N
    phi = (np.arange(N) + 0.5) * h
    faces = np.arange(1, N) * h
    edges = np.arange(N + 1) * h
    cell = np.diff(-np.cos(edges)) / h  # mean of sin over each cell
    sf = np.sin(faces)
    out = []
    for m in range(mmax + 1):
        d = np.zeros(N)
        d[:-1] += sf / (cell[:-1] * h * h)
        d[1:] += sf / (cell[1:] * h * h)
        d += m * m / np.sin(phi) ** 2
        e = -sf / (h * h * np.sqrt(cell[:-1] * cell[1:]))
        vals = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 9))
        # each m > 0 appears twice (cos and sin in the azimuth)
        out += list(vals) * (1 if m == 0 else 2)
    return np.sort(np.array(out) / r ** 2 - potential_term(M))


FD_NULL_RTOL = 1e-3


def jacobi_fd_spectrum(M: Interface, N=400, count=10, rtol=FD_NULL_RTOL):
    """Lowest Jacobi eigenvalues from a finite-difference discretization of M.

    Index and nullity are counted with tolerance ``rtol * n / sin^2``, which
    must exceed the O(h^2) discretization error.
    """
    if M.n == 1:
        vals = _circle_spectrum(M, N)
    else:
        vals = _sphere_mode_spectrum(M, N, mmax=6)
    vals = vals[:count]
    tol = rtol * potential_term(M)
    return vals, int(np.sum(vals < -tol)), int(np.sum(np.abs(vals) <= tol))


def sign_changes(u):
    """Number of sign changes of a nodal field (connectedness of the interface)."""
    s = np.sign(np.asarray(u, dtype=float))
    s = s[s != 0]
    return int(np.count_nonzero(s[:-1] != s[1:]))
