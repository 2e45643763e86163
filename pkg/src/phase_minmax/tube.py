"""Signed distance, level sets and the geometry of the tube around a latitude.

The interface M is the latitude sphere at polar angle ``theta_star`` with E
the northern cap.  The signed distance is positive in E, so the level set
Gamma_t = {d = t} is the latitude at angle ``theta_star - t``.  Level sets
are defined for t in (sigma_minus, sigma_plus) = (theta_star - pi, theta_star);
at the endpoints they collapse onto the poles (the cut locus).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError, ParameterError
from .manifold import SPHERE_AREA, SymmetricSphereGrid, Field, cap_volume

# threshold used to call theta_star degenerate
_DEGENERATE = 1e-12


@dataclass(frozen=True)
class Interface:
    """Latitude interface in S^{n+1}."""

    theta_star: float
    ambient_dim: int = 2

    def __post_init__(self):
        if self.ambient_dim not in (2, 3):
            raise ParameterError(f"ambient_dim must be 2 or 3, got {self.ambient_dim}")
        th = float(self.theta_star)
        if not np.isfinite(th) or th <= _DEGENERATE or th >= np.pi - _DEGENERATE:
            raise GridError(f"degenerate interface: theta_star={th!r} must lie in (0, pi)")

    @classmethod
    def cmc(cls, lam, ambient_dim=2):
        """The latitude with mean curvature lambda: cot(theta) = lambda / n."""
        n = ambient_dim - 1
        return cls(float(np.arctan2(n, lam)), ambient_dim)

    @property
    def n(self):
        return self.ambient_dim - 1

    @property
    def sigma_minus(self):
        return self.theta_star - np.pi

    @property
    def sigma_plus(self):
        return self.theta_star

    @property
    def area(self):
        return SPHERE_AREA[self.n] * np.sin(self.theta_star) ** self.n

    @property
    def mean_curvature(self):
        return self.n / np.tan(self.theta_star)

    @property
    def enclosed_volume(self):
        return cap_volume(self.n, self.theta_star)

    @property
    def total_volume(self):
        return cap_volume(self.n, np.pi)


def signed_distance(grid: SymmetricSphereGrid, M: Interface):
    """d(x) = theta_star - theta(x), positive inside E; 1-Lipschitz."""
    if isinstance(M, (int, float)):
        M = Interface(float(M), grid.ambient_dim)
    if M.ambient_dim != grid.ambient_dim:
        raise ParameterError("interface and grid live on different spheres")
    return Field(grid, M.theta_star - grid.theta)


@dataclass
class TubeProfile:
    """Level-set quantities along t; entries outside the tube are flagged."""

    t: np.ndarray
    level_measure: np.ndarray
    H: np.ndarray
    theta: np.ndarray
    defined: np.ndarray
    bound_H: np.ndarray
    bound_theta: np.ndarray
    sigma_minus: float = float("nan")
    sigma_plus: float = float("nan")

    def rows(self):
        return zip(self.t, self.level_measure, self.H, self.theta, self.bound_H, self.bound_theta)


def tube_profile(M: Interface, t, lam=None, m=None):
    """Area, mean curvature and Jacobian of the level sets Gamma_t.

    Parameters
    ----------
    M : Interface
    t : array_like
        Level values.
    lam, m : float, optional
        Mean curvature of M and Ricci lower bound used in the comparison
        bounds.  Default to the values of M and of the unit sphere.

    Notes
    -----
    For t outside (sigma_minus, sigma_plus) the level set is empty: the
    measure and Jacobian are 0 and H is NaN with ``defined`` False.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = M.n
    lam = M.mean_curvature if lam is None else lam
    m = float(n) if m is None else m
    inside = (t > M.sigma_minus) & (t < M.sigma_plus)
    phi = np.where(inside, M.theta_star - t, np.pi / 2)
    sin_ratio = np.sin(phi) / np.sin(M.theta_star)
    theta = np.where(inside, sin_ratio ** n, 0.0)
    area = np.where(inside, M.area * theta, 0.0)
    H = np.where(inside, n / np.tan(phi), np.nan)
    bound_H = lam + m * t
    bound_theta = np.exp(-t * (lam + 0.5 * m * t))
    return TubeProfile(t, area, H, theta, inside, bound_H, bound_theta,
                       float(M.sigma_minus), float(M.sigma_plus))


# per-sample tube data on the abstract cylinder
TubeSamples = TubeProfile


def f_lambda(M: Interface, t, lam):
    """F_lambda(E_t) = |Gamma_t| - lambda vol(E_t) for the superlevel set E_t = {d > t}."""
    t = np.asarray(t, dtype=float)
    phi = np.clip(M.theta_star - t, 0.0, np.pi)
    out = SPHERE_AREA[M.n] * np.sin(phi) ** M.n - lam * cap_volume(M.n, phi)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SweepCheck:
    max_value: float
    value_at_zero: float
    argmax_t: float
    passed: bool


def sweep_check(M: Interface, lam, num=4001, tol=1e-12):
    """Check F_lambda(E_t) <= F_lambda(E_0) along the foliation, with equality only at 0."""
    t = np.linspace(M.sigma_minus, M.sigma_plus, num)
    t = np.union1d(t, [0.0])
    vals = f_lambda(M, t, lam)
    f0 = f_lambda(M, 0.0, lam)
    i = int(np.argmax(vals))
    off = np.abs(t) > 1e-9
    ok = bool(np.all(vals <= f0 + tol) and np.all(vals[off] < f0))
    return SweepCheck(float(vals[i]), f0, float(t[i]), ok)


def log_theta_derivative(M: Interface, t, h=1e-5):
    """Central difference of log theta_t; equals -H_t inside the tube."""
    t = np.asarray(t, dtype=float)
    up = tube_profile(M, t + h).theta
    dn = tube_profile(M, t - h).theta
    return (np.log(up) - np.log(dn)) / (2.0 * h)


def coarea_volume(M: Interface, nodes=200):
    """Integral of |Gamma_t| over the tube, by composite Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(M.sigma_minus, M.sigma_plus, nodes + 1)
    a, b = edges[:-1, None], edges[1:, None]
    t = 0.5 * (b - a) * x + 0.5 * (a + b)
    return float(np.sum(0.5 * (b - a) * w * tube_profile(M, t.ravel()).level_measure.reshape(t.shape)))


def coverage_count(grid: SymmetricSphereGrid, M: Interface):
    """Number of grid nodes reached as exp_y(t nu) with t strictly inside the tube.

    Every point off the cut locus is reached, so this equals K.
    """
    d = signed_distance(grid, M).values
    return int(np.count_nonzero((d > M.sigma_minus) & (d < M.sigma_plus)))


def interface_from_field(grid: SymmetricSphereGrid, u):
    """Polar angles where u changes sign, by linear interpolation."""
    v = np.asarray(u, dtype=float)
    s = np.sign(v)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    th = grid.theta
    return th[idx] + (th[idx + 1] - th[idx]) * v[idx] / (v[idx] - v[idx + 1])
