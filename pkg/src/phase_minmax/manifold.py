"""Latitude grids on the unit round spheres S^2 and S^3.

Fields depend on the polar angle theta only.  Node ``i`` sits at the cell
centre ``theta_i = (i + 1/2) pi / K``, so no node touches a pole, and the
Laplace-Beltrami operator is written in flux form

    (Delta u)_i = [s_{i+1/2} (u_{i+1} - u_i) - s_{i-1/2} (u_i - u_{i-1})] / (c_i dtheta)

with ``s = sin^n`` and ``c_i`` the exact integral of ``sin^n`` over cell i.
The face weights vanish at the poles, which imposes the symmetry (zero-flux)
condition there.  Using exact cell volumes keeps the pole cells second-order
accurate on S^3.  The operator is symmetric with respect to the quadrature
weights ``A_n c_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, ShapeError

# area of the unit n-sphere
SPHERE_AREA = {1: 2.0 * np.pi, 2: 4.0 * np.pi}


@dataclass(frozen=True)
class GeometryConstants:
    m: float  # Ricci lower bound
    diam: float
    vol: float


class SymmetricSphereGrid:
    """Uniform latitude grid on the unit sphere S^{n+1}, n = ambient_dim - 1.

    Parameters
    ----------
    ambient_dim : int
        2 for S^2 or 3 for S^3.
    K : int
        Number of latitude cells, at least 8.
    """

    def __init__(self, ambient_dim=2, K=400):
        if ambient_dim not in (2, 3):
            raise GridError(f"ambient_dim must be 2 or 3, got {ambient_dim}")
        K = int(K)
        if K < 8:
            raise GridError(f"grid too small: K={K} < 8")
        self.ambient_dim = ambient_dim
        self.n = ambient_dim - 1
        self.K = K
        self.radius = 1.0
        self.dtheta = np.pi / K
        self.theta = (np.arange(K) + 0.5) * self.dtheta
        faces = np.arange(1, K) * self.dtheta
        self.area_n = SPHERE_AREA[self.n]
        self.s_face = np.sin(faces) ** self.n
        edges = np.arange(K + 1) * self.dtheta
        # c_i / dtheta: mean of sin^n over the cell
        self.s_node = np.diff(_sin_power_integral(self.n, edges)) / self.dtheta
        self.weights = self.area_n * self.s_node * self.dtheta
        for a in (self.theta, self.weights, self.s_node, self.s_face):
            a.flags.writeable = False

    def __repr__(self):
        return f"SymmetricSphereGrid(ambient_dim={self.ambient_dim}, K={self.K})"

    def __eq__(self, other):
        return (isinstance(other, SymmetricSphereGrid)
                and other.ambient_dim == self.ambient_dim and other.K == self.K)

    def __hash__(self):
        return hash((self.ambient_dim, self.K))

    @property
    def name(self):
        return "s2" if self.ambient_dim == 2 else "s3"

    # -- checks -----------------------------------------------------------
    def check(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.K:
            raise ShapeError(f"field has {u.shape[-1]} values, grid has K={self.K}")
        if not np.all(np.isfinite(u)):
            raise GridError("field contains non-finite values")
        return u

    # -- calculus -----------------------------------------------------------
    def face_differences(self, u):
        return np.diff(u, axis=-1)

    def laplace_beltrami(self, u):
        """Discrete u'' + n cot(theta) u' (acts on the last axis)."""
        u = np.asarray(u, dtype=float)
        flux = self.s_face * np.diff(u, axis=-1)
        out = np.zeros_like(u)
        out[..., :-1] += flux
        out[..., 1:] -= flux
        return out / (self.s_node * self.dtheta ** 2)

    def laplacian_bands(self):
        """Sub-, main and super-diagonal of the discrete Laplacian matrix."""
        h2 = self.dtheta ** 2
        lower = self.s_face / (self.s_node[1:] * h2)   # row i, column i-1
        upper = self.s_face / (self.s_node[:-1] * h2)  # row i, column i+1
        diag = np.zeros(self.K)
        diag[:-1] -= upper
        diag[1:] -= lower
        return lower, diag, upper

    def dirichlet(self, u, v=None):
        """Face-based integral of grad u . grad v."""
        du = np.diff(np.asarray(u, dtype=float), axis=-1)
        dv = du if v is None else np.diff(np.asarray(v, dtype=float), axis=-1)
        return np.sum(self.area_n * self.s_face * du * dv, axis=-1) / self.dtheta

    def grad_sq(self, u):
        """Nodal |grad u|^2 = (du/dtheta)^2, averaging the adjacent faces."""
        du = np.diff(np.asarray(u, dtype=float), axis=-1) / self.dtheta
        sq = du * du
        out = np.zeros(np.shape(u))
        out[..., :-1] += 0.5 * sq
        out[..., 1:] += 0.5 * sq
        # one face only at the pole cells
        out[..., 0] *= 2.0
        out[..., -1] *= 2.0
        return out

    def integrate(self, u):
        return np.sum(np.asarray(u, dtype=float) * self.weights, axis=-1)

    def inner(self, u, v):
        return self.integrate(np.asarray(u) * np.asarray(v))

    def norm(self, u):
        return np.sqrt(self.inner(u, u))

    # -- geometry -----------------------------------------------------------
    def geometry_constants(self):
        if self.ambient_dim == 2:
            return GeometryConstants(m=1.0, diam=np.pi, vol=4.0 * np.pi)
        return GeometryConstants(m=2.0, diam=np.pi, vol=2.0 * np.pi ** 2)

    def cap_volume(self, theta):
        """Exact volume of the geodesic cap {0 <= angle < theta}."""
        return cap_volume(self.n, theta)

    def constant(self, c):
        return Field(self, np.full(self.K, float(c)))

    def field(self, values):
        return Field(self, values)


def _sin_power_integral(n, theta):
    if n == 1:
        return 1.0 - np.cos(theta)
    return 0.5 * theta - 0.25 * np.sin(2.0 * theta)


def cap_volume(n, theta):
    theta = np.clip(np.asarray(theta, dtype=float), 0.0, np.pi)
    if n == 1:
        out = 2.0 * np.pi * (1.0 - np.cos(theta))
    else:
        out = 2.0 * np.pi * (theta - np.sin(theta) * np.cos(theta))
    return float(out) if out.ndim == 0 else out


def level_area(n, theta):
    """Area of the latitude sphere at polar angle theta."""
    theta = np.asarray(theta, dtype=float)
    out = SPHERE_AREA[n] * np.sin(theta) ** n
    return float(out) if out.ndim == 0 else out


@dataclass
class Field:
    """Values of a latitude function on a grid."""

    grid: SymmetricSphereGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = self.grid.check(np.array(self.values, dtype=float))
        if self.values.ndim != 1:
            raise ShapeError("a Field holds a single 1-D array of node values")

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.grid.K

    def copy(self):
        return Field(self.grid, self.values.copy())


def values_of(u):
    return u.values if isinstance(u, Field) else np.asarray(u, dtype=float)


def laplace_beltrami(u, grid=None):
    if isinstance(u, Field):
        return Field(u.grid, u.grid.laplace_beltrami(u.values))
    return grid.laplace_beltrami(u)


def integrate(u, grid=None):
    if isinstance(u, Field):
        return float(u.grid.integrate(u.values))
    return float(grid.integrate(u))


def geometry_constants(grid_or_dim):
    if isinstance(grid_or_dim, SymmetricSphereGrid):
        return grid_or_dim.geometry_constants()
    return SymmetricSphereGrid(int(grid_or_dim), 8).geometry_constants()
