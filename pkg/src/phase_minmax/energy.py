"""Inhomogeneous Allen-Cahn energy, its variations and the stable constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import AdmissibilityError, ParameterError
from .manifold import Field, values_of
from .potential import STANDARD_WELL, DoubleWell, check_eps, sigma_constant

# fraction of the local maximum of W' that eps*sigma*lambda may use
ADMISSIBILITY_MARGIN = 0.9


@dataclass(frozen=True)
class EnergyParams:
    """Parameters of F_{eps,lambda}; ``sigma`` defaults to the well's constant."""

    eps: float
    lam: float
    well: DoubleWell = STANDARD_WELL
    sigma: float | None = None

    def __post_init__(self):
        check_eps(self.eps)
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam!r}")
        if self.sigma is None:
            object.__setattr__(self, "sigma", sigma_constant(self.well))

    @property
    def forcing(self):
        """Right-hand side eps * sigma * lambda of W'(t) = forcing."""
        return self.eps * self.sigma * self.lam

    @property
    def wprime_max(self):
        # local maximum of W' on (-1, 0), attained at -1/sqrt(3)
        return self.well.scale * 2.0 / (3.0 * np.sqrt(3.0))

    def admissible(self):
        return self.forcing < ADMISSIBILITY_MARGIN * self.wprime_max

    def eps0(self):
        """Largest admissible eps for this lambda (capped at 1/4)."""
        if self.lam == 0:
            return 0.25
        return min(0.25, ADMISSIBILITY_MARGIN * self.wprime_max / (self.sigma * self.lam))


@dataclass(frozen=True)
class StableConstants:
    a_eps: float
    b_eps: float
    c_eps: float


def stable_constants(p: EnergyParams, xtol=1e-12):
    """The three roots a < c < b of W'(t) = eps sigma lambda, by bisection."""
    if not p.admissible():
        raise AdmissibilityError(
            f"stable_constants: eps*sigma*lambda = {p.forcing:.6g} exceeds "
            f"{ADMISSIBILITY_MARGIN:g} x max W' = {ADMISSIBILITY_MARGIN * p.wprime_max:.6g}; "
            f"eps too large for lambda={p.lam:g} (eps0 = {p.eps0():.6g})")
    if p.forcing == 0.0:
        return StableConstants(-1.0, 1.0, 0.0)
    k = 1.0 / np.sqrt(3.0)

    def g(t):
        return p.well.first(t) - p.forcing

    a = bisect(g, -2.0, -k, xtol=xtol)
    c = bisect(g, -k, k, xtol=xtol)
    b = bisect(g, k, 2.0, xtol=xtol)
    return StableConstants(a, b, c)


def _grid_and_values(u, grid):
    if isinstance(u, Field):
        return u.grid, u.values
    if grid is None:
        raise ParameterError("a grid is required for raw arrays")
    return grid, grid.check(u)


def ac_energy(u, p: EnergyParams, grid=None):
    """F(u) = int eps/2 |grad u|^2 + W(u)/eps - sigma lambda u.

    Accepts a Field, or an array whose last axis is the grid (returns one
    energy per leading index).
    """
    grid, v = _grid_and_values(u, grid)
    bulk = p.well.value(v) / p.eps - p.sigma * p.lam * v
    out = 0.5 * p.eps * grid.dirichlet(v) + grid.integrate(bulk)
    return float(out) if np.ndim(out) == 0 else out


def energy_mass(u, p: EnergyParams, grid=None):
    """Total mass of the energy measure (eps/2 |grad u|^2 + W/eps) / (2 sigma)."""
    grid, v = _grid_and_values(u, grid)
    e = 0.5 * p.eps * grid.dirichlet(v) + grid.integrate(p.well.value(v) / p.eps)
    out = e / (2.0 * p.sigma)
    return float(out) if np.ndim(out) == 0 else out


def gradient_values(v, p: EnergyParams, grid):
    return -p.eps * grid.laplace_beltrami(v) + p.well.first(v) / p.eps - p.sigma * p.lam


def ac_gradient(u, p: EnergyParams, grid=None):
    """L^2 gradient -eps Delta u + W'(u)/eps - sigma lambda."""
    grid, v = _grid_and_values(u, grid)
    g = gradient_values(v, p, grid)
    return Field(grid, g) if isinstance(u, Field) else g


def hessian_apply(u, phi, p: EnergyParams, grid=None):
    """Linearization -eps Delta phi + W''(u) phi / eps."""
    grid, v = _grid_and_values(u, grid)
    ph = values_of(phi)
    out = -p.eps * grid.laplace_beltrami(ph) + p.well.second(v) * ph / p.eps
    return Field(grid, out) if isinstance(u, Field) else out


def hessian_bands(v, p: EnergyParams, grid):
    """Bands (lower, diag, upper) of the linearization matrix at v."""
    lo, d, up = grid.laplacian_bands()
    return -p.eps * lo, -p.eps * d + p.well.second(v) / p.eps, -p.eps * up


def second_variation(u, phi, p: EnergyParams, grid=None):
    """Quadratic form int eps |grad phi|^2 + W''(u) phi^2 / eps."""
    grid, v = _grid_and_values(u, grid)
    ph = values_of(phi)
    return float(p.eps * grid.dirichlet(ph) + grid.integrate(p.well.second(v) * ph * ph / p.eps))


def constant_energy(c, p: EnergyParams, vol):
    """Energy of the constant field c on a manifold of volume vol (exact)."""
    return vol * (p.well.value(c) / p.eps - p.sigma * p.lam * c)
