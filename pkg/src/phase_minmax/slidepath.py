"""Recovery path obtained by sliding the truncated profile across the foliation.

The field ``v_t = Hbar_eps(d - t)`` is evaluated two ways: by a 1-D
quadrature in the level-set variable (using |grad d| = 1 and the coarea
formula), and directly on a latitude grid.  The first route never touches the
PDE grid and serves as an independent oracle for the second.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .energy import EnergyParams, ac_energy, constant_energy, stable_constants
from .manifold import SymmetricSphereGrid, cap_volume, level_area
from .path import PathOfFields, reparametrize
from .potential import TruncatedProfile
from .tube import Interface, signed_distance, tube_profile


@dataclass(frozen=True)
class LimitEnergies:
    A2: float
    wall_lhs: float  # area of M
    wall_rhs: float  # lambda times the enclosed volume

    @property
    def wall_holds(self):
        return self.wall_lhs > self.wall_rhs


def limit_energies(M: Interface, lam, sigma):
    """Limit height A2 = sigma (2|M| - lambda vol(E) + lambda vol(N \\ E))."""
    vE = M.enclosed_volume
    vN = M.total_volume
    A2 = sigma * (2.0 * M.area - lam * vE + lam * (vN - vE))
    return LimitEnergies(A2, M.area, lam * vE)


def _upper_volume(M, t):
    """vol{d > t}."""
    return cap_volume(M.n, np.clip(M.theta_star - np.asarray(t, dtype=float), 0.0, np.pi))


def sliding_energy(M: Interface, p: EnergyParams, t):
    """Energy of Hbar_eps(d - t) by 1-D quadrature over the level sets.

    The volume term splits as sign(s - t), integrated exactly through cap
    volumes, plus the compactly supported remainder Hbar - sign.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    prof = TruncatedProfile(p.eps, p.well)
    s, w = prof.nodes_scaled()
    q = prof.q_scaled(s)
    corr = prof.value_scaled(s) - np.sign(s)
    lvl = s[None, :] * p.eps + t[:, None]
    area = tube_profile(M, lvl.ravel()).level_measure.reshape(lvl.shape)
    # Q_eps(tau) d tau = q(s) ds ; Hbar d tau = eps Hbar ds
    grad_part = area @ (w * q)
    corr_part = p.eps * (area @ (w * corr))
    up = _upper_volume(M, t)
    sign_part = up - (M.total_volume - up)
    out = grad_part - p.sigma * p.lam * (sign_part + corr_part)
    return out


def sliding_fields(grid: SymmetricSphereGrid, M: Interface, p: EnergyParams, t):
    d = signed_distance(grid, M).values
    prof = TruncatedProfile(p.eps, p.well)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return prof.value(d[None, :] - t[:, None])


def sliding_energy_grid(grid, M, p, t, chunk=256):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape)
    for i in range(0, t.size, chunk):
        out[i:i + chunk] = ac_energy(sliding_fields(grid, M, p, t[i:i + chunk]), p, grid)
    return out


def energy_bounds(M: Interface, p: EnergyParams, t, samples=64):
    """Piecewise bounds from esssup / essinf of |Gamma_s| over the layer.

    With delta = 2 eps Lambda, ``Hbar`` equals sign outside the layer and lies
    in [-1, 1] inside it, so the sliding energy is squeezed between
    E_Q inf|Gamma| - sigma lambda V(t - delta) and E_Q sup|Gamma| - sigma lambda V(t + delta),
    where V(r) = vol{d > r} - vol{d < r}.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    prof = TruncatedProfile(p.eps, p.well)
    delta = prof.support
    EQ = prof.energy()
    grid_s = t[:, None] + np.linspace(-delta, delta, samples)[None, :]
    areas = tube_profile(M, grid_s.ravel()).level_measure.reshape(grid_s.shape)
    # the profile of |Gamma_s| is unimodal, so also include its exact peak
    peak = np.where(np.abs(t - (M.theta_star - np.pi / 2)) <= delta, level_area(M.n, np.pi / 2), 0.0)
    sup = np.maximum(areas.max(axis=1), peak)
    inf = np.minimum(areas[:, 0], areas[:, -1])
    inf = np.minimum(inf, areas.min(axis=1))

    def V(r):
        up = _upper_volume(M, r)
        return up - (M.total_volume - up)

    sl = p.sigma * p.lam
    lower = EQ * inf - sl * V(t - delta)
    upper = EQ * sup - sl * V(t + delta)
    return lower, upper


@dataclass
class SlideTrace:
    t: np.ndarray
    energy_coarea: np.ndarray
    energy_grid: np.ndarray | None = None

    def rows(self):
        eg = self.energy_grid if self.energy_grid is not None else np.full_like(self.t, np.nan)
        return zip(self.t, self.energy_coarea, eg)


@dataclass(frozen=True)
class SlideSummary:
    A2: float
    wall_lhs: float
    wall_rhs: float
    argmax_t: float
    max_energy: float
    max_path_energy: float
    tau: float | None
    passed: bool | None

    def as_dict(self):
        return asdict(self)


def slide_samples(M: Interface, p: EnergyParams, n_coarse=801, n_fine=801):
    diam = np.pi
    delta = TruncatedProfile(p.eps, p.well).support
    coarse = np.linspace(2 * diam, -2 * diam, n_coarse)
    fine = np.linspace(3 * delta, -3 * delta, n_fine)
    return np.unique(np.concatenate([coarse, fine, [0.0]]))[::-1]


def slide_maximum(M: Interface, p: EnergyParams, t=None):
    """(argmax_t, max) of the sliding energy, refined by a bounded 1-D search."""
    t = slide_samples(M, p) if t is None else t
    e = sliding_energy(M, p, t)
    i = int(np.argmax(e))
    lo, hi = t[min(i + 1, t.size - 1)], t[max(i - 1, 0)]
    lo, hi = min(lo, hi), max(lo, hi)
    if hi > lo:
        r = minimize_scalar(lambda x: -sliding_energy(M, p, x)[0], bounds=(lo, hi),
                            method="bounded", options={"xatol": 1e-12})
        if -r.fun >= e[i]:
            return float(r.x), float(-r.fun)
    return float(t[i]), float(e[i])


def constant_segments(p: EnergyParams, vol, num=17):
    """Energies along a_eps -> -1 and +1 -> b_eps through constants."""
    sc = stable_constants(p)
    c1 = np.linspace(sc.a_eps, -1.0, num)
    c2 = np.linspace(1.0, sc.b_eps, num)
    return c1, constant_energy(c1, p, vol), c2, constant_energy(c2, p, vol)


def recovery_trace(M: Interface, p: EnergyParams, grid=None, tau=None, t=None):
    """Sample the slide (co-area, and optionally grid) and summarize it."""
    t = slide_samples(M, p) if t is None else np.asarray(t, dtype=float)
    ec = sliding_energy(M, p, t)
    eg = sliding_energy_grid(grid, M, p, t) if grid is not None else None
    lim = limit_energies(M, p.lam, p.sigma)
    tmax, emax = slide_maximum(M, p, t)
    _, e1, _, e2 = constant_segments(p, M.total_volume)
    path_max = max(emax, float(e1.max()), float(e2.max()))
    passed = None if tau is None else bool(path_max < lim.A2 + tau)
    summary = SlideSummary(lim.A2, lim.wall_lhs, lim.wall_rhs, tmax, emax, path_max, tau, passed)
    return SlideTrace(t, ec, eg), summary


def eps_sweep(M: Interface, lam, eps_values, well=None):
    """Max sliding energy against eps; returns rows (eps, max, |max - A2|)."""
    rows = []
    for e in eps_values:
        p = EnergyParams(e, lam) if well is None else EnergyParams(e, lam, well)
        _, emax = slide_maximum(M, p)
        A2 = limit_energies(M, lam, p.sigma).A2
        rows.append((float(e), emax, abs(emax - A2)))
    return rows


def recovery_path(grid: SymmetricSphereGrid, M: Interface, p: EnergyParams, P=33,
                  n_const=16, n_slide=4000):
    """Initial path a_eps -> -1 -> slide -> +1 -> b_eps with P equal-arclength nodes."""
    sc = stable_constants(p)
    delta = TruncatedProfile(p.eps, p.well).support
    c1 = np.linspace(sc.a_eps, -1.0, n_const)
    c2 = np.linspace(1.0, sc.b_eps, n_const)
    t_hi = M.sigma_plus + delta + grid.dtheta
    t_lo = M.sigma_minus - delta - grid.dtheta
    t = np.linspace(t_hi, t_lo, n_slide)
    K = grid.K
    fine = np.concatenate([
        np.repeat(c1[:, None], K, axis=1),
        sliding_fields(grid, M, p, t),
        np.repeat(c2[:, None], K, axis=1),
    ])
    return PathOfFields(grid, reparametrize(grid, fine, P))


def latitude_family(M_or_dim, lam, num=2001):
    """F_lambda over latitude caps E_theta; returns (theta, values)."""
    n = M_or_dim.n if isinstance(M_or_dim, Interface) else int(M_or_dim) - 1
    th = np.linspace(0.0, np.pi, num)
    return th, level_area(n, th) - lam * cap_volume(n, th)


def cmc_candidates(lam, ambient_dim=2):
    """Latitude configurations whose boundary has mean curvature lambda toward E.

    A north cap needs cot(theta) = lambda / n, a south cap the mirror angle, and
    their union has two boundary components.  Returns name -> F_lambda.
    """
    M = Interface.cmc(lam, ambient_dim)
    single = M.area - lam * M.enclosed_volume
    return {"north_cap": single, "south_cap": single, "two_caps": 2.0 * single}
