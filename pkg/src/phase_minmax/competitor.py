"""Synthetic tangent-disk model of a non-embedded interface point.

Two flat n-disks of radius R touch at their common centre x0.  Over each disk
the normal coordinate t runs through (sigma^-(x), sigma^+) with

    sigma^-(x) = -min(C1 |x|^2, S-),    sigma^+ = S+,

the area element is theta_t = exp(-t (lambda + m t / 2)) and the level sets
have mean curvature H_t = lambda + m t.  The identification between the two
disks is the identity, so every field used here is radial and identical on
both disks, and integrals over the model reduce to

    2 |S^{n-1}| int_0^R (.) d^{n-1} dd.

Fields have the form Hbar_eps(t - g(x)).  Their energy is computed in the
scaled layer variable s = (t - g) / eps: unclipped layers use a moment
expansion of theta about t = g, clipped layers a direct Gauss-Legendre sum.
All energies are reported relative to A2, the model's own limit energy

    A2 = int_M (2 sigma - sigma lambda (int_0^{sigma+} theta - int_{sigma-}^0 theta)).

Set conventions: A_l = B_{2l} \\ B_l and B_l are measured on one disk
(area (2^n - 1) omega l^n and omega l^n); balls B_L used for the mass
conditions are counted on both disks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import InfeasibleModelError, ParameterError, PhaseMinmaxError, QuadratureError
from .potential import (
    BETA_STANDARD,
    STANDARD_WELL,
    TruncatedProfile,
    sigma_constant,
    smooth_step,
    smooth_step_derivative,
)

BASE_RTOL = 1e-6
ERR_RTOL = 1e-4  # remainder terms are differences of nearly equal values
MARGIN = 0.9  # every constant sits 10% inside its feasible range
TAU_FRACTION = 0.5


@lru_cache(maxsize=None)
def _gl(order):
    return np.polynomial.legendre.leggauss(order)


class PathAssertionError(PhaseMinmaxError, AssertionError):
    """A contradiction-path sample broke its energy bound."""

    def __init__(self, message, segment=None, r=None, inequality=None):
        self.segment = segment
        self.r = r
        self.inequality = inequality
        super().__init__(message)


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class CylinderModel:
    """Two tangent flat disks with the extremal tube data.

    Parameters
    ----------
    n : int
        Interface dimension (>= 2).
    R : float
        Disk radius.
    C1 : float
        Quadratic rate of sigma^- at the tangency point.
    lam, m : float
        Mean curvature and its growth rate along the normal.
    S_minus, S_plus : float
        Cap of -sigma^- and the constant sigma^+.
    """

    n: int = 2
    R: float = 1.0
    C1: float = 1.0
    lam: float = 1.0
    m: float = 1.0
    S_minus: float = 0.5
    S_plus: float = 3.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"n must be an integer >= 2, got {self.n!r}")
        for name in ("R", "C1", "lam", "m", "S_minus", "S_plus"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive, got {v!r}")

    # measures -------------------------------------------------------------
    @property
    def sphere_area(self):
        """|S^{n-1}|."""
        return 2.0 * math.pi ** (self.n / 2) / math.gamma(self.n / 2)

    @property
    def ball_volume(self):
        return self.sphere_area / self.n

    def ball(self, radius):
        """Measure of a ball of the given radius in one disk."""
        return self.ball_volume * np.minimum(radius, self.R) ** self.n

    @property
    def total_area(self):
        """H^n of both disks."""
        return 2.0 * self.ball(self.R)

    @property
    def diam(self):
        return max(self.S_plus, self.S_minus)

    @property
    def d_cap(self):
        """Distance beyond which sigma^- is capped."""
        return math.sqrt(self.S_minus / self.C1)

    @property
    def theta_max(self):
        return math.exp(self.lam ** 2 / (2.0 * self.m))

    # tube data ------------------------------------------------------------
    def sigma_minus(self, d):
        d = np.asarray(d, dtype=float)
        return -np.minimum(self.C1 * d * d, self.S_minus)

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-t * (self.lam + 0.5 * self.m * t))

    def theta_hat(self, t, d):
        """theta_t inside the open tube over distance d, 0 outside."""
        t = np.asarray(t, dtype=float)
        inside = (t > self.sigma_minus(d)) & (t < self.S_plus)
        return np.where(inside, self.theta(t), 0.0)

    def H(self, t):
        return self.lam + self.m * np.asarray(t, dtype=float)

    def theta_integral(self, a, b, order=24):
        """int_a^b theta_t dt (signed), elementwise."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        x, w = _gl(order)
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        t = mid[..., None] + half[..., None] * x
        return half * np.sum(w * self.theta(t), axis=-1)

    def tube_checks(self, samples=2001, h=1e-6):
        """Residuals of the tube identities on the model (all should vanish)."""
        t = np.linspace(-self.S_minus, self.S_plus, samples)[1:-1]
        dlog = (np.log(self.theta(t + h)) - np.log(self.theta(t - h))) / (2 * h)
        d = np.linspace(0.0, self.R, samples)[1:]
        return {
            "H_bound_gap": float(np.max(np.abs(self.H(t) - (self.lam + self.m * t)))),
            "theta_ode_residual": float(np.max(np.abs(dlog + self.H(t)))),
            "theta_over_max": float(np.max(self.theta(t)) - self.theta_max),
            "sigma_minus_at_x0": float(self.sigma_minus(0.0)),
            "sigma_minus_max_off_x0": float(np.max(self.sigma_minus(d))),
        }

    def as_dict(self):
        return {k: getattr(self, k) for k in ("n", "R", "C1", "lam", "m", "S_minus", "S_plus")}


def build_model(params=None, **kw):
    """CylinderModel from a mapping and/or keyword overrides."""
    args = dict(params or {})
    args.update(kw)
    try:
        return CylinderModel(**args)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None


# ---------------------------------------------------------------------------
# radial quadrature


def _panels(points, base, order=8):
    x, wx = _gl(order)
    ds, ws = [], []
    for u, v in zip(points[:-1], points[1:]):
        if not v > u:
            continue
        if u > 0 and v / u > 4.0:
            edges = np.geomspace(u, v, base * int(np.ceil(np.log2(v / u))) + 1)
        else:
            edges = np.linspace(u, v, base + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        ds.append((mid[:, None] + half[:, None] * x).ravel())
        ws.append((half[:, None] * wx).ravel())
    return np.concatenate(ds), np.concatenate(ws)


def _clean_points(model, points):
    p = np.asarray([q for q in points if np.isfinite(q)], dtype=float)
    p = np.clip(p, 0.0, model.R)
    return np.unique(np.concatenate([[0.0, model.R], p]))


def radial_integral(model, fn, points=(), rtol=1e-4, atol=0.0, base=2, max_base=256):
    """Integral over both disks of a radial function, refined until stable.

    The panel count is doubled until successive values agree to
    ``max(rtol |I|, atol)``.

    Raises
    ------
    QuadratureError
        If ``max_base`` is reached first.
    """
    pts = _clean_points(model, points)
    scale = 2.0 * model.sphere_area

    def at(b):
        d, w = _panels(pts, b)
        return scale * float(np.sum(w * fn(d) * d ** (model.n - 1)))

    prev = at(base)
    b = base
    while b < max_base:
        b *= 2
        cur = at(b)
        if abs(cur - prev) <= max(rtol * abs(cur), atol):
            return cur
        prev = cur
    raise QuadratureError("radial quadrature did not converge by panel doubling")


def _roots(phi, points, samples=48):
    """Sign changes of phi on each interval between consecutive points."""
    out = []
    for u, v in zip(points[:-1], points[1:]):
        if not v > u:
            continue
        if u > 0 and v / u > 4:
            x = np.geomspace(u, v, samples)
        else:
            x = np.linspace(u, v, samples)
        y = phi(x)
        for i in np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]:
            out.append(brentq(phi, x[i], x[i + 1], xtol=1e-15 * max(x[i + 1], 1e-300),
                              rtol=4 * np.finfo(float).eps))
    return out


# ---------------------------------------------------------------------------
# layer kernels

Q, C, P, DQ, QS = range(5)  # q, Hbar - sign, 0.5 Hbar'^2, sigma Hbar' - q, s q


class _Layer:
    """Kernels of the truncated profile in the scaled variable s."""

    J = 16

    def __init__(self, eps, well=STANDARD_WELL, sigma=None, width=0.25, order=8, cap=60.0):
        self.eps = float(eps)
        self.well = well
        self.prof = TruncatedProfile(self.eps, well)
        self.sigma = sigma_constant(well) if sigma is None else float(sigma)
        self.S = min(2.0 * self.prof.Lambda, cap)
        npan = max(int(np.ceil(2 * self.S / width)), 2)
        self.edges = np.linspace(-self.S, self.S, npan + 1)
        self.width = self.edges[1] - self.edges[0]
        self.order = order
        self.x, self.wx = _gl(order)
        half = 0.5 * self.width
        mid = 0.5 * (self.edges[1:] + self.edges[:-1])
        self.s = (mid[:, None] + half * self.x).ravel()
        self.w = np.tile(half * self.wx, npan)
        self.K = self.kernels(self.s)
        self.Kw = self.K * self.w
        powers = self.s[None, :] ** np.arange(2 * self.J + 1)[:, None]
        self.moments = self.Kw @ powers.T  # (5, 2J + 1)
        pm = (self.Kw[:, None, :] * powers[None]).reshape(5, 2 * self.J + 1, npan, order).sum(-1)
        self.cmom = np.concatenate([np.zeros((5, 2 * self.J + 1, 1)), np.cumsum(pm, axis=2)], axis=2)
        panel = self.Kw.reshape(5, npan, order).sum(-1)
        self.cum = np.concatenate([np.zeros((5, 1)), np.cumsum(panel, axis=1)], axis=1)
        self._coef = [(j, i, math.comb(j, i) / math.factorial(j))
                      for j in range(self.J + 1) for i in range(j + 1)]

    @property
    def support(self):
        return self.prof.support

    def kernels(self, s):
        s = np.asarray(s, dtype=float)
        v = self.prof.value_scaled(s)
        dv = self.prof.derivative_scaled(s)
        p = 0.5 * dv * dv
        q = p + self.well.value(v)
        sg = np.where(s > 0, 1.0, np.where(s < 0, -1.0, 0.0))
        return np.stack([q, v - sg, p, self.sigma * dv - q, s * q])

    def _series(self, alpha, beta, mom=None):
        # int K(s) exp(alpha s + beta s^2) ds by the moment expansion; mom is
        # (5, 2J + 1) or per point (5, 2J + 1, n)
        mom = self.moments[:, :, None] if mom is None else mom
        out = np.zeros((5, alpha.size))
        apow = [np.ones_like(alpha)]
        for _ in range(self.J):
            apow.append(apow[-1] * alpha)
        for j, i, c in self._coef:
            out += mom[:, j + i] * (c * apow[j - i] * beta ** i)[None, :]
        return out

    def _partial(self, model, g, a, b):
        E = self.edges
        ia = np.searchsorted(E, a, side="left")
        ib = np.searchsorted(E, b, side="right") - 1
        alpha = -self.eps * (model.lam + model.m * g)
        beta = -0.5 * model.m * self.eps ** 2
        eta = np.abs(alpha) * self.S + abs(beta) * self.S ** 2
        out = np.zeros((5, g.size))
        ser = eta <= 0.5
        if np.any(ser):
            ja, jb = np.clip(ia[ser], 0, E.size - 1), np.clip(ib[ser], 0, E.size - 1)
            mom = np.where((jb > ja)[None, None, :], self.cmom[:, :, jb] - self.cmom[:, :, ja], 0.0)
            out[:, ser] = model.theta(g[ser]) * self._series(alpha[ser], beta, mom)
        if np.any(~ser):
            pidx = np.arange(self.s.size) // self.order
            sel = ~ser
            mask = (pidx[None, :] >= ia[sel, None]) & (pidx[None, :] < ib[sel, None])
            th = np.where(mask, model.theta(g[sel, None] + self.eps * self.s[None, :]), 0.0)
            out[:, sel] = self.Kw @ th.T
        same = ib < ia
        e_a = E[np.minimum(ia, E.size - 1)]
        e_b = E[np.maximum(ib, 0)]
        u1, v1 = a, np.where(same, b, e_a)
        u2, v2 = np.where(same, b, e_b), b
        for u, v in ((u1, v1), (u2, v2)):
            half = 0.5 * np.maximum(v - u, 0.0)
            if not np.any(half > 0):
                continue
            sn = 0.5 * (u + v)[:, None] + half[:, None] * self.x
            Kp = self.kernels(sn.ravel()).reshape(5, g.size, self.order)
            wt = half[:, None] * self.wx * model.theta(g[:, None] + self.eps * sn)
            out += np.sum(Kp * wt[None], axis=-1)
        return out

    def window(self, model, g, lo, hi, chunk=1024):
        """A_K = int_{[lo, hi] cap [-S, S]} K(s) theta_{g + eps s} ds for all kernels."""
        g = np.atleast_1d(np.asarray(g, dtype=float))
        lo = np.broadcast_to(lo, g.shape)
        hi = np.broadcast_to(hi, g.shape)
        if g.size <= chunk:
            return self._window(model, g, lo, hi)
        return np.concatenate([self._window(model, g[i:i + chunk], lo[i:i + chunk], hi[i:i + chunk])
                               for i in range(0, g.size, chunk)], axis=1)

    def _window(self, model, g, lo, hi):
        S = self.S
        out = np.zeros((5, g.size))
        full = (lo <= -S) & (hi >= S)
        if np.any(full):
            gf = g[full]
            alpha = -self.eps * (model.lam + model.m * gf)
            beta = -0.5 * model.m * self.eps ** 2
            eta = np.abs(alpha) * S + abs(beta) * S * S
            vals = np.empty((5, gf.size))
            ser = eta <= 0.5
            if np.any(ser):
                vals[:, ser] = self._series(alpha[ser], beta)
            if np.any(~ser):
                E = np.exp(alpha[~ser, None] * self.s + beta * self.s ** 2)
                vals[:, ~ser] = self.Kw @ E.T
            out[:, full] = model.theta(gf) * vals
        a = np.maximum(lo, -S)
        b = np.minimum(hi, S)
        part = ~full & (b > a)
        if np.any(part):
            out[:, part] = self._partial(model, g[part], a[part], b[part])
        return out

    def cumulative(self, kind, z):
        """int_{-S}^{z} K_kind(s) ds."""
        z = np.clip(np.atleast_1d(np.asarray(z, dtype=float)), -self.S, self.S)
        npan = self.edges.size - 1
        ip = np.clip(np.floor((z + self.S) / self.width).astype(int), 0, npan - 1)
        start = self.edges[ip]
        half = 0.5 * (z - start)
        sn = 0.5 * (z + start)[:, None] + half[:, None] * self.x
        piece = np.sum(self.kernels(sn.ravel())[kind].reshape(sn.shape) * self.wx, axis=1) * half
        return self.cum[kind, ip] + piece


@lru_cache(maxsize=64)
def _layer(eps, well=STANDARD_WELL):
    return _Layer(eps, well)


# ---------------------------------------------------------------------------
# bump functions


@dataclass(frozen=True)
class BumpPair:
    """Push-out function f and capacity cutoff f_tilde (radial, same on both disks).

    f = -1 on B_l and 0 outside B_{2l}, through a smooth step with
    max |f'| = 2 / l.  f_tilde = 0 on B_{L/k}, 1 outside B_L, and between them
    the capacity profile (logarithmic when n = 2).
    """

    l: float
    L: float
    k: float
    n: int = 2

    @property
    def a(self):
        return self.L / self.k

    def f(self, d):
        return smooth_step((np.asarray(d, dtype=float) - self.l) / self.l) - 1.0

    def df(self, d):
        return smooth_step_derivative((np.asarray(d, dtype=float) - self.l) / self.l) / self.l

    def _denom(self):
        if self.n == 2:
            return math.log(self.k)
        return self.a ** (2 - self.n) - self.L ** (2 - self.n)

    def ft(self, d):
        d = np.clip(np.asarray(d, dtype=float), self.a, self.L)
        if self.n == 2:
            return np.log(d / self.a) / math.log(self.k)
        return (self.a ** (2 - self.n) - d ** (2 - self.n)) / self._denom()

    def dft(self, d):
        d = np.asarray(d, dtype=float)
        inside = (d > self.a) & (d < self.L)
        dd = np.where(inside, d, 1.0)
        if self.n == 2:
            val = 1.0 / (dd * math.log(self.k))
        else:
            val = (self.n - 2) * dd ** (1 - self.n) / self._denom()
        return np.where(inside, val, 0.0)

    @property
    def grad_f_bound(self):
        return 2.0 / self.l

    def ft_energy(self, model):
        """||grad f_tilde||^2 over both disks, closed form."""
        if self.n == 2:
            return 2.0 * model.sphere_area / math.log(self.k)
        return 2.0 * model.sphere_area * (self.n - 2) / self._denom()

    @property
    def points(self):
        return (self.l, 2 * self.l, self.a, self.L)


def capacity_energy(model, L, k, rtol=1e-10):
    """||grad f_tilde||^2 over both disks by radial quadrature."""
    b = BumpPair(l=L / k / 4, L=L, k=k, n=model.n)
    return radial_integral(model, lambda d: b.dft(d) ** 2, (b.a, b.L), rtol=rtol)


def bump_functions(ledger, model):
    """BumpPair of a chosen ledger, after checking ||grad f_tilde||^2 < gamma."""
    b = BumpPair(ledger.l.value, ledger.L.value, ledger.k.value, model.n)
    e = capacity_energy(model, b.L, b.k)
    if not e < ledger.gamma.value:
        raise InfeasibleModelError(
            f"||grad f_tilde||^2 = {e:.6g} is not below gamma = {ledger.gamma.value:.6g}; "
            "increase k", remark="Choice of gamma and k")
    return b


# ---------------------------------------------------------------------------
# schedules


SCHEDULE_NAMES = {1: "g1", 2: "g2", 3: "g3", 4: "g4", 5: "g5", 6: "g6", 7: "g7"}


@dataclass(frozen=True)
class Schedule:
    """The deformation g_i(r, x) of the competitor construction (radial in x)."""

    index: int
    bumps: BumpPair
    rho: float
    r0: float
    diam: float

    def __post_init__(self):
        if self.index not in SCHEDULE_NAMES:
            raise ParameterError(f"schedule index must be 1..7, got {self.index!r}")

    @property
    def name(self):
        return SCHEDULE_NAMES[self.index]

    @property
    def r_range(self):
        i = self.index
        if i in (1, 3, 6):
            return (0.0, self.rho)
        if i in (2, 4):
            return (0.0, self.r0)
        if i == 5:
            return (self.r0, 2 * self.diam)
        return (self.rho, 2 * self.diam)

    def check_r(self, r):
        lo, hi = self.r_range
        if not (lo - 1e-15 * max(hi, 1.0) <= r <= hi + 1e-15 * max(hi, 1.0)):
            raise ParameterError(f"{self.name}: r = {r!r} outside [{lo!r}, {hi!r}]")

    def g(self, r, d):
        b, i = self.bumps, self.index
        if i == 1:
            return r * b.f(d)
        if i == 2:
            return self.rho * b.f(d) + r * b.ft(d)
        if i == 3:
            return self.r0 * b.ft(d) + (self.rho - r) * b.f(d)
        if i == 4:
            return (self.r0 - r) * b.ft(d) + r
        if i == 5:
            return np.full(np.shape(d), float(r))
        if i == 6:
            return self.rho * b.f(d) - r * (1.0 + b.f(d))
        return np.full(np.shape(d), -float(r))

    def gd(self, r, d):
        """Radial derivative of g (|grad g| = |gd|)."""
        b, i = self.bumps, self.index
        if i == 1:
            return r * b.df(d)
        if i == 2:
            return self.rho * b.df(d) + r * b.dft(d)
        if i == 3:
            return self.r0 * b.dft(d) + (self.rho - r) * b.df(d)
        if i == 4:
            return (self.r0 - r) * b.dft(d)
        if i == 6:
            return (self.rho - r) * b.df(d)
        return np.zeros(np.shape(d))

    def dr(self, r, d):
        """Partial derivative of g in r."""
        b, i = self.bumps, self.index
        if i == 1:
            return b.f(d)
        if i == 2:
            return b.ft(d)
        if i == 3:
            return -b.f(d)
        if i == 4:
            return 1.0 - b.ft(d)
        if i == 5:
            return np.ones(np.shape(d))
        if i == 6:
            return -(1.0 + b.f(d))
        return -np.ones(np.shape(d))


# ---------------------------------------------------------------------------
# energies


def model_A2(model, well=STANDARD_WELL):
    """Limit energy of the unperturbed two-sheet interface."""
    sigma = sigma_constant(well)
    up = float(model.theta_integral(0.0, model.S_plus))

    def dens(d):
        return 2 * sigma - sigma * model.lam * (up - model.theta_integral(model.sigma_minus(d), 0.0))

    return radial_integral(model, dens, (model.d_cap,), rtol=1e-13)


def tube_volume(model):
    """H^{n+1} of the tube over both disks."""
    return radial_integral(
        model, lambda d: model.theta_integral(model.sigma_minus(d), model.S_plus),
        (model.d_cap,), rtol=1e-13)


def _field_points(model, layer, g, extra=()):
    base = _clean_points(model, (model.d_cap,) + tuple(extra))
    cuts = []
    w = layer.eps * layer.S
    for c in (-w, 0.0, w):
        cuts += _roots(lambda d, c=c: model.sigma_minus(d) - g(d) - c, base)
        cuts += _roots(lambda d, c=c: model.S_plus - g(d) - c, base)
    return tuple(base) + tuple(cuts)


def _excess_density(model, layer, d, gv, gdv):
    sm = model.sigma_minus(d)
    sp = model.S_plus
    eps = layer.eps
    A = layer.window(model, gv, (sm - gv) / eps, (sp - gv) / eps)
    gc = np.clip(gv, sm, sp)
    sign_part = -2.0 * model.theta_integral(np.zeros_like(gc), gc)
    sl = layer.sigma * model.lam
    return A[Q] - 2 * layer.sigma + gdv * gdv * A[P] - sl * (sign_part + eps * A[C])


def field_excess(model, layer, g, gd, extra=(), rtol=1e-6, atol=1e-20):
    """F(Hbar(t - g)) - A2 for radial g, gd (callables of distance)."""
    pts = _field_points(model, layer, g, extra)
    return radial_integral(model, lambda d: _excess_density(model, layer, d, g(d), gd(d)),
                           pts, rtol=rtol, atol=atol)


def _stable_root(well, c0, target):
    c = c0
    for _ in range(50):
        step = (well.first(c) - target) / well.second(c)
        c -= step
        if abs(step) <= 4e-16 * abs(c):
            break
    return float(c)


def stable_pair(eps, lam, well=STANDARD_WELL):
    """(a_eps, b_eps) resolved to machine precision by Newton from -1 and 1."""
    f = eps * sigma_constant(well) * lam
    return _stable_root(well, -1.0, f), _stable_root(well, 1.0, f)


def constant_excess(model, layer, c, vol=None, A2=None):
    """F(c) - A2 for constant fields c."""
    vol = tube_volume(model) if vol is None else vol
    A2 = model_A2(model, layer.well) if A2 is None else A2
    c = np.asarray(c, dtype=float)
    return (layer.well.value(c) / layer.eps - layer.sigma * model.lam * c) * vol - A2


# ---------------------------------------------------------------------------
# constants ledger


@dataclass
class Inequality:
    label: str
    lhs: float
    rhs: float
    op: str = "<"  # "<", "<=", ">", ">="

    @property
    def passed(self):
        a, b = self.lhs, self.rhs
        return bool({"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[self.op])

    @property
    def margin(self):
        """Slack on the satisfied side (negative when violated)."""
        return float(self.rhs - self.lhs) if self.op in ("<", "<=") else float(self.lhs - self.rhs)

    def as_dict(self):
        return {"label": self.label, "lhs": float(self.lhs), "op": self.op,
                "rhs": float(self.rhs), "margin": self.margin, "pass": self.passed}


@dataclass
class LedgerEntry:
    name: str
    value: float
    remark: str
    inequalities: list = field(default_factory=list)

    @property
    def passed(self):
        return all(q.passed for q in self.inequalities)

    def as_dict(self):
        return {"value": float(self.value), "remark": self.remark, "pass": self.passed,
                "inequalities": [q.as_dict() for q in self.inequalities]}


ORDER = ("delta", "L", "k", "r0", "rho", "l", "gamma", "tau", "eps_tau")


@dataclass
class ConstantsLedger:
    """Constants chosen in the order delta, L, k, r0, rho, l, tau, eps_tau."""

    delta: LedgerEntry
    L: LedgerEntry
    k: LedgerEntry
    r0: LedgerEntry
    rho: LedgerEntry
    l: LedgerEntry
    gamma: LedgerEntry
    tau: LedgerEntry
    eps_tau: LedgerEntry | None
    measured: dict
    assumed: dict

    def entries(self):
        return [getattr(self, k) for k in ORDER if getattr(self, k) is not None]

    @property
    def varsigma(self):
        return self.measured["varsigma"]

    def failures(self):
        return [(e.name, q.label) for e in self.entries() for q in e.inequalities if not q.passed]

    @property
    def passed(self):
        return not self.failures()

    def as_dict(self):
        out = {e.name: e.as_dict() for e in self.entries()}
        out["measured"] = {k: float(v) for k, v in self.measured.items()}
        out["assumed"] = dict(self.assumed)
        out["pass"] = self.passed
        return out

    def to_json(self, **kw):
        return json.dumps(self.as_dict(), **kw)


def _bisect(pred, lo, hi, log=False, iters=200, rel=1e-13):
    """Boundary of {pred} on [lo, hi] given pred(lo) != pred(hi)."""
    plo = pred(lo)
    for _ in range(iters):
        mid = math.sqrt(lo * hi) if log else 0.5 * (lo + hi)
        if pred(mid) == plo:
            lo = mid
        else:
            hi = mid
        if abs(hi - lo) <= rel * abs(hi):
            break
    return lo, hi


def _sup_feasible(pred, lo, hi, remark, what, log=False):
    """Largest x in (lo, hi] with pred(x), assuming feasibility near lo."""
    if pred(hi):
        return hi
    if not pred(lo):
        raise InfeasibleModelError(f"no feasible {what} in ({lo:.3g}, {hi:.3g}]", remark=remark,
                                   report={"constant": what, "lo": lo, "hi": hi})
    a, _ = _bisect(pred, lo, hi, log=log)
    return a


def _G(model, bumps, r0, r):
    """G(r) = int_{A_L^k} |grad f_tilde|^2 theta_{g4(r, x)}."""
    def fn(d):
        return bumps.dft(d) ** 2 * model.theta((r0 - r) * bumps.ft(d) + r)
    return radial_integral(model, fn, (bumps.a, bumps.L), rtol=1e-10)


def _C6(model, bumps, R0=1.0):
    t = np.linspace(0.0, R0, 4001)
    sup = float(np.max(np.abs(model.H(t) * model.theta(t))))
    integral = radial_integral(model, lambda d: bumps.dft(d) ** 2 * (1.0 - bumps.ft(d)),
                               (bumps.a, bumps.L), rtol=1e-10)
    return integral * sup


def _C3(model, bumps, sigma, rho):
    """sup over r in (0, rho] of sigma l^2 int |grad f|^2 theta_{r f} / H(A_l)."""
    l = bumps.l
    area_A = model.ball(2 * l) - model.ball(l)
    best = 0.0
    for r in np.linspace(0.0, rho, 9)[1:]:
        val = radial_integral(model, lambda d, r=r: bumps.df(d) ** 2 * model.theta(r * bumps.f(d)),
                              (l, 2 * l), rtol=1e-10)
        best = max(best, sigma * l * l * val / area_A)
    return best


def _r_grid(r0, num=33):
    return np.linspace(0.0, r0, num)


def choose_constants(model: CylinderModel, well=STANDARD_WELL, tau_fraction=TAU_FRACTION,
                     find_eps=True, eps_bounds=(1e-16, 1e-4)):
    """Resolve the constants in order, each 10% inside its feasible range.

    Raises
    ------
    InfeasibleModelError
        Naming the first remark whose inequality cannot be met.
    """
    n = model.n
    sigma = sigma_constant(well)
    Hm = model.total_area
    ratio_n = 2 ** n - 1
    dgrid = np.linspace(0.0, model.R, 20001)[1:]
    C1 = float(np.max(-model.sigma_minus(dgrid) / dgrid ** 2))

    # delta: the whole model stands for the ball about the non-embedded point
    delta = LedgerEntry("delta", model.R, "Choice of delta for mean curvature bounds",
                        [Inequality("delta <= R", model.R, model.R, "<=")])
    assumed = {
        "mean_curvature_bounds_in_B_delta": True,
        "diffeomorphisms_F_i_on_B_delta": True,
        "dPsi_identity_at_x0": True,
    }

    # L: mass outside B_L (both disks) above 3/4 of the total
    def L_ok(L):
        return Hm - 2 * model.ball(L) > 0.75 * Hm

    L_star = _sup_feasible(L_ok, 1e-12 * model.R, delta.value, "Second choice of L", "L")
    L = MARGIN * L_star
    L_entry = LedgerEntry("L", L, "Second choice of L", [
        Inequality("H(M \\ B_L) > 3/4 H(M)", Hm - 2 * model.ball(L), 0.75 * Hm, ">"),
        Inequality("L <= delta", L, delta.value, "<="),
    ])

    # gamma and k
    R0 = min(1.0, model.diam / 2)
    tt = np.linspace(0.0, R0, 4001)
    C3p = sigma * float(np.max(model.theta(tt)))
    gamma = (model.m * sigma / 4.0) * Hm / C3p

    def k_ok(k):
        return BumpPair(1.0, L, k, n).ft_energy(model) <= MARGIN * gamma

    kmax = 1e300
    if not k_ok(kmax):
        raise InfeasibleModelError(
            "capacity of B_{L/k} cannot be pushed below gamma (R too small for L?)",
            remark="Choice of gamma and k", report={"gamma": gamma, "L": L})
    _, k = _bisect(k_ok, 2.0, kmax, log=True)
    gamma_entry = LedgerEntry("gamma", gamma, "Choice of gamma and k", [
        Inequality("gamma = (m sigma / 4) H(M) / C3'", gamma, gamma, "<=")])
    ft_energy = BumpPair(1.0, L, k, n).ft_energy(model)
    k_entry = LedgerEntry("k", k, "Choice of gamma and k", [
        Inequality("||grad f_tilde||^2 < gamma", ft_energy, gamma, "<"),
    ])

    # r0 from the half-measure condition and the claim on G
    probe = BumpPair(L / k / 4, L, k, n)
    C6 = _C6(model, probe, R0)

    def r0_ok(r0):
        if not model.S_plus > 2 * r0:
            return False
        if not Hm - 2 * model.ball(L) > 0.5 * Hm:
            return False
        G = [_G(model, probe, r0, r) for r in _r_grid(r0, 9)]
        return r0 < G[0] / C6 and min(G) >= 0.5 * G[0]

    r_hi = min(1.0, model.diam / 2) * (1 - 1e-12)
    r0 = MARGIN * _sup_feasible(r0_ok, 1e-9, r_hi, "Claim on r0", "r0")
    G = [_G(model, probe, r0, r) for r in _r_grid(r0)]
    r0_entry = LedgerEntry("r0", r0, "Claim on r0", [
        Inequality("r0 < min(1, diam/2)", r0, min(1.0, model.diam / 2), "<"),
        Inequality("r0 < G(0) / C6", r0, G[0] / C6, "<"),
        Inequality("min G >= G(0)/2", min(G), 0.5 * G[0], ">="),
        Inequality("H(Omega_r \\ B_L) > H(M)/2 for r <= r0",
                   (Hm - 2 * model.ball(L)) if model.S_plus > 2 * r0 else 0.0, 0.5 * Hm, ">"),
    ])

    # rho (all constraints jointly) and l(rho)
    a = L / k

    def l_of(rho):
        return _bisect(lambda t: -min(C1 * t * t, model.S_minus) >= -rho, 0.0, model.R)[0]

    def rho_ok(rho):
        if rho >= model.S_minus or rho >= 0.5 * r0 ** 2:
            return False
        l = math.sqrt(rho / model.C1)
        if not 2 * l < a:
            return False
        if not model.ball_volume * l ** n < model.m * Hm * r0 ** 2 / 4:
            return False
        c3 = _C3(model, BumpPair(l, L, k, n), sigma, rho)
        return c3 * rho / l ** 2 * rho < sigma / (2 * ratio_n)

    rho = MARGIN * _sup_feasible(rho_ok, 1e-300, min(model.S_minus, 1.0) * (1 - 1e-12),
                                 "Choice of rho based on r0 and L", "rho", log=True)
    l = l_of(rho)
    bumps = BumpPair(l, L, k, n)
    C3 = _C3(model, bumps, sigma, rho)
    area_A = model.ball(2 * l) - model.ball(l)
    area_B = model.ball(l)
    rho_entry = LedgerEntry("rho", rho, "Choice of rho based on r0", [
        Inequality("rho < r0^2 / 2", rho, 0.5 * r0 ** 2, "<"),
        Inequality("sigma H(A_l)/(2^n-1) < m sigma H(M) r0^2 / 4",
                   sigma * area_A / ratio_n, model.m * sigma * Hm * r0 ** 2 / 4, "<"),
        Inequality("C3 rho^2 / l^2 < sigma / (2(2^n-1))", C3 * rho ** 2 / l ** 2,
                   sigma / (2 * ratio_n), "<"),
        Inequality("rho < S-", rho, model.S_minus, "<"),
    ])
    l_entry = LedgerEntry("l", l, "l of rho", [
        Inequality("rho <= C1 l^2", rho, C1 * l * l * (1 + 1e-12), "<="),
        Inequality("2l < L/k", 2 * l, a, "<"),
        Inequality("H(B_l)/H(A_l) > 7/(8(2^n-1))", area_B / area_A, 7.0 / (8 * ratio_n), ">"),
        Inequality("|grad f| <= 2/l", float(np.max(bumps.df(np.linspace(l, 2 * l, 20001)))),
                   2.0 / l * (1 + 1e-12), "<="),
    ])

    varsigma = sigma * area_A / (2 * ratio_n)
    tau = tau_fraction * varsigma
    tau_entry = LedgerEntry("tau", tau, "Choice of tau", [
        Inequality("tau > 0", tau, 0.0, ">"),
        Inequality("tau < varsigma", tau, varsigma, "<"),
    ])
    measured = {
        "sigma": sigma, "C1": C1, "C3": C3, "C3_prime": C3p, "C6": C6,
        "H_M": Hm, "H_A_l": area_A, "H_B_l": area_B, "varsigma": varsigma,
        "A2_model": model_A2(model, well), "ft_energy": ft_energy,
        "beta": BETA_STANDARD,
    }
    ledger = ConstantsLedger(delta, L_entry, k_entry, r0_entry, rho_entry, l_entry,
                             gamma_entry, tau_entry, None, measured, assumed)
    if find_eps:
        eps_tau = find_eps_tau(model, ledger, well, *eps_bounds)
        ledger.eps_tau = eps_entry(model, ledger, eps_tau, well)
    return ledger


def eps_entry(model, ledger, eps_tau, well=STANDARD_WELL):
    layer = _layer(eps_tau, well)
    rho = ledger.rho.value
    rep = contradiction_path(model, ledger, eps_tau, well=well, budget_only=True)
    return LedgerEntry("eps_tau", eps_tau, "Choice of eps_tau", [
        Inequality("2 eps Lambda < rho / 4 (P_eps(rho) > 3/(4(2^n-1)))", layer.support, rho / 4, "<"),
        Inequality("|F(v_eps) - A2| + R_eps < tau", rep.budget, ledger.tau.value, "<"),
    ])


def make_schedule(model, ledger, i):
    b = BumpPair(ledger.l.value, ledger.L.value, ledger.k.value, model.n)
    return Schedule(i, b, ledger.rho.value, ledger.r0.value, model.diam)


# ---------------------------------------------------------------------------
# base computation


def schedule_excess(model, sched, r, eps, well=STANDARD_WELL, rtol=1e-6):
    """F(v^{r, g_i}) - A2."""
    layer = _layer(eps, well)
    return field_excess(model, layer, lambda d: sched.g(r, d), lambda d: sched.gd(r, d),
                        sched.bumps.points, rtol=rtol)


def schedule_energy(model, ledger, i, r, eps, well=STANDARD_WELL):
    """F(v^{r, g_i}) - F(v_eps)."""
    s = make_schedule(model, ledger, i)
    s.check_r(r)
    layer = _layer(eps, well)
    zero = field_excess(model, layer, lambda d: np.zeros_like(d), lambda d: np.zeros_like(d),
                        s.bumps.points)
    return schedule_excess(model, s, r, eps, well) - zero


def base_terms(model, sched, r, eps, well=STANDARD_WELL):
    """(I, II, ThetaErr) of F(v^{r,g}) - F(v^{0,g}) for a radial schedule.

    I carries the tangential-gradient change, II the rest; ThetaErr is
    lambda int_0^r int (Theta^1 - Theta^2), the remainder in the
    integration-by-parts form of II (see :func:`ii_decomposition`).
    Each gradient term is weighted by its own layer, so I + II equals the
    energy difference also when g(0, .) is not constant.
    """
    layer = _layer(eps, well)
    sigma, eps_ = layer.sigma, layer.eps
    sp = model.S_plus
    g0 = lambda d: sched.g(0.0, d)  # noqa: E731
    gr = lambda d: sched.g(r, d)  # noqa: E731
    pts = sched.bumps.points + _field_points(model, layer, g0) + _field_points(model, layer, gr)

    def A(d, g):
        sm = model.sigma_minus(d)
        return layer.window(model, g, (sm - g) / eps_, (sp - g) / eps_)

    def I_dens(d):
        return sched.gd(r, d) ** 2 * A(d, gr(d))[P] - sched.gd(0.0, d) ** 2 * A(d, g0(d))[P]

    def II_dens(d):
        sm = model.sigma_minus(d)
        a, b = g0(d), gr(d)
        Aa, Ab = A(d, a), A(d, b)
        sa = -2 * model.theta_integral(np.zeros_like(d), np.clip(a, sm, sp))
        sb = -2 * model.theta_integral(np.zeros_like(d), np.clip(b, sm, sp))
        return (Ab[Q] - Aa[Q]) - sigma * model.lam * ((sb - sa) + eps_ * (Ab[C] - Aa[C]))

    dec = ii_decomposition(model, sched, r, eps, well)
    I = radial_integral(model, I_dens, pts, rtol=BASE_RTOL, atol=1e-300)
    II = radial_integral(model, II_dens, pts, rtol=BASE_RTOL, atol=1e-300)
    return I, II, dec["theta"]


def ii_decomposition(model, sched, r, eps, well=STANDARD_WELL):
    """II split into boundary terms at sigma^+/-, the (lambda - H) term and ThetaErr.

    Every integrand depends on s only through u = g(s, x), and g is affine in
    s, so the s-integrals become integrals in u from g(0, x) to g(r, x).  The
    boundary terms then reduce to differences of the cumulative layer energy.
    """
    layer = _layer(eps, well)
    eps_ = layer.eps
    sp = model.S_plus
    g0 = lambda d: sched.g(0.0, d)  # noqa: E731
    gr = lambda d: sched.g(r, d)  # noqa: E731
    pts = sched.bumps.points + _field_points(model, layer, g0) + _field_points(model, layer, gr)

    def bnd_plus(d):
        a, b = g0(d), gr(d)
        th = float(model.theta(sp))
        return -th * (layer.cumulative(Q, (sp - a) / eps_) - layer.cumulative(Q, (sp - b) / eps_))

    def bnd_minus(d):
        a, b = g0(d), gr(d)
        sm = model.sigma_minus(d)
        return model.theta(sm) * (layer.cumulative(Q, (sm - a) / eps_)
                                  - layer.cumulative(Q, (sm - b) / eps_))

    def lam_h(d):
        a, b = g0(d), gr(d)
        return _u_part(model, layer, d, a, b, theta=False)

    def theta_part(d):
        a, b = g0(d), gr(d)
        return _u_part(model, layer, d, a, b, theta=True)

    out = {}
    for key, fn in (("boundary_plus", bnd_plus), ("boundary_minus", bnd_minus),
                    ("lambda_minus_H", lam_h), ("theta", theta_part)):
        out[key] = radial_integral(model, fn, pts, rtol=BASE_RTOL, atol=1e-300)
    out["total"] = sum(out.values())
    return out


def _u_part(model, layer, d, a, b, theta, order=16):
    eps = layer.eps
    sm = model.sigma_minus(d)
    sp = model.S_plus
    w = eps * layer.S
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    cands = np.stack([sm - w, sm + w, np.full_like(sm, sp - w), np.full_like(sm, sp + w),
                      sm, np.full_like(sm, sp)], axis=1)
    bp = np.sort(np.concatenate([lo[:, None], hi[:, None],
                                 np.clip(cands, lo[:, None], hi[:, None])], axis=1), axis=1)
    x, wx = _gl(order)
    total = np.zeros(np.shape(d))
    for j in range(bp.shape[1] - 1):
        u0, u1 = bp[:, j], bp[:, j + 1]
        half = 0.5 * (u1 - u0)
        if not np.any(half > 0):
            continue
        un = 0.5 * (u0 + u1)[:, None] + half[:, None] * x
        uf = un.ravel()
        smf = np.repeat(sm, order)
        Aw = layer.window(model, uf, (smf - uf) / eps, (sp - uf) / eps)
        if theta:
            val = model.lam * Aw[DQ]
        else:
            val = -model.m * (uf * Aw[Q] + eps * Aw[QS])
        total += half * np.sum(wx * val.reshape(un.shape), axis=1)
    return np.sign(b - a) * total


# ---------------------------------------------------------------------------
# g1 ledger: P_eps and kappa


def P_eps(model, ledger, eps, r, well=STANDARD_WELL):
    """H({x in B_l : -r + 2 eps Lambda <= sigma^-(x) <= 0}) / H(A_l) (one disk)."""
    l = ledger.l.value
    w = _layer(eps, well).support
    area_A = model.ball(2 * l) - model.ball(l)
    thr = w - r
    if thr > 0:
        return 0.0
    pts = (l, min(math.sqrt(-thr / model.C1), model.R) if -thr < model.S_minus else model.R)
    val = radial_integral(model, lambda d: ((d <= l) & (model.sigma_minus(d) >= thr)).astype(float),
                          pts, rtol=1e-12)
    return 0.5 * val / area_A


def kappa(model, ledger, eps, s, well=STANDARD_WELL):
    """kappa_eps(s) = C3 (rho/l)^2 s^2 - 2 sigma P_eps(s rho), zero below 4 eps Lambda / rho."""
    rho, l = ledger.rho.value, ledger.l.value
    w = _layer(eps, well).support
    if s < 2 * w / rho:
        return 0.0
    C3 = ledger.measured["C3"]
    return C3 * (rho / l) ** 2 * s * s - 2 * ledger.measured["sigma"] * P_eps(model, ledger, eps, s * rho, well)


def kappa_measured(model, ledger, eps, s, well=STANDARD_WELL):
    """(F(v^{s rho, g1}) - F(v_eps)) / H(A_l) by direct quadrature."""
    return schedule_energy(model, ledger, 1, s * ledger.rho.value, eps, well) / ledger.measured["H_A_l"]


# ---------------------------------------------------------------------------
# error terms


def theta_diff(model, x, y):
    """theta(x) - theta(y) without cancellation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dphi = (y - x) * (model.lam + 0.5 * model.m * (x + y))  # phi(y) - phi(x)
    return model.theta(y) * np.expm1(dphi)


def _window(model, T, d, lo_off, hi_off):
    """Peak point, minimizing endpoint and the out-of-tube flag for [T - lo_off, T + hi_off]."""
    T = np.asarray(T, dtype=float)
    sm = model.sigma_minus(d)
    sp = model.S_plus
    left, right = T - lo_off, T + hi_off
    a = np.maximum(left, sm)
    b = np.minimum(right, sp)
    nonempty = b > a
    peak = np.clip(-model.lam / model.m, a, b)
    out = (left < sm) | (right > sp)
    emin = np.where(model.theta(left) <= model.theta(right), left, right)
    return peak, emin, out, nonempty


def m_eps(model, T, d, w):
    """max - min of theta_hat over [T - w, T + w] at distance d."""
    peak, emin, out, nonempty = _window(model, T, d, w, w)
    mx = np.where(nonempty, model.theta(peak), 0.0)
    return np.where(out, mx, theta_diff(model, peak, emin))


def zeta_window(model, g, d, w, which):
    """max (which=3) or min (which=4) of theta_hat over [g - w, g + w] minus theta_hat(g)."""
    g = np.asarray(g, dtype=float)
    peak, emin, out, nonempty = _window(model, g, d, w, w)
    sm = model.sigma_minus(d)
    inside = (g > sm) & (g < model.S_plus)
    th_g = np.where(inside, model.theta(g), 0.0)
    if which == 3:
        mx = np.where(nonempty, model.theta(peak), 0.0)
        return np.where(inside, theta_diff(model, peak, g), mx)
    return np.where(out, -th_g, np.where(inside, theta_diff(model, emin, g), 0.0))


def _window_range(model, d, lo, hi, fn, samples=257):
    """(max, min) of fn(t) over [lo, hi] intersected with the tube, per node."""
    sm = model.sigma_minus(d)
    a = np.maximum(lo, sm)
    b = np.minimum(hi, model.S_plus)
    t = a[:, None] + (b - a)[:, None] * np.linspace(0.0, 1.0, samples)
    v = fn(t)
    ok = (b > a)[:, None]
    return np.where(ok[:, 0], v.max(axis=1), 0.0), np.where(ok[:, 0], v.min(axis=1), 0.0)


def M_eps(model, sched, r, eps, well=STANDARD_WELL):
    """int_M |int_{g(0,x)}^{g(r,x)} m_eps(T, x) dT|."""
    layer = _layer(eps, well)
    w = layer.support
    sp = model.S_plus

    def dens(d):
        a, b = sched.g(0.0, d), sched.g(r, d)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        sm = model.sigma_minus(d)
        cands = np.stack([sm - w, sm + w, np.full_like(sm, sp - w), np.full_like(sm, sp + w),
                          np.full_like(sm, -model.lam / model.m - w),
                          np.full_like(sm, -model.lam / model.m + w)], axis=1)
        bp = np.sort(np.concatenate([lo[:, None], hi[:, None],
                                     np.clip(cands, lo[:, None], hi[:, None])], axis=1), axis=1)
        x, wx = _gl(16)
        tot = np.zeros(d.size)
        for j in range(bp.shape[1] - 1):
            u0, u1 = bp[:, j], bp[:, j + 1]
            half = 0.5 * (u1 - u0)
            Tn = 0.5 * (u0 + u1)[:, None] + half[:, None] * x
            tot += half * np.sum(wx * m_eps(model, Tn, d[:, None], w), axis=1)
        return tot

    pts = list(sched.bumps.points) + [model.d_cap]
    base = _clean_points(model, pts)
    for gfun in (lambda d: sched.g(0.0, d), lambda d: sched.g(r, d)):
        for c in (-w, w):
            pts += _roots(lambda d, c=c, gfun=gfun: model.sigma_minus(d) - gfun(d) - c, base)
    return radial_integral(model, dens, pts, rtol=ERR_RTOL, atol=1e-300)


def _annulus_points(bumps):
    return (bumps.a, bumps.L)


def error_terms(model, ledger, eps, well=STANDARD_WELL, r_samples=9):
    """All remainder quantities at one eps."""
    layer = _layer(eps, well)
    w = layer.support
    b = BumpPair(ledger.l.value, ledger.L.value, ledger.k.value, model.n)
    l, m = b.l, model.m
    sigma = layer.sigma

    def ind_ball(rad):
        return lambda d: (d <= rad).astype(float)

    # measure of {sigma^- >= -2 eps Lambda} over both disks
    cut = math.sqrt(w / model.C1) if w < model.S_minus else model.R
    meas = radial_integral(model, lambda d: (model.sigma_minus(d) >= -w).astype(float),
                           (cut,), rtol=1e-12)

    def q1(d):
        return _window_range(model, d, -2 * w, w, lambda t: m * t * model.theta(t))[0]

    def q2(d):
        return _window_range(model, d, -w, 2 * w, lambda t: -m * t * model.theta(t))[0]

    q1_int = radial_integral(model, lambda d: q1(d) * (d <= 2 * l), (2 * l,), rtol=ERR_RTOL, atol=1e-300)
    q1_max = float(np.max(q1(np.linspace(0, 2 * l, 257))))
    inA = lambda d: (d >= b.a) & (d <= b.L)  # noqa: E731
    q2_int = radial_integral(model, lambda d: q2(d) * inA(d), _annulus_points(b), rtol=ERR_RTOL, atol=1e-300)

    def mwin(lo, hi):
        def fn(d):
            sm = model.sigma_minus(d)
            T = 0.5 * (lo + hi)
            return m_eps(model, np.full_like(d, T), d, 0.5 * (hi - lo)) * (sm < model.S_plus)
        return fn

    pts_m = (cut, math.sqrt(min(3 * w, model.S_minus) / model.C1), model.d_cap)
    m1 = radial_integral(model, mwin(-w, 2 * w), pts_m, rtol=ERR_RTOL, atol=1e-300)
    m2 = radial_integral(model, mwin(-3 * w, w), pts_m, rtol=ERR_RTOL, atol=1e-300)

    sched4 = Schedule(4, b, ledger.rho.value, ledger.r0.value, model.diam)

    def q34(r, which):
        def fn(d):
            return b.dft(d) ** 2 * zeta_window(model, sched4.g(r, d), d, w, which)
        return fn

    p1 = [radial_integral(model, q34(r, 3), _annulus_points(b), rtol=ERR_RTOL, atol=1e-300)
          for r in _r_grid(ledger.r0.value, r_samples)]
    p2 = radial_integral(model, q34(0.0, 4), _annulus_points(b), rtol=ERR_RTOL, atol=1e-300)

    Mmax = {}
    for i in PATH_SCHEDULES:
        s = Schedule(i, b, ledger.rho.value, ledger.r0.value, model.diam)
        lo, hi = s.r_range
        Mmax[s.name] = max(M_eps(model, s, r, eps, well) for r in np.linspace(lo, hi, r_samples))
    R = (2 * sigma * model.lam * sum(Mmax.values())
         + 2 * sigma * (meas + q1_int + q2_int + m1 + m2)
         + sigma * (max(p1) - p2)
         + BETA_STANDARD * eps ** 2 * model.total_area * model.theta_max)
    return {
        "eps": eps, "support": w,
        "measure_sigma_minus_above": meas,
        "measure_closed_form": 2 * model.ball_volume * (w / model.C1) ** (model.n / 2),
        "q1_int": q1_int, "q1_max": q1_max,
        "q1_bound": 0.5 * model.lam * model.theta_max,
        "q2_int": q2_int, "p1_max": max(p1), "p2": p2, "m1": m1, "m2": m2,
        "M_max": Mmax, "M_total": sum(Mmax.values()), "R_eps": R,
    }


def decay_table(model, ledger, eps_values, well=STANDARD_WELL):
    """error_terms over a decreasing eps sweep."""
    eps_values = list(eps_values)
    if any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise ParameterError("eps sweep must be strictly decreasing")
    return [error_terms(model, ledger, e, well) for e in eps_values]


# ---------------------------------------------------------------------------
# contradiction path


PATH_SCHEDULES = (5, 4, 3, 2, 6, 7)
SEGMENTS = (
    ("constants_a", None, "a_eps", -1.0),
    ("slide_down", 5, "2diam", "r0"),
    ("g4_reversed", 4, "r0", 0.0),
    ("g3_reversed", 3, "rho", 0.0),
    ("g2_reversed", 2, "r0", 0.0),
    ("g6", 6, 0.0, "rho"),
    ("slide_up", 7, "rho", "2diam"),
    ("constants_b", None, 1.0, "b_eps"),
)


@dataclass
class PathReport:
    eps: float
    tau: float
    varsigma: float
    A2: float
    rows: list  # (segment, r, excess, bound)
    F0: float  # F(v_eps) - A2
    R_eps: float
    verdict: bool
    violation: dict | None

    @property
    def bound(self):
        return -self.varsigma + self.tau

    @property
    def max_excess(self):
        return max(r[2] for r in self.rows) if self.rows else float("nan")

    @property
    def margin(self):
        """bound - max excess (with tau)."""
        return self.bound - self.max_excess

    @property
    def strict_margin(self):
        """-varsigma - max excess (without tau)."""
        return -self.varsigma - self.max_excess

    @property
    def budget(self):
        return abs(self.F0) + self.R_eps

    def summary(self):
        return {
            "eps": float(self.eps), "tau": float(self.tau), "varsigma": float(self.varsigma),
            "A2_model": float(self.A2), "bound": float(self.bound),
            "max_excess": float(self.max_excess), "margin": float(self.margin),
            "strict_margin": float(self.strict_margin), "F_v_eps_minus_A2": float(self.F0),
            "R_eps": float(self.R_eps), "budget": float(self.budget), "verdict": "PASS" if self.verdict else "FAIL",
            "violation": self.violation,
        }


def _resolve(v, ctx):
    return ctx[v] if isinstance(v, str) else float(v)


def _segment_r(start, end, num):
    lo, hi = min(start, end), max(start, end)
    frac = np.unique(np.concatenate([np.linspace(0.0, 1.0, num),
                                     [1e-6, 1e-4, 1e-2, 1 - 1e-2, 1 - 1e-4, 1 - 1e-6]]))
    r = lo + (hi - lo) * frac
    return r if start <= end else r[::-1]


def contradiction_path(model, ledger, eps, tau=None, well=STANDARD_WELL, samples=17,
                       budget_only=False, strict=False, refine=True):
    """Sample the eight-segment path and decide the verdict.

    PASS requires every sample to satisfy excess < -varsigma + tau and the
    remainder budget |F(v_eps) - A2| + R_eps < tau.

    Raises
    ------
    PathAssertionError
        Only with ``strict=True``, naming the first failing segment and r.
    """
    tau = ledger.tau.value if tau is None else float(tau)
    layer = _layer(eps, well)
    vs = ledger.varsigma
    A2 = ledger.measured["A2_model"]
    b = BumpPair(ledger.l.value, ledger.L.value, ledger.k.value, model.n)
    F0 = field_excess(model, layer, lambda d: np.zeros_like(d), lambda d: np.zeros_like(d), b.points)
    R = error_terms(model, ledger, eps, well)["R_eps"]
    rows = []
    violation = None
    bound = -vs + tau
    if not abs(F0) + R < tau:
        violation = {"segment": "budget", "r": None,
                     "inequality": "|F(v_eps) - A2| + R_eps < tau",
                     "lhs": float(abs(F0) + R), "rhs": float(tau)}
    if budget_only:
        return PathReport(eps, tau, vs, A2, rows, F0, R, violation is None, violation)
    a_eps, b_eps = stable_pair(eps, model.lam, well)
    ctx = {"a_eps": a_eps, "b_eps": b_eps, "r0": ledger.r0.value, "rho": ledger.rho.value,
           "2diam": 2 * model.diam}
    vol = tube_volume(model)
    for name, idx, start, end in SEGMENTS:
        s0, s1 = _resolve(start, ctx), _resolve(end, ctx)
        if idx is None:
            c = np.linspace(s0, s1, samples)
            e = constant_excess(model, layer, c, vol, A2)
            seg_rows = [(name, float(ci), float(ei), bound) for ci, ei in zip(c, e)]
        else:
            sched = Schedule(idx, b, ledger.rho.value, ledger.r0.value, model.diam)
            f = lambda r, sched=sched: schedule_excess(model, sched, r, eps, well)  # noqa: E731
            rs = _segment_r(s0, s1, samples)
            seg_rows = [(name, float(r), f(r), bound) for r in rs]
            if refine:
                i = int(np.argmax([x[2] for x in seg_rows]))
                lo = rs[max(i - 1, 0)]
                hi = rs[min(i + 1, rs.size - 1)]
                lo, hi = min(lo, hi), max(lo, hi)
                if hi > lo:
                    res = minimize_scalar(lambda r: -f(r), bounds=(lo, hi), method="bounded",
                                          options={"xatol": 1e-6 * (hi - lo), "maxiter": 40})
                    seg_rows.append((name, float(res.x), float(-res.fun), bound))
        rows += seg_rows
        if violation is None:
            for row in seg_rows:
                if not row[2] < bound:
                    violation = {"segment": name, "r": row[1],
                                 "inequality": "excess < -varsigma + tau",
                                 "lhs": float(row[2]), "rhs": float(bound)}
                    break
    rep = PathReport(eps, tau, vs, A2, rows, F0, R, violation is None, violation)
    if strict and violation is not None:
        raise PathAssertionError(
            f"segment {violation['segment']} at r = {violation['r']!r}: "
            f"{violation['inequality']} fails ({violation['lhs']:.6e} >= {violation['rhs']:.6e})",
            violation["segment"], violation["r"], violation["inequality"])
    return rep


def find_eps_tau(model, ledger, well=STANDARD_WELL, lo=1e-16, hi=1e-4, factor=1.5):
    """Largest eps (to within ``factor``) at which the path verdict passes.

    The budget half of the verdict is checked first since it is cheap.
    """
    def ok(e):
        if not _layer(e, well).support < ledger.rho.value / 4:
            return False
        if not contradiction_path(model, ledger, e, well=well, budget_only=True).verdict:
            return False
        return contradiction_path(model, ledger, e, well=well, refine=False).verdict

    if ok(hi):
        return hi
    if not ok(lo):
        raise InfeasibleModelError(f"verdict fails even at eps = {lo:g}", remark="Choice of eps_tau")
    while hi / lo > factor:
        mid = math.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# structural checks


def glue_check(model, ledger, eps, samples=257, well=STANDARD_WELL):
    """max |v_1 - v_2| on the set where the two tubes meet, over all schedules."""
    prof = _layer(eps, well).prof
    b = BumpPair(ledger.l.value, ledger.L.value, ledger.k.value, model.n)
    d = np.linspace(0.0, model.R, samples)
    sm = model.sigma_minus(d)
    worst = 0.0
    for i in range(1, 8):
        s = Schedule(i, b, ledger.rho.value, ledger.r0.value, model.diam)
        for r in np.linspace(*s.r_range, 5):
            # sheet 1 at x, sheet 2 at Psi(x) = x; both reach the meeting set at sigma^-
            v1 = prof.value(sm - s.g(r, d))
            v2 = prof.value(sm - s.g(r, d.copy()))
            worst = max(worst, float(np.max(np.abs(v1 - v2))))
    return worst


def g_claim_check(model, ledger, num=65):
    """F(r) = (r0 - r)^2 G(r): max increase between samples and min G / G(0)."""
    b = BumpPair(ledger.l.value, ledger.L.value, ledger.k.value, model.n)
    r0 = ledger.r0.value
    r = _r_grid(r0, num)
    G = np.array([_G(model, b, r0, x) for x in r])
    F = (r0 - r) ** 2 * G
    return {"r": r, "G": G, "F": F, "max_increase": float(np.max(np.diff(F))),
            "min_G_ratio": float(G.min() / G[0])}


def layer_lipschitz(model, eps, well=STANDARD_WELL):
    """sqrt(H(M) sup_u int Hbar'(t - u)^2 theta_t dt), the L^2 Lipschitz factor."""
    layer = _layer(eps, well)
    bar2 = 2.0 * layer.K[P] * layer.w  # Hbar'^2 ds in scaled units
    t = np.linspace(-model.S_minus, model.S_plus, 2001)
    # int Hbar'(t-u)^2 theta dt = (1/eps) int bar'(s)^2 theta_{u + eps s} ds
    sup = max(float(np.sum(bar2 * model.theta(u + eps * layer.s))) for u in t) / eps
    return math.sqrt(model.total_area * sup)


def path_l2_step(model, sched, r1, r2, eps, well=STANDARD_WELL, width=0.25):
    """||v^{r2} - v^{r1}||_{L^2} over the model tube.

    The difference of the two layers varies on the eps scale only within
    ``prof.support`` of each centre; elsewhere it is constant and the
    t-integral is resolved by a few panels against theta.
    """
    prof = _layer(eps, well).prof
    sup = prof.support
    x, wx = _gl(8)

    def dens(d):
        out = np.empty(d.size)
        for j, dj in enumerate(d):
            a, b = sched.g(r1, dj), sched.g(r2, dj)
            sm = float(model.sigma_minus(dj))
            lo = max(min(a, b) - sup, sm)
            hi = min(max(a, b) + sup, model.S_plus)
            if hi <= lo:
                out[j] = 0.0
                continue
            cuts = np.unique(np.clip([lo, a - sup, a + sup, b - sup, b + sup, hi], lo, hi))
            edges = []
            for u, v in zip(cuts[:-1], cuts[1:]):
                mid = 0.5 * (u + v)
                fine = min(abs(mid - a), abs(mid - b)) < sup
                npan = max(int(np.ceil((v - u) / (width * eps))), 1) if fine else 8
                edges.append(np.linspace(u, v, npan + 1)[:-1])
            edges = np.append(np.concatenate(edges), cuts[-1])
            half = 0.5 * np.diff(edges)
            t = (0.5 * (edges[1:] + edges[:-1])[:, None] + half[:, None] * x).ravel()
            wt = (half[:, None] * wx).ravel()
            diff = prof.value(t - b) - prof.value(t - a)
            out[j] = np.sum(wt * diff * diff * model.theta(t))
        return out

    val = radial_integral(model, dens, sched.bumps.points + (model.d_cap,), rtol=1e-4,
                          atol=1e-30, max_base=64)
    return math.sqrt(max(val, 0.0))


def continuity_check(model, ledger, i, eps, num=9, well=STANDARD_WELL):
    """Largest ||dv|| / (C dr) between successive samples of schedule i (<= 1 expected)."""
    b = BumpPair(ledger.l.value, ledger.L.value, ledger.k.value, model.n)
    s = Schedule(i, b, ledger.rho.value, ledger.r0.value, model.diam)
    rs = np.linspace(*s.r_range, num)
    d = np.linspace(0.0, model.R, 4001)
    sup_dr = max(float(np.max(np.abs(s.dr(r, d)))) for r in rs)
    C = sup_dr * layer_lipschitz(model, eps, well)
    ratios = [path_l2_step(model, s, r1, r2, eps, well) / (C * (r2 - r1))
              for r1, r2 in zip(rs[:-1], rs[1:])]
    return {"C": C, "max_ratio": max(ratios), "ratios": ratios}
