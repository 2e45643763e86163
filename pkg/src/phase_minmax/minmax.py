"""String relaxation, Newton refinement and Morse index of the mountain-pass point."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .eigen import lowest_eigenpairs, sturm_count
from .energy import EnergyParams, ac_energy, gradient_values, hessian_bands, stable_constants
from .errors import OptimizationError, ParameterError
from .manifold import Field, SymmetricSphereGrid, values_of
from .parallel import map_rows, thread_count
from .path import PathOfFields, reparametrize, segment_lengths
from .slidepath import recovery_path
from .tube import Interface, interface_from_field

NULL_TOL = 1e-6
ROUNDOFF_FLOOR = 1e-11


@dataclass
class RelaxOptions:
    """Settings for :func:`relax_path`.

    ``step_fraction`` multiplies the stability limit 1 / max(diag Hessian).
    The run stops once the max-node energy drops by less than ``tol`` for
    ``patience`` consecutive sweeps.
    """

    step_fraction: float = 0.5
    tol: float = 1e-10
    patience: int = 20
    min_sweeps: int = 50
    max_sweeps: int = 50000
    reparam_every: int = 10
    divergence_window: int = 50
    slack: float = 1e-12
    threads: int | None = None


@dataclass
class RelaxResult:
    path: PathOfFields
    trace: list  # (sweep, max_energy, residual)
    energies: np.ndarray
    max_index: int
    converged: bool
    reparams_accepted: int = 0
    reparams_skipped: int = 0
    spacing_ratios: list = field(default_factory=list)

    @property
    def max_energy(self):
        return float(self.energies[self.max_index])

    @property
    def max_node(self):
        return self.path.nodes[self.max_index].copy()


def _max_diag(nodes, p, grid):
    _, d, _ = grid.laplacian_bands()
    return float(np.max(-p.eps * d) + np.max(p.well.second(nodes)) / p.eps)


def _tangents(grid, nodes):
    tau = nodes[2:] - nodes[:-2]
    nrm = np.sqrt(grid.integrate(tau * tau))
    nrm[nrm == 0] = 1.0
    return tau / nrm[:, None]


def _pinned_reparam(grid, nodes, energies):
    """Equal spacing on each side of the top node, which stays fixed with its neighbours."""
    P = nodes.shape[0]
    m = int(np.argmax(energies))
    if m < 3 or m > P - 4:
        return None
    out = nodes.copy()
    out[:m] = reparametrize(grid, nodes[:m], m)
    out[m + 2:] = reparametrize(grid, nodes[m + 2:], P - m - 2)
    return out


def relax_path(initial: PathOfFields, p: EnergyParams, opts: RelaxOptions | None = None):
    """Relax a path with fixed endpoints toward a minimal-energy path.

    Interior nodes descend along the component of the gradient normal to the
    path; every ``reparam_every`` sweeps the nodes are redistributed at equal
    L^2 spacing.  A reparametrization that would raise the max-node energy
    by more than ``slack`` is skipped, and a descent step that raises it
    halves the step, so the recorded max-node energy never increases.

    Raises
    ------
    OptimizationError
        After ``divergence_window`` consecutive increases, with the trace.
    """
    opts = opts or RelaxOptions()
    grid = initial.grid
    P = len(initial)
    if P < 16:
        raise ParameterError(f"path needs at least 16 nodes, got {P}")
    threads = thread_count() if opts.threads is None else opts.threads
    nodes = initial.nodes.copy()
    first, last = nodes[0].copy(), nodes[-1].copy()

    def grad_rows(block):
        return gradient_values(block, p, grid)

    def energies_of(x):
        return ac_energy(x, p, grid)

    energies = energies_of(nodes)
    emax = float(energies.max())
    trace = []
    increases = 0
    quiet = 0
    dt_scale = 1.0
    accepted = skipped = 0
    ratios = []
    converged = False
    for sweep in range(1, opts.max_sweeps + 1):
        inner = nodes[1:-1]
        G = map_rows(grad_rows, inner, threads)
        tau = _tangents(grid, nodes)
        G -= grid.integrate(G * tau)[:, None] * tau
        resid = float(np.max(np.sqrt(grid.integrate(G * G))))
        dt = opts.step_fraction * dt_scale / _max_diag(nodes, p, grid)
        for _ in range(30):
            trial = nodes.copy()
            trial[1:-1] = inner - dt * G
            e_trial = energies_of(trial)
            if e_trial.max() <= emax + opts.slack:
                break
            dt *= 0.5
            dt_scale *= 0.5
        new_max = float(e_trial.max())
        if new_max > emax + opts.slack:
            increases += 1
            if increases >= opts.divergence_window:
                trace.append((sweep, new_max, resid))
                raise OptimizationError(
                    f"relaxation diverged: max-node energy rose for {increases} sweeps", trace)
        else:
            increases = 0
        drop = emax - new_max
        nodes, energies, emax = trial, e_trial, new_max
        if sweep % opts.reparam_every == 0:
            for cand in (reparametrize(grid, nodes, P), _pinned_reparam(grid, nodes, energies)):
                if cand is None:
                    continue
                e_cand = energies_of(cand)
                if e_cand.max() <= emax + opts.slack:
                    break
            else:
                cand = None
            if cand is not None:
                nodes, energies, emax = cand, e_cand, min(emax, float(e_cand.max()))
                seg = segment_lengths(grid, nodes)
                ratios.append(float(seg.max() / max(seg.min(), 1e-300)))
                accepted += 1
            else:
                skipped += 1
        nodes[0], nodes[-1] = first, last
        trace.append((sweep, emax, resid))
        quiet = quiet + 1 if drop < opts.tol else 0
        if sweep >= opts.min_sweeps and quiet >= opts.patience:
            converged = True
            break
    return RelaxResult(PathOfFields(grid, nodes), trace, energies, int(np.argmax(energies)),
                       converged, accepted, skipped, ratios)


# ---------------------------------------------------------------------------
# Newton refinement


@dataclass
class NewtonResult:
    u: np.ndarray
    residual: float
    iterations: int
    converged: bool
    residuals: list
    quadratic_ratios: list
    shifts: list


def _residual(grid, g):
    return float(np.sqrt(grid.integrate(g * g)))


def _newton_solve(lo, d, up, rhs, shifts):
    scale = max(1.0, float(np.max(np.abs(d))))
    for k in range(4):
        mu = 0.0 if k == 0 else scale * 10.0 ** (-12 + 2 * k)
        ab = np.zeros((3, d.size))
        ab[0, 1:] = up
        ab[1] = d + mu
        ab[2, :-1] = lo
        try:
            x = solve_banded((1, 1), ab, rhs, check_finite=False)
        except np.linalg.LinAlgError:
            x = None
        if x is not None and np.all(np.isfinite(x)):
            if mu:
                shifts.append(mu)
            return x
    raise OptimizationError("linearization singular even after shifting")


def refine_critical_point(u0, p: EnergyParams, grid: SymmetricSphereGrid = None, tol=1e-9,
                          max_iter=200):
    """Damped Newton iteration for the Euler-Lagrange equation.

    Returns the best iterate; ``converged`` is False if the residual did not
    reach ``tol``.  A singular linearization is retried with a small
    diagonal shift.
    """
    if isinstance(u0, Field):
        grid = u0.grid
    u = grid.check(values_of(u0)).copy()
    g = gradient_values(u, p, grid)
    r = _residual(grid, g)
    best = (r, u.copy())
    history = [r]
    shifts = []
    it = 0
    while r > tol and it < max_iter:
        it += 1
        lo, d, up = hessian_bands(u, p, grid)
        step = _newton_solve(lo, d, up, -g, shifts)
        alpha = 1.0
        while alpha >= 1.0 / 1024:
            trial = u + alpha * step
            g_t = gradient_values(trial, p, grid)
            r_t = _residual(grid, g_t)
            if r_t < (1.0 - 0.25 * alpha) * r or r_t <= tol:
                break
            alpha *= 0.5
        else:
            break  # stalled
        u, g, r = trial, g_t, r_t
        history.append(r)
        if r < best[0]:
            best = (r, u.copy())
    # steps that land on the round-off floor say nothing about the rate
    ratios = [history[i + 1] / history[i] ** 2 for i in range(len(history) - 1)
              if history[i + 1] > ROUNDOFF_FLOOR]
    return NewtonResult(best[1], best[0], it, best[0] <= tol, history, ratios[-3:], shifts)


# ---------------------------------------------------------------------------
# Morse index


@dataclass
class MorseResult:
    index: int
    nullity: int
    eigenvalues: np.ndarray
    residuals: np.ndarray
    sturm_index: int


def symmetric_hessian(u, p: EnergyParams, grid: SymmetricSphereGrid):
    """Diagonal and off-diagonal of W^{1/2} J W^{-1/2} (same spectrum as J)."""
    v = values_of(u)
    _, d, _ = hessian_bands(v, p, grid)
    h2 = grid.dtheta ** 2
    e = -p.eps * grid.s_face / (h2 * np.sqrt(grid.s_node[:-1] * grid.s_node[1:]))
    return d, e


def morse_index(u, p: EnergyParams, grid: SymmetricSphereGrid = None, null_tol=NULL_TOL,
                count=12, seed=12345):
    """Morse index and nullity of the linearization at u.

    Eigenvalues below ``-null_tol`` are negative, those with modulus below
    ``null_tol`` null.  The shift -1/eps - 1 is a lower bound for the
    spectrum because W'' >= -1.
    """
    if isinstance(u, Field):
        grid = u.grid
    d, e = symmetric_hessian(u, p, grid)
    shift = -p.well.scale / p.eps - 1.0
    while True:
        vals, _, res = lowest_eigenpairs(d, e, count, shift, rng=np.random.default_rng(seed),
                                         stop_above=null_tol)
        # all requested pairs below the threshold: the index may be larger
        if vals.size < count or vals[-1] > null_tol or count >= d.size:
            break
        count = min(2 * count, d.size)
    index = int(np.sum(vals < -null_tol))
    nullity = int(np.sum(np.abs(vals) <= null_tol))
    return MorseResult(index, nullity, vals, res, sturm_count(d, e, -null_tol))


# ---------------------------------------------------------------------------
# driver


@dataclass
class MinmaxResult:
    beta_eps: float
    residual: float
    morse_index: int
    iterations: int
    interface_theta_estimate: float
    relax: RelaxResult
    newton: NewtonResult
    morse: MorseResult
    sign_changes: int

    def summary(self):
        return {
            "beta_eps": self.beta_eps,
            "residual": self.residual,
            "morse_index": self.morse_index,
            "iterations": self.iterations,
            "interface_theta_estimate": self.interface_theta_estimate,
        }


MinMaxResult = MinmaxResult


def run_minmax(grid: SymmetricSphereGrid, p: EnergyParams, P=33, opts=None, initial=None,
               newton_tol=1e-9):
    """Relax the recovery path, refine its top node and compute the index."""
    stable_constants(p)  # admissibility
    if initial is None:
        M = Interface.cmc(p.lam, grid.ambient_dim)
        initial = recovery_path(grid, M, p, P)
    rel = relax_path(initial, p, opts)
    nw = refine_critical_point(rel.max_node, p, grid, tol=newton_tol)
    mr = morse_index(nw.u, p, grid)
    zeros = interface_from_field(grid, nw.u)
    theta = float(zeros[0]) if zeros.size else float("nan")
    return MinmaxResult(float(ac_energy(nw.u, p, grid)), nw.residual, mr.index,
                        len(rel.trace) + nw.iterations, theta, rel, nw, mr, int(zeros.size))
