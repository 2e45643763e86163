import numpy as np
import pytest

from phase_minmax.energy import EnergyParams, ac_energy, constant_energy, stable_constants
from phase_minmax.errors import ParameterError
from phase_minmax.manifold import SymmetricSphereGrid
from phase_minmax.minmax import (
    RelaxOptions, morse_index, refine_critical_point, relax_path, run_minmax,
)
from phase_minmax.path import PathOfFields
from phase_minmax.slidepath import constant_segments, limit_energies, recovery_path, recovery_trace
from phase_minmax.tube import Interface

A2 = limit_energies(Interface.cmc(1.0), 1.0, np.sqrt(2.0) / 3.0).A2


def test_critical_point_residual(minmax_005):
    assert minmax_005.newton.converged
    assert minmax_005.residual <= 1e-9


def test_beta_within_two_percent_of_a2(minmax_005):
    assert abs(minmax_005.relax.max_energy - A2) <= 0.02 * A2
    assert abs(minmax_005.beta_eps - A2) <= 0.02 * A2


def test_mountain_pass_geometry(minmax_005):
    p = EnergyParams(0.05, 1.0)
    sc = stable_constants(p)
    fa = constant_energy(sc.a_eps, p, 4 * np.pi)
    fb = constant_energy(sc.b_eps, p, 4 * np.pi)
    assert minmax_005.beta_eps > fa > fb


def test_interface_latitude(minmax_005, s2_800):
    # cot theta* = lambda
    assert minmax_005.sign_changes == 1
    assert abs(minmax_005.interface_theta_estimate - np.pi / 4) <= s2_800.dtheta


def test_morse_index_one(minmax_005):
    assert minmax_005.morse_index == 1
    assert minmax_005.morse.sturm_index == 1


def test_beta_below_recovery_path(minmax_005):
    p = EnergyParams(0.05, 1.0)
    _, s = recovery_trace(Interface.cmc(1.0), p, tau=0.1)
    c1, e1, c2, e2 = constant_segments(p, 4 * np.pi)
    assert minmax_005.beta_eps <= max(s.max_path_energy, e1.max(), e2.max())


def test_relaxation_monotone(minmax_005):
    e = np.array([row[1] for row in minmax_005.relax.trace])
    assert np.all(np.diff(e) <= 1e-12)


def test_spacing_after_reparam(minmax_005):
    assert minmax_005.relax.spacing_ratios
    assert max(minmax_005.relax.spacing_ratios) <= 2.0


def test_newton_quadratic(minmax_005):
    ratios = minmax_005.newton.quadratic_ratios
    assert ratios
    # r_{k+1} / r_k^2 bounded over the final steps
    assert max(ratios) < 1e3


def test_endpoints_pinned():
    g = SymmetricSphereGrid(2, 200)
    p = EnergyParams(0.05, 1.0)
    path = recovery_path(g, Interface.cmc(1.0), p, P=17)
    a, b = path.nodes[0].copy(), path.nodes[-1].copy()
    opts = RelaxOptions(min_sweeps=10 ** 4, patience=10 ** 5, max_sweeps=10 ** 4)
    rel = relax_path(path, p, opts)
    assert len(rel.trace) == 10 ** 4
    assert np.array_equal(rel.path.nodes[0], a) and np.array_equal(rel.path.nodes[-1], b)


def test_short_path_rejected():
    g = SymmetricSphereGrid(2, 100)
    p = EnergyParams(0.05, 1.0)
    path = recovery_path(g, Interface.cmc(1.0), p, P=33)
    with pytest.raises(ParameterError):
        relax_path(PathOfFields(g, path.nodes[::3]), p)


def test_seed_at_a_is_critical():
    g = SymmetricSphereGrid(2, 200)
    p = EnergyParams(0.05, 1.0)
    sc = stable_constants(p)
    nw = refine_critical_point(g.constant(sc.a_eps), p)
    assert nw.converged and nw.iterations == 0
    assert ac_energy(nw.u, p, g) == pytest.approx(constant_energy(sc.a_eps, p, 4 * np.pi), rel=1e-13)


@pytest.mark.parametrize("dim", [2, 3])
def test_morse_of_constants(dim):
    g = SymmetricSphereGrid(dim, 200)
    p = EnergyParams(0.05, 1.0)
    sc = stable_constants(p)
    assert morse_index(g.constant(sc.a_eps), p).index == 0
    assert morse_index(g.constant(sc.b_eps), p).index == 0
    mc = morse_index(g.constant(sc.c_eps), p)
    assert mc.index >= 1 and mc.index == mc.sturm_index


def test_symmetric_well_equator():
    """lambda = 0: the saddle is odd under reflection through the equator."""
    g = SymmetricSphereGrid(2, 400)
    p = EnergyParams(0.1, 0.0)
    res = run_minmax(g, p, P=17)
    u = res.newton.u
    assert res.residual <= 1e-9
    assert np.max(np.abs(u + u[::-1])) < 1e-6
    assert res.interface_theta_estimate == pytest.approx(np.pi / 2, abs=g.dtheta)
    assert res.morse_index == 1


def test_summary_keys(minmax_005):
    assert set(minmax_005.summary()) == {
        "beta_eps", "residual", "morse_index", "iterations", "interface_theta_estimate"}
