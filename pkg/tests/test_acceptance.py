"""Acceptance criteria 1-10.  Each test records a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from phase_minmax import competitor as comp
from phase_minmax.energy import (
    EnergyParams, ac_energy, ac_gradient, second_variation, stable_constants,
)
from phase_minmax.index import stability_spectrum
from phase_minmax.manifold import SymmetricSphereGrid
from phase_minmax.minmax import run_minmax
from phase_minmax.potential import BETA_STANDARD, TruncatedProfile, profile_energy, sigma_constant
from phase_minmax.slidepath import limit_energies, recovery_trace, slide_maximum, sliding_energy
from phase_minmax.tube import Interface, f_lambda, log_theta_derivative, sweep_check, tube_profile

SIGMA = math.sqrt(2.0) / 3.0
M_S2 = Interface(np.pi / 4, 2)
A2 = limit_energies(M_S2, 1.0, SIGMA).A2


def test_c01_profile(acceptance):
    t0 = time.perf_counter()
    sig_ok = abs(sigma_constant() - SIGMA) <= 1e-8
    gaps = {e: abs(profile_energy(e) - 2 * SIGMA) for e in (0.2, 0.1, 0.05, 0.02, 0.01)}
    beta_ok = all(g <= BETA_STANDARD * e ** 2 for e, g in gaps.items())
    dt = time.perf_counter() - t0
    ok = sig_ok and beta_ok and dt < 1.0
    acceptance(1, "1D profile", ok, dt, f"max gap/eps^2 = {max(g / e ** 2 for e, g in gaps.items()):.4g}")
    assert ok


def test_c02_tube_calculus(acceptance):
    t0 = time.perf_counter()
    t = np.linspace(M_S2.sigma_minus, M_S2.sigma_plus, 4001)[1:-1]
    pr = tube_profile(M_S2, t, lam=1.0, m=1.0)
    H_ok = bool(np.all(pr.H == pytest.approx(1.0 / np.tan(np.pi / 4 - t), rel=1e-12)))
    pos, neg = t > 0, t < 0
    bound_ok = bool(np.all(pr.H[pos] >= 1 + t[pos]) and np.all(pr.H[neg] <= 1 + t[neg]))
    inner = np.sin(np.pi / 4 - t) >= 0.1
    ode = float(np.max(np.abs(log_theta_derivative(M_S2, t[inner]) + pr.H[inner])))
    theta_ok = bool(np.all(pr.theta <= np.exp(-t * (1 + t / 2))))
    dt = time.perf_counter() - t0
    ok = H_ok and bound_ok and ode <= 1e-6 and theta_ok and dt < 1.0
    acceptance(2, "tube calculus", ok, dt, f"ODE residual {ode:.2e}")
    assert ok


def test_c03_functional_sweep(acceptance):
    t0 = time.perf_counter()
    sc = sweep_check(M_S2, 1.0)
    f0 = f_lambda(M_S2, 0.0, 1.0)
    t = np.linspace(M_S2.sigma_minus, M_S2.sigma_plus, 20001)
    t = t[np.abs(t) >= 1e-6]
    strict = bool(np.all(f_lambda(M_S2, t, 1.0) < f0))
    dt = time.perf_counter() - t0
    ok = sc.passed and abs(f0 - 2.60258) <= 1e-4 and sc.argmax_t == 0.0 and strict and dt < 1.0
    acceptance(3, "geometric functional sweep", ok, dt, f"F(E_0) = {f0:.6f}")
    assert ok


def test_c04_sliding_path(acceptance):
    t0 = time.perf_counter()
    p = EnergyParams(0.01, 1.0)
    tmax, emax = slide_maximum(M_S2, p)
    _, s = recovery_trace(M_S2, p, tau=0.1)
    dt = time.perf_counter() - t0
    support = TruncatedProfile(0.01).support
    ok = (abs(tmax) <= support and abs(emax - A2) <= 0.01 * A2 and s.max_path_energy < A2 + 0.1
          and dt < 10.0)
    acceptance(4, "sliding path", ok, dt,
               f"argmax {tmax:.3g} (<= {support:.4f}), max {emax:.5f} vs A2 {A2:.5f}")
    assert ok


@pytest.fixture(scope="module")
def timed_minmax(s2_800):
    t0 = time.perf_counter()
    res = run_minmax(s2_800, EnergyParams(0.05, 1.0), P=33)
    return res, time.perf_counter() - t0


def test_c05_minmax(acceptance, timed_minmax, s2_800):
    res, dt = timed_minmax
    _, s = recovery_trace(M_S2, EnergyParams(0.05, 1.0))
    ok = (res.newton.converged and res.residual <= 1e-9
          and abs(res.interface_theta_estimate - np.pi / 4) <= s2_800.dtheta
          and res.morse_index == 1 and res.beta_eps <= s.max_path_energy and dt < 300)
    acceptance(5, "min-max", ok, dt,
               f"beta {res.beta_eps:.6f}, residual {res.residual:.1e}, index {res.morse_index}")
    assert ok


def test_c06_no_minimal_component(acceptance, s2_800, timed_minmax):
    t0 = time.perf_counter()
    gaps = []
    for eps in (0.1, 0.05, 0.02):
        if eps == 0.05:
            beta = timed_minmax[0].beta_eps
        else:
            beta = run_minmax(s2_800, EnergyParams(eps, 1.0), P=33).beta_eps
        gaps.append(beta - A2)
    dt = time.perf_counter() - t0
    quantum = 2 * SIGMA * 2 * np.pi
    mono = all(abs(b) < abs(a) for a, b in zip(gaps, gaps[1:]))
    ok = mono and max(abs(g) for g in gaps) < quantum
    acceptance(6, "no minimal component", ok, dt,
               "beta - A2 = " + ", ".join(f"{g:.4f}" for g in gaps) + f" (quantum {quantum:.3f})")
    assert ok


def test_c07_competitor(acceptance):
    t0 = time.perf_counter()
    model = comp.build_model()
    ledger = comp.choose_constants(model)
    eps = 0.5 * ledger.eps_tau.value
    kap1 = comp.kappa(model, ledger, eps, 1.0)
    kmax = max(comp.kappa(model, ledger, eps, s) for s in np.linspace(0, 1, 41))
    kbound = ledger.measured["C3"] * ledger.rho.value ** 2 / ledger.l.value ** 2
    rep = comp.contradiction_path(model, ledger, eps)
    dt = time.perf_counter() - t0
    vs = ledger.varsigma
    ok = (ledger.passed and kap1 < -SIGMA / 3 and kmax <= kbound < SIGMA / 6
          and rep.verdict and rep.margin >= 0.25 * vs and dt < 120)
    acceptance(7, "competitor ledger", ok, dt,
               f"kappa(1) {kap1:.4f}, margin/varsigma {rep.margin / vs:.2f}, "
               f"strict margin/varsigma {rep.strict_margin / vs:.2f}")
    assert ok


def _decreasing_to_zero(x):
    x = np.abs(np.asarray(x, dtype=float))
    return bool(np.all(np.diff(x) <= 0) and x[-1] < x[0])


def test_c08_error_decay(acceptance, ledger_no_eps, model):
    t0 = time.perf_counter()
    eps_values = (1e-10, 1e-11, 1e-12, 1e-13, 1e-14)
    rows = comp.decay_table(model, ledger_no_eps, eps_values)
    keys = ("measure_sigma_minus_above", "q1_int", "q2_int", "p1_max", "p2", "M_total")
    bad = [k for k in keys if not _decreasing_to_zero([r[k] for r in rows])]
    bad += [f"M_max[{n}]" for n in rows[0]["M_max"]
            if not _decreasing_to_zero([r["M_max"][n] for r in rows])]
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    acceptance(8, "error decay", ok, dt, "non-monotone: " + (", ".join(bad) or "none"))
    assert ok


def test_c09_index(acceptance, timed_minmax):
    t0 = time.perf_counter()
    spec = stability_spectrum(Interface.cmc(1.0, 2), 1.0, 1.0)
    vals_ok = np.allclose(spec.eigenvalues[:4], [-2.0, 0.0, 0.0, 6.0], atol=1e-6)
    dt = time.perf_counter() - t0
    ok = vals_ok and spec.index == 1 and spec.nullity == 2 and spec.index == timed_minmax[0].morse_index
    acceptance(9, "index module", ok, dt, f"index {spec.index}, nullity {spec.nullity}")
    assert ok


def _field(rng, grid):
    c = rng.standard_normal(5)
    u = sum(ci * np.cos(i * grid.theta) for i, ci in enumerate(c)) / 3.0
    return 1.2 * np.tanh(u) + 0.01 * rng.standard_normal(grid.K)


def test_c10_derivatives(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    p = EnergyParams(0.1, 1.0)
    worst_g = worst_h = 0.0
    for dim in (2, 3):
        g = SymmetricSphereGrid(dim, 200)
        for _ in range(50):
            u, phi = _field(rng, g), _field(rng, g)
            h = 1e-4
            fd = (ac_energy(u + h * phi, p, g) - ac_energy(u - h * phi, p, g)) / (2 * h)
            an = g.integrate(ac_gradient(u, p, g) * phi)
            worst_g = max(worst_g, abs(fd - an) / abs(an))

            def d2(k):
                return (ac_energy(u + k * phi, p, g) - 2 * ac_energy(u, p, g)
                        + ac_energy(u - k * phi, p, g)) / k ** 2
            fd2 = (4 * d2(1e-3) - d2(2e-3)) / 3
            q = second_variation(u, phi, p, g)
            worst_h = max(worst_h, abs(fd2 - q) / abs(q))
    dt = time.perf_counter() - t0
    ok = worst_g <= 1e-4 and worst_h <= 1e-4
    acceptance(10, "gradient/Hessian consistency", ok, dt,
               f"worst relative error: gradient {worst_g:.1e}, Hessian {worst_h:.1e}")
    assert ok
