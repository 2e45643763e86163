import numpy as np
import pytest

from phase_minmax.energy import (
    EnergyParams, ac_energy, ac_gradient, energy_mass, hessian_apply, second_variation,
    stable_constants,
)
from phase_minmax.errors import AdmissibilityError, ParameterError
from phase_minmax.manifold import Field, SymmetricSphereGrid

SIGMA = np.sqrt(2.0) / 3.0


@pytest.fixture(scope="module")
def g2000():
    return SymmetricSphereGrid(2, 2000)


def second_difference(p, g, u, phi, h=1e-3):
    """Richardson-extrapolated second difference of F along phi.

    With |u + t phi| < 2 the energy is a quartic in t, so the h^2 term of the
    plain second difference is removed exactly.
    """
    def d2(k):
        return (ac_energy(u + k * phi, p, g) - 2 * ac_energy(u, p, g) + ac_energy(u - k * phi, p, g)) / k ** 2
    return (4.0 * d2(h) - d2(2 * h)) / 3.0


def random_field(rng, grid, amp=1.2):
    """Smooth random latitude field: a few harmonics plus small noise."""
    th = grid.theta
    c = rng.standard_normal(5)
    u = sum(ci * np.cos(i * th) for i, ci in enumerate(c)) / 3.0
    return amp * np.tanh(u) + 0.01 * rng.standard_normal(grid.K)


# --- ac_energy ----------------------------------------------------------------

def test_energy_plus_one(g2000):
    p = EnergyParams(0.1, 1.0)
    assert ac_energy(g2000.constant(1.0), p) == pytest.approx(-SIGMA * 4 * np.pi, rel=1e-12)
    assert ac_energy(g2000.constant(1.0), p) == pytest.approx(-5.92384, abs=1e-5)


def test_energy_minus_one(g2000):
    p = EnergyParams(0.1, 1.0)
    assert ac_energy(g2000.constant(-1.0), p) == pytest.approx(5.92384, abs=1e-5)


def test_energy_zero(g2000):
    p = EnergyParams(0.1, 1.0)
    assert ac_energy(g2000.constant(0.0), p) == pytest.approx(10 * np.pi, rel=1e-12)


def test_energy_batched_matches_single(rng):
    g = SymmetricSphereGrid(3, 64)
    p = EnergyParams(0.1, 0.7)
    U = np.stack([random_field(rng, g) for _ in range(4)])
    assert np.allclose(ac_energy(U, p, g), [ac_energy(u, p, g) for u in U], rtol=1e-14)


# --- gradient ----------------------------------------------------------------

@pytest.mark.parametrize("dim", [2, 3])
def test_gradient_vanishes_at_constants(dim):
    g = SymmetricSphereGrid(dim, 200)
    p = EnergyParams(0.05, 1.0)
    sc = stable_constants(p)
    for c in (sc.a_eps, sc.b_eps, sc.c_eps):
        assert np.max(np.abs(ac_gradient(g.constant(c), p).values)) <= 1e-12 / p.eps


@pytest.mark.parametrize("dim", [2, 3])
def test_gradient_directional_derivative(dim, rng):
    """Central differences of F along random phi, 50 pairs per backend."""
    g = SymmetricSphereGrid(dim, 200)
    p = EnergyParams(0.1, 1.0)
    worst = 0.0
    for _ in range(50):
        u = random_field(rng, g)
        phi = random_field(rng, g)
        h = 1e-4
        fd = (ac_energy(u + h * phi, p, g) - ac_energy(u - h * phi, p, g)) / (2 * h)
        an = g.integrate(ac_gradient(u, p, g) * phi)
        worst = max(worst, abs(fd - an) / max(abs(an), 1e-300))
    assert worst <= 1e-4


def test_gradient_returns_field_for_field():
    g = SymmetricSphereGrid(2, 32)
    assert isinstance(ac_gradient(g.constant(0.3), EnergyParams(0.1, 1.0)), Field)


# --- Hessian ------------------------------------------------------------------

def test_hessian_positive_at_b(rng):
    g = SymmetricSphereGrid(2, 200)
    p = EnergyParams(0.05, 1.0)
    b = g.constant(stable_constants(p).b_eps)
    for _ in range(10):
        phi = rng.standard_normal(g.K)
        assert g.integrate(hessian_apply(b, phi, p).values * phi) > 0


def test_hessian_linear_in_phi():
    g = SymmetricSphereGrid(2, 64)
    p = EnergyParams(0.05, 1.0)
    assert np.all(hessian_apply(g.constant(0.2), np.zeros(g.K), p).values == 0.0)


@pytest.mark.parametrize("dim", [2, 3])
def test_hessian_quadratic_form_vs_second_difference(dim, rng):
    g = SymmetricSphereGrid(dim, 200)
    p = EnergyParams(0.1, 1.0)
    worst = 0.0
    for _ in range(50):
        u = random_field(rng, g)
        phi = random_field(rng, g)
        fd = second_difference(p, g, u, phi)
        q = second_variation(u, phi, p, g)
        assert q == pytest.approx(g.integrate(hessian_apply(u, phi, p, g) * phi), rel=1e-10)
        worst = max(worst, abs(fd - q) / abs(q))
    assert worst <= 1e-4


# --- stable constants -----------------------------------------------------------

def test_stable_constants_oracle():
    # independent oracle: roots of t^3 - t - eps sigma lambda
    p = EnergyParams(0.1, 1.0)
    roots = np.sort(np.roots([1.0, 0.0, -1.0, -p.forcing]).real)
    sc = stable_constants(p)
    assert (sc.a_eps, sc.c_eps, sc.b_eps) == pytest.approx(tuple(roots), abs=1e-11)
    # frozen oracle roots of t^3 - t = 0.0471405
    assert (sc.a_eps, sc.b_eps, sc.c_eps) == pytest.approx(
        (-0.97553962660, 1.02278553989, -0.04724591329), abs=1e-10)


def test_stable_constants_symmetric_well():
    sc = stable_constants(EnergyParams(0.1, 0.0))
    assert (sc.a_eps, sc.b_eps, sc.c_eps) == (-1.0, 1.0, 0.0)


def test_stable_constants_limit_monotone():
    eps = [0.2, 0.1, 0.05, 0.02, 0.01, 0.001]
    a = [stable_constants(EnergyParams(e, 1.0)).a_eps for e in eps]
    b = [stable_constants(EnergyParams(e, 1.0)).b_eps for e in eps]
    assert np.all(np.diff(a) < 0) and np.all(np.diff(b) < 0)
    assert a[-1] == pytest.approx(-1.0, abs=1e-3) and b[-1] == pytest.approx(1.0, abs=1e-3)


def test_stable_constants_ordering_and_stability():
    for e in (0.2, 0.05, 0.001):
        p = EnergyParams(e, 1.0)
        sc = stable_constants(p)
        assert sc.a_eps < sc.c_eps < sc.b_eps
        assert p.well.second(sc.a_eps) > 0 and p.well.second(sc.b_eps) > 0


def test_inadmissible_eps():
    p = EnergyParams(0.2, 5.0)
    assert not p.admissible()
    with pytest.raises(AdmissibilityError, match="stable_constants"):
        stable_constants(p)


def test_bad_params():
    with pytest.raises(ParameterError):
        EnergyParams(0.3, 1.0)
    with pytest.raises(ParameterError):
        EnergyParams(0.1, -1.0)


def test_constant_energies_ordered():
    g = SymmetricSphereGrid(2, 100)
    for e in (0.1, 0.05, 0.01):
        p = EnergyParams(e, 1.0)
        sc = stable_constants(p)
        assert ac_energy(g.constant(sc.a_eps), p) > ac_energy(g.constant(sc.b_eps), p)


def test_energy_mass_finite(rng):
    g = SymmetricSphereGrid(2, 200)
    p = EnergyParams(0.05, 1.0)
    m = energy_mass(random_field(rng, g), p, g)
    assert np.isfinite(m) and m > 0
    assert energy_mass(g.constant(1.0), p) == 0.0
