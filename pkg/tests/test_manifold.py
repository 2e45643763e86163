import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh_tridiagonal

from phase_minmax.errors import GridError, ShapeError
from phase_minmax.manifold import (
    Field, SymmetricSphereGrid, geometry_constants, integrate, laplace_beltrami,
)

VOL = {2: 4 * np.pi, 3: 2 * np.pi ** 2}


@pytest.mark.parametrize("dim", [2, 3])
def test_laplacian_of_constant(dim):
    g = SymmetricSphereGrid(dim, 64)
    assert np.max(np.abs(laplace_beltrami(g.constant(3.7)).values)) < 1e-10


@pytest.mark.parametrize("dim,ev", [(2, -2.0), (3, -3.0)])
def test_laplacian_first_harmonic_second_order(dim, ev):
    errs = []
    for K in (200, 400, 800):
        g = SymmetricSphereGrid(dim, K)
        u = np.cos(g.theta)
        errs.append(np.max(np.abs(g.laplace_beltrami(u) - ev * u)))
    assert errs[-1] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_integrate_one_s2():
    assert integrate(SymmetricSphereGrid(2, 2000).constant(1.0)) == pytest.approx(4 * np.pi, abs=1e-4)


def test_integrate_one_s3():
    assert integrate(SymmetricSphereGrid(3, 2000).constant(1.0)) == pytest.approx(2 * np.pi ** 2, abs=1e-3)


def test_integrate_cos_s2():
    g = SymmetricSphereGrid(2, 2000)
    assert abs(integrate(Field(g, np.cos(g.theta)))) < 1e-8


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("K", [8, 9, 50, 333])
def test_weights_sum_to_volume(dim, K):
    # cell volumes are exact, so this holds at every K
    g = SymmetricSphereGrid(dim, K)
    assert g.weights.sum() == pytest.approx(VOL[dim], rel=1e-13)


def test_geometry_constants():
    s2 = geometry_constants(2)
    s3 = geometry_constants(SymmetricSphereGrid(3, 16))
    assert (s2.m, s2.diam, s2.vol) == (1.0, np.pi, 4 * np.pi)
    assert (s3.m, s3.diam, s3.vol) == (2.0, np.pi, 2 * np.pi ** 2)
    assert s2.m > 0 and s3.m > 0


def test_small_grid_rejected():
    with pytest.raises(GridError):
        SymmetricSphereGrid(2, 7)


def test_bad_dimension_rejected():
    with pytest.raises(GridError):
        SymmetricSphereGrid(4, 64)


def test_field_shape_and_finiteness():
    g = SymmetricSphereGrid(2, 16)
    with pytest.raises(ShapeError):
        Field(g, np.zeros(15))
    with pytest.raises(GridError):
        Field(g, np.full(16, np.nan))


def _ibp_gap(g, a, b, k):
    th = g.theta
    u = a * np.cos(th) + np.cos(2 * th)
    v = b * np.cos(k * th) + np.sin(th) ** 2
    lhs = g.integrate(u * g.laplace_beltrami(v))
    # oracle: exact derivatives at the nodes
    du = -a * np.sin(th) - 2 * np.sin(2 * th)
    dv = -b * k * np.sin(k * th) + 2 * np.sin(th) * np.cos(th)
    return abs(lhs + g.integrate(du * dv))


@pytest.mark.parametrize("dim", [2, 3])
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), k=st.integers(1, 4))
@settings(max_examples=25, deadline=None)
def test_integration_by_parts(dim, a, b, k):
    """int u Lap v = -int u' v' up to C/K^2, and the gap is second order in 1/K."""
    e1 = _ibp_gap(SymmetricSphereGrid(dim, 200), a, b, k)
    e2 = _ibp_gap(SymmetricSphereGrid(dim, 400), a, b, k)
    assert e2 * 400 ** 2 <= 100.0 * (1 + abs(a) + abs(b)) * k ** 2
    assert e2 <= 0.25 * e1 * 1.05 + 1e-12


def test_discrete_operator_is_self_adjoint(rng):
    g = SymmetricSphereGrid(3, 50)
    u, v = rng.standard_normal((2, 50))
    assert g.integrate(u * g.laplace_beltrami(v)) == pytest.approx(
        g.integrate(v * g.laplace_beltrami(u)), rel=1e-12)
    assert g.integrate(u * g.laplace_beltrami(v)) == pytest.approx(-g.dirichlet(u, v), rel=1e-12)


def test_spectral_gap_s2():
    g = SymmetricSphereGrid(2, 2000)
    lo, d, up = g.laplacian_bands()
    off = -np.sqrt(lo * up)  # symmetrized -Delta
    vals = eigh_tridiagonal(-d, off, eigvals_only=True, select="i", select_range=(0, 1))
    assert abs(vals[0]) < 1e-8
    assert vals[1] == pytest.approx(2.0, rel=0.02)
