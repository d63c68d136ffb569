import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from renewalkit.measures import Grid, GridFunction, HalfLineMeasure, convolve, tv_norm
from renewalkit.resolvent import (
    SingularAtZero,
    march,
    neumann_atoms,
    renewal_residual,
    renewal_solve,
    residual_tv,
    resolvent_l1,
    resolvent_measure,
    tol,
)
from renewalkit.verify import random_atomic_measure, random_mixed_measure


def test_tol_grows_with_h_and_horizon():
    assert tol(0.01, 1.0, 1.0) < tol(0.02, 1.0, 1.0)
    assert tol(0.01, 1.0, 1.0) < tol(0.01, 1.0, 2.0)
    assert tol(0.0, 1.0, 1.0) == pytest.approx(1e-11)


def test_geometric_atoms():
    # mu = a delta_1  =>  rho = sum_k a^k delta_k
    g = Grid(4.0, 0.01)
    rho = resolvent_measure(HalfLineMeasure.dirac(g, 1.0, 0.7))
    assert np.allclose(rho.locs, [1.0, 2.0, 3.0, 4.0])
    # no discretization error; only floating-point rounding of the products
    assert np.allclose(rho.weights[:, 0, 0], [0.7, 0.7 ** 2, 0.7 ** 3, 0.7 ** 4], rtol=1e-14, atol=0)


def test_atom_at_zero_half_and_singular():
    g = Grid(2.0, 0.01)
    rho = resolvent_measure(HalfLineMeasure.dirac(g, 0.0, 0.5))
    assert float(rho.atom_at_zero()[0, 0]) == 1.0
    with pytest.raises(SingularAtZero):
        resolvent_measure(HalfLineMeasure.dirac(g, 0.0, 1.0))


def test_matrix_atom_at_zero():
    g = Grid(1.0, 0.01)
    A = np.array([[0.2, 0.1], [0.0, -0.3]])
    rho = resolvent_measure(HalfLineMeasure(g, (2, 2), [0.0], [A]))
    assert np.allclose(rho.atom_at_zero(), A @ np.linalg.inv(np.eye(2) - A), atol=1e-15)


def test_constant_kernel_gives_exponential():
    # k = c on [0, T]: r = c e^{c t}
    h = 0.001
    g = Grid(2.0, h)
    c = 0.8
    r = resolvent_l1(GridFunction(g, np.full(g.N, c)))
    err = np.max(np.abs(np.asarray(r.values) - c * np.exp(c * g.t)))
    assert err < 10 * h ** 2


def test_unit_box_kernel_interval_recursion():
    # k = 1 on [0, 1], 0 beyond: r = e^t on [0, 1), r = e^{t-1}(e - t) on (1, 2]
    h = 0.001
    g = Grid(2.0, h)
    M = int(round(1 / h))
    kv = (g.t < 1.0 - 1e-12) * 1.0
    kl = (g.t <= 1.0 + 1e-12) * 1.0
    r = resolvent_l1(GridFunction(g, kv, kl))
    t = g.t
    v = np.asarray(r.values)
    assert np.max(np.abs(v[:M] - np.exp(t[:M]))) < 1e-5
    assert np.max(np.abs(v[M:] - np.exp(t[M:] - 1) * (np.e - t[M:]))) < 1e-5
    assert float(r.left[M]) == pytest.approx(np.e, abs=1e-5)


def test_resolvent_l1_second_order():
    errs = []
    for h in (0.01, 0.005):
        g = Grid(1.0, h)
        k = GridFunction(g, np.cos(g.t))
        r = resolvent_l1(k)
        # reference from an eight times finer grid
        ref = resolvent_l1(GridFunction(Grid(1.0, h / 8), np.cos(Grid(1.0, h / 8).t)))
        errs.append(abs(float(r.values[-1]) - float(ref.values[-1])))
    assert errs[1] < errs[0] / 3


def test_march_solves_linear_ode():
    # y = 1 + mu2 * (1 * y) with mu2 = a delta_0: y' = a y, y(0) = 1
    h = 0.001
    g = Grid(1.0, h)
    a = -1.3
    y = march(GridFunction(g, np.ones(g.N)), mu2=HalfLineMeasure.dirac(g, 0.0, a))
    assert np.max(np.abs(np.asarray(y.values) - np.exp(a * g.t))) < 10 * h ** 2


def test_off_grid_atoms_resolvent():
    g = Grid(3.0, 0.01)
    mu = HalfLineMeasure(g, (1, 1), [0.333, 0.71], [[[0.4]], [[-0.2]]])
    rho = resolvent_measure(mu)
    assert residual_tv(rho, mu, "left") < 1e-13
    assert residual_tv(rho, mu, "right") < 1e-13
    assert rho.is_pure_atomic()


def test_neumann_series_of_atoms_terminates():
    g = Grid(2.0, 0.01)
    mu = HalfLineMeasure(g, (1, 1), [0.5, 0.75], [[[1.0]], [[1.0]]])
    s = neumann_atoms(mu, mu)
    # all sums of 0.5 and 0.75 up to 2.0
    assert np.allclose(s.locs, [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0])
    assert np.array_equal(s.weights[:, 0, 0], [1, 1, 1, 2, 2, 3, 4])


@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_resolvent_identities_for_atoms(seed, n):
    rng = np.random.default_rng(seed)
    mu = random_atomic_measure(rng, n, 2.0, 0.01, on_grid=True)
    rho = resolvent_measure(mu)
    assert residual_tv(rho, mu, "left") <= 1e-10
    assert residual_tv(rho, mu, "right") <= 1e-10


@given(st.integers(0, 10 ** 6))
def test_resolvent_identities_for_mixed(seed):
    rng = np.random.default_rng(seed)
    h = 0.01
    mu = random_mixed_measure(rng, 2, 2.0, h, allow_zero=True)
    rho = resolvent_measure(mu)
    bound = tol(h, max(tv_norm(mu), 1.0), 2.0)
    assert residual_tv(rho, mu, "left") <= bound
    assert residual_tv(rho, mu, "right") <= bound


def test_renewal_solution_equals_resolvent_representation():
    g = Grid(2.0, 0.01)
    mu = HalfLineMeasure(g, (1, 1), [0.5], [[[0.5]]], density=0.3 * np.ones((g.N, 1, 1)))
    f = GridFunction(g, np.sin(3 * g.t))
    x = renewal_solve(mu, f)
    assert renewal_residual(mu, f, x) < tol(0.01, 1.0, 2.0)


def test_resolvent_of_zero_is_zero():
    g = Grid(1.0, 0.01)
    rho = resolvent_measure(HalfLineMeasure.zero(g))
    assert tv_norm(rho) == 0.0


def test_resolvent_commutes_with_kernel():
    rng = np.random.default_rng(0)
    mu = random_atomic_measure(rng, 2, 2.0, 0.01)
    rho = resolvent_measure(mu)
    assert tv_norm(convolve(mu, rho) - convolve(rho, mu)) < 1e-12
