import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from renewalkit.measures import (
    Grid,
    GridFunction,
    HalfLineMeasure,
    NBVFunction,
    convolve,
    convolve_fn,
    cumtrapz,
    laplace,
    pairing,
    tv_norm,
)
from renewalkit.perturbation import nbv_samples_to_measure
from renewalkit.resolvent import tol
from renewalkit.semigroup import HistoryFunction

H = 0.01
G3 = Grid(3.0, H)


def atoms_strategy(max_atoms=4):
    loc = st.integers(0, 100).map(lambda k: k * H)
    w = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
    return st.lists(st.tuples(loc, w), min_size=1, max_size=max_atoms)


def _measure(atoms, grid=G3):
    locs = [a for a, _ in atoms]
    ws = [[[w]] for _, w in atoms]
    return HalfLineMeasure(grid, (1, 1), locs, ws)


# ---------------------------------------------------------------------------
# grid and basic objects
# ---------------------------------------------------------------------------

def test_grid_requires_step_dividing_the_unit():
    with pytest.raises(ValueError):
        Grid(1.0, 0.3)
    g = Grid(2.0, 0.01)
    assert g.N == 201
    assert g.t[-1] == pytest.approx(2.0)


def test_dirac_atoms_merge_and_drop_zero_weights():
    mu = HalfLineMeasure(G3, (1, 1), [0.5, 0.5, 1.0, 0.2], [[[1.0]], [[2.0]], [[0.0]], [[-1.0]]])
    assert list(mu.locs) == [0.2, 0.5]
    assert mu.weights[1, 0, 0] == 3.0


def test_cumulative_of_density_is_the_integral():
    # density 2t on [0, 3]: F(t) = t^2, exact under the trapezoid rule
    mu = HalfLineMeasure.from_density(G3, lambda t: 2 * t)
    F, Fl = mu.cumulative()
    assert np.max(np.abs(F[:, 0, 0] - G3.t ** 2)) < 1e-12


def test_nbv_function_evaluates_atoms_right_continuously():
    mu = HalfLineMeasure.dirac(G3, 1.0, 2.0)
    B = NBVFunction(mu)
    assert float(B(0.999)[0, 0]) == 0.0
    assert float(B(1.0)[0, 0]) == 2.0
    assert float(B(5.0)[0, 0]) == 2.0


def test_serialization_round_trip():
    mu = HalfLineMeasure(Grid(1.0, H), (2, 2), [0.3, 1.0], [np.eye(2), -np.eye(2)],
                         density=np.ones((101, 2, 2)))
    nu = HalfLineMeasure.from_dict(mu.to_dict())
    assert tv_norm(mu - nu) == 0.0
    assert mu.to_dict() == nu.to_dict()


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def test_dirac_convolution_adds_locations():
    a = HalfLineMeasure.dirac(G3, 0.7, 2.0)
    b = HalfLineMeasure.dirac(G3, 1.3, -0.5)
    c = convolve(a, b)
    assert list(c.locs) == [pytest.approx(2.0)]
    assert c.weights[0, 0, 0] == -1.0


def test_convolution_beyond_horizon_is_dropped():
    a = HalfLineMeasure.dirac(G3, 2.0, 1.0)
    assert len(convolve(a, a).locs) == 0


def test_density_convolution_matches_closed_form():
    # 1_[0,1] * 1_[0,1] has the triangle density t on [0,1], 2 - t on [1,2]
    h = 0.005
    g = Grid(3.0, h)
    box = HalfLineMeasure.from_density(g, lambda t: (t <= 1.0) * 1.0)
    v = np.asarray(box.density).copy()
    left = v.copy()
    M = int(round(1 / h))
    v[M] = 0.0  # right value at the jump
    box = HalfLineMeasure(g, (1, 1), density=v, density_left=left)
    c = convolve(box, box)
    t = g.t
    tri = np.where(t <= 1, t, np.where(t <= 2, 2 - t, 0.0))
    assert np.max(np.abs(c.density[:, 0, 0] - tri)) < 5 * h


def test_atom_times_function():
    g = Grid(2.0, H)
    f = GridFunction(g, np.sin(g.t))
    mu = HalfLineMeasure.dirac(g, 0.5, 3.0)
    out = convolve_fn(mu, f)
    expect = np.where(g.t >= 0.5, 3.0 * np.sin(np.maximum(g.t - 0.5, 0.0)), 0.0)
    assert np.max(np.abs(np.asarray(out.values).reshape(-1) - expect)) < 1e-12


@given(atoms_strategy(), atoms_strategy())
def test_atomic_convolution_commutes(a, b):
    A, B = _measure(a), _measure(b)
    assert tv_norm(convolve(A, B) - convolve(B, A)) < 1e-12


@given(atoms_strategy(3), atoms_strategy(3), atoms_strategy(3))
def test_atomic_convolution_associates(a, b, c):
    A, B, C = _measure(a), _measure(b), _measure(c)
    assert tv_norm(convolve(convolve(A, B), C) - convolve(A, convolve(B, C))) < 1e-11


@given(atoms_strategy(), atoms_strategy())
def test_total_variation_is_submultiplicative(a, b):
    A, B = _measure(a), _measure(b)
    assert tv_norm(convolve(A, B)) <= tv_norm(A) * tv_norm(B) + 1e-12


@given(atoms_strategy(), atoms_strategy(),
       st.floats(0.0, 2.0), st.floats(-5.0, 5.0))
def test_laplace_turns_convolution_into_product(a, b, x, y):
    g = Grid(5.0, H)  # long enough that nothing is truncated
    A, B = _measure(a, g), _measure(b, g)
    z = complex(x, y)
    lhs = laplace(convolve(A, B), z)
    rhs = laplace(A, z) @ laplace(B, z)
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * max(1.0, tv_norm(A) * tv_norm(B))


def test_laplace_of_dirac():
    g = Grid(1.0, H)
    z = 0.3 + 2.0j
    val = laplace(HalfLineMeasure.dirac(g, 0.5, 2.0), z)[0, 0]
    assert val == pytest.approx(2.0 * np.exp(-0.5 * z), abs=1e-15)


def test_mixed_convolution_commutes_within_tolerance():
    g = Grid(2.0, H)
    a = HalfLineMeasure(g, (1, 1), [0.25], [[[0.5]]], density=np.cos(g.t)[:, None, None])
    b = HalfLineMeasure(g, (1, 1), [0.6], [[[-1.0]]], density=(1 + g.t)[:, None, None])
    assert tv_norm(convolve(a, b) - convolve(b, a)) <= tol(H, tv_norm(a) + tv_norm(b), 2.0)


# ---------------------------------------------------------------------------
# NBV view and pairings
# ---------------------------------------------------------------------------

def test_nbv_samples_round_trip():
    g = Grid(2.0, H)
    mu = HalfLineMeasure(g, (1, 1), [0.0, 0.4], [[[1.0]], [[-2.0]]], density=np.exp(-g.t)[:, None, None])
    F, Fl = mu.cumulative()
    G, Gl = nbv_samples_to_measure(g, F, Fl).cumulative()
    assert np.max(np.abs(F - G)) < 1e-12
    assert np.max(np.abs(Fl - Gl)) < 1e-12


def test_pairing_with_constant_history_is_total_mass():
    g1 = Grid(1.0, H)
    mu = HalfLineMeasure(g1, (2, 2), [0.0, 1.0], [np.eye(2), [[0, 1], [1, 0]]],
                         density=np.full((101, 2, 2), 0.25))
    v = np.array([1.5, -2.0])
    phi = HistoryFunction(np.tile(v, (101, 1)), v)
    assert np.allclose(pairing(mu, phi), mu.total_mass() @ v, atol=1e-13)


def test_pairing_reads_the_history_at_minus_sigma():
    g1 = Grid(1.0, H)
    th = -1 + g1.t
    phi = HistoryFunction(th[:, None] ** 2, [0.0])
    mu = HalfLineMeasure.dirac(g1, 0.3, 1.0)
    assert float(pairing(mu, phi)[0]) == pytest.approx(0.09, abs=1e-12)


def test_cumtrapz_exact_for_linear():
    h = 0.1
    t = np.arange(11) * h
    F = cumtrapz(t, t, h)
    assert np.allclose(F, t ** 2 / 2, atol=1e-14)
