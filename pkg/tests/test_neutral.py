import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renewalkit import neutral, rfde
from renewalkit.measures import Grid, HalfLineMeasure
from renewalkit.semigroup import HistoryFunction, TranslationOrbit, check_semigroup_law, random_history
from renewalkit.verify import random_mixed_measure

H = 0.01
G1 = Grid(1.0, H)


def example_system(T=3.0, h=H):
    g = Grid(1.0, h)
    eta = HalfLineMeasure.from_density(g, lambda s: 0.5 + 0 * s)
    zeta = HalfLineMeasure.dirac(g, 0.0, -1.0)
    return neutral.NFDESystem(eta, zeta, T, h)


def random_system(rng, n, T=2.0, min_atom=0.15):
    e = random_mixed_measure(rng, n, 1.0, H, 0.6)
    keep = e.locs > min_atom
    e = HalfLineMeasure(G1, e.dims, e.locs[keep], e.weights[keep], e.density, e.density_left)
    z = random_mixed_measure(rng, n, 1.0, H, 1.0, allow_zero=True)
    return neutral.NFDESystem(e, z, T)


def test_first_interval_closed_form_and_order():
    # x' - 0.5 x + 0.5 = -x on [0, 1]  =>  x = -1 + 2 e^{-t/2}
    errs = []
    for h in (0.02, 0.01, 0.005):
        sys = example_system(1.0, h)
        x = np.asarray(neutral.solve_nfde(sys, HistoryFunction.constant([1.0], h)).values)[:, 0]
        errs.append(np.max(np.abs(x - (-1 + 2 * np.exp(-sys.grid.t / 2)))))
    assert errs[0] <= 1e-5
    assert errs[1] <= errs[0] / 3 and errs[2] <= errs[1] / 3


def test_zero_eta_reduces_to_rfde():
    rng = np.random.default_rng(0)
    z = random_mixed_measure(rng, 2, 1.0, H, 1.0, allow_zero=True)
    sys = neutral.NFDESystem(HalfLineMeasure.zero(G1, (2, 2)), z, 2.0)
    phi = random_history(rng, 2, H)
    a = np.asarray(neutral.solve_nfde(sys, phi).values)
    b = np.asarray(rfde.solve_ivp(rfde.RFDESystem(z, 2.0), phi).values)
    assert np.max(np.abs(a - b)) == 0.0


def test_eta_atoms_near_zero_are_rejected():
    eta = HalfLineMeasure.dirac(G1, 0.05, 0.3)
    with pytest.raises(ValueError):
        neutral.NFDESystem(eta, HalfLineMeasure.zero(G1), 1.0)


def test_pure_difference_equation_with_atom():
    # zeta = 0, eta = c delta_1, phi = 1: x(t) - c x(t - 1) = 1 - c, so x = 1
    eta = HalfLineMeasure.dirac(G1, 1.0, 0.5)
    sys = neutral.NFDESystem(eta, HalfLineMeasure.zero(G1), 3.0)
    x = np.asarray(neutral.solve_nfde(sys, HistoryFunction.constant([1.0], H)).values)[:, 0]
    assert np.max(np.abs(x - 1.0)) < 1e-14


def test_difference_equation_propagates_jumps():
    # zeta = 0, eta = c delta_1, phi = 1 on [-1, 0) and phi(0) = 2:
    # x(t) - c x(t-1) = 2 - c  =>  x = 2 on [0, 1), x = 2 - c + 2c on [1, 2)
    c = 0.5
    eta = HalfLineMeasure.dirac(G1, 1.0, c)
    sys = neutral.NFDESystem(eta, HalfLineMeasure.zero(G1), 2.0)
    phi = HistoryFunction(np.ones((101, 1)), [2.0])
    x = np.asarray(neutral.solve_nfde(sys, phi).values)[:, 0]
    t = sys.grid.t
    assert np.allclose(x[t < 1 - 1e-9], 2.0, atol=1e-14)
    assert np.allclose(x[(t >= 1) & (t < 2 - 1e-9)], 2.0 - c + c * 2.0, atol=1e-14)


@settings(max_examples=5)
@given(st.integers(0, 10 ** 6))
def test_conservation_law(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, int(rng.integers(1, 3)))
    assert neutral.conservation_defect(sys, random_history(rng, sys.n, H)) <= 1e-10


@settings(max_examples=4)
@given(st.integers(0, 10 ** 6))
def test_engine_matches_direct(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, int(rng.integers(1, 3)))
    phi = random_history(rng, sys.n, H)
    t = int(rng.integers(0, 201)) * H
    a = neutral.nfde_apply(sys, t, phi)
    b = neutral.nfde_engine_apply(sys, t, phi)
    assert float(np.max(np.abs(a.values - b.values))) <= 5 * sys.tol()


def test_variation_of_constants_identity():
    rng = np.random.default_rng(5)
    sys = random_system(rng, 2)
    assert neutral.nfde_identity_residual(sys, random_history(rng, 2, H)) <= sys.tol()


def test_V0_equals_shifted_pairing():
    # V0(t) phi = <eta, z_t> - <eta, phi> with z the RFDE solution
    rng = np.random.default_rng(6)
    sys = random_system(rng, 1)
    phi = random_history(rng, 1, H)
    V0 = np.asarray(neutral.nfde_V0(sys, phi).values).reshape(-1)
    z = rfde.solve_ivp(sys.rfde, phi)
    pe = np.asarray(TranslationOrbit(phi, z).pair_series(sys.eta)).reshape(-1)
    assert np.max(np.abs(V0 - (pe - pe[0]))) <= sys.tol()


def test_semigroup_law():
    rng = np.random.default_rng(7)
    sys = random_system(rng, 2, T=3.0)
    S = neutral.NFDESemigroup(sys)
    for _ in range(5):
        t, s = (int(rng.integers(0, 151)) * H for _ in range(2))
        assert check_semigroup_law(S, t, s, random_history(rng, 2, H)) <= 5 * sys.tol()


def test_kernel_K_keeps_eta_atoms():
    eta = HalfLineMeasure(G1, (1, 1), [0.5], [[[0.3]]], density=0.2 * np.ones((101, 1, 1)))
    sys = neutral.NFDESystem(eta, HalfLineMeasure.dirac(G1, 1.0, -0.5), 2.0)
    K = neutral.nfde_kernel_K(sys)
    assert list(K.locs) == [0.5]
    assert K.weights[0, 0, 0] == 0.3


def test_example_is_stable():
    sys = example_system()
    v = neutral.nfde_stability(sys)
    assert v["verdict"] == "stable"
