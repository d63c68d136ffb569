import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from renewalkit.measures import Grid, GridFunction, HalfLineMeasure
from renewalkit.semigroup import (
    CumulativeHistory,
    HistoryFunction,
    ShiftB,
    ShiftNBV,
    TranslationOrbit,
    check_generator_integral,
    check_identity,
    check_semigroup_law,
    fit_growth,
    growth_bound_ok,
    random_cumulative,
    random_history,
    shift_apply_B,
    shift_apply_NBV,
)

H = 0.01
G = Grid(3.0, H)
steps = st.integers(0, 150).map(lambda k: k * H)


def test_history_point_value_is_separate():
    phi = HistoryFunction.unit_at_zero(1, H)
    assert np.array_equal(np.asarray(phi.at_zero).reshape(-1), [1.0])
    assert np.all(phi.values[:-1] == 0.0)
    assert phi.sup_norm() == 1.0


def test_shift_B_extends_by_value_at_zero():
    th = -1 + np.arange(101) * H
    phi = HistoryFunction(th[:, None], [0.0])
    out = shift_apply_B(0.25, phi)
    expect = np.where(th + 0.25 < 0, th + 0.25, 0.0)
    assert np.max(np.abs(out.values[:, 0] - expect)) < 1e-14


def test_shift_B_off_grid_time_interpolates():
    th = -1 + np.arange(101) * H
    phi = HistoryFunction(th[:, None], [0.0])
    out = shift_apply_B(0.255, phi)
    expect = np.minimum(th + 0.255, 0.0)
    assert np.max(np.abs(out.values[:, 0] - expect)) < 1e-12


def test_shift_NBV_truncates_cohorts():
    psi = CumulativeHistory(HalfLineMeasure(Grid(1.0, H), (1, 1), [0.0, 0.5], [[[1.0]], [[2.0]]]))
    out = shift_apply_NBV(0.6, psi)
    atoms = out.atoms()
    assert len(atoms) == 1
    assert atoms[0][0] == pytest.approx(-0.6)
    out = shift_apply_NBV(1.2, psi)
    assert len(out.atoms()) == 0


def test_translation_orbit_reads_the_trajectory():
    g = Grid(2.0, H)
    x = GridFunction(g, np.sin(g.t)[:, None])
    phi = HistoryFunction(np.zeros((101, 1)), [0.0])
    st_ = TranslationOrbit(phi, x).state(1.5)
    th = -1 + np.arange(101) * H
    assert np.max(np.abs(st_.values[:, 0] - np.where(1.5 + th >= 0, np.sin(np.maximum(1.5 + th, 0)), 0))) < 1e-14


@given(steps, steps, st.integers(0, 10 ** 6))
def test_shift_B_semigroup_law(t, s, seed):
    S = ShiftB(G, 2)
    y = random_history(np.random.default_rng(seed), 2, H, smooth=False)
    assert check_semigroup_law(S, t, s, y) <= 1e-12


@given(steps, steps, st.integers(0, 10 ** 6))
def test_shift_NBV_semigroup_law(t, s, seed):
    S = ShiftNBV(G, 2)
    y = random_cumulative(np.random.default_rng(seed), 2, H)
    assert check_semigroup_law(S, t, s, y) <= 1e-12


def test_identity_and_probes():
    rng = np.random.default_rng(0)
    for S in (ShiftB(G, 2), ShiftNBV(G, 2)):
        y = S.random_state(rng)
        assert check_identity(S, y, S.random_probes(rng, 10)) <= 1e-14


def test_shift_generator_integral():
    S = ShiftB(G, 1)
    th = -1 + np.arange(101) * H
    y = HistoryFunction(np.sin(th)[:, None] + 1.0, [1.0])
    z = HistoryFunction(np.cos(th)[:, None], [0.0])
    res = check_generator_integral(S, y, z, 0.5)
    assert res < 1e-4


def test_point_probes_recover_states():
    rng = np.random.default_rng(1)
    S = ShiftB(Grid(1.0, 0.1), 1)
    y = random_history(rng, 1, 0.1)
    vals = [float(np.asarray(S.pair(p, y)).reshape(-1)[0]) for p in S.point_probes()]
    assert np.allclose(vals, y.values[:, 0], atol=1e-14)


def test_shift_growth_bound_is_contractive():
    rng = np.random.default_rng(2)
    S = ShiftB(G, 1)
    states = [S.random_state(rng) for _ in range(3)]
    M, om = fit_growth(S, states, [0.5, 1.0, 2.0])
    assert M >= 1.0 and om == pytest.approx(0.0, abs=1e-9)
    assert growth_bound_ok(S, states, [0.5, 1.0, 2.0])


def test_apply_rejects_times_outside_horizon():
    S = ShiftB(G, 1)
    with pytest.raises(ValueError):
        S.apply(4.0, random_history(np.random.default_rng(0), 1, H))
