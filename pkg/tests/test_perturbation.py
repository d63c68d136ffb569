import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renewalkit import renewal, rfde
from renewalkit.measures import Grid, GridFunction, HalfLineMeasure
from renewalkit.perturbation import (
    BoundedRankData,
    StieltjesRankData,
    bounded_kernel_k,
    bounded_perturbed_apply,
    bounded_perturbed_series,
    point_functional,
    rfde_rank_data,
)
from renewalkit.semigroup import (
    CumulativeHistory,
    HistoryFunction,
    ShiftB,
    random_cumulative,
    random_functional,
    random_history,
)
from renewalkit.verify import random_mixed_measure

H = 0.01
G1 = Grid(1.0, H)


def test_regime_flag_is_validated():
    with pytest.raises(ValueError):
        StieltjesRankData(None, None, "X")


def test_without_perturbation_engine_returns_unperturbed_flow():
    S0 = ShiftB(Grid(2.0, H), 1)
    y = random_history(np.random.default_rng(0), 1, H)
    out = bounded_perturbed_apply(S0, BoundedRankData(None, None), 0.5, y)
    assert (out - S0.apply(0.5, y)).sup_norm() == 0.0


def test_point_functional_reads_every_node():
    S0 = ShiftB(Grid(1.0, 0.1), 2)
    y = random_history(np.random.default_rng(1), 2, 0.1)
    P = point_functional(S0)
    vals = np.asarray(S0.pair(P, y)).reshape(11, 2)
    assert np.allclose(vals[::-1], y.values, atol=1e-14)


def test_rfde_kernel_k_is_zeta_paired_with_translated_q():
    # for zeta = a delta_1: k(t) = <zeta, S0(t) q> = a for t >= 1, 0 before
    sys = rfde.RFDESystem(HalfLineMeasure.dirac(G1, 1.0, -0.8), 2.0)
    k = np.asarray(bounded_kernel_k(ShiftB(sys.grid, 1), rfde_rank_data(sys)).values).reshape(-1)
    t = sys.grid.t
    assert np.array_equal(k[t >= 1.0 - 1e-12], np.full(np.sum(t >= 1.0 - 1e-12), -0.8))
    assert np.all(k[t < 1.0 - 1e-12] == 0.0)


@settings(max_examples=8)
@given(st.integers(0, 10 ** 6))
def test_bounded_engine_matches_direct_rfde(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    sys = rfde.RFDESystem(random_mixed_measure(rng, n, 1.0, H, 1.0, allow_zero=True), 2.0)
    phi = random_history(rng, n, H)
    t = int(rng.integers(0, 201)) * H
    a = rfde.apply(sys, t, phi)
    b = bounded_perturbed_apply(ShiftB(sys.grid, n), rfde_rank_data(sys), t, phi)
    assert float(np.max(np.abs(a.values - b.values))) <= 5 * sys.tol()
    assert float(np.max(np.abs(a.at_zero - b.at_zero))) <= 5 * sys.tol()


@settings(max_examples=8)
@given(st.integers(0, 10 ** 6))
def test_v_and_w_forms_agree(seed):
    rng = np.random.default_rng(seed)
    sys = rfde.RFDESystem(random_mixed_measure(rng, 2, 1.0, H, 1.0, allow_zero=True), 2.0)
    S0 = ShiftB(sys.grid, 2)
    data = rfde_rank_data(sys)
    phi = random_history(rng, 2, H)
    probe = random_functional(rng, 2, H)
    a = bounded_perturbed_series(S0, data, phi, probe, "v")
    b = bounded_perturbed_series(S0, data, phi, probe, "w")
    assert float(np.max(np.abs(a - b))) <= sys.tol()


def test_relatively_bounded_engine_cell_division_exact():
    sys = renewal.RESystem(HalfLineMeasure.dirac(G1, 1.0, 2.0), 3.0)
    q = CumulativeHistory.dirac_at_zero(H)
    for t in (0.5, 1.5, 2.25):
        a = renewal.re_apply(sys, t, q).values()
        b = renewal.re_engine_apply(sys, t, q)
        assert np.max(np.abs(a - b)) == 0.0


@settings(max_examples=5)
@given(st.integers(0, 10 ** 6))
def test_relatively_bounded_engine_matches_direct_renewal(seed):
    rng = np.random.default_rng(seed)
    sys = renewal.RESystem(random_mixed_measure(rng, 1, 1.0, H, 0.8), 2.0)
    psi = random_cumulative(rng, 1, H)
    t = int(rng.integers(0, 201)) * H
    a = renewal.re_apply(sys, t, psi).values()
    b = renewal.re_engine_apply(sys, t, psi)
    assert float(np.max(np.abs(a - b))) <= 5 * sys.tol()


def test_bounded_engine_for_smooth_renewal_kernel():
    rng = np.random.default_rng(2)
    k = GridFunction(G1, 0.9 * np.sin(np.pi * G1.t) + 0.2)
    sys = renewal.RESystem(k, 2.0)
    psi = random_cumulative(rng, 1, H)
    for t in (0.37, 1.0, 1.63):
        a = renewal.re_apply(sys, t, psi).values()
        b = renewal.re_engine_apply(sys, t, psi)
        assert float(np.max(np.abs(a - b))) <= 5 * sys.tol()


def test_cumulative_output_identity():
    L = HalfLineMeasure(G1, (1, 1), [0.5], [[[0.4]]], density=0.5 * np.sin(np.pi * G1.t))
    sys = renewal.RESystem(L, 3.0)
    psi = random_cumulative(np.random.default_rng(3), 1, H)
    assert renewal.cumulative_output_residual(sys, psi, 0.7, 1.1) <= 1e-12
