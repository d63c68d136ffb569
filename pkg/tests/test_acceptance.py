"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL summary that is echoed in the
terminal summary of the pytest run.
"""

import time

import numpy as np

from conftest import record
from renewalkit import neutral, renewal, rfde, stability
from renewalkit.measures import Grid, HalfLineMeasure, pairing, tv_norm
from renewalkit.perturbation import bounded_perturbed_apply, rfde_rank_data
from renewalkit.resolvent import SingularAtZero, residual_tv, resolvent_measure, tol
from renewalkit.semigroup import (
    CumulativeHistory,
    HistoryFunction,
    ShiftB,
    ShiftNBV,
    check_generator_integral,
    check_semigroup_law,
    random_cumulative,
    random_history,
)
from renewalkit.verify import (
    SUITES,
    _grid_time,
    random_atomic_measure,
    random_mixed_measure,
    rfde_domain_pair,
    run_suite,
)

LAMBERT_W1 = 0.5671432904097838


def mos_solution(t):
    """Method-of-steps solution of x'(t) = -x(t - 1) with x = 1 on [-1, 0], t in [0, 3]."""
    t = np.asarray(t, dtype=float)
    s = t - 1.0
    u = t - 2.0
    return np.where(t <= 1.0, 1.0 - t,
                    np.where(t <= 2.0, s * s / 2.0 - s, -0.5 + u * u / 2.0 - u ** 3 / 6.0))


def _delay_minus_one(T, h):
    return rfde.RFDESystem(HalfLineMeasure.dirac(Grid(1.0, h), 1.0, -1.0), T, h)


def test_criterion_01_rfde_oracle():
    h = 1e-3
    sys = _delay_minus_one(2.0, h)
    t0 = time.perf_counter()
    x = np.asarray(rfde.solve_ivp(sys, HistoryFunction.constant([1.0], h)).values)[:, 0]
    dt = time.perf_counter() - t0
    e1 = abs(x[1000] - 0.0)
    e2 = abs(x[2000] + 0.5)
    ok = e1 <= 2e-3 and e2 <= 2e-3 and dt < 1.0
    record(1, "RFDE method-of-steps oracle", ok, f"|x(1)|={e1:.2e} |x(2)+0.5|={e2:.2e} runtime={dt:.3f}s")
    assert ok


def test_criterion_02_grid_convergence():
    errs, sups = [], []
    for h in (1e-3, 5e-4):
        sys = _delay_minus_one(3.0, h)
        x = np.asarray(rfde.solve_ivp(sys, HistoryFunction.constant([1.0], h)).values)[:, 0]
        i1, i2 = int(round(1 / h)), int(round(2 / h))
        errs.append(max(abs(x[i1]), abs(x[i2] + 0.5)))
        sups.append(float(np.max(np.abs(x - mos_solution(sys.grid.t)))))
    if errs[0] > 1e-13:
        ratio = errs[1] / errs[0]
        how = "nodal error at t=1,2"
    else:
        # the nodal errors are at round-off already; measure the sup error
        # over [0, 3], where the exact solution is a cubic
        ratio = sups[1] / sups[0]
        how = f"nodal errors at round-off ({errs[0]:.1e}, {errs[1]:.1e}); sup error on [0,3]"
    ok = ratio <= 1.0 / 3.0
    record(2, "grid convergence (error shrinks >= 3x at h/2)", ok, f"ratio={ratio:.3f} via {how}")
    assert ok


def test_criterion_03_resolvent_identities():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    atom_res = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        mu = random_atomic_measure(rng, n, 3.0, 1e-3, max_atoms=5)
        assert len(mu.locs) <= 5 and mu.is_pure_atomic()
        rho = resolvent_measure(mu)
        atom_res = max(atom_res, residual_tv(rho, mu, "left"), residual_tv(rho, mu, "right"))
    h = 1e-3
    mixed = 0.0
    for _ in range(5):
        n = int(rng.integers(1, 4))
        mu = random_mixed_measure(rng, n, 2.0, h)
        rho = resolvent_measure(mu)
        bound = tol(h, max(tv_norm(mu), 1.0), 2.0)
        mixed = max(mixed, max(residual_tv(rho, mu, "left"), residual_tv(rho, mu, "right")) / bound)
    dt = time.perf_counter() - t0
    ok = atom_res <= 1e-10 and mixed <= 1.0 and dt < 5.0
    record(3, "resolvent identities (atoms exact, mixed within tol)", ok,
           f"atoms={atom_res:.2e} mixed/tol={mixed:.3f} runtime={dt:.2f}s")
    assert ok


def test_criterion_04_atom_at_zero():
    g = Grid(2.0, 0.01)
    rho = resolvent_measure(HalfLineMeasure.dirac(g, 0.0, 0.5))
    exact = float(rho.atom_at_zero()[0, 0]) == 1.0
    try:
        resolvent_measure(HalfLineMeasure.dirac(g, 0.0, 1.0))
        raised = False
    except SingularAtZero:
        raised = True
    ok = exact and raised
    record(4, "atom-at-zero reduction", ok, f"rho({{0}})={float(rho.atom_at_zero()[0, 0])!r} singular_raised={raised}")
    assert ok


def test_criterion_05_semigroup_law():
    rng = np.random.default_rng(5)
    h = 0.01
    g = Grid(3.0, h)
    shift = 0.0
    for Sg in (ShiftB(g, 2), ShiftNBV(g, 2)):
        for _ in range(50):
            t = _grid_time(rng, h, 0.0, 1.5)
            s = _grid_time(rng, h, 0.0, 1.5)
            shift = max(shift, check_semigroup_law(Sg, t, s, Sg.random_state(rng)))
    rel = {}
    zeta = random_mixed_measure(rng, 2, 1.0, h, 1.0, allow_zero=True)
    sysr = rfde.RFDESystem(zeta, 3.0)
    eta = random_mixed_measure(rng, 2, 1.0, h, 0.6)
    eta = HalfLineMeasure(eta.grid, eta.dims, [], [], eta.density, eta.density_left)
    sysn = neutral.NFDESystem(eta, zeta, 3.0)
    sysb = renewal.RESystem(random_mixed_measure(rng, 2, 1.0, h, 0.8), 3.0)
    for name, Sg, mk, tl in (
        ("rfde", rfde.RFDESemigroup(sysr), lambda: random_history(rng, 2, h), sysr.tol()),
        ("nfde", neutral.NFDESemigroup(sysn), lambda: random_history(rng, 2, h), sysn.tol()),
        ("re", renewal.RESemigroup(sysb), lambda: random_cumulative(rng, 2, h), sysb.tol()),
    ):
        worst = 0.0
        for _ in range(20):
            t = _grid_time(rng, h, 0.0, 1.5)
            s = _grid_time(rng, h, 0.0, 1.5)
            worst = max(worst, check_semigroup_law(Sg, t, s, mk()) / (5 * tl))
        rel[name] = worst
    ok = shift <= 1e-12 and all(v <= 1.0 for v in rel.values())
    record(5, "semigroup law", ok, f"shifts={shift:.1e} " + " ".join(f"{k}/5tol={v:.1e}" for k, v in rel.items()))
    assert ok


def test_criterion_06_generator_integral():
    rng = np.random.default_rng(6)
    h = 0.01
    sys = rfde.RFDESystem(random_mixed_measure(rng, 2, 1.0, h, 1.0, allow_zero=True), 3.0)
    Sg = rfde.RFDESemigroup(sys)
    worst = 0.0
    for _ in range(10):
        y, z = rfde_domain_pair(rng, sys)
        assert np.allclose(z.at_zero, pairing(sys.zeta, y), rtol=0, atol=1e-12)
        t = _grid_time(rng, h, 0.1, 2.0)
        worst = max(worst, check_generator_integral(Sg, y, z, t, sys.zeta))
    ok = worst <= 5 * sys.tol()
    record(6, "generator integral identity", ok, f"residual={worst:.2e} bound={5 * sys.tol():.2e}")
    assert ok


def _hist_diff(a, b):
    return max(float(np.max(np.abs(a.values - b.values))), float(np.max(np.abs(a.left - b.left))),
               float(np.max(np.abs(a.at_zero - b.at_zero))))


def test_criterion_07_perturbation_consistency():
    rng = np.random.default_rng(7)
    h = 0.01
    g1 = Grid(1.0, h)
    w_rfde = w_nfde = w_re = 0.0
    for _ in range(10):
        n = int(rng.integers(1, 3))
        zeta = random_mixed_measure(rng, n, 1.0, h, 1.0, allow_zero=True)
        sys = rfde.RFDESystem(zeta, 2.0)
        phi = random_history(rng, n, h)
        t = _grid_time(rng, h, 0.0, 2.0)
        a = rfde.apply(sys, t, phi)
        b = bounded_perturbed_apply(ShiftB(sys.grid, n), rfde_rank_data(sys), t, phi)
        w_rfde = max(w_rfde, _hist_diff(a, b) / (5 * sys.tol()))
    for _ in range(10):
        n = int(rng.integers(1, 3))
        e = random_mixed_measure(rng, n, 1.0, h, 0.6)
        keep = e.locs > 0.15
        e = HalfLineMeasure(g1, e.dims, e.locs[keep], e.weights[keep], e.density, e.density_left)
        z = random_mixed_measure(rng, n, 1.0, h, 1.0, allow_zero=True)
        sysn = neutral.NFDESystem(e, z, 2.0)
        y = random_history(rng, n, h)
        t = _grid_time(rng, h, 0.0, 2.0)
        a = neutral.nfde_apply(sysn, t, y)
        b = neutral.nfde_engine_apply(sysn, t, y)
        w_nfde = max(w_nfde, _hist_diff(a, b) / (5 * sysn.tol()))
    for _ in range(10):
        n = int(rng.integers(1, 3))
        sysb = renewal.RESystem(random_mixed_measure(rng, n, 1.0, h, 0.8), 2.0)
        psi = random_cumulative(rng, n, h)
        t = _grid_time(rng, h, 0.0, 2.0)
        a = renewal.re_apply(sysb, t, psi).values()
        b = renewal.re_engine_apply(sysb, t, psi)
        w_re = max(w_re, float(np.max(np.abs(a - b))) / (5 * sysb.tol()))
    ok = max(w_rfde, w_nfde, w_re) <= 1.0
    record(7, "perturbation consistency (direct vs engine)", ok,
           f"rfde/5tol={w_rfde:.1e} nfde/5tol={w_nfde:.1e} re-bv/5tol={w_re:.1e}")
    assert ok


def test_criterion_08_laplace_cross_check():
    h = 0.01
    sys = _delay_minus_one(30.0, h)
    phi = HistoryFunction.constant([1.0], h)
    th = [0.0, -0.5, -1.0]
    num = rfde.laplace_of_orbit(sys, phi, 1.0, th)
    ana = rfde.laplace_of_resolvent(sys, phi, 1.0, th)
    err = float(np.max(np.abs(np.asarray(num) - np.asarray(ana))))
    ok = err <= 1e-3
    record(8, "Laplace transform of the orbit vs generator resolvent", ok, f"max error={err:.2e}")
    assert ok


def test_criterion_09_cell_division():
    h = 0.01
    sys = renewal.RESystem(HalfLineMeasure.dirac(Grid(1.0, h), 1.0, 2.0), 3.0)
    q = CumulativeHistory.dirac_at_zero(h)
    B = renewal.cumulative_births(sys, q)
    b1, b2 = float(B(1.0)[0, 0]), float(B(2.0)[0, 0])
    atoms = renewal.re_apply(sys, 1.5, q).atoms()
    state_ok = (len(atoms) == 1 and abs(atoms[0][0] + 0.5) < 1e-12
                and float(np.asarray(atoms[0][1]).reshape(-1)[0]) == 2.0)
    ok = b1 == 2.0 and b2 == 6.0 and state_ok
    record(9, "cell-division renewal equation", ok, f"B(1)={b1!r} B(2)={b2!r} state(1.5) atoms={[(float(a), np.asarray(w).ravel().tolist()) for a, w in atoms]}")
    assert ok


def test_criterion_10_stability_verdicts():
    t0 = time.perf_counter()
    g1 = Grid(1.0, 0.01)
    v_stable = stability.rfde_stability_full(HalfLineMeasure.dirac(g1, 1.0, -0.5))
    v_lw = stability.rfde_stability_full(HalfLineMeasure.dirac(g1, 1.0, 1.0))
    v_ln2 = stability.re_stability_verdict(HalfLineMeasure.dirac(g1, 1.0, 2.0))
    eta = HalfLineMeasure.from_density(g1, lambda s: 0.5 + 0 * s)
    zeta = HalfLineMeasure.dirac(g1, 0.0, -1.0)
    v_nfde = stability.nfde_stability_verdict(eta, zeta)
    sysd = neutral.NFDESystem(eta, zeta, 50.0)
    rep = stability.decay_corroborate(neutral.NFDESemigroup(sysd), HistoryFunction.constant([1.0], 0.01), 50.0)
    dt = time.perf_counter() - t0
    w1 = complex(*v_lw.get("witness_root", [np.inf, 0]))
    w2 = complex(*v_ln2.get("witness_root", [np.inf, 0]))
    checks = {
        "zeta=-0.5d1 stable": v_stable["verdict"] == "stable",
        "zeta=d1 unstable": v_lw["verdict"] == "unstable" and abs(w1 - LAMBERT_W1) <= 1e-6,
        "L=2d1 unstable": v_ln2["verdict"] == "unstable" and abs(w2 - np.log(2.0)) <= 1e-6,
        "nfde stable": v_nfde["verdict"] == "stable",
        "nfde decay": rep["ratio"] <= 0.1,
        "runtime": dt < 30.0,
    }
    ok = all(checks.values())
    record(10, "stability verdicts", ok,
           f"W(1) err={abs(w1 - LAMBERT_W1):.1e} ln2 err={abs(w2 - np.log(2)):.1e} "
           f"decay ratio={rep['ratio']:.2e} runtime={dt:.1f}s"
           + ("" if ok else " failed: " + ", ".join(k for k, v in checks.items() if not v)))
    assert ok


def test_criterion_11_norming_duality():
    rng = np.random.default_rng(11)
    h = 0.01
    M = int(round(1.0 / h))
    g1 = Grid(1.0, h)
    sup_err = 0.0
    for _ in range(5):
        n = int(rng.integers(1, 4))
        cuts = np.sort(rng.choice(np.arange(1, M), size=4, replace=False))
        levels = rng.normal(size=(5, n))
        vals = np.zeros((M + 1, n))
        edges = [0, *cuts, M + 1]
        for j in range(5):
            vals[edges[j]:edges[j + 1]] = levels[j]
        left = vals.copy()
        left[cuts] = vals[cuts - 1]
        phi = HistoryFunction(vals, vals[-1], left)
        # 200 unit-TV probes: one aimed at each level, the rest random
        probes = []
        for j in range(5):
            i = int(np.argmax(np.abs(levels[j])))
            w = np.zeros((1, n))
            w[0, i] = np.sign(levels[j][i])
            probes.append(HalfLineMeasure(g1, (1, n), [(M - edges[j]) * h], [w]))
        while len(probes) < 200:
            w = np.zeros((1, n))
            w[0, rng.integers(0, n)] = rng.choice([-1.0, 1.0])
            probes.append(HalfLineMeasure(g1, (1, n), [rng.integers(0, M + 1) * h], [w]))
        assert all(tv_norm(p) == 1.0 for p in probes)
        best = max(float(pairing(p, phi)[0]) for p in probes)
        sup_err = max(sup_err, abs(best - float(np.max(np.abs(vals)))))
    tv_err = 0.0
    for _ in range(5):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(1, 6))
        locs = rng.choice(np.arange(1, M + 1), size=k, replace=False) * h
        ws = rng.normal(size=(k, 1, n))
        zeta = HalfLineMeasure(g1, (1, n), locs, ws)
        vals = np.zeros((M + 1, n))
        for s, w in zip(locs, ws):
            vals[M - int(round(s / h))] = np.sign(w[0])
        phi = HistoryFunction(vals, vals[-1])
        tv_err = max(tv_err, abs(float(pairing(zeta, phi)[0]) - tv_norm(zeta)))
    ok = sup_err <= 1e-12 and tv_err == 0.0
    record(11, "norming duality", ok, f"sup-norm error={sup_err:.1e} atom TV error={tv_err:.1e}")
    assert ok


def test_criterion_12_verify_all_deterministic():
    t0 = time.perf_counter()
    first = run_suite("all", seed=42)
    dt = time.perf_counter() - t0
    second = run_suite("all", seed=42)

    def key(checks):
        return [(c.suite, c.name, c.passed, None if "runtime" in c.name else c.residual) for c in checks]

    failed = [f"{c.suite}/{c.name}" for c in first if not c.passed]
    same = key(first) == key(second)
    ok = not failed and same and dt < 60.0 and {c.suite for c in first} == set(SUITES)
    record(12, "verify all (seed 42)", ok,
           f"{len(first)} checks, runtime={dt:.1f}s, deterministic={same}" + (f" failed={failed}" if failed else ""))
    assert ok
