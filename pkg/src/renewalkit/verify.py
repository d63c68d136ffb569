"""Invariant suites run by ``renewalkit verify``.

Each suite returns a list of :class:`Check` records (residual, bound,
pass/fail).  All randomness flows from one seeded generator, so repeated
runs print identical lines.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import neutral, renewal, rfde, stability
from .measures import (
    Grid,
    GridFunction,
    HalfLineMeasure,
    convolve,
    laplace,
    pairing,
    tv_norm,
)
from .perturbation import (
    bounded_perturbed_apply,
    bounded_perturbed_series,
    nbv_samples_to_measure,
    rfde_rank_data,
)
from .resolvent import SingularAtZero, renewal_residual, renewal_solve, residual_tv, resolvent_measure, tol
from .semigroup import (
    CumulativeHistory,
    HistoryFunction,
    ShiftB,
    ShiftNBV,
    check_generator_integral,
    check_identity,
    check_semigroup_law,
    random_cumulative,
    random_functional,
    random_history,
)

SUITES = ("measures", "resolvent", "semigroup", "perturbation", "rfde", "nfde", "re")


@dataclass
class Check:
    suite: str
    name: str
    residual: float
    bound: float

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual <= self.bound)

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.suite}/{self.name} residual={self.residual:.3e} bound={self.bound:.3e}"


# ---------------------------------------------------------------------------
# random objects
# ---------------------------------------------------------------------------

def random_atomic_measure(rng, n, T, h, max_atoms=5, scale=0.5, on_grid=False, allow_zero=True):
    """Random pure-atom ``n x n`` measure on ``[0, T]`` with TV about `scale`."""
    g = Grid(T, h)
    k = int(rng.integers(1, max_atoms + 1))
    if on_grid:
        locs = rng.integers(0 if allow_zero else 1, int(round(1.0 / h)) + 1, size=k) * h
    else:
        locs = rng.uniform(0.0, 1.0, size=k)
        if allow_zero and rng.random() < 0.3:
            locs[0] = 0.0
    ws = rng.normal(size=(k, n, n))
    ws *= scale / (k * np.max(np.abs(ws).sum(axis=2)))
    return HalfLineMeasure(g, (n, n), locs, ws)


def random_mixed_measure(rng, n, T, h, scale=0.5, allow_zero=False):
    """Atoms plus a smooth density on ``[0, 1]`` (zero beyond), ``n x n``."""
    g = Grid(T, h)
    mu = random_atomic_measure(rng, n, T, h, 3, scale / 2, allow_zero=allow_zero)
    t = g.t
    c = rng.normal(size=(3, n, n)) * scale / (2 * n)
    dens = (c[0] + np.einsum("k,ij->kij", np.sin(np.pi * t), c[1])
            + np.einsum("k,ij->kij", t, c[2]))
    dens = np.where((t <= 1.0 + 1e-12)[:, None, None], dens, 0.0)
    left = dens.copy()
    M = int(round(1.0 / h))
    if g.N > M + 1:
        dens[M] = 0.0
    return mu + HalfLineMeasure(g, (n, n), density=dens, density_left=left)


def _grid_time(rng, h, lo, hi):
    a = int(np.ceil(lo / h - 1e-9))
    b = int(np.floor(hi / h + 1e-9))
    return int(rng.integers(a, b + 1)) * h


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def suite_measures(rng):
    out = []
    S = "measures"
    h = 0.01
    # exact atom arithmetic: commutativity and associativity (scalar)
    res = 0.0
    for _ in range(10):
        a, b, c = (random_atomic_measure(rng, 1, 3.0, h, scale=1.0) for _ in range(3))
        res = max(res, tv_norm(convolve(a, b) - convolve(b, a)))
        res = max(res, tv_norm(convolve(convolve(a, b), c) - convolve(a, convolve(b, c))))
    out.append(Check(S, "atom_convolution_algebra", res, 1e-12))
    # mixed scalar measures: commutativity to quadrature accuracy
    res = 0.0
    for _ in range(5):
        a = random_mixed_measure(rng, 1, 3.0, h, 1.0)
        b = random_mixed_measure(rng, 1, 3.0, h, 1.0)
        res = max(res, tv_norm(convolve(a, b) - convolve(b, a)))
    out.append(Check(S, "mixed_convolution_commutative", res, tol(h, 2.0, 3.0)))
    # Laplace transform turns convolution into products (pure atoms, exact)
    res = 0.0
    for _ in range(10):
        n = int(rng.integers(1, 4))
        a = random_atomic_measure(rng, n, 4.0, h)
        b = random_atomic_measure(rng, n, 4.0, h)
        z = complex(rng.uniform(0, 2), rng.uniform(-5, 5))
        res = max(res, float(np.max(np.abs(laplace(convolve(a, b), z) - laplace(a, z) @ laplace(b, z)))))
    out.append(Check(S, "laplace_product_atoms", res, 1e-12))
    # NBV view round trip: cumulative samples -> measure -> cumulative samples
    res = 0.0
    for _ in range(5):
        mu = random_mixed_measure(rng, 2, 2.0, h, allow_zero=True)
        F, Fl = mu.cumulative()
        nu = nbv_samples_to_measure(mu.grid, F, Fl)
        G, Gl = nu.cumulative()
        res = max(res, float(np.max(np.abs(F - G))), float(np.max(np.abs(Fl - Gl))))
    out.append(Check(S, "nbv_roundtrip", res, 1e-12))
    out.extend(norming_checks(rng, S))
    return out


def norming_checks(rng, suite="measures", probes=200):
    """Sup norms of step histories from unit-TV probes; TV norms of atom functionals."""
    out = []
    h = 0.01
    M = int(round(1.0 / h))
    g1 = Grid(1.0, h)
    res = 0.0
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
        best = 0.0
        for _ in range(probes):
            k = int(rng.integers(0, M + 1))
            j = int(rng.integers(0, n))
            w = np.zeros((1, n))
            w[0, j] = 1.0
            p = HalfLineMeasure(g1, (1, n), [k * h], [w])
            best = max(best, abs(float(pairing(p, phi)[0])))
        res = max(res, abs(best - float(np.max(np.abs(vals)))))
    out.append(Check(suite, "norming_step_history_sup", res, 1e-12))
    res = 0.0
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
        res = max(res, abs(float(pairing(zeta, phi)[0]) - tv_norm(zeta)))
    # equality up to the summation order of the same floating-point terms
    out.append(Check(suite, "norming_atom_functional_tv", res, 1e-13))
    return out


def suite_resolvent(rng):
    out = []
    S = "resolvent"
    t0 = time.perf_counter()
    res = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        mu = random_atomic_measure(rng, n, 3.0, 1e-3)
        rho = resolvent_measure(mu)
        res = max(res, residual_tv(rho, mu, "left"), residual_tv(rho, mu, "right"))
    out.append(Check(S, "atoms_resolvent_identities", res, 1e-10))
    h = 1e-3
    worst = 0.0
    for _ in range(3):
        n = int(rng.integers(1, 4))
        mu = random_mixed_measure(rng, n, 2.0, h)
        rho = resolvent_measure(mu)
        bound = tol(h, max(tv_norm(mu), 1.0), 2.0)
        worst = max(worst, max(residual_tv(rho, mu, "left"), residual_tv(rho, mu, "right")) / bound)
    out.append(Check(S, "mixed_resolvent_identities_rel_tol", worst, 1.0))
    out.append(Check(S, "runtime_seconds", time.perf_counter() - t0, 5.0))
    g = Grid(2.0, 0.01)
    rho = resolvent_measure(HalfLineMeasure.dirac(g, 0.0, 0.5))
    out.append(Check(S, "half_dirac_atom_at_zero", abs(float(rho.atom_at_zero()[0, 0]) - 1.0), 0.0))
    try:
        resolvent_measure(HalfLineMeasure.dirac(g, 0.0, 1.0))
        out.append(Check(S, "unit_dirac_singular", 1.0, 0.0))
    except SingularAtZero:
        out.append(Check(S, "unit_dirac_singular", 0.0, 0.0))
    # renewal equation residual
    mu = random_mixed_measure(rng, 2, 3.0, 0.01)
    f = GridFunction(mu.grid, np.stack([np.cos(mu.grid.t), np.ones(mu.grid.N)], axis=1))
    x = renewal_solve(mu, f)
    out.append(Check(S, "renewal_solve_residual", renewal_residual(mu, f, x), tol(0.01, 1.0, 3.0)))
    return out


def suite_semigroup(rng):
    out = []
    S = "semigroup"
    h = 0.01
    g = Grid(3.0, h)
    for name, Sg in (("shift_B", ShiftB(g, 2)), ("shift_NBV", ShiftNBV(g, 2))):
        res = 0.0
        for _ in range(50):
            t = _grid_time(rng, h, 0.0, 1.5)
            s = _grid_time(rng, h, 0.0, 1.5)
            y = Sg.random_state(rng)
            res = max(res, check_semigroup_law(Sg, t, s, y))
        out.append(Check(S, f"{name}_law", res, 1e-12))
        y = Sg.random_state(rng)
        out.append(Check(S, f"{name}_identity", check_identity(Sg, y, Sg.random_probes(rng, 5)), 1e-12))
        # series of pairings equals pairing of states
        res = 0.0
        y = Sg.random_state(rng)
        p = Sg.random_probes(rng, 1)[0]
        ser = np.asarray(Sg.pair_series(y, p))
        orb = Sg.orbit(y)
        for i in range(0, g.N, 37):
            val = np.atleast_1d(Sg.pair(p, orb.state(i * h)))
            res = max(res, float(np.max(np.abs(ser[i].reshape(-1) - val.reshape(-1)))))
        out.append(Check(S, f"{name}_pair_series", res, 1e-12))
    # generator of the shift: y smooth, z = y' with z(0) = 0
    Sb = ShiftB(g, 1)
    th = -1.0 + np.arange(101) * h
    y = HistoryFunction(np.sin(th)[:, None] + 1.0, [1.0])
    z = HistoryFunction(np.cos(th)[:, None], [0.0])
    out.append(Check(S, "shift_B_generator_integral", check_generator_integral(Sb, y, z, 0.5), tol(h, 1.0, 0.5)))
    return out


def suite_perturbation(rng):
    out = []
    S = "perturbation"
    h = 0.01
    worst = 0.0
    worst_vw = 0.0
    for _ in range(4):
        n = int(rng.integers(1, 3))
        zeta = random_mixed_measure(rng, n, 1.0, h, scale=1.0, allow_zero=True)
        sys = rfde.RFDESystem(zeta, 2.0)
        phi = random_history(rng, n, h)
        t = _grid_time(rng, h, 0.0, 2.0)
        direct = rfde.apply(sys, t, phi)
        eng = bounded_perturbed_apply(ShiftB(sys.grid, n), rfde_rank_data(sys), t, phi)
        d = float(np.max(np.abs(direct.values[1:] - eng.values[1:])))
        worst = max(worst, d / (5 * sys.tol()))
        S0 = ShiftB(sys.grid, n)
        data = rfde_rank_data(sys)
        probe = random_functional(rng, n, h)
        a = bounded_perturbed_series(S0, data, phi, probe, "v")
        b = bounded_perturbed_series(S0, data, phi, probe, "w")
        worst_vw = max(worst_vw, float(np.max(np.abs(a - b))) / sys.tol())
    out.append(Check(S, "bounded_rfde_vs_direct_rel", worst, 1.0))
    out.append(Check(S, "bounded_v_w_interchange_rel", worst_vw, 1.0))
    # cumulative output identity for the renewal engine
    g1 = Grid(1.0, h)
    L = HalfLineMeasure(g1, (1, 1), [0.5], [[[0.4]]], density=0.5 * np.sin(np.pi * g1.t))
    sysr = renewal.RESystem(L, 3.0)
    psi = random_cumulative(rng, 1, h)
    out.append(Check(S, "cumulative_output_identity",
                     renewal.cumulative_output_residual(sysr, psi, 0.7, 1.1), 1e-12))
    return out


def _mos_oracle(t):
    """Method-of-steps solution of x' = -x(t - 1), x = 1 on [-1, 0], for t <= 3."""
    t = np.asarray(t, dtype=float)
    u = t - 2.0
    return np.where(t <= 1.0, 1.0 - t,
                    np.where(t <= 2.0, (t - 1.0) ** 2 / 2.0 - (t - 1.0),
                             -0.5 + u ** 2 / 2.0 - u ** 3 / 6.0))


def suite_rfde(rng):
    out = []
    S = "rfde"
    zeta = HalfLineMeasure.dirac(Grid(1.0, 1e-3), 1.0, -1.0)
    errs = []
    for h in (1e-3, 5e-4):
        sys = rfde.RFDESystem(zeta, 3.0, h)
        t0 = time.perf_counter()
        x = rfde.solve_ivp(sys, HistoryFunction.constant([1.0], h))
        dt = time.perf_counter() - t0
        xv = np.asarray(x.values)[:, 0]
        e = max(abs(xv[int(round(1 / h))]), abs(xv[int(round(2 / h))] + 0.5))
        errs.append(e)
        if h == 1e-3:
            out.append(Check(S, "oracle_delay_minus_one", e, 2e-3))
            out.append(Check(S, "oracle_runtime_seconds", dt, 1.0))
            sup1 = float(np.max(np.abs(xv - _mos_oracle(sys.grid.t))))
        else:
            sup2 = float(np.max(np.abs(xv - _mos_oracle(sys.grid.t))))
    # convergence: the nodal errors at t = 1, 2 may already sit at round-off
    # (the scheme is exact for piecewise quadratics); fall back to the sup
    # error over [0, 3], where the solution becomes cubic
    if max(errs) <= 1e-13:
        ratio = sup2 / sup1 if sup1 > 0 else 0.0
    else:
        ratio = errs[1] / errs[0] if errs[0] > 0 else 0.0
    out.append(Check(S, "grid_convergence_ratio", ratio, 1.0 / 3.0))
    # two constructions of the solution
    h = 0.01
    worst = 0.0
    for _ in range(3):
        n = int(rng.integers(1, 3))
        sys = rfde.RFDESystem(random_mixed_measure(rng, n, 1.0, h, 1.0, allow_zero=True), 3.0)
        phi = random_history(rng, n, h)
        a = np.asarray(rfde.solve_ivp(sys, phi).values)
        b = np.asarray(rfde.solve_kernel(sys, phi).values)
        worst = max(worst, float(np.max(np.abs(a - b))) / sys.tol())
    out.append(Check(S, "direct_vs_kernel_rel", worst, 1.0))
    # semigroup law
    sys = rfde.RFDESystem(random_mixed_measure(rng, 2, 1.0, h, 1.0, allow_zero=True), 3.0)
    Sg = rfde.RFDESemigroup(sys)
    res = 0.0
    for _ in range(20):
        t = _grid_time(rng, h, 0.0, 1.5)
        s = _grid_time(rng, h, 0.0, 1.5)
        res = max(res, check_semigroup_law(Sg, t, s, random_history(rng, 2, h)))
    out.append(Check(S, "semigroup_law", res, 5 * sys.tol()))
    # generator integral identity
    res = 0.0
    for _ in range(10):
        y, z = rfde_domain_pair(rng, sys)
        t = _grid_time(rng, h, 0.1, 2.0)
        res = max(res, check_generator_integral(Sg, y, z, t, sys.zeta))
    out.append(Check(S, "generator_integral", res, 5 * sys.tol()))
    # Laplace transform of the orbit against the resolvent of the generator
    sysL = rfde.RFDESystem(HalfLineMeasure.dirac(Grid(1.0, h), 1.0, -1.0), 30.0)
    phi = HistoryFunction.constant([1.0], h)
    th = [0.0, -0.5, -1.0]
    num = rfde.laplace_of_orbit(sysL, phi, 1.0, th)
    ana = rfde.laplace_of_resolvent(sysL, phi, 1.0, th)
    out.append(Check(S, "laplace_cross_check", float(np.max(np.abs(num - ana))), 1e-3))
    # stability verdicts
    g1 = Grid(1.0, h)
    v1 = stability.rfde_stability_full(HalfLineMeasure.dirac(g1, 1.0, -0.5))
    out.append(Check(S, "stable_minus_half_delay", 0.0 if v1["verdict"] == "stable" else 1.0, 0.0))
    v2 = stability.rfde_stability_full(HalfLineMeasure.dirac(g1, 1.0, 1.0))
    w = v2.get("witness_root", [np.inf, 0.0])
    out.append(Check(S, "unstable_witness_lambert", abs(complex(*w) - 0.5671432904097838)
                     if v2["verdict"] == "unstable" else np.inf, 1e-6))
    return out


def rfde_domain_pair(rng, sys):
    """Smooth history ``y`` and ``z = y'`` with the boundary value ``z(0) = <zeta, y>``."""
    n = sys.n
    h = sys.h
    M = sys.M
    th = -1.0 + np.arange(M + 1) * h
    c = rng.normal(size=(3, n))
    w = rng.uniform(0.5, 3.0, size=n)
    y = c[0] + c[1] * np.sin(w * th[:, None]) + c[2] * th[:, None] ** 2
    dy = c[1] * w * np.cos(w * th[:, None]) + 2 * c[2] * th[:, None]
    Y = HistoryFunction(y, y[-1])
    z0 = pairing(sys.zeta, Y)
    return Y, HistoryFunction(dy, z0)


def suite_nfde(rng):
    out = []
    S = "nfde"
    h = 0.01
    g1 = Grid(1.0, h)
    eta = HalfLineMeasure.from_density(g1, lambda s: 0.5 + 0 * s)
    zeta = HalfLineMeasure.dirac(g1, 0.0, -1.0)
    sys = neutral.NFDESystem(eta, zeta, 3.0)
    phi = HistoryFunction.constant([1.0], h)
    x = np.asarray(neutral.solve_nfde(sys, phi).values)[:, 0]
    t = sys.grid.t
    m = t <= 1.0 + 1e-12
    out.append(Check(S, "closed_form_first_interval",
                     float(np.max(np.abs(x[m] - (-1.0 + 2.0 * np.exp(-t[m] / 2))))), sys.tol()))
    worst = 0.0
    cons = 0.0
    ident = 0.0
    law = 0.0
    for _ in range(3):
        n = int(rng.integers(1, 3))
        e = random_mixed_measure(rng, n, 1.0, h, 0.6)
        e = HalfLineMeasure(g1, e.dims, [s for s in e.locs if s > 0.15],
                            [w for s, w in zip(e.locs, e.weights) if s > 0.15], e.density, e.density_left)
        z = random_mixed_measure(rng, n, 1.0, h, 1.0, allow_zero=True)
        sysr = neutral.NFDESystem(e, z, 3.0)
        y = random_history(rng, n, h)
        tt = _grid_time(rng, h, 0.0, 3.0)
        a = neutral.nfde_apply(sysr, tt, y)
        b = neutral.nfde_engine_apply(sysr, tt, y)
        worst = max(worst, float(np.max(np.abs(a.values[1:] - b.values[1:]))) / (5 * sysr.tol()))
        cons = max(cons, neutral.conservation_defect(sysr, y))
        ident = max(ident, neutral.nfde_identity_residual(sysr, y) / sysr.tol())
        Sg = neutral.NFDESemigroup(sysr)
        for _ in range(7):
            t1 = _grid_time(rng, h, 0.0, 1.5)
            s1 = _grid_time(rng, h, 0.0, 1.5)
            law = max(law, check_semigroup_law(Sg, t1, s1, random_history(rng, n, h)) / (5 * sysr.tol()))
    out.append(Check(S, "engine_vs_direct_rel", worst, 1.0))
    out.append(Check(S, "conservation", cons, 1e-10))
    out.append(Check(S, "variation_of_constants_rel", ident, 1.0))
    out.append(Check(S, "semigroup_law_rel", law, 1.0))
    v = stability.nfde_stability_verdict(eta, zeta)
    out.append(Check(S, "example_stable", 0.0 if v["verdict"] == "stable" else 1.0, 0.0))
    sysd = neutral.NFDESystem(eta, zeta, 50.0)
    rep = stability.decay_corroborate(neutral.NFDESemigroup(sysd), phi, 50.0)
    out.append(Check(S, "example_decay_ratio", rep["ratio"], 0.1))
    return out


def suite_re(rng):
    out = []
    S = "re"
    h = 0.01
    g1 = Grid(1.0, h)
    sys = renewal.RESystem(HalfLineMeasure.dirac(g1, 1.0, 2.0), 3.0)
    q = CumulativeHistory.dirac_at_zero(h)
    B = renewal.cumulative_births(sys, q)
    out.append(Check(S, "cell_division_B1", abs(float(B(1.0)[0, 0]) - 2.0), 0.0))
    out.append(Check(S, "cell_division_B2", abs(float(B(2.0)[0, 0]) - 6.0), 0.0))
    st = renewal.re_apply(sys, 1.5, q)
    atoms = st.atoms()
    ok = len(atoms) == 1 and abs(atoms[0][0] + 0.5) < 1e-12 and abs(atoms[0][1][0] - 2.0) == 0.0
    out.append(Check(S, "cell_division_state", 0.0 if ok else 1.0, 0.0))
    # engine vs direct, smooth vs BV paths, semigroup law
    worst = 0.0
    path = 0.0
    law = 0.0
    forms = 0.0
    for _ in range(3):
        n = int(rng.integers(1, 3))
        L = random_mixed_measure(rng, n, 1.0, h, 0.8)
        sysb = renewal.RESystem(L, 3.0)
        psi = random_cumulative(rng, n, h)
        for _ in range(3):
            t = _grid_time(rng, h, 0.0, 3.0)
            a = renewal.re_apply(sysb, t, psi).values()
            b = renewal.re_engine_apply(sysb, t, psi)
            worst = max(worst, float(np.max(np.abs(a - b))) / (5 * sysb.tol()))
        dens = HalfLineMeasure(g1, L.dims, density=L.density, density_left=L.density_left)
        syss = renewal.RESystem(GridFunction(g1, L.density, L.density_left), 3.0)
        sysd = renewal.RESystem(dens, 3.0)
        t = _grid_time(rng, h, 0.0, 3.0)
        path = max(path, float(np.max(np.abs(renewal.re_apply(syss, t, psi).values()
                                                - renewal.re_apply(sysd, t, psi).values()))) / sysd.tol())
        Sg = renewal.RESemigroup(sysb)
        for _ in range(7):
            t1 = _grid_time(rng, h, 0.0, 1.5)
            s1 = _grid_time(rng, h, 0.0, 1.5)
            law = max(law, check_semigroup_law(Sg, t1, s1, random_cumulative(rng, n, h)) / (5 * sysb.tol()))
        th = -1.0 + g1.t
        bh = HistoryFunction(np.cos(3 * th[:, None]) * np.ones(n) + (th[:, None] < -0.4), np.zeros(n))
        f1, f2 = renewal.bv_rhs_forms(L, bh)
        forms = max(forms, float(np.max(np.abs(f1 - f2))) / sysb.tol())
    out.append(Check(S, "engine_vs_direct_rel", worst, 1.0))
    out.append(Check(S, "smooth_vs_bv_rel", path, 1.0))
    out.append(Check(S, "semigroup_law_rel", law, 1.0))
    out.append(Check(S, "stieltjes_forms_rel", forms, 1.0))
    v = stability.re_stability_verdict(HalfLineMeasure.dirac(g1, 1.0, 2.0))
    w = v.get("witness_root", [np.inf, 0.0])
    out.append(Check(S, "unstable_witness_ln2",
                     abs(complex(*w) - np.log(2.0)) if v["verdict"] == "unstable" else np.inf, 1e-6))
    v = stability.re_stability_verdict(HalfLineMeasure.dirac(g1, 1.0, 0.5))
    out.append(Check(S, "stable_half_delay", 0.0 if v["verdict"] == "stable" else 1.0, 0.0))
    return out


_SUITE_FUNCS = {
    "measures": suite_measures,
    "resolvent": suite_resolvent,
    "semigroup": suite_semigroup,
    "perturbation": suite_perturbation,
    "rfde": suite_rfde,
    "nfde": suite_nfde,
    "re": suite_re,
}


def run_suite(name, seed=42):
    """Run one suite (or ``'all'``) and return the list of checks.

    Each suite draws from its own generator seeded by ``(seed, suite index)``
    so that suites are reproducible independently of each other.
    """
    names = SUITES if name == "all" else (name,)
    out = []
    for nm in names:
        if nm not in _SUITE_FUNCS:
            raise KeyError(nm)
        rng = np.random.default_rng([seed, SUITES.index(nm)])
        out.extend(_SUITE_FUNCS[nm](rng))
    return out
