"""Neutral functional differential equations.

The equation ``d/dt [x(t) - <eta, x_t>] = <zeta, x_t>`` with ``eta`` free of
atoms near the origin is integrated once and written as the renewal-type
equation

    x = f + g + d eta * x + d zeta * (1 * x),

where ``f`` is the RFDE history forcing and ``g`` collects the part of
``<eta, x_t>`` that still reads the initial history.  The solution is marched
directly; the perturbation engine (regime ``'W'``) on top of the RFDE
semigroup provides an independent construction.
"""

import numpy as np

from .measures import (
    MERGE_RTOL,
    Grid,
    GridFunction,
    HalfLineMeasure,
    convolve_fn,
    cumtrapz,
    interp,
    trapz,
    tv_norm,
)
from .perturbation import StieltjesRankData, stieltjes_perturbed_apply, stieltjes_V
from .resolvent import march, tol
from .rfde import (
    RFDESemigroup,
    RFDESystem,
    _resample_measure,
    history_forcing,
    resolvent_kernel,
    rho_convolve,
    solve_ivp,
)
from .semigroup import HistoryFunction, TranslationOrbit, TwinSemigroupRep

ATOM_FREE_STEPS = 10


class NFDESystem:
    """Neutral equation with difference kernel ``eta`` and delay kernel ``zeta``.

    Parameters
    ----------
    eta, zeta : HalfLineMeasure
        ``n x n`` measures on ``[0, 1]``.  `eta` must have no atoms in
        ``[0, 10 h]``.
    T : float
        Horizon.
    h : float, optional
        Grid step (defaults to the step of `zeta`).
    """

    def __init__(self, eta, zeta, T, h=None):
        self.rfde = RFDESystem(zeta, T, h)
        h = self.rfde.h
        if eta.dims != self.rfde.zeta.dims:
            raise ValueError("eta and zeta must have the same square shape")
        if eta.T < 1.0 - 1e-12:
            eta = eta.with_horizon(1.0)
        if np.any(eta.locs > 1.0 + MERGE_RTOL * eta.h):
            raise ValueError("eta must be supported in [0, 1]")
        if abs(eta.h - h) > 1e-15:
            eta = _resample_measure(eta, Grid(1.0, h))
        eta = eta.with_horizon(1.0)
        near = eta.locs <= ATOM_FREE_STEPS * h * (1 + MERGE_RTOL)
        if np.any(near):
            raise ValueError(f"eta must have no atoms in [0, {ATOM_FREE_STEPS} h]")
        self.eta = eta
        self._cache = {}

    @property
    def zeta(self):
        return self.rfde.zeta

    @property
    def grid(self):
        return self.rfde.grid

    @property
    def h(self):
        return self.rfde.h

    @property
    def T(self):
        return self.rfde.T

    @property
    def M(self):
        return self.rfde.M

    @property
    def n(self):
        return self.rfde.n

    def deta(self, T=None):
        key = ("deta", T)
        if key not in self._cache:
            self._cache[key] = self.eta.with_horizon(self.T if T is None else T)
        return self._cache[key]

    def eta_is_zero(self):
        return len(self.eta.locs) == 0 and not self.eta.has_density()

    def tv(self):
        return tv_norm(self.eta) + tv_norm(self.zeta)

    def tol(self):
        return tol(self.h, max(self.tv(), 1.0), self.T)

    def history(self, phi):
        return self.rfde.history(phi)

    def __repr__(self):
        return f"NFDESystem(n={self.n}, T={self.T}, h={self.h})"


def _apply(a, v):
    return np.einsum("ij,kj...->ki...", a, v)


def eta_pairing(sys, phi):
    """``<eta, phi> = int_[0,1] eta(d sigma) phi(-sigma)`` (the origin carries no atom)."""
    phi = sys.history(phi)
    M = sys.M
    h = sys.h
    eta = sys.eta
    out = np.zeros(phi.values.shape[1:])
    for s, a in zip(eta.locs, eta.weights):
        out = out + _apply(a, interp(phi.values, phi.left, h, np.array([1.0 - s])))[0]
    if eta.has_density():
        k = np.arange(M + 1)
        pr = phi.left[M - k]
        pl = phi.values[M - k]
        out = out + trapz(_apply_stack(eta.density, pr), _apply_stack(eta.density_left, pl), h)
    return out


def _apply_stack(A, v):
    return np.einsum("kij,kj...->ki...", A, v)


def history_part(sys, phi):
    """``g(t) = int_(t,1] eta(d sigma) phi(t - sigma) - <eta, phi>``.

    ``g`` is constant for ``t >= 1``; it jumps where an atom of ``eta``
    leaves ``(t, 1]``, which is carried in its left limits.
    """
    phi = sys.history(phi)
    grid = sys.grid
    N = grid.N
    M = sys.M
    h = sys.h
    t = grid.t
    tail = phi.values.shape[1:]
    gv = np.zeros((N,) + tail)
    gl = np.zeros((N,) + tail)
    eps = MERGE_RTOL * h
    eta = sys.eta
    for s, a in zip(eta.locs, eta.weights):
        th = t - s
        right = th < -eps
        left = th < eps
        if np.any(right):
            v = interp(phi.values, phi.left, h, th[right] + 1.0)
            gv[right] += _apply(a, v)
        if np.any(left):
            v = interp(phi.values, phi.left, h, np.minimum(th[left], 0.0) + 1.0, side="left")
            gl[left] += _apply(a, v)
    if eta.has_density():
        for i in range(min(N, M)):
            k = np.arange(i, M + 1)
            idx = M + i - k
            pr = phi.left[idx]
            pl = phi.values[idx]
            val = trapz(_apply_stack(eta.density[i:], pr), _apply_stack(eta.density_left[i:], pl), h)
            gv[i] += val
            gl[i] += val
    c = eta_pairing(sys, phi)
    gv -= c
    gl -= c
    return GridFunction(grid, gv, gl)


def solve_nfde(sys, phi):
    """Solve the neutral equation for the initial history `phi`.

    Returns
    -------
    GridFunction
        ``x`` on ``[0, T]`` with ``x(0) = phi(0)``.
    """
    phi = sys.history(phi)
    f = history_forcing(sys.rfde, phi)
    if sys.eta_is_zero():
        return march(f, mu2=sys.rfde.dzeta())
    g = history_part(sys, phi)
    fv = np.asarray(f.values)
    forcing = GridFunction(sys.grid, fv + np.asarray(g.values), fv + np.asarray(g.left))
    return march(forcing, mu1=sys.deta(), mu2=sys.rfde.dzeta())


def nfde_apply(sys, t, phi):
    """``S(t) phi`` by translation along the directly marched solution."""
    phi = sys.history(phi)
    return TranslationOrbit(phi, solve_nfde(sys, phi)).state(t)


class NFDESemigroup(TwinSemigroupRep):
    """Solution semigroup of the neutral equation (bounded-history states)."""

    kind = "nfde"
    state_type = "B"

    def __init__(self, sys):
        super().__init__(sys.grid, sys.n)
        self.sys = sys

    def orbit(self, y):
        y = self.sys.history(y)
        return TranslationOrbit(y, solve_nfde(self.sys, y))

    def tol(self):
        return self.sys.tol()


# ---------------------------------------------------------------------------
# perturbation view
# ---------------------------------------------------------------------------

def nfde_rank_data(sys):
    """Relatively bounded data on top of the RFDE semigroup: ``q`` = unit at 0, ``Qd = eta``."""
    return StieltjesRankData(HistoryFunction.unit_at_zero(sys.n, sys.h), sys.eta, "W")


def nfde_engine_apply(sys, t, phi):
    """``S(t) phi`` from the perturbation engine (regime ``'W'``)."""
    S0 = RFDESemigroup(sys.rfde)
    return stieltjes_perturbed_apply(S0, nfde_rank_data(sys), t, sys.history(phi))


def nfde_kernel_K(sys):
    """Measure of the NBV kernel ``K = eta + eta * rho`` on ``[0, T]``.

    ``rho`` is the RFDE resolvent kernel; the atoms of ``eta`` are kept
    exactly and ``d eta * rho`` contributes a density.
    """
    rho = resolvent_kernel(sys.rfde)
    deta = sys.deta()
    conv = convolve_fn(deta, rho)
    dens = HalfLineMeasure(sys.grid, (sys.n, sys.n), density=np.asarray(conv.values),
                           density_left=np.asarray(conv.left))
    return deta + dens


def nfde_V0(sys, phi):
    """``V0(t) phi = <eta, z_t> - <eta, phi>`` with ``z`` the RFDE solution.

    Equals ``(d eta * z)(t) + g(t)`` on the grid.
    """
    phi = sys.history(phi)
    z = solve_ivp(sys.rfde, phi)
    conv = convolve_fn(sys.deta(), z)
    g = history_part(sys, phi)
    shp = np.shape(g.values)
    return GridFunction(sys.grid, np.asarray(conv.values).reshape(shp) + np.asarray(g.values),
                        np.asarray(conv.left).reshape(shp) + np.asarray(g.left))


def nfde_V(sys, phi):
    """Cumulative output ``V(.) phi`` from the engine (regime ``'W'`` data)."""
    S0 = RFDESemigroup(sys.rfde)
    V, _ = stieltjes_V(S0, nfde_rank_data(sys), sys.history(phi))
    return V


def nfde_identity_residual(sys, phi):
    """Sup norm of ``x - z - (V + rho * V)`` on ``[0, T]``.

    ``x`` is the neutral solution, ``z`` the RFDE solution with the same
    history and ``V`` the cumulative output; the right-hand side is the
    variation-of-constants representation of the neutral correction.
    """
    phi = sys.history(phi)
    x = np.asarray(solve_nfde(sys, phi).values)
    z = np.asarray(solve_ivp(sys.rfde, phi).values)
    V = nfde_V(sys, phi)
    Vv = np.asarray(V.values).reshape(x.shape)
    Vg = GridFunction(sys.grid, Vv, np.asarray(V.left).reshape(x.shape))
    corr = Vv + rho_convolve(sys.rfde, Vg).reshape(x.shape)
    return float(np.max(np.abs(x - z - corr)))


def conservation_defect(sys, phi):
    """Drift of ``x(t) - <eta, x_t> - int_0^t <zeta, x_s> ds`` over ``[0, T]``.

    The quantity is constant along exact solutions.  ``<eta, x_t>`` and
    ``<zeta, x_s>`` are evaluated by pairing the translated states, and the
    time integral uses the trapezoid rule.

    Returns
    -------
    float
        ``max_t |D(t) - D(0)|``.
    """
    phi = sys.history(phi)
    x = solve_nfde(sys, phi)
    orb = TranslationOrbit(phi, x)
    pe = np.asarray(orb.pair_series(sys.eta))
    pz = np.asarray(orb.pair_series(sys.zeta))
    pzl = np.asarray(orb.pair_series(sys.zeta, side="left"))
    xv = np.asarray(x.values).reshape(pe.shape)
    D = xv - pe - cumtrapz(pz, pzl, sys.h)
    return float(np.max(np.abs(D - D[0])))


def nfde_stability(sys, samples=4096, threshold=1e-6):
    """Stability verdict for the neutral equation (see :mod:`renewalkit.stability`)."""
    from .stability import nfde_stability_verdict

    return nfde_stability_verdict(sys.eta, sys.zeta, samples, threshold)
