"""Renewal equations for birth rates and cumulative births.

Two kernel types are supported:

* a bounded kernel ``k`` on ``[0, 1]``: the birth rate solves
  ``b = k * b + f`` with ``f(t) = int_{[0, 1-t]} k(t + sigma) nu(d sigma)``;
* a bounded-variation kernel ``L`` (a measure ``dL`` on ``[0, 1]`` without an
  atom at 0): the cumulative births solve ``B = dL * B + f`` with
  ``f(t) = int nu(d sigma) [L(t + sigma) - L(sigma)]``.

Initial states are :class:`~renewalkit.semigroup.CumulativeHistory` objects,
i.e. the reflected measure ``nu`` of past births (cohorts are atoms).  The
measure of ``f`` is assembled exactly from atoms and densities, so pure-atom
problems such as cell division are solved in exact atom arithmetic.
"""

import numpy as np

from .measures import (
    MERGE_RTOL,
    Grid,
    GridFunction,
    HalfLineMeasure,
    NBVFunction,
    convolve,
    interp,
    trapz,
    tv_norm,
)
from .perturbation import (
    BoundedRankData,
    StieltjesRankData,
    bounded_perturbed_apply,
    stieltjes_perturbed_apply,
)
from .resolvent import march, resolvent_measure, tol
from .semigroup import CumulativeHistory, CumulativeOrbit, ShiftNBV, TwinSemigroupRep


class RESystem:
    """Linear renewal equation with maximal age 1.

    Parameters
    ----------
    kernel : GridFunction, HalfLineMeasure or NBVFunction
        A bounded kernel ``k`` sampled on the unit grid (samples ``(M+1,)`` or
        ``(M+1, n, n)``), or the measure ``dL`` of a bounded-variation kernel.
    T : float
        Horizon.
    h : float, optional
        Grid step (defaults to the step of the kernel).
    """

    def __init__(self, kernel, T, h=None):
        if isinstance(kernel, NBVFunction):
            kernel = kernel.measure
        if isinstance(kernel, GridFunction):
            self.kind = "smooth"
            kv = np.asarray(kernel.values, dtype=float)
            kl = np.asarray(kernel.left, dtype=float)
            if kv.ndim == 1:
                kv = kv[:, None, None]
                kl = kl[:, None, None]
            g = kernel.grid
            if abs(g.T - 1.0) > 1e-12:
                raise ValueError("the kernel must be sampled on [0, 1]")
            L = HalfLineMeasure(g, kv.shape[1:], density=kv, density_left=kl)
        elif isinstance(kernel, HalfLineMeasure):
            self.kind = "bv"
            L = kernel if kernel.T >= 1.0 - 1e-12 else kernel.with_horizon(1.0)
            if np.any(L.locs > 1.0 + MERGE_RTOL * L.h):
                raise ValueError("L must be supported in [0, 1]")
            L = L.with_horizon(1.0)
            if np.max(np.abs(L.atom_at_zero())) > 0:
                raise ValueError("L must be continuous at 0 (no atom at the origin)")
        else:
            raise TypeError("kernel must be a GridFunction or a measure")
        if L.dims[0] != L.dims[1]:
            raise ValueError("kernel must be square")
        h = L.h if h is None else float(h)
        if abs(h - L.h) > 1e-15:
            raise ValueError("kernel samples must use the solver step")
        self.grid = Grid(T, h)
        self.grid.steps_per_unit()
        self.L = L
        self.n = L.dims[0]
        self._cache = {}

    @property
    def h(self):
        return self.grid.h

    @property
    def T(self):
        return self.grid.T

    @property
    def M(self):
        return self.grid.steps_per_unit()

    def dL(self, T=None):
        key = ("dL", T)
        if key not in self._cache:
            self._cache[key] = self.L.with_horizon(self.T if T is None else T)
        return self._cache[key]

    def kernel_function(self):
        """``k`` on the unit grid (bounded kernels only)."""
        if self.kind != "smooth":
            raise ValueError("bounded-variation kernels have no density function")
        return GridFunction(self.L.grid, self.L.density, self.L.density_left)

    def L_function(self):
        """NBV values ``L(a_i)`` and left limits on the unit grid."""
        return self.L.cumulative()

    def resolvent(self):
        """Resolvent measure ``R`` of ``dL`` on ``[0, T]`` (cached)."""
        if "R" not in self._cache:
            self._cache["R"] = resolvent_measure(self.dL())
        return self._cache["R"]

    def tv(self):
        return tv_norm(self.L)

    def tol(self):
        return tol(self.h, max(self.tv(), 1.0), self.T)

    def state(self, psi):
        if not isinstance(psi, CumulativeHistory):
            raise TypeError("renewal states are CumulativeHistory objects")
        if psi.n != self.n:
            raise ValueError("state dimension differs from the system dimension")
        if abs(psi.h - self.h) > 1e-15:
            raise ValueError("state and system use different steps")
        return psi

    def __repr__(self):
        return f"RESystem(kind={self.kind!r}, n={self.n}, T={self.T}, h={self.h})"


def _mv(A, v):
    return np.einsum("...ij,...jk->...ik", A, v)


# ---------------------------------------------------------------------------
# bounded kernels: birth rate
# ---------------------------------------------------------------------------

def birth_forcing(sys, psi):
    """``f(t) = int_{[0, 1-t]} k(t + sigma) nu(d sigma)`` on the time grid (``(N, n)``)."""
    psi = sys.state(psi)
    nu = psi.measure
    N = sys.grid.N
    M = sys.M
    h = sys.h
    n = sys.n
    ext = sys.L.with_horizon(sys.T + 2.0)
    kv, kl = ext.density, ext.density_left
    t = sys.grid.t
    fv = np.zeros((N, n, 1))
    fl = np.zeros((N, n, 1))
    for s, c in zip(nu.locs, nu.weights):
        fv += _mv(interp(kv, kl, h, t + s), c)
        fl += _mv(interp(kv, kl, h, t + s, side="left"), c)
    if nu.has_density():
        for i in range(min(N, M)):
            m = M + 1 - i
            pr = _mv(kv[i:i + m], nu.density[:m])
            pl = _mv(kl[i:i + m], nu.density_left[:m])
            val = trapz(pr, pl, h)
            fv[i] += val
            fl[i] += val
    fl[0] = fv[0]
    return GridFunction(sys.grid, fv[:, :, 0], fl[:, :, 0])


def birth_rate(sys, psi):
    """Birth rate ``b = f + r * f`` for a bounded kernel.

    Returns
    -------
    GridFunction
        Samples ``(N, n)`` with left limits.
    """
    if sys.kind != "smooth":
        raise ValueError("birth_rate needs a bounded kernel")
    f = birth_forcing(sys, psi)
    return march(f, mu1=sys.dL())


def birth_measure(sys, psi):
    """Measure ``b(t) dt`` of the births for a bounded kernel (``n x 1``)."""
    b = birth_rate(sys, psi)
    return HalfLineMeasure(sys.grid, (sys.n, 1), density=np.asarray(b.values)[:, :, None],
                           density_left=np.asarray(b.left)[:, :, None])


# ---------------------------------------------------------------------------
# bounded-variation kernels: cumulative births
# ---------------------------------------------------------------------------

def forcing_measure(sys, psi):
    """Measure of ``f(t) = int nu(d sigma) [L(t + sigma) - L(sigma)]`` on ``[0, T]``.

    For every ``sigma`` the map ``t -> L(t + sigma) - L(sigma)`` has the measure
    ``dL`` restricted to ``(sigma, 1]`` and shifted left by ``sigma``.  Atom-atom
    products are exact; the remaining products are densities.
    """
    psi = sys.state(psi)
    nu = psi.measure
    grid = sys.grid
    N = grid.N
    M = sys.M
    h = sys.h
    n = sys.n
    L = sys.L
    t = grid.t
    eps = MERGE_RTOL * h
    locs, ws = [], []
    dv = np.zeros((N, n, 1))
    dl = np.zeros((N, n, 1))
    ext = L.with_horizon(sys.T + 2.0)
    for s, c in zip(nu.locs, nu.weights):
        for a, A in zip(L.locs, L.weights):
            if a > s + eps and a - s <= sys.T + eps:
                locs.append(a - s)
                ws.append(A @ c)
        if L.has_density():
            dv += _mv(interp(ext.density, ext.density_left, h, t + s), c)
            dl += _mv(interp(ext.density, ext.density_left, h, t + s, side="left"), c)
    if nu.has_density():
        nv, nl = nu.density, nu.density_left
        for a, A in zip(L.locs, L.weights):
            # density A n(a - t) on (0, a]; the reflection swaps the one-sided limits
            rmask = t < a - eps
            lmask = (t <= a + eps) & (t > 0)
            if np.any(rmask):
                dv[rmask] += _mv(A, interp(nv, nl, h, np.maximum(a - t[rmask], 0.0), side="left"))
            if np.any(lmask):
                dl[lmask] += _mv(A, interp(nv, nl, h, np.maximum(a - t[lmask], 0.0)))
        if L.has_density():
            ev, el = ext.density, ext.density_left
            for i in range(min(N, M)):
                m = M + 1
                pr = _mv(ev[i:i + m], nv[:m])
                pl = _mv(el[i:i + m], nl[:m])
                val = trapz(pr, pl, h)
                dv[i] += val
                dl[i] += val
    dl[0] = dv[0]
    return HalfLineMeasure(grid, (n, 1), locs, ws, dv, dl)


def birth_cumulative_measure(sys, psi):
    """Measure ``beta`` of the cumulative births: ``beta = df + R * df``."""
    psi = sys.state(psi)
    df = forcing_measure(sys, psi)
    R = sys.resolvent()
    return df + convolve(R, df)


def cumulative_births(sys, psi):
    """Cumulative births ``B`` on ``[0, T]`` as an :class:`NBVFunction` (``B(0) = 0``)."""
    return NBVFunction(birth_cumulative_measure(sys, psi))


def births(sys, psi, route=None):
    """Birth measure from the bounded-kernel path or the bounded-variation path."""
    route = sys.kind if route is None else route
    if route == "smooth":
        return birth_measure(sys, psi)
    return birth_cumulative_measure(sys, psi)


def re_apply(sys, t, psi, route=None):
    """``(S(t) psi)(theta) = B(t + theta) - B(t)`` as a :class:`CumulativeHistory`."""
    psi = sys.state(psi)
    return CumulativeOrbit(psi, births(sys, psi, route)).state(t)


class RESemigroup(TwinSemigroupRep):
    """Semigroup of the renewal equation on cumulative-birth states."""

    kind = "re"
    state_type = "NBV"

    def __init__(self, sys, route=None):
        super().__init__(sys.grid, sys.n)
        self.sys = sys
        self.route = route

    def orbit(self, psi):
        psi = self.sys.state(psi)
        return CumulativeOrbit(psi, births(self.sys, psi, self.route))

    def tol(self):
        return self.sys.tol()


# ---------------------------------------------------------------------------
# perturbation view
# ---------------------------------------------------------------------------

def _unit_cohorts(sys):
    return [CumulativeHistory.dirac_at_zero(sys.h, sys.n, column=j) for j in range(sys.n)]


def re_bv_rank_data(sys):
    """Relatively bounded data on the truncated shift: ``q`` cohorts, ``Qd = L - L(1)``."""
    F, Fl = sys.L_function()
    L1 = F[-1]
    Qd = GridFunction(sys.L.grid, F - L1, Fl - L1)
    return StieltjesRankData(_unit_cohorts(sys), Qd, "V")


def re_smooth_rank_data(sys):
    """Bounded data on the truncated shift: ``q`` cohorts, ``qd = k``."""
    return BoundedRankData(_unit_cohorts(sys), sys.kernel_function())


def re_engine_apply(sys, t, psi):
    """``S(t) psi`` from the perturbation engine.

    Returns the values of the state at the nodes ``theta_k = -1 + k h``
    (array ``(M+1, n)``).
    """
    psi = sys.state(psi)
    S0 = ShiftNBV(sys.grid, sys.n)
    if sys.kind == "smooth":
        return bounded_perturbed_apply(S0, re_smooth_rank_data(sys), t, psi)
    return stieltjes_perturbed_apply(S0, re_bv_rank_data(sys), t, psi)


def cumulative_output_residual(sys, psi, t, s):
    """``|B_{S(t) psi}(s) - (B(t + s) - B(t))|`` at grid times ``t`` and ``s``."""
    psi = sys.state(psi)
    B = cumulative_births(sys, psi) if sys.kind == "bv" else NBVFunction(birth_measure(sys, psi))
    st = re_apply(sys, t, psi)
    Bs = cumulative_births(sys, st) if sys.kind == "bv" else NBVFunction(birth_measure(sys, st))
    lhs = np.asarray(Bs(s))
    rhs = np.asarray(B(t + s)) - np.asarray(B(t))
    return float(np.max(np.abs(lhs - rhs)))


def bv_rhs_forms(L, b):
    """Evaluate the right-hand side of ``b(t) = int L(da) b(t - a)`` in two forms.

    Parameters
    ----------
    L : HalfLineMeasure
        ``n x n`` measure on ``[0, 1]`` without an atom at 0.
    b : HistoryFunction
        Bounded-variation history ``b_t`` on ``[-1, 0]`` (values right
        continuous, ``b_t(0) = at_zero`` is set to 0).

    Returns
    -------
    (ndarray, ndarray)
        ``int_[0,1] L(da) b(-a)`` and the Stieltjes form
        ``int_[-1,0] (L(-theta) - L(1)) b(d theta)``.
    """
    h = L.h
    M = L.grid.N - 1
    bv = np.asarray(b.values, dtype=float)
    bl = np.asarray(b.left, dtype=float)
    # first form: measure side
    first = np.zeros(bv.shape[1:])
    for a, A in zip(L.locs, L.weights):
        first = first + A @ interp(bv, bl, h, 1.0 - a)
    if L.has_density():
        k = np.arange(M + 1)
        first = first + trapz(np.einsum("kij,kj->ki", L.density, bl[M - k]),
                              np.einsum("kij,kj->ki", L.density_left, bv[M - k]), h)
    # second form: integrate Q(theta) = L(-theta) - L(1) against the measure of b
    F, Fl = L.cumulative()
    L1 = F[-1]
    j = np.arange(M + 1)               # theta_j = -1 + j h  <->  a = 1 - j h
    Qpt = F[M - j] - L1                # point values
    Qr = Fl[M - j] - L1                # right limit in theta = left limit in a
    Ql = F[M - j] - L1                 # left limit in theta = right value in a
    # interior jumps (the jump at theta = -1 meets Q(-1) = 0)
    second = np.einsum("kij,kj->i", Qpt[1:M], bv[1:M] - bl[1:M])
    # jump to the normalized value b(0) = 0
    second = second + Qpt[M] @ (0.0 - bl[M])
    slope = (bl[1:] - bv[:-1]) / h
    cells = 0.5 * h * (np.einsum("kij,kj->ki", Qr[:-1], slope) + np.einsum("kij,kj->ki", Ql[1:], slope))
    second = second + cells.sum(axis=0)
    return first, second


def re_stability(sys, samples=4096, threshold=1e-6):
    """Verdict for ``inf_{Re z >= 0} |det(I - L^(z))| > 0`` (see :mod:`renewalkit.stability`)."""
    from .stability import re_stability_verdict

    return re_stability_verdict(sys.L, samples, threshold)
