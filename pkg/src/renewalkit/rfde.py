"""Retarded functional differential equations ``x'(t) = <zeta, x_t>``.

The kernel ``zeta`` is stored through its measure ``d zeta`` on ``[0, 1]``
(an ``n x n`` :class:`~renewalkit.measures.HalfLineMeasure`); the NBV function
view ``zeta(t) = d zeta([0, t])`` is obtained from the cumulative sums.

Two independent constructions of the solution are provided:

* :func:`solve_ivp` integrates once in time and marches
  ``x = f + d zeta * (1 * x)`` node by node;
* :func:`solve_kernel` uses the resolvent ``rho`` of the function kernel
  ``zeta`` and evaluates ``x = f + rho * f``.
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
    laplace,
    shift,
    trapz,
    tv_norm,
)
from .resolvent import march, tol
from .semigroup import HistoryFunction, TranslationOrbit, TwinSemigroupRep


class RFDESystem:
    """Linear autonomous RFDE with maximal delay 1.

    Parameters
    ----------
    zeta : HalfLineMeasure
        ``n x n`` measure ``d zeta`` on ``[0, 1]`` (its grid step is the
        solver step unless `h` is given).
    T : float
        Horizon.
    h : float, optional
        Grid step; ``1/h`` must be an integer.
    """

    def __init__(self, zeta, T, h=None):
        if zeta.dims[0] != zeta.dims[1]:
            raise ValueError("zeta must be square")
        if zeta.T < 1.0 - 1e-12:
            zeta = zeta.with_horizon(1.0)
        if np.any(zeta.locs > 1.0 + MERGE_RTOL * zeta.h):
            raise ValueError("zeta must be supported in [0, 1]")
        h = zeta.h if h is None else float(h)
        self.grid = Grid(T, h)
        self.grid.steps_per_unit()
        if abs(zeta.h - h) > 1e-15:
            zeta = _resample_measure(zeta, Grid(1.0, h))
        self.zeta = zeta.with_horizon(1.0)
        self.n = zeta.dims[0]
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

    def with_grid(self, T=None, h=None):
        return RFDESystem(self.zeta, self.T if T is None else T, h if h is not None else self.h)

    def dzeta(self, T=None):
        """The measure ``d zeta`` zero-extended to ``[0, T]``."""
        key = ("dzeta", T)
        if key not in self._cache:
            self._cache[key] = self.zeta.with_horizon(self.T if T is None else T)
        return self._cache[key]

    def zeta_function(self, T=None):
        """NBV values ``zeta(t_i)`` and left limits on ``[0, T]``."""
        key = ("zfun", T)
        if key not in self._cache:
            self._cache[key] = self.dzeta(T).cumulative()
        return self._cache[key]

    def tv(self):
        return tv_norm(self.zeta)

    def tol(self):
        return tol(self.h, max(self.tv(), 1.0), self.T)

    def history(self, phi):
        if not isinstance(phi, HistoryFunction):
            phi = HistoryFunction(phi)
        if phi.n != self.n:
            raise ValueError(f"history dimension {phi.n} differs from system dimension {self.n}")
        return phi.with_step(self.h)

    def __repr__(self):
        return f"RFDESystem(n={self.n}, T={self.T}, h={self.h})"


def _resample_measure(mu, grid):
    t = grid.t
    if mu.T < grid.T:
        mu = mu.with_horizon(grid.T)
    dv = interp(mu.density, mu.density_left, mu.h, t)
    dl = interp(mu.density, mu.density_left, mu.h, t, side="left")
    return HalfLineMeasure(grid, mu.dims, mu.locs, mu.weights, dv, dl)


# ---------------------------------------------------------------------------
# forcing terms
# ---------------------------------------------------------------------------

def history_forcing(sys, phi):
    """``f(t) = phi(0) + int d zeta(s) [Phi(min(t - s, 0)) - Phi(-s)]``.

    ``Phi`` is the running integral of the history, so point values of
    ``phi`` at ``theta < 0`` do not enter.
    """
    phi = sys.history(phi)
    grid = sys.grid
    M = sys.M
    N = grid.N
    h = sys.h
    Phi = cumtrapz(phi.values, phi.left, h)
    tail = phi.values.shape[1:]
    f = np.broadcast_to(phi.at_zero, (N,) + tail).copy()
    mu = sys.zeta
    L = min(N, M + 1)
    i = np.arange(L)
    for s, a in zip(mu.locs, mu.weights):
        th_now = np.minimum(i * h - s, 0.0)
        diff = interp(Phi, Phi, h, th_now + 1.0) - interp(Phi, Phi, h, 1.0 - s)
        vals = np.einsum("ij,kj...->ki...", a, diff)
        f[:L] += vals
        if N > L:
            f[L:] += vals[-1]
    if mu.has_density():
        k = np.arange(M + 1)
        base = Phi[M - k]
        dens = np.zeros((L,) + tail)
        for ii in range(L):
            idx = np.minimum(M + ii - k, M)
            G = Phi[idx] - base
            prod_r = np.einsum("kij,kj...->ki...", mu.density, G)
            prod_l = np.einsum("kij,kj...->ki...", mu.density_left, G)
            dens[ii] = trapz(prod_r, prod_l, h)
        f[:L] += dens
        if N > L:
            f[L:] += dens[-1]
    return GridFunction(grid, f)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def solve_ivp(sys, phi):
    """Solve the RFDE for the initial history `phi` on ``[0, T]``.

    Returns
    -------
    GridFunction
        ``x`` with ``x(0) = phi(0)``; samples of shape ``(N, n)``.
    """
    f = history_forcing(sys, phi)
    return march(f, mu2=sys.dzeta())


def forced_solve(sys, phi, forcing):
    """Solve ``x' = <zeta, x_t> + g(t)`` with history `phi`.

    Parameters
    ----------
    forcing : GridFunction or array, shape (N, n)
        The inhomogeneity ``g`` on the time grid.

    Returns
    -------
    GridFunction
    """
    f = history_forcing(sys, phi)
    g = forcing if isinstance(forcing, GridFunction) else GridFunction(sys.grid, forcing)
    gv = np.asarray(g.values).reshape(np.shape(f.values))
    gl = np.asarray(g.left).reshape(gv.shape)
    G = cumtrapz(gv, gl, sys.h)
    return march(GridFunction(sys.grid, np.asarray(f.values) + G), mu2=sys.dzeta())


def fundamental_solution(sys):
    """Solution with initial history ``q`` (identity at 0, zero before).

    Returns
    -------
    GridFunction
        Matrix samples of shape ``(N, n, n)``; ``x(0) = I``.
    """
    if "fund" not in sys._cache:
        n = sys.n
        f = np.broadcast_to(np.eye(n), (sys.grid.N, n, n)).copy()
        sys._cache["fund"] = march(GridFunction(sys.grid, f), mu2=sys.dzeta())
    return sys._cache["fund"]


def resolvent_kernel(sys):
    """Resolvent ``rho`` of the function kernel ``zeta``: ``rho = zeta + zeta * rho``.

    ``rho`` is the derivative of the fundamental solution, computed as
    ``rho = zeta + d zeta * (X - I)`` with ``X`` the fundamental solution.

    Returns
    -------
    GridFunction
        Samples ``(N, n, n)`` with left limits (jumps sit at the atoms of
        ``d zeta``).
    """
    if "rho" not in sys._cache:
        X = fundamental_solution(sys)
        n = sys.n
        P = np.asarray(X.values) - np.eye(n)
        conv = convolve_fn(sys.dzeta(), GridFunction(sys.grid, P))
        F, Fl = sys.zeta_function()
        sys._cache["rho"] = GridFunction(sys.grid, F + np.asarray(conv.values),
                                         Fl + np.asarray(conv.left))
    return sys._cache["rho"]


def _rho_split(sys):
    """Jumps of ``rho`` (the atoms of ``d zeta``) and the continuous remainder."""
    if "rho_split" not in sys._cache:
        rho = resolvent_kernel(sys)
        t = sys.grid.t
        cv = np.array(rho.values, copy=True)
        cl = np.array(rho.left, copy=True)
        eps = MERGE_RTOL * sys.h
        for s, w in zip(sys.zeta.locs, sys.zeta.weights):
            cv[t >= s - eps] -= w
            cl[t > s + eps] -= w
        sys._cache["rho_split"] = (list(zip(sys.zeta.locs, sys.zeta.weights)), cv, cl)
    return sys._cache["rho_split"]


def rho_convolve(sys, f):
    """``(rho * f)(t) = int_0^t rho(s) f(t - s) ds`` for vector samples ``f``."""
    jumps, cv, cl = _rho_split(sys)
    fv = np.asarray(f.values)
    fl = np.asarray(f.left)
    h = sys.h
    F = cumtrapz(fv, fl, h)
    out = np.zeros_like(fv)
    for s, w in jumps:
        sv, _ = shift(F, F, h, s)
        out += np.einsum("ij,kj...->ki...", w, sv)
    cont = HalfLineMeasure(sys.grid, (sys.n, sys.n), density=cv, density_left=cl)
    out += np.asarray(convolve_fn(cont, GridFunction(sys.grid, fv, fl)).values).reshape(out.shape)
    return out


def kernel_forcing(sys, phi):
    """``f(t) = phi(0) + int_0^1 [zeta(t + s) - zeta(s)] phi(-s) ds``."""
    phi = sys.history(phi)
    grid = sys.grid
    M = sys.M
    N = grid.N
    h = sys.h
    Z, Zl = sys.zeta_function(sys.T + 1.0)
    f = np.broadcast_to(phi.at_zero, (N,) + phi.values.shape[1:]).copy()
    L = min(N, M + 1)
    k = np.arange(M + 1)
    # phi(-s) as a function of s: right value is the left limit in theta
    pr = phi.left[M - k]
    pl = phi.values[M - k]
    for i in range(L):
        Dr = Z[i + k] - Z[k]
        Dl = Zl[i + k] - Zl[k]
        f[i] += trapz(np.einsum("kij,kj...->ki...", Dr, pr),
                      np.einsum("kij,kj...->ki...", Dl, pl), h)
    if N > L:
        f[L:] = f[L - 1]
    return GridFunction(grid, f)


def solve_kernel(sys, phi):
    """Solution through the resolvent: ``x = f + rho * f``."""
    f = kernel_forcing(sys, phi)
    x = np.asarray(f.values) + rho_convolve(sys, f)
    return GridFunction(sys.grid, x)


def apply(sys, t, phi):
    """``S(t) phi = x(t + .)``: translation along the solution."""
    phi = sys.history(phi)
    return TranslationOrbit(phi, solve_ivp(sys, phi)).state(t)


def apply_kernel(sys, t, phi):
    """``S(t) phi`` built from the resolvent kernel route."""
    phi = sys.history(phi)
    return TranslationOrbit(phi, solve_kernel(sys, phi)).state(t)


def semigroup_kernel(sys, t, theta, sigma):
    """Kernel ``K_t(theta, sigma)`` with ``(S(t) phi)(theta) = int K_t(theta, d sigma) phi(-sigma)``.

    Returns
    -------
    ndarray, shape (n, n)
    """
    n = sys.n
    I = np.eye(n)
    if sigma <= 0.0:
        return np.zeros((n, n))
    u = t + theta
    if u < -MERGE_RTOL * sys.h:
        return I * (1.0 if sigma + u >= -MERGE_RTOL * sys.h else 0.0)
    u = max(u, 0.0)
    if u > sys.T + 1e-12:
        raise ValueError("t + theta beyond the horizon")
    h = sys.h
    key = "Zc"
    if key not in sys._cache:
        Z, Zl = sys.zeta_function(sys.T + 2.0)
        sys._cache[key] = cumtrapz(Z, Zl, h)
    Zc = sys._cache[key]

    def zc(x):
        return interp(Zc, Zc, h, np.asarray(x, dtype=float))

    X = fundamental_solution(sys)
    P = interp(X.values, X.left, h, u) - I
    out = I + P + zc(u + sigma) - zc(u) - zc(sigma)
    rho = resolvent_kernel(sys)
    p = int(np.floor(u / h + MERGE_RTOL))
    xi = np.arange(p + 1) * h
    G = zc(u - xi + sigma) - zc(u - xi) - zc(sigma)
    if p >= 1:
        gr = np.einsum("kij,kjl->kil", rho.values[: p + 1], G)
        gl = np.einsum("kij,kjl->kil", rho.left[: p + 1], G)
        out = out + trapz(gr, gl, h)
    rem = u - p * h
    if rem > MERGE_RTOL * h:
        # the bracket vanishes at xi = u; trapezoid over the partial cell
        out = out + 0.5 * rem * (rho.values[p] @ G[p])
    return out


def characteristic_matrix(sys, lam):
    """``Delta(lam) = lam I - int_0^1 e^{-lam s} d zeta(s)``."""
    zeta = sys.zeta if isinstance(sys, RFDESystem) else sys
    lam = np.asarray(lam, dtype=complex)
    n = zeta.dims[0]
    return lam[..., None, None] * np.eye(n) - laplace(zeta, lam)


def integrated_residual(sys, phi, x, forcing=None):
    """Sup norm of ``x - f - zeta * x`` (with ``zeta`` read as a function)."""
    f = kernel_forcing(sys, phi)
    fv = np.asarray(f.values)
    xv = np.asarray(x.values)
    xl = np.asarray(x.left)
    if forcing is not None:
        g = forcing if isinstance(forcing, GridFunction) else GridFunction(sys.grid, forcing)
        fv = fv + cumtrapz(np.asarray(g.values).reshape(fv.shape), np.asarray(g.left).reshape(fv.shape), sys.h)
    Z, Zl = sys.zeta_function()
    zmu = HalfLineMeasure(sys.grid, (sys.n, sys.n), density=Z, density_left=Zl)
    conv = np.asarray(convolve_fn(zmu, GridFunction(sys.grid, xv, xl)).values).reshape(xv.shape)
    return float(np.max(np.abs(xv - fv - conv)))


class RFDESemigroup(TwinSemigroupRep):
    """Solution semigroup of an RFDE (translation along solutions)."""

    kind = "rfde"
    state_type = "B"

    def __init__(self, sys, route="direct"):
        super().__init__(sys.grid, sys.n)
        self.sys = sys
        self.route = route

    def orbit(self, y):
        y = self.sys.history(y)
        x = solve_ivp(self.sys, y) if self.route == "direct" else solve_kernel(self.sys, y)
        return TranslationOrbit(y, x)

    def tol(self):
        return self.sys.tol()


def laplace_of_orbit(sys, phi, lam, thetas):
    """``int_0^T e^{-lam t} (S(t) phi)(theta) dt`` by the trapezoid rule.

    The integrand is ``x(t + theta)`` on the extended trajectory, so the
    integral is evaluated cell by cell with one-sided limits.
    """
    phi = sys.history(phi)
    orb = TranslationOrbit(phi, solve_ivp(sys, phi))
    h = sys.h
    N = sys.grid.N
    t = sys.grid.t
    out = []
    M = orb.M
    for th in thetas:
        k, r = Grid(1.0, h).locate(th + 1.0)
        if r != 0.0:
            raise ValueError("theta must be a history node")
        v = orb.ext_v[k: k + N]
        l = orb.ext_l[k: k + N]
        w = np.exp(-lam * t).reshape((-1,) + (1,) * (v.ndim - 1))
        if k == M:
            v = v.copy()
            v[0] = orb.ext_v[M]
        out.append(trapz(w * v, w * l, h))
    return np.array(out)


def laplace_of_resolvent(sys, phi, lam, thetas, quad_points=20001):
    """Resolvent ``psi = (lam - C)^{-1} phi`` evaluated at `thetas`.

    ``psi(0)`` solves ``Delta(lam) psi(0) = phi(0) + int d zeta(s) e^{-lam s}
    int_{-s}^0 e^{-lam tau} phi(tau) d tau`` and
    ``psi(theta) = e^{lam theta} [int_theta^0 e^{-lam s} phi(s) ds + psi(0)]``.
    The inner integrals of ``phi`` are computed on a fine uniform grid.
    """
    phi = sys.history(phi)
    tau = np.linspace(-1.0, 0.0, quad_points)
    vals = np.concatenate([phi(tau[:-1]), phi.left[-1:]])
    g = np.exp(-lam * tau)[:, None] * vals
    dt = tau[1] - tau[0]
    G = np.concatenate([np.zeros((1, g.shape[1])), np.cumsum(0.5 * dt * (g[1:] + g[:-1]), axis=0)])
    total = G[-1]

    def tail(a):
        # int_a^0 e^{-lam s} phi(s) ds
        return total - np.array([np.interp(a, tau, G[:, j]) for j in range(G.shape[1])])

    rhs = np.asarray(phi.at_zero, dtype=complex).copy()
    mu = sys.zeta
    for s, a in zip(mu.locs, mu.weights):
        rhs = rhs + a @ (np.exp(-lam * s) * tail(-s))
    if mu.has_density():
        s = mu.grid.t
        inner = np.array([np.exp(-lam * x) * tail(-x) for x in s])
        rhs = rhs + trapz(np.einsum("kij,kj->ki", mu.density, inner),
                          np.einsum("kij,kj->ki", mu.density_left, inner), mu.h)
    psi0 = np.linalg.solve(characteristic_matrix(sys, lam), rhs)
    return np.array([np.exp(lam * th) * (tail(th) + psi0) for th in thetas])
