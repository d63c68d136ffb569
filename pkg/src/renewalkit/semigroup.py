"""State spaces, twin semigroups and numerical checks of their axioms.

Two dual pairs are used:

* ``B``-states (:class:`HistoryFunction`): bounded functions on ``[-1, 0]``
  with an authoritative point value at ``theta = 0``, paired with NBV
  functionals on ``[0, 1]`` via ``<zeta, y> = int zeta(d sigma) y(-sigma)``.
* ``NBV``-states (:class:`CumulativeHistory`): normalized BV functions on
  ``[-1, 0]`` vanishing at ``theta = 0``, paired with bounded functions on
  ``[0, 1]`` via ``<y, psi> = int y(-theta) psi(d theta)``.

Every semigroup used in the library is of one of two orbit types: translation
along an extended trajectory (``B``-states) or accumulation of a cumulative
output (``NBV``-states).  Orbits are computed once per initial state and then
sliced, so evaluating ``S(t) y`` on a whole time grid is cheap.
"""

import numpy as np

from .measures import (
    MERGE_RTOL,
    Grid,
    GridFunction,
    HalfLineMeasure,
    cumtrapz,
    interp,
    pairing,
    shift,
    trapz,
)


def _vecnorm(a):
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    if a.ndim <= 1:
        return float(np.max(np.abs(a)))
    return float(np.max(np.abs(a).sum(axis=-1)))


class HistoryFunction:
    """Bounded state on ``[-1, 0]`` with a distinguished value at ``theta = 0``.

    Parameters
    ----------
    values : array_like, shape (M + 1, n) or (M + 1,)
        Samples at ``theta_k = -1 + k/M`` (right values).  The last sample is
        the left limit ``y(0^-)``.
    at_zero : array_like, optional
        Point value ``y(0)``; defaults to the last sample.
    left : array_like, optional
        Left limits at the nodes (defaults to `values`).
    """

    def __init__(self, values, at_zero=None, left=None):
        v = np.array(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        l = v.copy() if left is None else np.array(left, dtype=float).reshape(v.shape)
        l[0] = v[0]
        v[-1] = l[-1]
        self.M = v.shape[0] - 1
        if self.M < 1:
            raise ValueError("history needs at least two samples")
        self.h = 1.0 / self.M
        self.values = v
        self.left = l
        self.at_zero = np.array(v[-1] if at_zero is None else at_zero, dtype=float).reshape(v.shape[1:])
        for a in (self.values, self.left, self.at_zero):
            a.setflags(write=False)

    @classmethod
    def from_callable(cls, fn, h, at_zero=None):
        """Sample ``fn(theta)`` on the grid of step `h` (``1/h`` must be integral)."""
        M = int(round(1.0 / h))
        if abs(M * h - 1.0) > 1e-9:
            raise ValueError("history step must divide the unit interval")
        theta = -1.0 + np.arange(M + 1) / M
        vals = np.array([np.atleast_1d(np.asarray(fn(th), dtype=float)) for th in theta])
        if at_zero is None:
            at_zero = vals[-1]
        return cls(vals, at_zero)

    @classmethod
    def constant(cls, c, h):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        M = int(round(1.0 / h))
        return cls(np.tile(c, (M + 1, 1)), c)

    @classmethod
    def unit_at_zero(cls, n, h, column=None):
        """The state ``q``: zero on ``[-1, 0)`` and ``e_i`` (or ``I``) at zero."""
        M = int(round(1.0 / h))
        if column is None:
            return cls(np.zeros((M + 1, n, n)), np.eye(n))
        e = np.zeros(n)
        e[column] = 1.0
        return cls(np.zeros((M + 1, n)), e)

    @property
    def n(self):
        return self.at_zero.shape[0]

    @property
    def theta(self):
        return -1.0 + np.arange(self.M + 1) * self.h

    def __call__(self, theta, side="right"):
        """Point evaluation; ``theta = 0`` returns the authoritative value."""
        th = np.asarray(theta, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        out = interp(self.values, self.left, self.h, th + 1.0, side)
        zero = np.abs(th) <= MERGE_RTOL * self.h
        if side == "right" and np.any(zero):
            out[zero] = self.at_zero
        return out[0] if scalar else out

    def sup_norm(self):
        return max(_vecnorm(self.values), _vecnorm(self.left), _vecnorm(self.at_zero))

    def _binary(self, other, op):
        return HistoryFunction(op(self.values, other.values), op(self.at_zero, other.at_zero),
                               op(self.left, other.left))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, c):
        return HistoryFunction(self.values * c, self.at_zero * c, self.left * c)

    __rmul__ = __mul__

    def matmul(self, v):
        """Right multiplication of a matrix-valued history by a vector or matrix."""
        return HistoryFunction(self.values @ v, self.at_zero @ v, self.left @ v)

    def column(self, j):
        return HistoryFunction(self.values[..., j], self.at_zero[..., j], self.left[..., j])

    def with_step(self, h):
        """Resample onto a history grid of step `h` (linear interpolation)."""
        if abs(h - self.h) < 1e-14:
            return self
        M = int(round(1.0 / h))
        th = -1.0 + np.arange(M + 1) / M
        v = interp(self.values, self.left, self.h, th + 1.0)
        l = interp(self.values, self.left, self.h, th + 1.0, side="left")
        return HistoryFunction(v, self.at_zero, l)

    def __repr__(self):
        return f"HistoryFunction(n={self.n}, M={self.M})"


class CumulativeHistory:
    """NBV state ``psi`` on ``[-1, 0]`` with ``psi(0) = 0``.

    Stored as the reflected measure ``nu`` on ``sigma = -theta in [0, 1]``
    (an ``n x 1`` :class:`HalfLineMeasure` on the unit grid) so that

        psi(theta) = -nu([0, -theta)).

    An atom of ``nu`` at ``sigma = 0`` is a cohort at ``theta = 0``.
    """

    def __init__(self, measure):
        if abs(measure.T - 1.0) > 1e-12:
            raise ValueError("cumulative histories live on a unit interval")
        self.measure = measure

    @classmethod
    def zero(cls, h, n=1):
        return cls(HalfLineMeasure(Grid(1.0, h), (n, 1)))

    @classmethod
    def dirac_at_zero(cls, h, n=1, column=0):
        """The state ``q``: ``-1`` on ``[-1, 0)``, ``0`` at ``0`` (unit cohort at 0)."""
        w = np.zeros((n, 1))
        w[column, 0] = 1.0
        return cls(HalfLineMeasure(Grid(1.0, h), (n, 1), [0.0], [w]))

    @classmethod
    def from_density(cls, h, fn, n=1):
        """Absolutely continuous state with birth density ``fn(theta)``."""
        g = Grid(1.0, h)
        mu = HalfLineMeasure.from_density(g, lambda s: np.reshape(fn(-s), (n, 1)), dims=(n, 1))
        return cls(mu)

    @property
    def h(self):
        return self.measure.h

    @property
    def n(self):
        return self.measure.dims[0]

    @property
    def theta(self):
        return -self.measure.grid.t[::-1]

    def __call__(self, theta):
        """Value ``psi(theta) = -nu([0, -theta))``."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        mu = self.measure
        sig = np.clip(-th, 0.0, 1.0)
        F, Fl = mu.cumulative()
        # nu([0, sigma)) is the left limit of the cumulative function
        out = -interp(F[:, :, 0], Fl[:, :, 0], mu.h, sig, side="left")
        return out[0] if np.ndim(theta) == 0 else out

    def values(self):
        """``psi`` at the nodes ``theta_k = -1 + k h`` (shape (M + 1, n))."""
        F, Fl = self.measure.cumulative()
        return -Fl[::-1, :, 0]

    def total_variation(self):
        from .measures import tv_norm
        return tv_norm(self.measure)

    def sup_norm(self):
        return _vecnorm(self.values())

    def __add__(self, other):
        return CumulativeHistory(self.measure + other.measure)

    def __sub__(self, other):
        return CumulativeHistory(self.measure - other.measure)

    def __mul__(self, c):
        return CumulativeHistory(self.measure.scale(c))

    __rmul__ = __mul__

    def atoms(self):
        """Cohorts as ``(theta, mass)`` pairs."""
        return [(-s, w[:, 0].copy()) for s, w in zip(self.measure.locs, self.measure.weights)]

    def __repr__(self):
        return f"CumulativeHistory(n={self.n}, atoms={len(self.measure.locs)})"


def pairing_nbv(y_dual, psi):
    """Pairing ``<y, psi> = int_{-1}^0 y(-theta) psi(d theta) = int y(sigma) nu(d sigma)``.

    Parameters
    ----------
    y_dual : GridFunction on the unit grid
        Bounded functional; samples of shape ``(M+1,)`` (scalar states),
        ``(M+1, n)`` (row vector) or ``(M+1, m, n)``.
    psi : CumulativeHistory
    """
    mu = psi.measure
    yv = np.asarray(y_dual.values)
    yl = np.asarray(y_dual.left)
    if yv.ndim == 1:
        yv = yv[:, None]
        yl = yl[:, None]
    scalar_out = yv.ndim == 2
    if scalar_out:
        yv = yv[:, None, :]
        yl = yl[:, None, :]
    out = np.zeros(yv.shape[1])
    for s, w in zip(mu.locs, mu.weights):
        val = interp(yv, yl, mu.h, s)
        out = out + val @ w[:, 0]
    if mu.has_density():
        prod_r = np.einsum("kmn,kn->km", yv, mu.density[:, :, 0])
        prod_l = np.einsum("kmn,kn->km", yl, mu.density_left[:, :, 0])
        out = out + trapz(prod_r, prod_l, mu.h)
    return float(out[0]) if scalar_out else out


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------

class TranslationOrbit:
    """Orbit ``S(t) y = x(t + .)`` of a translation-type semigroup.

    Parameters
    ----------
    history : HistoryFunction
        Initial state.
    x : GridFunction
        Solution on ``[0, T]`` with ``x(0)`` equal to the history value at 0.
    """

    def __init__(self, history, x):
        self.history = history
        self.x = x
        M = history.M
        xv = np.asarray(x.values)
        xl = np.asarray(x.left)
        if xv.ndim == 1:
            xv = xv[:, None]
            xl = xl[:, None]
        hv = np.asarray(history.values)
        hl = np.asarray(history.left)
        self.ext_v = np.concatenate([hv[:M], xv], axis=0)
        self.ext_l = np.concatenate([hl[:M], xl], axis=0)
        self.ext_l[M] = hl[M]
        self.M = M
        self.h = history.h
        self.grid = x.grid

    def value(self, tau, side="right"):
        """``x(tau)`` for ``tau`` in ``[-1, T]`` (history for ``tau < 0``)."""
        return interp(self.ext_v, self.ext_l, self.h, np.asarray(tau) + 1.0, side)

    def state(self, t):
        M, h = self.M, self.h
        p, r = self.grid.locate(t)
        if r == 0.0:
            v = self.ext_v[p: p + M + 1].copy()
            l = self.ext_l[p: p + M + 1].copy()
            at0 = self.ext_v[p + M].copy()
            return HistoryFunction(v, at0, l)
        tau = t + (-1.0 + np.arange(M + 1) * h)
        v = self.value(tau)
        l = self.value(tau, side="left")
        return HistoryFunction(v, self.value(t), l)

    def pair_series(self, functional, side="right"):
        """Samples of ``t -> <functional, S(t) y>`` on the time grid.

        Parameters
        ----------
        functional : HalfLineMeasure
            ``m x n`` measure on ``[0, 1]``.
        side : {'right', 'left'}
            Right values or left limits in ``t``.

        Returns
        -------
        ndarray, shape (N, m) + trailing state shape
        """
        M, h = self.M, self.h
        N = self.grid.N
        mu = functional
        ev = self.ext_v
        el = self.ext_l
        out = np.zeros((N, mu.dims[0]) + ev.shape[2:])
        idx = np.arange(N)
        if len(mu.locs):
            qs, rs = zip(*(mu.grid.locate(s) for s in mu.locs))
            qs = np.array(qs)
            rs = np.array(rs)
            on = rs == 0.0
            if np.any(on):
                base = idx[:, None] + M - qs[on][None, :]
                vals = ev[base] if side == "right" else el[base]
                out += np.einsum("aij,kaj...->ki...", mu.weights[on], vals, optimize=True)
            for q, r, a in zip(qs[~on], rs[~on], mu.weights[~on]):
                base = idx + M - q
                vals = r * ev[base - 1] + (1.0 - r) * el[base]
                out += np.einsum("ij,kj...->ki...", a, vals)
        if mu.has_density():
            K = min(M + 1, mu.grid.N)
            bv = mu.density[: K - 1]
            bl = mu.density_left[1:K]
            k0 = np.arange(K - 1)
            chunk = max(1, 2_000_000 // max(1, K * ev[0].size))
            for start in range(0, N, chunk):
                ii = idx[start:start + chunk, None] + M
                seg_r = el[ii - k0[None, :]]
                seg_l = ev[ii - k0[None, :] - 1]
                out[start:start + chunk] += 0.5 * h * (
                    np.einsum("kij,nkj...->ni...", bv, seg_r, optimize=True)
                    + np.einsum("kij,nkj...->ni...", bl, seg_l, optimize=True))
        return out


class CumulativeOrbit:
    """Orbit of an NBV-type semigroup: ``(S(t) psi)(theta) = B(t + theta) - B(t)``.

    ``B`` is the cumulative output on ``[0, T]`` (given as its measure ``beta``)
    extended by ``psi`` for non-positive arguments.
    """

    def __init__(self, psi, beta):
        self.psi = psi
        self.beta = beta
        self.grid = beta.grid
        self.h = beta.h

    def state(self, t):
        nu = self.psi.measure
        n = nu.dims[0]
        g1 = nu.grid
        # old cohorts: nu shifted by t (truncated at sigma = 1)
        locs = [s + t for s in nu.locs if s + t <= 1.0 + MERGE_RTOL * g1.h]
        ws = [w for s, w in zip(nu.locs, nu.weights) if s + t <= 1.0 + MERGE_RTOL * g1.h]
        dv, dl = shift(nu.density, nu.density_left, g1.h, t)
        # new births: beta on [t - 1, t] reflected to sigma = t - tau
        beta = self.beta
        for s, w in zip(beta.locs, beta.weights):
            sig = t - s
            if -MERGE_RTOL * g1.h <= sig <= 1.0 + MERGE_RTOL * g1.h:
                locs.append(max(sig, 0.0))
                ws.append(w)
        if beta.has_density():
            M = g1.N - 1
            p, r = beta.grid.locate(t)
            if r != 0.0:
                raise ValueError("cumulative states are available at grid times only")
            k = np.arange(M + 1)
            src = p - k
            ok = src >= 0
            # reflection swaps right values and left limits
            bv = np.zeros((M + 1, n, 1))
            bl = np.zeros((M + 1, n, 1))
            bv[ok] = beta.density_left[src[ok]]
            bl[ok] = beta.density[src[ok]]
            # at sigma = t (tau = 0) the births start: right value there is 0
            if 0 <= p <= M:
                bv[p] = 0.0
            dv = dv + bv
            dl = dl + bl
        mu = HalfLineMeasure(g1, (n, 1), locs, ws, dv, dl)
        return CumulativeHistory(mu)

    def cumulative(self):
        """``B`` at the time nodes (values and left limits)."""
        return self.beta.cumulative()

    def pair_series(self, functional, side="right"):
        """Samples of ``t -> <functional, S(t) psi>`` on the time grid.

        ``side='right'`` gives right limits in ``t`` (a cohort that reaches
        ``theta = -1`` exactly at ``t`` is excluded), ``side='left'`` left limits.

        Parameters
        ----------
        functional : GridFunction on the unit grid
            Bounded function with samples ``(M+1,)``, ``(M+1, n)`` or
            ``(M+1, m, n)``.

        Returns
        -------
        ndarray, shape (N, m)
        """
        yv, yl = _functional_samples(functional)
        nu = self.psi.measure
        beta = self.beta
        h = self.h
        M = nu.grid.N - 1
        N = self.grid.N
        m = yv.shape[1]
        out = np.zeros((N, m))
        t = self.grid.t
        eps = MERGE_RTOL * h
        # old cohorts (atoms of nu) move to sigma = s + t
        for s, w in zip(nu.locs, nu.weights):
            sig = s + t
            # a cohort reaching sigma = 1 is still present from the left only
            ok = sig <= 1.0 + eps if side == "left" else sig < 1.0 - eps
            vals = interp(yv, yl, h, np.minimum(sig[ok], 1.0), side=side)
            out[ok] += vals @ w[:, 0]
        # density of nu, transported and truncated at sigma = 1
        if nu.has_density():
            for i in range(min(N, M + 1)):
                k = np.arange(M + 1 - i)
                pr = np.einsum("kmn,kn->km", yv[k + i], nu.density[k, :, 0])
                pl = np.einsum("kmn,kn->km", yl[k + i], nu.density_left[k, :, 0])
                if k.size > 1:
                    out[i] += trapz(pr, pl, h)
        # births: atoms of beta at tau reach sigma = t - tau
        for s, w in zip(beta.locs, beta.weights):
            sig = t - s
            if side == "left":
                ok = (sig > eps) & (sig <= 1.0 + eps)
            else:
                ok = (sig >= -eps) & (sig < 1.0 - eps)
            vals = interp(yv, yl, h, np.clip(sig[ok], 0.0, 1.0), side=side)
            out[ok] += vals @ w[:, 0]
        if beta.has_density():
            for i in range(N):
                K = min(i, M)
                if K == 0:
                    continue
                k = np.arange(K + 1)
                # cell [sigma_k, sigma_k+1]: births at tau = t - sigma
                br = beta.density_left[i - k, :, 0]
                bl = beta.density[i - k, :, 0]
                pr = np.einsum("kmn,kn->km", yv[k], br)
                pl = np.einsum("kmn,kn->km", yl[k], bl)
                out[i] += 0.5 * h * (pr[:-1].sum(axis=0) + pl[1:].sum(axis=0))
        return out


def _functional_samples(functional):
    """Bounded functional samples as ``(M+1, m, n)`` arrays (values, left)."""
    yv = np.asarray(functional.values, dtype=float)
    yl = np.asarray(functional.left, dtype=float)
    if yv.ndim == 1:
        yv = yv[:, None, None]
        yl = yl[:, None, None]
    elif yv.ndim == 2:
        yv = yv[:, None, :]
        yl = yl[:, None, :]
    return yv, yl


# ---------------------------------------------------------------------------
# semigroups
# ---------------------------------------------------------------------------

class TwinSemigroupRep:
    """Common interface of the solution semigroups.

    Subclasses implement :meth:`orbit`; everything else is derived from it.

    Attributes
    ----------
    kind : str
        One of ``'shift-B'``, ``'shift-NBV'``, ``'rfde'``, ``'nfde'``, ``'re'``.
    grid : Grid
        Time grid; ``grid.h`` is also the state-space step.
    state_type : str
        ``'B'`` or ``'NBV'``.
    """

    kind = "abstract"
    state_type = "B"

    def __init__(self, grid, n=1):
        self.grid = grid
        self.n = n
        self.growth = None

    @property
    def horizon(self):
        return self.grid.T

    def orbit(self, y):
        raise NotImplementedError

    def apply(self, t, y):
        if t < -1e-15 or t > self.grid.T + 1e-12:
            raise ValueError(f"time {t} outside [0, {self.grid.T}]")
        return self.orbit(y).state(t)

    def pair_series(self, y, functional, side="right"):
        """Samples of ``t -> <functional, S(t) y>`` (shape ``(N, m, ...)``)."""
        orb = self.orbit(y)
        if hasattr(orb, "pair_series"):
            return orb.pair_series(functional, side=side)
        return np.array([np.atleast_1d(self.pair(functional, orb.state(t))) for t in self.grid.t])

    def pair(self, y_dual, y):
        if self.state_type == "B":
            return pairing(y_dual, y)
        return pairing_nbv(y_dual, y)

    def norm(self, y):
        if self.state_type == "B":
            return y.sup_norm()
        return y.total_variation()

    def diff_norm(self, y1, y2):
        if self.state_type == "B":
            return (y1 - y2).sup_norm()
        d = (y1 - y2).values()
        return float(np.max(np.abs(d))) if d.size else 0.0

    # random elements for property suites --------------------------------
    def random_state(self, rng):
        h = self.grid.h
        if self.state_type == "B":
            return random_history(rng, self.n, h)
        return random_cumulative(rng, self.n, h)

    def random_probes(self, rng, count=50):
        h = self.grid.h
        if self.state_type == "B":
            return [random_functional(rng, self.n, h) for _ in range(count)]
        return [random_bounded_functional(rng, self.n, h) for _ in range(count)]

    def point_probes(self):
        """Functionals whose pairings return the state at the theta nodes."""
        h = self.grid.h
        M = int(round(1.0 / h))
        g1 = Grid(1.0, h)
        probes = []
        if self.state_type == "B":
            for k in range(M + 1):
                sigma = 1.0 - k * h
                probes.append(HalfLineMeasure(g1, (self.n, self.n), [sigma], [np.eye(self.n)]))
        else:
            for k in range(M + 1):
                sigma = 1.0 - k * h
                vals = np.zeros((M + 1, self.n, self.n))
                left = np.zeros_like(vals)
                j = int(round(sigma / h))
                vals[:j] = -np.eye(self.n)
                left[: j + 1] = -np.eye(self.n)
                left[0] = vals[0]
                probes.append(GridFunction(g1, vals, left))
        return probes


class ShiftB(TwinSemigroupRep):
    """Translation ``(S(t) y)(theta) = y(t + theta)``, extended by ``y(0)``."""

    kind = "shift-B"
    state_type = "B"

    def orbit(self, y):
        xv = np.broadcast_to(y.at_zero, (self.grid.N,) + y.at_zero.shape).copy()
        return TranslationOrbit(y.with_step(self.grid.h), GridFunction(self.grid, xv))


class ShiftNBV(TwinSemigroupRep):
    """Truncated shift ``(S(t) psi)(theta) = psi(t + theta)`` or 0 for ``t + theta > 0``."""

    kind = "shift-NBV"
    state_type = "NBV"

    def orbit(self, psi):
        return CumulativeOrbit(psi, HalfLineMeasure(self.grid, (psi.n, 1)))


def shift_apply_B(t, phi):
    """Apply the translation semigroup on bounded histories."""
    if t < 0:
        raise ValueError("t must be non-negative")
    M = phi.M
    h = phi.h
    p = t / h
    if abs(p - round(p)) < MERGE_RTOL:
        p = int(round(p))
        v = np.empty_like(phi.values)
        l = np.empty_like(phi.left)
        for k in range(M + 1):
            j = k + p
            v[k] = phi.values[j] if j < M else phi.at_zero
            l[k] = phi.left[j] if j <= M else phi.at_zero
        if p == 0:
            return HistoryFunction(phi.values, phi.at_zero, phi.left)
        return HistoryFunction(v, phi.at_zero, l)
    tau = t + phi.theta
    v = np.array([phi(min(x, 0.0)) if x < 0 else phi.at_zero for x in tau])
    l = np.array([phi(min(x, 0.0), side="left") if x <= 0 else phi.at_zero for x in tau])
    return HistoryFunction(v, phi.at_zero, l)


def shift_apply_NBV(t, psi):
    """Apply the truncated shift on cumulative histories."""
    if t < 0:
        raise ValueError("t must be non-negative")
    nu = psi.measure
    tol = MERGE_RTOL * nu.h
    locs = [s + t for s in nu.locs if s + t <= 1.0 + tol]
    ws = [w for s, w in zip(nu.locs, nu.weights) if s + t <= 1.0 + tol]
    dv, dl = shift(nu.density, nu.density_left, nu.h, t)
    return CumulativeHistory(HalfLineMeasure(nu.grid, nu.dims, locs, ws, dv, dl))


# ---------------------------------------------------------------------------
# random elements
# ---------------------------------------------------------------------------

def random_history(rng, n, h, smooth=True):
    """Random continuous history (a few Fourier modes), matching value at 0."""
    M = int(round(1.0 / h))
    th = -1.0 + np.arange(M + 1) * h
    vals = np.zeros((M + 1, n))
    for j in range(n):
        c = rng.normal(size=4)
        vals[:, j] = (c[0] + c[1] * np.sin(np.pi * th) + c[2] * np.cos(2 * np.pi * th)
                      + c[3] * th ** 2)
    if not smooth:
        vals += (th[:, None] < -0.5) * rng.normal(size=n)
    return HistoryFunction(vals, vals[-1])


def random_cumulative(rng, n, h, atoms=True):
    """Random NBV state: smooth birth density plus (optionally) cohorts on grid nodes."""
    g1 = Grid(1.0, h)
    M = g1.N - 1
    sig = g1.t
    dens = np.zeros((g1.N, n, 1))
    for j in range(n):
        c = rng.uniform(0.2, 1.0, size=3)
        dens[:, j, 0] = c[0] + c[1] * np.sin(np.pi * sig) + c[2] * sig
    locs, ws = [], []
    if atoms:
        for _ in range(2):
            locs.append(rng.integers(0, M + 1) * h)
            ws.append(rng.uniform(0.2, 1.0, size=(n, 1)))
    return CumulativeHistory(HalfLineMeasure(g1, (n, 1), locs, ws, dens))


def random_functional(rng, n, h, n_atoms=3):
    """Unit-TV NBV functional on ``[0, 1]`` (``1 x n``): atoms plus a step density."""
    g1 = Grid(1.0, h)
    M = g1.N - 1
    locs = rng.integers(0, M + 1, size=n_atoms) * h
    ws = rng.normal(size=(n_atoms, 1, n))
    dens = np.zeros((g1.N, 1, n))
    cut = rng.integers(1, M)
    dens[:cut] = rng.normal(size=(1, n))
    dens[cut:] = rng.normal(size=(1, n))
    left = dens.copy()
    left[cut] = dens[cut - 1]
    mu = HalfLineMeasure(g1, (1, n), locs, ws, dens, left)
    from .measures import tv_norm
    return mu.scale(1.0 / tv_norm(mu))


def random_bounded_functional(rng, n, h):
    """Random step function on ``[0, 1]`` with sup norm 1 (row vector)."""
    g1 = Grid(1.0, h)
    M = g1.N - 1
    cuts = np.sort(rng.integers(1, M, size=3))
    levels = rng.uniform(-1.0, 1.0, size=(4, n))
    vals = np.zeros((M + 1, n))
    left = np.zeros((M + 1, n))
    edges = [0, *cuts, M + 1]
    for j in range(4):
        vals[edges[j]:edges[j + 1]] = levels[j]
        left[edges[j] + 1:edges[j + 1] + 1 if j < 3 else M + 1] = levels[j]
    left[0] = vals[0]
    scale = np.max(np.abs(levels).sum(axis=-1)) if n > 1 else np.max(np.abs(levels))
    return GridFunction(g1, vals / scale, left / scale)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def check_semigroup_law(S, t, s, y, probes=()):
    """Residual of ``S(t + s) y = S(t) S(s) y`` in pairings and in state norm."""
    if t < 0 or s < 0 or t + s > S.horizon + 1e-12:
        raise ValueError("need t, s >= 0 with t + s within the horizon")
    lhs = S.apply(t + s, y)
    rhs = S.apply(t, S.apply(s, y))
    res = S.diff_norm(lhs, rhs)
    for p in probes:
        d = np.asarray(S.pair(p, lhs)) - np.asarray(S.pair(p, rhs))
        res = max(res, float(np.max(np.abs(d))))
    return res


def check_identity(S, y, probes=()):
    """Residual of ``S(0) y = y``."""
    out = S.apply(0.0, y)
    res = S.diff_norm(out, y)
    if S.state_type == "B":
        res = max(res, float(np.max(np.abs(out.at_zero - y.at_zero))))
    for p in probes:
        d = np.asarray(S.pair(p, out)) - np.asarray(S.pair(p, y))
        res = max(res, float(np.max(np.abs(d))))
    return res


def check_generator_integral(S, y, z, t, zeta=None):
    """Sup norm of ``int_0^t S(tau) z d tau - (S(t) y - y)`` for a generator pair.

    For ``B``-type semigroups the boundary condition ``z(0) = <zeta, y>``
    is validated first when `zeta` is supplied.
    """
    if zeta is not None:
        bc = pairing(zeta, y)
        if np.max(np.abs(np.asarray(bc) - z.at_zero)) > 1e-8 * max(1.0, y.sup_norm()):
            raise ValueError("z(0) must equal <zeta, y> for a generator pair")
    if t == 0:
        return 0.0
    grid = S.grid
    p, r = grid.locate(t)
    if r != 0.0:
        raise ValueError("t must be a grid time")
    orb = S.orbit(z)
    h = grid.h
    if S.state_type == "B":
        # tau -> (S(tau) z)(theta) = x_z(tau + theta); integrate the extended
        # trajectory cell by cell with one-sided limits
        E = cumtrapz(orb.ext_v, orb.ext_l, h)
        M = orb.M
        k = np.arange(M + 1)
        integral = E[p + k] - E[k]
        # the point value at theta = 0 integrates x_z over [0, t]
        at0 = E[p + M] - E[M]
        lhs = HistoryFunction(integral, at0)
        rhs = S.apply(t, y) - y
        diff = (lhs - rhs)
        return max(_vecnorm(diff.values), _vecnorm(diff.at_zero))
    states = [orb.state(j * h) for j in range(p + 1)]
    vals = np.array([st.values() for st in states])
    integral = trapz(vals, vals, h)
    rhs = (S.apply(t, y) - y).values()
    return float(np.max(np.abs(integral - rhs)))


def fit_growth(S, states, times):
    """Empirical ``(M, omega)`` with ``|S(t) y| <= M e^{omega t} |y|`` on the samples."""
    ratios = []
    for y in states:
        ny = S.norm(y)
        if ny == 0:
            continue
        orb = S.orbit(y)
        for t in times:
            ratios.append((t, S.norm(orb.state(t)) / ny))
    ratios = np.array(ratios)
    if ratios.size == 0:
        return 1.0, 0.0
    tt, rr = ratios[:, 0], np.maximum(ratios[:, 1], 1e-300)
    if np.ptp(tt) > 0:
        omega = max(0.0, np.polyfit(tt, np.log(rr), 1)[0])
    else:
        omega = 0.0
    Mc = float(np.max(rr * np.exp(-omega * tt)))
    Mc = max(Mc, 1.0)
    S.growth = (Mc, float(omega))
    return Mc, float(omega)


def growth_bound_ok(S, states, times, rtol=1e-9):
    """Check the fitted exponential bound on the sampled suite."""
    if S.growth is None:
        fit_growth(S, states, times)
    Mc, om = S.growth
    for y in states:
        ny = S.norm(y)
        orb = S.orbit(y)
        for t in times:
            if S.norm(orb.state(t)) > Mc * np.exp(om * t) * ny * (1 + rtol) + 1e-12:
                return False
    return True

