"""Finite-rank perturbations of twin semigroups.

Two constructions are implemented on top of an unperturbed semigroup
``S0`` (any :class:`~renewalkit.semigroup.TwinSemigroupRep`):

* bounded perturbations ``C = C0 + sum_j <qd_j, .> q_j``, solved through the
  resolvent of the ``L^1`` kernel ``k(t) = qd S0(t) q``;
* relatively bounded perturbations ``C = C0 + sum_j <Qd_j, C0 .> q_j``, solved
  through the resolvent of the NBV kernel ``K(t) = Qd (S0(t) - I) q`` and
  Stieltjes convolutions.  Regime ``'V'`` integrates against the cumulative
  output ``V(d tau)``; regime ``'W'`` integrates against ``W(d tau)`` (the
  partially integrated form).

All quantities are computed at pairing level from time series
``t -> <functional, S0(t) y>`` sampled on the grid of ``S0`` with right
values and left limits.  States are reconstructed by pairing with point
evaluation functionals.
"""

import numpy as np

from .measures import Grid, GridFunction, HalfLineMeasure, convolve, convolve_fn
from .resolvent import resolvent_l1, resolvent_measure
from .semigroup import CumulativeHistory, HistoryFunction


class BoundedRankData:
    """Range vectors ``q`` and functionals ``qd`` of a bounded perturbation.

    Parameters
    ----------
    q : state or list of states
        A matrix-valued :class:`HistoryFunction` whose columns are the ``q_j``,
        or a list of states.
    qd : functional
        ``n x n`` :class:`HalfLineMeasure` on ``[0, 1]`` (rows ``qd_i``) for
        bounded-history states, or a bounded :class:`GridFunction` with samples
        ``(M+1, n, n)`` for cumulative states.
    """

    def __init__(self, q, qd):
        self.q = q
        self.qd = qd


class StieltjesRankData:
    """Range vectors ``q``, functionals ``Qd`` and the regime flag.

    ``regime='V'`` uses ``S(t) = S0(t) + int W0(t - tau) V(d tau)``;
    ``regime='W'`` uses ``S(t) = S0(t) + int W(d tau) V0(t - tau)``.
    """

    def __init__(self, q, Qd, regime):
        if regime not in ("V", "W"):
            raise ValueError("regime must be 'V' or 'W'")
        self.q = q
        self.Qd = Qd
        self.regime = regime


# ---------------------------------------------------------------------------
# series helpers
# ---------------------------------------------------------------------------

def _series(S0, y, functional, side="right"):
    """``<functional, S0(t) y>`` on the grid, shape ``(N, m)`` or ``(N, m, c)``."""
    if isinstance(y, (list, tuple)):
        cols = [np.asarray(S0.pair_series(yj, functional, side)).reshape(S0.grid.N, -1) for yj in y]
        return np.stack(cols, axis=-1)
    return np.asarray(S0.pair_series(y, functional, side))


def _series_gf(S0, y, functional):
    return GridFunction(S0.grid, _series(S0, y, functional), _series(S0, y, functional, "left"))


def nbv_samples_to_measure(grid, values, left, start=None):
    """Measure of a sampled NBV function.

    Jumps at nodes become atoms (exact for jumps located on nodes); between
    nodes the function is taken linear, i.e. the density is the cell slope.

    Parameters
    ----------
    values, left : array_like, shape (N, m, n)
        Right values and left limits.
    start : array_like, optional
        Value "just before" ``t = 0`` (default: zero), so that an atom at
        the origin has weight ``values[0] - start``.
    """
    v = np.asarray(values, dtype=float)
    l = np.asarray(left, dtype=float)
    if v.ndim == 1:
        v = v[:, None, None]
        l = l[:, None, None]
    elif v.ndim == 2:
        v = v[:, :, None]
        l = l[:, :, None]
    N = v.shape[0]
    h = grid.h
    dims = v.shape[1:]
    s0 = np.zeros(dims) if start is None else np.asarray(start, dtype=float).reshape(dims)
    scale = max(1.0, float(np.max(np.abs(v))) if v.size else 1.0)
    locs, ws = [], []
    j0 = v[0] - s0
    if np.max(np.abs(j0)) > 1e-14 * scale:
        locs.append(0.0)
        ws.append(j0)
    jumps = v[1:] - l[1:]
    for i in np.nonzero(np.max(np.abs(jumps.reshape(N - 1, -1)), axis=1) > 1e-14 * scale)[0]:
        locs.append((i + 1) * h)
        ws.append(jumps[i])
    slope = (l[1:] - v[:-1]) / h
    dv = np.zeros_like(v)
    dl = np.zeros_like(v)
    dv[:-1] = slope
    dl[1:] = slope
    dl[0] = dv[0]
    return HalfLineMeasure(grid, dims, locs, ws, dv, dl)


def _transpose(mu):
    return HalfLineMeasure(mu.grid, (mu.dims[1], mu.dims[0]), mu.locs,
                           np.swapaxes(mu.weights, 1, 2) if len(mu.locs) else [],
                           np.swapaxes(mu.density, 1, 2), np.swapaxes(mu.density_left, 1, 2))


def _conv_fn_right(f_values, f_left, mu, grid):
    """``int_[0,t] f(t - s) mu(ds)`` with ``f`` of shape ``(N, m, n)`` and ``mu`` ``n x c``."""
    fT = GridFunction(grid, np.swapaxes(f_values, 1, 2), np.swapaxes(f_left, 1, 2))
    out = convolve_fn(_transpose(mu), fT)
    v = np.asarray(out.values)
    l = np.asarray(out.left)
    if v.ndim == 2:
        v = v[:, :, None]
        l = l[:, :, None]
    return np.swapaxes(v, 1, 2), np.swapaxes(l, 1, 2)


def _time_index(grid, t):
    q, r = grid.locate(t)
    if r != 0.0:
        raise ValueError("t must be a grid time")
    if q >= grid.N:
        raise ValueError("t beyond the horizon")
    return q


# ---------------------------------------------------------------------------
# point-evaluation probes
# ---------------------------------------------------------------------------

def point_functional(S0):
    """All point-evaluation functionals of the state space stacked into one.

    Row block ``k`` evaluates the state at ``theta = -k h``.
    """
    h = S0.grid.h
    n = S0.n
    M = int(round(1.0 / h))
    g1 = Grid(1.0, h)
    if S0.state_type == "B":
        locs = np.arange(M + 1) * h
        ws = np.zeros((M + 1, n * (M + 1), n))
        for k in range(M + 1):
            ws[k, k * n:(k + 1) * n, :] = np.eye(n)
        return HalfLineMeasure(g1, (n * (M + 1), n), locs, ws)
    vals = np.zeros((M + 1, n * (M + 1), n))
    left = np.zeros_like(vals)
    for k in range(M + 1):
        # psi(-sigma_k) = -nu([0, sigma_k)) : functional -1 on [0, sigma_k)
        vals[:k, k * n:(k + 1) * n, :] = -np.eye(n)
        left[1:k + 1, k * n:(k + 1) * n, :] = -np.eye(n)
    return GridFunction(g1, vals, left)


def _state_from_probes(S0, samples):
    """Assemble a state from stacked point-evaluation samples at one time."""
    n = S0.n
    M = int(round(1.0 / S0.grid.h))
    blocks = np.asarray(samples).reshape(M + 1, n)
    if S0.state_type == "B":
        # block k is the value at theta = -k h
        vals = blocks[::-1].copy()
        at0 = blocks[0].copy()
        return HistoryFunction(vals, at0)
    return blocks[::-1].copy()


def _probe_states(S0, series, t):
    return _state_from_probes(S0, series[_time_index(S0.grid, t)])


# ---------------------------------------------------------------------------
# bounded perturbations
# ---------------------------------------------------------------------------

def bounded_kernel_k(S0, data):
    """``k_ij(t) = qd_i S0(t) q_j`` sampled on the grid (``(N, n, n)``)."""
    return _series_gf(S0, data.q, data.qd)


def bounded_v(S0, data, y):
    """``v = v0 + r * v0`` with ``v0(t) = qd S0(t) y`` and ``r`` the resolvent of ``k``."""
    k = bounded_kernel_k(S0, data)
    v0 = _series_gf(S0, y, data.qd)
    r = resolvent_l1(k)
    rv = np.asarray(r.values)
    rmu = HalfLineMeasure(S0.grid, rv.shape[1:], density=rv, density_left=np.asarray(r.left))
    conv = convolve_fn(rmu, v0)
    return GridFunction(S0.grid, np.asarray(v0.values) + np.asarray(conv.values).reshape(np.shape(v0.values)),
                        np.asarray(v0.left) + np.asarray(conv.left).reshape(np.shape(v0.values)))


def bounded_w(S0, data, y_dual):
    """``w = w0 + w0 * r`` with ``w0(t) = y_dual S0(t) q`` (shape ``(N, m, n)``)."""
    k = bounded_kernel_k(S0, data)
    r = resolvent_l1(k)
    w0 = _series_gf(S0, data.q, y_dual)
    rv = np.asarray(r.values)
    rmu = HalfLineMeasure(S0.grid, rv.shape[1:], density=rv, density_left=np.asarray(r.left))
    cv, cl = _conv_fn_right(np.asarray(w0.values), np.asarray(w0.left), rmu, S0.grid)
    return GridFunction(S0.grid, np.asarray(w0.values) + cv, np.asarray(w0.left) + cl)


def bounded_perturbed_series(S0, data, y, y_dual, variant="v"):
    """``t -> <y_dual, S(t) y>`` for the bounded perturbation.

    ``variant='v'`` evaluates ``<y_dual, S0(t) y> + (w0 * v)(t)``;
    ``variant='w'`` evaluates ``<y_dual, S0(t) y> + (w * v0)(t)``.
    """
    base = _series(S0, y, y_dual)
    grid = S0.grid
    if variant == "v":
        w = _series_gf(S0, data.q, y_dual)
        v = bounded_v(S0, data, y)
    else:
        w = bounded_w(S0, data, y_dual)
        v = _series_gf(S0, y, data.qd)
    wv = np.asarray(w.values)
    wmu = HalfLineMeasure(grid, wv.shape[1:], density=wv, density_left=np.asarray(w.left))
    conv = np.asarray(convolve_fn(wmu, v).values)
    return base + conv.reshape(base.shape)


def bounded_perturbed_apply(S0, data, t, y):
    """``S(t) y`` for the bounded perturbation, reconstructed by point probes.

    For bounded-history states a :class:`HistoryFunction` is returned (left
    limits are not reconstructed); for cumulative states the array of values
    at ``theta_k = -1 + k h`` is returned.
    """
    if data.qd is None:
        return S0.apply(t, y)
    series = bounded_perturbed_series(S0, data, y, point_functional(S0))
    return _probe_states(S0, series, t)


# ---------------------------------------------------------------------------
# relatively bounded (Stieltjes) perturbations
# ---------------------------------------------------------------------------

def stieltjes_kernel_K(S0, data):
    """Measure of ``K(t) = Qd (S0(t) - I) q`` on ``[0, T]``; ``K(0) = 0``."""
    ser = _series(S0, data.q, data.Qd)
    serl = _series(S0, data.q, data.Qd, "left")
    K0 = ser[0].copy()
    mu = nbv_samples_to_measure(S0.grid, ser - K0, serl - K0)
    atom0 = mu.atom_at_zero()
    if atom0 is not None and np.max(np.abs(atom0)) > 1e-12:
        raise ValueError("K must be continuous at t = 0")
    return mu


def stieltjes_V0(S0, data, y):
    """``V0(t) y = Qd (S0(t) - I) y`` as a GridFunction (``(N, n)``)."""
    ser = _series(S0, y, data.Qd)
    serl = _series(S0, y, data.Qd, "left")
    return GridFunction(S0.grid, ser - ser[0], serl - ser[0])


def stieltjes_V(S0, data, y, K=None):
    """Cumulative output ``V = V0 + R * V0``.

    Returns
    -------
    (GridFunction, HalfLineMeasure)
        ``V(.) y`` sampled on the grid and its measure ``V(d tau) y``.
    """
    K = stieltjes_kernel_K(S0, data) if K is None else K
    R = resolvent_measure(K)
    V0 = stieltjes_V0(S0, data, y)
    v0 = np.asarray(V0.values)
    dV0 = nbv_samples_to_measure(S0.grid, v0, np.asarray(V0.left))
    dV = dV0 + convolve(R, dV0)
    F, Fl = dV.cumulative()
    return GridFunction(S0.grid, F[:, :, 0], Fl[:, :, 0]), dV


def stieltjes_W(S0, data, y_dual, K=None):
    """Measure of ``W(.) = W0 + W0 * R`` seen through `y_dual` (``m x n``).

    ``W0(0) = 0``, so the measure has an atom ``<y_dual, q>`` at the origin.
    """
    K = stieltjes_kernel_K(S0, data) if K is None else K
    R = resolvent_measure(K)
    w0 = _series(S0, data.q, y_dual)
    w0l = _series(S0, data.q, y_dual, "left")
    dW0 = nbv_samples_to_measure(S0.grid, w0, w0l)
    return dW0 + convolve(dW0, R)


def stieltjes_perturbed_series(S0, data, y, y_dual):
    """``t -> <y_dual, S(t) y>`` for the relatively bounded perturbation."""
    base = _series(S0, y, y_dual)
    grid = S0.grid
    K = stieltjes_kernel_K(S0, data)
    if data.regime == "V":
        _, dV = stieltjes_V(S0, data, y, K)
        w0 = _series(S0, data.q, y_dual)
        w0l = _series(S0, data.q, y_dual, "left")
        # W0(0) = 0; its right limit is used inside the density quadrature
        cv, _ = _conv_fn_right(w0, w0l, dV, grid)
        return base + cv.reshape(base.shape)
    dW = stieltjes_W(S0, data, y_dual, K)
    V0 = stieltjes_V0(S0, data, y)
    conv = np.asarray(convolve_fn(dW, V0).values)
    return base + conv.reshape(base.shape)


def stieltjes_perturbed_apply(S0, data, t, y):
    """``S(t) y`` for the relatively bounded perturbation (point-probe reconstruction)."""
    if data.Qd is None:
        return S0.apply(t, y)
    series = stieltjes_perturbed_series(S0, data, y, point_functional(S0))
    return _probe_states(S0, series, t)


def cumulative_output_residual(S, V_of, y, t, s):
    """Residual of ``V(t + s) y - V(t) y = V(s) S(t) y``.

    Parameters
    ----------
    S : TwinSemigroupRep
        The perturbed semigroup (used to form ``S(t) y``).
    V_of : callable
        ``V_of(state)`` returns the sampled cumulative output ``V(.) state``.
    """
    grid = S.grid
    it = _time_index(grid, t)
    js = _time_index(grid, s)
    Vy = np.asarray(V_of(y).values)
    Vs = np.asarray(V_of(S.apply(t, y)).values)
    return float(np.max(np.abs(Vy[it + js] - Vy[it] - Vs[js])))


def rfde_rank_data(sys):
    """Bounded-perturbation data turning the frozen-state shift into the RFDE."""
    q = HistoryFunction.unit_at_zero(sys.n, sys.h)
    return BoundedRankData(q, sys.zeta)


def re_smooth_rank_data(k, h):
    """Bounded-perturbation data for a smooth renewal kernel ``k`` on ``[0, 1]``."""
    q = [CumulativeHistory.dirac_at_zero(h)]
    return BoundedRankData(q, k)
