"""Resolvent kernels and renewal (Volterra-Stieltjes) equations.

The workhorse is :func:`march`, which solves

    y(t) = f(t) + (mu1 * y)(t) + (mu2 * Y)(t),    Y(t) = int_0^t y,

node by node on a uniform grid.  The second term with ``mu2`` acting on the
running integral ``Y`` is how kernels given as NBV *functions* are handled:
for an NBV function ``g`` with measure ``dg`` one has ``g * y = dg * (1 * y)``,
so jumps of ``g`` become atoms acting on a continuous function.
"""

import numpy as np

from .measures import (
    MERGE_RTOL,
    GridFunction,
    HalfLineMeasure,
    convolve,
    convolve_fn,
    cumtrapz,
    shift,
    tv_norm,
    _as_gridfunction,
    _as_matrix_samples,
    _restore,
)


class SingularAtZero(ValueError):
    """Raised when ``I - mu({0})`` is not invertible (no resolvent exists)."""


def tol(h, tv=1.0, T=1.0, floor=1e-11):
    """Default accuracy contract ``10 h^2 T * tv * exp(tv T)``.

    A small absolute floor covers round-off when ``tv`` is zero or tiny.
    """
    return 10.0 * h * h * T * tv * np.exp(tv * T) + floor


def _check_invertible(A):
    m = A.shape[0]
    B = np.eye(m) - A
    if np.linalg.cond(B) > 1e12:
        raise SingularAtZero(
            f"det(I - mu({{0}})) = {np.linalg.det(B):.3g}: the resolvent does not exist")
    return B


def _split_atoms(mu):
    """Atoms as ``(q, r, weight)`` triples relative to the grid."""
    out = []
    for s, a in zip(mu.locs, mu.weights):
        q, r = mu.grid.locate(s)
        out.append((q, r, a))
    return out


def _rowmajor(b):
    """``(N, m, m) -> (m, N, m)`` so that row blocks of consecutive nodes are contiguous."""
    return np.ascontiguousarray(np.asarray(b).transpose(1, 0, 2))


def march(f, mu1=None, mu2=None, grid=None):
    """Solve ``y = f + mu1 * y + mu2 * (1 * y)`` on the grid by marching.

    Parameters
    ----------
    f : GridFunction or array
        Forcing with samples of shape ``(N,)``, ``(N, m)`` or ``(N, m, c)``.
        Jumps of `f` at nodes are carried through its left limits.
    mu1, mu2 : HalfLineMeasure, optional
        ``m x m`` kernels; either may be omitted.
    grid : Grid, optional
        Needed only when `f` is a plain array and both kernels are omitted.

    Returns
    -------
    GridFunction
        Solution with the same sample shape as `f`.

    Notes
    -----
    At each node the implicit coupling (atom at zero, atoms within the first
    cell, and the ``s = 0`` trapezoid weight) is resolved with a small ``m x m``
    linear solve: first for the left limit, then for the value.
    """
    if grid is None:
        grid = (mu1 or mu2).grid if (mu1 or mu2) is not None else f.grid
    f = _as_gridfunction(f, grid)
    fv, kind = _as_matrix_samples(np.asarray(f.values))
    fl, _ = _as_matrix_samples(np.asarray(f.left))
    N, m, c = fv.shape
    h = grid.h
    I = np.eye(m)
    for mu in (mu1, mu2):
        if mu is not None and (mu.grid != grid or mu.dims != (m, m)):
            raise ValueError("kernel must be m x m on the grid of the forcing")

    y = np.zeros((N, m, c))
    yl = np.zeros((N, m, c))
    Y = np.zeros((N, m, c))
    # time-reversed copies: the history sums become single matrix products
    yR = np.zeros((N, m, c))
    ylR = np.zeros((N, m, c))
    YR = np.zeros((N, m, c))

    def atom_tables(mu):
        if mu is None:
            return None
        at = _split_atoms(mu)
        a0 = sum((a for q, r, a in at if q == 0 and r == 0.0), np.zeros((m, m)))
        on = [(q, a) for q, r, a in at if r == 0.0 and q >= 1]
        off = [(q, r, a) for q, r, a in at if r > 0.0]
        return a0, on, off

    t1 = atom_tables(mu1)
    t2 = atom_tables(mu2)
    d1 = mu1 is not None and mu1.has_density()
    d2 = mu2 is not None and mu2.has_density()
    if d1:
        b1, b1l = mu1.density, mu1.density_left
        b1T, b1lT = _rowmajor(b1), _rowmajor(b1l)
    if d2:
        b2, b2l = mu2.density, mu2.density_left
        b2T, b2lT = _rowmajor(b2), _rowmajor(b2l)

    def hsum(BT, lo, hi, R, rlo):
        # sum_k B[lo + k] @ R[rlo + k]
        if hi <= lo:
            return 0.0
        return BT[:, lo:hi, :].reshape(m, -1) @ R[rlo:rlo + hi - lo].reshape(-1, c)

    # coefficients of the implicit unknowns
    a0_1 = t1[0] if t1 else np.zeros((m, m))
    a0_2 = t2[0] if t2 else np.zeros((m, m))
    off_first_1 = sum((a * (1.0 - r) for q, r, a in (t1[2] if t1 else []) if q == 0),
                      np.zeros((m, m)))
    off_first_2 = sum((a * (1.0 - r) for q, r, a in (t2[2] if t2 else []) if q == 0),
                      np.zeros((m, m)))

    B0 = I - a0_1
    _check_invertible(a0_1)
    B0inv = np.linalg.inv(B0)
    y[0] = B0inv @ fv[0]
    yl[0] = y[0]
    yR[N - 1] = ylR[N - 1] = y[0]

    C2 = a0_2 + off_first_2 + (0.5 * h * b2[0] if d2 else 0.0)
    CL = a0_1 + off_first_1 + (0.5 * h * b1[0] if d1 else 0.0) + 0.5 * h * C2
    ML = I - CL
    if np.linalg.cond(ML) > 1e12:
        raise SingularAtZero("implicit step matrix is singular; reduce h")
    MLinv = np.linalg.inv(ML)

    for i in range(1, N):
        # ---- known contributions shared by value and left limit
        common = np.zeros((m, c))
        if d1:
            common += 0.5 * h * (hsum(b1T, 1, i, ylR, N - i) + hsum(b1lT, 1, i + 1, yR, N - i))
        Yk = Y[i - 1] + 0.5 * h * y[i - 1]
        if mu2 is not None:
            k2 = np.zeros((m, c))
            if d2:
                k2 += 0.5 * h * (hsum(b2T, 1, i, YR, N - i) + hsum(b2lT, 1, i + 1, YR, N - i))
            for q, a in t2[1]:
                if i >= q:
                    k2 += a @ Y[i - q]
            for q, r, a in t2[2]:
                if q >= 1 and i >= q + 1:
                    k2 += a @ ((1.0 - r) * Y[i - q] + r * Y[i - q - 1])
            for q, r, a in t2[2]:
                if q == 0:
                    k2 += a @ (r * Y[i - 1])
            common += k2 + C2 @ Yk
        # off-grid atoms of mu1 (value and left limit agree between nodes)
        if t1:
            for q, r, a in t1[2]:
                if q >= 1 and i >= q + 1:
                    common += a @ ((1.0 - r) * yl[i - q] + r * y[i - q - 1])
                elif q == 0:
                    common += a @ (r * y[i - 1])
        # ---- on-grid atoms of mu1 with q >= 1
        right = np.zeros((m, c))
        leftk = np.zeros((m, c))
        if t1:
            for q, a in t1[1]:
                if i >= q:
                    right += a @ y[i - q]
                if i > q:
                    leftk += a @ yl[i - q]
        # ---- left limit: implicit in yl[i]
        yl[i] = MLinv @ (fl[i] + common + leftk)
        Y[i] = Yk + 0.5 * h * yl[i]
        ylR[N - 1 - i] = yl[i]
        YR[N - 1 - i] = Y[i]
        # ---- value: everything but the atom at zero is now known
        full = common + 0.5 * h * C2 @ yl[i] + right
        if d1:
            full += 0.5 * h * b1[0] @ yl[i]
        if t1:
            full += off_first_1 @ yl[i]
        y[i] = B0inv @ (fv[i] + full)
        yR[N - 1 - i] = y[i]

    return GridFunction(grid, _restore(y, kind), _restore(yl, kind))


def neumann_atoms(g, nu, max_terms=100000):
    """Pure-atom solution of ``sigma = g + nu * sigma`` by the Neumann series.

    ``nu`` must not have an atom at zero; the series then terminates at the
    horizon.
    """
    if len(nu.locs) and nu.locs[0] <= MERGE_RTOL * nu.h:
        raise ValueError("Neumann series needs a kernel without an atom at zero")
    term = g.atomic_part()
    locs, weights = [term.locs], [term.weights]
    nu_d = nu.atomic_part()
    for _ in range(max_terms):
        term = convolve(nu_d, term)
        if len(term.locs) == 0:
            return HalfLineMeasure(g.grid, g.dims, np.concatenate(locs), np.concatenate(weights))
        locs.append(term.locs)
        weights.append(term.weights)
    raise RuntimeError("Neumann series did not terminate")


def resolvent_measure(mu, T=None):
    """Resolvent ``rho`` of a measure: ``rho - mu * rho = mu = rho - rho * mu``.

    Parameters
    ----------
    mu : HalfLineMeasure
        Square matrix-valued measure.
    T : float, optional
        Horizon; defaults to the horizon of `mu`.

    Returns
    -------
    HalfLineMeasure
        The resolvent on ``[0, T]``.  Its atoms are computed exactly; when
        ``A = mu({0}) != 0`` the atom at zero is ``A (I - A)^{-1}``.

    Raises
    ------
    SingularAtZero
        If ``det(I - mu({0})) = 0``.
    """
    if T is not None and abs(T - mu.T) > 1e-12:
        mu = mu.with_horizon(T)
    m = mu.dims[0]
    if mu.dims[0] != mu.dims[1]:
        raise ValueError("resolvent needs a square kernel")
    A = mu.atom_at_zero()
    B = _check_invertible(A)
    grid = mu.grid
    if np.any(A != 0.0):
        Binv = np.linalg.inv(B)
        c0 = np.linalg.solve(B, A)
        nu = mu.without_atom_at_zero().lmul(Binv)
        g = nu.rmul(Binv)
    else:
        c0 = None
        nu = mu
        g = mu
    sigma_d = neumann_atoms(g, nu)
    if nu.has_density() or g.has_density():
        u_v = np.array(g.density)
        u_l = np.array(g.density_left)
        if nu.has_density():
            for s, w in zip(sigma_d.locs, sigma_d.weights):
                sv, sl = shift(nu.density, nu.density_left, grid.h, s)
                u_v += np.einsum("kij,jl->kil", sv, w)
                u_l += np.einsum("kij,jl->kil", sl, w)
        dens = march(GridFunction(grid, u_v, u_l), mu1=nu)
        rho = sigma_d.copy_with(density=dens.values, density_left=dens.left)
    else:
        rho = sigma_d
    if c0 is not None:
        rho = rho + HalfLineMeasure(grid, (m, m), [0.0], [c0])
    return rho


def resolvent_l1(k, T=None):
    """Resolvent of an integrable kernel: ``r = k + k * r`` (trapezoid rule).

    Parameters
    ----------
    k : GridFunction
        Square-matrix valued (or scalar) samples; jumps at nodes are allowed.

    Returns
    -------
    GridFunction
    """
    if T is not None and abs(T - k.grid.T) > 1e-12:
        raise ValueError("horizon of the kernel and requested horizon differ")
    vals = np.asarray(k.values)
    scalar = vals.ndim == 1
    kv = vals[:, None, None] if scalar else vals
    kl = np.asarray(k.left)[:, None, None] if scalar else np.asarray(k.left)
    mu = HalfLineMeasure(k.grid, kv.shape[1:], density=kv, density_left=kl)
    r = march(GridFunction(k.grid, kv, kl), mu1=mu)
    if scalar:
        return GridFunction(k.grid, r.values[:, 0, 0], r.left[:, 0, 0])
    return r


def renewal_solve(mu, f, T=None):
    """Solve the renewal equation ``x = mu * x + f``.

    Parameters
    ----------
    mu : HalfLineMeasure
        ``n x n`` kernel with ``det(I - mu({0})) != 0``.
    f : GridFunction or array
        Forcing, vector (or matrix) valued, on the grid of `mu`.

    Returns
    -------
    GridFunction
        The solution, equal to ``f + rho * f`` with ``rho`` the resolvent.
    """
    if T is not None and abs(T - mu.T) > 1e-12:
        mu = mu.with_horizon(T)
    return march(f, mu1=mu)


def residual_tv(rho, mu, side="left"):
    """TV norm of ``rho - mu - mu * rho`` (``side='left'``) or ``rho - mu - rho * mu``."""
    conv = convolve(mu, rho) if side == "left" else convolve(rho, mu)
    return tv_norm(rho - mu - conv)


def renewal_residual(mu, f, x):
    """Sup norm of ``x - mu * x - f``."""
    f = _as_gridfunction(f, mu.grid)
    r = x - convolve_fn(mu, x) - f
    return r.sup_norm()


def empirical_growth(rho):
    """Fitted exponential growth rate of ``t -> |rho|([0, t])``.

    No constructive weight is certified; this is a diagnostic only.
    """
    nv = np.abs(rho.density).sum(axis=-1).max(axis=-1)
    nl = np.abs(rho.density_left).sum(axis=-1).max(axis=-1)
    F = cumtrapz(nv, nl, rho.h)
    for s, w in zip(rho.locs, rho.weights):
        q, _ = rho.grid.locate(s)
        F[min(q, len(F) - 1):] += np.abs(w).sum(axis=-1).max()
    t = rho.grid.t
    sel = F > 1e-300
    if sel.sum() < 2:
        return 0.0
    slope = np.polyfit(t[sel], np.log(F[sel] + 1.0), 1)[0]
    return float(slope)
