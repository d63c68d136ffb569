"""Matrix-valued measures on a bounded piece of the half-line.

A measure is stored as a finite list of atoms (exact locations and matrix
weights) plus an absolutely continuous part sampled on a uniform grid.  The
singular-continuous part of a general Borel measure is not representable.

Densities and grid functions may jump at grid nodes.  Every sampled object
therefore carries two arrays: ``values`` (right limits, which are also the
point values) and ``left`` (left limits).  All integrals use the trapezoid
rule cell by cell with the appropriate one-sided limits, so piecewise smooth
functions whose jumps sit on grid nodes are integrated with O(h^2) accuracy.
Jumps between grid nodes are handled by linear interpolation and degrade to
O(h) locally.

Matrix norms are the max-row-sum (operator infinity) norm throughout.
"""

import json

import numpy as np
from scipy import fft as sfft

#: relative tolerance (in units of h) used to merge atom locations and to
#: decide whether a shifted location coincides with a grid node
MERGE_RTOL = 1e-6


def matnorm(a):
    """Max-row-sum norm of a matrix, or of the trailing two axes of a stack."""
    a = np.asarray(a)
    if a.ndim == 0:
        return float(abs(a))
    if a.ndim == 1:
        return float(np.abs(a).max(initial=0.0))
    return np.abs(a).sum(axis=-1).max(axis=-1)


class Grid:
    """Uniform grid ``t_i = i h`` on ``[0, T]`` with ``N = round(T/h) + 1`` nodes.

    Parameters
    ----------
    T : float
        Horizon, must be a multiple of `h` (up to rounding).
    h : float
        Step size.
    """

    def __init__(self, T, h):
        T = float(T)
        h = float(h)
        if not (h > 0 and T > 0):
            raise ValueError("grid needs T > 0 and h > 0")
        n_steps = int(round(T / h))
        if n_steps < 1 or abs(n_steps * h - T) > 1e-9 * max(T, 1.0):
            raise ValueError(f"step h={h} does not divide horizon T={T}")
        self.h = h
        self.N = n_steps + 1
        self.T = n_steps * h

    @property
    def t(self):
        return self.h * np.arange(self.N)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.N == other.N and self.h == other.h

    def __hash__(self):
        return hash((self.N, self.h))

    def __repr__(self):
        return f"Grid(T={self.T:g}, h={self.h:g}, N={self.N})"

    def with_horizon(self, T):
        return Grid(T, self.h)

    def locate(self, s):
        """Split ``s >= 0`` as ``(q + r) h`` with integer ``q`` and ``0 <= r < 1``.

        Locations within ``MERGE_RTOL`` of a node are snapped to it (``r = 0``).
        """
        x = s / self.h
        q = int(np.floor(x + MERGE_RTOL))
        r = x - q
        if r < MERGE_RTOL:
            r = 0.0
        return q, r

    def steps_per_unit(self):
        """Number of steps in a unit interval; raises if ``1/h`` is not integral."""
        m = int(round(1.0 / self.h))
        if abs(m * self.h - 1.0) > 1e-9:
            raise ValueError(f"step h={self.h} must divide the unit delay interval")
        return m


def _as_left(values, left):
    values = np.asarray(values, dtype=float)
    if left is None:
        return values, values.copy()
    left = np.asarray(left, dtype=float)
    if left.shape != values.shape:
        raise ValueError("left limits must have the same shape as the values")
    return values, left


def _frozen(a):
    a = np.array(a, dtype=a.dtype if np.iscomplexobj(a) else float)
    a.setflags(write=False)
    return a


class GridFunction:
    """Matrix or vector valued function sampled on a grid, with left limits.

    ``values[i]`` is the (right-continuous) value at ``t_i`` and ``left[i]``
    the left limit there; ``left[0]`` is set equal to ``values[0]``.
    """

    def __init__(self, grid, values, left=None):
        values, left = _as_left(values, left)
        if values.shape[0] != grid.N:
            raise ValueError(f"expected {grid.N} samples, got {values.shape[0]}")
        left = left.copy()
        left[0] = values[0]
        self.grid = grid
        self.values = _frozen(values)
        self.left = _frozen(left)

    @property
    def shape(self):
        return self.values.shape[1:]

    @property
    def t(self):
        return self.grid.t

    def __call__(self, tau, side="right"):
        return interp(self.values, self.left, self.grid.h, tau, side)

    def sup_norm(self):
        if self.values.size == 0:
            return 0.0
        v = matnorm(self.values) if self.values.ndim >= 2 else np.abs(self.values)
        w = matnorm(self.left) if self.left.ndim >= 2 else np.abs(self.left)
        return float(max(np.max(v), np.max(w)))

    def integral(self):
        """Cumulative integral ``t -> int_0^t f`` (continuous)."""
        return GridFunction(self.grid, cumtrapz(self.values, self.left, self.grid.h))

    def __add__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values + other.values, self.left + other.left)
        return GridFunction(self.grid, self.values + other, self.left + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values - other.values, self.left - other.left)
        return GridFunction(self.grid, self.values - other, self.left - other)

    def __neg__(self):
        return GridFunction(self.grid, -self.values, -self.left)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c, self.left * c)

    __rmul__ = __mul__

    def __repr__(self):
        return f"GridFunction({self.grid!r}, shape={self.shape})"


# ---------------------------------------------------------------------------
# low level array helpers (leading axis = grid index)
# ---------------------------------------------------------------------------

def cumtrapz(values, left, h):
    """Cumulative trapezoid integral using right values and left limits per cell."""
    values = np.asarray(values)
    out = np.zeros_like(values)
    if values.shape[0] > 1:
        cells = 0.5 * h * (values[:-1] + left[1:])
        out[1:] = np.cumsum(cells, axis=0)
    return out


def trapz(values, left, h):
    """Integral over the whole grid."""
    values = np.asarray(values)
    if values.shape[0] < 2:
        return np.zeros_like(values[0])
    return 0.5 * h * (values[:-1] + left[1:]).sum(axis=0)


def interp(values, left, h, tau, side="right"):
    """Evaluate a sampled function at arbitrary points ``tau`` in ``[0, T]``.

    Between nodes the function is linear from ``values[L]`` to ``left[U]``.
    At nodes ``side`` selects the right value or the left limit.  Points
    outside the grid raise ``ValueError``.
    """
    values = np.asarray(values)
    tau = np.asarray(tau, dtype=float)
    scalar = tau.ndim == 0
    tau = np.atleast_1d(tau)
    N = values.shape[0]
    x = tau / h
    k = np.floor(x + MERGE_RTOL).astype(int)
    r = x - k
    on_node = r < MERGE_RTOL
    if np.any(k < 0) or np.any(k > N - 1) or np.any((k == N - 1) & ~on_node):
        raise ValueError("evaluation point outside the grid")
    out = np.empty((tau.size,) + values.shape[1:], dtype=values.dtype)
    node_src = values if side == "right" else left
    out[on_node] = node_src[k[on_node]]
    off = ~on_node
    if np.any(off):
        kk = k[off]
        rr = r[off].reshape((-1,) + (1,) * (values.ndim - 1))
        out[off] = (1.0 - rr) * values[kk] + rr * left[kk + 1]
    return out[0] if scalar else out


def shift(values, left, h, s):
    """Delay a sampled function: ``g(t) = f(t - s)`` for ``t >= s``, else 0.

    Returns right values and left limits of ``g`` on the same grid.  Jumps of
    ``f`` land on nodes when ``s`` is a multiple of ``h``; otherwise the shifted
    function is linearly interpolated.
    """
    values = np.asarray(values)
    N = values.shape[0]
    gv = np.zeros_like(values)
    gl = np.zeros_like(values)
    x = s / h
    q = int(np.floor(x + MERGE_RTOL))
    r = x - q
    if q >= N:
        return gv, gl
    if r < MERGE_RTOL:
        gv[q:] = values[: N - q]
        gl[q + 1:] = left[1: N - q]
        # left limit at t = s is zero (the shifted function starts there)
        return gv, gl
    # t_i - s lies strictly between nodes i-q-1 and i-q for i >= q+1
    if q + 1 >= N:
        return gv, gl
    seg = (1.0 - r) * left[1: N - q] + r * values[: N - q - 1]
    gv[q + 1:] = seg
    gl[q + 1:] = seg
    return gv, gl


def _conv_full(a, b):
    """Discrete causal convolution ``out[i] = sum_{j<=i} a[j] @ b[i-j]``.

    ``a`` has shape (N, m, p) and ``b`` shape (N, p, c); the result has shape
    (N, m, c).  Uses FFT for long grids and direct summation for short ones.
    """
    N = a.shape[0]
    if N <= 64:
        out = np.zeros((N, a.shape[1], b.shape[2]), dtype=np.result_type(a, b))
        for i in range(N):
            out[i] = np.einsum("jmp,jpc->mc", a[: i + 1], b[i::-1])
        return out
    L = sfft.next_fast_len(2 * N - 1, real=True)
    A = sfft.rfft(a, L, axis=0)
    B = sfft.rfft(b, L, axis=0)
    return sfft.irfft(np.einsum("kmp,kpc->kmc", A, B), L, axis=0)[:N]


def density_conv(av, al, bv, bl, h):
    """Trapezoid approximation of ``t -> int_0^t a(s) b(t-s) ds`` on the grid.

    Both factors may jump at nodes.  On the cell ``[t_j, t_{j+1}]`` the
    integrand is evaluated at ``s = t_j^+`` (``a`` right value, ``b`` left
    limit at ``t_i - t_j``) and at ``s = t_{j+1}^-`` (``a`` left limit, ``b``
    right value).  The result is continuous in ``t``.
    """
    c1 = _conv_full(av, bl)
    c2 = _conv_full(al, bv)
    # remove the j = i term of c1 and the j = 0 term of c2
    c1 -= np.einsum("imp,pc->imc", av, bl[0])
    c2 -= np.einsum("mp,ipc->imc", al[0], bv)
    return 0.5 * h * (c1 + c2)


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

class HalfLineMeasure:
    """Matrix-valued Borel measure on ``[0, T]``: atoms plus a sampled density.

    Parameters
    ----------
    grid : Grid
        Discretisation of ``[0, T]`` for the density.
    dims : tuple of int
        Matrix shape ``(m, n)`` of the values.
    locs, weights : sequences
        Atom locations in ``[0, T]`` and matching ``m x n`` weights.  Atoms are
        sorted, locations closer than ``h * 1e-6`` are merged and zero weights
        dropped.  Atoms beyond the horizon are discarded (truncation).
    density, density_left : array_like, optional
        Samples of shape ``(N, m, n)`` of the absolutely continuous part (right
        values and left limits).
    """

    def __init__(self, grid, dims, locs=(), weights=(), density=None, density_left=None):
        self.grid = grid
        self.dims = (int(dims[0]), int(dims[1]))
        m, n = self.dims
        locs = np.asarray(locs, dtype=float).reshape(-1)
        weights = np.asarray(weights, dtype=float).reshape((-1, m, n))
        if locs.size != weights.shape[0]:
            raise ValueError("number of atom locations and weights differ")
        if np.any(locs < -MERGE_RTOL * grid.h):
            raise ValueError("atoms must lie in [0, T]")
        locs = np.maximum(locs, 0.0)
        self.locs, self.weights = _normalize_atoms(locs, weights, grid)
        if density is None:
            dv = np.zeros((grid.N, m, n))
            dl = dv.copy()
        else:
            dv, dl = _as_left(np.asarray(density, dtype=float).reshape((grid.N, m, n)),
                              None if density_left is None
                              else np.asarray(density_left, dtype=float).reshape((grid.N, m, n)))
            dl = dl.copy()
            dl[0] = dv[0]
        self.density = _frozen(dv)
        self.density_left = _frozen(dl)

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, grid, dims=(1, 1)):
        return cls(grid, dims)

    @classmethod
    def dirac(cls, grid, loc, weight=1.0):
        """Single atom ``weight * delta_loc``; scalar weights give a 1x1 measure."""
        w = np.atleast_2d(np.asarray(weight, dtype=float))
        return cls(grid, w.shape, [loc], [w])

    @classmethod
    def from_atoms(cls, grid, atoms, dims=None):
        """Build from a list of ``(location, weight)`` pairs."""
        atoms = list(atoms)
        if dims is None:
            if not atoms:
                dims = (1, 1)
            else:
                dims = np.atleast_2d(np.asarray(atoms[0][1], dtype=float)).shape
        locs = [a[0] for a in atoms]
        ws = [np.atleast_2d(np.asarray(a[1], dtype=float)) for a in atoms]
        return cls(grid, dims, locs, ws)

    @classmethod
    def from_density(cls, grid, fn, support=None, dims=None):
        """Absolutely continuous measure with density ``fn(t)`` on ``[0, support]``.

        ``fn`` is evaluated at the grid nodes and must return an array of
        shape ``(m, n)`` (or a scalar) for each node.  Outside the support the
        density is zero; the cut at ``support`` is a jump on a grid node.
        """
        t = grid.t
        end = grid.T if support is None else min(float(support), grid.T)
        vals = np.array([np.atleast_2d(np.asarray(fn(x), dtype=float)) for x in t])
        if dims is None:
            dims = vals.shape[1:]
        vals = vals.reshape((grid.N,) + tuple(dims))
        left = vals.copy()
        k_end, r_end = grid.locate(end)
        inside = t <= end + MERGE_RTOL * grid.h
        right = np.where(inside[:, None, None], vals, 0.0)
        if r_end == 0.0 and k_end < grid.N - 1:
            right[k_end] = 0.0
            left[k_end + 1:] = 0.0
        else:
            left = np.where(inside[:, None, None], left, 0.0)
        return cls(grid, dims, density=right, density_left=left)

    # -- basic structure ----------------------------------------------------
    @property
    def T(self):
        return self.grid.T

    @property
    def h(self):
        return self.grid.h

    @property
    def atoms(self):
        return list(zip(self.locs.tolist(), [w.copy() for w in self.weights]))

    def has_density(self):
        return bool(np.any(self.density) or np.any(self.density_left))

    def is_pure_atomic(self):
        return not self.has_density()

    def atom_at(self, loc):
        """Weight of the atom at ``loc`` (zero matrix if none)."""
        tol = MERGE_RTOL * self.h
        idx = np.nonzero(np.abs(self.locs - loc) <= tol)[0]
        if idx.size:
            return self.weights[idx[0]].copy()
        return np.zeros(self.dims)

    def atom_at_zero(self):
        return self.atom_at(0.0)

    def copy_with(self, locs=None, weights=None, density=None, density_left=None, grid=None):
        g = self.grid if grid is None else grid
        return HalfLineMeasure(
            g, self.dims,
            self.locs if locs is None else locs,
            self.weights if weights is None else weights,
            self.density if density is None else density,
            self.density_left if density_left is None else density_left,
        )

    def atomic_part(self):
        return HalfLineMeasure(self.grid, self.dims, self.locs, self.weights)

    def density_part(self):
        return HalfLineMeasure(self.grid, self.dims, density=self.density,
                               density_left=self.density_left)

    def without_atom_at_zero(self):
        keep = self.locs > MERGE_RTOL * self.h
        return self.copy_with(locs=self.locs[keep], weights=self.weights[keep])

    def density_function(self):
        return GridFunction(self.grid, self.density, self.density_left)

    def total_mass(self):
        """``mu([0, T])``."""
        return self.weights.sum(axis=0) + trapz(self.density, self.density_left, self.h)

    def cumulative(self):
        """NBV values ``F(t_i) = mu([0, t_i])`` and left limits ``mu([0, t_i))``."""
        grid = self.grid
        F = cumtrapz(self.density, self.density_left, grid.h)
        Fl = F.copy()
        for s, w in zip(self.locs, self.weights):
            q, r = grid.locate(s)
            if r == 0.0:
                F[q:] += w
                Fl[q + 1:] += w
            else:
                F[q + 1:] += w
                Fl[q + 1:] += w
        return F, Fl

    def with_horizon(self, T):
        """Restrict (or zero-extend) the measure to the horizon ``T``."""
        g = self.grid.with_horizon(T)
        m, n = self.dims
        dv = np.zeros((g.N, m, n))
        dl = np.zeros((g.N, m, n))
        k = min(g.N, self.grid.N)
        dv[:k] = self.density[:k]
        dl[:k] = self.density_left[:k]
        if g.N > self.grid.N:
            # density is zero beyond the old horizon: jump on the old end node
            dv[self.grid.N - 1] = 0.0
        keep = self.locs <= g.T + MERGE_RTOL * g.h
        return HalfLineMeasure(g, self.dims, self.locs[keep], self.weights[keep], dv, dl)

    # -- arithmetic ---------------------------------------------------------
    def _check_same(self, other):
        if self.grid != other.grid:
            raise ValueError("horizon/grid mismatch between measures")
        if self.dims != other.dims:
            raise ValueError("dimension mismatch between measures")

    def __add__(self, other):
        self._check_same(other)
        return HalfLineMeasure(
            self.grid, self.dims,
            np.concatenate([self.locs, other.locs]),
            np.concatenate([self.weights, other.weights]),
            self.density + other.density, self.density_left + other.density_left)

    def __neg__(self):
        return self.copy_with(weights=-self.weights, density=-self.density,
                              density_left=-self.density_left)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return self.copy_with(weights=self.weights * c, density=self.density * c,
                              density_left=self.density_left * c)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def lmul(self, A):
        """Left multiplication ``A mu`` by a constant matrix."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return HalfLineMeasure(self.grid, (A.shape[0], self.dims[1]), self.locs,
                               np.einsum("ij,kjl->kil", A, self.weights),
                               np.einsum("ij,kjl->kil", A, self.density),
                               np.einsum("ij,kjl->kil", A, self.density_left))

    def rmul(self, A):
        """Right multiplication ``mu A`` by a constant matrix."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return HalfLineMeasure(self.grid, (self.dims[0], A.shape[1]), self.locs,
                               np.einsum("kij,jl->kil", self.weights, A),
                               np.einsum("kij,jl->kil", self.density, A),
                               np.einsum("kij,jl->kil", self.density_left, A))

    def row(self, i):
        return HalfLineMeasure(self.grid, (1, self.dims[1]), self.locs,
                               self.weights[:, i:i + 1, :], self.density[:, i:i + 1, :],
                               self.density_left[:, i:i + 1, :])

    def entry(self, i, j):
        return HalfLineMeasure(self.grid, (1, 1), self.locs,
                               self.weights[:, i:i + 1, j:j + 1],
                               self.density[:, i:i + 1, j:j + 1],
                               self.density_left[:, i:i + 1, j:j + 1])

    def rescaled(self, gamma):
        """Exponentially weighted measure ``e^{-gamma t} mu(dt)``."""
        ew = np.exp(-gamma * self.locs)[:, None, None]
        et = np.exp(-gamma * self.grid.t)[:, None, None]
        return self.copy_with(weights=self.weights * ew, density=self.density * et,
                              density_left=self.density_left * et)

    def __repr__(self):
        return (f"HalfLineMeasure(dims={self.dims}, atoms={len(self.locs)}, "
                f"density={'yes' if self.has_density() else 'no'}, T={self.T:g}, h={self.h:g})")

    # -- serialisation ------------------------------------------------------
    def to_dict(self):
        d = {
            "dims": list(self.dims),
            "atoms": [{"t": float(s), "w": w.tolist()} for s, w in zip(self.locs, self.weights)],
            "density": {"h": self.h, "T": self.T, "samples": self.density.tolist()},
        }
        if not np.array_equal(self.density, self.density_left):
            d["density"]["left_samples"] = self.density_left.tolist()
        return d

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d, grid=None):
        dims = tuple(d["dims"])
        dens = d.get("density")
        if grid is None:
            if dens is None:
                raise ValueError("measure without density block needs an explicit grid")
            grid = Grid(dens["T"], dens["h"])
        locs = [a["t"] for a in d.get("atoms", [])]
        ws = [np.asarray(a["w"], dtype=float).reshape(dims) for a in d.get("atoms", [])]
        dv = dl = None
        if dens is not None and dens.get("samples") is not None:
            dv = np.asarray(dens["samples"], dtype=float)
            src = Grid(dens["T"], dens["h"])
            dl = np.asarray(dens.get("left_samples", dens["samples"]), dtype=float)
            if src != grid:
                dv, dl = _resample(dv, dl, src, grid)
        return cls(grid, dims, locs, ws, dv, dl)

    @classmethod
    def from_json(cls, text, grid=None):
        return cls.from_dict(json.loads(text), grid)


def _resample(dv, dl, src, dst):
    """Move density samples between grids with the same step (pad or cut)."""
    if abs(src.h - dst.h) > 1e-12 * dst.h:
        t = dst.t
        inside = t <= src.T
        outv = np.zeros((dst.N,) + dv.shape[1:])
        outl = np.zeros_like(outv)
        outv[inside] = interp(dv, dl, src.h, t[inside])
        outl[inside] = interp(dv, dl, src.h, t[inside], side="left")
        return outv, outl
    k = min(src.N, dst.N)
    outv = np.zeros((dst.N,) + dv.shape[1:])
    outl = np.zeros_like(outv)
    outv[:k] = dv[:k]
    outl[:k] = dl[:k]
    if dst.N > src.N:
        outv[src.N - 1] = 0.0
    return outv, outl


def _normalize_atoms(locs, weights, grid):
    """Sort atoms, merge locations closer than ``MERGE_RTOL * h`` to their
    predecessor, drop zero weights and atoms beyond the horizon."""
    m, n = weights.shape[1:]
    empty = (_frozen(np.zeros(0)), _frozen(np.zeros((0, m, n))))
    if locs.size == 0:
        return empty
    order = np.argsort(locs, kind="stable")
    locs = locs[order]
    weights = weights[order]
    tol = MERGE_RTOL * grid.h
    starts = np.concatenate([[0], np.nonzero(np.diff(locs) > tol)[0] + 1])
    ls = locs[starts]
    ws = np.add.reduceat(weights, starts, axis=0)
    keep = np.any(ws.reshape(len(ls), -1) != 0.0, axis=1) & (ls <= grid.T + tol)
    if not np.any(keep):
        return empty
    return _frozen(np.minimum(ls[keep], grid.T)), _frozen(ws[keep])


def _as_gridfunction(f, grid):
    if isinstance(f, GridFunction):
        if f.grid != grid:
            raise ValueError("grid mismatch")
        return f
    return GridFunction(grid, f)


def _as_matrix_samples(v):
    """Promote (N,) or (N, k) samples to (N, k, 1) for matrix arithmetic."""
    if v.ndim == 1:
        return v[:, None, None], "scalar"
    if v.ndim == 2:
        return v[:, :, None], "vector"
    return v, "matrix"


def _restore(v, kind):
    if kind == "scalar":
        return v[:, 0, 0]
    if kind == "vector":
        return v[:, :, 0]
    return v


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def tv_norm(mu):
    """Total variation ``sum_k |a_k| + int |b|`` (max-row-sum matrix norm)."""
    atoms = float(np.sum(matnorm(mu.weights))) if len(mu.locs) else 0.0
    nv = matnorm(mu.density)
    nl = matnorm(mu.density_left)
    return atoms + float(trapz(nv, nl, mu.h))


def convolve(mu, nu):
    """Convolution ``mu * nu`` of two measures, truncated to the common horizon.

    Atom pairs combine exactly (locations add, weights multiply); atom-density
    cross terms shift the density; the density-density term is computed by
    trapezoid quadrature.
    """
    if mu.grid != nu.grid:
        raise ValueError("horizon/grid mismatch between measures")
    if mu.dims[1] != nu.dims[0]:
        raise ValueError(f"inner dimensions differ: {mu.dims} vs {nu.dims}")
    grid = mu.grid
    h = grid.h
    dims = (mu.dims[0], nu.dims[1])
    # atoms
    if len(mu.locs) and len(nu.locs):
        L = (mu.locs[:, None] + nu.locs[None, :]).reshape(-1)
        W = np.einsum("kij,ljm->klim", mu.weights, nu.weights).reshape((-1,) + dims)
        keep = L <= grid.T + MERGE_RTOL * h
        L, W = L[keep], W[keep]
    else:
        L, W = np.zeros(0), np.zeros((0,) + dims)
    dv = np.zeros((grid.N,) + dims)
    dl = np.zeros_like(dv)
    if nu.has_density():
        for s, a in zip(mu.locs, mu.weights):
            sv, sl = shift(nu.density, nu.density_left, h, s)
            dv += np.einsum("ij,kjl->kil", a, sv)
            dl += np.einsum("ij,kjl->kil", a, sl)
    if mu.has_density():
        for s, a in zip(nu.locs, nu.weights):
            sv, sl = shift(mu.density, mu.density_left, h, s)
            dv += np.einsum("kij,jl->kil", sv, a)
            dl += np.einsum("kij,jl->kil", sl, a)
    if mu.has_density() and nu.has_density():
        c = density_conv(mu.density, mu.density_left, nu.density, nu.density_left, h)
        dv += c
        dl += c
    return HalfLineMeasure(grid, dims, L, W, dv, dl)


def convolve_fn(mu, f):
    """Half-line convolution ``(mu * f)(t) = int_[0,t] mu(ds) f(t - s)``.

    Parameters
    ----------
    mu : HalfLineMeasure
        ``m x p`` measure.
    f : GridFunction or array
        Samples of shape ``(N,)``, ``(N, p)`` or ``(N, p, c)`` on the grid of `mu`.

    Returns
    -------
    GridFunction
        Right values and left limits of the convolution.
    """
    grid = mu.grid
    f = _as_gridfunction(f, grid)
    fv, kind = _as_matrix_samples(f.values)
    fl, _ = _as_matrix_samples(f.left)
    if fv.shape[1] != mu.dims[1]:
        raise ValueError(f"dimension mismatch: measure {mu.dims}, function {f.shape}")
    h = grid.h
    out = np.zeros((grid.N, mu.dims[0], fv.shape[2]))
    outl = np.zeros_like(out)
    for s, a in zip(mu.locs, mu.weights):
        sv, sl = shift(fv, fl, h, s)
        out += np.einsum("ij,kjl->kil", a, sv)
        outl += np.einsum("ij,kjl->kil", a, sl)
    if mu.has_density():
        c = density_conv(mu.density, mu.density_left, fv, fl, h)
        out += c
        outl += c
    if kind == "scalar" and mu.dims[0] == 1:
        return GridFunction(grid, out[:, 0, 0], outl[:, 0, 0])
    if kind in ("scalar", "vector"):
        return GridFunction(grid, out[:, :, 0], outl[:, :, 0])
    return GridFunction(grid, out, outl)


def laplace(mu, z):
    """Laplace-Stieltjes transform ``sum_k a_k e^{-z s_k} + int e^{-zs} b(s) ds``.

    `z` may be a scalar or an array; the result has shape ``z.shape + (m, n)``.
    """
    z = np.asarray(z, dtype=complex)
    zf = z.reshape(-1)
    out = np.zeros((zf.size,) + mu.dims, dtype=complex)
    if len(mu.locs):
        E = np.exp(-np.outer(zf, mu.locs))
        out += np.einsum("zk,kij->zij", E, mu.weights)
    if mu.has_density():
        t = mu.grid.t
        E = np.exp(-np.outer(zf, t))
        h = mu.h
        cells = (np.einsum("zk,kij->zkij", E[:, :-1], mu.density[:-1])
                 + np.einsum("zk,kij->zkij", E[:, 1:], mu.density_left[1:]))
        out += 0.5 * h * cells.sum(axis=1)
    return out.reshape(z.shape + mu.dims)


class NBVFunction:
    """Normalized bounded-variation function ``f(t) = mu([0, t])``, ``f(0^-) = 0``.

    The function is a view of its measure; evaluation at grid nodes uses the
    trapezoid-integrated density plus the exact atom sum.
    """

    def __init__(self, measure):
        self.measure = measure

    @property
    def grid(self):
        return self.measure.grid

    @property
    def dims(self):
        return self.measure.dims

    def values(self):
        """Right values and left limits at the grid nodes."""
        return self.measure.cumulative()

    def as_gridfunction(self):
        v, l = self.measure.cumulative()
        return GridFunction(self.grid, v, l)

    def __call__(self, t):
        """Value ``mu([0, t])``; ``t`` beyond the horizon returns the total mass."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        mu = self.measure
        tt = np.clip(t, 0.0, mu.T)
        F = cumtrapz(mu.density, mu.density_left, mu.h)
        out = interp(F, F, mu.h, tt)
        tol = MERGE_RTOL * mu.h
        for s, w in zip(mu.locs, mu.weights):
            out = out + (t[:, None, None] >= s - tol) * w
        out = np.where((t < -tol)[:, None, None], 0.0, out)
        return out[0] if scalar else out

    def total_variation(self):
        return tv_norm(self.measure)

    def sup_norm(self):
        v, l = self.measure.cumulative()
        return float(max(np.max(matnorm(v), initial=0.0), np.max(matnorm(l), initial=0.0)))

    def __repr__(self):
        return f"NBVFunction({self.measure!r})"


def nbv_from_measure(mu):
    return NBVFunction(mu)


def measure_from_nbv(f):
    return f.measure


def pairing(y_dual, y):
    """Pairing ``<zeta, phi> = int_[0,1] zeta(d sigma) phi(-sigma)``.

    Parameters
    ----------
    y_dual : NBVFunction or HalfLineMeasure
        Functional on ``[0, 1]`` with values of shape ``(m, n)``.
    y : HistoryFunction
        State on ``[-1, 0]`` with values in ``R^n`` (or ``R^{n x c}``).

    Returns
    -------
    ndarray
        ``m``-vector (or ``m x c`` matrix).
    """
    mu = y_dual.measure if isinstance(y_dual, NBVFunction) else y_dual
    vals = np.asarray(y.values)
    left = np.asarray(y.left)
    at0 = np.asarray(y.at_zero)
    M = vals.shape[0] - 1
    h = 1.0 / M
    if abs(h - mu.h) > 1e-12:
        raise ValueError("functional and history use different steps")
    if mu.dims[1] != at0.shape[0]:
        raise ValueError(f"dimension mismatch: functional {mu.dims}, history {at0.shape}")
    # reflect the history, g(sigma) = y(-sigma) on [0, 1]: right values of g
    # are left limits of y and vice versa.  The density integral near
    # sigma = 0 therefore sees y(0^-), while atoms at 0 see the point value.
    g_right = left[::-1]
    g_left = vals[::-1]
    out = np.zeros((mu.dims[0],) + at0.shape[1:])
    for s, a in zip(mu.locs, mu.weights):
        if s > 1.0 + MERGE_RTOL * h:
            continue
        if s <= MERGE_RTOL * h:
            out = out + a @ at0
        else:
            out = out + a @ y(-s)
    if mu.has_density():
        K = min(M + 1, mu.grid.N)
        bv = mu.density[:K]
        bl = mu.density_left[:K]
        cells = (np.einsum("kij,kj...->i...", bv[:-1], g_right[: K - 1])
                 + np.einsum("kij,kj...->i...", bl[1:K], g_left[1:K]))
        out = out + 0.5 * h * cells
    return out
