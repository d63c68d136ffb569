"""Half-plane characteristic conditions.

Characteristic determinants are scanned on the boundary of the half disk
``{Re z >= 0, |z| <= R}``.  The argument principle counts zeros inside; the
minimum modulus on the boundary together with an analytic far-field bound for
``|z| >= R`` decides whether the infimum over the closed right half-plane is
positive.  Zeros found inside are refined by Newton's method and reported as
witnesses.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .measures import HalfLineMeasure, laplace, matnorm, tv_norm

DEFAULT_SAMPLES = 4096
THRESHOLD = 1e-6


class InconclusiveScan(RuntimeError):
    """Raised when a zero on (or extremely near) the imaginary axis is suspected."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan


@dataclass
class HalfPlaneScan:
    """Result of a half-disk boundary scan."""

    radius: float
    samples: int
    min_modulus: float
    min_location: complex
    winding: int
    far_field_ok: bool
    far_field_bound: float
    witness_root: complex = None
    positive_infimum: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self, condition=""):
        out = {
            "condition": condition,
            "min_modulus": float(self.min_modulus),
            "winding": int(self.winding),
            "radius": float(self.radius),
            "samples": int(self.samples),
            "far_field_ok": bool(self.far_field_ok),
        }
        if self.witness_root is not None:
            out["witness_root"] = [float(self.witness_root.real), float(self.witness_root.imag)]
        return out


# ---------------------------------------------------------------------------
# determinants
# ---------------------------------------------------------------------------

def _det(A):
    A = np.asarray(A)
    if A.shape[-1] == 1:
        return A[..., 0, 0]
    return np.linalg.det(A)


def det_I_minus(mu, z):
    """``det(I - mu^(z))`` with ``mu^`` the Laplace transform of `mu`."""
    z = np.asarray(z, dtype=complex)
    n = mu.dims[0]
    return _det(np.eye(n) - laplace(mu, z))


def det_char(zeta, z):
    """``det(z I - int e^{-z s} d zeta(s))``."""
    z = np.asarray(z, dtype=complex)
    n = zeta.dims[0]
    return _det(z[..., None, None] * np.eye(n) - laplace(zeta, z))


def det_neutral(eta, zeta, z):
    """``det(z (I - eta^(z)) - zeta^(z))``: characteristic function of the neutral equation."""
    z = np.asarray(z, dtype=complex)
    n = zeta.dims[0]
    A = z[..., None, None] * (np.eye(n) - laplace(eta, z)) - laplace(zeta, z)
    return _det(A)


# ---------------------------------------------------------------------------
# far-field bounds
# ---------------------------------------------------------------------------

def _density_transform_bound(mu, R):
    """Upper bound of ``|int e^{-z s} b(s) ds|`` for ``Re z >= 0``, ``|z| >= R``.

    Integration by parts gives ``(|b(0)| + |b(T)| + TV(b)) / |z|``; the bound is
    also capped by ``int |b|``.
    """
    if not mu.has_density():
        return 0.0
    b = np.asarray(mu.density)
    bl = np.asarray(mu.density_left)
    tv = float(np.sum(matnorm(b[1:] - bl[1:]))) + float(np.sum(matnorm(bl[1:] - b[:-1])))
    edge = float(matnorm(b[0])) + float(matnorm(bl[-1]))
    l1 = float(tv_norm(mu.density_part()))
    return min(l1, (tv + edge) / R)


def _atom_mass(mu):
    if len(mu.locs) == 0:
        return 0.0
    return float(np.sum(matnorm(mu.weights)))


def far_field_I_minus(mu, R):
    """Lower bound of ``|det(I - mu^(z))|`` for ``Re z >= 0, |z| >= R`` (0 if none)."""
    a = _atom_mass(mu) + _density_transform_bound(mu, R)
    if a >= 1.0:
        return 0.0
    return (1.0 - a) ** mu.dims[0]


def far_field_char(zeta, R):
    """Lower bound of ``|det(z I - zeta^(z))|`` for ``Re z >= 0, |z| >= R``."""
    tv = tv_norm(zeta)
    if R <= tv:
        return 0.0
    return (R - tv) ** zeta.dims[0]


def radius_I_minus(mu):
    """Radius for ``det(I - mu^)`` scans: ``R >= 2(1 + TV)`` and large enough for the far field."""
    R = 2.0 * (1.0 + tv_norm(mu))
    atoms = _atom_mass(mu)
    if atoms < 1.0 and mu.has_density():
        for _ in range(60):
            if _density_transform_bound(mu, R) <= 0.5 * (1.0 - atoms):
                break
            R *= 2.0
    return R


# ---------------------------------------------------------------------------
# scanning
# ---------------------------------------------------------------------------

def _contour(R, samples):
    """Counter-clockwise boundary of the half disk: down the axis, then the arc."""
    n_axis = samples // 2
    n_arc = samples - n_axis
    axis = 1j * np.linspace(R, -R, n_axis, endpoint=False)
    ang = np.linspace(-np.pi / 2, np.pi / 2, n_arc + 1)
    arc = R * np.exp(1j * ang)
    return np.concatenate([axis, arc])


def _winding(vals):
    ph = np.unwrap(np.angle(vals))
    return (ph[-1] - ph[0]) / (2 * np.pi)


def _newton(f, z0, tol=1e-14, maxit=100):
    with np.errstate(over="ignore", invalid="ignore"):
        return _newton_iter(f, z0, tol, maxit)


def _newton_iter(f, z0, tol, maxit):
    z = complex(z0)
    for _ in range(maxit):
        fz = complex(f(np.array(z)))
        dz = 1e-7 * max(1.0, abs(z))
        df = (complex(f(np.array(z + dz))) - complex(f(np.array(z - dz)))) / (2 * dz)
        if df == 0 or not np.isfinite(df) or not np.isfinite(fz):
            return None
        step = fz / df
        z -= step
        if abs(step) < tol * max(1.0, abs(z)):
            return z
    return z if abs(complex(f(np.array(z)))) < 1e-10 else None


def find_root(det_fn, R, grid_points=80):
    """Locate a zero in the half disk: coarse minimum search followed by Newton.

    Returns the root with the largest real part (ties broken by smallest
    ``|Im z|``) among the converged candidates, or ``None``.
    """
    xs = np.linspace(0.0, R, grid_points)
    ys = np.linspace(-R, R, 2 * grid_points)
    X, Y = np.meshgrid(xs, ys)
    Z = X + 1j * Y
    inside = np.abs(Z) <= R
    F = np.full(Z.shape, np.inf)
    F[inside] = np.abs(det_fn(Z[inside]))
    # local minima of |det| on the sampled grid
    cand = []
    for i in range(1, Z.shape[0] - 1):
        for j in range(0, Z.shape[1] - 1):
            v = F[i, j]
            if not np.isfinite(v):
                continue
            nb = F[i - 1:i + 2, max(j - 1, 0):j + 2]
            if v <= nb.min():
                cand.append((v, Z[i, j]))
    cand.sort(key=lambda c: c[0])
    roots = []
    for _, z0 in cand[:40]:
        r = _newton(det_fn, z0)
        if r is None or r.real < -1e-9 or abs(r) > 1.5 * R:
            continue
        if abs(complex(det_fn(np.array(r)))) > 1e-8:
            continue
        if all(abs(r - q) > 1e-8 for q in roots):
            roots.append(r)
    if not roots:
        return None
    roots.sort(key=lambda r: (-round(r.real, 10), abs(r.imag)))
    return roots[0]


def _boundary_minimum(det_fn, z, mod, n_candidates=12):
    """Refine the smallest local minima of ``|det_fn|`` along the sampled contour.

    A zero lying exactly on the contour leaves a sampled modulus of order
    ``|det'| * spacing``; a bounded Brent search between the neighbouring
    samples resolves it down to roundoff.
    """
    M = len(z)
    prev, nxt = np.roll(mod, 1), np.roll(mod, -1)
    idx = np.flatnonzero((mod <= prev) & (mod <= nxt))
    idx = idx[np.argsort(mod[idx])][:n_candidates]
    best, best_loc = float(mod[idx[0]]), complex(z[idx[0]])
    for k in idx:
        a, b = z[(k - 1) % M], z[(k + 1) % M]
        if abs(b - a) > 4 * abs(z[1] - z[0]) + 1e-12:
            continue  # wrap-around between arc end and axis start
        seg = lambda u: float(abs(complex(det_fn(np.array(a + u * (b - a))))))
        res = minimize_scalar(seg, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-13})
        if res.fun < best:
            best, best_loc = float(res.fun), complex(a + res.x * (b - a))
    return best, best_loc


def halfplane_check(det_fn, R, far_field_bound, samples=DEFAULT_SAMPLES, threshold=THRESHOLD,
                    raise_inconclusive=True):
    """Scan ``det_fn`` on the half-disk boundary.

    Parameters
    ----------
    det_fn : callable
        Vectorized analytic function on ``Re z >= 0``.
    R : float
        Radius of the half disk.
    far_field_bound : float
        Certified lower bound of ``|det_fn|`` on ``Re z >= 0, |z| >= R``.
    samples : int
        Boundary samples; the smallest local minima are refined by a scalar search.
    threshold : float
        Minimum boundary modulus regarded as bounded away from zero.

    Returns
    -------
    HalfPlaneScan

    Raises
    ------
    InconclusiveScan
        If the winding number is zero but the boundary minimum is below
        `threshold`, or the winding number is not stable under refinement.
    """
    z = _contour(R, samples)
    vals = det_fn(z)
    w1 = _winding(np.append(vals, vals[0]))
    z2 = _contour(R, 2 * samples)
    vals2 = det_fn(z2)
    w2 = _winding(np.append(vals2, vals2[0]))
    min_mod, min_loc = _boundary_minimum(det_fn, z2, np.abs(vals2))
    scan = HalfPlaneScan(radius=R, samples=2 * samples, min_modulus=min_mod, min_location=complex(min_loc),
                         winding=int(round(w2)), far_field_ok=far_field_bound > threshold,
                         far_field_bound=float(far_field_bound))
    if min_mod < threshold:
        scan.notes.append("zero on or near the boundary suspected")
        if raise_inconclusive:
            raise InconclusiveScan(f"boundary modulus {min_mod:.3e} below threshold {threshold:g}", scan)
        return scan
    if abs(w1 - round(w1)) > 0.05 or abs(w2 - round(w2)) > 0.05 or round(w1) != round(w2):
        scan.notes.append("winding number unstable under refinement")
        if raise_inconclusive:
            raise InconclusiveScan("winding number unstable under boundary refinement", scan)
        return scan
    if scan.winding > 0:
        scan.witness_root = find_root(det_fn, R)
    scan.positive_infimum = scan.winding == 0 and scan.far_field_ok
    return scan


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

def _verdict_from_scan(scan, condition):
    d = scan.to_dict(condition)
    if scan.winding > 0:
        d["verdict"] = "unstable"
    elif scan.positive_infimum:
        d["verdict"] = "stable"
    else:
        d["verdict"] = "inconclusive"
    return d


def _inconclusive(exc, condition, note):
    d = exc.scan.to_dict(condition) if exc.scan is not None else {"condition": condition}
    d["verdict"] = "inconclusive"
    d["note"] = note
    return d


def char_scan(zeta, samples=DEFAULT_SAMPLES, threshold=THRESHOLD, raise_inconclusive=True):
    """Scan ``det(z I - zeta^(z))`` on the half disk of radius ``2(1 + TV)``."""
    R = 2.0 * (1.0 + tv_norm(zeta))
    return halfplane_check(lambda z: det_char(zeta, z), R, far_field_char(zeta, R), samples, threshold,
                           raise_inconclusive)


def I_minus_scan(mu, samples=DEFAULT_SAMPLES, threshold=THRESHOLD, raise_inconclusive=True):
    """Scan ``det(I - mu^(z))``; the radius also secures the far-field bound."""
    R = radius_I_minus(mu)
    return halfplane_check(lambda z: det_I_minus(mu, z), R, far_field_I_minus(mu, R), samples, threshold,
                           raise_inconclusive)


def rfde_sanity_identity(zeta):
    """For the frozen-state projection ``P0 y = y(0) 1``: ``<zeta, y(0) 1> = zeta([0, 1]) y(0)``."""
    from .measures import pairing
    from .semigroup import HistoryFunction

    n = zeta.dims[0]
    rng = np.random.default_rng(0)
    v = rng.normal(size=n)
    one = HistoryFunction(np.tile(v, (zeta.grid.steps_per_unit() + 1, 1)), v)
    lhs = pairing(zeta, one)
    rhs = zeta.total_mass() @ v
    return float(np.max(np.abs(lhs - rhs)))


def rfde_stability_full(zeta, samples=DEFAULT_SAMPLES, threshold=THRESHOLD):
    """Stability verdict for ``x' = <zeta, x_t>``.

    Stable iff the characteristic determinant has no zeros in ``Re z >= 0``.
    A zero on the imaginary axis (e.g. ``zeta = 0``) gives ``'inconclusive'``
    with the note ``'marginal'``.
    """
    if rfde_sanity_identity(zeta) > 1e-10 * max(1.0, tv_norm(zeta)):
        raise AssertionError("pairing with constant histories is inconsistent with the total mass")
    cond = "det(zI - zeta^(z)) != 0 for Re z >= 0"
    try:
        scan = char_scan(zeta, samples, threshold)
    except InconclusiveScan as exc:
        return _inconclusive(exc, cond, "marginal: characteristic zero on or near the imaginary axis")
    return _verdict_from_scan(scan, cond)


def re_stability_verdict(L, samples=DEFAULT_SAMPLES, threshold=THRESHOLD):
    """Verdict for the renewal condition ``inf_{Re z >= 0} |det(I - L^(z))| > 0``."""
    cond = "inf_{Re z >= 0} |det(I - L^(z))| > 0"
    try:
        scan = I_minus_scan(L, samples, threshold)
    except InconclusiveScan as exc:
        return _inconclusive(exc, cond, "boundary zero suspected")
    d = _verdict_from_scan(scan, cond)
    d["assumption"] = "unperturbed shift semigroup bounded (holds by construction)"
    return d


def nfde_stability_verdict(eta, zeta, samples=DEFAULT_SAMPLES, threshold=THRESHOLD):
    """Two-condition verdict for the neutral equation.

    Condition (i): ``det(z I - zeta^(z)) != 0`` on ``Re z >= 0``; condition
    (ii): ``inf |det(I - eta^(z))| > 0`` on ``Re z >= 0``.  Both holding gives
    ``'stable'``.  A zero of the full characteristic function
    ``det(z (I - eta^) - zeta^)`` in the right half disk gives ``'unstable'``
    with a witness; otherwise the verdict is ``'inconclusive'``.
    """
    out = {"conditions": {}}
    try:
        s1 = char_scan(zeta, samples, threshold)
        c1 = _verdict_from_scan(s1, "det(zI - zeta^(z)) != 0 for Re z >= 0")
    except InconclusiveScan as exc:
        c1 = _inconclusive(exc, "det(zI - zeta^(z)) != 0 for Re z >= 0", "marginal")
    try:
        s2 = I_minus_scan(eta, samples, threshold)
        c2 = _verdict_from_scan(s2, "inf_{Re z >= 0} |det(I - eta^(z))| > 0")
    except InconclusiveScan as exc:
        c2 = _inconclusive(exc, "inf_{Re z >= 0} |det(I - eta^(z))| > 0", "boundary zero suspected")
    out["conditions"] = {"i": c1, "ii": c2}
    out["condition"] = "neutral: conditions (i) and (ii)"
    out["min_modulus"] = min(c1.get("min_modulus", 0.0), c2.get("min_modulus", 0.0))
    out["winding"] = c1.get("winding", 0)
    if c1["verdict"] == "stable" and c2["verdict"] == "stable":
        out["verdict"] = "stable"
        return out
    # look for a genuine characteristic root in the right half disk
    R = max(2.0 * (1.0 + tv_norm(zeta)), 2.0 * (1.0 + tv_norm(eta)))
    fn = lambda z: det_neutral(eta, zeta, z)
    try:
        s3 = halfplane_check(fn, R, 0.0, samples, threshold)
        if s3.winding > 0:
            out["verdict"] = "unstable"
            out["winding"] = s3.winding
            if s3.witness_root is not None:
                out["witness_root"] = [s3.witness_root.real, s3.witness_root.imag]
            return out
    except InconclusiveScan:
        pass
    out["verdict"] = "inconclusive"
    return out


# ---------------------------------------------------------------------------
# simulated decay
# ---------------------------------------------------------------------------

def decay_corroborate(S, y, T_long=None):
    """Empirical decay ratio ``sup_{[0.8T, T]} |S(t) y| / sup_{[0, 0.2T]} |S(t) y|``.

    Purely empirical; it never overrides an analytic verdict.

    Returns
    -------
    dict
        ``ratio``, ``early_sup``, ``late_sup`` and ``T``.
    """
    T = S.grid.T if T_long is None else float(T_long)
    if T > S.grid.T + 1e-12:
        raise ValueError("T_long exceeds the semigroup horizon")
    orb = S.orbit(y)
    h = S.grid.h
    nT = int(round(T / h))
    n_early = int(round(0.2 * T / h))
    n_late = int(round(0.8 * T / h))
    if hasattr(orb, "ext_v"):
        M = orb.M
        mags = np.abs(orb.ext_v).reshape(orb.ext_v.shape[0], -1).max(axis=1)
        # the state at t covers ext indices [t, t + M]
        early = float(mags[: n_early + M + 1].max())
        late = float(mags[n_late: nT + M + 1].max())
    else:
        norms = np.array([S.norm(orb.state(i * h)) for i in range(nT + 1)])
        early = float(norms[: n_early + 1].max())
        late = float(norms[n_late:].max())
    ratio = late / early if early > 0 else 0.0
    return {"ratio": ratio, "early_sup": early, "late_sup": late, "T": T}


def as_measure(obj):
    """Accept a HalfLineMeasure or an object carrying one in ``.zeta``/``.measure``."""
    if isinstance(obj, HalfLineMeasure):
        return obj
    for attr in ("zeta", "measure"):
        if hasattr(obj, attr):
            return getattr(obj, attr)
    raise TypeError("expected a measure")
