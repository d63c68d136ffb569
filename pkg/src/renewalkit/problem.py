"""Problem files (JSON, ``"schema": 1``).

A problem file describes one equation together with its initial state::

    {
      "schema": 1,
      "kind": "rfde" | "nfde" | "re-smooth" | "re-bv",
      "n": 1,
      "T": 2.0,
      "h": 0.001,
      "zeta":    <measure>            (rfde, nfde)
      "eta":     <measure>            (nfde)
      "history": {"samples": [[...], ...], "at_zero": [...],
                  "left_samples": optional}          (rfde, nfde)
      "forcing": optional [[...], ...]               (rfde; N x n samples)
      "kernel":  {"h": h, "samples": [...], "left_samples": optional}  (re-smooth)
      "L":       <measure>            (re-bv)
      "state":   <measure> with dims [n, 1]          (re-smooth, re-bv)
    }

``<measure>`` is the serialization of
:class:`~renewalkit.measures.HalfLineMeasure`:
``{"dims": [m, n], "atoms": [{"t": s, "w": [[...]]}], "density": {"h": h,
"T": 1, "samples": [[[...]]]}}``.  History samples run from ``theta = -1``
to ``theta = 0`` on a grid of step ``1/(len - 1)``; renewal states store the
reflected birth measure on ``sigma = -theta in [0, 1]``.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .measures import Grid, GridFunction, HalfLineMeasure, interp
from .semigroup import CumulativeHistory, HistoryFunction

SCHEMA_VERSION = 1
KINDS = ("rfde", "nfde", "re-smooth", "re-bv")


class SchemaError(ValueError):
    """Problem file does not match the schema; ``field`` names the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class Problem:
    kind: str
    n: int
    T: float
    h: float
    zeta: HalfLineMeasure = None
    eta: HalfLineMeasure = None
    history: HistoryFunction = None
    forcing: np.ndarray = None
    kernel: GridFunction = None
    L: HalfLineMeasure = None
    state: CumulativeHistory = None
    extra: dict = field(default_factory=dict)

    # -- construction -------------------------------------------------------
    def system(self):
        """Build the solver object for this problem."""
        if self.kind == "rfde":
            from .rfde import RFDESystem
            return RFDESystem(self.zeta, self.T, self.h)
        if self.kind == "nfde":
            from .neutral import NFDESystem
            return NFDESystem(self.eta, self.zeta, self.T, self.h)
        from .renewal import RESystem
        if self.kind == "re-smooth":
            return RESystem(self.kernel, self.T, self.h)
        return RESystem(self.L, self.T, self.h)

    # -- serialization ------------------------------------------------------
    def to_dict(self):
        d = {"schema": SCHEMA_VERSION, "kind": self.kind, "n": self.n, "T": self.T, "h": self.h}
        if self.zeta is not None:
            d["zeta"] = self.zeta.to_dict()
        if self.eta is not None:
            d["eta"] = self.eta.to_dict()
        if self.history is not None:
            hd = {"samples": self.history.values.tolist(), "at_zero": self.history.at_zero.tolist()}
            if not np.array_equal(self.history.values, self.history.left):
                hd["left_samples"] = self.history.left.tolist()
            d["history"] = hd
        if self.forcing is not None:
            d["forcing"] = np.asarray(self.forcing).tolist()
        if self.kernel is not None:
            kd = {"h": self.kernel.grid.h, "samples": np.asarray(self.kernel.values).tolist()}
            if not np.array_equal(self.kernel.values, self.kernel.left):
                kd["left_samples"] = np.asarray(self.kernel.left).tolist()
            d["kernel"] = kd
        if self.L is not None:
            d["L"] = self.L.to_dict()
        if self.state is not None:
            d["state"] = self.state.measure.to_dict()
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _require(d, key, where=""):
    if key not in d:
        raise SchemaError(where + key, "missing required field")
    return d[key]


def _number(d, key, positive=True):
    v = _require(d, key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(key, "must be a number")
    if positive and not v > 0:
        raise SchemaError(key, "must be positive")
    return float(v)


def _resample_to(mu, h):
    """Move a unit-interval measure to the grid of step `h`."""
    g = Grid(1.0, h)
    if mu.grid == g:
        return mu
    t = g.t
    src = mu.with_horizon(1.0)
    dv = interp(src.density, src.density_left, src.h, t)
    dl = interp(src.density, src.density_left, src.h, t, side="left")
    return HalfLineMeasure(g, mu.dims, mu.locs, mu.weights, dv, dl)


def _measure(d, key, n_rows, n_cols, h):
    raw = _require(d, key)
    if not isinstance(raw, dict):
        raise SchemaError(key, "must be an object")
    dims = raw.get("dims")
    if not (isinstance(dims, list) and len(dims) == 2 and all(isinstance(x, int) for x in dims)):
        raise SchemaError(key + ".dims", "must be a pair of integers")
    if tuple(dims) != (n_rows, n_cols):
        raise SchemaError(key + ".dims", f"expected [{n_rows}, {n_cols}]")
    atoms = raw.get("atoms", [])
    if not isinstance(atoms, list):
        raise SchemaError(key + ".atoms", "must be a list")
    for i, a in enumerate(atoms):
        if not isinstance(a, dict) or "t" not in a or "w" not in a:
            raise SchemaError(f"{key}.atoms[{i}]", "needs 't' and 'w'")
        t = a["t"]
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not 0.0 <= t <= 1.0 + 1e-12:
            raise SchemaError(f"{key}.atoms[{i}].t", "must be a number in [0, 1]")
        if np.shape(a["w"]) != (n_rows, n_cols):
            raise SchemaError(f"{key}.atoms[{i}].w", f"must have shape [{n_rows}, {n_cols}]")
    dens = raw.get("density")
    if dens is not None:
        if not isinstance(dens, dict) or "h" not in dens or "T" not in dens:
            raise SchemaError(key + ".density", "needs 'h', 'T' and 'samples'")
        try:
            src = Grid(dens["T"], dens["h"])
        except (TypeError, ValueError) as exc:
            raise SchemaError(key + ".density", str(exc)) from None
        if abs(src.T - 1.0) > 1e-9:
            raise SchemaError(key + ".density.T", "kernels live on [0, 1]")
        samples = dens.get("samples")
        if samples is not None and np.shape(samples) != (src.N, n_rows, n_cols):
            raise SchemaError(key + ".density.samples", f"must have shape [{src.N}, {n_rows}, {n_cols}]")
        if "left_samples" in dens and np.shape(dens["left_samples"]) != (src.N, n_rows, n_cols):
            raise SchemaError(key + ".density.left_samples", "shape differs from samples")
    try:
        grid = Grid(1.0, dens["h"]) if dens is not None else Grid(1.0, h)
        mu = HalfLineMeasure.from_dict(raw, grid)
    except (TypeError, ValueError) as exc:
        raise SchemaError(key, str(exc)) from None
    return _resample_to(mu, h)


def _history(d, n, h):
    raw = _require(d, "history")
    if not isinstance(raw, dict):
        raise SchemaError("history", "must be an object")
    s = np.asarray(_require(raw, "samples", "history."), dtype=float)
    if s.ndim != 2 or s.shape[1] != n or s.shape[0] < 2:
        raise SchemaError("history.samples", f"must be a list of at least two length-{n} rows")
    at0 = raw.get("at_zero", s[-1].tolist())
    if np.shape(at0) != (n,):
        raise SchemaError("history.at_zero", f"must have length {n}")
    left = raw.get("left_samples")
    if left is not None and np.shape(left) != s.shape:
        raise SchemaError("history.left_samples", "shape differs from samples")
    return HistoryFunction(s, np.asarray(at0, dtype=float), left).with_step(h)


def _kernel(d, n, h):
    raw = _require(d, "kernel")
    if not isinstance(raw, dict):
        raise SchemaError("kernel", "must be an object")
    kh = raw.get("h", h)
    s = np.asarray(_require(raw, "samples", "kernel."), dtype=float)
    try:
        g = Grid(1.0, kh)
    except (TypeError, ValueError) as exc:
        raise SchemaError("kernel.h", str(exc)) from None
    shapes = [(g.N, n, n)] + ([(g.N,)] if n == 1 else [])
    if s.shape not in shapes:
        raise SchemaError("kernel.samples", f"must have shape [{g.N}, {n}, {n}]")
    left = raw.get("left_samples")
    if left is not None and np.shape(left) != s.shape:
        raise SchemaError("kernel.left_samples", "shape differs from samples")
    left = s if left is None else np.asarray(left, dtype=float)
    if abs(kh - h) > 1e-15:
        t = Grid(1.0, h).t
        s, left = interp(s, left, kh, t), interp(s, left, kh, t, side="left")
    return GridFunction(Grid(1.0, h), s, left)


def parse_problem(d, T=None, h=None):
    """Validate a problem dictionary and build a :class:`Problem`.

    Parameters
    ----------
    d : dict
        Decoded JSON.
    T, h : float, optional
        Overrides of the values in the file.

    Raises
    ------
    SchemaError
    """
    if not isinstance(d, dict):
        raise SchemaError("<root>", "problem must be a JSON object")
    schema = _require(d, "schema")
    if schema != SCHEMA_VERSION:
        raise SchemaError("schema", f"unsupported version {schema!r} (expected {SCHEMA_VERSION})")
    kind = _require(d, "kind")
    if kind not in KINDS:
        raise SchemaError("kind", f"must be one of {', '.join(KINDS)}")
    n = _require(d, "n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SchemaError("n", "must be a positive integer")
    T = _number(d, "T") if T is None else float(T)
    h = _number(d, "h") if h is None else float(h)
    try:
        Grid(T, h).steps_per_unit()
    except ValueError as exc:
        raise SchemaError("h", str(exc)) from None
    p = Problem(kind=kind, n=n, T=T, h=h)
    if kind in ("rfde", "nfde"):
        p.zeta = _measure(d, "zeta", n, n, h)
        p.history = _history(d, n, h)
        if kind == "nfde":
            p.eta = _measure(d, "eta", n, n, h)
        if d.get("forcing") is not None:
            if kind != "rfde":
                raise SchemaError("forcing", "only supported for rfde problems")
            f = np.asarray(d["forcing"], dtype=float)
            N = Grid(T, h).N
            if f.shape != (N, n):
                raise SchemaError("forcing", f"must have shape [{N}, {n}] on the time grid")
            p.forcing = f
    else:
        if kind == "re-smooth":
            p.kernel = _kernel(d, n, h)
        else:
            p.L = _measure(d, "L", n, n, h)
        p.state = CumulativeHistory(_measure(d, "state", n, 1, h))
    return p


def load_problem(source, T=None, h=None):
    """Load a problem from a path, a JSON string or a dictionary."""
    if isinstance(source, dict):
        return parse_problem(source, T, h)
    text = source
    if not isinstance(source, str) or not source.lstrip().startswith("{"):
        try:
            with open(source) as fh:
                text = fh.read()
        except OSError as exc:
            raise SchemaError("<file>", str(exc)) from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<json>", f"malformed JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_problem(d, T, h)


# ---------------------------------------------------------------------------
# convenience builders
# ---------------------------------------------------------------------------

def constant_history_dict(c, h):
    c = list(np.atleast_1d(np.asarray(c, dtype=float)))
    M = int(round(1.0 / h))
    return {"samples": [c] * (M + 1), "at_zero": c}


def cohort_state_dict(n=1, column=0):
    w = [[0.0] for _ in range(n)]
    w[column][0] = 1.0
    return {"dims": [n, 1], "atoms": [{"t": 0.0, "w": w}]}
