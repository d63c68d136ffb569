"""Renewal and resolvent numerics for linear delay equations.

Exact-atom measure algebra on the half-line, resolvent kernels, solution
semigroups for retarded and neutral delay equations and for renewal
equations, finite-rank perturbation constructions and half-plane stability
tests.
"""

from .measures import (
    Grid,
    GridFunction,
    HalfLineMeasure,
    NBVFunction,
    convolve,
    convolve_fn,
    laplace,
    pairing,
    tv_norm,
)
from .neutral import NFDESemigroup, NFDESystem, solve_nfde
from .problem import Problem, SchemaError, load_problem
from .renewal import RESemigroup, RESystem, birth_rate, cumulative_births
from .resolvent import SingularAtZero, march, resolvent_l1, resolvent_measure, tol
from .rfde import RFDESemigroup, RFDESystem, fundamental_solution, solve_ivp
from .semigroup import CumulativeHistory, HistoryFunction, ShiftB, ShiftNBV
from .stability import (
    InconclusiveScan,
    decay_corroborate,
    nfde_stability_verdict,
    re_stability_verdict,
    rfde_stability_full,
)

__version__ = "0.1.0"

__all__ = [
    "CumulativeHistory",
    "Grid",
    "GridFunction",
    "HalfLineMeasure",
    "HistoryFunction",
    "InconclusiveScan",
    "NBVFunction",
    "NFDESemigroup",
    "NFDESystem",
    "Problem",
    "RESemigroup",
    "RESystem",
    "RFDESemigroup",
    "RFDESystem",
    "SchemaError",
    "ShiftB",
    "ShiftNBV",
    "SingularAtZero",
    "birth_rate",
    "convolve",
    "convolve_fn",
    "cumulative_births",
    "decay_corroborate",
    "fundamental_solution",
    "laplace",
    "load_problem",
    "march",
    "nfde_stability_verdict",
    "pairing",
    "re_stability_verdict",
    "resolvent_l1",
    "resolvent_measure",
    "rfde_stability_full",
    "solve_ivp",
    "solve_nfde",
    "tol",
    "tv_norm",
]
