"""Regenerate the problem files in ``demos/problems``."""

import json
from pathlib import Path

from renewalkit.problem import cohort_state_dict, constant_history_dict

OUT = Path(__file__).resolve().parent / "problems"


def atom(t, w):
    return {"t": t, "w": [[w]]}


def delay(a):
    return {
        "schema": 1, "kind": "rfde", "n": 1, "T": 2.0, "h": 0.001,
        "zeta": {"dims": [1, 1], "atoms": [atom(1.0, a)]},
        "history": constant_history_dict(1.0, 0.01),
    }


PROBLEMS = {
    # x'(t) = -x(t - 1), x = 1 on [-1, 0]
    "rfde_delay_minus_one": delay(-1.0),
    # x'(t) = x(t - 1): unstable, dominant root W(1)
    "rfde_delay_plus_one": delay(1.0),
    # d/dt (x(t) - 0.5 int_0^1 x(t - s) ds) = -x(t)
    "nfde_example": {
        "schema": 1, "kind": "nfde", "n": 1, "T": 5.0, "h": 0.01,
        "eta": {"dims": [1, 1], "density": {"h": 0.01, "T": 1.0, "samples": [[[0.5]]] * 101}},
        "zeta": {"dims": [1, 1], "atoms": [atom(0.0, -1.0)]},
        "history": constant_history_dict(1.0, 0.01),
    },
    # every individual splits into two exactly at age 1
    "re_bv_cell_division": {
        "schema": 1, "kind": "re-bv", "n": 1, "T": 3.0, "h": 0.001,
        "L": {"dims": [1, 1], "atoms": [atom(1.0, 2.0)]},
        "state": cohort_state_dict(1),
    },
    # unit birth kernel on [0, 1]
    "re_smooth_unit_kernel": {
        "schema": 1, "kind": "re-smooth", "n": 1, "T": 2.0, "h": 0.001,
        "kernel": {"h": 0.01, "samples": [1.0] * 101},
        "state": cohort_state_dict(1),
    },
}


def main():
    OUT.mkdir(exist_ok=True)
    for name, d in PROBLEMS.items():
        (OUT / f"{name}.json").write_text(json.dumps(d, indent=1) + "\n")
        print(f"wrote {OUT / name}.json")


if __name__ == "__main__":
    main()
