import json
from pathlib import Path

import numpy as np
import pytest

from renewalkit.problem import SchemaError, constant_history_dict, load_problem, parse_problem

PROBLEMS = Path(__file__).resolve().parents[1] / "demos" / "problems"


def rfde_dict(**over):
    d = {
        "schema": 1, "kind": "rfde", "n": 1, "T": 2.0, "h": 0.01,
        "zeta": {"dims": [1, 1], "atoms": [{"t": 1.0, "w": [[-1.0]]}]},
        "history": constant_history_dict(1.0, 0.01),
    }
    d.update(over)
    return d


@pytest.mark.parametrize("path", sorted(PROBLEMS.glob("*.json")), ids=lambda p: p.stem)
def test_round_trip_is_idempotent(path):
    p = load_problem(str(path))
    text = p.to_json()
    again = load_problem(text).to_json()
    assert again == text
    p.system()  # every demo problem builds a valid system


@pytest.mark.parametrize("drop", ["schema", "kind", "n", "T", "h", "zeta", "history"])
def test_missing_field_is_named(drop):
    d = rfde_dict()
    del d[drop]
    with pytest.raises(SchemaError) as exc:
        parse_problem(d)
    assert exc.value.field == drop


@pytest.mark.parametrize("over, field", [
    ({"schema": 2}, "schema"),
    ({"kind": "pde"}, "kind"),
    ({"n": 0}, "n"),
    ({"T": -1.0}, "T"),
    ({"h": 0.03}, "h"),
    ({"zeta": {"dims": [2, 2]}}, "zeta.dims"),
    ({"zeta": {"dims": [1, 1], "atoms": [{"t": 1.5, "w": [[1.0]]}]}}, "zeta.atoms[0].t"),
    ({"zeta": {"dims": [1, 1], "atoms": [{"t": 0.5, "w": [1.0, 2.0]}]}}, "zeta.atoms[0].w"),
    ({"history": {"samples": [[1.0, 2.0]] * 101}}, "history.samples"),
    ({"forcing": [[0.0]] * 3}, "forcing"),
])
def test_schema_errors_name_the_field(over, field):
    with pytest.raises(SchemaError) as exc:
        parse_problem(rfde_dict(**over))
    assert exc.value.field == field


def test_malformed_json():
    with pytest.raises(SchemaError) as exc:
        load_problem('{"schema": 1,')
    assert exc.value.field == "<json>"


def test_missing_file():
    with pytest.raises(SchemaError) as exc:
        load_problem("/nonexistent/problem.json")
    assert exc.value.field == "<file>"


def test_overrides_replace_file_values():
    p = parse_problem(rfde_dict(), T=3.0, h=0.005)
    assert (p.T, p.h) == (3.0, 0.005)
    assert p.history.values.shape == (201, 1)
    assert p.system().grid.N == 601


def test_density_is_resampled_to_the_problem_step():
    d = {
        "schema": 1, "kind": "re-bv", "n": 1, "T": 1.0, "h": 0.005,
        "L": {"dims": [1, 1], "density": {"h": 0.5, "T": 1.0, "samples": [[[0.0]], [[1.0]], [[2.0]]]}},
        "state": {"dims": [1, 1], "atoms": [{"t": 0.0, "w": [[1.0]]}]},
    }
    p = parse_problem(d)
    dens = np.asarray(p.L.density)[:, 0, 0]
    assert dens.shape == (201,)
    assert np.allclose(dens, 2.0 * np.linspace(0.0, 1.0, 201), atol=1e-14)


def test_json_text_and_dict_inputs_agree():
    d = rfde_dict()
    assert load_problem(d).to_json() == load_problem(json.dumps(d)).to_json()
