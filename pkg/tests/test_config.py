import json

import pytest
from hypothesis import given, settings, strategies as st

from selfsim.config import BUILTINS, builtin_config, config_from_dict, emit_config, load_config, parse_config
from selfsim.errors import GeometryError, NotPrimitive, ParseError


def square_config(children, types=2):
    return {
        "name": "sq", "dimension": 2, "expansion": 2,
        "prototiles": [{"id": i + 1, "extent": [1, 1]} for i in range(types)],
        "rules": [{"parent": p + 1, "children": [{"type": t, "offset": o} for t, o in children[p]]}
                  for p in range(types)],
    }


@pytest.mark.parametrize("which", BUILTINS)
def test_builtin_round_trip_is_byte_identical(which, tmp_path):
    text = emit_config(builtin_config(which))
    path = tmp_path / f"{which}.json"
    path.write_text(text)
    assert emit_config(load_config(path)) == text
    assert parse_config(path).incidence.tolist() == builtin_config(which).to_substitution().incidence.tolist()


def test_shipped_files_are_canonical():
    from importlib import resources
    for which in BUILTINS:
        raw = resources.files("selfsim").joinpath("builtins", f"{which}.json").read_text()
        assert emit_config(builtin_config(which)) == raw


def test_gap_reports_missing_cell(tmp_path):
    full = [(1, [0, 0]), (2, [1, 0]), (2, [0, 1]), (1, [1, 1])]
    cfg = square_config([full[:3], full])
    path = tmp_path / "gap.json"
    path.write_text(json.dumps(cfg))
    with pytest.raises(GeometryError) as exc:
        parse_config(path)
    assert exc.value.rule == 0 and exc.value.cell == (1, 1)


def test_reducible_rejected():
    same = lambda t: [(t, [x, y]) for y in range(2) for x in range(2)]
    with pytest.raises(NotPrimitive):
        config_from_dict(square_config([same(1), same(2)])).to_substitution()


@pytest.mark.parametrize("patch", [
    lambda c: c.pop("rules"),
    lambda c: c["prototiles"][0].update(extent=[1.5, 1]),
    lambda c: c["rules"][0]["children"][0].update(type=9),
    lambda c: c["rules"].pop(),
    lambda c: c["rules"][0]["children"][0].pop("offset"),
])
def test_malformed_configs(patch):
    full = [(1, [0, 0]), (2, [1, 0]), (2, [0, 1]), (1, [1, 1])]
    cfg = square_config([full, full])
    patch(cfg)
    with pytest.raises(ParseError):
        config_from_dict(cfg).to_substitution()


def test_bad_json_and_unknown_builtin(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{nope")
    with pytest.raises(ParseError):
        parse_config(p)
    with pytest.raises(ParseError):
        parse_config(tmp_path / "missing.json")
    with pytest.raises(ParseError):
        builtin_config("chair")


@given(st.lists(st.sampled_from("ab"), min_size=2, max_size=5), st.lists(st.sampled_from("ab"), min_size=2, max_size=5))
@settings(max_examples=60, deadline=None)
def test_symbolic_1d_configs(wa, wb):
    """Symbolic words either realize with consistent lengths or are rejected with a library error."""
    from selfsim.errors import SelfSimError
    from selfsim.substitution import validate_geometry
    cfg = {"name": "w", "dimension": 1, "expansion": None,
           "prototiles": [{"id": 1, "extent": [1], "label": "a"}, {"id": 2, "extent": [1], "label": "b"}],
           "rules": [{"parent": 1, "children": [{"type": 1 + (ch == "b")} for ch in wa]},
                     {"parent": 2, "children": [{"type": 1 + (ch == "b")} for ch in wb]}]}
    try:
        sub = config_from_dict(cfg).to_substitution()
    except SelfSimError:
        return
    assert validate_geometry(sub).ok
    if len(wa) == len(wb):
        assert sub.is_lattice and sub.expansion == len(wa)
