from pathlib import Path

import pytest

from agents.utils.validation import (
    validate_comprehensive_input, validate_enum_values, validate_field_types, validate_number_ranges,
    validate_paths, validate_required_fields,
)


def test_required_fields():
    errors = validate_required_fields({"a": None, "b": "  ", "c": 1}, ["a", "b", "c", "d"])
    assert errors == ["Field 'a' is unresolved", "Field 'b' is blank", "Missing required field: d"]


@pytest.mark.parametrize("value, kind, ok", [
    (3, "integer", True),
    (True, "integer", False),
    (True, "number", False),
    (0.5, "number", True),
    (Path("cases"), "path", True),
    ("", "path", False),
    (["a", Path("b")], "paths", True),
    ([], "paths", False),
    ("cases", "array", False),
    ("refine", "string", True),
])
def test_field_kinds(value, kind, ok):
    assert (validate_field_types({"x": value}, {"x": kind}) == []) == ok


def test_unknown_kinds_and_missing_values_pass():
    assert validate_field_types({"x": 1}, {"x": "voxelgrid", "y": "integer"}) == []


def test_ranges_and_enums():
    assert validate_number_ranges({"n": 0}, {"n": {"min": 1}}) == ["Field 'n' must be at least 1, got 0"]
    assert validate_number_ranges({"t": 1.5}, {"t": {"min": 0, "max": 1}}) == ["Field 't' must be at most 1, got 1.5"]
    assert validate_number_ranges({"n": "x"}, {"n": {"min": 1}}) == []
    assert validate_enum_values({"stage": "fit"}, {"stage": {"enum": ["reconstruct", "refine"]}}) == [
        "Field 'stage' must be one of: reconstruct, refine"]
    assert validate_enum_values({}, {"stage": {"enum": ["reconstruct"]}}) == []


def test_paths(tmp_path):
    present = tmp_path / "cases"
    present.mkdir()
    errors = validate_paths({"input_dirs": [present, tmp_path / "gone"], "checkpoint": None},
                            ["input_dirs", "checkpoint"])
    assert errors == [f"Field 'input_dirs': path does not exist: {tmp_path / 'gone'}"]


def test_comprehensive_collects_every_problem(tmp_path):
    rules = {
        "required_fields": ["input_dir", "output_dir"],
        "field_types": {"input_dir": "path", "n": "integer"},
        "field_constraints": {"n": {"min": 0}},
        "existing_paths": ["input_dir"],
    }
    errors = validate_comprehensive_input({"input_dir": tmp_path / "gone", "n": -2}, rules)
    assert len(errors) == 3
    assert validate_comprehensive_input({"input_dir": tmp_path, "output_dir": "out", "n": 4}, rules) == []
