"""
Declarative checks for stage agent inputs.

Agents describe their inputs with a rules mapping::

    {'required_fields': [...], 'field_types': {name: kind}, 'field_constraints': {name: {'min', 'max'}},
     'enum_constraints': {name: {'enum': [...]}}, 'existing_paths': [...]}

Every check returns messages instead of raising, so one pass reports all
problems with a stage's inputs.
"""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, List

logger = logging.getLogger(__name__)

Inputs = Dict[str, Any]


def _is_path(value: Any) -> bool:
    return isinstance(value, (str, Path)) and str(value).strip() != ""


def _is_number(value: Any) -> bool:
    # bool is an int subclass but never a valid count or threshold
    return isinstance(value, (int, float)) and not isinstance(value, bool)


KINDS: Dict[str, Callable[[Any], bool]] = {
    'string': lambda v: isinstance(v, str),
    'integer': lambda v: isinstance(v, int) and not isinstance(v, bool),
    'number': _is_number,
    'boolean': lambda v: isinstance(v, bool),
    'array': lambda v: isinstance(v, (list, tuple)),
    'path': _is_path,
    'paths': lambda v: isinstance(v, (list, tuple)) and bool(v) and all(_is_path(p) for p in v),
}


def validate_required_fields(inputs: Inputs, required: List[str]) -> List[str]:
    """Inputs that must be present, non-null and, for strings, non-blank."""
    errors = []
    for name in required:
        if name not in inputs:
            errors.append(f"Missing required field: {name}")
        elif inputs[name] is None:
            errors.append(f"Field '{name}' is unresolved")
        elif isinstance(inputs[name], str) and not inputs[name].strip():
            errors.append(f"Field '{name}' is blank")
    return errors


def validate_field_types(inputs: Inputs, kinds: Dict[str, str]) -> List[str]:
    errors = []
    for name, kind in kinds.items():
        value = inputs.get(name)
        if value is None:
            continue
        check = KINDS.get(kind)
        if check is None:
            logger.warning(f"Unknown input kind '{kind}' for field '{name}'; not checked")
        elif not check(value):
            errors.append(f"Field '{name}' must be a {kind}, got {type(value).__name__}")
    return errors


def validate_number_ranges(inputs: Inputs, bounds: Dict[str, Dict[str, float]]) -> List[str]:
    errors = []
    for name, bound in bounds.items():
        value = inputs.get(name)
        if not _is_number(value):
            continue
        if 'min' in bound and value < bound['min']:
            errors.append(f"Field '{name}' must be at least {bound['min']}, got {value}")
        if 'max' in bound and value > bound['max']:
            errors.append(f"Field '{name}' must be at most {bound['max']}, got {value}")
    return errors


def validate_enum_values(inputs: Inputs, choices: Dict[str, Dict[str, List[str]]]) -> List[str]:
    errors = []
    for name, rule in choices.items():
        value = inputs.get(name)
        allowed = rule.get('enum', [])
        if value is not None and value not in allowed:
            errors.append(f"Field '{name}' must be one of: {', '.join(map(str, allowed))}")
    return errors


def validate_paths(inputs: Inputs, existing: List[str]) -> List[str]:
    """Case directories and checkpoints that must exist before the stage starts."""
    errors = []
    for name in existing:
        value = inputs.get(name)
        if value is None:
            continue
        for item in value if isinstance(value, (list, tuple)) else [value]:
            if not Path(item).exists():
                errors.append(f"Field '{name}': path does not exist: {item}")
    return errors


def validate_comprehensive_input(inputs: Inputs, rules: Dict[str, Any]) -> List[str]:
    """All messages for ``inputs`` under an agent's rules mapping."""
    return (validate_required_fields(inputs, rules.get('required_fields', []))
            + validate_field_types(inputs, rules.get('field_types', {}))
            + validate_number_ranges(inputs, rules.get('field_constraints', {}))
            + validate_enum_values(inputs, rules.get('enum_constraints', {}))
            + validate_paths(inputs, rules.get('existing_paths', [])))
