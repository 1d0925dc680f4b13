#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Data validation utilities for the TWOPHOTON project.

This module provides the parameter checks used by the core types and the
configuration layer, and the structural checks applied to scenario documents
and to every JSON document the command-line interface writes.
"""

import os
import json
import math
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

logger = logging.getLogger(__name__)

SCHEMA_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                           'schemas', 'output_schema.json')

STATE_KINDS = ('uncorrelated', 'cascade', 'spdc')
TRANSFORM_TYPES = ('none', 'disentangle', 'factorize', 'coherent_lift')
METHOD_CHOICES = ('closed', 'quadrature', 'delta', 'all')

_JSON_TYPES = {
    'object': dict,
    'array': list,
    'string': str,
    'boolean': bool,
    'null': type(None),
}


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate_finite(value: Union[int, float], name: str) -> Tuple[bool, str]:
    """Validate that a value is a finite real number.

    Args:
        value: The value to validate
        name: Name of the parameter (for error messages)

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not _is_number(value):
        return False, f"{name} must be a number"

    if not math.isfinite(value):
        return False, f"{name} must be finite, got {value}"

    return True, ""


def validate_positive(value: Union[int, float], name: str) -> Tuple[bool, str]:
    """Validate that a value is a positive finite number.

    Args:
        value: The value to validate
        name: Name of the parameter (for error messages)

    Returns:
        Tuple of (is_valid, error_message)
    """
    is_valid, message = validate_finite(value, name)
    if not is_valid:
        return is_valid, message

    if value <= 0:
        return False, f"{name} must be positive, got {value}"

    return True, ""


def validate_non_negative(value: Union[int, float], name: str) -> Tuple[bool, str]:
    """Validate that a value is non-negative."""
    is_valid, message = validate_finite(value, name)
    if not is_valid:
        return is_valid, message

    if value < 0:
        return False, f"{name} must be non-negative, got {value}"

    return True, ""


def validate_in_range(value: Union[int, float], min_val: Union[int, float],
                      max_val: Union[int, float], name: str) -> Tuple[bool, str]:
    """Validate that a value lies within [min_val, max_val]."""
    is_valid, message = validate_finite(value, name)
    if not is_valid:
        return is_valid, message

    if value < min_val or value > max_val:
        return False, f"{name} must be between {min_val} and {max_val}, got {value}"

    return True, ""


def validate_choice(value: Any, choices: Sequence[str], name: str) -> Tuple[bool, str]:
    """Validate that a value is one of a fixed set of names."""
    if value not in choices:
        return False, f"{name} '{value}' is not valid. Must be one of: {', '.join(choices)}"

    return True, ""


def _check_number_fields(data: Dict[str, Any], fields: Sequence[str], where: str,
                         positive: Sequence[str] = ()) -> Tuple[bool, str]:
    for key in fields:
        if key not in data or data[key] is None:
            continue
        check = validate_positive if key in positive else validate_finite
        is_valid, message = check(data[key], f"{where}.{key}")
        if not is_valid:
            return is_valid, message
    return True, ""


def validate_scenario_dict(data: Any) -> Tuple[bool, str]:
    """Structural check of a scenario document before it is turned into objects.

    Args:
        data: Parsed JSON document

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(data, dict):
        return False, "Scenario document must be a JSON object"

    state = data.get('state')
    if not isinstance(state, dict):
        return False, "Scenario document needs a 'state' object"

    is_valid, message = validate_choice(state.get('kind'), STATE_KINDS, 'state.kind')
    if not is_valid:
        return is_valid, message

    for key in ('omega_alpha', 'omega_beta', 'width_alpha', 'width_beta'):
        if key not in state:
            return False, f"state.{key} is required"
    is_valid, message = _check_number_fields(
        state, ('omega_alpha', 'omega_beta', 'width_alpha', 'width_beta', 't0', 't0_over_T', 'phase'),
        'state', positive=('width_alpha', 'width_beta'))
    if not is_valid:
        return is_valid, message

    transforms = data.get('transforms', [])
    if not isinstance(transforms, list):
        return False, "transforms must be a list"
    for index, transform in enumerate(transforms):
        if not isinstance(transform, dict):
            return False, f"transforms[{index}] must be an object"
        is_valid, message = validate_choice(transform.get('type'), TRANSFORM_TYPES,
                                            f"transforms[{index}].type")
        if not is_valid:
            return is_valid, message

    atoms = data.get('atoms')
    if not isinstance(atoms, dict):
        return False, "Scenario document needs an 'atoms' object"
    if 'symmetric' in atoms:
        symmetric = atoms['symmetric']
        if not isinstance(symmetric, dict) or 'Delta' not in symmetric:
            return False, "atoms.symmetric must be an object with a 'Delta' entry"
        is_valid, message = _check_number_fields(symmetric, ('Delta', 'delta'), 'atoms.symmetric')
        if not is_valid:
            return is_valid, message
    elif 'omega1' not in atoms or 'omega2' not in atoms:
        return False, "atoms needs omega1 and omega2 or a 'symmetric' placement"
    is_valid, message = _check_number_fields(
        atoms, ('omega1', 'omega2', 'gamma1', 'gamma2', 'p0', 'section'), 'atoms',
        positive=('omega1', 'omega2', 'gamma1', 'gamma2', 'p0', 'section'))
    if not is_valid:
        return is_valid, message

    grid = data.get('grid', 'auto')
    if isinstance(grid, dict):
        is_valid, message = _check_number_fields(
            grid, ('T', 'spacing', 'coverage', 'oversampling'), 'grid',
            positive=('T', 'spacing', 'coverage', 'oversampling'))
        if not is_valid:
            return is_valid, message
    elif grid != 'auto':
        return False, "grid must be 'auto' or an object"

    time = data.get('time', 'T')
    if time != 'T':
        is_valid, message = validate_non_negative(time, 'time')
        if not is_valid:
            return is_valid, message

    is_valid, message = validate_choice(data.get('method', 'all'), METHOD_CHOICES, 'method')
    if not is_valid:
        return is_valid, message

    if 'engine' in data and not isinstance(data['engine'], dict):
        return False, "engine must be an object of setting overrides"

    return True, ""


def load_output_schema(path: Optional[str] = None) -> Dict[str, Any]:
    """Load the shipped output schema document."""
    with open(path or SCHEMA_PATH, 'r') as f:
        return json.load(f)


def _check_node(value: Any, schema: Dict[str, Any], where: str) -> List[str]:
    errors: List[str] = []
    expected = schema.get('type')
    if expected is not None:
        types = expected if isinstance(expected, list) else [expected]
        matched = False
        for name in types:
            if name == 'number':
                matched = matched or _is_number(value)
            elif name == 'integer':
                matched = matched or (isinstance(value, int) and not isinstance(value, bool))
            else:
                matched = matched or isinstance(value, _JSON_TYPES[name])
        if not matched:
            return [f"{where}: expected {expected}, got {type(value).__name__}"]

    if 'enum' in schema and value not in schema['enum']:
        errors.append(f"{where}: {value!r} not in {schema['enum']}")
    if 'pattern_prefix' in schema and isinstance(value, str) and not value.startswith(schema['pattern_prefix']):
        errors.append(f"{where}: {value!r} does not start with {schema['pattern_prefix']!r}")
    if 'minimum' in schema and _is_number(value) and value < schema['minimum']:
        errors.append(f"{where}: {value} below minimum {schema['minimum']}")

    if isinstance(value, dict):
        for key in schema.get('required', []):
            if key not in value:
                errors.append(f"{where}: missing required key '{key}'")
        for key, sub_schema in schema.get('properties', {}).items():
            if key in value:
                errors.extend(_check_node(value[key], sub_schema, f"{where}.{key}"))
    if isinstance(value, list) and 'items' in schema:
        for index, item in enumerate(value):
            errors.extend(_check_node(item, schema['items'], f"{where}[{index}]"))
    return errors


def validate_output_document(document: Dict[str, Any],
                             schema: Optional[Dict[str, Any]] = None) -> Tuple[bool, str]:
    """Validate an output document against the shipped schema.

    The schema file maps each document type (the middle part of the
    ``schema`` tag, e.g. ``prob`` in ``twophoton/prob/1``) to a structural
    description using a small subset of JSON Schema keywords.

    Args:
        document: The document about to be written
        schema: Schema mapping (default: the shipped file)

    Returns:
        Tuple of (is_valid, error_message)
    """
    schema = schema if schema is not None else load_output_schema()
    tag = document.get('schema') if isinstance(document, dict) else None
    if not isinstance(tag, str) or tag.count('/') != 2:
        return False, "Document lacks a 'twophoton/<type>/<version>' schema tag"

    _, doc_type, _ = tag.split('/')
    definitions = schema.get('documents', {})
    if doc_type not in definitions:
        return False, f"No schema for document type '{doc_type}'"

    errors = _check_node(document, definitions[doc_type], doc_type)
    if errors:
        return False, "; ".join(errors)

    return True, ""
