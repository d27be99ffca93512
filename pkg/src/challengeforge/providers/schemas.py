"""Output schemas for judge responses, validated locally on every call."""

from __future__ import annotations

import jsonschema

from .base import SchemaViolation

_TEXT = {"type": "string"}

SCHEMAS: dict[str, dict] = {
    # 0-10 usefulness score for a candidate page
    "likelihood": {
        "type": "object",
        "properties": {"score": {"type": "integer", "minimum": 0, "maximum": 10}},
        "required": ["score"],
    },
    # structured challenge items parsed out of one page
    "challenge_items": {
        "type": "array",
        "items": {
            "type": "object",
            "properties": {
                "title": _TEXT,
                "description": _TEXT,
                "wish": _TEXT,
                "daily_action": _TEXT,
            },
            "required": ["title", "wish", "daily_action"],
        },
    },
    # is this pair of challenges a duplicate?
    "duplicate_verdict": {
        "type": "object",
        "properties": {"duplicate": {"type": "boolean"}},
        "required": ["duplicate"],
    },
    # one relevance flag per candidate, in candidate order
    "relevance_flags": {
        "type": "array",
        "items": {"type": "boolean"},
    },
}


def validate_payload(schema_id: str, value: object) -> None:
    """Raise SchemaViolation unless value conforms to the named schema."""
    schema = SCHEMAS.get(schema_id)
    if schema is None:
        raise SchemaViolation(f"no such schema: {schema_id}")
    try:
        jsonschema.validate(value, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaViolation(f"{schema_id}: {exc.message}") from exc
