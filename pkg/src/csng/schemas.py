"""JSON schemas for every document the pipeline reads or writes."""

from __future__ import annotations

import jsonschema

_VEC3 = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 3,
    "maxItems": 3,
}

LINES_SCHEMA = {
    "type": "object",
    "required": ["lines"],
    "properties": {
        "lines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["vertices"],
                "properties": {
                    "vertices": {"type": "array", "items": _VEC3, "minItems": 2},
                    "speeds": {"type": "array", "items": {"type": "number"}},
                },
            },
        }
    },
}

SEGMENTS_SCHEMA = {
    "type": "object",
    "required": ["L", "lines"],
    "properties": {
        "L": {"type": "integer", "minimum": 1},
        "lines": LINES_SCHEMA["properties"]["lines"],
    },
}

COMMUNITIES_SCHEMA = {
    "type": "object",
    "required": ["tree", "params", "generation"],
    "properties": {
        "tree": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "parent", "label", "children", "cardinality"],
                "properties": {
                    "id": {"type": "integer"},
                    "parent": {"type": ["integer", "null"]},
                    "label": {"type": "integer"},
                    "children": {"type": "array", "items": {"type": "integer"}},
                    "cardinality": {"type": "integer", "minimum": 0},
                    "segments": {"type": "array", "items": {"type": "integer"}},
                },
            },
        },
        "params": {
            "type": "object",
            "required": ["resolution", "seed"],
            "properties": {
                "resolution": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer"},
            },
        },
        "generation": {"type": "integer", "minimum": 0},
    },
}

LAYOUT_SCHEMA = {
    "type": "object",
    "required": ["nodes", "edges", "converged", "iteration"],
    "properties": {
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "x", "y", "r", "cardinality", "parent"],
                "properties": {
                    "id": {"type": "integer"},
                    "x": {"type": "number"},
                    "y": {"type": "number"},
                    "r": {"type": "number", "exclusiveMinimum": 0},
                    "cardinality": {"type": "integer", "minimum": 1},
                    "parent": {"type": "integer"},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["u", "v", "w"],
                "properties": {
                    "u": {"type": "integer"},
                    "v": {"type": "integer"},
                    "w": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "converged": {"type": "boolean"},
        "iteration": {"type": "integer", "minimum": 0},
    },
}

CLUSTERS_SCHEMA = COMMUNITIES_SCHEMA

FIELD_SCHEMA = {
    "type": "object",
    "required": ["dims", "bounds", "data"],
    "properties": {
        "dims": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 3,
            "maxItems": 3,
        },
        "bounds": {
            "type": "object",
            "required": ["min", "max"],
            "properties": {"min": _VEC3, "max": _VEC3},
        },
        "data": {"type": "string"},
    },
}


def validate(doc: dict, schema: dict) -> None:
    """Raise jsonschema.ValidationError when the document does not conform."""
    jsonschema.validate(doc, schema)
