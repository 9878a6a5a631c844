"""Published JSON Schemas for every API response shape.

These are the wire contract; the test suite validates live responses
against them.
"""

from __future__ import annotations

_GEO_SOURCE = ["post-metadata", "gazetteer", "external-geocoder"]

INCIDENT_SCHEMA = {
    "type": "object",
    "required": [
        "id",
        "source_id",
        "category",
        "lat",
        "lon",
        "out_of_area",
        "sanitized_text",
        "raw_text",
        "detected_at",
        "scores",
    ],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "source_id": {"type": "string", "minLength": 1},
        "category": {"type": "string", "minLength": 1},
        "lat": {"type": ["number", "null"], "minimum": -90, "maximum": 90},
        "lon": {"type": ["number", "null"], "minimum": -180, "maximum": 180},
        "geo_source": {"type": ["string", "null"], "enum": _GEO_SOURCE + [None]},
        "place_name": {"type": ["string", "null"]},
        "out_of_area": {"type": "boolean"},
        "sanitized_text": {"type": "string"},
        "raw_text": {"type": "string"},
        "detected_at": {"type": "string", "format": "date-time"},
        "scores": {
            "type": "object",
            "required": ["stage1", "stage2"],
            "properties": {
                "stage1": {"type": "number"},
                "stage2": {"type": "object", "additionalProperties": {"type": "number"}},
            },
        },
    },
    "additionalProperties": False,
}

INCIDENT_LIST_SCHEMA = {"type": "array", "items": INCIDENT_SCHEMA}

CONTACT_SCHEMA = {
    "type": "object",
    "required": ["category", "name", "phone", "description"],
    "properties": {
        "category": {"type": "string"},
        "name": {"type": "string", "minLength": 1},
        "phone": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
    },
    "additionalProperties": False,
}

CONTACT_LIST_SCHEMA = {"type": "array", "items": CONTACT_SCHEMA}

PREFERENCES_SCHEMA = {
    "type": "object",
    "required": ["user_id", "notifications_enabled", "categories", "bbox"],
    "properties": {
        "user_id": {"type": "string", "minLength": 1},
        "notifications_enabled": {"type": "boolean"},
        "categories": {"type": "array", "items": {"type": "string"}},
        "bbox": {
            "type": ["array", "null"],
            "items": {"type": "number"},
            "minItems": 4,
            "maxItems": 4,
        },
    },
    "additionalProperties": False,
}

WORDCLOUD_SCHEMA = {
    "type": "object",
    "required": ["records"],
    "properties": {
        "records": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["term", "weight"],
                "properties": {
                    "term": {"type": "string", "minLength": 1},
                    "weight": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                },
                "additionalProperties": False,
            },
        }
    },
    "additionalProperties": False,
}

HEALTH_SCHEMA = {
    "type": "object",
    "required": ["status", "incidents", "queue_depth"],
    "properties": {
        "status": {"type": "string", "enum": ["ok"]},
        "incidents": {"type": "integer", "minimum": 0},
        "queue_depth": {"type": "integer", "minimum": 0},
        "categories": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}

STREAM_EVENT_SCHEMA = {
    "type": "object",
    "required": ["incident", "contacts"],
    "properties": {
        "incident": INCIDENT_SCHEMA,
        "contacts": CONTACT_LIST_SCHEMA,
    },
    "additionalProperties": False,
}

GAP_EVENT_SCHEMA = {
    "type": "object",
    "required": ["dropped"],
    "properties": {"dropped": {"type": "integer", "minimum": 1}},
    "additionalProperties": False,
}

ACCEPTED_SCHEMA = {
    "type": "object",
    "required": ["id"],
    "properties": {"id": {"type": "string", "minLength": 1}},
    "additionalProperties": False,
}
