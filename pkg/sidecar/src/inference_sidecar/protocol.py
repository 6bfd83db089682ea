"""The wire protocol contract, shared with the survey engine.

The JSON Schema document here must stay byte-identical to the copy the
engine's remote client validates against; a test on each side pins
that. Validation helpers return the failing schema pointer so a 400
tells the caller exactly which shape was violated.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib.resources import files
from typing import Optional

import jsonschema


@lru_cache(maxsize=1)
def load_protocol_schema() -> dict:
    text = files("inference_sidecar").joinpath("schemas/inference_protocol.json").read_text()
    return json.loads(text)


class RequestViolation(Exception):
    """A request body that does not match its protocol shape."""

    def __init__(self, message: str, pointer: str, path: list):
        super().__init__(message)
        self.pointer = pointer
        self.path = path


def validate_against(definition: str, doc) -> None:
    """Check ``doc`` against one ``$defs`` entry of the protocol."""
    schema = load_protocol_schema()
    validator = jsonschema.Draft202012Validator(
        {"$defs": schema["$defs"], "$ref": f"#/$defs/{definition}"}
    )
    error: Optional[jsonschema.ValidationError] = jsonschema.exceptions.best_match(
        validator.iter_errors(doc)
    )
    if error is not None:
        raise RequestViolation(
            error.message, f"#/$defs/{definition}", [str(p) for p in error.absolute_path]
        )
