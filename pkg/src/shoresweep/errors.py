"""Exception hierarchy shared across the survey engine.

The CLI maps these onto exit codes: configuration problems exit 2,
provider failures exit 3, data/store problems exit 4.
"""

from __future__ import annotations


class ShoresweepError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ShoresweepError):
    """Invalid or missing configuration."""


class ValidationError(ShoresweepError):
    """An input value violates a documented invariant."""


class ProviderError(ShoresweepError):
    """Base class for inference-provider failures."""


class TransportError(ProviderError):
    """The provider could not be reached (network, timeout, missing file)."""


class ProtocolError(ProviderError):
    """The provider responded, but the response violates the wire contract."""


class DataError(ShoresweepError):
    """Malformed survey data: undecodable images, bad CSV, unknown ids."""


class SurveyRunError(ShoresweepError):
    """Every image in a survey run failed; carries per-image causes."""

    def __init__(self, message: str, causes: dict[str, str] | None = None):
        super().__init__(message)
        self.causes = dict(causes or {})
