"""Inference server for the shoresweep survey engine.

Exposes zero-shot detection and classification behind the two-endpoint
wire protocol (POST /v1/detect, POST /v1/classify, GET /v1/health) so
the survey engine never links against ML frameworks. ``--fake`` swaps
the models for a deterministic stand-in, which is what integration
tests run against.
"""

from .app import create_app
from .config import SidecarConfig
from .protocol import load_protocol_schema

__all__ = ["SidecarConfig", "create_app", "load_protocol_schema"]
