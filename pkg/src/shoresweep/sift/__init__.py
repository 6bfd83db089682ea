"""Scale-invariant feature extraction and matching, written from scratch.

This is the duplicate-evidence engine: crops of detected objects are reduced
to keypoints with 128-dimensional gradient descriptors, and two crops
showing the same physical object from different viewpoints accumulate many
ratio-test descriptor matches.
"""

from .extract import SiftDescriptorSet, SiftKeypoint, extract
from .matching import (
    MatchResult,
    descriptor_set_to_json,
    is_duplicate,
    match,
    match_descriptor_sets,
)

__all__ = [
    "SiftKeypoint",
    "SiftDescriptorSet",
    "MatchResult",
    "extract",
    "match",
    "match_descriptor_sets",
    "is_duplicate",
    "descriptor_set_to_json",
]
