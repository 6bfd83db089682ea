"""Cross-image duplicate removal.

Overlapping flight lines photograph the same object several times. A
geographic grid index prunes candidate pairs to those within a small
radius, the keypoint matcher votes on each surviving pair, and matched
pairs are merged into duplicate groups from which one canonical record
survives. Pairs beyond the radius are never compared; ``DedupStats``
carries the counter that proves it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .geolocate import METERS_PER_DEG_LAT, GeoPoint, haversine
from .images import to_grayscale
from .pipeline import DebrisRecord
from .sift import extract, match_descriptor_sets
from .sift.extract import MIN_PYRAMID_DIM

DEFAULT_RADIUS_M = 5.0
DEFAULT_MIN_MATCHES = 50


class SpatialIndex:
    """Uniform geographic grid over record positions.

    Cells are at least ``cell_size_m`` on each side (the longitude
    width uses the most poleward indexed latitude, so cells only grow
    toward the equator). A radius query scans enough neighboring cell
    rings to cover the radius and filters exactly by haversine
    distance. Longitude cell columns wrap at the antimeridian.
    """

    def __init__(self, points: Mapping[str, GeoPoint], cell_size_m: float = DEFAULT_RADIUS_M):
        if cell_size_m <= 0:
            raise ValidationError("cell_size_m must be positive")
        self._points = dict(points)
        self._cell_m = float(cell_size_m)
        self._lat_step = self._cell_m / METERS_PER_DEG_LAT
        max_abs_lat = max((abs(p.latitude) for p in self._points.values()), default=0.0)
        cos_lat = max(math.cos(math.radians(max_abs_lat)), 1e-9)
        self._lon_step = self._cell_m / (METERS_PER_DEG_LAT * cos_lat)
        self._n_cols = max(1, math.ceil(360.0 / self._lon_step))
        self._cells: dict = {}
        for record_id in sorted(self._points):
            self._cells.setdefault(self._cell(self._points[record_id]), []).append(record_id)

    def __len__(self) -> int:
        return len(self._points)

    def __contains__(self, record_id: object) -> bool:
        return record_id in self._points

    def _cell(self, p: GeoPoint) -> tuple:
        row = math.floor(p.latitude / self._lat_step)
        col = math.floor(p.longitude / self._lon_step) % self._n_cols
        return row, col

    def neighbors(self, query: GeoPoint, radius_m: float, exclude: Optional[str] = None) -> list:
        """Record ids within ``radius_m`` of ``query`` (inclusive), sorted."""
        if radius_m <= 0:
            raise ValidationError("radius_m must be positive")
        rings = max(1, math.ceil(radius_m / self._cell_m))
        row0, col0 = self._cell(query)
        found = []
        for dr in range(-rings, rings + 1):
            for dc in range(-rings, rings + 1):
                cell = (row0 + dr, (col0 + dc) % self._n_cols)
                for record_id in self._cells.get(cell, ()):
                    if record_id == exclude:
                        continue
                    if haversine(query, self._points[record_id]) <= radius_m:
                        found.append(record_id)
        return sorted(set(found))


def candidates_within(
    index: SpatialIndex,
    query: GeoPoint,
    radius_m: float = DEFAULT_RADIUS_M,
    exclude: Optional[str] = None,
) -> list:
    """Records within ``radius_m`` meters of ``query``, boundary inclusive,
    excluding the querying record's own id."""
    return index.neighbors(query, radius_m, exclude=exclude)


def pair_budget(points: Mapping[str, GeoPoint], radius_m: float = DEFAULT_RADIUS_M) -> int:
    """Number of unordered pairs dedup would compare at this radius."""
    index = SpatialIndex(points, cell_size_m=radius_m)
    count = 0
    for record_id in sorted(points):
        for other in index.neighbors(points[record_id], radius_m, exclude=record_id):
            if other > record_id:
                count += 1
    return count


@dataclass(frozen=True)
class DuplicateGroup:
    """Connected component of the pairwise duplicate relation."""

    group_id: str
    members: tuple
    canonical: str
    edges: tuple

    def __post_init__(self) -> None:
        if len(self.members) < 2:
            raise ValidationError("a duplicate group needs at least 2 members")
        if self.canonical not in self.members:
            raise ValidationError("canonical record must be a group member")


@dataclass(frozen=True)
class DedupStats:
    """Evidence of the pruning contract for tests and reports."""

    candidate_pairs: int
    compared_pairs: int
    skipped_unmapped: tuple
    skipped_no_crop: tuple


@dataclass(frozen=True)
class DedupResult:
    records: tuple
    groups: tuple
    stats: DedupStats

    @property
    def survivors(self) -> tuple:
        """Canonical and ungrouped records, the deduplicated survey."""
        return tuple(r for r in self.records if r.is_canonical)


def _descriptors(crop: np.ndarray):
    gray = to_grayscale(crop)
    if min(gray.shape) * 2 < MIN_PYRAMID_DIM:
        return None
    return extract(gray)


def _canonical_order(record: DebrisRecord) -> tuple:
    return (-record.detection_score, -record.box.area, record.record_id)


def dedup_survey(
    records: Sequence[DebrisRecord],
    crops: Mapping[str, np.ndarray],
    min_matches: int = DEFAULT_MIN_MATCHES,
    radius_m: float = DEFAULT_RADIUS_M,
    on_warning: Optional[Callable] = None,
    on_progress: Optional[Callable] = None,
) -> DedupResult:
    """Find duplicate groups and pick one canonical record per group.

    Only pairs within ``radius_m`` meters are keypoint-compared; each
    is scored symmetrically and pairs reaching ``min_matches`` become
    edges whose connected components form the groups. The canonical
    member has the highest detection score, ties broken by larger box
    area then record id. Records without a geo position or usable crop
    are kept as-is and never matched. Prior group annotations are
    cleared first, so rerunning on a previous output is idempotent.
    """
    if min_matches < 1:
        raise ValidationError("min_matches must be at least 1")
    items = [replace(r, duplicate_group=None, is_canonical=True) for r in records]
    by_id = {r.record_id: r for r in items}
    if len(by_id) != len(items):
        raise ValidationError("duplicate record ids in dedup input")

    warn = on_warning if on_warning is not None else (lambda msg: None)
    skipped_unmapped = tuple(sorted(r.record_id for r in items if r.geo_position is None))
    if skipped_unmapped:
        warn(f"{len(skipped_unmapped)} records without geo positions are excluded from dedup")
    matchable_no_crop = []
    points = {}
    for r in items:
        if r.geo_position is None:
            continue
        if r.record_id not in crops:
            matchable_no_crop.append(r.record_id)
            continue
        points[r.record_id] = r.geo_position
    for record_id in matchable_no_crop:
        warn(f"record {record_id}: no crop available, kept without duplicate check")

    index = SpatialIndex(points, cell_size_m=radius_m)
    descriptor_cache: dict = {}
    undersized: set = set()

    def descriptors_for(record_id: str):
        if record_id in undersized:
            return None
        if record_id not in descriptor_cache:
            sets = _descriptors(crops[record_id])
            if sets is None:
                undersized.add(record_id)
                warn(f"record {record_id}: crop too small for keypoints, kept as unique")
                return None
            descriptor_cache[record_id] = sets
        return descriptor_cache[record_id]

    compared = 0
    edges = []
    pair_list = []
    for record_id in sorted(points):
        for other in index.neighbors(points[record_id], radius_m, exclude=record_id):
            if other > record_id:
                pair_list.append((record_id, other))
    for done, (a, b) in enumerate(pair_list):
        da, db = descriptors_for(a), descriptors_for(b)
        if da is None or db is None:
            continue
        compared += 1
        result = match_descriptor_sets(da, db)
        if result.match_count >= min_matches:
            edges.append((a, b, result.match_count))
        if on_progress is not None:
            on_progress(done + 1, len(pair_list))

    parent = {record_id: record_id for record_id in points}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b, _ in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    components: dict = {}
    for record_id in points:
        components.setdefault(find(record_id), []).append(record_id)

    groups = []
    for members in sorted((sorted(m) for m in components.values() if len(m) > 1)):
        group_id = f"g{len(groups) + 1:04d}"
        canonical = min(members, key=lambda rid: _canonical_order(by_id[rid]))
        group_edges = tuple(e for e in edges if e[0] in members)
        groups.append(
            DuplicateGroup(
                group_id=group_id,
                members=tuple(members),
                canonical=canonical,
                edges=group_edges,
            )
        )
        for rid in members:
            by_id[rid] = replace(
                by_id[rid], duplicate_group=group_id, is_canonical=(rid == canonical)
            )

    ordered = tuple(
        sorted(by_id.values(), key=lambda r: (r.source_image_id, r.record_id))
    )
    stats = DedupStats(
        candidate_pairs=len(pair_list),
        compared_pairs=compared,
        skipped_unmapped=skipped_unmapped,
        skipped_no_crop=tuple(sorted(matchable_no_crop)),
    )
    return DedupResult(records=ordered, groups=tuple(groups), stats=stats)
