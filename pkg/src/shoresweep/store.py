"""Survey persistence and the survey data products.

A store is a directory: one SQLite file for surveys, images, records,
duplicate groups, and the correction audit log, plus a ``blobs/``
directory of content-addressed image bytes. Surveys are small (about a
thousand images per flight), so an embedded database is plenty; all
access serializes through one connection guarded by a lock, which
gives single-writer, multi-reader semantics for free.

The CSV export is the interchange format: its column order is fixed,
floats are written with ``repr`` so they survive a round trip bit for
bit, and rows are sorted, making repeated exports byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import sqlite3
import threading
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from PIL import Image

from .dedup import DedupResult, DuplicateGroup
from .errors import DataError, ValidationError
from .geolocate import GeoPoint, ImageMeta, cluster_hotspots
from .geometry import PixelBox
from .images import crop as crop_image
from .images import decode_image
from .pipeline import DebrisRecord
from .providers import ClassDistribution, LabelSchema

EXPORT_COLUMNS = (
    "record_id", "image_id", "x_min", "y_min", "x_max", "y_max", "score",
    "label", "corrected", "latitude", "longitude", "altitude",
    "duplicate_group", "is_canonical",
)

GPS_LAT_REF, GPS_LAT = 1, 2
GPS_LON_REF, GPS_LON = 3, 4
GPS_ALT_REF, GPS_ALT = 5, 6
GPS_IMG_DIRECTION = 17
EXIF_DATETIME = 306
EXIF_GPS_IFD = 0x8825

SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS surveys (
    survey_id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS images (
    image_id TEXT PRIMARY KEY,
    survey_id TEXT NOT NULL,
    filename TEXT,
    width INTEGER,
    height INTEGER,
    latitude REAL,
    longitude REAL,
    altitude REAL,
    heading REAL,
    captured_at TEXT,
    unmapped INTEGER NOT NULL,
    blob_sha TEXT
);
CREATE TABLE IF NOT EXISTS records (
    record_id TEXT PRIMARY KEY,
    survey_id TEXT NOT NULL,
    image_id TEXT NOT NULL,
    x_min REAL NOT NULL,
    y_min REAL NOT NULL,
    x_max REAL NOT NULL,
    y_max REAL NOT NULL,
    score REAL NOT NULL,
    predicted_label TEXT NOT NULL,
    corrected_label TEXT,
    latitude REAL,
    longitude REAL,
    duplicate_group TEXT,
    is_canonical INTEGER NOT NULL,
    distribution TEXT
);
CREATE TABLE IF NOT EXISTS corrections (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    record_id TEXT NOT NULL,
    old_label TEXT NOT NULL,
    new_label TEXT NOT NULL,
    corrected_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS dup_groups (
    survey_id TEXT NOT NULL,
    group_id TEXT NOT NULL,
    canonical TEXT NOT NULL,
    members TEXT NOT NULL,
    edges TEXT NOT NULL,
    PRIMARY KEY (survey_id, group_id)
);
CREATE INDEX IF NOT EXISTS idx_records_survey ON records (survey_id, image_id, record_id);
CREATE INDEX IF NOT EXISTS idx_images_survey ON images (survey_id, image_id);
"""


@dataclass(frozen=True)
class StoredImage:
    image_id: str
    survey_id: str
    filename: Optional[str]
    width: Optional[int]
    height: Optional[int]
    meta: Optional[ImageMeta]
    altitude: Optional[float]
    unmapped: bool
    has_blob: bool


@dataclass(frozen=True)
class CorrectionEntry:
    seq: int
    record_id: str
    old_label: str
    new_label: str
    corrected_at: str


def _rational(value) -> float:
    if isinstance(value, tuple) and len(value) == 2:
        num, den = value
        if den == 0:
            raise ValueError("zero denominator")
        return num / den
    return float(value)


def _dms_to_degrees(values, ref: str) -> float:
    d, m, s = (_rational(v) for v in values)
    degrees = d + m / 60.0 + s / 3600.0
    if ref in ("S", "W"):
        degrees = -degrees
    return degrees


def extract_capture_meta(im: Image.Image) -> Optional[ImageMeta]:
    """Pull position, altitude, and heading from embedded EXIF GPS tags.

    Returns None when any of latitude, longitude, or a positive
    altitude is missing or unparseable; such images stay unmapped.
    Heading defaults to 0 (north-up) when GPSImgDirection is absent.
    """
    try:
        exif = im.getexif()
        gps = exif.get_ifd(EXIF_GPS_IFD)
    except Exception:
        return None
    if not gps:
        return None
    try:
        lat_ref, lat = gps.get(GPS_LAT_REF), gps.get(GPS_LAT)
        lon_ref, lon = gps.get(GPS_LON_REF), gps.get(GPS_LON)
        alt = gps.get(GPS_ALT)
        if lat is None or lon is None or lat_ref is None or lon_ref is None or alt is None:
            return None
        latitude = _dms_to_degrees(lat, str(lat_ref))
        longitude = _dms_to_degrees(lon, str(lon_ref))
        altitude = _rational(alt)
        alt_ref = gps.get(GPS_ALT_REF, 0)
        if isinstance(alt_ref, bytes):
            alt_ref = alt_ref[0] if alt_ref else 0
        if int(alt_ref) == 1:
            altitude = -altitude
        heading = 0.0
        if GPS_IMG_DIRECTION in gps:
            heading = _rational(gps[GPS_IMG_DIRECTION])
        captured_at = exif.get(EXIF_DATETIME)
        return ImageMeta(
            latitude=latitude,
            longitude=longitude,
            altitude=altitude,
            heading=heading,
            captured_at=str(captured_at) if captured_at else None,
        )
    except (ValueError, TypeError, ZeroDivisionError, ValidationError):
        return None


def _format_float(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _format_bool(value: bool) -> str:
    return "true" if value else "false"


class SurveyStore:
    """Directory-backed persistence for surveys and their records."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.blob_dir = self.root / "blobs"
        self.blob_dir.mkdir(exist_ok=True)
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(str(self.root / "survey.db"), check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        with self._lock, self._conn:
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.executescript(SCHEMA_SQL)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def __enter__(self) -> "SurveyStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # surveys

    def create_survey(self, name: Optional[str] = None, survey_id: Optional[str] = None) -> str:
        survey_id = survey_id or f"s{uuid.uuid4().hex[:10]}"
        with self._lock, self._conn:
            existing = self._conn.execute(
                "SELECT survey_id FROM surveys WHERE survey_id = ?", (survey_id,)
            ).fetchone()
            if existing:
                raise DataError(f"survey {survey_id!r} already exists")
            self._conn.execute(
                "INSERT INTO surveys (survey_id, name, created_at) VALUES (?, ?, ?)",
                (survey_id, name or survey_id, datetime.now(timezone.utc).isoformat()),
            )
        return survey_id

    def survey_exists(self, survey_id: str) -> bool:
        with self._lock:
            row = self._conn.execute(
                "SELECT 1 FROM surveys WHERE survey_id = ?", (survey_id,)
            ).fetchone()
        return row is not None

    def _require_survey(self, survey_id: str) -> None:
        if not self.survey_exists(survey_id):
            raise DataError(f"unknown survey {survey_id!r}")

    def surveys(self) -> "list[dict]":
        with self._lock:
            rows = self._conn.execute(
                """SELECT s.survey_id, s.name, s.created_at,
                          (SELECT COUNT(*) FROM images i WHERE i.survey_id = s.survey_id) AS images,
                          (SELECT COUNT(*) FROM records r WHERE r.survey_id = s.survey_id) AS records
                   FROM surveys s ORDER BY s.created_at, s.survey_id"""
            ).fetchall()
        return [dict(row) for row in rows]

    # images

    def ingest_image(
        self, survey_id: str, data: bytes, filename: Optional[str] = None
    ) -> StoredImage:
        """Store image bytes and whatever GPS metadata they carry.

        The image id is a content hash, so re-ingesting identical bytes
        into the same survey is a no-op. The same bytes in a different
        survey are rejected: record ids derive from image ids and must
        stay unique across the store.
        """
        self._require_survey(survey_id)
        sha = hashlib.sha256(data).hexdigest()
        image_id = sha[:16]
        try:
            with Image.open(io.BytesIO(data)) as im:
                width, height = im.size
                meta = extract_capture_meta(im)
        except DataError:
            raise
        except Exception as exc:
            raise DataError(f"cannot decode image {filename or image_id!r}: {exc}") from exc
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT survey_id FROM images WHERE image_id = ?", (image_id,)
            ).fetchone()
            if row is not None:
                if row["survey_id"] != survey_id:
                    raise DataError(
                        f"image {image_id} already belongs to survey {row['survey_id']!r}"
                    )
                return self.image(image_id)
            blob_path = self.blob_dir / sha
            if not blob_path.exists():
                blob_path.write_bytes(data)
            self._conn.execute(
                """INSERT INTO images (image_id, survey_id, filename, width, height,
                                       latitude, longitude, altitude, heading, captured_at,
                                       unmapped, blob_sha)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)""",
                (
                    image_id, survey_id, filename, width, height,
                    meta.latitude if meta else None,
                    meta.longitude if meta else None,
                    meta.altitude if meta else None,
                    meta.heading if meta else None,
                    meta.captured_at if meta else None,
                    0 if meta else 1,
                    sha,
                ),
            )
        return self.image(image_id)

    def _image_from_row(self, row: sqlite3.Row) -> StoredImage:
        meta = None
        if not row["unmapped"] and row["latitude"] is not None:
            meta = ImageMeta(
                latitude=row["latitude"],
                longitude=row["longitude"],
                altitude=row["altitude"],
                heading=row["heading"] if row["heading"] is not None else 0.0,
                captured_at=row["captured_at"],
            )
        return StoredImage(
            image_id=row["image_id"],
            survey_id=row["survey_id"],
            filename=row["filename"],
            width=row["width"],
            height=row["height"],
            meta=meta,
            altitude=row["altitude"],
            unmapped=bool(row["unmapped"]),
            has_blob=row["blob_sha"] is not None,
        )

    def image(self, image_id: str) -> StoredImage:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM images WHERE image_id = ?", (image_id,)
            ).fetchone()
        if row is None:
            raise DataError(f"unknown image {image_id!r}")
        return self._image_from_row(row)

    def images(self, survey_id: str) -> "list[StoredImage]":
        self._require_survey(survey_id)
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM images WHERE survey_id = ? ORDER BY image_id", (survey_id,)
            ).fetchall()
        return [self._image_from_row(row) for row in rows]

    def image_bytes(self, image_id: str) -> bytes:
        with self._lock:
            row = self._conn.execute(
                "SELECT blob_sha FROM images WHERE image_id = ?", (image_id,)
            ).fetchone()
        if row is None:
            raise DataError(f"unknown image {image_id!r}")
        if row["blob_sha"] is None:
            raise DataError(f"image {image_id} has no stored bytes (imported from CSV)")
        path = self.blob_dir / row["blob_sha"]
        try:
            return path.read_bytes()
        except OSError as exc:
            raise DataError(f"blob for image {image_id} is missing: {exc}") from exc

    # records

    def save_records(self, survey_id: str, records: Sequence[DebrisRecord]) -> int:
        """Replace the survey's records in one transaction.

        Stale duplicate groups and correction entries die with the
        records they described.
        """
        self._require_survey(survey_id)
        rows = []
        for r in records:
            dist = None
            if r.class_distribution is not None:
                dist = json.dumps(
                    {
                        "probabilities": r.class_distribution.label_probabilities,
                        "renormalized": r.class_distribution.renormalized,
                    }
                )
            rows.append(
                (
                    r.record_id, survey_id, r.source_image_id,
                    r.box.x_min, r.box.y_min, r.box.x_max, r.box.y_max,
                    r.detection_score, r.predicted_label, r.corrected_label,
                    r.geo_position.latitude if r.geo_position else None,
                    r.geo_position.longitude if r.geo_position else None,
                    r.duplicate_group, 1 if r.is_canonical else 0, dist,
                )
            )
        with self._lock, self._conn:
            self._conn.execute(
                "DELETE FROM corrections WHERE record_id IN "
                "(SELECT record_id FROM records WHERE survey_id = ?)",
                (survey_id,),
            )
            self._conn.execute("DELETE FROM records WHERE survey_id = ?", (survey_id,))
            self._conn.execute("DELETE FROM dup_groups WHERE survey_id = ?", (survey_id,))
            self._conn.executemany(
                """INSERT INTO records VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)""",
                rows,
            )
        return len(rows)

    def _record_from_row(self, row: sqlite3.Row) -> DebrisRecord:
        dist = None
        if row["distribution"]:
            raw = json.loads(row["distribution"])
            dist = ClassDistribution(
                raw["probabilities"], renormalized=raw.get("renormalized", False)
            )
        geo = None
        if row["latitude"] is not None and row["longitude"] is not None:
            geo = GeoPoint(row["latitude"], row["longitude"])
        return DebrisRecord(
            record_id=row["record_id"],
            source_image_id=row["image_id"],
            box=PixelBox(row["x_min"], row["y_min"], row["x_max"], row["y_max"]),
            detection_score=row["score"],
            predicted_label=row["predicted_label"],
            class_distribution=dist,
            corrected_label=row["corrected_label"],
            geo_position=geo,
            duplicate_group=row["duplicate_group"],
            is_canonical=bool(row["is_canonical"]),
        )

    def records(
        self, survey_id: str, offset: int = 0, limit: Optional[int] = None
    ) -> "list[DebrisRecord]":
        self._require_survey(survey_id)
        sql = "SELECT * FROM records WHERE survey_id = ? ORDER BY image_id, record_id"
        params: list = [survey_id]
        if limit is not None:
            sql += " LIMIT ? OFFSET ?"
            params += [limit, offset]
        with self._lock:
            rows = self._conn.execute(sql, params).fetchall()
        return [self._record_from_row(row) for row in rows]

    def record_count(self, survey_id: str) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT COUNT(*) AS n FROM records WHERE survey_id = ?", (survey_id,)
            ).fetchone()
        return row["n"]

    def get_record(self, record_id: str) -> "tuple[str, DebrisRecord]":
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM records WHERE record_id = ?", (record_id,)
            ).fetchone()
        if row is None:
            raise DataError(f"unknown record {record_id!r}")
        return row["survey_id"], self._record_from_row(row)

    def delete_record(self, record_id: str) -> None:
        with self._lock, self._conn:
            cur = self._conn.execute("DELETE FROM records WHERE record_id = ?", (record_id,))
            if cur.rowcount == 0:
                raise DataError(f"unknown record {record_id!r}")
            self._conn.execute("DELETE FROM corrections WHERE record_id = ?", (record_id,))

    def record_crop(self, record_id: str) -> np.ndarray:
        """Decode the source image and cut out the record's box."""
        _, record = self.get_record(record_id)
        data = self.image_bytes(record.source_image_id)
        return crop_image(decode_image(data), record.box)

    # corrections

    def correct_label(self, record_id: str, new_label: str, schema: LabelSchema) -> DebrisRecord:
        """Set a record's corrected label, audit-logged and idempotent.

        Repeating the current correction changes nothing and logs
        nothing, so replaying the audit log over the original
        predictions always reproduces the stored labels.
        """
        if new_label not in schema:
            raise ValidationError(
                f"label {new_label!r} is not in the schema; valid labels: {list(schema)}"
            )
        with self._lock, self._conn:
            survey_id, record = self.get_record(record_id)
            if record.corrected_label == new_label:
                return record
            old = record.label
            self._conn.execute(
                "UPDATE records SET corrected_label = ? WHERE record_id = ?",
                (new_label, record_id),
            )
            self._conn.execute(
                "INSERT INTO corrections (record_id, old_label, new_label, corrected_at) "
                "VALUES (?, ?, ?, ?)",
                (record_id, old, new_label, datetime.now(timezone.utc).isoformat()),
            )
        return replace(record, corrected_label=new_label)

    def corrections(self, survey_id: Optional[str] = None) -> "list[CorrectionEntry]":
        sql = "SELECT * FROM corrections"
        params: tuple = ()
        if survey_id is not None:
            sql += (
                " WHERE record_id IN (SELECT record_id FROM records WHERE survey_id = ?)"
            )
            params = (survey_id,)
        sql += " ORDER BY seq"
        with self._lock:
            rows = self._conn.execute(sql, params).fetchall()
        return [
            CorrectionEntry(
                seq=row["seq"],
                record_id=row["record_id"],
                old_label=row["old_label"],
                new_label=row["new_label"],
                corrected_at=row["corrected_at"],
            )
            for row in rows
        ]

    # duplicate groups

    def save_dedup(self, survey_id: str, result: DedupResult) -> None:
        """Persist group annotations and the group evidence."""
        self._require_survey(survey_id)
        with self._lock, self._conn:
            self._conn.execute("DELETE FROM dup_groups WHERE survey_id = ?", (survey_id,))
            for r in result.records:
                self._conn.execute(
                    "UPDATE records SET duplicate_group = ?, is_canonical = ? "
                    "WHERE record_id = ?",
                    (r.duplicate_group, 1 if r.is_canonical else 0, r.record_id),
                )
            for g in result.groups:
                self._conn.execute(
                    "INSERT INTO dup_groups (survey_id, group_id, canonical, members, edges) "
                    "VALUES (?, ?, ?, ?, ?)",
                    (
                        survey_id, g.group_id, g.canonical,
                        json.dumps(list(g.members)),
                        json.dumps([list(e) for e in g.edges]),
                    ),
                )

    def duplicate_groups(self, survey_id: str) -> "list[DuplicateGroup]":
        self._require_survey(survey_id)
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM dup_groups WHERE survey_id = ? ORDER BY group_id", (survey_id,)
            ).fetchall()
        return [
            DuplicateGroup(
                group_id=row["group_id"],
                members=tuple(json.loads(row["members"])),
                canonical=row["canonical"],
                edges=tuple(tuple(e) for e in json.loads(row["edges"])),
            )
            for row in rows
        ]

    # exports

    def export_csv(self, survey_id: str) -> bytes:
        """The survey as CSV; identical surveys export identical bytes."""
        self._require_survey(survey_id)
        with self._lock:
            rows = self._conn.execute(
                """SELECT r.*, i.altitude AS image_altitude
                   FROM records r LEFT JOIN images i ON r.image_id = i.image_id
                   WHERE r.survey_id = ?
                   ORDER BY r.image_id, r.record_id""",
                (survey_id,),
            ).fetchall()
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\r\n")
        writer.writerow(EXPORT_COLUMNS)
        for row in rows:
            label = row["corrected_label"] or row["predicted_label"]
            writer.writerow(
                [
                    row["record_id"],
                    row["image_id"],
                    _format_float(row["x_min"]),
                    _format_float(row["y_min"]),
                    _format_float(row["x_max"]),
                    _format_float(row["y_max"]),
                    _format_float(row["score"]),
                    label,
                    _format_bool(row["corrected_label"] is not None),
                    _format_float(row["latitude"]),
                    _format_float(row["longitude"]),
                    _format_float(row["image_altitude"]),
                    row["duplicate_group"] or "",
                    _format_bool(bool(row["is_canonical"])),
                ]
            )
        return out.getvalue().encode("utf-8")

    def import_csv(
        self,
        data: bytes,
        schema: LabelSchema,
        survey_id: Optional[str] = None,
        name: Optional[str] = None,
    ) -> str:
        """Rebuild a survey from an export.

        Image rows are stubs carrying only the altitude column; the
        bytes themselves are not part of the CSV, so crops and dedup
        are unavailable on an imported survey.
        """
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"CSV is not UTF-8: {exc}") from exc
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("CSV is empty") from None
        if tuple(header) != EXPORT_COLUMNS:
            for position, expected in enumerate(EXPORT_COLUMNS):
                got = header[position] if position < len(header) else None
                if got != expected:
                    raise DataError(
                        f"CSV header mismatch at column {position + 1}: "
                        f"expected {expected!r}, got {got!r}"
                    )
            raise DataError(f"CSV header has {len(header)} columns, expected {len(EXPORT_COLUMNS)}")

        records = []
        image_altitudes: dict = {}
        seen: set = set()
        for line, row in enumerate(reader, start=2):
            if len(row) != len(EXPORT_COLUMNS):
                raise DataError(
                    f"line {line}: expected {len(EXPORT_COLUMNS)} fields, got {len(row)}"
                )
            fields = dict(zip(EXPORT_COLUMNS, row))
            if fields["record_id"] in seen:
                raise DataError(f"line {line}: duplicate record id {fields['record_id']!r}")
            seen.add(fields["record_id"])
            if fields["label"] not in schema:
                raise DataError(
                    f"line {line}: label {fields['label']!r} is not in the schema"
                )
            if fields["corrected"] not in ("true", "false"):
                raise DataError(f"line {line}: corrected must be true or false")
            if fields["is_canonical"] not in ("true", "false"):
                raise DataError(f"line {line}: is_canonical must be true or false")
            try:
                box = PixelBox(
                    float(fields["x_min"]), float(fields["y_min"]),
                    float(fields["x_max"]), float(fields["y_max"]),
                )
                score = float(fields["score"])
                geo = None
                if fields["latitude"] or fields["longitude"]:
                    geo = GeoPoint(float(fields["latitude"]), float(fields["longitude"]))
                altitude = float(fields["altitude"]) if fields["altitude"] else None
            except (ValueError, ValidationError) as exc:
                raise DataError(f"line {line}: {exc}") from exc
            corrected = fields["corrected"] == "true"
            records.append(
                DebrisRecord(
                    record_id=fields["record_id"],
                    source_image_id=fields["image_id"],
                    box=box,
                    detection_score=score,
                    predicted_label=fields["label"],
                    corrected_label=fields["label"] if corrected else None,
                    geo_position=geo,
                    duplicate_group=fields["duplicate_group"] or None,
                    is_canonical=fields["is_canonical"] == "true",
                )
            )
            if altitude is not None:
                image_altitudes.setdefault(fields["image_id"], altitude)
            else:
                image_altitudes.setdefault(fields["image_id"], None)

        with self._lock, self._conn:
            for record in records:
                existing = self._conn.execute(
                    "SELECT 1 FROM records WHERE record_id = ?", (record.record_id,)
                ).fetchone()
                if existing:
                    raise DataError(
                        f"record {record.record_id!r} already exists in this store"
                    )
        new_survey = self.create_survey(name=name, survey_id=survey_id)
        with self._lock, self._conn:
            for image_id in sorted(image_altitudes):
                existing = self._conn.execute(
                    "SELECT survey_id FROM images WHERE image_id = ?", (image_id,)
                ).fetchone()
                if existing:
                    raise DataError(
                        f"image {image_id!r} already belongs to survey "
                        f"{existing['survey_id']!r}"
                    )
                self._conn.execute(
                    """INSERT INTO images (image_id, survey_id, filename, width, height,
                                           latitude, longitude, altitude, heading,
                                           captured_at, unmapped, blob_sha)
                       VALUES (?, ?, NULL, NULL, NULL, NULL, NULL, ?, NULL, NULL, 1, NULL)""",
                    (image_id, new_survey, image_altitudes[image_id]),
                )
        self.save_records(new_survey, records)
        return new_survey

    def export_geojson(
        self,
        survey_id: str,
        colors: dict,
        cluster_eps_m: float = 10.0,
        cluster_min_pts: int = 3,
    ) -> bytes:
        """Canonical and ungrouped records as a FeatureCollection.

        Coordinates follow the GeoJSON [longitude, latitude] order.
        Records without a position are counted in a collection-level
        property instead of emitted.
        """
        self._require_survey(survey_id)
        survivors = [r for r in self.records(survey_id) if r.is_canonical]
        mapped = [r for r in survivors if r.geo_position is not None]
        mapped.sort(key=lambda r: r.record_id)
        labels = cluster_hotspots(
            [r.geo_position for r in mapped], eps=cluster_eps_m, min_pts=cluster_min_pts
        )
        features = []
        for record, cluster_id in zip(mapped, labels):
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Point",
                        "coordinates": [
                            record.geo_position.longitude,
                            record.geo_position.latitude,
                        ],
                    },
                    "properties": {
                        "record_id": record.record_id,
                        "image_id": record.source_image_id,
                        "label": record.label,
                        "score": record.detection_score,
                        "cluster_id": cluster_id,
                        "color": colors.get(record.label, "#000000"),
                    },
                }
            )
        doc = {
            "type": "FeatureCollection",
            "properties": {"unmapped_records": len(survivors) - len(mapped)},
            "features": features,
        }
        return json.dumps(doc, indent=2, sort_keys=True).encode("utf-8")

    def stats(
        self,
        survey_id: str,
        schema: LabelSchema,
        cluster_eps_m: float = 10.0,
        cluster_min_pts: int = 3,
    ) -> dict:
        """Per-class counts and cluster summaries over the deduplicated
        survey, for plots."""
        self._require_survey(survey_id)
        all_records = self.records(survey_id)
        survivors = [r for r in all_records if r.is_canonical]
        class_counts = {label: 0 for label in schema}
        for r in survivors:
            if r.label in class_counts:
                class_counts[r.label] += 1
        mapped = [r for r in survivors if r.geo_position is not None]
        mapped.sort(key=lambda r: r.record_id)
        labels = cluster_hotspots(
            [r.geo_position for r in mapped], eps=cluster_eps_m, min_pts=cluster_min_pts
        )
        clusters: dict = {}
        for record, cluster_id in zip(mapped, labels):
            if cluster_id is None:
                continue
            clusters.setdefault(cluster_id, []).append(record)
        cluster_rows = []
        for cluster_id in sorted(clusters):
            members = clusters[cluster_id]
            lat = sum(r.geo_position.latitude for r in members) / len(members)
            lon = sum(r.geo_position.longitude for r in members) / len(members)
            label_counts: dict = {}
            for r in members:
                label_counts[r.label] = label_counts.get(r.label, 0) + 1
            cluster_rows.append(
                {
                    "cluster_id": cluster_id,
                    "size": len(members),
                    "center": [lat, lon],
                    "labels": dict(sorted(label_counts.items())),
                }
            )
        return {
            "total_records": len(all_records),
            "canonical_records": len(survivors),
            "unmapped_records": sum(1 for r in survivors if r.geo_position is None),
            "duplicate_groups": len(self.duplicate_groups(survey_id)),
            "classes": class_counts,
            "clusters": cluster_rows,
        }
