"""Survey report rendering: figures and stats next to the CSV export.

Figures are drawn straight onto Agg canvases, never through pyplot, so
rendering works headless and leaves no global state behind.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Union

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from matplotlib.lines import Line2D
from matplotlib.patches import Circle

from .config import SurveyConfig
from .geolocate import METERS_PER_DEG_LAT, haversine
from .store import SurveyStore

FIGURE_DPI = 120


def _class_distribution_figure(stats: dict, config: SurveyConfig) -> Figure:
    labels = list(config.labels)
    counts = [stats["classes"].get(label, 0) for label in labels]
    colors = [config.color_for(label) for label in labels]
    fig = Figure(figsize=(8, 4.5), dpi=FIGURE_DPI)
    ax = fig.add_subplot(111)
    bars = ax.bar(range(len(labels)), counts, color=colors)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("objects")
    ax.set_title("Debris objects per class (after duplicate removal)")
    for bar, count in zip(bars, counts):
        ax.annotate(
            str(count),
            (bar.get_x() + bar.get_width() / 2, bar.get_height()),
            ha="center", va="bottom", fontsize=9,
        )
    fig.tight_layout()
    return fig


def _debris_map_figure(store: SurveyStore, survey_id: str, config: SurveyConfig) -> Figure:
    records = [
        r for r in store.records(survey_id) if r.is_canonical and r.geo_position is not None
    ]
    records.sort(key=lambda r: r.record_id)
    fig = Figure(figsize=(8, 8), dpi=FIGURE_DPI)
    ax = fig.add_subplot(111)
    ax.set_title("Debris map")
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    if not records:
        ax.text(0.5, 0.5, "no geolocated records", ha="center", va="center",
                transform=ax.transAxes)
        return fig

    from .geolocate import cluster_hotspots

    points = [r.geo_position for r in records]
    labels = cluster_hotspots(points, eps=config.cluster_eps_m, min_pts=config.cluster_min_pts)
    seen_classes = []
    for record in records:
        if record.label not in seen_classes:
            seen_classes.append(record.label)
        ax.scatter(
            record.geo_position.longitude,
            record.geo_position.latitude,
            color=config.colors.get(record.label, "#000000"),
            s=36, zorder=3,
        )

    clusters: dict = {}
    for point, cluster_id in zip(points, labels):
        if cluster_id is not None:
            clusters.setdefault(cluster_id, []).append(point)
    mean_lat = sum(p.latitude for p in points) / len(points)
    lon_scale = max(math.cos(math.radians(mean_lat)), 1e-9)
    for cluster_id in sorted(clusters):
        members = clusters[cluster_id]
        center_lat = sum(p.latitude for p in members) / len(members)
        center_lon = sum(p.longitude for p in members) / len(members)
        from .geolocate import GeoPoint

        center = GeoPoint(center_lat, center_lon)
        spread = max(haversine(center, p) for p in members)
        radius_deg = (spread + config.cluster_eps_m / 2) / METERS_PER_DEG_LAT
        ax.add_patch(
            Circle(
                (center_lon, center_lat), radius_deg,
                fill=False, linestyle="--", edgecolor="#555555", zorder=2,
            )
        )
        ax.annotate(
            f"cluster {cluster_id}", (center_lon, center_lat + radius_deg),
            ha="center", va="bottom", fontsize=8, color="#555555",
        )

    handles = [
        Line2D([], [], marker="o", linestyle="", color=config.colors.get(label, "#000000"),
               label=label)
        for label in config.labels if label in seen_classes
    ]
    if handles:
        ax.legend(handles=handles, loc="upper right", fontsize=8)
    # One degree of longitude shrinks by cos(latitude); square up the meters.
    ax.set_aspect(1.0 / lon_scale)
    ax.ticklabel_format(useOffset=False, style="plain")
    fig.tight_layout()
    return fig


def render_report(
    store: SurveyStore,
    survey_id: str,
    out_dir: Union[str, Path],
    config: SurveyConfig,
) -> "dict[str, Path]":
    """Write the survey's data products into ``out_dir``.

    Produces records.csv, stats.json, class_distribution.png, and
    debris_map.png; returns the paths keyed by artifact name.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema = config.schema()
    stats = store.stats(
        survey_id, schema,
        cluster_eps_m=config.cluster_eps_m,
        cluster_min_pts=config.cluster_min_pts,
    )

    paths = {}
    csv_path = out / "records.csv"
    csv_path.write_bytes(store.export_csv(survey_id))
    paths["csv"] = csv_path

    stats_path = out / "stats.json"
    stats_path.write_text(json.dumps(stats, indent=2, sort_keys=True), encoding="utf-8")
    paths["stats"] = stats_path

    dist_path = out / "class_distribution.png"
    fig = _class_distribution_figure(stats, config)
    FigureCanvasAgg(fig).print_png(str(dist_path))
    paths["class_distribution"] = dist_path

    map_path = out / "debris_map.png"
    fig = _debris_map_figure(store, survey_id, config)
    FigureCanvasAgg(fig).print_png(str(map_path))
    paths["debris_map"] = map_path
    return paths
