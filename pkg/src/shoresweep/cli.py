"""Command line for the survey engine.

Exit codes signal the failure class so scripts can branch on them:
2 for configuration problems, 3 for provider failures (unreachable
endpoint, broken wire contract), 4 for bad data. With --json the
error also lands on stderr as a machine-readable document.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path
from typing import Optional

import click

from .config import SurveyConfig, load_config
from .dedup import dedup_survey
from .errors import (
    ConfigError,
    DataError,
    ProviderError,
    ShoresweepError,
    SurveyRunError,
    ValidationError,
)
from .evaluation import evaluate_records, load_annotations_csv, load_annotations_json
from .images import crop as crop_image
from .images import decode_image
from .pipeline import SurveyImage, run_survey
from .report import render_report
from .store import SurveyStore

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")
PROVIDER_CAUSE_PREFIXES = ("TransportError", "ProtocolError", "ProviderError")


def exit_code_for(exc: ShoresweepError) -> int:
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, SurveyRunError):
        causes = list(exc.causes.values())
        if causes and all(c.startswith(PROVIDER_CAUSE_PREFIXES) for c in causes):
            return 3
        return 4
    if isinstance(exc, ProviderError):
        return 3
    if isinstance(exc, (DataError, ValidationError)):
        return 4
    return 1


def guarded(fn):
    """Translate engine errors into exit codes and stderr output."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ShoresweepError as exc:
            code = exit_code_for(exc)
            ctx = click.get_current_context(silent=True)
            as_json = bool(ctx and ctx.obj and ctx.obj.get("json"))
            if as_json:
                doc = {
                    "error": {
                        "type": type(exc).__name__,
                        "message": str(exc),
                        "exit_code": code,
                    }
                }
                if isinstance(exc, SurveyRunError):
                    doc["error"]["causes"] = exc.causes
                click.echo(json.dumps(doc, sort_keys=True), err=True)
            else:
                click.echo(f"error: {exc}", err=True)
            raise SystemExit(code)

    return wrapper


def open_store(obj) -> SurveyStore:
    return SurveyStore(obj["store_path"])


def load_cfg(obj) -> SurveyConfig:
    return load_config(obj["config_path"])


def warn(message: str) -> None:
    click.echo(f"warning: {message}", err=True)


@click.group()
@click.option(
    "--store",
    "store_path",
    envvar="SHORESWEEP_STORE",
    default="./shoresweep-data",
    show_default=True,
    help="Survey store directory (env: SHORESWEEP_STORE).",
)
@click.option(
    "--config",
    "config_path",
    envvar="SHORESWEEP_CONFIG",
    default=None,
    help="YAML config file (env: SHORESWEEP_CONFIG); defaults apply when omitted.",
)
@click.option("--json", "as_json", is_flag=True, help="Emit errors as JSON on stderr.")
@click.version_option(package_name="shoresweep")
@click.pass_context
def main(ctx, store_path: str, config_path: Optional[str], as_json: bool) -> None:
    """Detect, geolocate, deduplicate, and map debris in aerial survey imagery."""
    ctx.obj = {"store_path": store_path, "config_path": config_path, "json": as_json}


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--survey", "survey_id", required=True, help="Survey id; created when missing.")
@click.pass_obj
@guarded
def ingest(obj, directory: str, survey_id: str) -> None:
    """Load the images in DIRECTORY into a survey, reading GPS tags."""
    store = open_store(obj)
    if not store.survey_exists(survey_id):
        store.create_survey(survey_id=survey_id)
    paths = sorted(
        p for p in Path(directory).iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not paths:
        raise DataError(f"no .jpg/.jpeg/.png files in {directory}")
    mapped = 0
    failed = []
    for path in paths:
        try:
            image = store.ingest_image(survey_id, path.read_bytes(), filename=path.name)
        except DataError as exc:
            failed.append(path.name)
            click.echo(f"error: {path.name}: {exc}", err=True)
            continue
        position = "unmapped"
        if image.meta is not None:
            mapped += 1
            position = f"{image.meta.latitude:.6f},{image.meta.longitude:.6f} alt {image.meta.altitude:g} m"
        click.echo(f"{image.image_id}  {path.name}  {position}")
    click.echo(f"{len(paths) - len(failed)} image(s) in survey {survey_id}, {mapped} with GPS")
    if failed:
        raise DataError(f"{len(failed)} file(s) failed to ingest: {', '.join(failed)}")


@main.command()
@click.option("--survey", "survey_id", required=True)
@click.option("--workers", type=int, default=None, help="Override the configured worker count.")
@click.pass_obj
@guarded
def detect(obj, survey_id: str, workers: Optional[int]) -> None:
    """Run detection and classification over a survey's images.

    Records replace the survey's previous results only when the run
    produces any; a run that fails outright leaves the store untouched.
    """
    config = load_cfg(obj)
    store = open_store(obj)
    inputs = [
        SurveyImage(i.image_id, store.image_bytes(i.image_id), i.meta)
        for i in store.images(survey_id)
        if i.has_blob
    ]
    if not inputs:
        raise DataError(f"survey {survey_id!r} has no images with stored bytes")
    provider = config.build_provider(on_warning=warn)
    run = run_survey(
        inputs,
        config.pipeline(),
        provider,
        provider,
        camera=config.camera,
        workers=workers or config.workers,
        on_progress=None,
    )
    store.save_records(survey_id, run.records)
    click.echo(f"{len(run.records)} record(s) from {len(run.processed)} image(s)")
    for image_id, cause in sorted(run.failures.items()):
        click.echo(f"error: image {image_id} failed: {cause}", err=True)


@main.command()
@click.option("--survey", "survey_id", required=True)
@click.option("--radius", type=float, default=None, help="Override the pairing radius in meters.")
@click.option("--min-matches", type=int, default=None, help="Override the feature-match cutoff.")
@click.pass_obj
@guarded
def dedup(obj, survey_id: str, radius: Optional[float], min_matches: Optional[int]) -> None:
    """Group records that show the same physical object twice."""
    config = load_cfg(obj)
    store = open_store(obj)
    records = store.records(survey_id)
    if not records:
        raise DataError(f"survey {survey_id!r} has no records; run detect first")
    crops = {}
    by_image: dict = {}
    for record in records:
        by_image.setdefault(record.source_image_id, []).append(record)
    for image_id, image_records in by_image.items():
        try:
            image = decode_image(store.image_bytes(image_id))
        except DataError:
            continue
        for record in image_records:
            crops[record.record_id] = crop_image(image, record.box)
    result = dedup_survey(
        records,
        crops,
        min_matches=min_matches if min_matches is not None else config.dedup_min_matches,
        radius_m=radius if radius is not None else config.dedup_radius_m,
        on_warning=warn,
    )
    store.save_dedup(survey_id, result)
    st = result.stats
    click.echo(
        f"{len(result.groups)} duplicate group(s) among {len(records)} record(s); "
        f"{len(result.survivors)} kept"
    )
    click.echo(
        f"pairs: {st.candidate_pairs} within radius, {st.compared_pairs} compared; "
        f"skipped {len(st.skipped_unmapped)} unmapped, {len(st.skipped_no_crop)} without pixels"
    )
    for group in result.groups:
        members = ", ".join(
            f"{m}*" if m == group.canonical else m for m in group.members
        )
        click.echo(f"{group.group_id}: {members}")


@main.command()
@click.option("--survey", "survey_id", required=True)
@click.option(
    "--format", "fmt", type=click.Choice(["csv", "geojson"]), default="csv", show_default=True
)
@click.option(
    "-o", "--output", type=click.Path(dir_okay=False), default=None,
    help="Write to a file instead of stdout.",
)
@click.pass_obj
@guarded
def export(obj, survey_id: str, fmt: str, output: Optional[str]) -> None:
    """Write the survey's records as CSV or GeoJSON."""
    config = load_cfg(obj)
    store = open_store(obj)
    if fmt == "csv":
        data = store.export_csv(survey_id)
    else:
        data = store.export_geojson(
            survey_id,
            config.colors,
            cluster_eps_m=config.cluster_eps_m,
            cluster_min_pts=config.cluster_min_pts,
        )
    if output is None:
        sys.stdout.buffer.write(data)
    else:
        Path(output).write_bytes(data)
        click.echo(f"wrote {len(data)} bytes to {output}")


@main.command("import")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--survey", "survey_id", default=None, help="Id for the new survey.")
@click.option("--name", default=None)
@click.pass_obj
@guarded
def import_csv(obj, csv_file: str, survey_id: Optional[str], name: Optional[str]) -> None:
    """Rebuild a survey from a CSV export."""
    config = load_cfg(obj)
    store = open_store(obj)
    new_id = store.import_csv(
        Path(csv_file).read_bytes(), config.schema(), survey_id=survey_id, name=name
    )
    count = store.record_count(new_id)
    click.echo(f"imported {count} record(s) into survey {new_id}")


@main.command()
@click.option("--survey", "survey_id", required=True)
@click.option(
    "--truth", "truth_file", required=True, type=click.Path(exists=True, dir_okay=False),
    help="Ground truth annotations (.json or .csv).",
)
@click.option(
    "--optimal", is_flag=True,
    help="Globally optimal box assignment instead of greedy best-first.",
)
@click.pass_obj
@guarded
def evaluate(obj, survey_id: str, truth_file: str, optimal: bool) -> None:
    """Score the survey's records against ground truth boxes."""
    config = load_cfg(obj)
    store = open_store(obj)
    schema = config.schema()
    data = Path(truth_file).read_bytes()
    suffix = Path(truth_file).suffix.lower()
    if suffix == ".json":
        truths = load_annotations_json(data, schema)
    elif suffix == ".csv":
        truths = load_annotations_csv(data, schema)
    else:
        raise DataError(f"truth file must be .json or .csv, got {truth_file!r}")
    report = evaluate_records(store.records(survey_id), truths, schema, optimal=optimal)

    def cell(value) -> str:
        return "n/a" if value is None else f"{value:.3f}"

    if not obj["json"]:
        click.echo(f"{'metric':<18} value")
        click.echo(f"{'mean_iou':<18} {cell(report.mean_iou)}")
        click.echo(f"{'matched_mean_iou':<18} {cell(report.matched_mean_iou)}")
        click.echo(f"{'accuracy':<18} {cell(report.accuracy)}")
        click.echo(f"{'macro_f1':<18} {cell(report.macro_f1)}")
        click.echo(
            f"{'matched':<18} {report.matched_pairs} "
            f"(+{report.unmatched_predictions} spurious, {report.unmatched_truths} missed)"
        )
        for label, scores in report.per_class.items():
            click.echo(
                f"  {label:<16} P {cell(scores['precision'])}  "
                f"R {cell(scores['recall'])}  F1 {cell(scores['f1'])}"
            )
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--survey", "survey_id", required=True)
@click.option(
    "-o", "--output", "out_dir", type=click.Path(file_okay=False), default=None,
    help="Report directory (default: ./<survey>-report).",
)
@click.pass_obj
@guarded
def report(obj, survey_id: str, out_dir: Optional[str]) -> None:
    """Render the survey's figures and data files into a directory."""
    config = load_cfg(obj)
    store = open_store(obj)
    target = Path(out_dir) if out_dir else Path(f"./{survey_id}-report")
    paths = render_report(store, survey_id, target, config)
    for name in sorted(paths):
        click.echo(f"{name}: {paths[name]}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option(
    "--frontend", type=click.Path(file_okay=False), default=None,
    help="Directory of built web assets to serve at /.",
)
@click.pass_obj
@guarded
def serve(obj, host: str, port: int, frontend: Optional[str]) -> None:
    """Start the HTTP API (and optionally the web UI) over the store."""
    import uvicorn

    from .service import create_app

    config = load_cfg(obj)
    store = open_store(obj)
    app = create_app(store, config, frontend_dir=Path(frontend) if frontend else None)
    click.echo(f"serving survey API on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.pass_obj
@guarded
def surveys(obj) -> None:
    """List the surveys in the store."""
    store = open_store(obj)
    rows = store.surveys()
    if not rows:
        click.echo("no surveys")
        return
    for row in rows:
        click.echo(
            f"{row['survey_id']}  {row['name']}  "
            f"{row['images']} image(s), {row['records']} record(s)"
        )


if __name__ == "__main__":
    main()
