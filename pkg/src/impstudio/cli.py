"""Command-line entry points: `studio` (serve/predict/optimize/reflow),
standalone `reflow`, and `annotate-build`."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .annotation import SentinelRegistry, build_maps, ingest, parse_lines
from .design import design_from_json, design_to_dict, design_to_json
from .errors import StudioError
from .maps import ImportanceMap
from .optimizer import GAConfig, TargetSpec, optimize
from .predictor import ExternalPredictor, ReferencePredictor
from .reflow import load_library, reflow_design


def _make_predictor(kind: str, endpoint: str | None, map_size: int):
    if kind == "external":
        if not endpoint:
            raise click.UsageError("--predictor external requires --endpoint")
        return ExternalPredictor(endpoint)
    return ReferencePredictor(map_w=map_size, map_h=map_size)


def _load_design(path: str):
    try:
        return design_from_json(Path(path).read_text())
    except StudioError as exc:
        raise click.ClickException(str(exc)) from exc


def _write_json(path: str | None, obj) -> None:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    if path is None or path == "-":
        click.echo(text)
    else:
        Path(path).write_text(text)


predictor_options = [
    click.option("--predictor", "predictor_kind", type=click.Choice(["reference", "external"]), default="reference", show_default=True),
    click.option("--endpoint", default=None, help="External predictor base URL."),
    click.option("--map-size", default=256, show_default=True, help="Importance map resolution."),
]


def _apply_options(options):
    def wrap(f):
        for option in reversed(options):
            f = option(f)
        return f

    return wrap


@click.group()
def studio():
    """Importance-model design studio."""


@studio.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(config_path):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app, load_config

    cfg = load_config(config_path)
    uvicorn.run(create_app(cfg), host=cfg.host, port=cfg.port)


@studio.command("predict")
@click.option("--design", "design_path", required=True, type=click.Path(exists=True))
@_apply_options(predictor_options)
@click.option("--out", default=None, help="Write the map JSON here (default: stdout).")
@click.option("--png", default=None, help="Also write a grayscale PNG of the map.")
def predict_cmd(design_path, predictor_kind, endpoint, map_size, out, png):
    """Predict the importance map and per-element scores of a design."""
    design = _load_design(design_path)
    predictor = _make_predictor(predictor_kind, endpoint, map_size)
    try:
        imap = predictor.predict_map(design)
    except StudioError as exc:
        raise click.ClickException(str(exc)) from exc
    from .maps import element_score

    scores = {e.id: element_score(imap, e, design) for e in design.elements}
    _write_json(out, {"map": imap.to_dict(), "scores": scores})
    if png:
        Path(png).write_bytes(imap.to_png_bytes())


@studio.command("optimize")
@click.option("--design", "design_path", required=True, type=click.Path(exists=True))
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True), help="JSON file: element id -> target in [0,1].")
@click.option("--config", "ga_path", type=click.Path(exists=True), default=None, help="GAConfig JSON file.")
@_apply_options(predictor_options)
@click.option("--out", default=None, help="Write the optimized design JSON here (default: stdout).")
@click.option("--history", "history_path", default=None, help="Write per-epoch fitness history JSON here.")
def optimize_cmd(design_path, targets_path, ga_path, predictor_kind, endpoint, map_size, out, history_path):
    """Optimize a layout toward target importance scores."""
    design = _load_design(design_path)
    targets_raw = json.loads(Path(targets_path).read_text())
    cfg = GAConfig.from_json(Path(ga_path).read_text()) if ga_path else GAConfig()
    predictor = _make_predictor(predictor_kind, endpoint, map_size)

    def on_epoch(epoch, _design, report):
        click.echo(f"epoch {epoch + 1}/{cfg.epochs}: total={report.total:.6f} mse={report.mse:.6f}", err=True)

    try:
        result = optimize(design, TargetSpec(targets_raw), predictor, cfg, on_epoch=on_epoch)
    except (StudioError, ValueError, KeyError) as exc:
        raise click.ClickException(str(exc)) from exc
    _write_json(out, design_to_dict(result.best_design))
    if history_path:
        history = [
            {"epoch": h.epoch, "fitness": h.best.to_dict(), "population": h.population_size}
            for h in result.history
        ]
        _write_json(history_path, history)


def _reflow_impl(design_path, width, height, predictor_kind, endpoint, map_size, templates_dir, group_overflow, out, before_png, after_png):
    design = _load_design(design_path)
    predictor = _make_predictor(predictor_kind, endpoint, map_size)
    lib = load_library(templates_dir)
    try:
        imap = predictor.predict_map(design)
        result = reflow_design(design, imap, lib, width, height, group_overflow=group_overflow)
    except StudioError as exc:
        raise click.ClickException(str(exc)) from exc
    _write_json(out, design_to_dict(result))
    if before_png:
        Path(before_png).write_bytes(imap.to_png_bytes())
    if after_png:
        after_map: ImportanceMap = predictor.predict_map(result)
        Path(after_png).write_bytes(after_map.to_png_bytes())


reflow_options = [
    click.option("--design", "design_path", required=True, type=click.Path(exists=True)),
    click.option("--width", required=True, type=float),
    click.option("--height", required=True, type=float),
    *predictor_options,
    click.option("--templates", "templates_dir", type=click.Path(exists=True), default=None, help="Template directory (default: shipped)."),
    click.option("--group-overflow", is_flag=True, help="Merge lowest-ranked elements when no template matches the count."),
    click.option("--out", default=None, help="Write the reflowed design JSON here (default: stdout)."),
    click.option("--before-png", default=None, help="Write the input design's map PNG."),
    click.option("--after-png", default=None, help="Write the reflowed design's map PNG."),
]


@studio.command("reflow")
@_apply_options(reflow_options)
def studio_reflow_cmd(**kwargs):
    """Reflow a design to a new size, preserving importance ranks."""
    _reflow_impl(**kwargs)


@click.command("reflow")
@_apply_options(reflow_options)
def reflow_cmd(**kwargs):
    """Reflow a design to a new size, preserving importance ranks."""
    _reflow_impl(**kwargs)


@click.command("annotate-build")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True), help="JSON-lines mask file.")
@click.option("--sentinels", "sentinel_dir", required=True, type=click.Path(exists=True), help="Directory of sentinel ground-truth JSON files.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory.")
@click.option("--min-annotators", default=25, show_default=True)
@click.option("--iou-threshold", default=0.6, show_default=True)
@click.option("--pass-fraction", default=2 / 3, show_default=True)
def annotate_build(in_path, sentinel_dir, out_dir, min_annotators, iou_threshold, pass_fraction):
    """Turn raw annotation exports into quality-gated importance maps."""
    try:
        registry = SentinelRegistry.from_dir(sentinel_dir)
        with open(in_path) as f:
            batches = parse_lines(f)
        result = ingest(batches, registry, iou_threshold, pass_fraction)
        built = build_maps(result.accepted, min_annotators)
    except StudioError as exc:
        raise click.ClickException(str(exc)) from exc
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for design_id, imap in built.maps.items():
        (out / f"{design_id}.map.json").write_text(json.dumps(imap.to_dict(), sort_keys=True, separators=(",", ":")))
        (out / f"{design_id}.png").write_bytes(imap.to_png_bytes())
    report = {
        "designs": {
            design_id: {"annotators": c.annotators, "below_minimum": c.below_minimum}
            for design_id, c in built.coverage.items()
        },
        "accepted_participants": list(result.accepted_participants),
        "rejections": [
            {"participant_id": r.participant_id, "reason": r.reason, "ious": list(r.ious)}
            for r in result.rejections
        ],
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    click.echo(
        f"built {len(built.maps)} maps from {len(result.accepted_participants)} participants "
        f"({len(result.rejections)} rejected)"
    )


if __name__ == "__main__":
    studio(prog_name="studio")
