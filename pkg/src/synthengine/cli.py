"""`engine` command-line interface: one subcommand per pipeline stage."""

from __future__ import annotations

from pathlib import Path

import click

from synthengine import __version__
from synthengine.adapters import ingest_scores
from synthengine.calibration import (
    calibrate_semantic,
    calibrate_structural,
    read_labels,
    read_report,
    write_report,
)
from synthengine.cascade import (
    read_decisions,
    read_margins,
    read_prompt_bank,
    run_cascade,
    semantic_margins,
    structural_score,
    write_decisions,
    write_margins,
)
from synthengine.compose import compose_condition
from synthengine.config import load_control_space, load_pipeline_config
from synthengine.diagnostics import write_projection, write_summary
from synthengine.errors import EngineError
from synthengine.exports import (
    export_coco,
    export_yolo_pose,
    import_dataset,
    read_annotations,
    write_annotations,
)
from synthengine.planner import (
    IMAGE_EXTENSIONS,
    collect_generated,
    emit_plan,
    expand_plan,
    read_plan,
)
from synthengine.records import (
    SampleRecord,
    build_manifest,
    hash_content,
    read_manifest,
    resolve_image_path,
    write_manifest,
)
from synthengine.review.log import ReviewQueue, read_verdicts
from synthengine.review.service import make_server
from synthengine.scores import read_detections, read_embeddings, write_records


class _EngineGroup(click.Group):
    """Translate engine errors into clean exit messages."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except EngineError as exc:
            raise click.ClickException(str(exc)) from exc


@click.group(cls=_EngineGroup)
@click.version_option(version=__version__, prog_name="engine")
def main() -> None:
    """Curation engine for synthetic training data."""


@main.command("gen-plan")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def gen_plan(config_path: str, out_path: str) -> None:
    """Expand the control space into a generation plan (JSONL of job specs)."""
    space = load_control_space(config_path)
    jobs = expand_plan(space)
    emit_plan(jobs, out_path)
    click.echo(f"wrote {len(jobs)} jobs to {out_path}")


@main.command("gen-collect")
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--task", required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def gen_collect(plan_path: str, images_dir: str, task: str, out_path: str) -> None:
    """Verify generator output coverage and hash images into a synthetic manifest."""
    jobs = read_plan(plan_path)
    manifest = collect_generated(jobs, images_dir, task, out_path)
    write_manifest(manifest, out_path)
    click.echo(f"collected {len(manifest)} synthetic records into {out_path}")


@main.command("scan")
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--task", required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def scan(images_dir: str, task: str, out_path: str) -> None:
    """Hash an image folder into a real-anchor manifest."""
    root = Path(images_dir)
    out = Path(out_path)
    records = []
    for img in sorted(root.iterdir()):
        if not img.is_file() or img.suffix.lower() not in IMAGE_EXTENSIONS:
            continue
        try:
            rel = img.resolve().relative_to(out.parent.resolve()).as_posix()
        except ValueError:
            rel = str(img.resolve())
        records.append(
            SampleRecord(
                id=hash_content(img.read_bytes()),
                origin="real",
                scene_index=1,
                variation_index=1,
                control=None,
                image_path=rel,
            )
        )
    manifest = build_manifest(task, records)
    write_manifest(manifest, out_path)
    click.echo(f"scanned {len(manifest)} images into {out_path}")


@main.command("ingest")
@click.option("--mode", required=True, type=click.Choice(["embed", "detect"]))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--adapter", required=True, help="adapter command line (stdio protocol)")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--workers", default=1, show_default=True, type=int)
def ingest(mode: str, manifest_path: str, adapter: str, out_path: str, workers: int) -> None:
    """Run an external scorer adapter over a manifest and persist its records."""
    manifest = read_manifest(manifest_path)
    records = ingest_scores(manifest, manifest_path, adapter, mode, workers=workers)
    write_records(records, out_path)
    click.echo(f"ingested {len(records)} {mode} records into {out_path}")


@main.command("margins")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--embeddings", "emb_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--prompt-bank", "bank_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def margins_cmd(manifest_path: str, emb_path: str, bank_path: str, config_path: str, out_path: str) -> None:
    """Compute semantic margins for every record (calibration input)."""
    cfg = load_pipeline_config(config_path)
    manifest = read_manifest(manifest_path)
    bank = read_prompt_bank(bank_path)
    margins = semantic_margins(manifest, read_embeddings(emb_path), bank, cfg)
    write_margins(margins, out_path)
    click.echo(f"wrote {len(margins)} margins to {out_path}")


@main.command("calibrate")
@click.option("--margins", "margins_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--recall", default=0.95, show_default=True, type=float)
@click.option("--detections", "det_path", type=click.Path(exists=True, dir_okay=False),
              help="also calibrate structural thresholds from these anchor detections")
@click.option("--quantile", default=0.05, show_default=True, type=float)
@click.option("--kpt-conf", default=0.5, show_default=True, type=float)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def calibrate(margins_path, labels_path, recall, det_path, quantile, kpt_conf, out_path) -> None:
    """Derive the semantic threshold from labeled real anchors."""
    margins = read_margins(margins_path)
    labels = read_labels(labels_path)
    report = calibrate_semantic(margins, labels, recall)
    extra = None
    if det_path:
        struct_scores = {
            d.id: structural_score(d, kpt_conf) for d in read_detections(det_path)
        }
        tau_area, tau_kpt = calibrate_structural(struct_scores, labels, quantile)
        extra = {"tau_area": tau_area, "tau_kpt_count": tau_kpt, "struct_quantile": quantile}
    write_report(report, out_path, recall_target=recall, extra=extra)
    click.echo(
        f"tau_sem={report.tau_sem:.6g} recall={report.achieved_recall:.3f} "
        f"rejection={report.achieved_rejection:.3f} ({report.n_pos} pos / {report.n_neg} neg)"
    )


@main.command("filter")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--embeddings", "emb_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--detections", "det_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--prompt-bank", "bank_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--calibration", "report_path", type=click.Path(exists=True, dir_okay=False),
              help='calibration report supplying tau_sem when the config says "calibrate"')
@click.option("--out-clean", required=True, type=click.Path(dir_okay=False))
@click.option("--out-decisions", required=True, type=click.Path(dir_okay=False))
def filter_cmd(manifest_path, emb_path, det_path, bank_path, config_path, report_path,
               out_clean, out_decisions) -> None:
    """Run the two-stage cascade over a synthetic manifest."""
    cfg = load_pipeline_config(config_path)
    tau_sem = None
    if isinstance(cfg.tau_sem, str):
        if report_path is None:
            raise EngineError('config tau_sem is "calibrate": pass --calibration report.json')
        tau_sem = read_report(report_path).tau_sem
    manifest = read_manifest(manifest_path)
    clean, decisions = run_cascade(
        manifest,
        read_embeddings(emb_path),
        read_detections(det_path),
        read_prompt_bank(bank_path),
        cfg,
        tau_sem=tau_sem,
    )
    write_manifest(clean, out_clean)
    write_decisions(decisions, out_decisions)
    n_border = sum(1 for d in decisions if d.routing == "borderline")
    click.echo(
        f"{len(manifest)} in -> {len(clean)} clean "
        f"({n_border} borderline, {len(manifest) - len(clean) - n_border} rejected)"
    )


@main.command("compose")
@click.option("--condition", required=True, type=click.Choice(list("ABCDE"), case_sensitive=False))
@click.option("--real", "real_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--raw-syn", "raw_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--filtered-syn", "filtered_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--verdicts", "verdicts_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def compose(condition, real_path, raw_path, filtered_path, verdicts_path, out_path) -> None:
    """Build one of the five ablation training pools (A-E)."""
    pool = compose_condition(
        condition,
        real=read_manifest(real_path) if real_path else None,
        raw_syn=read_manifest(raw_path) if raw_path else None,
        filtered_syn=read_manifest(filtered_path) if filtered_path else None,
        verdicts=read_verdicts(verdicts_path) if verdicts_path else None,
    )
    write_manifest(pool, out_path)
    click.echo(f"condition {condition.upper()}: {len(pool)} records -> {out_path}")


@main.command("export")
@click.option("--format", "fmt", required=True, type=click.Choice(["yolo", "coco"]))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--annotations", "ann_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--symlink-images", is_flag=True, default=False)
def export(fmt, manifest_path, ann_path, out_path, symlink_images) -> None:
    """Export a manifest + annotations as a YOLO pose tree or COCO keypoints JSON."""
    manifest = read_manifest(manifest_path)
    annotations = read_annotations(ann_path)
    if fmt == "yolo":
        export_yolo_pose(manifest, annotations, manifest_path, out_path, symlink_images=symlink_images)
    else:
        export_coco(manifest, annotations, out_path)
    click.echo(f"exported {len(manifest)} records ({fmt}) to {out_path}")


@main.command("import")
@click.option("--path", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out-manifest", required=True, type=click.Path(dir_okay=False))
@click.option("--out-annotations", required=True, type=click.Path(dir_okay=False))
def import_cmd(in_path, out_manifest, out_annotations) -> None:
    """Import a YOLO export directory or COCO JSON back into engine artifacts."""
    manifest, annotations = import_dataset(in_path)
    write_manifest(manifest, out_manifest)
    write_annotations(annotations.values(), out_annotations)
    click.echo(f"imported {len(manifest)} records from {in_path}")


@main.command("diag")
@click.option("--real-embs", "real_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--syn-embs", "syn_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-summary", required=True, type=click.Path(dir_okay=False))
@click.option("--out-proj", required=True, type=click.Path(dir_okay=False))
def diag(real_path, syn_path, out_summary, out_proj) -> None:
    """Domain-gap summary (Frechet, coverage) and a 2-D projection CSV."""
    real = read_embeddings(real_path)
    syn = read_embeddings(syn_path)
    summary = write_summary(real, syn, out_summary)
    write_projection(real, syn, out_proj)
    click.echo(
        f"frechet_gap={summary['frechet_gap']:.6g} nn_coverage={summary['nn_coverage']:.3f}"
    )


@main.group()
def review() -> None:
    """Human borderline-review loop."""


@review.command("serve")
@click.option("--decisions", "decisions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(dir_okay=False))
@click.option("--addr", default="127.0.0.1:8787", show_default=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False),
              help="manifest used to resolve image paths for queued ids")
@click.option("--policy", default="borderline_only", show_default=True,
              type=click.Choice(["borderline_only", "borderline_and_rejected"]))
def review_serve(decisions_path, images_dir, log_path, addr, manifest_path, policy) -> None:
    """Enqueue reviewable decisions and serve the review API + UI."""
    queue = ReviewQueue(log_path)
    decisions = read_decisions(decisions_path)
    image_paths: dict[str, str] = {}
    if manifest_path:
        manifest = read_manifest(manifest_path)
        resolved = Path(manifest_path).resolve()
        image_paths = {
            r.id: str(resolve_image_path(resolved, r)) for r in manifest.records
        }
    added = queue.enqueue(decisions, policy=policy, image_paths=image_paths)
    stats = queue.stats()
    click.echo(f"enqueued {added} new items; queue: {stats}")
    server = make_server(addr, queue, images_dir)
    click.echo(f"review service listening on http://{addr}/ (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        click.echo("shutting down")
    finally:
        server.server_close()


@review.command("export")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def review_export(log_path, out_path) -> None:
    """Export adjudicated verdicts (JSONL, canonical id order)."""
    queue = ReviewQueue(log_path)
    count = queue.export_verdicts(out_path)
    click.echo(f"exported {count} verdicts to {out_path}")


if __name__ == "__main__":
    main()
