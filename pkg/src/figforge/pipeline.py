"""Five-stage orchestration: draft, segment, index, extract, template+refine,
inject — every stage boundary is a file in the job directory, so runs are
debuggable, resumable, and streamable artifact by artifact.
"""

from __future__ import annotations

import os
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from figforge import assets as assets_mod
from figforge import backends as backends_mod
from figforge import indexer, pngio, refiner, segmenter
from figforge.errors import (
    EmptyInput,
    JobLocked,
    PipelineStageError,
)
from figforge.injector import inject_assets, verify_editable_figure
from figforge.model import (
    STAGE_FILES,
    STAGE_ORDER,
    DraftProvenance,
    PipelineManifest,
    RasterDraft,
    SourceText,
    StyleReference,
    load_manifest,
    save_manifest,
)
from figforge.svgkit import ValidationReport, parse_svg, serialize_svg, validate_template

_LOCK_NAME = "job.lock"
REFINE_LOG = "refine.log.json"


@dataclass
class PipelineConfig:
    output_dir: Path
    segmenter: segmenter.SegmenterConfig = field(default_factory=segmenter.SegmenterConfig)
    matting: assets_mod.MattingConfig = field(default_factory=assets_mod.MattingConfig)
    max_iterations: int = 2
    position_tolerance: float = 0.05
    target_dims: tuple[int, int] = (384, 384)
    mock: bool = True
    seed: int | None = None
    # "mock", a BackendDescriptor, or a ready backend object per kind.
    backends: dict = field(default_factory=dict)
    transport: Callable | None = None
    progress: Callable[[str], None] | None = None

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _artifact_present(job_dir: Path, stage: str) -> bool:
    path = job_dir / STAGE_FILES[stage]
    if stage in ("segmentation", "assets"):
        return (path / "index.json").exists()
    return path.exists()


class _Lock:
    def __init__(self, job_dir: Path):
        self.path = job_dir / _LOCK_NAME

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise JobLocked(f"{self.path} exists; another run owns this job") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


class _Run:
    """One pipeline execution over a job directory.

    Each stage either loads its artifact from disk (reuse) or computes and
    persists it. State accumulates in attributes so later stages can reach
    earlier results without re-reading files.
    """

    def __init__(self, cfg: PipelineConfig, job_dir: Path):
        self.cfg = cfg
        self.job_dir = job_dir
        self.draft: RasterDraft | None = None
        self.seg = None
        self.indexed = None
        self.assets = None
        self.template_doc = None
        self.refined_doc = None
        self.refinement_iterations = 0
        self.text: SourceText | None = None
        self.style: StyleReference | None = None
        self.timestamps: dict[str, str] = {}
        self.ran: list[str] = []

    # -- backend resolution ------------------------------------------------

    def _t2i(self):
        configured = self.cfg.backends.get("t2i", "mock" if self.cfg.mock else None)
        if configured == "mock":
            return backends_mod.MockT2i()
        if isinstance(configured, backends_mod.BackendDescriptor):
            return backends_mod.RemoteT2i(configured, self.cfg.transport)
        if configured is None:
            return backends_mod.resolve_t2i(False, self.cfg.transport)
        return configured

    def _vlm(self):
        configured = self.cfg.backends.get("vlm", "mock" if self.cfg.mock else None)
        if configured == "mock":
            return backends_mod.MockVlm(self.seg)
        if isinstance(configured, backends_mod.BackendDescriptor):
            return backends_mod.RemoteVlm(configured, self.cfg.transport)
        if configured is None:
            return backends_mod.resolve_vlm(False, self.seg, self.cfg.transport)
        return configured

    # -- stages --------------------------------------------------------------

    def run_stage(self, stage: str) -> None:
        if self.cfg.progress:
            self.cfg.progress(stage)
        try:
            getattr(self, f"_run_{stage}")()
        except PipelineStageError:
            raise
        except Exception as exc:
            raise PipelineStageError(stage, exc) from exc
        self.timestamps[stage] = _now()
        self.ran.append(stage)

    def load_stage(self, stage: str) -> None:
        try:
            getattr(self, f"_load_{stage}")()
        except Exception as exc:
            raise PipelineStageError(stage, exc) from exc

    def _run_draft(self) -> None:
        req = backends_mod.T2iRequest(
            self.text, self.style, self.cfg.target_dims, self.cfg.seed
        )
        self.draft = backends_mod.generate_raster_draft(req, self._t2i())
        pngio.save_rgb(self.draft.pixels, self.job_dir / STAGE_FILES["draft"])

    def _load_draft(self) -> None:
        pixels = pngio.load_rgb(self.job_dir / STAGE_FILES["draft"])
        self.draft = RasterDraft(pixels, DraftProvenance("disk", None))

    def _run_segmentation(self) -> None:
        raw = segmenter.segment(self.draft, self.cfg.segmenter)
        self.seg = segmenter.filter_and_merge(raw, self.cfg.segmenter)
        segmenter.save_segmentation(self.seg, self.job_dir / "masks")

    def _load_segmentation(self) -> None:
        self.seg = segmenter.load_segmentation(self.job_dir / "masks")

    def _run_indexed(self) -> None:
        dims = (self.draft.width, self.draft.height)
        self.indexed = indexer.build_indexed_layout(dims, self.seg)
        indexer.save_indexed_layout(self.indexed, self.job_dir / STAGE_FILES["indexed"])

    def _load_indexed(self) -> None:
        self.indexed = indexer.load_indexed_layout(self.job_dir / STAGE_FILES["indexed"])

    def _run_assets(self) -> None:
        self.assets = assets_mod.extract_all(self.draft, self.seg, self.cfg.matting)
        assets_mod.save_assets(self.assets, self.job_dir / "assets")

    def _load_assets(self) -> None:
        self.assets = assets_mod.load_assets(self.job_dir / "assets")

    def _run_template(self) -> None:
        text = backends_mod.generate_svg_template(self.indexed, self.seg.k_count, self._vlm())
        doc = parse_svg(text)
        report = validate_template(doc, self.seg.k_count)
        if not report.ok:
            raise ValueError(
                "template validation failed: "
                + "; ".join(f.message for f in report.findings)
            )
        self.template_doc = doc
        (self.job_dir / STAGE_FILES["template"]).write_text(
            serialize_svg(doc), encoding="utf-8"
        )

    def _load_template(self) -> None:
        text = (self.job_dir / STAGE_FILES["template"]).read_text(encoding="utf-8")
        self.template_doc = parse_svg(text)

    def _run_refined(self) -> None:
        ctx = refiner.RefinementContext(
            draft=self.draft,
            indexed=self.indexed,
            seg=self.seg,
            current=self.template_doc,
            max_iterations=self.cfg.max_iterations,
            position_tolerance=self.cfg.position_tolerance,
        )
        refined, log = refiner.refine_template(ctx, self._vlm())
        self.refined_doc = refined
        self.refinement_iterations = log.calls
        (self.job_dir / STAGE_FILES["refined"]).write_text(
            serialize_svg(refined), encoding="utf-8"
        )
        log.save(self.job_dir / REFINE_LOG)

    def _load_refined(self) -> None:
        text = (self.job_dir / STAGE_FILES["refined"]).read_text(encoding="utf-8")
        self.refined_doc = parse_svg(text)
        log_path = self.job_dir / REFINE_LOG
        if log_path.exists():
            import json

            self.refinement_iterations = json.loads(log_path.read_text())["calls"]

    def _run_final(self) -> None:
        figure = inject_assets(self.refined_doc, self.assets, self.job_dir.name)
        report = verify_editable_figure(figure, self.seg.k_count)
        if not report.ok:
            raise ValueError(
                "final figure verification failed: "
                + "; ".join(f.message for f in report.findings)
            )
        (self.job_dir / STAGE_FILES["final"]).write_text(
            serialize_svg(figure.doc), encoding="utf-8"
        )

    def _load_final(self) -> None:
        pass

    # -- manifest --------------------------------------------------------------

    def manifest(self, job_id: str) -> PipelineManifest:
        return PipelineManifest(
            job_id=job_id,
            k_count=self.seg.k_count,
            stage_artifacts=dict(STAGE_FILES),
            style_hash=self.style.content_hash if self.style is not None else None,
            refinement_iterations=self.refinement_iterations,
            timestamps=dict(self.timestamps),
        )


def _execute(run: _Run, start_index: int, job_id: str) -> PipelineManifest:
    job_dir = run.job_dir
    job_dir.mkdir(parents=True, exist_ok=True)
    with _Lock(job_dir):
        for stage in STAGE_ORDER[:start_index]:
            run.load_stage(stage)
        for stage in STAGE_ORDER[start_index:]:
            run.run_stage(stage)
        manifest = run.manifest(job_id)
        save_manifest(manifest, job_dir / "manifest.json")
    return manifest


def run_pipeline(
    text: SourceText, style: StyleReference | None, cfg: PipelineConfig,
    job_id: str | None = None,
) -> PipelineManifest:
    """Full generation: Stages I-V from text (and optional style reference)."""
    if text.is_blank:
        raise EmptyInput("generation text is empty")
    run = _Run(cfg, cfg.output_dir)
    run.text = text
    run.style = style
    return _execute(run, 0, job_id or cfg.output_dir.name or uuid.uuid4().hex)


def vectorize_existing(
    image: RasterDraft, cfg: PipelineConfig, job_id: str | None = None
) -> PipelineManifest:
    """Conversion path: the provided raster becomes the draft; Stages II-V run."""
    run = _Run(cfg, cfg.output_dir)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    pngio.save_rgb(image.pixels, cfg.output_dir / STAGE_FILES["draft"])
    run.timestamps["draft"] = _now()
    run.draft = image
    return _execute(run, 1, job_id or cfg.output_dir.name or uuid.uuid4().hex)


def resume_job(
    job_dir: str | Path, cfg: PipelineConfig, stage_log: list[str] | None = None
) -> PipelineManifest:
    """Re-run only stages whose artifacts are missing, and everything after
    them — a completed stage is never reused once an upstream stage has been
    regenerated."""
    job_dir = Path(job_dir)
    manifest = load_manifest(job_dir / "manifest.json", check_artifacts=False)
    missing = [s for s in STAGE_ORDER if not _artifact_present(job_dir, s)]
    if not missing:
        if stage_log is not None:
            stage_log.clear()
        return manifest
    start_index = STAGE_ORDER.index(missing[0])

    run = _Run(cfg, job_dir)
    run.timestamps = dict(manifest.timestamps)
    for stage in STAGE_ORDER[start_index:]:
        run.timestamps.pop(stage, None)
    run.refinement_iterations = manifest.refinement_iterations
    result = _execute(run, start_index, manifest.job_id)
    if stage_log is not None:
        stage_log[:] = run.ran
    return result


def verify_job(job_dir: str | Path) -> ValidationReport:
    """Re-run every validator over a completed job's artifacts."""
    job_dir = Path(job_dir)
    report = ValidationReport()
    try:
        manifest = load_manifest(job_dir / "manifest.json", check_artifacts=True)
    except Exception as exc:
        report.add("ManifestError", None, str(exc))
        return report
    k = manifest.k_count

    for stage in ("template", "refined"):
        try:
            doc = parse_svg((job_dir / STAGE_FILES[stage]).read_text(encoding="utf-8"))
        except Exception as exc:
            report.add("ParseError", None, f"{stage}: {exc}")
            continue
        for finding in validate_template(doc, k).findings:
            report.findings.append(finding)

    try:
        final_doc = parse_svg((job_dir / STAGE_FILES["final"]).read_text(encoding="utf-8"))
    except Exception as exc:
        report.add("ParseError", None, f"final: {exc}")
    else:
        for finding in verify_editable_figure(final_doc, k).findings:
            report.findings.append(finding)

    try:
        seg = segmenter.load_segmentation(job_dir / "masks")
        loaded_assets = assets_mod.load_assets(job_dir / "assets")
        seg_ids = {m.id for m, _ in seg.components}
        asset_ids = {a.id for a in loaded_assets}
        if seg_ids != asset_ids:
            report.add("IdentityMismatch", None,
                       f"mask ids {sorted(seg_ids)} != asset ids {sorted(asset_ids)}")
        if seg.k_count != k:
            report.add("IdentityMismatch", None,
                       f"manifest k_count {k} != segmentation {seg.k_count}")
    except Exception as exc:
        report.add("ArtifactError", None, str(exc))
    return report
