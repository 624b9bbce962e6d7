"""figforge: text + style reference in, editable component-grouped SVG out.

The pipeline runs in five stages — raster draft, segmentation + indexed
layout, asset extraction, SVG template generation + refinement, asset
injection — with every stage boundary persisted as a file, deterministic
offline mocks for both model backends, a job service, and a feedback
report.
"""

from figforge.model import (
    BoundingBox,
    ComponentMask,
    PipelineManifest,
    RasterDraft,
    RgbaAsset,
    SegmentationResult,
    SourceText,
    StyleReference,
)
from figforge.pipeline import (
    PipelineConfig,
    resume_job,
    run_pipeline,
    vectorize_existing,
    verify_job,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "ComponentMask",
    "PipelineConfig",
    "PipelineManifest",
    "RasterDraft",
    "RgbaAsset",
    "SegmentationResult",
    "SourceText",
    "StyleReference",
    "resume_job",
    "run_pipeline",
    "vectorize_existing",
    "verify_job",
    "__version__",
]
