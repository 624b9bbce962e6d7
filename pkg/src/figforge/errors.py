"""Exception taxonomy shared by every stage of the pipeline."""

from __future__ import annotations


class FigforgeError(Exception):
    """Base class for all errors raised by this package."""


class EmptyMask(FigforgeError):
    """A component mask with zero set bits where at least one is required."""


class DimensionMismatch(FigforgeError):
    """Raster dimensions of two inputs that must agree do not."""


class NoComponents(FigforgeError):
    """Segmentation produced nothing but background."""


class FullyTransparent(FigforgeError):
    """An RGBA asset has no pixel with alpha > 0."""


class ManifestCorrupt(FigforgeError):
    """manifest.json violates the fixed schema."""


class MissingArtifact(FigforgeError):
    """A file listed in the manifest does not exist on disk."""


class ParseError(FigforgeError):
    """SVG input is not well-formed or violates the subset grammar."""

    def __init__(self, line: int, col: int, reason: str):
        self.line = line
        self.col = col
        self.reason = reason
        super().__init__(f"{reason} (line {line}, col {col})")


class UnsupportedFeature(FigforgeError):
    """Well-formed SVG uses an element, attribute, or value outside the subset."""

    def __init__(self, name: str, line: int = 0, col: int = 0):
        self.name = name
        self.line = line
        self.col = col
        super().__init__(f"unsupported: {name} (line {line}, col {col})")


class NoSuchPlaceholder(FigforgeError):
    """Requested placeholder id is not present in the document."""


class MissingAsset(FigforgeError):
    """Injection is missing the asset for a placeholder id."""

    def __init__(self, af_id: int):
        self.af_id = af_id
        super().__init__(f"no asset for placeholder AF-{af_id}")


class DuplicateAsset(FigforgeError):
    """Two assets claim the same component id."""

    def __init__(self, af_id: int):
        self.af_id = af_id
        super().__init__(f"duplicate asset id {af_id}")


class EmptyInput(FigforgeError):
    """Generation requested with no usable text."""


class BackendError(FigforgeError):
    """A remote model backend failed after the retry policy was exhausted.

    ``kind`` is one of "timeout", "http", "exhausted", "protocol".
    ``attempts`` carries the per-try log when available.
    """

    def __init__(self, kind: str, detail: str = "", attempts: list | None = None):
        self.kind = kind
        self.detail = detail
        self.attempts = attempts or []
        super().__init__(f"backend {kind}: {detail}" if detail else f"backend {kind}")


class PipelineStageError(FigforgeError):
    """Wraps any stage failure with the name of the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage}: {cause}")


class JobLocked(FigforgeError):
    """Another pipeline run owns this job directory."""
