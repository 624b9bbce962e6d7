"""Shared domain types and the pure geometric primitives every stage uses.

Coordinate convention throughout the package: top-left origin, y grows
downward, pixel (x, y) has its center at (x + 0.5, y + 0.5).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from figforge.errors import EmptyMask, ManifestCorrupt, MissingArtifact

# Pipeline stage names in execution order, with their canonical artifact paths
# (relative to the job directory).
STAGE_ORDER = ("draft", "segmentation", "indexed", "assets", "template", "refined", "final")
STAGE_FILES = {
    "draft": "raw.png",
    "segmentation": "masks/",
    "indexed": "indexed.png",
    "assets": "assets/",
    "template": "template.svg",
    "refined": "refined.svg",
    "final": "final.svg",
}

_MANIFEST_KEYS = {"job_id", "k_count", "style_hash", "refinement_iterations", "stages", "timestamps"}


@dataclass(frozen=True)
class SourceText:
    """Long-form input text driving generation."""

    body: str
    token_estimate: int = 0

    def __post_init__(self):
        if self.token_estimate == 0:
            # ~4 characters per token, the usual rough estimate
            object.__setattr__(self, "token_estimate", max(1, round(len(self.body) / 4)))

    @property
    def is_blank(self) -> bool:
        return not self.body.strip()


@dataclass(frozen=True, eq=False)
class StyleReference:
    """Reference style image; content-addressed so jobs can record it."""

    pixels: np.ndarray  # (H, W, 3) uint8
    content_hash: str = ""

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("style reference must be an RGB raster")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ValueError("style reference must be at least 1x1")
        if not self.content_hash:
            h = hashlib.sha256()
            h.update(f"{self.pixels.shape[1]}x{self.pixels.shape[0]}:".encode())
            h.update(np.ascontiguousarray(self.pixels, dtype=np.uint8).tobytes())
            object.__setattr__(self, "content_hash", h.hexdigest())


@dataclass(frozen=True)
class DraftProvenance:
    backend: str
    seed: int | None = None


@dataclass(frozen=True, eq=False)
class RasterDraft:
    """The intermediate bitmap all structure is derived from."""

    pixels: np.ndarray  # (H, W, 3) uint8
    provenance: DraftProvenance = DraftProvenance("unknown")

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("draft must be an RGB raster")
        if self.height < 16 or self.width < 16:
            raise ValueError("draft must be at least 16x16")

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Axis-aligned pixel box, top-left origin."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"degenerate box {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box origin ({self.x},{self.y}) outside raster")

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def bottom(self) -> int:
        return self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def union(self, other: "BoundingBox") -> "BoundingBox":
        x = min(self.x, other.x)
        y = min(self.y, other.y)
        return BoundingBox(x, y, max(self.right, other.right) - x, max(self.bottom, other.bottom) - y)

    def contains(self, other: "BoundingBox") -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and self.right >= other.right
            and self.bottom >= other.bottom
        )


@dataclass(eq=False)
class ComponentMask:
    """Binary instance mask at full draft dimensions."""

    id: int
    bitmap: np.ndarray  # (H, W) bool
    area: int = 0

    def __post_init__(self):
        self.bitmap = np.asarray(self.bitmap, dtype=bool)
        real_area = int(self.bitmap.sum())
        if real_area == 0:
            raise EmptyMask(f"component {self.id} has no set pixels")
        if self.area == 0:
            self.area = real_area
        elif self.area != real_area:
            raise ValueError(f"declared area {self.area} != set bits {real_area}")
        if self.id < 1:
            raise ValueError("component ids are 1-based")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ComponentMask):
            return NotImplemented
        return self.id == other.id and self.area == other.area and np.array_equal(self.bitmap, other.bitmap)


@dataclass(eq=False)
class SegmentationResult:
    """Ordered component set; ids are exactly 1..K."""

    components: list[tuple[ComponentMask, BoundingBox]]

    def __post_init__(self):
        ids = [m.id for m, _ in self.components]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"component ids must be contiguous 1..K, got {ids}")

    @property
    def k_count(self) -> int:
        return len(self.components)

    def mask(self, k: int) -> ComponentMask:
        if not 1 <= k <= len(self.components):
            raise KeyError(f"no component {k}")
        return self.components[k - 1][0]

    def box(self, k: int) -> BoundingBox:
        if not 1 <= k <= len(self.components):
            raise KeyError(f"no component {k}")
        return self.components[k - 1][1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SegmentationResult):
            return NotImplemented
        return len(self.components) == len(other.components) and all(
            ma == mb and ba == bb
            for (ma, ba), (mb, bb) in zip(self.components, other.components)
        )


@dataclass(eq=False)
class RgbaAsset:
    """Transparent crop of one component, placeable at origin_box."""

    id: int
    pixels: np.ndarray  # (h, w, 4) uint8
    origin_box: BoundingBox
    trimmed: bool = False

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 4:
            raise ValueError("asset must be RGBA")
        if self.pixels.shape[0] != self.origin_box.h or self.pixels.shape[1] != self.origin_box.w:
            raise ValueError("asset raster does not match origin_box extents")
        if int((self.pixels[:, :, 3] > 0).sum()) == 0:
            raise ValueError("asset has no opaque pixel")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RgbaAsset):
            return NotImplemented
        return (
            self.id == other.id
            and self.origin_box == other.origin_box
            and self.trimmed == other.trimmed
            and np.array_equal(self.pixels, other.pixels)
        )


@dataclass
class PipelineManifest:
    """Per-job record of stage artifacts, persisted as manifest.json."""

    job_id: str
    k_count: int
    stage_artifacts: dict[str, str] = field(default_factory=dict)
    style_hash: str | None = None
    refinement_iterations: int = 0
    timestamps: dict[str, str] = field(default_factory=dict)


def mask_to_bbox(mask: ComponentMask) -> BoundingBox:
    """Minimal axis-aligned box covering every set bit of the mask."""
    if mask.area == 0:
        raise EmptyMask(f"mask {mask.id} has no set bits")
    ys, xs = np.nonzero(mask.bitmap)
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    return BoundingBox(x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def mask_centroid(mask: ComponentMask) -> tuple[float, float]:
    """Arithmetic mean of set-bit pixel centers, sub-pixel precision."""
    if mask.area == 0:
        raise EmptyMask(f"mask {mask.id} has no set bits")
    ys, xs = np.nonzero(mask.bitmap)
    return (float(xs.mean()) + 0.5, float(ys.mean()) + 0.5)


def bbox_overlap_ratio(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over the smaller box's area; 0.0 when disjoint."""
    ix = max(0, min(a.right, b.right) - max(a.x, b.x))
    iy = max(0, min(a.bottom, b.bottom) - max(a.y, b.y))
    return (ix * iy) / min(a.area, b.area)


def save_manifest(manifest: PipelineManifest, path: str | Path) -> None:
    """Write manifest.json with the fixed cross-language key set."""
    stages = {s: manifest.stage_artifacts[s] for s in STAGE_ORDER if s in manifest.stage_artifacts}
    payload = {
        "job_id": manifest.job_id,
        "k_count": manifest.k_count,
        "style_hash": manifest.style_hash,
        "refinement_iterations": manifest.refinement_iterations,
        "stages": stages,
        "timestamps": {s: manifest.timestamps[s] for s in STAGE_ORDER if s in manifest.timestamps},
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_manifest(path: str | Path, check_artifacts: bool = True) -> PipelineManifest:
    """Load and validate manifest.json.

    Raises ManifestCorrupt on any schema violation and MissingArtifact when a
    listed path is absent (skipped with check_artifacts=False, which resume
    uses to regenerate deleted artifacts).
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestCorrupt(f"{path} does not exist")
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestCorrupt(f"{path}: {exc}")

    if not isinstance(raw, dict) or set(raw) != _MANIFEST_KEYS:
        raise ManifestCorrupt(f"manifest keys must be exactly {sorted(_MANIFEST_KEYS)}")
    if not isinstance(raw["job_id"], str) or not raw["job_id"]:
        raise ManifestCorrupt("job_id must be a non-empty string")
    if not isinstance(raw["k_count"], int) or raw["k_count"] < 0:
        raise ManifestCorrupt("k_count must be a non-negative integer")
    if raw["style_hash"] is not None and not isinstance(raw["style_hash"], str):
        raise ManifestCorrupt("style_hash must be hex or null")
    if not isinstance(raw["refinement_iterations"], int) or raw["refinement_iterations"] < 0:
        raise ManifestCorrupt("refinement_iterations must be a non-negative integer")
    stages = raw["stages"]
    if not isinstance(stages, dict):
        raise ManifestCorrupt("stages must be an object")
    for name in stages:
        if name not in STAGE_ORDER:
            raise ManifestCorrupt(f"unknown stage {name!r}")
    order = [STAGE_ORDER.index(s) for s in stages]
    if order != sorted(order):
        raise ManifestCorrupt("stages are out of pipeline order")
    timestamps = raw["timestamps"]
    if not isinstance(timestamps, dict) or any(s not in STAGE_ORDER for s in timestamps):
        raise ManifestCorrupt("timestamps must map stage names to RFC3339 strings")

    if check_artifacts:
        for stage, rel in stages.items():
            if not (path.parent / rel).exists():
                raise MissingArtifact(f"stage {stage}: {rel} not found next to manifest")

    return PipelineManifest(
        job_id=raw["job_id"],
        k_count=raw["k_count"],
        stage_artifacts=dict(stages),
        style_hash=raw["style_hash"],
        refinement_iterations=raw["refinement_iterations"],
        timestamps=dict(timestamps),
    )
