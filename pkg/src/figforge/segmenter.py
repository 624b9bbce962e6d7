"""Stage II front half: decompose the raster draft into instance masks.

The builtin segmenter is color-quantized connected-component labeling,
which is exact on the flat-styled drafts this pipeline produces. A remote
segmentation backend can replace the labeling step; its output is
normalized through the same filtering and renumbering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from figforge.errors import NoComponents
from figforge.model import (
    BoundingBox,
    ComponentMask,
    RasterDraft,
    SegmentationResult,
    bbox_overlap_ratio,
    mask_to_bbox,
)
from figforge import pngio

_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCTURE_8 = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class SegmenterConfig:
    mode: str = "builtin"  # builtin | remote
    quantization_levels: int = 8
    connectivity: int = 4  # 4 or 8
    min_area: int = 64
    background_rule: str = "largest-border-touching-region"  # or "explicit-color"
    background_color: tuple[int, int, int] = (255, 255, 255)
    merge_overlap_threshold: float = 0.9

    def __post_init__(self):
        if not (2 <= self.quantization_levels <= 64):
            raise ValueError("quantization_levels must be in 2..64")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")
        if self.min_area < 1:
            raise ValueError("min_area must be >= 1")
        if not (0.0 < self.merge_overlap_threshold <= 1.0):
            raise ValueError("merge_overlap_threshold must be in (0,1]")


def quantize_colors(pixels: np.ndarray, levels: int) -> np.ndarray:
    """Map each pixel to a packed per-channel bucket label.

    Bucket index per channel is floor(channel * levels / 256); the three
    indices are packed into a single int32 label.
    """
    if not (2 <= levels <= 64):
        raise ValueError("levels must be in 2..64")
    q = (pixels.astype(np.int32) * levels) >> 8
    return (q[:, :, 0] * levels + q[:, :, 1]) * levels + q[:, :, 2]


def _label_components(labels: np.ndarray, connectivity: int) -> np.ndarray:
    """Connected components of a label raster: same label AND connected.

    Returns an int raster where 0 is unused and each component has a
    distinct positive id (arbitrary order; callers renumber).
    """
    structure = _STRUCTURE_4 if connectivity == 4 else _STRUCTURE_8
    out = np.zeros(labels.shape, dtype=np.int32)
    next_id = 1
    for value in np.unique(labels):
        comp, n = ndimage.label(labels == value, structure=structure)
        if n == 0:
            continue
        out[comp > 0] = comp[comp > 0] + (next_id - 1)
        next_id += n
    return out


def _background_ids(comp: np.ndarray, labels: np.ndarray, config: SegmenterConfig) -> set[int]:
    if config.background_rule == "explicit-color":
        bg_label = int(
            quantize_colors(
                np.array(config.background_color, dtype=np.uint8).reshape(1, 1, 3),
                config.quantization_levels,
            )[0, 0]
        )
        return {int(i) for i in np.unique(comp[labels == bg_label]) if i > 0}
    # default: single largest region touching the raster border
    border = np.unique(np.concatenate([comp[0, :], comp[-1, :], comp[:, 0], comp[:, -1]]))
    border = border[border > 0]
    if border.size == 0:
        return set()
    areas = ndimage.sum_labels(np.ones(comp.shape), comp, index=border)
    return {int(border[int(np.argmax(areas))])}


def _renumber_scan_order(comp: np.ndarray, keep: list[int]) -> SegmentationResult:
    """Build a SegmentationResult with ids assigned in raster scan order of
    each component's first pixel."""
    firsts = []
    flat = comp.ravel()
    for cid in keep:
        first = int(np.argmax(flat == cid))
        firsts.append((first, cid))
    firsts.sort()
    components = []
    for new_id, (_, cid) in enumerate(firsts, start=1):
        bitmap = comp == cid
        mask = ComponentMask(id=new_id, bitmap=bitmap)
        components.append((mask, mask_to_bbox(mask)))
    return SegmentationResult(components)


def segment(draft: RasterDraft, config: SegmenterConfig) -> SegmentationResult:
    """Decompose the draft into component masks and tight boxes.

    Components are connected regions of the quantized label raster, minus
    the background region, renumbered 1..K in raster scan order of each
    region's first pixel.
    """
    labels = quantize_colors(draft.pixels, config.quantization_levels)
    comp = _label_components(labels, config.connectivity)
    bg = _background_ids(comp, labels, config)
    keep = [int(i) for i in np.unique(comp) if i > 0 and int(i) not in bg]
    if not keep:
        raise NoComponents("everything is background")
    return _renumber_scan_order(comp, keep)


def filter_and_merge(result: SegmentationResult, config: SegmenterConfig) -> SegmentationResult:
    """Drop speck components and merge near-coincident ones.

    Components below min_area are removed first; then any pair whose boxes
    overlap at >= merge_overlap_threshold (relative to the smaller box) is
    merged, repeatedly, until no such pair remains. Survivors are renumbered
    contiguously preserving scan order.
    """
    entries = [
        {"bitmap": m.bitmap.copy(), "box": b}
        for m, b in result.components
        if m.area >= config.min_area
    ]
    if not entries:
        raise NoComponents(f"all components below min_area {config.min_area}")

    merged = True
    while merged:
        merged = False
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                if bbox_overlap_ratio(entries[i]["box"], entries[j]["box"]) >= config.merge_overlap_threshold:
                    entries[i]["bitmap"] |= entries[j]["bitmap"]
                    entries[i]["box"] = entries[i]["box"].union(entries[j]["box"])
                    del entries[j]
                    merged = True
                    break
            if merged:
                break

    def first_pixel(bitmap: np.ndarray) -> int:
        return int(np.argmax(bitmap.ravel()))

    entries.sort(key=lambda e: first_pixel(e["bitmap"]))
    components = []
    for new_id, e in enumerate(entries, start=1):
        mask = ComponentMask(id=new_id, bitmap=e["bitmap"])
        components.append((mask, mask_to_bbox(mask)))
    return SegmentationResult(components)


def save_segmentation(result: SegmentationResult, masks_dir: str | Path) -> None:
    """Persist masks as 1-bit PNGs plus an index of boxes and areas."""
    masks_dir = Path(masks_dir)
    masks_dir.mkdir(parents=True, exist_ok=True)
    index = {}
    for mask, box in result.components:
        pngio.save_mask(mask.bitmap, masks_dir / f"AF-{mask.id}.png")
        index[str(mask.id)] = {"bbox": [box.x, box.y, box.w, box.h], "area": mask.area}
    (masks_dir / "index.json").write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")


def load_segmentation(masks_dir: str | Path) -> SegmentationResult:
    masks_dir = Path(masks_dir)
    index = json.loads((masks_dir / "index.json").read_text(encoding="utf-8"))
    components = []
    for k in sorted(index, key=int):
        bitmap = pngio.load_mask(masks_dir / f"AF-{k}.png")
        mask = ComponentMask(id=int(k), bitmap=bitmap)
        x, y, w, h = index[k]["bbox"]
        components.append((mask, BoundingBox(x, y, w, h)))
    return SegmentationResult(components)
