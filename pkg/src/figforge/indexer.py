"""Stage II back half: render the indexed structural layout.

Every component is filled with a uniform tone and labeled with its
identifier token ``<AF>k``, suppressing texture and color while preserving
spatial configuration. Tones step the hue circle by the golden angle so
they stay pairwise distinct without a stored palette.
"""

from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from figforge import font, pngio
from figforge.errors import DimensionMismatch
from figforge.model import SegmentationResult, mask_centroid

BACKGROUND_GRAY = (200, 200, 200)
_GOLDEN_ANGLE = 137.508


@dataclass(frozen=True, eq=False)
class IndexedLayout:
    pixels: np.ndarray  # (H, W, 3) uint8
    legend: dict[int, tuple[int, int, int]]
    label_anchors: dict[int, tuple[int, int]]

    def __post_init__(self):
        if len(set(self.legend.values())) != len(self.legend):
            raise ValueError("legend tones must be pairwise distinct")
        ks = sorted(self.legend)
        if ks != list(range(1, len(ks) + 1)):
            raise ValueError("legend keys must be exactly 1..K")


def assign_tones(k_count: int) -> list[tuple[int, int, int]]:
    """Deterministic tone list: golden-angle hue walk at s=0.55, v=0.85."""
    tones = []
    for k in range(1, k_count + 1):
        hue = (k * _GOLDEN_ANGLE) % 360.0
        r, g, b = colorsys.hsv_to_rgb(hue / 360.0, 0.55, 0.85)
        tones.append((round(r * 255), round(g * 255), round(b * 255)))
    return tones


def _luminance(rgb: tuple[int, int, int]) -> float:
    r, g, b = rgb
    return 0.299 * r + 0.587 * g + 0.114 * b


def _anchor_for(mask_bitmap: np.ndarray, cx: float, cy: float) -> tuple[int, int]:
    """Label anchor: the centroid, clamped to the nearest mask pixel when the
    centroid falls in a concave gap."""
    ix, iy = int(cx), int(cy)
    h, w = mask_bitmap.shape
    ix = min(max(ix, 0), w - 1)
    iy = min(max(iy, 0), h - 1)
    if mask_bitmap[iy, ix]:
        return ix, iy
    ys, xs = np.nonzero(mask_bitmap)
    d2 = (xs - cx) ** 2 + (ys - cy) ** 2
    i = int(np.argmin(d2))
    return int(xs[i]), int(ys[i])


def render_indexed_layout(
    draft_dims: tuple[int, int],
    seg: SegmentationResult,
    tones: list[tuple[int, int, int]],
    draw_labels: bool = True,
) -> IndexedLayout:
    """Paint each mask with its tone over a neutral gray field, then draw the
    ``<AF>k`` token at the component centroid in contrasting black/white.

    With draw_labels=False the output contains exactly K+1 distinct colors
    and the pixels colored tone_k equal M_k exactly.
    """
    width, height = draft_dims
    if len(tones) != seg.k_count:
        raise ValueError(f"need {seg.k_count} tones, got {len(tones)}")
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:, :] = BACKGROUND_GRAY

    legend: dict[int, tuple[int, int, int]] = {}
    anchors: dict[int, tuple[int, int]] = {}
    for (mask, box), tone in zip(seg.components, tones):
        if mask.bitmap.shape != (height, width):
            raise DimensionMismatch(
                f"mask {mask.id} is {mask.bitmap.shape}, draft is {(height, width)}"
            )
        pixels[mask.bitmap] = tone
        legend[mask.id] = tone
        cx, cy = mask_centroid(mask)
        anchors[mask.id] = _anchor_for(mask.bitmap, cx, cy)

    if draw_labels:
        for (mask, box), tone in zip(seg.components, tones):
            label = f"<AF>{mask.id}"
            color = (0, 0, 0) if _luminance(tone) > 127.5 else (255, 255, 255)
            # Scale the 5x7 glyphs so the token height fits min-side/3 of the box.
            scale = max(1, min(box.w, box.h) // 3 // font.GLYPH_H)
            tw, th = font.text_extent(label, scale)
            ax, ay = anchors[mask.id]
            x0 = ax - tw // 2
            y0 = ay - th // 2
            clip = (box.x, box.y, box.x + box.w, box.y + box.h)
            font.draw_text(pixels, label, x0, y0, color, scale=scale, clip=clip)

    return IndexedLayout(pixels=pixels, legend=legend, label_anchors=anchors)


def build_indexed_layout(
    draft_dims: tuple[int, int], seg: SegmentationResult, draw_labels: bool = True
) -> IndexedLayout:
    return render_indexed_layout(draft_dims, seg, assign_tones(seg.k_count), draw_labels)


def save_indexed_layout(layout: IndexedLayout, png_path: str | Path) -> None:
    """Persist the raster plus a legend sidecar (tones and label anchors)."""
    png_path = Path(png_path)
    pngio.save_rgb(layout.pixels, png_path)
    legend = {
        str(k): {"tone": list(layout.legend[k]), "anchor": list(layout.label_anchors[k])}
        for k in sorted(layout.legend)
    }
    sidecar = png_path.with_name(png_path.stem + ".legend.json")
    sidecar.write_text(json.dumps(legend, indent=2) + "\n", encoding="utf-8")


def load_indexed_layout(png_path: str | Path) -> IndexedLayout:
    png_path = Path(png_path)
    pixels = pngio.load_rgb(png_path)
    sidecar = png_path.with_name(png_path.stem + ".legend.json")
    raw = json.loads(sidecar.read_text(encoding="utf-8"))
    legend = {int(k): tuple(v["tone"]) for k, v in raw.items()}
    anchors = {int(k): tuple(v["anchor"]) for k, v in raw.items()}
    return IndexedLayout(pixels=pixels, legend=legend, label_anchors=anchors)
