"""Tests for tone assignment and the indexed structural layout."""

from __future__ import annotations

import colorsys
import math
import random

import numpy as np
import pytest

from figforge.errors import DimensionMismatch
from figforge.indexer import (
    BACKGROUND_GRAY,
    IndexedLayout,
    assign_tones,
    build_indexed_layout,
    load_indexed_layout,
    render_indexed_layout,
    save_indexed_layout,
)
from figforge.model import BoundingBox, ComponentMask, SegmentationResult
from helpers import planted_segmentation


def _hsv_oracle(k: int) -> tuple[int, int, int]:
    """Independent golden-angle tone computation."""
    hue = (k * 137.508) % 360.0
    r, g, b = colorsys.hsv_to_rgb(hue / 360.0, 0.55, 0.85)
    return (round(r * 255), round(g * 255), round(b * 255))


def test_first_tone_frozen_value():
    # hue 137.508deg, s=0.55, v=0.85 lands on this exact byte triple
    assert assign_tones(1) == [(98, 217, 132)]


def test_tones_match_hsv_oracle():
    tones = assign_tones(16)
    for k, tone in enumerate(tones, start=1):
        assert tone == _hsv_oracle(k)


def test_tones_injective_up_to_256():
    tones = assign_tones(256)
    assert len(set(tones)) == 256
    assert BACKGROUND_GRAY not in tones


def test_zero_components_no_tones():
    assert assign_tones(0) == []


def test_render_uniform_tones_without_labels():
    rng = random.Random(3)
    draft, seg = planted_segmentation(rng, k=3)
    tones = assign_tones(3)
    layout = render_indexed_layout((draft.width, draft.height), seg, tones, draw_labels=False)
    values = {tuple(v) for v in layout.pixels.reshape(-1, 3)}
    assert values == set(tones) | {BACKGROUND_GRAY}
    # every mask pixel carries exactly its component's tone
    for mask, _ in seg.components:
        region = layout.pixels[mask.bitmap]
        assert (region == tones[mask.id - 1]).all()


def test_render_labels_change_pixels_inside_boxes_only():
    rng = random.Random(4)
    draft, seg = planted_segmentation(rng, k=2)
    tones = assign_tones(2)
    plain = render_indexed_layout((draft.width, draft.height), seg, tones, draw_labels=False)
    labeled = render_indexed_layout((draft.width, draft.height), seg, tones, draw_labels=True)
    diff = np.any(plain.pixels != labeled.pixels, axis=2)
    assert diff.any(), "labels drew nothing"
    allowed = np.zeros_like(diff)
    for _, box in seg.components:
        allowed[box.y : box.bottom, box.x : box.right] = True
    assert not (diff & ~allowed).any(), "label ink escaped its component box"


def test_anchor_lies_inside_mask_even_for_hollow_shapes():
    # C-shape whose centroid falls in the cavity
    bitmap = np.zeros((40, 40), dtype=bool)
    bitmap[5:35, 5:10] = True
    bitmap[5:10, 5:35] = True
    bitmap[30:35, 5:35] = True
    seg = SegmentationResult([(ComponentMask(1, bitmap), BoundingBox(5, 5, 30, 30))])
    layout = render_indexed_layout((40, 40), seg, assign_tones(1))
    (ax, ay) = layout.label_anchors[1]
    assert bitmap[ay, ax], "anchor must be clamped onto the mask"


def test_render_rejects_wrong_dimensions():
    rng = random.Random(5)
    draft, seg = planted_segmentation(rng, k=1)
    with pytest.raises(DimensionMismatch):
        render_indexed_layout((draft.width + 1, draft.height), seg, assign_tones(1))


def test_indexed_layout_validates_legend():
    pixels = np.zeros((8, 8, 3), dtype=np.uint8)
    with pytest.raises(ValueError):
        IndexedLayout(pixels, {1: (10, 10, 10), 3: (20, 20, 20)}, {1: (0, 0), 3: (0, 0)})
    with pytest.raises(ValueError):
        IndexedLayout(pixels, {1: (10, 10, 10), 2: (10, 10, 10)}, {1: (0, 0), 2: (0, 0)})


def test_build_indexed_layout_end_to_end():
    rng = random.Random(6)
    draft, seg = planted_segmentation(rng, k=4)
    layout = build_indexed_layout((draft.width, draft.height), seg)
    assert sorted(layout.legend) == [1, 2, 3, 4]
    assert layout.pixels.shape == draft.pixels.shape


def test_save_load_round_trip(tmp_path):
    rng = random.Random(7)
    draft, seg = planted_segmentation(rng, k=3)
    layout = build_indexed_layout((draft.width, draft.height), seg)
    save_indexed_layout(layout, tmp_path / "indexed.png")
    loaded = load_indexed_layout(tmp_path / "indexed.png")
    assert np.array_equal(loaded.pixels, layout.pixels)
    assert loaded.legend == layout.legend
    assert loaded.label_anchors == layout.label_anchors


def test_k_plus_one_distinct_values_total():
    """K tones plus background are exactly K+1 colors when labels are off."""
    rng = random.Random(8)
    for k in (1, 2, 5):
        draft, seg = planted_segmentation(rng, k=k)
        layout = render_indexed_layout(
            (draft.width, draft.height), seg, assign_tones(k), draw_labels=False
        )
        values = {tuple(v) for v in layout.pixels.reshape(-1, 3)}
        assert len(values) == k + 1
