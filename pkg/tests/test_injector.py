"""Tests for asset injection, editable-figure verification, and template
recovery (strip)."""

from __future__ import annotations

import base64
import random

import numpy as np
import pytest

from figforge.assets import MattingConfig, extract_all
from figforge.backends import MockVlm, generate_svg_template
from figforge.errors import DuplicateAsset, MissingAsset
from figforge.indexer import build_indexed_layout
from figforge.injector import (
    DATA_URI_PREFIX,
    EditableFigure,
    asset_data_uri,
    inject_assets,
    strip_to_template,
    verify_editable_figure,
)
from figforge.model import BoundingBox, RgbaAsset
from figforge.svgkit import (
    find_placeholder_slots,
    parse_svg,
    placeholder_geometry,
    serialize_svg,
    validate_template,
)
from helpers import planted_segmentation


def _fixture(seed: int, k: int | None = None):
    rng = random.Random(seed)
    draft, seg = planted_segmentation(rng, k=k)
    indexed = build_indexed_layout((draft.width, draft.height), seg)
    template = parse_svg(generate_svg_template(indexed, seg.k_count, MockVlm(seg)))
    assets = extract_all(draft, seg, MattingConfig())
    return draft, seg, template, assets


def test_injection_replaces_every_placeholder():
    draft, seg, template, assets = _fixture(31, k=3)
    fig = inject_assets(template, assets, job_id="j1")
    assert fig.component_ids == {1, 2, 3}
    assert fig.provenance == "j1"
    assert find_placeholder_slots(fig.doc) == []
    groups = [n for n in fig.doc.iter_nodes() if n.attrs.get("class") == "af-component"]
    assert len(groups) == 3
    for group in groups:
        assert len(group.children) == 1
        image = group.children[0]
        assert image.kind == "image"
        assert image.attrs["href"].startswith(DATA_URI_PREFIX)


def test_injection_keeps_geometry():
    """The injected image occupies the placeholder slot (up to aspect
    letterboxing, which these full-box assets do not need)."""
    draft, seg, template, assets = _fixture(32, k=2)
    slots = {s.af_id: s.geometry for s in find_placeholder_slots(template)}
    fig = inject_assets(template, assets)
    for node in fig.doc.iter_nodes():
        if node.attrs.get("class") == "af-component":
            k = int(node.attrs["data-af"])
            image = node.children[0]
            tx, ty = node.transform_ops()[-1][1], node.transform_ops()[-1][2]
            x = tx + float(image.attrs["x"])
            y = ty + float(image.attrs["y"])
            slot = slots[k]
            assert x == pytest.approx(slot.x, abs=0.51)
            assert y == pytest.approx(slot.y, abs=0.51)
            assert float(image.attrs["width"]) == pytest.approx(slot.w, abs=1.01)
            assert float(image.attrs["height"]) == pytest.approx(slot.h, abs=1.01)


def test_injection_does_not_mutate_template():
    draft, seg, template, assets = _fixture(33, k=2)
    before = serialize_svg(template)
    inject_assets(template, assets)
    assert serialize_svg(template) == before


def test_duplicate_assets_rejected():
    draft, seg, template, assets = _fixture(34, k=2)
    with pytest.raises(DuplicateAsset):
        inject_assets(template, assets + [assets[0]])


def test_missing_asset_rejected():
    draft, seg, template, assets = _fixture(35, k=3)
    with pytest.raises(MissingAsset):
        inject_assets(template, assets[:2])


def test_extra_assets_ignored():
    draft, seg, template, assets = _fixture(36, k=2)
    stray = RgbaAsset(9, np.full((4, 4, 4), 255, dtype=np.uint8), BoundingBox(0, 0, 4, 4))
    fig = inject_assets(template, assets + [stray])
    assert fig.component_ids == {1, 2}


def test_letterbox_centers_mismatched_aspect():
    draft, seg, template, assets = _fixture(37, k=1)
    slot = placeholder_geometry(template, 1)
    # a 2:1 asset into the slot: width fills (or height fills), inset centered
    wide = RgbaAsset(1, np.full((10, 20, 4), 200, dtype=np.uint8), BoundingBox(0, 0, 20, 10))
    fig = inject_assets(template, [wide])
    group = next(n for n in fig.doc.iter_nodes() if n.attrs.get("class") == "af-component")
    image = group.children[0]
    iw, ih = float(image.attrs["width"]), float(image.attrs["height"])
    assert iw / ih == pytest.approx(2.0, rel=0.02)
    ix, iy = float(image.attrs["x"]), float(image.attrs["y"])
    # centered: equal margins on the constrained axis
    assert ix == pytest.approx((slot.w - iw) / 2, abs=0.01)
    assert iy == pytest.approx((slot.h - ih) / 2, abs=0.01)


def test_verify_passes_on_injected_figure():
    draft, seg, template, assets = _fixture(38, k=3)
    fig = inject_assets(template, assets)
    report = verify_editable_figure(fig, 3)
    assert report.ok, [f.message for f in report.findings]


def test_verify_catches_leftover_placeholder():
    draft, seg, template, assets = _fixture(39, k=2)
    report = verify_editable_figure(EditableFigure(template, {1, 2}, ""), 2)
    assert any(f.kind == "LeftoverPlaceholder" for f in report.findings)


def test_verify_catches_missing_component():
    draft, seg, template, assets = _fixture(40, k=3)
    fig = inject_assets(template, assets)
    fig.doc.children = [c for c in fig.doc.children if c.attrs.get("data-af") != "2"]
    report = verify_editable_figure(fig.doc, 3)
    assert any(f.kind == "MissingComponent" and f.af_id == 2 for f in report.findings)


def test_verify_catches_structure_violations():
    draft, seg, template, assets = _fixture(41, k=1)
    fig = inject_assets(template, assets)
    group = next(n for n in fig.doc.iter_nodes() if n.attrs.get("class") == "af-component")

    # scale in the component transform
    group.attrs["transform"] = group.attrs["transform"] + " scale(2)"
    report = verify_editable_figure(fig.doc, 1)
    assert any(f.kind == "BadTransform" for f in report.findings)

    # foreign child next to the image
    group.attrs["transform"] = "translate(0,0)"
    from figforge.svgkit import SvgNode

    group.children.append(SvgNode.make("circle", {"cx": 1, "cy": 1, "r": 1}))
    report = verify_editable_figure(fig.doc, 1)
    assert any(f.kind == "ForeignChild" for f in report.findings)

    group.children.pop()
    group.children[0].attrs["href"] = "https://example.com/x.png"
    report = verify_editable_figure(fig.doc, 1)
    assert any(f.kind == "BadAssetHref" for f in report.findings)


def test_verify_catches_aspect_mismatch():
    draft, seg, template, assets = _fixture(42, k=1)
    fig = inject_assets(template, assets)
    group = next(n for n in fig.doc.iter_nodes() if n.attrs.get("class") == "af-component")
    image = group.children[0]
    image.attrs["width"] = str(float(image.attrs["width"]) * 3)
    report = verify_editable_figure(fig.doc, 1)
    assert any(f.kind == "AspectMismatch" for f in report.findings)


def test_verify_edited_mode_tolerates_deletion():
    draft, seg, template, assets = _fixture(43, k=3)
    fig = inject_assets(template, assets)
    fig.doc.children = [c for c in fig.doc.children if c.attrs.get("data-af") != "3"]
    assert verify_editable_figure(fig.doc, 3, mode="edited").ok
    strict = verify_editable_figure(fig.doc, 3, mode="strict")
    assert not strict.ok


def test_verify_edited_mode_still_checks_structure():
    draft, seg, template, assets = _fixture(44, k=2)
    fig = inject_assets(template, assets)
    group = next(n for n in fig.doc.iter_nodes() if n.attrs.get("class") == "af-component")
    group.attrs["transform"] = "translate(1,1) scale(3)"
    report = verify_editable_figure(fig.doc, 2, mode="edited")
    assert any(f.kind == "BadTransform" for f in report.findings)


def test_strip_recovers_valid_template():
    draft, seg, template, assets = _fixture(45, k=3)
    fig = inject_assets(template, assets)
    recovered = strip_to_template(fig.doc)
    report = validate_template(recovered, 3)
    assert report.ok, [f.message for f in report.findings]
    # strip-then-inject round trips to the same editable figure
    again = inject_assets(recovered, assets)
    assert serialize_svg(again.doc) == serialize_svg(fig.doc)


def test_strip_preserves_slot_geometry():
    draft, seg, template, assets = _fixture(46, k=2)
    fig = inject_assets(template, assets)
    recovered = strip_to_template(fig.doc)
    for k in (1, 2):
        original = placeholder_geometry(template, k)
        back = placeholder_geometry(recovered, k)
        assert back.x == pytest.approx(original.x, abs=0.51)
        assert back.y == pytest.approx(original.y, abs=0.51)
        assert back.w == pytest.approx(original.w, abs=1.01)
        assert back.h == pytest.approx(original.h, abs=1.01)


def test_asset_data_uri_round_trips():
    from figforge import pngio

    pixels = np.zeros((3, 5, 4), dtype=np.uint8)
    pixels[..., 0] = 200
    pixels[..., 3] = 255
    asset = RgbaAsset(1, pixels, BoundingBox(0, 0, 5, 3))
    uri = asset_data_uri(asset)
    assert uri.startswith(DATA_URI_PREFIX)
    decoded = pngio.decode_rgba(base64.b64decode(uri[len(DATA_URI_PREFIX):]))
    assert np.array_equal(decoded, pixels)
