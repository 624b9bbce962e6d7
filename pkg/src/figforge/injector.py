"""Stage V: substitute placeholders with extracted assets.

Each placeholder group keeps its identity — same id, class flipped from
af-placeholder to af-component — while its rect is replaced by an image
node holding the asset as a base64 PNG data URI. The slot origin folds into
the group transform, so moving a component later is a single-translate edit.
"""

from __future__ import annotations

import base64
import copy
from dataclasses import dataclass, field

from figforge import pngio
from figforge.errors import DuplicateAsset, MissingAsset
from figforge.model import RgbaAsset
from figforge.svgkit import (
    COMPONENT_CLASS,
    PLACEHOLDER_CLASS,
    GROUP,
    IMAGE,
    RECT,
    TEXT,
    SvgDocument,
    SvgNode,
    ValidationReport,
    af_id_of,
    find_placeholder_slots,
)
from figforge.svgkit.dom import format_transform

DATA_URI_PREFIX = "data:image/png;base64,"

_ASPECT_REL_TOL = 0.02


@dataclass
class EditableFigure:
    doc: SvgDocument
    component_ids: set[int] = field(default_factory=set)
    provenance: str = ""


def asset_data_uri(asset: RgbaAsset) -> str:
    return DATA_URI_PREFIX + base64.b64encode(pngio.encode_rgba(asset.pixels)).decode("ascii")


def _letterbox(slot_w: float, slot_h: float, asset_w: int, asset_h: int):
    """Largest centered box inside the slot with the asset's aspect ratio."""
    aspect = asset_w / asset_h
    if slot_w / slot_h > aspect:
        ih = slot_h
        iw = slot_h * aspect
    else:
        iw = slot_w
        ih = slot_w / aspect
    return ((slot_w - iw) / 2.0, (slot_h - ih) / 2.0, iw, ih)


def inject_assets(
    template: SvgDocument, assets: list[RgbaAsset], job_id: str = ""
) -> EditableFigure:
    """Replace every placeholder with its asset. Assets that match no slot
    are ignored; a slot without an asset is an error."""
    by_id: dict[int, RgbaAsset] = {}
    for asset in assets:
        if asset.id in by_id:
            raise DuplicateAsset(asset.id)
        by_id[asset.id] = asset

    doc = copy.deepcopy(template)
    component_ids: set[int] = set()
    for slot in find_placeholder_slots(doc):
        if slot.af_id not in by_id:
            raise MissingAsset(slot.af_id)
        asset = by_id[slot.af_id]
        group = doc.children[slot.node_path[0]]
        for i in slot.node_path[1:]:
            group = group.children[i]
        rect = group.children[0]
        slot_x, slot_y = rect.num("x"), rect.num("y")
        slot_w, slot_h = rect.num("width"), rect.num("height")
        ix, iy, iw, ih = _letterbox(slot_w, slot_h, asset.width, asset.height)

        ops = group.transform_ops()
        ops.append(("translate", slot_x, slot_y))
        group.attrs["transform"] = format_transform(ops)
        group.attrs["class"] = COMPONENT_CLASS
        group.children = [
            SvgNode.make(
                IMAGE,
                {
                    "x": ix,
                    "y": iy,
                    "width": iw,
                    "height": ih,
                    "href": asset_data_uri(asset),
                },
            )
        ]
        component_ids.add(slot.af_id)
    return EditableFigure(doc, component_ids, job_id)


def _component_groups(doc: SvgDocument) -> dict[int, list[SvgNode]]:
    groups: dict[int, list[SvgNode]] = {}
    for node in doc.iter_nodes():
        k = af_id_of(node)
        if k is not None and node.kind == GROUP and node.attrs.get("class") == COMPONENT_CLASS:
            groups.setdefault(k, []).append(node)
    return groups


def _check_component(report: ValidationReport, k: int, group: SvgNode) -> None:
    ops = group.transform_ops()
    if len(ops) != 1 or ops[0][0] != "translate":
        report.add("BadTransform", k, f"AF-{k} must carry a single translate transform")
    images = [c for c in group.children if c.kind == IMAGE]
    others = [c for c in group.children if c.kind not in (IMAGE, TEXT)]
    if len(images) > 1:
        report.add("MultipleAssets", k, f"AF-{k} has {len(images)} image children")
    elif not images:
        report.add("NoAsset", k, f"AF-{k} has no image child")
    if others:
        report.add("ForeignChild", k, f"AF-{k} contains non-image, non-text children")
    if len(images) == 1:
        image = images[0]
        href = image.attrs.get("href", "")
        if not href.startswith(DATA_URI_PREFIX):
            report.add("BadAssetHref", k, f"AF-{k} image is not an embedded PNG")
            return
        try:
            pw, ph = pngio.png_size(base64.b64decode(href[len(DATA_URI_PREFIX):]))
        except Exception:
            report.add("BadAssetHref", k, f"AF-{k} embedded PNG does not decode")
            return
        iw, ih = image.num("width"), image.num("height")
        if iw <= 0 or ih <= 0:
            report.add("AspectMismatch", k, f"AF-{k} image has degenerate dimensions")
        elif abs(iw / ih - pw / ph) > _ASPECT_REL_TOL * (pw / ph):
            report.add(
                "AspectMismatch", k,
                f"AF-{k} image box {iw}x{ih} does not match asset {pw}x{ph}",
            )


def verify_editable_figure(fig, k_count: int, mode: str = "strict") -> ValidationReport:
    """Empty findings iff every component group holds the editable-figure
    invariants. Strict mode additionally requires ids to cover exactly 1..K;
    edited mode tolerates gaps left by deletions."""
    doc = fig.doc if isinstance(fig, EditableFigure) else fig
    report = ValidationReport()
    groups = _component_groups(doc)

    if mode == "strict":
        expected = set(range(1, k_count + 1))
        for k in sorted(expected - set(groups)):
            report.add("MissingComponent", k, f"no component group AF-{k}")
        for k in sorted(set(groups) - expected):
            report.add("UnknownIdentifier", k, f"component AF-{k} exceeds K={k_count}")
        for node in doc.iter_nodes():
            k = af_id_of(node)
            if k is not None and node.attrs.get("class") == PLACEHOLDER_CLASS:
                report.add("LeftoverPlaceholder", k, f"AF-{k} was never injected")

    for k, nodes in sorted(groups.items()):
        if len(nodes) > 1:
            report.add("DuplicateIdentifier", k, f"{len(nodes)} component groups named AF-{k}")
            continue
        _check_component(report, k, nodes[0])
    return report


def strip_to_template(doc: SvgDocument, fill: str = "#cccccc") -> SvgDocument:
    """Structural inverse of injection: image children removed, rects and
    placeholder classes restored. Paint is not recoverable — restored rects
    take the given fill."""
    out = copy.deepcopy(doc)
    for node in out.iter_nodes():
        k = af_id_of(node)
        if k is None or node.kind != GROUP or node.attrs.get("class") != COMPONENT_CLASS:
            continue
        ops = node.transform_ops()
        if not ops or ops[-1][0] != "translate":
            continue
        slot_x, slot_y = ops[-1][1], ops[-1][2]
        ops = ops[:-1]
        images = [c for c in node.children if c.kind == IMAGE]
        if len(images) != 1:
            continue
        image = images[0]
        slot_w = image.num("width") + 2 * image.num("x")
        slot_h = image.num("height") + 2 * image.num("y")
        node.attrs["class"] = PLACEHOLDER_CLASS
        if ops:
            node.attrs["transform"] = format_transform(ops)
        else:
            node.attrs.pop("transform", None)
        node.children = [
            SvgNode.make(
                RECT,
                {"x": slot_x, "y": slot_y, "width": slot_w, "height": slot_h, "fill": fill},
            )
        ]
    return out
