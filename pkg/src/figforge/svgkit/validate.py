"""Placeholder grammar checks and geometry queries.

A placeholder slot is, bit-exactly, a group `id="AF-<k>"` with class
`af-placeholder` and `data-af="<k>"` containing exactly one rect child. The
validator reports findings as data; nothing here raises on a bad template.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from figforge.errors import NoSuchPlaceholder
from figforge.svgkit.dom import (
    GROUP,
    IDENTITY,
    RECT,
    Affine,
    SvgDocument,
    SvgNode,
    apply_affine,
    compose,
)

_AF_ID = re.compile(r"^AF-(\d+)$")

PLACEHOLDER_CLASS = "af-placeholder"
COMPONENT_CLASS = "af-component"


@dataclass(frozen=True)
class Rect:
    """Float axis-aligned rectangle in view-box units."""

    x: float
    y: float
    w: float
    h: float

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    def intersects(self, other: "Rect") -> bool:
        return (
            self.x < other.x + other.w
            and other.x < self.x + self.w
            and self.y < other.y + other.h
            and other.y < self.y + self.h
        )


@dataclass(frozen=True)
class PlaceholderSlot:
    af_id: int
    geometry: Rect
    node_path: tuple[int, ...]


@dataclass(frozen=True)
class Finding:
    kind: str
    af_id: int | None = None
    message: str = ""


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, kind: str, af_id: int | None = None, message: str = "") -> None:
        self.findings.append(Finding(kind, af_id, message))


def _transformed_rect(rect_node: SvgNode, outer: Affine) -> Rect:
    affine = compose(outer, rect_node.local_affine())
    x0, y0 = apply_affine(affine, rect_node.num("x"), rect_node.num("y"))
    x1, y1 = apply_affine(
        affine,
        rect_node.num("x") + rect_node.num("width"),
        rect_node.num("y") + rect_node.num("height"),
    )
    return Rect(min(x0, x1), min(y0, y1), abs(x1 - x0), abs(y1 - y0))


def af_id_of(node: SvgNode) -> int | None:
    """The k of an AF-<k> id, if this node carries one."""
    nid = node.id
    if nid is None:
        return None
    m = _AF_ID.match(nid)
    return int(m.group(1)) if m else None


def is_placeholder_group(node: SvgNode) -> bool:
    k = af_id_of(node)
    return (
        node.kind == GROUP
        and k is not None
        and node.attrs.get("class") == PLACEHOLDER_CLASS
        and node.attrs.get("data-af") == str(k)
        and len(node.children) == 1
        and node.children[0].kind == RECT
    )


def _walk_with_context(nodes, path: tuple[int, ...], affine: Affine):
    for i, node in enumerate(nodes):
        node_path = path + (i,)
        yield node, node_path, affine
        if node.kind == GROUP:
            yield from _walk_with_context(
                node.children, node_path, compose(affine, node.local_affine())
            )


def find_placeholder_slots(doc: SvgDocument) -> list[PlaceholderSlot]:
    """All groups matching the placeholder grammar, in document order."""
    slots = []
    for node, path, outer in _walk_with_context(doc.children, (), IDENTITY):
        if is_placeholder_group(node):
            affine = compose(outer, node.local_affine())
            geometry = _transformed_rect(node.children[0], affine)
            slots.append(PlaceholderSlot(af_id_of(node), geometry, path))
    return slots


def placeholder_geometry(doc: SvgDocument, af_id: int) -> Rect:
    """Slot rect geometry in view-box units, ancestor transforms applied."""
    for slot in find_placeholder_slots(doc):
        if slot.af_id == af_id:
            return slot.geometry
    raise NoSuchPlaceholder(f"no placeholder AF-{af_id}")


def validate_template(doc: SvgDocument, k_count: int) -> ValidationReport:
    """Zero findings iff exactly one well-formed slot per k in 1..K, no
    extras, and every slot geometry intersects the view box."""
    report = ValidationReport()
    slots = find_placeholder_slots(doc)
    by_id: dict[int, list[PlaceholderSlot]] = {}
    for slot in slots:
        by_id.setdefault(slot.af_id, []).append(slot)

    # AF-ids that look like slots but violate the grammar, and non-unique ids.
    seen_ids: set[str] = set()
    for node in doc.iter_nodes():
        k = af_id_of(node)
        if k is not None and not is_placeholder_group(node):
            report.add("MalformedPlaceholder", k, f"AF-{k} does not match the placeholder grammar")
        nid = node.id
        if nid is not None:
            if nid in seen_ids and af_id_of(node) is None:
                report.add("DuplicateId", None, f"element id {nid!r} is not unique")
            seen_ids.add(nid)

    expected = set(range(1, k_count + 1))
    for k in sorted(expected - set(by_id)):
        report.add("MissingPlaceholder", k, f"no placeholder AF-{k}")
    for k in sorted(set(by_id) - expected):
        report.add("UnknownIdentifier", k, f"placeholder AF-{k} exceeds K={k_count}")
    for k, group in sorted(by_id.items()):
        if len(group) > 1:
            report.add("DuplicateIdentifier", k, f"{len(group)} placeholders named AF-{k}")

    vx, vy, vw, vh = doc.view_box
    view = Rect(vx, vy, vw, vh)
    for slot in slots:
        if slot.af_id in expected and not slot.geometry.intersects(view):
            report.add(
                "OutsideViewBox", slot.af_id,
                f"slot AF-{slot.af_id} does not intersect the view box",
            )
    return report


def placeholder_id_set(doc: SvgDocument) -> set[int]:
    return {slot.af_id for slot in find_placeholder_slots(doc)}
