"""Strict parser for the SVG subset.

Built on expat so every rejection — malformed XML, unknown element, unknown
attribute, bad value — carries the line and column it came from. Values are
canonicalized on the way in, which makes parse∘serialize the identity on
trees and keeps structural equality exact.
"""

from __future__ import annotations

import xml.parsers.expat

from figforge.errors import ParseError, UnsupportedFeature
from figforge.svgkit.dom import (
    KIND_ATTRS,
    KINDS,
    SVG_ATTRS,
    SvgDocument,
    SvgNode,
    canon_attr,
    parse_number,
)

# Accepted spellings that normalize into the subset.
_ATTR_ALIASES = {"xlink:href": "href"}
_IGNORED_ATTRS = {"xmlns:xlink"}


class _Builder:
    def __init__(self):
        self.document: SvgDocument | None = None
        self.stack: list[SvgNode] = []
        self.root_attrs: dict[str, str] | None = None
        self.root_children: list[SvgNode] = []
        self.parser = xml.parsers.expat.ParserCreate()
        self.parser.StartElementHandler = self.start
        self.parser.EndElementHandler = self.end
        self.parser.CharacterDataHandler = self.chardata

    def _pos(self) -> tuple[int, int]:
        return (self.parser.CurrentLineNumber, self.parser.CurrentColumnNumber + 1)

    def _fail(self, reason: str):
        line, col = self._pos()
        raise ParseError(line, col, reason)

    def start(self, name: str, attrs: dict[str, str]):
        line, col = self._pos()
        if self.root_attrs is None:
            if name != "svg":
                self._fail(f"root element must be <svg>, got <{name}>")
            for attr in attrs:
                if attr not in SVG_ATTRS and attr not in _IGNORED_ATTRS:
                    raise UnsupportedFeature(f"attribute {attr!r} on <svg>", line, col)
            self.root_attrs = dict(attrs)
            return
        if name not in KINDS:
            raise UnsupportedFeature(f"element <{name}>", line, col)
        parent = self.stack[-1] if self.stack else None
        if parent is not None and parent.kind != "g":
            self._fail(f"<{parent.kind}> cannot contain child elements")
        clean: dict[str, str] = {}
        for attr, value in attrs.items():
            attr = _ATTR_ALIASES.get(attr, attr)
            if attr in _IGNORED_ATTRS:
                continue
            if attr not in KIND_ATTRS[name]:
                raise UnsupportedFeature(f"attribute {attr!r} on <{name}>", line, col)
            try:
                clean[attr] = canon_attr(name, attr, value)
            except ValueError as exc:
                self._fail(f"bad value for {attr!r}: {exc}")
        node = SvgNode(name, clean)
        if parent is None:
            self.root_children.append(node)
        else:
            parent.children.append(node)
        self.stack.append(node)

    def end(self, name: str):
        if name == "svg":
            return
        node = self.stack.pop()
        node.text = node.text.strip()

    def chardata(self, data: str):
        if not self.stack:
            if data.strip():
                self._fail("text outside any element")
            return
        node = self.stack[-1]
        if node.kind != "text":
            if data.strip():
                self._fail(f"text content not allowed in <{node.kind}>")
            return
        node.text += data


def parse_svg(text: str) -> SvgDocument:
    builder = _Builder()
    try:
        builder.parser.Parse(text, True)
    except xml.parsers.expat.ExpatError as exc:
        raise ParseError(exc.lineno, exc.offset + 1, str(exc).split(":")[0]) from None
    if builder.root_attrs is None:
        raise ParseError(1, 1, "no <svg> root element")
    raw_vb = builder.root_attrs.get("viewBox")
    if raw_vb is None:
        raise ParseError(1, 1, "<svg> missing viewBox")
    parts = raw_vb.replace(",", " ").split()
    if len(parts) != 4:
        raise ParseError(1, 1, f"viewBox needs 4 numbers, got {raw_vb!r}")
    try:
        view_box = tuple(parse_number(p) for p in parts)
    except ValueError as exc:
        raise ParseError(1, 1, f"bad viewBox: {exc}") from None
    if not (view_box[2] > 0 and view_box[3] > 0):
        raise ParseError(1, 1, "viewBox width and height must be positive")
    extra = {
        k: builder.root_attrs[k]
        for k in ("width", "height")
        if k in builder.root_attrs
    }
    try:
        return SvgDocument(view_box, builder.root_children, extra)
    except ValueError as exc:
        raise ParseError(1, 1, str(exc)) from None
