"""Canonical serializer: one spelling per tree.

Attributes in lexicographic order, numbers already canonicalized at parse
time, 2-space indent, self-closing tags for empty elements, xmlns always
present on the root. Serializing the same tree twice is byte-identical, and
any output parses back to an equal tree.
"""

from __future__ import annotations

from figforge.svgkit.dom import SvgDocument, SvgNode

XMLNS = "http://www.w3.org/2000/svg"


def _escape_attr(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _escape_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _attr_string(attrs: dict[str, str]) -> str:
    return "".join(f' {name}="{_escape_attr(attrs[name])}"' for name in sorted(attrs))


def _emit(node: SvgNode, depth: int, out: list[str]) -> None:
    pad = "  " * depth
    open_tag = f"{pad}<{node.kind}{_attr_string(node.attrs)}"
    if not node.children and not node.text:
        out.append(open_tag + "/>")
        return
    if node.text and not node.children:
        out.append(f"{open_tag}>{_escape_text(node.text)}</{node.kind}>")
        return
    out.append(open_tag + ">")
    for child in node.children:
        _emit(child, depth + 1, out)
    out.append(f"{pad}</{node.kind}>")


def serialize_svg(doc: SvgDocument) -> str:
    root_attrs = dict(doc.extra_attrs)
    root_attrs["xmlns"] = XMLNS
    root_attrs["viewBox"] = doc.view_box_str()
    open_tag = f"<svg{_attr_string(root_attrs)}"
    if not doc.children:
        return open_tag + "/>\n"
    out = [open_tag + ">"]
    for child in doc.children:
        _emit(child, 1, out)
    out.append("</svg>")
    return "\n".join(out) + "\n"
