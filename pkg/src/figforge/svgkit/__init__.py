"""SVG subset engine: parse, validate, query, rasterize, serialize."""

from figforge.svgkit.dom import (
    CIRCLE,
    GROUP,
    IMAGE,
    LINE,
    PATH,
    RECT,
    TEXT,
    Affine,
    SvgDocument,
    SvgNode,
    apply_affine,
    canon_color,
    canon_path_d,
    compose,
    compose_ops,
    fmt_num,
    format_path_d,
    format_transform,
    parse_number,
    parse_path_d,
    parse_transform,
)
from figforge.svgkit.parser import ParseError, UnsupportedFeature, parse_svg
from figforge.svgkit.rasterize import paint_extent, rasterize_preview, resolve_color
from figforge.svgkit.serializer import serialize_svg
from figforge.svgkit.validate import (
    COMPONENT_CLASS,
    PLACEHOLDER_CLASS,
    Finding,
    PlaceholderSlot,
    Rect,
    ValidationReport,
    af_id_of,
    find_placeholder_slots,
    is_placeholder_group,
    placeholder_geometry,
    placeholder_id_set,
    validate_template,
)

__all__ = [
    "CIRCLE",
    "COMPONENT_CLASS",
    "GROUP",
    "IMAGE",
    "LINE",
    "PATH",
    "PLACEHOLDER_CLASS",
    "RECT",
    "TEXT",
    "Affine",
    "Finding",
    "ParseError",
    "PlaceholderSlot",
    "Rect",
    "SvgDocument",
    "SvgNode",
    "UnsupportedFeature",
    "ValidationReport",
    "af_id_of",
    "apply_affine",
    "canon_color",
    "canon_path_d",
    "compose",
    "compose_ops",
    "find_placeholder_slots",
    "fmt_num",
    "format_path_d",
    "format_transform",
    "is_placeholder_group",
    "paint_extent",
    "parse_number",
    "parse_path_d",
    "parse_svg",
    "parse_transform",
    "placeholder_geometry",
    "placeholder_id_set",
    "rasterize_preview",
    "resolve_color",
    "serialize_svg",
    "validate_template",
]
