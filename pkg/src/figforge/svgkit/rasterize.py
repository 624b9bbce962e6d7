"""Deterministic raster preview of subset documents.

Pixel rule everywhere: a pixel belongs to a shape iff its center lies inside
the shape (centers at integer+0.5). Strokes are drawn as inside bands
(rect/circle) or center-line distance fields (line/path) — flat-shape
preview semantics, not full SVG stroking. Same document and width in, same
bytes out.
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass, replace

import numpy as np

from figforge import font, pngio
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
    compose,
    parse_path_d,
)
from figforge.svgkit.validate import af_id_of, is_placeholder_group

_KEYWORD_COLORS = {
    "black": (0, 0, 0),
    "white": (255, 255, 255),
    "gray": (128, 128, 128),
    "grey": (128, 128, 128),
    "red": (255, 0, 0),
    "green": (0, 128, 0),
    "blue": (0, 0, 255),
    "yellow": (255, 255, 0),
    "orange": (255, 165, 0),
    "purple": (128, 0, 128),
    "cyan": (0, 255, 255),
    "magenta": (255, 0, 255),
}

_CURVE_STEPS = 32
_DATA_URI_PREFIX = "data:image/png;base64,"


def resolve_color(value: str | None) -> tuple[int, int, int] | None:
    """Paint value to RGB; None means 'draw nothing'. Unknown keywords render
    black so previews stay deterministic rather than failing."""
    if value is None or value == "none":
        return None
    if value.startswith("#"):
        return (int(value[1:3], 16), int(value[3:5], 16), int(value[5:7], 16))
    return _KEYWORD_COLORS.get(value, (0, 0, 0))


@dataclass(frozen=True)
class _Style:
    fill: str = "black"
    stroke: str = "none"
    stroke_width: float = 1.0

    def child(self, node: SvgNode) -> "_Style":
        out = self
        if "fill" in node.attrs:
            out = replace(out, fill=node.attrs["fill"])
        if "stroke" in node.attrs:
            out = replace(out, stroke=node.attrs["stroke"])
        if "stroke-width" in node.attrs:
            out = replace(out, stroke_width=node.num("stroke-width", 1.0))
        return out


def _span(lo: float, hi: float, limit: int) -> tuple[int, int]:
    """Indices of pixels whose centers lie in [lo, hi), clipped to 0..limit."""
    start = max(0, math.ceil(lo - 0.5))
    end = min(limit, math.ceil(hi - 0.5))
    return start, max(start, end)


class _Painter:
    def __init__(self, canvas: np.ndarray):
        self.canvas = canvas
        self.height, self.width = canvas.shape[:2]

    # -- primitives ------------------------------------------------------

    def rect(self, x0: float, y0: float, x1: float, y1: float, color) -> None:
        if color is None:
            return
        cx0, cx1 = _span(min(x0, x1), max(x0, x1), self.width)
        cy0, cy1 = _span(min(y0, y1), max(y0, y1), self.height)
        self.canvas[cy0:cy1, cx0:cx1] = color

    def rect_border(self, x0, y0, x1, y1, color, band: float) -> None:
        if color is None:
            return
        band = max(1.0, band)
        self.rect(x0, y0, x1, y0 + band, color)
        self.rect(x0, y1 - band, x1, y1, color)
        self.rect(x0, y0, x0 + band, y1, color)
        self.rect(x1 - band, y0, x1, y1, color)

    def circle(self, cx: float, cy: float, r: float, fill, stroke, band: float) -> None:
        if r <= 0:
            return
        x0, x1 = _span(cx - r, cx + r, self.width)
        y0, y1 = _span(cy - r, cy + r, self.height)
        if x0 >= x1 or y0 >= y1:
            return
        yy, xx = np.ogrid[y0:y1, x0:x1]
        d2 = (xx + 0.5 - cx) ** 2 + (yy + 0.5 - cy) ** 2
        if fill is not None:
            region = self.canvas[y0:y1, x0:x1]
            region[d2 <= r * r] = fill
        if stroke is not None:
            inner = max(0.0, r - max(1.0, band))
            region = self.canvas[y0:y1, x0:x1]
            region[(d2 <= r * r) & (d2 >= inner * inner)] = stroke

    def segment(self, x1: float, y1: float, x2: float, y2: float, color, width: float) -> None:
        if color is None:
            return
        half = max(0.5, width / 2.0)
        pad = half + 1.0
        cx0, cx1 = _span(min(x1, x2) - pad, max(x1, x2) + pad, self.width)
        cy0, cy1 = _span(min(y1, y2) - pad, max(y1, y2) + pad, self.height)
        if cx0 >= cx1 or cy0 >= cy1:
            return
        yy, xx = np.mgrid[cy0:cy1, cx0:cx1]
        px = xx + 0.5
        py = yy + 0.5
        dx, dy = x2 - x1, y2 - y1
        len2 = dx * dx + dy * dy
        if len2 == 0:
            t = np.zeros_like(px)
        else:
            t = np.clip(((px - x1) * dx + (py - y1) * dy) / len2, 0.0, 1.0)
        d2 = (px - (x1 + t * dx)) ** 2 + (py - (y1 + t * dy)) ** 2
        region = self.canvas[cy0:cy1, cx0:cx1]
        region[d2 <= half * half] = color

    def polygon_evenodd(self, subpaths: list[list[tuple[float, float]]], color) -> None:
        """Scanline even-odd fill: pixel centers with odd crossing counts."""
        if color is None or not subpaths:
            return
        xs = [p[0] for sp in subpaths for p in sp]
        ys = [p[1] for sp in subpaths for p in sp]
        cx0, cx1 = _span(min(xs), max(xs), self.width)
        cy0, cy1 = _span(min(ys), max(ys), self.height)
        if cx0 >= cx1 or cy0 >= cy1:
            return
        ycenters = np.arange(cy0, cy1) + 0.5
        xcenters = np.arange(cx0, cx1) + 0.5
        crossings = np.zeros((cy1 - cy0, cx1 - cx0), dtype=np.int32)
        for sp in subpaths:
            if len(sp) < 2:
                continue
            closed = sp + [sp[0]]
            for (ex1, ey1), (ex2, ey2) in zip(closed, closed[1:]):
                if ey1 == ey2:
                    continue
                rows = (ycenters >= min(ey1, ey2)) & (ycenters < max(ey1, ey2))
                if not rows.any():
                    continue
                xc = ex1 + (ycenters - ey1) * (ex2 - ex1) / (ey2 - ey1)
                crossings += (rows[:, None] & (xcenters[None, :] < xc[:, None])).astype(np.int32)
        region = self.canvas[cy0:cy1, cx0:cx1]
        region[crossings % 2 == 1] = color

    def image(self, x0: float, y0: float, x1: float, y1: float, href: str) -> None:
        if not href.startswith(_DATA_URI_PREFIX):
            return
        try:
            rgba = pngio.decode_rgba(base64.b64decode(href[len(_DATA_URI_PREFIX):]))
        except Exception:
            return
        cx0, cx1 = _span(min(x0, x1), max(x0, x1), self.width)
        cy0, cy1 = _span(min(y0, y1), max(y0, y1), self.height)
        if cx0 >= cx1 or cy0 >= cy1:
            return
        resized = pngio.resize_rgba_nearest(rgba, cx1 - cx0, cy1 - cy0)
        alpha = resized[:, :, 3:4].astype(np.float64) / 255.0
        region = self.canvas[cy0:cy1, cx0:cx1].astype(np.float64)
        blended = resized[:, :, :3].astype(np.float64) * alpha + region * (1.0 - alpha)
        self.canvas[cy0:cy1, cx0:cx1] = np.rint(blended).astype(np.uint8)

    def token(self, label: str, cx: float, cy: float, box_w: float, box_h: float, color) -> None:
        scale = max(1, int(min(box_w, box_h)) // 3 // font.GLYPH_H)
        tw, th = font.text_extent(label, scale)
        font.draw_text(
            self.canvas, label, round(cx - tw / 2), round(cy - th / 2), color, scale=scale
        )


def _flatten_path(d: str, affine: Affine) -> list[list[tuple[float, float]]]:
    subpaths: list[list[tuple[float, float]]] = []
    current: list[tuple[float, float]] = []
    for cmd, args in parse_path_d(d):
        if cmd == "M":
            if current:
                subpaths.append(current)
            current = [apply_affine(affine, args[0], args[1])]
        elif cmd == "L":
            current.append(apply_affine(affine, args[0], args[1]))
        elif cmd == "C":
            if not current:
                continue
            p0 = current[-1]
            p1 = apply_affine(affine, args[0], args[1])
            p2 = apply_affine(affine, args[2], args[3])
            p3 = apply_affine(affine, args[4], args[5])
            for i in range(1, _CURVE_STEPS + 1):
                t = i / _CURVE_STEPS
                mt = 1.0 - t
                x = (mt**3) * p0[0] + 3 * (mt**2) * t * p1[0] + 3 * mt * (t**2) * p2[0] + (t**3) * p3[0]
                y = (mt**3) * p0[1] + 3 * (mt**2) * t * p1[1] + 3 * mt * (t**2) * p2[1] + (t**3) * p3[1]
                current.append((x, y))
        elif cmd == "Z":
            if current:
                current.append(current[0])
                subpaths.append(current)
                current = []
    if current:
        subpaths.append(current)
    return subpaths


def _paint_node(painter: _Painter, node: SvgNode, affine: Affine, style: _Style,
                visible: bool) -> None:
    style = style.child(node)
    affine = compose(affine, node.local_affine())
    s = affine[0]

    if node.kind == GROUP:
        for child in node.children:
            _paint_node(painter, child, affine, style, visible)
        if visible and is_placeholder_group(node):
            rect = node.children[0]
            x0, y0 = apply_affine(affine, rect.num("x"), rect.num("y"))
            x1, y1 = apply_affine(
                affine, rect.num("x") + rect.num("width"), rect.num("y") + rect.num("height")
            )
            fill = resolve_color(rect.attrs.get("fill", style.fill))
            token_color = (0, 0, 0)
            if fill is not None:
                lum = 0.299 * fill[0] + 0.587 * fill[1] + 0.114 * fill[2]
                token_color = (0, 0, 0) if lum > 127.5 else (255, 255, 255)
            painter.token(
                f"<AF>{af_id_of(node)}",
                (x0 + x1) / 2.0,
                (y0 + y1) / 2.0,
                abs(x1 - x0),
                abs(y1 - y0),
                token_color,
            )
        return

    if not visible:
        return

    fill = resolve_color(node.attrs.get("fill", style.fill))
    stroke = resolve_color(node.attrs.get("stroke", style.stroke))
    sw = node.num("stroke-width", style.stroke_width) * abs(s)

    if node.kind == RECT:
        x0, y0 = apply_affine(affine, node.num("x"), node.num("y"))
        x1, y1 = apply_affine(
            affine, node.num("x") + node.num("width"), node.num("y") + node.num("height")
        )
        painter.rect(x0, y0, x1, y1, fill)
        if stroke is not None:
            painter.rect_border(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1), stroke, sw)
    elif node.kind == CIRCLE:
        cx, cy = apply_affine(affine, node.num("cx"), node.num("cy"))
        painter.circle(cx, cy, node.num("r") * abs(s), fill, stroke, sw)
    elif node.kind == LINE:
        x1, y1 = apply_affine(affine, node.num("x1"), node.num("y1"))
        x2, y2 = apply_affine(affine, node.num("x2"), node.num("y2"))
        painter.segment(x1, y1, x2, y2, stroke, sw)
    elif node.kind == PATH:
        subpaths = _flatten_path(node.attrs.get("d", "M 0 0"), affine)
        painter.polygon_evenodd(subpaths, fill)
        if stroke is not None:
            for sp in subpaths:
                for (ax, ay), (bx, by) in zip(sp, sp[1:]):
                    painter.segment(ax, ay, bx, by, stroke, sw)
    elif node.kind == TEXT:
        color = resolve_color(node.attrs.get("fill", "black")) or (0, 0, 0)
        x, y = apply_affine(affine, node.num("x"), node.num("y"))
        fs = node.num("font-size", 16.0) * abs(s)
        glyph_scale = max(1, round(fs / font.GLYPH_H))
        font.draw_text(
            painter.canvas,
            node.text.upper(),
            round(x),
            round(y) - font.GLYPH_H * glyph_scale,
            color,
            scale=glyph_scale,
        )
    elif node.kind == IMAGE:
        x0, y0 = apply_affine(affine, node.num("x"), node.num("y"))
        x1, y1 = apply_affine(
            affine, node.num("x") + node.num("width"), node.num("y") + node.num("height")
        )
        painter.image(x0, y0, x1, y1, node.attrs.get("href", ""))


def _root_affine(doc: SvgDocument, out_width: int) -> tuple[Affine, int, int]:
    vx, vy, vw, vh = doc.view_box
    scale = out_width / vw
    height = max(1, round(vh * scale))
    return (scale, -vx * scale, -vy * scale), out_width, height


def _render(doc: SvgDocument, out_width: int, background: tuple[int, int, int],
            only_id: str | None = None) -> np.ndarray:
    affine, width, height = _root_affine(doc, out_width)
    canvas = np.empty((height, width, 3), dtype=np.uint8)
    canvas[:, :] = background
    painter = _Painter(canvas)
    style = _Style()

    def walk(node: SvgNode, aff: Affine, sty: _Style, visible: bool) -> None:
        now_visible = visible or only_id is None or node.id == only_id
        if node.kind == GROUP and not now_visible:
            sty = sty.child(node)
            aff = compose(aff, node.local_affine())
            for child in node.children:
                walk(child, aff, sty, False)
            return
        _paint_node(painter, node, aff, sty, now_visible)

    for child in doc.children:
        walk(child, affine, style, only_id is None)
    return canvas


def rasterize_preview(doc: SvgDocument, out_width: int) -> np.ndarray:
    """Render the document to an RGB raster of the given width on white."""
    if out_width < 1:
        raise ValueError("out_width must be >= 1")
    return _render(doc, out_width, (255, 255, 255))


def paint_extent(doc: SvgDocument, node_id: str, out_width: int) -> tuple[int, int, int, int] | None:
    """Device-pixel bounding box (x0, y0, x1, y1 exclusive) of everything the
    identified subtree paints, or None if it paints nothing.

    Measured, not estimated: the subtree is rendered alone over white and
    over black, and any pixel that differs from either background counts.
    """
    over_white = _render(doc, out_width, (255, 255, 255), only_id=node_id)
    over_black = _render(doc, out_width, (0, 0, 0), only_id=node_id)
    painted = np.any(over_white != (255, 255, 255), axis=2) | np.any(
        over_black != (0, 0, 0), axis=2
    )
    ys, xs = np.nonzero(painted)
    if ys.size == 0:
        return None
    return (int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)
