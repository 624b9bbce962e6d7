"""Shared generators and independent oracles used across the test suite.

Everything here is deliberately written from scratch (breadth-first flood
fill, decimal-based number formatting, plain affine algebra) so the tests
check the package against a second, independent implementation instead of
against itself.
"""

from __future__ import annotations

import random
from collections import deque
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from figforge.model import BoundingBox, ComponentMask, RasterDraft, SegmentationResult
from figforge.segmenter import SegmenterConfig
from figforge.svgkit import SvgDocument, SvgNode, serialize_svg

# ---------------------------------------------------------------------------
# raster generators


def flat_color_raster(
    rng: random.Random,
    max_size: int = 128,
    max_colors: int = 8,
) -> np.ndarray:
    """Random flat-color test image: a background plus rectangles/discs.

    Colors are drawn far apart (multiples of 40 per channel) so quantization
    buckets never merge two intended colors by accident.
    """
    w = rng.randint(24, max_size)
    h = rng.randint(24, max_size)
    palette = []
    while len(palette) < max_colors:
        c = (rng.randrange(0, 7) * 40, rng.randrange(0, 7) * 40, rng.randrange(0, 7) * 40)
        if c not in palette:
            palette.append(c)
    bg = palette[0]
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[:, :] = bg
    n_shapes = rng.randint(1, 7)
    for _ in range(n_shapes):
        color = palette[rng.randint(1, max_colors - 1)]
        if rng.random() < 0.5:
            x0 = rng.randint(0, w - 2)
            y0 = rng.randint(0, h - 2)
            x1 = rng.randint(x0 + 1, min(w, x0 + w // 2 + 2))
            y1 = rng.randint(y0 + 1, min(h, y0 + h // 2 + 2))
            img[y0:y1, x0:x1] = color
        else:
            cx = rng.randint(0, w - 1)
            cy = rng.randint(0, h - 1)
            r = rng.randint(2, max(3, min(w, h) // 4))
            yy, xx = np.ogrid[:h, :w]
            img[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = color
    return img


# ---------------------------------------------------------------------------
# segmentation oracle: quantize + BFS flood fill + border-background +
# scan-order renumber, written with none of the package's vector tricks.


def _oracle_quantize(pixels: np.ndarray, levels: int) -> np.ndarray:
    h, w, _ = pixels.shape
    out = np.zeros((h, w), dtype=np.int64)
    for y in range(h):
        for x in range(w):
            r, g, b = (int(v) for v in pixels[y, x])
            rq = (r * levels) >> 8
            gq = (g * levels) >> 8
            bq = (b * levels) >> 8
            out[y, x] = (rq * levels + gq) * levels + bq
    return out


def flood_fill_segment_oracle(
    pixels: np.ndarray, config: SegmenterConfig
) -> list[tuple[np.ndarray, tuple[int, int, int, int]]]:
    """Brute-force reference for `segment`: returns [(bitmap, (x, y, w, h))]
    in scan order with the background region(s) removed.
    """
    h, w, _ = pixels.shape
    quant = _oracle_quantize(pixels, config.quantization_levels)
    comp = np.full((h, w), -1, dtype=np.int64)
    if config.connectivity == 4:
        neigh = ((0, -1), (0, 1), (-1, 0), (1, 0))
    else:
        neigh = ((0, -1), (0, 1), (-1, 0), (1, 0), (-1, -1), (-1, 1), (1, -1), (1, 1))

    next_id = 0
    for y in range(h):
        for x in range(w):
            if comp[y, x] != -1:
                continue
            value = quant[y, x]
            queue = deque([(y, x)])
            comp[y, x] = next_id
            while queue:
                cy, cx = queue.popleft()
                for dy, dx in neigh:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and comp[ny, nx] == -1 and quant[ny, nx] == value:
                        comp[ny, nx] = next_id
                        queue.append((ny, nx))
            next_id += 1

    # background selection
    background: set[int] = set()
    if config.background_rule == "explicit-color":
        r, g, b = config.background_color
        levels = config.quantization_levels
        target = ((((r * levels) >> 8) * levels + ((g * levels) >> 8)) * levels) + ((b * levels) >> 8)
        for cid in range(next_id):
            ys, xs = np.nonzero(comp == cid)
            if quant[ys[0], xs[0]] == target:
                background.add(cid)
    else:
        border: dict[int, int] = {}
        for cid in range(next_id):
            bitmap = comp == cid
            touches = bitmap[0, :].any() or bitmap[-1, :].any() or bitmap[:, 0].any() or bitmap[:, -1].any()
            if touches:
                border[cid] = int(bitmap.sum())
        if border:
            best = max(sorted(border), key=lambda cid: border[cid])
            background.add(best)

    out = []
    seen: list[int] = []
    for y in range(h):
        for x in range(w):
            cid = int(comp[y, x])
            if cid in background or cid in seen:
                continue
            seen.append(cid)
            bitmap = comp == cid
            ys, xs = np.nonzero(bitmap)
            box = (int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1))
            out.append((bitmap, box))
    return out


# ---------------------------------------------------------------------------
# synthetic segmentation fixtures (planted, non-overlapping boxes)


def planted_segmentation(
    rng: random.Random,
    width: int = 96,
    height: int = 96,
    k: int | None = None,
) -> tuple[RasterDraft, SegmentationResult]:
    """Draft + matching segmentation with K disjoint rectangular components
    on a white background, placed on a grid so they never touch.
    """
    k = k if k is not None else rng.randint(1, 6)
    pixels = np.full((height, width, 3), 255, dtype=np.uint8)
    components = []
    cols = 3
    cell_w, cell_h = width // cols, height // 2
    slots = [(c * cell_w, r * cell_h) for r in range(2) for c in range(cols)]
    rng.shuffle(slots)
    for i in range(k):
        sx, sy = slots[i]
        bw = rng.randint(4, max(5, cell_w - 8))
        bh = rng.randint(4, max(5, cell_h - 8))
        x = sx + rng.randint(2, max(3, cell_w - bw - 2))
        y = sy + rng.randint(2, max(3, cell_h - bh - 2))
        x, y = min(x, width - bw - 1), min(y, height - bh - 1)
        color = ((40 * (i + 1)) % 200, (70 * (i + 1)) % 200, (110 * (i + 1)) % 200)
        pixels[y : y + bh, x : x + bw] = color
        bitmap = np.zeros((height, width), dtype=bool)
        bitmap[y : y + bh, x : x + bw] = True
        box = BoundingBox(x, y, bw, bh)
        components.append((ComponentMask(i + 1, bitmap), box))
    draft = RasterDraft(pixels)
    return draft, SegmentationResult(components)


# ---------------------------------------------------------------------------
# number-formatting oracle


def decimal_fmt_oracle(value: float) -> str:
    """Reference for fmt_num: half-away-from-zero at 3 decimals computed with
    the decimal module on the exact binary value.

    Only trustworthy for inputs that are at least half an ulp away from a
    0.0005 tie after scaling (all values on a 3-decimal grid qualify); exact
    ties are covered by a hand-frozen table instead.
    """
    mag = Decimal(abs(float(value))).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP)
    q = -mag if value < 0 else mag
    text = format(q, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    if text in ("-0", ""):
        text = "0"
    return text


# ---------------------------------------------------------------------------
# random subset documents


_COLORS = ["#ff0000", "#00aa88", "#123456", "red", "black", "none", "#abc"]
_FONTS = ["sans-serif", "monospace", "serif"]


def _random_leaf(rng: random.Random, counter: list[int]) -> SvgNode:
    kind = rng.choice(["rect", "circle", "line", "path", "text", "image"])
    n = lambda lo, hi: round(rng.uniform(lo, hi), 3)
    if kind == "rect":
        return SvgNode.make(
            "rect",
            {
                "x": n(-20, 200),
                "y": n(-20, 200),
                "width": n(1, 120),
                "height": n(1, 120),
                "fill": rng.choice(_COLORS),
            },
        )
    if kind == "circle":
        return SvgNode.make(
            "circle",
            {"cx": n(0, 200), "cy": n(0, 200), "r": n(0.5, 60), "fill": rng.choice(_COLORS)},
        )
    if kind == "line":
        return SvgNode.make(
            "line",
            {
                "x1": n(0, 200),
                "y1": n(0, 200),
                "x2": n(0, 200),
                "y2": n(0, 200),
                "stroke": rng.choice(_COLORS[:5]),
            },
        )
    if kind == "path":
        parts = [f"M {n(0, 100)} {n(0, 100)}"]
        for _ in range(rng.randint(1, 4)):
            if rng.random() < 0.6:
                parts.append(f"L {n(0, 100)} {n(0, 100)}")
            else:
                coords = " ".join(str(n(0, 100)) for _ in range(6))
                parts.append(f"C {coords}")
        if rng.random() < 0.5:
            parts.append("Z")
        return SvgNode.make("path", {"d": " ".join(parts), "fill": rng.choice(_COLORS)})
    if kind == "text":
        node = SvgNode.make(
            "text",
            {
                "x": n(0, 200),
                "y": n(0, 200),
                "font-size": n(4, 30),
                "font-family": rng.choice(_FONTS),
                "fill": rng.choice(_COLORS[:5]),
            },
        )
        node.text = rng.choice(["label", "K=3", "encoder", "x < y & z", 'a "q"'])
        return node
    counter[0] += 1
    return SvgNode.make(
        "image",
        {
            "x": n(0, 150),
            "y": n(0, 150),
            "width": n(2, 60),
            "height": n(2, 60),
            "href": "data:image/png;base64,AAAA",
        },
    )


def _random_group(rng: random.Random, depth: int, counter: list[int]) -> SvgNode:
    attrs: dict = {"id": f"grp-{counter[0]}"}
    counter[0] += 1
    if rng.random() < 0.7:
        tx, ty = round(rng.uniform(-40, 40), 3), round(rng.uniform(-40, 40), 3)
        t = f"translate({tx},{ty})"
        if rng.random() < 0.4:
            t += f" scale({round(rng.uniform(0.3, 2.5), 3)})"
        attrs["transform"] = t
    if rng.random() < 0.3:
        attrs["fill"] = rng.choice(_COLORS[:5])
    group = SvgNode.make("g", attrs)
    for _ in range(rng.randint(1, 4)):
        if depth > 0 and rng.random() < 0.35:
            group.children.append(_random_group(rng, depth - 1, counter))
        else:
            group.children.append(_random_leaf(rng, counter))
    return group


def random_document(rng: random.Random) -> SvgDocument:
    """Arbitrary valid document over the supported element subset."""
    counter = [0]
    children = []
    for _ in range(rng.randint(1, 6)):
        if rng.random() < 0.5:
            children.append(_random_group(rng, 2, counter))
        else:
            children.append(_random_leaf(rng, counter))
    vb = (
        round(rng.uniform(-10, 10), 3),
        round(rng.uniform(-10, 10), 3),
        round(rng.uniform(50, 400), 3),
        round(rng.uniform(50, 400), 3),
    )
    return SvgDocument(view_box=vb, children=children)


def mangle_svg_text(rng: random.Random, text: str) -> str:
    """Corrupt a serialized document: byte noise, tag surgery, truncation."""
    choice = rng.randrange(7)
    if choice == 0:
        return text[: rng.randint(0, len(text))]
    if choice == 1:
        i = rng.randint(0, max(0, len(text) - 2))
        return text[:i] + rng.choice("<>&\"'\x00\x07") + text[i + 1 :]
    if choice == 2:
        return text.replace("rect", rng.choice(["polygon", "ellipse", "foreignObject"]), 1)
    if choice == 3:
        return text.replace('viewBox="', 'viewBox="oops ', 1)
    if choice == 4:
        return text.replace("translate", rng.choice(["rotate", "matrix", "skewX"]), 1)
    if choice == 5:
        i = rng.randint(0, max(0, len(text) - 10))
        return text[:i] + "<bogus attr='1'>" + text[i:]
    return "".join(rng.choice("<>/= abcdefgh\"'0123456789\n") for _ in range(rng.randint(0, 160)))


def svg_text_bytes(doc: SvgDocument) -> str:
    return serialize_svg(doc)
