"""Generation backends: text-to-image and vision-language clients.

Two implementations of each role. The remote clients speak a small JSON
wire format with retry/backoff. The mocks are first-class pure functions of
their inputs — the whole pipeline runs offline, deterministically, which is
what makes it testable at desk scale.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import random
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Protocol

import numpy as np

from figforge import pngio
from figforge.errors import BackendError, EmptyInput
from figforge.indexer import IndexedLayout
from figforge.model import (
    BoundingBox,
    DraftProvenance,
    RasterDraft,
    SegmentationResult,
    SourceText,
    StyleReference,
)
from figforge.segmenter import quantize_colors
from figforge.svgkit import (
    PLACEHOLDER_CLASS,
    GROUP,
    RECT,
    SvgDocument,
    SvgNode,
    find_placeholder_slots,
    parse_svg,
    serialize_svg,
)

ENV_T2I_URL = "FIGFORGE_T2I_URL"
ENV_VLM_URL = "FIGFORGE_VLM_URL"
ENV_API_TOKEN = "FIGFORGE_API_TOKEN"

MAX_BLOCKS = 12

_FIXED_PALETTE = [
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
    (148, 103, 189), (140, 86, 75), (227, 119, 194), (127, 127, 127),
    (188, 189, 34), (23, 190, 207), (57, 59, 121), (99, 121, 57),
]


def _prompt(name: str) -> str:
    return resources.files("figforge.prompts").joinpath(name).read_text(encoding="utf-8")


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # t2i | vlm | segmentation | matting
    endpoint: str
    auth_env: str = ENV_API_TOKEN
    timeout_s: float = 30.0
    retries: int = 2
    backoff_ms: float = 250.0

    def __post_init__(self):
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class T2iRequest:
    text: SourceText
    style: StyleReference | None = None
    target_dims: tuple[int, int] = (384, 384)
    seed: int | None = None

    def __post_init__(self):
        if self.text.is_blank:
            raise EmptyInput("generation text is empty")


@dataclass(frozen=True)
class VlmSvgRequest:
    task: str  # template | refine
    images: tuple[np.ndarray, ...]
    instructions: str
    svg_code: str | None = None

    def __post_init__(self):
        if self.task == "template" and len(self.images) != 1:
            raise ValueError("template task carries exactly the indexed layout")
        if self.task == "refine" and (len(self.images) != 3 or self.svg_code is None):
            raise ValueError("refine task carries draft, indexed, preview, and code")


class T2iBackend(Protocol):
    def generate(self, req: T2iRequest) -> RasterDraft: ...


class VlmBackend(Protocol):
    def template(self, indexed: IndexedLayout, k_count: int) -> str: ...

    def refine(self, draft: np.ndarray, indexed: np.ndarray, preview: np.ndarray,
               svg_code: str, k_count: int) -> str: ...


# -- transport and retry policy ------------------------------------------------


def requests_transport(url: str, body: dict, headers: dict, timeout_s: float):
    import requests

    try:
        resp = requests.post(url, json=body, headers=headers, timeout=timeout_s)
    except requests.Timeout as exc:
        raise TimeoutError(str(exc)) from exc
    except requests.RequestException as exc:
        raise ConnectionError(str(exc)) from exc
    return resp.status_code, resp.content


def sentinel_transport(url, body, headers, timeout_s):
    """Transport that proves no network is touched: any call is a failure."""
    raise AssertionError(f"network call attempted to {url}")


def invoke_backend(descriptor: BackendDescriptor, payload: dict,
                   transport=None) -> tuple[dict, list[dict]]:
    """POST the payload with retry/backoff; return (parsed JSON, attempt log).

    Timeouts, connection failures, and 5xx responses are retried with
    exponential backoff; 4xx responses fail immediately. At most
    retries+1 attempts are made.
    """
    transport = transport or requests_transport
    headers = {}
    token = os.environ.get(descriptor.auth_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"

    attempts: list[dict] = []
    for attempt in range(descriptor.retries + 1):
        if attempt:
            time.sleep(descriptor.backoff_ms * (2 ** (attempt - 1)) / 1000.0)
        started = time.perf_counter()
        try:
            status, body = transport(descriptor.endpoint, payload, headers, descriptor.timeout_s)
        except TimeoutError as exc:
            attempts.append(_attempt(None, f"timeout: {exc}", started))
            continue
        except ConnectionError as exc:
            attempts.append(_attempt(None, f"connection: {exc}", started))
            continue
        attempts.append(_attempt(status, None, started))
        if status == 200:
            try:
                return json.loads(body.decode("utf-8")), attempts
            except (ValueError, UnicodeDecodeError) as exc:
                raise BackendError("protocol", f"response is not JSON: {exc}", attempts)
        if 400 <= status < 500:
            raise BackendError("http", f"status {status}", attempts)
        # 5xx: retry
    raise BackendError("exhausted", f"{len(attempts)} attempts failed", attempts)


def _attempt(status, error, started) -> dict:
    return {
        "status": status,
        "error": error,
        "latency_ms": round((time.perf_counter() - started) * 1000.0, 3),
    }


def _b64_rgb(pixels: np.ndarray) -> str:
    return base64.b64encode(pngio.encode_rgb(pixels)).decode("ascii")


# -- mock backends ---------------------------------------------------------------


def dominant_palette(pixels: np.ndarray, n: int = MAX_BLOCKS) -> list[tuple[int, int, int]]:
    """Most frequent quantized colors of a reference image, near-white
    excluded, each reported as the mean color of its bucket."""
    labels = quantize_colors(pixels, 8)
    white_label = int(quantize_colors(np.full((1, 1, 3), 255, dtype=np.uint8), 8)[0, 0])
    values, counts = np.unique(labels, return_counts=True)
    order = np.argsort(counts)[::-1]
    palette = []
    for i in order:
        label = int(values[i])
        if label == white_label:
            continue
        bucket = pixels[labels == label]
        palette.append(tuple(int(round(c)) for c in bucket.mean(axis=0)))
        if len(palette) == n:
            break
    return palette


def split_blocks(text: str) -> list[str]:
    blocks = [b.strip() for b in text.split("\n\n")]
    return [b for b in blocks if b][:MAX_BLOCKS]


class MockT2i:
    """Deterministic stand-in for the text-to-image model.

    One flat-colored shape per text block (blank-line separated, capped at
    12) on a white canvas, shapes cycling rect/circle/rounded-rect over a
    fixed grid. Pure function of (text, style hash, seed). A negative seed
    renders a blank canvas — the documented hook for exercising the
    no-components failure path.
    """

    def generate(self, req: T2iRequest) -> RasterDraft:
        width, height = req.target_dims
        if width < 64 or height < 48:
            raise ValueError("mock drafts need at least a 64x48 canvas")
        seed = 0 if req.seed is None else req.seed
        canvas = np.full((height, width, 3), 255, dtype=np.uint8)
        provenance = DraftProvenance("mock-t2i", req.seed)
        if seed < 0:
            return RasterDraft(canvas, provenance)

        blocks = split_blocks(req.text.body)
        style_hash = req.style.content_hash if req.style is not None else "none"
        text_digest = hashlib.sha256(req.text.body.encode("utf-8")).hexdigest()[:16]
        rng = random.Random(f"{seed}:{style_hash}:{text_digest}")

        palette = list(_FIXED_PALETTE)
        if req.style is not None:
            dominant = dominant_palette(req.style.pixels)
            palette = dominant + [c for c in _FIXED_PALETTE if c not in dominant]

        cols, rows = 4, 3
        cell_w, cell_h = width // cols, height // rows
        for i, _block in enumerate(blocks):
            row, col = divmod(i, cols)
            cx0, cy0 = col * cell_w, row * cell_h
            color = palette[i % len(palette)]
            margin = max(4, cell_w // 8)
            w = rng.randint(int(cell_w * 0.4), cell_w - 2 * margin)
            h = rng.randint(int(cell_h * 0.4), cell_h - 2 * margin)
            x = cx0 + rng.randint(margin, cell_w - margin - w)
            y = cy0 + rng.randint(margin, cell_h - margin - h)
            kind = i % 3
            if kind == 0:
                canvas[y : y + h, x : x + w] = color
            elif kind == 1:
                r = min(w, h) // 2
                ccx, ccy = x + w // 2, y + h // 2
                yy, xx = np.ogrid[y : y + h, x : x + w]
                mask = (xx + 0.5 - ccx) ** 2 + (yy + 0.5 - ccy) ** 2 <= r * r
                canvas[y : y + h, x : x + w][mask] = color
            else:
                r = max(2, min(w, h) // 5)
                canvas[y + r : y + h - r, x : x + w] = color
                canvas[y : y + h, x + r : x + w - r] = color
                for ccx, ccy in ((x + r, y + r), (x + w - r, y + r),
                                 (x + r, y + h - r), (x + w - r, y + h - r)):
                    yy, xx = np.ogrid[y : y + h, x : x + w]
                    mask = (xx + 0.5 - ccx) ** 2 + (yy + 0.5 - ccy) ** 2 <= r * r
                    canvas[y : y + h, x : x + w][mask] = color
        return RasterDraft(canvas, provenance)


class MockVlm:
    """Geometry-faithful stand-in for the vision-language model.

    Template slots are each component's exact bounding box (taken from the
    bound segmentation when available, else recovered from the indexed
    layout's tones). Refinement behavior is selectable so tests can exercise
    the acceptance gate: "snap" recenters every slot onto its component,
    "identity" returns the input, "drop" removes a placeholder, "garbage"
    returns non-XML.
    """

    def __init__(self, seg: SegmentationResult | None = None, refine_behavior: str = "snap",
                 drop_id: int | None = None):
        self.seg = seg
        self.refine_behavior = refine_behavior
        self.drop_id = drop_id

    # -- helpers -----------------------------------------------------------

    def _boxes_from_layout(self, indexed: IndexedLayout) -> dict[int, BoundingBox]:
        boxes = {}
        for k, tone in indexed.legend.items():
            match = np.all(indexed.pixels == np.array(tone, dtype=np.uint8), axis=2)
            ys, xs = np.nonzero(match)
            if ys.size:
                boxes[k] = BoundingBox(
                    int(xs.min()), int(ys.min()),
                    int(xs.max()) - int(xs.min()) + 1, int(ys.max()) - int(ys.min()) + 1,
                )
        return boxes

    def _boxes(self, indexed: IndexedLayout) -> dict[int, BoundingBox]:
        if self.seg is not None:
            return {mask.id: box for mask, box in self.seg.components}
        return self._boxes_from_layout(indexed)

    @staticmethod
    def _slot(k: int, box: BoundingBox, tone: tuple[int, int, int]) -> SvgNode:
        fill = "#{:02x}{:02x}{:02x}".format(*tone)
        rect = SvgNode.make(RECT, {
            "x": box.x, "y": box.y, "width": box.w, "height": box.h, "fill": fill,
        })
        return SvgNode.make(GROUP, {
            "id": f"AF-{k}", "class": PLACEHOLDER_CLASS, "data-af": str(k),
        }, [rect])

    # -- backend interface -------------------------------------------------

    def template(self, indexed: IndexedLayout, k_count: int) -> str:
        height, width = indexed.pixels.shape[:2]
        boxes = self._boxes(indexed)
        children = []
        for k in range(1, k_count + 1):
            if k in boxes:
                children.append(self._slot(k, boxes[k], indexed.legend[k]))
        return serialize_svg(SvgDocument((0.0, 0.0, float(width), float(height)), children))

    def refine(self, draft: np.ndarray, indexed: np.ndarray, preview: np.ndarray,
               svg_code: str, k_count: int) -> str:
        if self.refine_behavior == "garbage":
            return "<<< not an svg document >>>"
        if self.refine_behavior == "identity":
            return svg_code
        doc = parse_svg(svg_code)
        if self.refine_behavior == "drop":
            drop = self.drop_id if self.drop_id is not None else k_count
            doc.children = [
                n for n in doc.children
                if not (n.kind == GROUP and n.attrs.get("id") == f"AF-{drop}")
            ]
            return serialize_svg(doc)
        # snap: move/reshape every slot to its component's exact box,
        # mapped into view-box units.
        if self.seg is None:
            return svg_code
        draft_w = draft.shape[1]
        vb = doc.view_box
        scale = draft_w / vb[2]
        boxes = {mask.id: box for mask, box in self.seg.components}
        for slot in find_placeholder_slots(doc):
            if slot.af_id not in boxes:
                continue
            box = boxes[slot.af_id]
            group = doc.children[slot.node_path[0]]
            for i in slot.node_path[1:]:
                group = group.children[i]
            rect = group.children[0]
            rect.attrs.update(SvgNode.make(RECT, {
                "x": box.x / scale + vb[0],
                "y": box.y / scale + vb[1],
                "width": box.w / scale,
                "height": box.h / scale,
                "fill": rect.attrs.get("fill", "#cccccc"),
            }).attrs)
        return serialize_svg(doc)


# -- remote backends -------------------------------------------------------------


class RemoteT2i:
    def __init__(self, descriptor: BackendDescriptor, transport=None):
        self.descriptor = descriptor
        self.transport = transport

    def generate(self, req: T2iRequest) -> RasterDraft:
        payload = {
            "task": "t2i",
            "text": req.text.body,
            "images": [_b64_rgb(req.style.pixels)] if req.style is not None else [],
            "svg": None,
            "seed": req.seed,
        }
        response, _ = invoke_backend(self.descriptor, payload, self.transport)
        encoded = response.get("image")
        if not encoded:
            raise BackendError("protocol", "response missing 'image'")
        pixels = pngio.decode_rgb(base64.b64decode(encoded))
        return RasterDraft(pixels, DraftProvenance("remote-t2i", req.seed))


class RemoteVlm:
    def __init__(self, descriptor: BackendDescriptor, transport=None):
        self.descriptor = descriptor
        self.transport = transport

    def _call(self, req: VlmSvgRequest) -> str:
        payload = {
            "task": req.task,
            "text": req.instructions,
            "images": [_b64_rgb(img) for img in req.images],
            "svg": req.svg_code,
            "seed": None,
        }
        response, _ = invoke_backend(self.descriptor, payload, self.transport)
        svg = response.get("svg")
        if not svg:
            raise BackendError("protocol", "response missing 'svg'")
        return svg

    def template(self, indexed: IndexedLayout, k_count: int) -> str:
        instructions = _prompt("template_prompt.txt").format(k_count=k_count)
        return self._call(VlmSvgRequest("template", (indexed.pixels,), instructions))

    def refine(self, draft: np.ndarray, indexed: np.ndarray, preview: np.ndarray,
               svg_code: str, k_count: int) -> str:
        instructions = _prompt("refine_prompt.txt").format(k_count=k_count)
        return self._call(
            VlmSvgRequest("refine", (draft, indexed, preview), instructions, svg_code)
        )


def generate_raster_draft(req: T2iRequest, backend: T2iBackend) -> RasterDraft:
    """Stage-I entry point: produce the draft bitmap through any backend."""
    return backend.generate(req)


def generate_svg_template(indexed: IndexedLayout, k_count: int, backend: VlmBackend) -> str:
    """Stage-IV entry point: raw template text; parsing/validation happen in
    the template engine, not here."""
    if len(indexed.legend) != k_count:
        raise ValueError(f"legend holds {len(indexed.legend)} entries, expected {k_count}")
    return backend.template(indexed, k_count)


def resolve_t2i(mock: bool, transport=None) -> T2iBackend:
    if mock:
        return MockT2i()
    url = os.environ.get(ENV_T2I_URL)
    if not url:
        raise BackendError("protocol", f"{ENV_T2I_URL} is not set and mock mode is off")
    return RemoteT2i(BackendDescriptor("t2i", url), transport)


def resolve_vlm(mock: bool, seg: SegmentationResult | None = None, transport=None) -> VlmBackend:
    if mock:
        return MockVlm(seg)
    url = os.environ.get(ENV_VLM_URL)
    if not url:
        raise BackendError("protocol", f"{ENV_VLM_URL} is not set and mock mode is off")
    return RemoteVlm(BackendDescriptor("vlm", url), transport)
