"""Stage IV refinement loop.

Each round re-prompts the vision backend with the original draft, the
indexed layout, a rendered preview of the current SVG, and the SVG code
itself. A candidate is accepted only if it parses, validates, and keeps the
placeholder id set — so whatever the backend does, identifier mappings and
placeholder group structure survive. Positional discrepancy checks decide
when to stop.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from figforge.indexer import IndexedLayout
from figforge.model import RasterDraft, SegmentationResult, mask_centroid
from figforge.errors import NoSuchPlaceholder
from figforge.svgkit import (
    SvgDocument,
    parse_svg,
    placeholder_geometry,
    placeholder_id_set,
    rasterize_preview,
    serialize_svg,
    validate_template,
)

SIZE_RATIO_BAND = (0.5, 2.0)

OFFSET = "Offset"
MISSING = "Missing"
SIZE_MISMATCH = "SizeMismatch"


@dataclass(frozen=True)
class Discrepancy:
    af_id: int
    kind: str
    vector: tuple[float, float] | None = None  # slot center minus expected, view-box units
    magnitude: float = 0.0

    def as_dict(self) -> dict:
        out = {"af_id": self.af_id, "kind": self.kind, "magnitude": round(self.magnitude, 6)}
        if self.vector is not None:
            out["vector"] = [round(self.vector[0], 3), round(self.vector[1], 3)]
        return out


@dataclass
class RefinementContext:
    draft: RasterDraft
    indexed: IndexedLayout
    seg: SegmentationResult
    current: SvgDocument
    preview: np.ndarray | None = None
    iteration: int = 0
    max_iterations: int = 2
    position_tolerance: float = 0.05

    def __post_init__(self):
        if not (0.0 < self.position_tolerance < 0.5):
            raise ValueError("position_tolerance must be in (0, 0.5)")
        if self.iteration > self.max_iterations:
            raise ValueError("iteration exceeds max_iterations")


@dataclass
class LogEntry:
    iteration: int
    discrepancies: int
    verdict: str  # accepted | rejected
    reason: str | None = None
    latency_ms: float = 0.0


@dataclass
class RefinementLog:
    entries: list[LogEntry] = field(default_factory=list)
    final_discrepancies: int = 0

    @property
    def calls(self) -> int:
        return len(self.entries)

    def as_dict(self) -> dict:
        return {
            "calls": self.calls,
            "final_discrepancies": self.final_discrepancies,
            "entries": [
                {
                    "iteration": e.iteration,
                    "discrepancies": e.discrepancies,
                    "verdict": e.verdict,
                    "reason": e.reason,
                    "latency_ms": round(e.latency_ms, 3),
                }
                for e in self.entries
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2) + "\n", encoding="utf-8")


def positional_discrepancies(
    doc: SvgDocument,
    seg: SegmentationResult,
    draft_dims: tuple[int, int],
    tolerance: float,
) -> list[Discrepancy]:
    """Compare every slot against its component's ground truth.

    Missing: no slot for k. Offset: slot center vs mask centroid beyond
    tolerance (fraction of the view-box diagonal). SizeMismatch: slot area
    vs component box area outside the [0.5, 2.0] ratio band.
    """
    vx, vy, vw, vh = doc.view_box
    draft_w, _ = draft_dims
    scale = draft_w / vw  # draft pixels per view-box unit
    diagonal = math.hypot(vw, vh)
    out: list[Discrepancy] = []
    for mask, box in seg.components:
        k = mask.id
        try:
            slot = placeholder_geometry(doc, k)
        except NoSuchPlaceholder:
            out.append(Discrepancy(k, MISSING, None, 1.0))
            continue
        cx_px, cy_px = mask_centroid(mask)
        expected = (cx_px / scale + vx, cy_px / scale + vy)
        dx = slot.center[0] - expected[0]
        dy = slot.center[1] - expected[1]
        magnitude = math.hypot(dx, dy) / diagonal
        if magnitude > tolerance:
            out.append(Discrepancy(k, OFFSET, (dx, dy), magnitude))
        box_area_vb = box.area / (scale * scale)
        ratio = slot.area / box_area_vb if box_area_vb > 0 else math.inf
        if not (SIZE_RATIO_BAND[0] <= ratio <= SIZE_RATIO_BAND[1]):
            out.append(Discrepancy(k, SIZE_MISMATCH, None, abs(ratio - 1.0)))
    return out


def _acceptable(candidate: SvgDocument, current: SvgDocument, k_count: int) -> str | None:
    """None if the candidate may replace the current document, else the
    rejection reason."""
    if not validate_template(candidate, k_count).ok:
        return "ValidationFailure"
    if placeholder_id_set(candidate) != placeholder_id_set(current):
        return "PreservationViolation"
    return None


def refine_template(ctx: RefinementContext, backend) -> tuple[SvgDocument, RefinementLog]:
    """Iterate backend proposals until discrepancies clear or budget runs out.

    The backend is called at most max_iterations times; a rejected candidate
    leaves the current document untouched but still spends a call.
    """
    current = ctx.current
    k_count = ctx.seg.k_count
    draft_dims = (ctx.draft.width, ctx.draft.height)
    log = RefinementLog()

    while True:
        discrepancies = positional_discrepancies(
            current, ctx.seg, draft_dims, ctx.position_tolerance
        )
        if not discrepancies or log.calls >= ctx.max_iterations:
            break
        preview = rasterize_preview(current, ctx.draft.width)
        started = time.perf_counter()
        candidate_text = backend.refine(
            draft=ctx.draft.pixels,
            indexed=ctx.indexed.pixels,
            preview=preview,
            svg_code=serialize_svg(current),
            k_count=k_count,
        )
        latency_ms = (time.perf_counter() - started) * 1000.0

        verdict, reason = "accepted", None
        try:
            candidate = parse_svg(candidate_text)
        except Exception:
            verdict, reason = "rejected", "ParseFailure"
        else:
            reason = _acceptable(candidate, current, k_count)
            if reason is not None:
                verdict = "rejected"
            else:
                current = candidate
        log.entries.append(
            LogEntry(log.calls + 1, len(discrepancies), verdict, reason, latency_ms)
        )

    log.final_discrepancies = len(
        positional_discrepancies(current, ctx.seg, draft_dims, ctx.position_tolerance)
    )
    return current, log
