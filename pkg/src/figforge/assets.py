"""Stage III: cut per-component transparent RGBA assets out of the draft.

The default matte is the segmentation mask itself — exact and deterministic
for flat-styled drafts. A remote matting backend can supply the alpha for
photographic styles; everything downstream only sees RGBA assets either way.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import json

import numpy as np
from scipy import ndimage

from figforge import pngio
from figforge.errors import BackendError, EmptyMask, FullyTransparent
from figforge.model import BoundingBox, ComponentMask, RasterDraft, RgbaAsset

# A remote matte receives the RGB crop and returns an alpha plane for it.
MatteFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MattingConfig:
    mode: str = "mask-alpha"  # mask-alpha | remote-matting
    feather_radius: int = 0
    trim: bool = True

    def __post_init__(self):
        if self.mode not in ("mask-alpha", "remote-matting"):
            raise ValueError(f"unknown matting mode {self.mode!r}")
        if not (0 <= self.feather_radius <= 8):
            raise ValueError("feather_radius must be in 0..8")


def _feather(alpha: np.ndarray, radius: int) -> np.ndarray:
    """Box-blur the alpha plane; outside the crop counts as transparent."""
    if radius == 0:
        return alpha
    size = 2 * radius + 1
    blurred = ndimage.uniform_filter(
        alpha.astype(np.float64), size=size, mode="constant", cval=0.0
    )
    return np.clip(np.rint(blurred), 0, 255).astype(np.uint8)


def extract_asset(
    draft: RasterDraft,
    mask: ComponentMask,
    box: BoundingBox,
    cfg: MattingConfig,
    matte: MatteFn | None = None,
) -> RgbaAsset:
    """Copy the draft crop under `box` and attach an alpha plane.

    In mask-alpha mode the alpha is exactly the mask (255/0), optionally
    feathered. Only pixels inside `box` are ever read.
    """
    crop = draft.pixels[box.y : box.y + box.h, box.x : box.x + box.w]
    mask_crop = mask.bitmap[box.y : box.y + box.h, box.x : box.x + box.w]
    if not mask_crop.any():
        raise EmptyMask(f"component {mask.id} has no pixels inside its box")

    if cfg.mode == "mask-alpha":
        alpha = np.where(mask_crop, 255, 0).astype(np.uint8)
    else:
        if matte is None:
            raise BackendError("protocol", "remote-matting mode needs a matting backend")
        alpha = np.asarray(matte(crop), dtype=np.uint8)
        if alpha.shape != mask_crop.shape:
            raise BackendError(
                "protocol", f"matte returned {alpha.shape}, expected {mask_crop.shape}"
            )
    alpha = _feather(alpha, cfg.feather_radius)

    rgba = np.dstack([crop, alpha])
    return RgbaAsset(id=mask.id, pixels=rgba, origin_box=box, trimmed=False)


def trim_asset(asset: RgbaAsset) -> RgbaAsset:
    """Crop to the tight box of alpha>0, keeping draft-coordinate placement."""
    alpha = asset.pixels[:, :, 3]
    ys, xs = np.nonzero(alpha)
    if ys.size == 0:
        raise FullyTransparent(f"asset {asset.id} has no opaque pixels")
    y0, y1 = int(ys.min()), int(ys.max()) + 1
    x0, x1 = int(xs.min()), int(xs.max()) + 1
    h, w = alpha.shape
    if (x0, y0, x1, y1) == (0, 0, w, h):
        return asset
    box = asset.origin_box
    new_box = BoundingBox(box.x + x0, box.y + y0, x1 - x0, y1 - y0)
    return RgbaAsset(
        id=asset.id,
        pixels=asset.pixels[y0:y1, x0:x1],
        origin_box=new_box,
        trimmed=True,
    )


def composite_over(background: np.ndarray, asset: RgbaAsset) -> np.ndarray:
    """Alpha-blend the asset onto an RGB raster at its origin box (in place)."""
    box = asset.origin_box
    region = background[box.y : box.y + box.h, box.x : box.x + box.w].astype(np.float64)
    alpha = asset.pixels[:, :, 3:4].astype(np.float64) / 255.0
    fg = asset.pixels[:, :, :3].astype(np.float64)
    blended = fg * alpha + region * (1.0 - alpha)
    background[box.y : box.y + box.h, box.x : box.x + box.w] = np.rint(blended).astype(
        np.uint8
    )
    return background


def extract_all(
    draft: RasterDraft,
    seg,
    cfg: MattingConfig,
    matte: MatteFn | None = None,
) -> list[RgbaAsset]:
    out = []
    for mask, box in seg.components:
        asset = extract_asset(draft, mask, box, cfg, matte)
        if cfg.trim:
            asset = trim_asset(asset)
        out.append(asset)
    return out


def save_assets(assets: list[RgbaAsset], assets_dir: str | Path) -> None:
    """Persist RGBA PNGs plus an index of placement and trim state."""
    assets_dir = Path(assets_dir)
    assets_dir.mkdir(parents=True, exist_ok=True)
    index = {}
    for asset in assets:
        pngio.save_rgba(asset.pixels, assets_dir / f"AF-{asset.id}.png")
        box = asset.origin_box
        index[str(asset.id)] = {
            "origin": [box.x, box.y],
            "size": [box.w, box.h],
            "trimmed": asset.trimmed,
        }
    (assets_dir / "index.json").write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")


def load_assets(assets_dir: str | Path) -> list[RgbaAsset]:
    assets_dir = Path(assets_dir)
    index = json.loads((assets_dir / "index.json").read_text(encoding="utf-8"))
    out = []
    for k in sorted(index, key=int):
        pixels = pngio.load_rgba(assets_dir / f"AF-{k}.png")
        entry = index[k]
        box = BoundingBox(entry["origin"][0], entry["origin"][1], entry["size"][0], entry["size"][1])
        out.append(RgbaAsset(id=int(k), pixels=pixels, origin_box=box, trimmed=entry["trimmed"]))
    return out
