"""PNG encode/decode helpers shared by every stage that touches disk."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image


def save_rgb(pixels: np.ndarray, path: str | Path) -> None:
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), "RGB").save(path, format="PNG")


def save_rgba(pixels: np.ndarray, path: str | Path) -> None:
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), "RGBA").save(path, format="PNG")


def save_mask(bitmap: np.ndarray, path: str | Path) -> None:
    """Persist a boolean mask as a 1-bit PNG."""
    Image.fromarray(np.asarray(bitmap, dtype=bool)).convert("1").save(path, format="PNG")


def load_rgb(path: str | Path) -> np.ndarray:
    return np.array(Image.open(path).convert("RGB"), dtype=np.uint8)


def load_rgba(path: str | Path) -> np.ndarray:
    return np.array(Image.open(path).convert("RGBA"), dtype=np.uint8)


def load_mask(path: str | Path) -> np.ndarray:
    return np.array(Image.open(path).convert("1"), dtype=bool)


def encode_rgba(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), "RGBA").save(buf, format="PNG")
    return buf.getvalue()


def encode_rgb(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), "RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_rgba(data: bytes) -> np.ndarray:
    return np.array(Image.open(io.BytesIO(data)).convert("RGBA"), dtype=np.uint8)


def decode_rgb(data: bytes) -> np.ndarray:
    return np.array(Image.open(io.BytesIO(data)).convert("RGB"), dtype=np.uint8)


def png_size(data: bytes) -> tuple[int, int]:
    """(width, height) of an encoded PNG without decoding pixel data."""
    with Image.open(io.BytesIO(data)) as im:
        return im.size


def resize_rgba_nearest(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    """Nearest-neighbor resize — deterministic, no resampling filter."""
    im = Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), "RGBA")
    return np.array(im.resize((width, height), Image.NEAREST), dtype=np.uint8)
