"""Tests for backend clients: retry/backoff protocol, mock purity and
determinism, palette extraction, and the remote wire format."""

from __future__ import annotations

import json
import random

import numpy as np
import pytest

from figforge.backends import (
    ENV_API_TOKEN,
    ENV_T2I_URL,
    ENV_VLM_URL,
    BackendDescriptor,
    MockT2i,
    MockVlm,
    RemoteT2i,
    RemoteVlm,
    T2iRequest,
    VlmSvgRequest,
    dominant_palette,
    generate_raster_draft,
    generate_svg_template,
    invoke_backend,
    resolve_t2i,
    resolve_vlm,
    sentinel_transport,
    split_blocks,
)
from figforge.errors import BackendError, EmptyInput
from figforge.indexer import build_indexed_layout
from figforge.model import SourceText, StyleReference
from figforge.refiner import positional_discrepancies
from figforge.segmenter import SegmenterConfig, segment
from figforge.svgkit import parse_svg, validate_template
from helpers import planted_segmentation

THREE_BLOCKS = "alpha block\n\nbeta block\n\ngamma block"


class ScriptedTransport:
    """Transport stub driven by a list of (status, body) or exception."""

    def __init__(self, script):
        self.script = list(script)
        self.calls = []

    def __call__(self, url, body, headers, timeout_s):
        self.calls.append({"url": url, "body": body, "headers": dict(headers)})
        action = self.script.pop(0)
        if isinstance(action, Exception):
            raise action
        status, payload = action
        return status, json.dumps(payload).encode()


def _descriptor(retries=2):
    return BackendDescriptor("t2i", "http://unit.test/api", retries=retries, backoff_ms=1)


def test_success_first_try_single_attempt():
    transport = ScriptedTransport([(200, {"ok": True})])
    data, attempts = invoke_backend(_descriptor(), {"task": "x"}, transport)
    assert data == {"ok": True}
    assert len(attempts) == 1
    assert attempts[0]["status"] == 200 and attempts[0]["error"] is None


def test_two_failures_then_success_uses_three_attempts():
    transport = ScriptedTransport([TimeoutError("t"), (503, {}), (200, {"ok": 1})])
    data, attempts = invoke_backend(_descriptor(retries=3), {}, transport)
    assert data == {"ok": 1}
    assert len(attempts) == 3
    assert attempts[0]["error"].startswith("timeout")
    assert attempts[1]["status"] == 503


def test_exhaustion_logs_every_attempt():
    transport = ScriptedTransport([ConnectionError("down")] * 3)
    with pytest.raises(BackendError) as exc_info:
        invoke_backend(_descriptor(retries=2), {}, transport)
    err = exc_info.value
    assert err.kind == "exhausted"
    assert len(err.attempts) == 3
    assert len(transport.calls) == 3  # never exceeds the budget


def test_client_error_fails_immediately():
    transport = ScriptedTransport([(404, {"error": "nope"})])
    with pytest.raises(BackendError) as exc_info:
        invoke_backend(_descriptor(retries=5), {}, transport)
    assert exc_info.value.kind == "http"
    assert len(transport.calls) == 1


def test_non_json_success_is_protocol_error():
    class RawTransport:
        def __call__(self, url, body, headers, timeout_s):
            return 200, b"<html>oops</html>"

    with pytest.raises(BackendError) as exc_info:
        invoke_backend(_descriptor(), {}, RawTransport())
    assert exc_info.value.kind == "protocol"


def test_backoff_doubles_between_retries(monkeypatch):
    sleeps: list[float] = []
    monkeypatch.setattr("figforge.backends.time.sleep", lambda s: sleeps.append(s))
    transport = ScriptedTransport([(500, {})] * 4)
    descriptor = BackendDescriptor("t2i", "http://unit.test", retries=3, backoff_ms=100)
    with pytest.raises(BackendError):
        invoke_backend(descriptor, {}, transport)
    assert sleeps == [0.1, 0.2, 0.4]


def test_bearer_token_from_env(monkeypatch):
    monkeypatch.setenv(ENV_API_TOKEN, "sekrit")
    transport = ScriptedTransport([(200, {})])
    invoke_backend(_descriptor(), {}, transport)
    assert transport.calls[0]["headers"]["Authorization"] == "Bearer sekrit"
    monkeypatch.delenv(ENV_API_TOKEN)
    transport = ScriptedTransport([(200, {})])
    invoke_backend(_descriptor(), {}, transport)
    assert "Authorization" not in transport.calls[0]["headers"]


# ---------------------------------------------------------------------------
# text blocks and palettes


def test_split_blocks_blank_line_rule_and_cap():
    assert split_blocks(THREE_BLOCKS) == ["alpha block", "beta block", "gamma block"]
    assert split_blocks("one\nstill one") == ["one\nstill one"]
    many = "\n\n".join(f"block {i}" for i in range(20))
    assert len(split_blocks(many)) == 12


def test_dominant_palette_frequency_order():
    pixels = np.full((10, 10, 3), 255, dtype=np.uint8)
    pixels[:6, :] = (31, 119, 180)  # 60 px
    pixels[6:9, :] = (214, 39, 40)  # 30 px
    palette = dominant_palette(pixels, n=4)
    assert palette[0] == (31, 119, 180)
    assert palette[1] == (214, 39, 40)
    assert (255, 255, 255) not in palette  # near-white excluded


# ---------------------------------------------------------------------------
# mock T2I


def test_mock_t2i_deterministic():
    req = T2iRequest(SourceText(THREE_BLOCKS), None, (384, 384), 42)
    a = MockT2i().generate(req)
    b = MockT2i().generate(req)
    assert np.array_equal(a.pixels, b.pixels)
    other = MockT2i().generate(T2iRequest(SourceText(THREE_BLOCKS), None, (384, 384), 43))
    assert not np.array_equal(a.pixels, other.pixels)


def test_mock_t2i_three_blocks_segment_to_k3():
    req = T2iRequest(SourceText(THREE_BLOCKS), None, (384, 384), 7)
    draft = generate_raster_draft(req, MockT2i())
    seg = segment(draft, SegmenterConfig())
    assert seg.k_count == 3


def test_mock_t2i_uses_style_palette():
    style_pixels = np.full((32, 32, 3), 255, dtype=np.uint8)
    style_pixels[:16, :] = (31, 119, 180)
    style = StyleReference(style_pixels)
    req = T2iRequest(SourceText("one block"), style, (384, 384), 3)
    draft = MockT2i().generate(req)
    colors = {tuple(c) for c in draft.pixels.reshape(-1, 3)}
    assert (31, 119, 180) in colors
    # and the style changes the output vs no style
    plain = MockT2i().generate(T2iRequest(SourceText("one block"), None, (384, 384), 3))
    assert not np.array_equal(draft.pixels, plain.pixels)


def test_mock_t2i_empty_text_rejected():
    with pytest.raises(EmptyInput):
        T2iRequest(SourceText("   \n"), None, (384, 384), 1)


def test_mock_t2i_negative_seed_renders_blank():
    req = T2iRequest(SourceText("x"), None, (96, 96), -1)
    draft = MockT2i().generate(req)
    assert (draft.pixels == 255).all()


def test_mock_t2i_rejects_tiny_canvas():
    with pytest.raises(ValueError):
        MockT2i().generate(T2iRequest(SourceText("x"), None, (32, 32), 1))


# ---------------------------------------------------------------------------
# mock VLM


def test_mock_vlm_template_matches_boxes_exactly():
    rng = random.Random(61)
    draft, seg = planted_segmentation(rng, k=3)
    indexed = build_indexed_layout((draft.width, draft.height), seg)
    text = generate_svg_template(indexed, 3, MockVlm(seg))
    doc = parse_svg(text)
    assert validate_template(doc, 3).ok
    assert positional_discrepancies(doc, seg, (draft.width, draft.height), 0.05) == []


def test_mock_vlm_recovers_boxes_from_layout_tones():
    """Without a bound segmentation the mock reads slot geometry off the
    indexed layout itself."""
    rng = random.Random(62)
    draft, seg = planted_segmentation(rng, k=2)
    indexed = build_indexed_layout((draft.width, draft.height), seg, draw_labels=False)
    text = generate_svg_template(indexed, 2, MockVlm())
    doc = parse_svg(text)
    assert validate_template(doc, 2).ok
    assert positional_discrepancies(doc, seg, (draft.width, draft.height), 0.05) == []


def test_mock_vlm_k_zero_emits_bare_canvas():
    layout_pixels = np.full((48, 48, 3), 200, dtype=np.uint8)
    from figforge.indexer import IndexedLayout

    empty = IndexedLayout(layout_pixels, {}, {})
    text = MockVlm().template(empty, 0)
    doc = parse_svg(text)
    assert doc.children == []
    assert doc.view_box == (0.0, 0.0, 48.0, 48.0)


def test_legend_size_must_match_k():
    rng = random.Random(63)
    draft, seg = planted_segmentation(rng, k=2)
    indexed = build_indexed_layout((draft.width, draft.height), seg)
    with pytest.raises(ValueError):
        generate_svg_template(indexed, 5, MockVlm(seg))


# ---------------------------------------------------------------------------
# remote clients and resolution


def _png_b64(pixels: np.ndarray) -> str:
    import base64

    from figforge import pngio

    return base64.b64encode(pngio.encode_rgb(pixels)).decode()


def test_remote_t2i_wire_format():
    canvas = np.full((20, 20, 3), 128, dtype=np.uint8)
    transport = ScriptedTransport([(200, {"image": _png_b64(canvas)})])
    backend = RemoteT2i(BackendDescriptor("t2i", "http://unit.test/t2i"), transport)
    draft = backend.generate(T2iRequest(SourceText("hello"), None, (20, 20), 5))
    assert np.array_equal(draft.pixels, canvas)
    sent = transport.calls[0]["body"]
    assert sent["task"] == "t2i"
    assert sent["text"] == "hello"
    assert sent["seed"] == 5
    assert sent["images"] == []


def test_remote_t2i_missing_image_is_protocol_error():
    transport = ScriptedTransport([(200, {"svg": "<svg/>"})])
    backend = RemoteT2i(BackendDescriptor("t2i", "http://unit.test/t2i"), transport)
    with pytest.raises(BackendError) as exc_info:
        backend.generate(T2iRequest(SourceText("hello"), None, (20, 20), 5))
    assert exc_info.value.kind == "protocol"


def test_remote_vlm_refine_sends_three_images_and_svg():
    rng = random.Random(64)
    draft, seg = planted_segmentation(rng, k=1)
    indexed = build_indexed_layout((draft.width, draft.height), seg)
    transport = ScriptedTransport([(200, {"svg": "<svg viewBox=\"0 0 1 1\"/>"})])
    backend = RemoteVlm(BackendDescriptor("vlm", "http://unit.test/vlm"), transport)
    preview = np.full((96, 96, 3), 255, dtype=np.uint8)
    out = backend.refine(
        draft=draft.pixels, indexed=indexed.pixels, preview=preview,
        svg_code="<svg/>", k_count=1,
    )
    assert out.startswith("<svg")
    sent = transport.calls[0]["body"]
    assert sent["task"] == "refine"
    assert len(sent["images"]) == 3
    assert sent["svg"] == "<svg/>"


def test_resolution_mock_vs_remote(monkeypatch):
    assert isinstance(resolve_t2i(True), MockT2i)
    assert isinstance(resolve_vlm(True), MockVlm)
    monkeypatch.delenv(ENV_T2I_URL, raising=False)
    monkeypatch.delenv(ENV_VLM_URL, raising=False)
    with pytest.raises(BackendError):
        resolve_t2i(False)
    with pytest.raises(BackendError):
        resolve_vlm(False)
    monkeypatch.setenv(ENV_T2I_URL, "http://unit.test/one")
    monkeypatch.setenv(ENV_VLM_URL, "http://unit.test/two")
    assert isinstance(resolve_t2i(False), RemoteT2i)
    assert isinstance(resolve_vlm(False), RemoteVlm)


def test_mocks_touch_no_network():
    """Mock backends are pure: run them with the sentinel transport armed to
    prove nothing reaches for a socket."""
    req = T2iRequest(SourceText(THREE_BLOCKS), None, (384, 384), 11)
    draft = MockT2i().generate(req)
    seg = segment(draft, SegmenterConfig())
    indexed = build_indexed_layout((draft.width, draft.height), seg)
    MockVlm(seg).template(indexed, seg.k_count)
    with pytest.raises(AssertionError):
        sentinel_transport("http://x", {}, {}, 1)


def test_vlm_request_arity_contract():
    img = np.zeros((8, 8, 3), dtype=np.uint8)
    with pytest.raises(ValueError):
        VlmSvgRequest("template", (img, img), "p")
    with pytest.raises(ValueError):
        VlmSvgRequest("refine", (img,), "p", "<svg/>")
