"""Command-line interface.

Exit codes: 0 success, 2 validation findings, 3 backend failure, 4 bad
input. Anything else unexpected exits 1.
"""

from __future__ import annotations

import argparse
import binascii
import sys
from pathlib import Path

from figforge import pipeline, pngio
from figforge.errors import (
    BackendError,
    EmptyInput,
    EmptyMask,
    FigforgeError,
    JobLocked,
    ManifestCorrupt,
    MissingArtifact,
    NoComponents,
    PipelineStageError,
)
from figforge.model import DraftProvenance, RasterDraft, SourceText, StyleReference

_BAD_INPUT = (
    EmptyInput,
    EmptyMask,
    NoComponents,
    ManifestCorrupt,
    MissingArtifact,
    FileNotFoundError,
    IsADirectoryError,
    binascii.Error,
    JobLocked,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figforge",
        description="Turn scientific text into an editable component-grouped SVG figure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="full pipeline: text (+style) to final figure")
    gen.add_argument("--text", required=True, type=Path, help="input text file")
    gen.add_argument("--style", type=Path, help="style reference PNG")
    gen.add_argument("--out", required=True, type=Path, help="job output directory")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--mock", action="store_true", help="offline deterministic backends")

    vec = sub.add_parser("vectorize", help="convert an existing raster to a figure")
    vec.add_argument("--image", required=True, type=Path, help="input PNG")
    vec.add_argument("--out", required=True, type=Path)
    vec.add_argument("--mock", action="store_true")

    res = sub.add_parser("resume", help="re-run stages whose artifacts are missing")
    res.add_argument("--job", required=True, type=Path)
    res.add_argument("--mock", action="store_true")

    ver = sub.add_parser("verify", help="re-run all validators over a job directory")
    ver.add_argument("--job", required=True, type=Path)

    srv = sub.add_parser("serve", help="run the HTTP job service")
    srv.add_argument("--addr", default="127.0.0.1:8000")
    srv.add_argument("--data", required=True, type=Path)
    srv.add_argument("--gate-download", action="store_true")
    srv.add_argument("--app", type=Path, default=None, help="static editor assets directory")
    srv.add_argument("--remote", action="store_true",
                     help="use remote backends from the environment instead of mocks")

    rep = sub.add_parser("report", help="summarize collected feedback (CSV + figures)")
    rep.add_argument("--data", required=True, type=Path)
    rep.add_argument("--out", required=True, type=Path)

    return parser


def _cfg(out_dir: Path, mock: bool, seed: int | None = None) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig(output_dir=out_dir, mock=mock, seed=seed)


def _cmd_generate(args) -> int:
    text = SourceText(args.text.read_text(encoding="utf-8"))
    style = None
    if args.style is not None:
        style = StyleReference(pngio.load_rgb(args.style))
    manifest = pipeline.run_pipeline(text, style, _cfg(args.out, args.mock, args.seed))
    print(f"job {manifest.job_id}: K={manifest.k_count}, "
          f"refinement_iterations={manifest.refinement_iterations}")
    print(f"final figure: {args.out / 'final.svg'}")
    return 0


def _cmd_vectorize(args) -> int:
    pixels = pngio.load_rgb(args.image)
    draft = RasterDraft(pixels, DraftProvenance("file", None))
    manifest = pipeline.vectorize_existing(draft, _cfg(args.out, args.mock))
    print(f"job {manifest.job_id}: K={manifest.k_count}")
    print(f"final figure: {args.out / 'final.svg'}")
    return 0


def _cmd_resume(args) -> int:
    ran: list[str] = []
    manifest = pipeline.resume_job(args.job, _cfg(args.job, args.mock), stage_log=ran)
    if ran:
        print(f"re-ran stages: {', '.join(ran)}")
    else:
        print("nothing to do; all artifacts present")
    print(f"job {manifest.job_id}: K={manifest.k_count}")
    return 0


def _cmd_verify(args) -> int:
    report = pipeline.verify_job(args.job)
    if report.ok:
        print("ok: all validators passed")
        return 0
    for finding in report.findings:
        where = f" AF-{finding.af_id}" if finding.af_id is not None else ""
        print(f"{finding.kind}{where}: {finding.message}")
    return 2


def _cmd_serve(args) -> int:
    import uvicorn

    from figforge.service import create_app

    host, _, port = args.addr.rpartition(":")
    app = create_app(
        args.data,
        gate_download=args.gate_download,
        mock=not args.remote,
        app_dir=args.app,
    )
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def _cmd_report(args) -> int:
    from figforge.report import write_report

    written = write_report(args.data, args.out)
    for path in written:
        print(path)
    return 0


_HANDLERS = {
    "generate": _cmd_generate,
    "vectorize": _cmd_vectorize,
    "resume": _cmd_resume,
    "verify": _cmd_verify,
    "serve": _cmd_serve,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except PipelineStageError as exc:
        print(f"error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        if isinstance(exc.cause, BackendError):
            return 3
        if isinstance(exc.cause, _BAD_INPUT):
            return 4
        return 1
    except BackendError as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return 3
    except _BAD_INPUT as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return 4
    except FigforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
