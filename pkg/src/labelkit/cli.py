"""Command-line entry point: serve the HTTP app, run headless
pre-annotation, move datasets in and out, and print project stats.

Exit codes: 0 success, 1 user error (bad flags, missing project,
unsupported format pair), 2 internal failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from .errors import LabelKitError, NotFoundError
from .formats import SUPPORTED_FORMATS, export_project, import_annotations
from .preannotator import PipelineSettings, preannotate_batch
from .service import ServiceConfig, create_app, default_provider_factory
from .store import Store

PROG = "labelkit"


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str) -> None:
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the contract here is 1 for
    # user errors, so surface a catchable exception instead
    def error(self, message):
        raise _UsageError(self, message)


def build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description=__doc__)
    parser.add_argument(
        "--data-dir",
        default=None,
        help="storage directory (default: $LABELKIT_DATA_DIR or ./labelkit-data)",
    )
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument(
        "--seed", type=int, default=None, help="fix all mock-provider randomness"
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--static-dir", default=None, help="built web UI to host")

    pre = sub.add_parser("preannotate", help="run the pre-annotation pipeline")
    pre.add_argument("--project", default=None, help="existing project name or id")
    pre.add_argument(
        "--images", default=None, help="image folder; creates a project when new"
    )
    pre.add_argument(
        "--classes", default=None, help="comma-separated class names for a new project"
    )
    pre.add_argument("--name", default=None, help="name for the created project")
    pre.add_argument(
        "--mode",
        default="detection",
        choices=("detection", "obb", "segmentation"),
    )
    pre.add_argument("--threshold", type=float, default=None, help="detection threshold")
    pre.add_argument("--iou-threshold", type=float, default=None)
    pre.add_argument("--temperature", type=float, default=None)
    pre.add_argument(
        "--acceptance-mode", default=None, choices=("live_filter", "blind_trust")
    )
    pre.add_argument("--min-confidence", type=float, default=None)
    pre.add_argument("--workers", type=int, default=1)
    pre.add_argument(
        "--truth",
        default=None,
        help="planted-truth JSON for the mock provider"
        " (default: truth.json next to --images)",
    )

    export = sub.add_parser("export", help="write annotations in a dataset format")
    export.add_argument("--project", required=True)
    export.add_argument("--format", required=True, choices=SUPPORTED_FORMATS)
    export.add_argument("--out", required=True, help="output directory")
    export.add_argument(
        "--boxes-only",
        action="store_true",
        help="convert oriented boxes and polygons to plain boxes",
    )
    export.add_argument("--include-pending", action="store_true")

    imp = sub.add_parser("import", help="merge annotation files into a project")
    imp.add_argument("--project", required=True)
    imp.add_argument("--format", required=True, choices=SUPPORTED_FORMATS)
    imp.add_argument("--files", required=True, nargs="+", help="files or directories")

    stats = sub.add_parser("stats", help="print project statistics")
    stats.add_argument("--project", required=True)

    return parser


def _config(args) -> ServiceConfig:
    config = ServiceConfig.from_env()
    updates = {}
    if args.data_dir is not None:
        updates["data_dir"] = Path(args.data_dir)
    if args.seed is not None:
        updates["mock_seed"] = args.seed
    truth = getattr(args, "truth", None)
    if truth is not None:
        updates["mock_truth_path"] = truth
    if getattr(args, "host", None) is not None:
        updates["host"] = args.host
    if getattr(args, "port", None) is not None:
        updates["port"] = args.port
    if getattr(args, "static_dir", None) is not None:
        updates["static_dir"] = Path(args.static_dir)
    return replace(config, **updates) if updates else config


def _resolve_project(store: Store, token: str):
    project = store.find_project(token)
    if project is None and token.isdigit():
        try:
            return store.project(int(token))
        except LabelKitError:
            pass
    if project is None:
        raise NotFoundError(f"no project named {token!r}")
    return store.project(project.id)


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def run_serve(args) -> int:
    import uvicorn

    config = _config(args)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def _settings_for(args, base: PipelineSettings) -> PipelineSettings:
    updates = {}
    if args.threshold is not None:
        updates["detection_threshold"] = args.threshold
    if args.iou_threshold is not None:
        updates["cluster_iou_threshold"] = args.iou_threshold
    if args.temperature is not None:
        updates["temperature"] = args.temperature
    if args.acceptance_mode is not None:
        updates["acceptance_mode"] = args.acceptance_mode
    if args.min_confidence is not None:
        updates["min_confidence_filter"] = args.min_confidence
    return replace(base, **updates) if updates else base


def run_preannotate(args) -> int:
    if args.project is None and args.images is None:
        raise LabelKitError("provide --project or --images")
    config = _config(args)
    store = Store(config.data_dir)
    try:
        if args.project is not None:
            handle = _resolve_project(store, args.project)
            if args.images:
                handle.ingest_folder(args.images)
        else:
            folder = Path(args.images)
            if not args.classes:
                raise LabelKitError("--images needs --classes for a new project")
            names = [n for n in args.classes.split(",") if n.strip()]
            project = store.create_project(
                args.name or folder.name, args.mode, names
            )
            handle = store.project(project.id)
            handle.ingest_folder(folder)

        if (
            config.provider_kind == "mock"
            and not config.mock_truth_path
            and args.images
        ):
            candidate = Path(args.images) / "truth.json"
            if candidate.is_file():
                config = replace(config, mock_truth_path=str(candidate))

        settings = _settings_for(args, handle.get_project().settings)
        provider = default_provider_factory(config)(
            [c.name for c in handle.list_classes()]
        )
        report = preannotate_batch(
            handle, provider, settings, workers=args.workers
        )
        payload = {
            "total": report.total,
            "processed": report.processed,
            "failures": report.failures,
            "annotations": report.annotations,
            "results": [
                {
                    "image": r.name,
                    "status": r.status,
                    "annotations": r.annotations,
                    "error": r.error,
                }
                for r in report.results
            ],
        }
        _emit(
            args,
            payload,
            f"processed={report.processed} failures={report.failures}",
        )
        return 0
    finally:
        store.close()


def run_export(args) -> int:
    config = _config(args)
    store = Store(config.data_dir)
    try:
        handle = _resolve_project(store, args.project)
        bundle = export_project(
            handle,
            args.format,
            geometry_policy="boxes_only" if args.boxes_only else "as_stored",
            include_pending=args.include_pending,
        )
        out = Path(args.out)
        for name in sorted(bundle.files):
            target = out / name
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(bundle.files[name])
        _emit(
            args,
            {"out": str(out), "files": sorted(bundle.files)},
            "\n".join(f"wrote {out / name}" for name in sorted(bundle.files)),
        )
        return 0
    finally:
        store.close()


def _gather_files(tokens: List[str]) -> dict:
    files = {}
    for token in tokens:
        path = Path(token)
        if path.is_dir():
            for child in sorted(path.rglob("*")):
                if child.is_file():
                    files[str(child.relative_to(path))] = child.read_text()
        elif path.is_file():
            files[path.name] = path.read_text()
        else:
            raise LabelKitError(f"no such file: {path}")
    if not files:
        raise LabelKitError("no files to import")
    return files


def run_import(args) -> int:
    config = _config(args)
    store = Store(config.data_dir)
    try:
        handle = _resolve_project(store, args.project)
        report = import_annotations(handle, args.format, _gather_files(args.files))
        payload = {
            "matched_images": report.matched_images,
            "created_classes": report.created_classes,
            "imported": report.imported,
            "skipped": list(report.skipped),
            "duplicate_warnings": report.duplicate_warnings,
        }
        _emit(
            args,
            payload,
            f"imported={report.imported} skipped={len(report.skipped)}",
        )
        return 0
    finally:
        store.close()


def run_stats(args) -> int:
    config = _config(args)
    store = Store(config.data_dir)
    try:
        handle = _resolve_project(store, args.project)
        stats = handle.compute_stats()
        lines = [f"images: {stats['image_count']}"]
        lines.append(
            "completion: "
            + ", ".join(f"{k}={v:.2f}" for k, v in stats["completion"].items())
        )
        lines.append(
            "classes: "
            + ", ".join(f"{k}={v}" for k, v in stats["class_counts"].items())
        )
        lines.append(
            "per-image: "
            + ", ".join(f"{k}:{v}" for k, v in stats["per_image_histogram"].items())
        )
        _emit(args, stats, "\n".join(lines))
        return 0
    finally:
        store.close()


_COMMANDS = {
    "serve": run_serve,
    "preannotate": run_preannotate,
    "export": run_export,
    "import": run_import,
    "stats": run_stats,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except LabelKitError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        # argparse help/version paths
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - last-resort exit code mapping
        print(f"{PROG}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
