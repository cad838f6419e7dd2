"""HTTP API over the store, pipeline, formats, and providers.

Every /api route except login and health requires a bearer token from
POST /api/login. Long work (pre-annotation, import, export) runs as
background jobs polled via GET /api/jobs/{id}; everything else answers
inline. List endpoints paginate with limit/offset (default 50, cap 500).
"""

from __future__ import annotations

import base64
import binascii
import io
import zipfile
from pathlib import Path
from typing import Dict, List, Optional

from fastapi import Depends, FastAPI, Header, Query, Request, Response
from fastapi import HTTPException
from starlette.datastructures import UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..errors import (
    ConflictError,
    InputError,
    LabelKitError,
    NotFoundError,
    ParseError,
    TransportError,
)
from ..formats import export_project, import_annotations, validate_bundle
from ..geometry import geometry_coords, geometry_from_coords
from ..postprocess import close_mask, mask_to_polygons
from ..preannotator import (
    ACCEPTANCE_MODES,
    PipelineSettings,
    preannotate_batch,
)
from ..providers import (
    ImageRef,
    MockProvider,
    ProviderConfig,
    SidecarProvider,
)
from ..records import ANNOTATION_SOURCES, Annotation, allowed_geometry_kinds, geometry_within
from ..store import Store
from ..synth import load_truth
from .auth import SessionManager
from .config import ServiceConfig
from .jobs import JobManager

MAX_PAGE = 500
DEFAULT_PAGE = 50


# -- request bodies ----------------------------------------------------------

class LoginBody(BaseModel):
    username: str
    password: str


class SettingsBody(BaseModel):
    detection_threshold: float = 0.2
    cluster_iou_threshold: float = 0.9
    temperature: float = 1.0
    acceptance_mode: str = "live_filter"
    min_confidence_filter: float = 0.0

    def to_settings(self) -> PipelineSettings:
        return PipelineSettings(**self.model_dump())


class ProjectBody(BaseModel):
    name: str
    mode: str
    classes: List[str]
    settings: Optional[SettingsBody] = None


class FileUpload(BaseModel):
    name: str
    data_base64: str


class IngestBody(BaseModel):
    folder: Optional[str] = None
    files: Optional[List[FileUpload]] = None


class AnnotationBody(BaseModel):
    class_id: int
    kind: str
    coords: List[float]
    detector_score: Optional[float] = None
    verified_score: Optional[float] = None
    source: str = "manual"
    state: str = "accepted"


class PutAnnotationsBody(BaseModel):
    revision: int
    items: List[AnnotationBody]


class MaskBody(BaseModel):
    box: Optional[List[float]] = Field(default=None, min_length=4, max_length=4)
    point: Optional[List[float]] = Field(default=None, min_length=2, max_length=2)
    min_points: int = 3


class PreannotateBody(BaseModel):
    settings: Optional[SettingsBody] = None
    workers: int = 1


class ImportBody(BaseModel):
    format: str
    files: Dict[str, str]


class RegisterBody(BaseModel):
    username: str
    password: str


# -- wire serializers --------------------------------------------------------

def settings_dict(settings: PipelineSettings) -> dict:
    return dict(vars(settings))


def project_dict(handle) -> dict:
    project = handle.get_project()
    return {
        "id": project.id,
        "name": project.name,
        "mode": project.mode,
        "created_at": project.created_at,
        "settings": settings_dict(project.settings),
        "classes": [
            {"id": c.id, "name": c.name, "display_color": c.display_color}
            for c in handle.list_classes()
        ],
        "image_count": handle.count_images(),
    }


def image_dict(handle, record) -> dict:
    return {
        "id": record.id,
        "name": record.name,
        "width": record.width,
        "height": record.height,
        "status": record.status,
        "revision": handle.image_revision(record.id),
    }


def annotation_dict(ann: Annotation) -> dict:
    return {
        "id": ann.id,
        "image_id": ann.image_id,
        "class_id": ann.class_id,
        "kind": ann.kind,
        "coords": geometry_coords(ann.geometry),
        "detector_score": ann.detector_score,
        "verified_score": ann.verified_score,
        "source": ann.source,
        "state": ann.state,
        "confidence": ann.confidence,
    }


def page_params(limit: Optional[int], offset: int) -> tuple:
    resolved = DEFAULT_PAGE if limit is None else limit
    resolved = max(1, min(resolved, MAX_PAGE))
    return resolved, max(0, offset)


def default_provider_factory(config: ServiceConfig):
    """Providers for the pipeline: one shared HTTP client for a sidecar, or
    a planted-truth mock built fresh per project so its label space matches."""
    if config.provider_kind == "sidecar":
        shared = SidecarProvider(
            ProviderConfig(kind="sidecar", endpoint=config.sidecar_endpoint)
        )
        return lambda class_names: shared
    truth = load_truth(config.mock_truth_path) if config.mock_truth_path else {}

    def build(class_names):
        return MockProvider(
            truth, seed=config.mock_seed, known_classes=tuple(class_names)
        )

    return build


def zip_bundle(bundle) -> bytes:
    """Deterministic archive: fixed timestamps, names in sorted order."""
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
        for name in sorted(bundle.files):
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            archive.writestr(info, bundle.files[name])
    return buffer.getvalue()


def create_app(
    config: Optional[ServiceConfig] = None,
    *,
    store: Optional[Store] = None,
    provider_factory=None,
) -> FastAPI:
    config = config or ServiceConfig.from_env()
    store = store or Store(config.data_dir)
    provider_factory = provider_factory or default_provider_factory(config)
    sessions = SessionManager(config.session_ttl_seconds)
    jobs = JobManager()
    store.ensure_user(config.default_username, config.default_password)

    app = FastAPI(title="labelkit", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.sessions = sessions
    app.state.jobs = jobs
    app.state.config = config

    # -- error mapping -------------------------------------------------------

    @app.exception_handler(NotFoundError)
    async def not_found(request, exc):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ConflictError)
    async def conflict(request, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(InputError)
    async def invalid(request, exc):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(TransportError)
    @app.exception_handler(ParseError)
    async def upstream(request, exc):
        return JSONResponse(status_code=502, content={"detail": str(exc)})

    # -- auth ----------------------------------------------------------------

    def require_session(authorization: Optional[str] = Header(default=None)):
        if authorization and authorization.startswith("Bearer "):
            session = sessions.resolve(authorization[len("Bearer "):])
            if session is not None:
                return session
        raise HTTPException(status_code=401, detail="not authenticated")

    authed = Depends(require_session)

    def find_image(image_id: int):
        for project in store.list_projects():
            handle = store.project(project.id)
            try:
                return handle, handle.get_image(image_id)
            except NotFoundError:
                continue
        raise NotFoundError(f"no image with id {image_id}")

    # -- routes --------------------------------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/login")
    def login(body: LoginBody):
        if not store.verify_user(body.username, body.password):
            raise HTTPException(status_code=401, detail="bad credentials")
        session = sessions.create(body.username)
        return {"token": session.token, "username": session.username}

    @app.post("/api/register", status_code=201)
    def register(body: RegisterBody, session=authed):
        if not config.allow_registration:
            raise HTTPException(status_code=403, detail="registration disabled")
        store.ensure_user(body.username, body.password)
        return {"username": body.username}

    @app.get("/api/projects")
    def list_projects(
        session=authed,
        limit: Optional[int] = Query(default=None),
        offset: int = Query(default=0),
    ):
        limit, offset = page_params(limit, offset)
        projects = store.list_projects()
        window = projects[offset : offset + limit]
        return {
            "items": [project_dict(store.project(p.id)) for p in window],
            "total": len(projects),
            "limit": limit,
            "offset": offset,
        }

    @app.post("/api/projects", status_code=201)
    def create_project(body: ProjectBody, session=authed):
        settings = body.settings.to_settings() if body.settings else None
        project = store.create_project(body.name, body.mode, body.classes, settings)
        return project_dict(store.project(project.id))

    @app.get("/api/projects/{project_id}")
    def get_project(project_id: int, session=authed):
        return project_dict(store.project(project_id))

    @app.get("/api/projects/{project_id}/images")
    def list_images(
        project_id: int,
        session=authed,
        status: Optional[str] = Query(default=None),
        limit: Optional[int] = Query(default=None),
        offset: int = Query(default=0),
    ):
        handle = store.project(project_id)
        limit, offset = page_params(limit, offset)
        records = handle.list_images(status=status, limit=limit, offset=offset)
        return {
            "items": [image_dict(handle, r) for r in records],
            "total": handle.count_images(),
            "limit": limit,
            "offset": offset,
        }

    @app.post("/api/projects/{project_id}/images", status_code=201)
    async def ingest_images(project_id: int, request: Request, session=authed):
        """Accepts multipart file uploads, a JSON {"folder": path} for
        server-side ingest, or JSON base64 file payloads."""
        handle = store.project(project_id)
        records, skipped = [], []
        upload_dir = Path(config.data_dir) / "projects" / str(project_id) / "uploads"

        def ingest_bytes(name: str, payload: bytes) -> None:
            upload_dir.mkdir(parents=True, exist_ok=True)
            target = upload_dir / Path(name).name
            target.write_bytes(payload)
            try:
                records.append(handle.ingest_image(target))
            except LabelKitError as exc:
                skipped.append({"name": target.name, "reason": str(exc)})

        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/"):
            form = await request.form()
            uploads = [v for v in form.getlist("files") if isinstance(v, UploadFile)]
            if not uploads:
                raise HTTPException(
                    status_code=422, detail="no files in the multipart form"
                )
            for upload in uploads:
                ingest_bytes(upload.filename or "upload.png", await upload.read())
        else:
            try:
                body = IngestBody.model_validate(await request.json())
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            if body.folder:
                folder_records, folder_skipped = handle.ingest_folder(body.folder)
                records.extend(folder_records)
                skipped.extend(
                    {"name": name, "reason": reason}
                    for name, reason in folder_skipped
                )
            elif body.files:
                for item in body.files:
                    try:
                        payload = base64.b64decode(item.data_base64, validate=True)
                    except (binascii.Error, ValueError):
                        skipped.append(
                            {"name": Path(item.name).name, "reason": "invalid base64"}
                        )
                        continue
                    ingest_bytes(item.name, payload)
            else:
                raise HTTPException(
                    status_code=422,
                    detail="provide multipart files, a folder path, or base64 files",
                )
        return {
            "items": [image_dict(handle, r) for r in records],
            "skipped": skipped,
        }

    @app.get("/api/images/{image_id}/file")
    def image_file(image_id: int, session=authed):
        handle, record = find_image(image_id)
        data = ImageRef(path=record.path).read_bytes()
        suffix = Path(record.name).suffix.lower().lstrip(".") or "png"
        media = {"jpg": "jpeg"}.get(suffix, suffix)
        return Response(content=data, media_type=f"image/{media}")

    @app.get("/api/images/{image_id}/annotations")
    def get_annotations(image_id: int, session=authed):
        handle, record = find_image(image_id)
        return {
            "image": image_dict(handle, record),
            "items": [annotation_dict(a) for a in handle.list_annotations(record.id)],
        }

    @app.put("/api/images/{image_id}/annotations")
    def put_annotations(image_id: int, body: PutAnnotationsBody, session=authed):
        handle, record = find_image(image_id)
        current = handle.image_revision(record.id)
        if body.revision != current:
            raise ConflictError(
                f"revision {body.revision} is stale (current {current})"
            )
        mode = handle.get_project().mode
        allowed = allowed_geometry_kinds(mode)
        class_ids = {c.id for c in handle.list_classes()}
        drafts, problems = [], []
        for position, item in enumerate(body.items):
            where = f"items[{position}]"
            if item.class_id not in class_ids:
                problems.append(f"{where}: unknown class id {item.class_id}")
                continue
            if item.kind not in allowed:
                problems.append(f"{where}: {item.kind} not allowed in {mode} mode")
                continue
            if item.source not in ANNOTATION_SOURCES:
                problems.append(f"{where}: unknown source {item.source!r}")
                continue
            if item.state not in ("pending", "accepted"):
                problems.append(f"{where}: unknown state {item.state!r}")
                continue
            try:
                geometry = geometry_from_coords(item.kind, item.coords)
            except InputError as exc:
                problems.append(f"{where}: {exc}")
                continue
            if not geometry_within(geometry, record.width, record.height):
                problems.append(f"{where}: geometry outside image bounds")
                continue
            drafts.append(
                Annotation(
                    class_id=item.class_id,
                    geometry=geometry,
                    detector_score=item.detector_score,
                    verified_score=item.verified_score,
                    source=item.source,
                    state=item.state,
                )
            )
        if problems:
            raise HTTPException(status_code=422, detail=problems)
        result = handle.upsert_annotations(
            record.id, drafts, replace_sources=set(ANNOTATION_SOURCES)
        )
        assert not result.rejected
        return {
            "image": image_dict(handle, handle.get_image(record.id)),
            "items": [annotation_dict(a) for a in handle.list_annotations(record.id)],
        }

    @app.delete("/api/images/{image_id}/annotations")
    def delete_annotations(image_id: int, session=authed):
        handle, record = find_image(image_id)
        deleted = handle.delete_annotations(record.id)
        return {
            "deleted": deleted,
            "image": image_dict(handle, handle.get_image(record.id)),
        }

    @app.post("/api/images/{image_id}/mask")
    def mask(image_id: int, body: MaskBody, session=authed):
        handle, record = find_image(image_id)
        if (body.box is None) == (body.point is None):
            raise HTTPException(
                status_code=422, detail="provide exactly one of box or point"
            )
        if body.box is not None:
            seed = geometry_from_coords("bbox", body.box)
        else:
            seed = (body.point[0], body.point[1])
        provider = provider_factory([c.name for c in handle.list_classes()])
        raw = provider.generate_mask(ImageRef(path=record.path), seed)
        closed = close_mask(raw)
        polygons = mask_to_polygons(closed, min_points=body.min_points)
        return {
            "polygons": [geometry_coords(p) for p in polygons],
            "pixel_count": closed.count(),
        }

    @app.post("/api/projects/{project_id}/preannotate", status_code=202)
    def preannotate(project_id: int, session=authed, body: Optional[PreannotateBody] = None):
        handle = store.project(project_id)
        settings = None
        workers = 1
        if body is not None:
            workers = body.workers
            if body.settings is not None:
                settings = body.settings.to_settings()
        class_names = [c.name for c in handle.list_classes()]
        provider = provider_factory(class_names)

        def run(job):
            report = preannotate_batch(
                handle,
                provider,
                settings,
                workers=workers,
                on_progress=lambda result, done, total: job.update_progress(
                    done, total
                ),
            )
            return {
                "total": report.total,
                "processed": report.processed,
                "failures": report.failures,
                "annotations": report.annotations,
                "duration_seconds": report.duration_seconds,
                "results": [
                    {
                        "image_id": r.image_id,
                        "name": r.name,
                        "status": r.status,
                        "annotations": r.annotations,
                        "error": r.error,
                    }
                    for r in report.results
                ],
            }

        job = jobs.start("preannotate", project_id, run, exclusive=True)
        return {"job": job.as_dict()}

    @app.post("/api/projects/{project_id}/import", status_code=202)
    def import_files(project_id: int, body: ImportBody, session=authed):
        handle = store.project(project_id)

        def run(job):
            report = import_annotations(handle, body.format, body.files)
            return {
                "matched_images": report.matched_images,
                "created_classes": report.created_classes,
                "imported": report.imported,
                "skipped": list(report.skipped),
                "duplicate_warnings": report.duplicate_warnings,
            }

        job = jobs.start("import", project_id, run)
        return {"job": job.as_dict()}

    @app.post("/api/projects/{project_id}/export", status_code=202)
    def export(
        project_id: int,
        session=authed,
        format: str = Query(default="coco"),
        geometry_policy: str = Query(default="as_stored"),
        include_pending: bool = Query(default=False),
    ):
        handle = store.project(project_id)
        # surface unsupported pairs on the request, not inside the job
        bundle = export_project(
            handle,
            format,
            geometry_policy=geometry_policy,
            include_pending=include_pending,
        )
        archive = zip_bundle(bundle)

        def run(job):
            return {
                "format": format,
                "files": sorted(bundle.files),
                "diagnostics": validate_bundle(format, bundle.files),
                "download_url": f"/api/jobs/{job.id}/download",
                "size_bytes": len(archive),
            }

        job = jobs.start("export", project_id, run)
        job.archive = archive
        return {"job": job.as_dict()}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str, session=authed):
        return jobs.get(job_id).as_dict()

    @app.get("/api/jobs/{job_id}/download")
    def download(job_id: str, session=authed):
        job = jobs.get(job_id)
        archive = getattr(job, "archive", None)
        if job.state != "done" or archive is None:
            raise NotFoundError("no downloadable bundle for this job")
        return Response(
            content=archive,
            media_type="application/zip",
            headers={
                "Content-Disposition": f'attachment; filename="export-{job_id}.zip"'
            },
        )

    @app.get("/api/projects/{project_id}/stats")
    def stats(project_id: int, session=authed):
        return store.project(project_id).compute_stats()

    if config.static_dir is not None and Path(config.static_dir).is_dir():
        app.mount(
            "/", StaticFiles(directory=str(config.static_dir), html=True), name="ui"
        )

    return app
