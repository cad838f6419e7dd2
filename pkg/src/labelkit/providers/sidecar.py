"""HTTP client for an external inference sidecar, plus a reference server.

The sidecar speaks a four-endpoint JSON protocol: POST /detect, /embed_image,
/embed_text, and /mask. The client keeps the engine model-agnostic: any
process that implements the protocol can serve detections, embeddings, and
masks. make_sidecar_app wraps any in-process provider (usually the mock) in
exactly that protocol, which is also how the client is tested without
sockets.
"""

from __future__ import annotations

import base64
import hashlib
import threading
from typing import List, Optional, Sequence, Union

import httpx
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..errors import InputError, ParseError, TransportError
from ..geometry import BBox
from ..postprocess import BinaryMask
from .base import (
    Detection,
    Embedding,
    ImageRef,
    InferenceProvider,
    MaskSeed,
    ProviderConfig,
)
from .rle import decode_rle, encode_rle


def inline_name(data: bytes) -> str:
    """Stable name for an image that arrived as raw bytes."""
    return "inline-" + hashlib.sha256(data).hexdigest()[:16] + ".png"


class SidecarProvider(InferenceProvider):
    """Speaks the sidecar wire protocol; bounds concurrent in-flight requests."""

    def __init__(
        self,
        config: ProviderConfig,
        *,
        transport: Optional[httpx.BaseTransport] = None,
        max_in_flight: int = 4,
        timeout: float = 30.0,
    ) -> None:
        if config.kind != "sidecar":
            raise InputError("SidecarProvider requires a sidecar config")
        if max_in_flight < 1:
            raise InputError("max_in_flight must be at least 1")
        self._client = httpx.Client(
            base_url=config.endpoint, transport=transport, timeout=timeout
        )
        self._gate = threading.Semaphore(max_in_flight)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "SidecarProvider":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _post(self, path: str, payload: dict) -> dict:
        with self._gate:
            try:
                response = self._client.post(path, json=payload)
            except httpx.HTTPError as exc:
                raise TransportError(f"sidecar request {path} failed: {exc}") from exc
        if response.status_code != 200:
            raise TransportError(
                f"sidecar {path} returned HTTP {response.status_code}"
            )
        try:
            data = response.json()
        except ValueError as exc:
            raise ParseError(f"sidecar {path} returned invalid JSON") from exc
        if not isinstance(data, dict):
            raise ParseError(f"sidecar {path} returned a non-object body")
        return data

    @staticmethod
    def _image_field(image: ImageRef) -> str:
        return base64.b64encode(image.read_bytes()).decode("ascii")

    def detect(
        self, image: ImageRef, class_names: Sequence[str], threshold: float
    ) -> List[Detection]:
        if not (0.0 <= threshold <= 1.0):
            raise InputError("detection threshold must be in [0, 1]")
        width, height = image.size()
        data = self._post(
            "/detect",
            {
                "image": self._image_field(image),
                "classes": list(class_names),
                "threshold": threshold,
            },
        )
        raw = data.get("detections")
        if not isinstance(raw, list):
            raise ParseError("sidecar /detect body lacks a detections list")
        detections = []
        for i, item in enumerate(raw):
            where = f"/detect item {i}"
            try:
                box = BBox(*[float(v) for v in item["box"]])
                label = str(item["label"])
                score = float(item["score"])
            except (KeyError, TypeError, ValueError, InputError) as exc:
                raise ParseError(f"{where}: {exc}") from exc
            clipped = box.clip(width, height)
            if clipped.area <= 0 or score < threshold:
                continue
            try:
                detections.append(Detection(box=clipped, label_text=label, score=score))
            except InputError as exc:
                raise ParseError(f"{where}: {exc}") from exc
        detections.sort(key=lambda d: -d.score)
        return detections

    def embed_image_crop(self, image: ImageRef, box: BBox) -> Embedding:
        width, height = image.size()
        crop = box.intersect(BBox(0, 0, width, height))
        if crop is None or crop.area < 1.0:
            raise InputError("crop does not cover at least one square pixel")
        data = self._post(
            "/embed_image",
            {
                "image": self._image_field(image),
                "box": [box.x1, box.y1, box.x2, box.y2],
            },
        )
        return self._parse_vector(data.get("vector"), "/embed_image")

    def embed_texts(self, labels: Sequence[str]) -> List[Embedding]:
        if not labels:
            raise InputError("need at least one label to embed")
        for label in labels:
            if not str(label).strip():
                raise InputError("cannot embed an empty label")
        data = self._post("/embed_text", {"labels": [str(l) for l in labels]})
        vectors = data.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(labels):
            raise ParseError("sidecar /embed_text must return one vector per label")
        return [self._parse_vector(v, f"/embed_text item {i}") for i, v in enumerate(vectors)]

    @staticmethod
    def _parse_vector(value, where: str) -> Embedding:
        if not isinstance(value, list) or not value:
            raise ParseError(f"sidecar {where}: missing embedding vector")
        try:
            return Embedding(tuple(float(v) for v in value))
        except (TypeError, ValueError, InputError) as exc:
            raise ParseError(f"sidecar {where}: {exc}") from exc

    def generate_mask(self, image: ImageRef, seed: MaskSeed) -> BinaryMask:
        if isinstance(seed, BBox):
            seed_field: dict = {"box": [seed.x1, seed.y1, seed.x2, seed.y2]}
        else:
            seed_field = {"point": [float(seed[0]), float(seed[1])]}
        data = self._post(
            "/mask", {"image": self._image_field(image), "seed": seed_field}
        )
        rle = data.get("mask_rle")
        if not isinstance(rle, dict):
            raise ParseError("sidecar /mask body lacks mask_rle")
        return decode_rle(rle)


# -- reference server --------------------------------------------------------


class _DetectBody(BaseModel):
    image: str
    classes: List[str] = []
    threshold: float = 0.0


class _EmbedImageBody(BaseModel):
    image: str
    box: List[float]


class _EmbedTextBody(BaseModel):
    labels: List[str]


class _SeedBody(BaseModel):
    box: Optional[List[float]] = None
    point: Optional[List[float]] = None


class _MaskBody(BaseModel):
    image: str
    seed: _SeedBody


def _decode_image(field: str) -> ImageRef:
    try:
        data = base64.b64decode(field, validate=True)
    except (ValueError, TypeError) as exc:
        raise InputError(f"image field is not valid base64: {exc}") from exc
    return ImageRef(data=data, name_hint=inline_name(data))


def make_sidecar_app(provider: InferenceProvider) -> FastAPI:
    """Expose any provider over the sidecar wire protocol."""
    app = FastAPI(title="inference sidecar", docs_url=None, redoc_url=None)

    @app.exception_handler(InputError)
    async def _input_error(_request: Request, exc: InputError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post("/detect")
    def detect(body: _DetectBody):
        image = _decode_image(body.image)
        detections = provider.detect(image, body.classes, body.threshold)
        return {
            "detections": [
                {
                    "box": [d.box.x1, d.box.y1, d.box.x2, d.box.y2],
                    "label": d.label_text,
                    "score": d.score,
                }
                for d in detections
            ]
        }

    @app.post("/embed_image")
    def embed_image(body: _EmbedImageBody):
        image = _decode_image(body.image)
        if len(body.box) != 4:
            raise InputError("box must have four numbers")
        embedding = provider.embed_image_crop(image, BBox(*body.box))
        return {"vector": list(embedding.values)}

    @app.post("/embed_text")
    def embed_text(body: _EmbedTextBody):
        embeddings = provider.embed_texts(body.labels)
        return {"vectors": [list(e.values) for e in embeddings]}

    @app.post("/mask")
    def mask(body: _MaskBody):
        image = _decode_image(body.image)
        seed: MaskSeed
        if body.seed.box is not None:
            if len(body.seed.box) != 4:
                raise InputError("seed box must have four numbers")
            seed = BBox(*body.seed.box)
        elif body.seed.point is not None:
            if len(body.seed.point) != 2:
                raise InputError("seed point must have two numbers")
            seed = (body.seed.point[0], body.seed.point[1])
        else:
            raise InputError("seed needs a box or a point")
        return {"mask_rle": encode_rle(provider.generate_mask(image, seed))}

    return app
