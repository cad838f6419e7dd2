"""Automatic pre-annotation: detect, verify, cluster, resolve.

The pipeline runs low-threshold detection to over-collect proposals, checks
every crop against the class vocabulary in embedding space, groups
near-duplicate boxes through an overlap graph, and keeps one annotation per
group. Consistent groups keep their most confident member; conflicting
groups are settled by re-verifying the union of the group's boxes.
"""

from __future__ import annotations

import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InputError, LabelKitError
from .geometry import BBox, iou, union_box
from .providers.base import (
    Detection,
    Embedding,
    ImageRef,
    InferenceProvider,
    normalize_label,
)
from .records import Annotation, LabelClass

ACCEPTANCE_MODES = ("live_filter", "blind_trust")

# Crops below this area cannot be embedded meaningfully; they skip
# verification and keep the detector's own label and score.
MIN_CROP_AREA = 1.0


@dataclass(frozen=True)
class PipelineSettings:
    detection_threshold: float = 0.2
    cluster_iou_threshold: float = 0.9
    temperature: float = 1.0
    acceptance_mode: str = "live_filter"
    min_confidence_filter: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.detection_threshold <= 1.0):
            raise InputError("detection_threshold must be in [0, 1]")
        if not (0.0 < self.cluster_iou_threshold <= 1.0):
            raise InputError("cluster_iou_threshold must be in (0, 1]")
        if not (self.temperature > 0.0 and math.isfinite(self.temperature)):
            raise InputError("temperature must be a positive finite number")
        if self.acceptance_mode not in ACCEPTANCE_MODES:
            raise InputError(f"unknown acceptance mode {self.acceptance_mode!r}")
        if not (0.0 <= self.min_confidence_filter <= 1.0):
            raise InputError("min_confidence_filter must be in [0, 1]")


@dataclass(frozen=True)
class VerifiedDetection:
    """A detection plus its per-class verification outcome.

    verified is False for crops too small to embed; those carry a one-hot
    probability row for the detector's own label and the detector score
    stands in for the verification probability.
    """

    detection: Detection
    assigned_label: int
    label_probs: Tuple[float, ...]
    verified_score: float
    verified: bool = True

    def __post_init__(self) -> None:
        if not self.label_probs:
            raise InputError("label_probs is empty")
        if not (0 <= self.assigned_label < len(self.label_probs)):
            raise InputError("assigned_label outside label_probs")
        total = sum(self.label_probs)
        if abs(total - 1.0) > 1e-9:
            raise InputError(f"label probabilities sum to {total}, not 1")
        peak = max(self.label_probs)
        if self.label_probs[self.assigned_label] != peak:
            raise InputError("assigned_label is not an argmax of label_probs")
        if self.verified and self.verified_score != peak:
            raise InputError("verified_score must equal the top probability")


@dataclass(frozen=True)
class ClusterGraph:
    nodes: Tuple[int, ...]
    edges: FrozenSet[Tuple[int, int]]
    components: Tuple[Tuple[int, ...], ...]

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges


def verify_label(
    crop_embedding: Embedding,
    label_embeddings: Sequence[Embedding],
    temperature: float = 1.0,
) -> Tuple[List[float], int]:
    """Softmax over cosine similarities; ties go to the lowest index."""
    if not label_embeddings:
        raise InputError("need at least one label embedding")
    if not (temperature > 0.0 and math.isfinite(temperature)):
        raise InputError("temperature must be a positive finite number")
    similarities = np.array([crop_embedding.dot(e) for e in label_embeddings])
    scaled = similarities / temperature
    scaled -= scaled.max()  # stabilize; softmax is shift-invariant
    weights = np.exp(scaled)
    probs = weights / weights.sum()
    best = int(np.argmax(probs))
    return [float(p) for p in probs], best


def build_cluster_graph(
    dets: Sequence[VerifiedDetection], iou_threshold: float
) -> ClusterGraph:
    """Connect detections whose boxes overlap strictly above the threshold."""
    if not (0.0 < iou_threshold <= 1.0):
        raise InputError("iou_threshold must be in (0, 1]")
    n = len(dets)
    if n == 0:
        return ClusterGraph(nodes=(), edges=frozenset(), components=())

    coords = np.array(
        [[d.detection.box.x1, d.detection.box.y1, d.detection.box.x2, d.detection.box.y2] for d in dets]
    )
    x1 = np.maximum(coords[:, None, 0], coords[None, :, 0])
    y1 = np.maximum(coords[:, None, 1], coords[None, :, 1])
    x2 = np.minimum(coords[:, None, 2], coords[None, :, 2])
    y2 = np.minimum(coords[:, None, 3], coords[None, :, 3])
    inter = np.clip(x2 - x1, 0, None) * np.clip(y2 - y1, 0, None)
    areas = (coords[:, 2] - coords[:, 0]) * (coords[:, 3] - coords[:, 1])
    union = areas[:, None] + areas[None, :] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        matrix = np.where(union > 0, inter / union, 0.0)

    edges = set()
    adjacency: Dict[int, List[int]] = {i: [] for i in range(n)}
    ii, jj = np.nonzero(matrix > iou_threshold)
    for i, j in zip(ii.tolist(), jj.tolist()):
        if i < j:
            edges.add((i, j))
            adjacency[i].append(j)
            adjacency[j].append(i)

    seen = [False] * n
    components = []
    for start in range(n):
        if seen[start]:
            continue
        queue = [start]
        seen[start] = True
        members = []
        while queue:
            node = queue.pop()
            members.append(node)
            for neighbor in adjacency[node]:
                if not seen[neighbor]:
                    seen[neighbor] = True
                    queue.append(neighbor)
        components.append(tuple(sorted(members)))

    return ClusterGraph(
        nodes=tuple(range(n)),
        edges=frozenset(edges),
        components=tuple(components),
    )


def _best_member(members: Sequence[VerifiedDetection]) -> VerifiedDetection:
    # highest verification probability; ties: larger box, then earlier index
    def rank(pair):
        position, member = pair
        return (-member.verified_score, -member.detection.box.area, position)

    return min(enumerate(members), key=rank)[1]


def _member_annotation(member: VerifiedDetection, vocabulary: Sequence[LabelClass]) -> Annotation:
    return Annotation(
        class_id=vocabulary[member.assigned_label].id,
        geometry=member.detection.box,
        detector_score=member.detection.score,
        verified_score=member.verified_score if member.verified else None,
        source="auto_verified" if member.verified else "auto",
        state="pending",
    )


def resolve_cluster(
    component: Sequence[VerifiedDetection],
    image: ImageRef,
    vocabulary: Sequence[LabelClass],
    providers: InferenceProvider,
    temperature: float = 1.0,
    label_embeddings: Optional[Sequence[Embedding]] = None,
) -> Annotation:
    """One annotation per duplicate group.

    Consistent labels: keep the most confident member. Conflicting labels:
    verify the union of the group's boxes and keep the best member carrying
    the winning label, or the union box itself when no member matches.
    """
    if not component:
        raise InputError("cannot resolve an empty component")
    labels = {m.assigned_label for m in component}
    if len(labels) == 1:
        return _member_annotation(_best_member(component), vocabulary)

    union = union_box([m.detection.box for m in component])
    if label_embeddings is None:
        label_embeddings = providers.embed_texts([c.name for c in vocabulary])
    union_probs, winner = verify_label(
        providers.embed_image_crop(image, union), label_embeddings, temperature
    )
    matching = [m for m in component if m.assigned_label == winner]
    if matching:
        return _member_annotation(_best_member(matching), vocabulary)
    return Annotation(
        class_id=vocabulary[winner].id,
        geometry=union,
        detector_score=None,
        verified_score=union_probs[winner],
        source="auto_verified",
        state="pending",
    )


def _verify_detections(
    providers: InferenceProvider,
    image: ImageRef,
    detections: Sequence[Detection],
    vocabulary: Sequence[LabelClass],
    label_embeddings: Sequence[Embedding],
    temperature: float,
) -> List[VerifiedDetection]:
    width, height = image.size()
    frame = BBox(0, 0, width, height)
    name_to_index = {c.name: i for i, c in enumerate(vocabulary)}
    verified: List[VerifiedDetection] = []
    for det in detections:
        crop = det.box.intersect(frame)
        if crop is None or crop.area < MIN_CROP_AREA:
            index = name_to_index.get(normalize_label(det.label_text))
            if index is None:
                continue  # unverifiable and unmappable: nothing to assign
            probs = tuple(1.0 if i == index else 0.0 for i in range(len(vocabulary)))
            verified.append(
                VerifiedDetection(
                    detection=det,
                    assigned_label=index,
                    label_probs=probs,
                    verified_score=det.score,
                    verified=False,
                )
            )
            continue
        probs, best = verify_label(
            providers.embed_image_crop(image, crop), label_embeddings, temperature
        )
        verified.append(
            VerifiedDetection(
                detection=det,
                assigned_label=best,
                label_probs=tuple(probs),
                verified_score=probs[best],
            )
        )
    return verified


def _suppress_overlaps(
    annotations: Sequence[Annotation], iou_threshold: float
) -> List[Annotation]:
    # post-condition of deduplication: equal-label outputs never overlap
    # above the cluster threshold; only union-box fallbacks can get here
    ranked = sorted(
        enumerate(annotations),
        key=lambda pair: (-(pair[1].confidence or 0.0), pair[0]),
    )
    kept_indices: List[int] = []
    for index, candidate in ranked:
        collides = any(
            annotations[k].class_id == candidate.class_id
            and iou(annotations[k].geometry, candidate.geometry) > iou_threshold
            for k in kept_indices
        )
        if not collides:
            kept_indices.append(index)
    return [annotations[i] for i in sorted(kept_indices)]


def preannotate_image(
    image: ImageRef,
    settings: PipelineSettings,
    vocabulary: Sequence[LabelClass],
    providers: InferenceProvider,
) -> List[Annotation]:
    """Run the full pipeline on one image and return draft annotations.

    In blind_trust mode the drafts come back accepted; in live_filter mode
    they are pending and anything scoring below min_confidence_filter is
    dropped before storage.
    """
    if not vocabulary:
        raise InputError("vocabulary is empty")
    detections = providers.detect(
        image, [c.name for c in vocabulary], settings.detection_threshold
    )
    if not detections:
        return []
    label_embeddings = providers.embed_texts([c.name for c in vocabulary])
    verified = _verify_detections(
        providers, image, detections, vocabulary, label_embeddings, settings.temperature
    )
    graph = build_cluster_graph(verified, settings.cluster_iou_threshold)
    annotations = [
        resolve_cluster(
            [verified[i] for i in component],
            image,
            vocabulary,
            providers,
            settings.temperature,
            label_embeddings=label_embeddings,
        )
        for component in graph.components
    ]
    annotations = _suppress_overlaps(annotations, settings.cluster_iou_threshold)
    if settings.acceptance_mode == "blind_trust":
        annotations = [replace(a, state="accepted") for a in annotations]
    elif settings.min_confidence_filter > 0.0:
        annotations = [
            a
            for a in annotations
            if a.confidence is None or a.confidence >= settings.min_confidence_filter
        ]
    return annotations


@dataclass
class ImageResult:
    image_id: int
    name: str
    status: str
    annotations: int = 0
    error: Optional[str] = None


@dataclass
class BatchReport:
    total: int = 0
    processed: int = 0
    failures: int = 0
    annotations: int = 0
    duration_seconds: float = 0.0
    results: List[ImageResult] = field(default_factory=list)


ProgressCallback = Callable[[ImageResult, int, int], None]


def preannotate_batch(
    store,
    providers: InferenceProvider,
    settings: Optional[PipelineSettings] = None,
    *,
    workers: int = 1,
    on_progress: Optional[ProgressCallback] = None,
) -> BatchReport:
    """Pre-annotate every image in a project store.

    Auto-sourced annotations are replaced wholesale, so re-running a batch
    never duplicates. One image failing (unreadable file, provider outage)
    is recorded and the rest continue.
    """
    if workers < 1:
        raise InputError("workers must be at least 1")
    project = store.get_project()
    resolved = settings if settings is not None else project.settings
    vocabulary = store.list_classes()
    if not vocabulary:
        raise InputError("project has no classes")
    images = store.list_images()

    report = BatchReport(total=len(images))
    started = time.monotonic()
    lock = threading.Lock()

    def process(record) -> ImageResult:
        try:
            annotations = preannotate_image(
                ImageRef(path=record.path), resolved, vocabulary, providers
            )
            drafts = [replace(a, image_id=record.id) for a in annotations]
            store.upsert_annotations(
                record.id, drafts, replace_sources={"auto", "auto_verified"}
            )
            status = store.get_image(record.id).status
            return ImageResult(
                image_id=record.id,
                name=record.name,
                status=status,
                annotations=len(drafts),
            )
        except LabelKitError as exc:
            store.set_image_status(record.id, "failed")
            return ImageResult(
                image_id=record.id, name=record.name, status="failed", error=str(exc)
            )

    def record_result(result: ImageResult) -> None:
        with lock:
            report.results.append(result)
            report.processed += 1 if result.error is None else 0
            report.failures += 1 if result.error is not None else 0
            report.annotations += result.annotations
            done = len(report.results)
        if on_progress is not None:
            on_progress(result, done, report.total)

    if workers == 1:
        for record in images:
            record_result(process(record))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(process, images):
                record_result(result)

    report.results.sort(key=lambda r: r.image_id)
    report.duration_seconds = time.monotonic() - started
    return report
